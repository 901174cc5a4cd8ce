import itertools

import numpy as np
import pytest

from mailsignal.content import CorpusStats
from mailsignal.learn.boost import fit_adaboost
from mailsignal.topics import fit_lda, top_words, topic_features


def planted_corpus(seed, docs_per_group=30, doc_len=10):
    rng = np.random.default_rng(seed)
    pools = [[f"a{i:02d}" for i in range(20)], [f"b{i:02d}" for i in range(20)]]
    docs, groups = [], []
    for g, pool in enumerate(pools):
        for _ in range(docs_per_group):
            docs.append(list(rng.choice(pool, size=doc_len, replace=False)))
            groups.append(g)
    return docs, np.array(groups)


def dominant_share(model, groups):
    """Mean share of each group's aligned topic, best permutation over topics."""
    best = 0.0
    for perm in itertools.permutations(range(model.K), 2):
        share = np.mean([model.theta[groups == g, perm[g]].mean() for g in (0, 1)])
        best = max(best, share)
    return best


def test_top_words_all_and_ties():
    stats = CorpusStats.from_documents([["a", "b", "c", "d", "e"], ["z"]])
    doc = top_words("x", 1, [["e", "d", "c", "b", "a"]], stats, k=10)
    assert doc.terms == ("a", "b", "c", "d", "e")


def test_top_words_planted():
    stats = CorpusStats.from_documents([["rare1", "common"], ["rare2", "common"]] + [["common"]] * 8)
    doc = top_words("x", 1, [["rare1", "rare2", "common", "common"], ["rare1"]], stats, k=2)
    assert doc.terms == ("rare1", "rare2")
    assert top_words("x", 1, [[]], stats) is None


def test_k1_degenerate():
    model = fit_lda([["a", "b"], ["c"]], K=1, iterations=20)
    assert np.allclose(model.theta, 1.0)
    with pytest.raises(ValueError):
        fit_lda([["a"]], K=0)


def test_normalization_and_determinism():
    docs, _ = planted_corpus(0)
    m1 = fit_lda(docs, K=3, iterations=50, seed=7)
    m2 = fit_lda(docs, K=3, iterations=50, seed=7)
    assert np.array_equal(m1.theta, m2.theta) and np.array_equal(m1.phi, m2.phi)
    assert np.allclose(m1.theta.sum(axis=1), 1, atol=1e-9)
    assert np.allclose(m1.phi.sum(axis=1), 1, atol=1e-9)


def test_planted_recovery_single_seed():
    docs, groups = planted_corpus(0)
    model = fit_lda(docs, K=2, alpha=0.1, iterations=300, seed=0)
    assert dominant_share(model, groups) > 0.9


def test_topic_features_missing_and_separation():
    docs, groups = planted_corpus(1)
    keys = [(f"u{i}", 1) for i in range(len(docs))]
    model = fit_lda(docs, K=2, alpha=0.1, iterations=300, seed=1, keys=keys)
    feats = topic_features(model, keys + [("ghost", 1)])
    assert feats[("ghost", 1)] == ([0.5, 0.5], True)
    assert all(abs(sum(v) - 1) < 1e-9 for v, _ in feats.values())
    X = np.array([feats[k][0] for k in keys])
    boost = fit_adaboost(X, groups, rounds=1)
    assert np.mean(boost.predict(X) == groups) > 0.9


def test_dump_roundtrip(tmp_path):
    import json
    model = fit_lda([["a", "b"], ["b", "c"]], K=2, iterations=10, keys=[("x", 1), ("y", 1)])
    p = tmp_path / "m.json"
    model.dump(p)
    body = json.loads(p.read_text())
    assert body["K"] == 2 and body["seed"] == 0 and len(body["theta"]) == 2
