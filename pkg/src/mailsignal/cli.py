"""Command-line pipeline: synth, ingest, indicators, train, evaluate, cluster, report.

Each stage reads the previous stage's artifacts from the output directory and
records the files it wrote in ``<stage>/stage.json``; ``report`` folds those
into ``manifest.json``.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import os
import platform
import sys
from dataclasses import asdict, fields

import numpy as np
import scipy

from . import __version__, cluster, content, indicators, ingest, synth
from .learn import INDICATORS, assemble, evaluate_loocv, likelihood_ratio_period_test
from .learn.design import default_features, read_rows
from .learn.boost import fit_adaboost
from .learn.pls import fit_pls_logit

log = logging.getLogger("mailsignal")

STAGES = ["synth", "ingest", "indicators", "train", "evaluate", "cluster", "report"]
UPSTREAM = {"ingest": None, "indicators": "ingest", "train": "indicators",
            "evaluate": "indicators", "cluster": "indicators", "report": None, "synth": None}
DAY = 86400.0

DEFAULTS = {
    "inputs": {},
    "periods": {"count": 2},
    "windows": {"week_days": 7, "influence_days": 4, "reply_horizon_days": 4},
    "tokenizer": {"stopwords": None},
    "lexicon": None,
    "anonymize": True,
    "salt": ingest.DEFAULT_SALT,
    "model": {"components": 2, "rounds": 50, "weak": "stump", "threshold": 0.5,
              "topics": 6, "top_k": 10, "lda_alpha": None, "lda_beta": 0.01,
              "lda_iterations": 1000, "features": None, "k": None, "k_range": [1, 8],
              "restarts": 10},
    "synth": {},
    "output": "out",
}


class StageError(Exception):
    def __init__(self, message, code=1, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path, overrides: dict) -> dict:
    raw = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        for key, value in list(raw.get("inputs", {}).items()):
            if isinstance(value, str) and not os.path.isabs(value):
                raw["inputs"][key] = os.path.join(base, value)
    cfg = _merge(DEFAULTS, raw)
    cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None and k != "model"})
    cfg["model"].update({k: v for k, v in overrides.get("model", {}).items() if v is not None})
    if cfg.get("seed") is None:
        raise StageError("config must set a seed (or pass --seed)", code=2)
    for key in ("events", "mbox", "attributes"):
        p = cfg["inputs"].get(key)
        if p and not os.path.exists(p):
            raise StageError(f"input file not found: {p}", code=2)
    return cfg


def config_hash(cfg: dict) -> str:
    portable = copy.deepcopy(cfg)
    portable.pop("output", None)
    portable["inputs"] = {k: os.path.basename(v) if isinstance(v, str) else v
                          for k, v in portable.get("inputs", {}).items()}
    return hashlib.sha256(json.dumps(portable, sort_keys=True).encode()).hexdigest()


def _sha(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


class Run:
    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = cfg["output"]

    def path(self, stage, name=None):
        d = os.path.join(self.out, stage)
        return d if name is None else os.path.join(d, name)

    def require(self, stage, needed):
        if not os.path.exists(self.path(needed, "stage.json")):
            raise StageError(f"stage '{stage}' needs '{needed}' output; run '{needed}' first",
                             code=2, stage=stage, requires=needed)

    def begin(self, stage):
        os.makedirs(self.path(stage), exist_ok=True)

    def finish(self, stage, files, metrics=None):
        record = {
            "stage": stage,
            "status": "ok",
            "files": {os.path.relpath(f, self.out): _sha(f) for f in sorted(files)},
            "metrics": metrics or {},
        }
        _dump(record, self.path(stage, "stage.json"))
        return record


# -- stages -----------------------------------------------------------------

def cmd_synth(run: Run) -> dict:
    run.begin("synth")
    params = dict(run.cfg.get("synth", {}))
    params.setdefault("seed", run.cfg["seed"])
    allowed = {f.name for f in fields(synth.SynthSpec)}
    unknown = set(params) - allowed
    if unknown:
        raise StageError(f"unknown synth options {sorted(unknown)}")
    spec = synth.SynthSpec(**params)
    out = synth.generate(spec)
    paths = out.write(run.path("synth"))
    counts = {}
    for t in out.truth:
        counts[t["archetype"]] = counts.get(t["archetype"], 0) + 1
    return run.finish("synth", paths.values(), {"events": len(out.events), "archetypes": counts})


def _periods(cfg, events, synth_spec=None):
    spec = cfg["periods"]
    if isinstance(spec, list):
        out = []
        for start, end in spec:
            out.append(ingest.Period(ingest._parse_time(start), ingest._parse_time(end)))
        return out
    if synth_spec is not None:
        return [ingest.Period(*p) for p in synth_spec.periods]
    return ingest.split_periods(events, int(spec.get("count", 2)))


def cmd_ingest(run: Run) -> dict:
    cfg = run.cfg
    inputs = dict(cfg["inputs"])
    synth_spec = None
    if not inputs.get("events") and not inputs.get("mbox"):
        if not os.path.exists(run.path("synth", "stage.json")):
            raise StageError("no inputs configured and no synth output; run 'synth' first",
                             code=2, stage="ingest", requires="synth")
        inputs["events"] = run.path("synth", "events.jsonl")
        inputs.setdefault("attributes", run.path("synth", "attributes.csv"))
        with open(run.path("synth", "synth_spec.json"), encoding="utf-8") as fh:
            synth_spec = synth.SynthSpec(**json.load(fh))
    run.begin("ingest")
    stop = content.load_stopwords(cfg["tokenizer"]["stopwords"]) if cfg["tokenizer"].get("stopwords") else None
    if inputs.get("mbox"):
        events, rejects = ingest.parse_mbox(inputs["mbox"], cfg["anonymize"], cfg["salt"], stop)
        hashed = cfg["anonymize"]
    else:
        events, rejects = ingest.parse_jsonl(inputs["events"])
        hashed = False
    attrs = ingest.load_attributes(inputs["attributes"]) if inputs.get("attributes") else {}
    if hashed:
        attrs = ingest.anonymize_attributes(attrs, cfg["salt"])
    periods = _periods(cfg, events, synth_spec)
    ingest.Corpus(events, attrs, periods)  # validates periods

    files = [run.path("ingest", n) for n in ("events.jsonl", "rejects.csv", "attributes.csv", "periods.json")]
    ingest.write_jsonl(events, files[0])
    ingest.write_rejects(rejects, files[1])
    n_labels = max((len(a.labels) for a in attrs.values()), default=0)
    indicators.write_csv(
        [{"actor": a.actor, "age": a.age, "band": a.band, "tenure": a.tenure, "tslp": a.tslp,
          **{f"label_p{i + 1}": a.label(i) for i in range(n_labels)}}
         for a in sorted(attrs.values(), key=lambda a: a.actor)],
        files[2], ["actor", "age", "band", "tenure", "tslp", *[f"label_p{i + 1}" for i in range(n_labels)]])
    _dump({"periods": [list(p) for p in periods]}, files[3])
    return run.finish("ingest", files, {"events": len(events), "rejects": len(rejects),
                                            "actors_with_attributes": len(attrs)})


def load_corpus(run: Run) -> ingest.Corpus:
    events, _ = ingest.parse_jsonl(run.path("ingest", "events.jsonl"))
    attrs = ingest.load_attributes(run.path("ingest", "attributes.csv"))
    with open(run.path("ingest", "periods.json"), encoding="utf-8") as fh:
        periods = [ingest.Period(*p) for p in json.load(fh)["periods"]]
    return ingest.Corpus(events, attrs, periods)


def cmd_indicators(run: Run) -> dict:
    run.require("indicators", "ingest")
    run.begin("indicators")
    cfg, m = run.cfg, run.cfg["model"]
    corpus = load_corpus(run)
    lexicon = content.load_lexicon(cfg.get("lexicon"))
    w = cfg["windows"]
    opts = indicators.IndicatorOptions(
        week=w["week_days"] * DAY, influence_window=w["influence_days"] * DAY,
        reply_horizon=w["reply_horizon_days"] * DAY, topics=m["topics"], top_k=m["top_k"],
        lda_alpha=m["lda_alpha"], lda_beta=m["lda_beta"], lda_iterations=m["lda_iterations"],
        seed=cfg["seed"])
    tabs = indicators.compute(corpus, lexicon, opts)
    files = {n: run.path("indicators", n) for n in
             ("network.csv", "dynamics.csv", "content.csv", "indicators.csv")}
    indicators.write_csv(tabs.network, files["network.csv"], indicators.NETWORK_COLUMNS)
    indicators.write_csv(tabs.dynamics, files["dynamics.csv"], indicators.DYNAMICS_COLUMNS)
    indicators.write_csv(tabs.content, files["content.csv"], indicators.CONTENT_COLUMNS)
    indicators.write_csv(tabs.merged, files["indicators.csv"])
    out = list(files.values())
    if tabs.topic_model is not None:
        p = run.path("indicators", "lda_model.json")
        tabs.topic_model.dump(p)
        out.append(p)
    excluded = sorted(corpus.missing_attributes())
    return run.finish("indicators", out, {"rows": len(tabs.merged),
                                          "actors_without_attributes": len(excluded)})


def _features(run: Run, rows) -> list[str]:
    return list(run.cfg["model"].get("features") or default_features(rows))


def load_design(run: Run, stage: str):
    run.require(stage, "indicators")
    rows = indicators.modeling_rows(read_rows(run.path("indicators", "indicators.csv")))
    if not rows:
        raise StageError("no labelled rows with attributes to model")
    return assemble(rows, _features(run, rows)), rows


def _model_spec(m, kind):
    if kind == "adaboost":
        return {"model": "adaboost", "rounds": int(m["rounds"]), "weak": m["weak"]}
    return {"model": "pls_logit", "components": int(m["components"])}


def cmd_train(run: Run) -> dict:
    design, _ = load_design(run, "train")
    run.begin("train")
    m = run.cfg["model"]
    comps = min(int(m["components"]), np.linalg.matrix_rank(design.X))
    pls = fit_pls_logit(design.X, design.y, comps, None, design.names)
    pls_fe = fit_pls_logit(design.X, design.y, comps, design.period, design.names)
    boost = fit_adaboost(design.X, design.y, int(m["rounds"]), m["weak"], design.names)
    files = {n: run.path("train", n) for n in ("design.json", "pls_logit.json", "pls_logit_period.json",
                                              "adaboost.json", "period_test.json")}
    _dump({"features": design.names, "dropped": design.dropped, "means": design.means,
           "sds": design.sds, "rows": design.n, "seed": run.cfg["seed"]}, files["design.json"])
    _dump({**pls.to_json(), "seed": run.cfg["seed"]}, files["pls_logit.json"])
    _dump({**pls_fe.to_json(), "seed": run.cfg["seed"]}, files["pls_logit_period.json"])
    _dump({**boost.to_json(), "seed": run.cfg["seed"]}, files["adaboost.json"])
    test = likelihood_ratio_period_test(design, {"components": comps}) if len(set(design.period)) > 1 else None
    _dump(asdict(test) if test else {"statistic": None, "p_value": None,
                                     "diagnostic": "single period"}, files["period_test.json"])
    return run.finish("train", files.values(), {
        "pls_pseudo_r2": pls.pseudo_r2, "pls_aic": pls.aic, "adaboost_rounds": boost.rounds,
        "period_lr_p": test.p_value if test else None})


def cmd_evaluate(run: Run) -> dict:
    design, _ = load_design(run, "evaluate")
    run.begin("evaluate")
    m = run.cfg["model"]
    thr = float(m["threshold"])
    files, metrics = [], {}
    for kind in ("adaboost", "pls_logit"):
        spec = _model_spec(m, kind)
        if kind == "pls_logit":
            spec["components"] = min(spec["components"], np.linalg.matrix_rank(design.X))
        rep = evaluate_loocv(design, spec, thr)
        jp, rp = run.path("evaluate", f"{kind}_report.json"), run.path("evaluate", f"{kind}_roc.csv")
        body = rep.to_json()
        body["model_spec"] = spec
        body["keys"] = [list(k) for k in design.keys]
        _dump(body, jp)
        rep.write_roc(rp)
        files += [jp, rp]
        metrics[kind] = {"accuracy": rep.accuracy, "kappa": rep.kappa, "auc": rep.auc,
                         "sensitivity": rep.sensitivity, "specificity": rep.specificity}
    return run.finish("evaluate", files, metrics)


def cmd_cluster(run: Run) -> dict:
    run.require("cluster", "indicators")
    m = run.cfg["model"]
    Z, feats, rows = cluster.top_performer_matrix(
        indicators.modeling_rows(read_rows(run.path("indicators", "indicators.csv"))), INDICATORS)
    if len(rows) < 4:
        raise StageError("too few top performers to cluster")
    run.begin("cluster")
    lo, hi = m["k_range"]
    seed = run.cfg["seed"]
    elbow = cluster.elbow_sweep(Z, range(lo, min(hi, len(rows)) + 1), m["restarts"], seed)
    k = int(m["k"] or elbow.suggested_k)
    km = cluster.kmeans(Z, k, m["restarts"], seed)
    files = {n: run.path("cluster", n) for n in ("elbow.csv", "assignments.csv", "centers.csv",
                                                "pca.csv", "agreement.json")}
    cluster.write_table([{"k": kk, "inertia": v} for kk, v in elbow.table], files["elbow.csv"])
    cluster.write_table([{"actor": r["actor"], "period": r["period"], "cluster": int(c)}
                         for r, c in zip(rows, km.assignments)], files["assignments.csv"])
    cluster.write_table(cluster.profile_table(Z, km.assignments, feats), files["centers.csv"],
                        ["cluster", "size", *feats])
    pca = cluster.pca_project(Z, 2)
    cluster.write_table([{"actor": r["actor"], "period": r["period"], "pc1": float(c[0]),
                          "pc2": float(c[1]), "cluster": int(a)}
                         for r, c, a in zip(rows, pca.coordinates, km.assignments)], files["pca.csv"])
    agreement = {"k": k, "suggested_k": elbow.suggested_k, "low_confidence": elbow.low_confidence,
                 "explained_ratio": pca.explained_ratio.tolist()}
    if len(rows) >= 2 * k and k > 1:
        gmm = cluster.gmm_em(Z, k, seed)
        agreement["gmm_kappa"] = cluster.clustering_kappa(km.assignments, gmm.assignments)
        agreement["gmm_loglik"] = gmm.loglik_trace[-1]
        agreement["gmm_floored"] = gmm.floored
    _dump(agreement, files["agreement.json"])
    return run.finish("cluster", files.values(), agreement)


def cmd_report(run: Run) -> dict:
    stages = {}
    for s in STAGES[:-1]:
        p = run.path(s, "stage.json")
        if os.path.exists(p):
            with open(p, encoding="utf-8") as fh:
                stages[s] = json.load(fh)
    if not stages:
        raise StageError("nothing to report; run the pipeline first", code=2, stage="report",
                         requires="ingest")
    manifest = {
        "tool": "mailsignal",
        "versions": {"mailsignal": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "config_hash": config_hash(run.cfg),
        "seed": run.cfg["seed"],
        "stages": {s: {"status": r["status"],
                       "files": {**r["files"], f"{s}/stage.json": _sha(run.path(s, "stage.json"))}}
                   for s, r in stages.items()},
        "metrics": {s: r.get("metrics", {}) for s, r in stages.items()},
    }
    manifest["stages"]["report"] = {"status": "ok", "files": {}}
    body = json.dumps(manifest, sort_keys=True, default=_jsonable)
    manifest["manifest_hash"] = hashlib.sha256(body.encode()).hexdigest()
    _dump(manifest, os.path.join(run.out, "manifest.json"))
    return {"stage": "report", "status": "ok", "manifest_hash": manifest["manifest_hash"]}


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "indicators": cmd_indicators,
            "train": cmd_train, "evaluate": cmd_evaluate, "cluster": cmd_cluster,
            "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--components", type=int, help="PLS components")
    common.add_argument("--rounds", type=int, help="AdaBoost rounds")
    common.add_argument("--weak", choices=["stump", "logit1"], help="AdaBoost weak learner")
    common.add_argument("--threshold", type=float, help="decision threshold for headline metrics")
    common.add_argument("--k", type=int, help="fix the number of clusters")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="mailsignal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    sub.add_parser("all", parents=[common], help="run every stage in order")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {
            "output": args.out, "seed": args.seed,
            "model": {"components": args.components, "rounds": args.rounds, "weak": args.weak,
                      "threshold": args.threshold, "k": args.k},
        })
        run = Run(cfg)
        if args.command == "all":
            names = STAGES if not (cfg["inputs"].get("events") or cfg["inputs"].get("mbox")) else STAGES[1:]
        else:
            names = [args.command]
        for name in names:
            result = COMMANDS[name](run)
            print(json.dumps({"stage": name, "status": "ok",
                              **({"manifest_hash": result["manifest_hash"]} if name == "report" else {})}))
    except StageError as exc:
        print(json.dumps({"status": "error", "error": str(exc), **exc.extra}), file=sys.stdout)
        return exc.code
    except (ingest.IngestError, synth.SynthError, content.LexiconError, ValueError, OSError) as exc:
        print(json.dumps({"status": "error", "error": str(exc), "type": type(exc).__name__}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
