"""Synthetic organizations with planted communication archetypes.

Every actor has latent behavioral levers drawn from standard normals:
contact breadth, sending rate, positivity, reply propensity, reply speed and
echo propensity. Archetype actors get their signature levers shifted so that
their signature indicators end up roughly ``effect_size`` pooled standard
deviations above baseline. Sampling noise in the realized indicators shrinks
a latent shift, so levers move by ``effect_size * LEVER_GAIN``:

* networker: cross-team contact breadth and sending rate
* influencer: injects private rare terms that recipients echo within 4 days
* positivist: positive vocabulary, higher reply propensity and faster replies

Email bodies are token lists drawn from term pools; no natural language is
generated since every content indicator works on tokens.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .content import load_lexicon

ARCHETYPES = ("networker", "influencer", "positivist", "baseline")
START = 1483315200.0  # 2017-01-02T00:00:00Z, a Monday
DAY = 86400.0
HOUR = 3600.0
LEVER_GAIN = 1.5


class SynthError(ValueError):
    pass


@dataclass
class SynthSpec:
    n_actors: int = 120
    n_weeks: int = 8
    mix: dict = field(default_factory=lambda: {"networker": 0.2, "influencer": 0.2,
                                               "positivist": 0.2, "baseline": 0.4})
    base_rate: float = 1.5  # emails per actor-day
    reply_prob: float = 0.45
    effect_size: float = 2.0
    team_size: int = 8
    common_terms: int = 300
    team_terms: int = 40
    private_terms: int = 12
    header_fraction: float = 0.7  # replies carrying an In-Reply-To header
    n_periods: int = 2
    baseline_positive_rate: float = 0.0  # label rate among baseline actors
    seed: int = 0

    def validate(self) -> None:
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise SynthError("archetype proportions must sum to 1")
        unknown = set(self.mix) - set(ARCHETYPES)
        if unknown:
            raise SynthError(f"unknown archetypes {sorted(unknown)}")
        if any(v < 0 for v in self.mix.values()):
            raise SynthError("negative archetype proportion")
        if self.base_rate <= 0 or not 0 <= self.reply_prob <= 1:
            raise SynthError("rates must be positive and reply_prob in [0, 1]")
        if self.n_actors < 2 or self.n_weeks < 1:
            raise SynthError("need at least 2 actors and 1 week")
        if round(self.base_rate * self.n_weeks * 7) < 1:
            raise SynthError("spec produces no emails (rate x weeks rounds to zero)")
        if self.n_weeks % self.n_periods:
            raise SynthError("n_weeks must split evenly into periods")

    @property
    def periods(self) -> list[tuple[float, float]]:
        span = self.n_weeks * 7 * DAY / self.n_periods
        return [(START + i * span, START + (i + 1) * span) for i in range(self.n_periods)]


@dataclass
class SynthOutput:
    events: list[dict]
    attributes: list[dict]
    truth: list[dict]
    spec: SynthSpec

    def write(self, outdir) -> dict[str, str]:
        import os
        os.makedirs(outdir, exist_ok=True)
        paths = {
            "events": os.path.join(outdir, "events.jsonl"),
            "attributes": os.path.join(outdir, "attributes.csv"),
            "truth": os.path.join(outdir, "truth.csv"),
            "spec": os.path.join(outdir, "synth_spec.json"),
        }
        with open(paths["events"], "w", encoding="utf-8", newline="\n") as fh:
            for e in self.events:
                fh.write(json.dumps(e, sort_keys=True) + "\n")
        labels = [f"label_p{i + 1}" for i in range(self.spec.n_periods)]
        _write_csv(paths["attributes"], ["actor", "age", "band", "tenure", "tslp", *labels], self.attributes)
        _write_csv(paths["truth"], ["actor", "archetype", "label"], self.truth)
        with open(paths["spec"], "w", encoding="utf-8") as fh:
            json.dump(asdict(self.spec), fh, indent=2, sort_keys=True)
        return paths


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _zipf_weights(n, s=1.0):
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def generate(spec: SynthSpec) -> SynthOutput:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_actors
    actors = [f"u{i:03d}" for i in range(n)]

    counts = {a: int(round(spec.mix.get(a, 0.0) * n)) for a in ARCHETYPES[:3]}
    counts["baseline"] = n - sum(counts.values())
    if counts["baseline"] < 0:
        raise SynthError("archetype counts exceed n_actors")
    kinds = np.array([k for k in ARCHETYPES for _ in range(counts[k])])
    rng.shuffle(kinds)

    es = spec.effect_size * LEVER_GAIN
    is_ = {k: kinds == k for k in ARCHETYPES}
    breadth = rng.standard_normal(n) + es * is_["networker"]
    activity = rng.standard_normal(n) + es * is_["networker"]
    positivity = rng.standard_normal(n) + es * is_["positivist"]
    responsive = rng.standard_normal(n) + es * is_["positivist"]
    speed = rng.standard_normal(n) + es * is_["positivist"]
    echo = rng.standard_normal(n) + es * is_["influencer"]

    # teams and contact sets
    team = rng.permutation(n) // spec.team_size
    n_teams = int(team.max()) + 1
    contacts: list[np.ndarray] = []
    # broad actors also attract cross-team contacts
    attraction = np.exp(0.8 * breadth)
    for i in range(n):
        mates = np.flatnonzero((team == team[i]) & (np.arange(n) != i))
        own = rng.choice(mates, size=min(len(mates), 4), replace=False) if len(mates) else mates
        n_cross = int(np.clip(np.round(3.0 + 3.0 * breadth[i]), 0, n - 1 - len(own)))
        others = np.flatnonzero(team != team[i])
        pull = attraction[others] / attraction[others].sum()
        cross = rng.choice(others, size=min(n_cross, len(others)), replace=False, p=pull)
        contacts.append(np.concatenate([own, cross]).astype(int))

    # vocabulary
    lexicon = load_lexicon()
    positive = sorted(t for t, v in lexicon.items() if v > 0)
    negative = sorted(t for t, v in lexicon.items() if v < 0)
    common = np.array([f"w{j:04d}" for j in range(spec.common_terms)])
    common_p = _zipf_weights(len(common))
    team_pool = [np.array([f"t{t:02d}x{j:03d}" for j in range(spec.team_terms)]) for t in range(n_teams)]
    private = {i: np.array([f"r{i:03d}z{j:02d}" for j in range(spec.private_terms)]) for i in range(n)}

    pos_share = 1.0 / (1.0 + np.exp(-(0.2 + 0.6 * positivity)))  # P(sentiment term is positive)
    reply_p = np.clip(spec.reply_prob + 0.12 * responsive, 0.02, 0.98)
    delay_median = 10.0 * HOUR * np.exp(-0.5 * speed)
    rate = spec.base_rate * np.exp(0.2 * activity)
    echo_p = 1.0 / (1.0 + np.exp(-(-1.5 + 1.0 * echo)))  # P(recipient echoes my private terms)

    end = START + spec.n_weeks * 7 * DAY
    # schedule original emails
    schedule = []  # (ts, sender, recipients, reply_to_index)
    for i in range(n):
        if len(contacts[i]) == 0:
            continue
        k = rng.poisson(rate[i] * spec.n_weeks * 7)
        times = np.sort(rng.uniform(START, end, size=k))
        for t in times:
            m = 1 + rng.binomial(2, 0.2)
            rc = rng.choice(contacts[i], size=min(m, len(contacts[i])), replace=False)
            schedule.append((float(t), i, [int(r) for r in rc], None))
    schedule.sort(key=lambda s: (s[0], s[1]))
    originals = len(schedule)
    for idx in range(originals):
        t, s, rcpts, _ = schedule[idx]
        for r in rcpts:
            if rng.random() < reply_p[r]:
                delay = float(delay_median[r] * math.exp(0.6 * rng.standard_normal()))
                if t + delay < end:
                    schedule.append((t + delay, r, [s], idx))
    order = sorted(range(len(schedule)), key=lambda j: (schedule[j][0], schedule[j][1], j))
    position = {j: p for p, j in enumerate(order)}
    mids = [f"<m{position[j]:06d}.{spec.seed}@synth>" for j in range(len(schedule))]

    # compose bodies in time order; influencer terms sit in recipients' echo buffers
    buffers: dict[int, list[tuple[float, str]]] = {i: [] for i in range(n)}
    events = []
    for j in order:
        t, s, rcpts, parent = schedule[j]
        length = int(rng.integers(8, 20))
        tokens = list(rng.choice(common, size=length, p=common_p))
        tokens += list(rng.choice(team_pool[team[s]], size=int(rng.integers(2, 6))))
        n_sent = int(rng.integers(1, 4))
        for _ in range(n_sent):
            pool = positive if rng.random() < pos_share[s] else negative
            tokens.append(pool[int(rng.integers(len(pool)))])
        mine = []
        if kinds[s] == "influencer":
            mine = [str(w) for w in rng.choice(private[s], size=3, replace=False)]
            tokens += mine
        live = [(x, w) for x, w in buffers[s] if x >= t]
        buffers[s] = live
        if live:
            echoed = sorted({w for _, w in live})
            take = min(len(echoed), 4)
            tokens += list(rng.choice(echoed, size=take, replace=False))
        # recipients may pick up this sender's private terms
        if mine:
            for r in rcpts:
                if rng.random() < echo_p[s]:
                    buffers[r].extend((t + 4 * DAY, w) for w in mine)
        rng.shuffle(tokens)
        in_reply_to = None
        if parent is not None and rng.random() < spec.header_fraction:
            in_reply_to = mids[parent]
        events.append({
            "message_id": mids[j],
            "sender": actors[s],
            "recipients": [actors[r] for r in rcpts],
            "timestamp": round(t, 3),
            "in_reply_to": in_reply_to,
            "tokens": [str(x) for x in tokens],
        })

    attributes, truth = [], []
    for i in range(n):
        planted = kinds[i] != "baseline"
        labels = {}
        for p in range(spec.n_periods):
            if planted:
                lab = 1
            else:
                lab = int(rng.random() < spec.baseline_positive_rate)
            labels[f"label_p{p + 1}"] = lab
        attributes.append({
            "actor": actors[i],
            "age": int(np.clip(round(rng.normal(45, 6)), 25, 67)),
            "band": int(rng.random() < 0.26),
            "tenure": int(rng.integers(4, 324)),
            "tslp": int(rng.integers(0, 133)),
            **labels,
        })
        truth.append({"actor": actors[i], "archetype": str(kinds[i]), "label": int(planted)})
    return SynthOutput(events, attributes, truth, spec)
