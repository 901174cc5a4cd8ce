import json
import random
from email.utils import format_datetime
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from mailsignal import ingest
from mailsignal.ingest import (Corpus, IngestError, Period, anonymizer, load_attributes,
                               make_event, parse_jsonl, parse_mbox, resolve_replies,
                               split_periods)


def _mbox_message(sender, to, when, mid=None, body="hello world", extra=""):
    lines = [f"From {sender} Mon Jan  2 00:00:00 2017", f"From: {sender}", f"To: {to}",
             f"Date: {format_datetime(when)}", "Subject: test"]
    if mid:
        lines.append(f"Message-ID: {mid}")
    if extra:
        lines.append(extra)
    return "\n".join(lines) + "\n\n" + body + "\n\n"


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


T0 = datetime(2017, 1, 2, 9, 0, tzinfo=timezone.utc)


def test_mbox_three_messages(tmp_path):
    box = "".join(_mbox_message(f"a{i}@x.org", "b@x.org", T0.replace(hour=9 + i), f"<id{i}@x>")
                  for i in range(3))
    events, rejects = parse_mbox(_write(tmp_path, "a.mbox", box), anonymize=False)
    assert len(events) == 3 and not rejects
    assert [e.sender for e in events] == ["a0@x.org", "a1@x.org", "a2@x.org"]
    assert events[0].tokens == ("hello", "world")
    assert events[0].timestamp == T0.timestamp()


def test_mbox_self_loop_dropped(tmp_path):
    box = _mbox_message("a@x.org", "a@x.org", T0, "<self@x>") + _mbox_message("a@x.org", "b@x.org", T0, "<ok@x>")
    events, rejects = parse_mbox(_write(tmp_path, "s.mbox", box), anonymize=False)
    assert [e.message_id for e in events] == ["<ok@x>"]
    assert len(rejects) == 1


def test_mbox_duplicate_message_id(tmp_path):
    box = _mbox_message("a@x.org", "b@x.org", T0, "<dup@x>") + _mbox_message("c@x.org", "b@x.org", T0, "<dup@x>")
    events, rejects = parse_mbox(_write(tmp_path, "d.mbox", box), anonymize=False)
    assert len(events) == 1 and len(rejects) == 1
    assert rejects[0].line == 2 and "duplicate" in rejects[0].reason


def test_mbox_bad_date_rejected_and_cc_included(tmp_path):
    bad = "From a@x.org\nFrom: a@x.org\nTo: b@x.org\nDate: not a date\n\nbody\n\n"
    good = _mbox_message("a@x.org", "b@x.org", T0, "<g@x>", extra="Cc: c@x.org, B@X.org")
    events, rejects = parse_mbox(_write(tmp_path, "b.mbox", bad + good), anonymize=False)
    assert len(rejects) == 1 and rejects[0].line == 1
    assert events[0].recipients == ("b@x.org", "c@x.org")


def test_mbox_reply_headers_and_html(tmp_path):
    box = (_mbox_message("a@x.org", "b@x.org", T0, "<p@x>")
           + _mbox_message("b@x.org", "a@x.org", T0.replace(hour=10), "<r@x>",
                           extra="References: <root@x> <p@x>\nContent-Type: text/html",
                           body="<p>Great <b>news</b></p>"))
    events, _ = parse_mbox(_write(tmp_path, "r.mbox", box), anonymize=False)
    assert events[1].in_reply_to == "<p@x>"
    assert events[1].tokens == ("great", "news")


def test_mbox_anonymized_and_idempotent(tmp_path):
    box = _mbox_message("Alice@x.org", "bob@x.org", T0, "<1@x>")
    p = _write(tmp_path, "a.mbox", box)
    first, _ = parse_mbox(p)
    second, _ = parse_mbox(p)
    assert first == second
    h = anonymizer()
    assert first[0].sender == h("alice@x.org") and "@" not in first[0].sender


def test_mbox_missing_file():
    with pytest.raises(IngestError):
        parse_mbox("/nonexistent/box.mbox")


def test_jsonl_roundtrip_and_sorting(tmp_path):
    recs = [{"message_id": f"<{i}>", "sender": "a", "recipients": ["b", "c"], "timestamp": t,
             "in_reply_to": None, "tokens": ["x", "y"]} for i, t in enumerate([30.0, 10.0, 20.0])]
    p = _write(tmp_path, "e.jsonl", "\n".join(json.dumps(r) for r in recs) + "\n")
    events, rejects = parse_jsonl(p)
    assert not rejects
    assert [e.timestamp for e in events] == [10.0, 20.0, 30.0]
    e = events[0]
    assert (e.message_id, e.sender, e.recipients, e.tokens) == ("<1>", "a", ("b", "c"), ("x", "y"))
    out = tmp_path / "out.jsonl"
    ingest.write_jsonl(events, out)
    assert parse_jsonl(out)[0] == events


def test_jsonl_missing_sender_named(tmp_path):
    p = _write(tmp_path, "e.jsonl", json.dumps({"message_id": "<1>", "recipients": ["b"], "timestamp": 1}) + "\n")
    events, rejects = parse_jsonl(p)
    assert not events and "sender" in rejects[0].reason and rejects[0].line == 1


def test_jsonl_iso_timestamp(tmp_path):
    p = _write(tmp_path, "e.jsonl", json.dumps({"message_id": "<1>", "sender": "a", "recipients": ["b"],
                                                "timestamp": "2017-01-02T00:00:00Z"}) + "\n")
    assert parse_jsonl(p)[0][0].timestamp == 1483315200.0


def test_header_reply(ev):
    a = ev("A", "B", 0)
    b = ev("B", "A", 100, reply=a.message_id)
    assert resolve_replies([a, b]) == {a.message_id: {b.message_id}}


def test_no_reply(ev):
    assert resolve_replies([ev("A", "B", 0)]) == {}


def test_fallback_picks_earliest_pending(ev):
    a0, a1 = ev("A", "B", 0), ev("A", "B", 50)
    b = ev("B", "A", 100)
    assert resolve_replies([a0, a1, b]) == {a0.message_id: {b.message_id}}


def test_fallback_horizon(ev):
    a = ev("A", "B", 0)
    b = ev("B", "A", 5 * 86400)
    assert resolve_replies([a, b]) == {}


def _brute_force_replies(events, horizon):
    """Independent matcher: rescans the whole history for every message."""
    out = {}
    answered_until = {}  # (prompter, responder) -> timestamp of the last answer
    by_id = {e.message_id: e for e in events}
    for e in events:
        target = None
        parent = by_id.get(e.in_reply_to) if e.in_reply_to else None
        if parent is not None:
            if parent.timestamp < e.timestamp and parent.sender != e.sender:
                target = parent
        else:
            cands = [p for p in events
                     if p.sender in e.recipients and e.sender in p.recipients
                     and p.timestamp < e.timestamp and e.timestamp - p.timestamp <= horizon
                     and p.timestamp >= answered_until.get((p.sender, e.sender), -1.0)
                     and (p.timestamp, p.message_id) < (e.timestamp, e.message_id)]
            if cands:
                target = min(cands, key=lambda p: (p.timestamp, p.message_id))
        if target is not None:
            out.setdefault(target.message_id, set()).add(e.message_id)
            key = (target.sender, e.sender)
            answered_until[key] = max(answered_until.get(key, -1.0), e.timestamp)
    return out


@pytest.mark.parametrize("seed", range(40))
def test_replies_match_brute_force(seed):
    rng = random.Random(seed)
    actors = "ABCD"
    events = []
    ts = sorted(rng.sample(range(0, 12 * 86400, 3600), 25))
    for i, t in enumerate(ts):
        s = rng.choice(actors)
        rc = rng.sample([a for a in actors if a != s], rng.randint(1, 2))
        reply = None
        if events and rng.random() < 0.3:
            reply = rng.choice(events).message_id
        events.append(make_event(f"<{i:03d}>", s, rc, float(t), reply))
    assert resolve_replies(events) == _brute_force_replies(events, ingest.REPLY_HORIZON)


def test_attributes(tmp_path):
    p = _write(tmp_path, "a.csv", "actor,age,band,tenure,tslp,label_p1,label_p2\na1,44,0,99,30,1,0\n")
    a = load_attributes(p)["a1"]
    assert (a.age, a.band, a.tenure, a.tslp, list(a.labels)) == (44, 0, 99, 30, [1, 0])


@pytest.mark.parametrize("body", ["a1,44,0,99,30,1\na1,45,0,99,30,1\n",  # duplicate
                                  "a1,xx,0,99,30,1\n",  # non-numeric
                                  "a1,44,3,99,30,1\n"])  # band out of range
def test_attributes_fatal(tmp_path, body):
    p = _write(tmp_path, "a.csv", "actor,age,band,tenure,tslp,label_p1\n" + body)
    with pytest.raises(IngestError):
        load_attributes(p)


def test_missing_attributes_excluded_from_modeling(ev):
    from mailsignal import content, indicators
    events = [ev("a1", "a2", 10, tokens=("x",)), ev("a2", "zz", 20, tokens=("y",))]
    attrs = {a: ingest.ActorAttributes(a, 40, 0, 10, 1, (1,)) for a in ("a1", "a2")}
    corpus = Corpus(events, attrs, [Period(0, 100)])
    assert corpus.missing_attributes() == {"zz"}
    tabs = indicators.compute(corpus, content.load_lexicon(), indicators.IndicatorOptions(topics=0))
    assert {r["actor"] for r in tabs.merged} == {"a1", "a2", "zz"}
    assert {r["actor"] for r in indicators.modeling_rows(tabs.merged)} == {"a1", "a2"}


def test_overlapping_periods_fatal(ev):
    with pytest.raises(IngestError):
        Corpus([ev("a", "b", 1)], {}, [Period(0, 10), Period(5, 20)])


def test_split_periods_covers_span(ev):
    events = [ev("a", "b", 86400 * 3 + 5), ev("a", "b", 86400 * 10)]
    ps = split_periods(events, 2)
    assert ps[0].start == 86400 * 3 and all(any(e.timestamp in p for p in ps) for e in events)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCDE"), st.sampled_from("ABCDE"),
                          st.integers(0, 10 * 86400), st.booleans()), min_size=1, max_size=30))
def test_reply_links_point_forward_in_time(rows):
    events = []
    for i, (s, r, t, link) in enumerate(rows):
        if s == r:
            continue
        parent = events[-1].message_id if link and events else None
        events.append(make_event(f"<{i}>", s, [r], t, parent))
    events.sort(key=lambda e: (e.timestamp, e.message_id))
    by_id = {e.message_id: e for e in events}
    for prompt, answers in resolve_replies(events).items():
        for a in answers:
            assert by_id[a].timestamp > by_id[prompt].timestamp
            assert by_id[a].sender != by_id[prompt].sender


@given(st.lists(st.emails(), min_size=1, max_size=20), st.text(max_size=8))
def test_anonymization_is_injective(addresses, salt):
    h = anonymizer(salt)
    keys = {a.strip().lower() for a in addresses}
    assert len({h(a) for a in keys}) == len(keys)
    assert all(h(a) == anonymizer(salt)(a) for a in keys)
