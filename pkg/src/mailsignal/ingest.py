"""Email archive ingestion: mbox/JSONL parsing, reply resolution, HR attributes."""

from __future__ import annotations

import bisect
import csv
import email.utils
import hashlib
import json
import logging
import mailbox
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, NamedTuple

from .content import tokenize

log = logging.getLogger(__name__)

DEFAULT_SALT = "mailsignal"
REPLY_HORIZON = 4 * 86400.0

_TAG = re.compile(r"<[^>]+>")


class IngestError(Exception):
    pass


class Reject(NamedTuple):
    line: int
    reason: str


class Period(NamedTuple):
    start: float
    end: float

    def __contains__(self, t) -> bool:  # type: ignore[override]
        return self.start <= t < self.end


@dataclass(frozen=True)
class EmailEvent:
    message_id: str
    sender: str
    recipients: tuple[str, ...]
    timestamp: float
    in_reply_to: str | None = None
    tokens: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "message_id": self.message_id,
            "sender": self.sender,
            "recipients": list(self.recipients),
            "timestamp": self.timestamp,
            "in_reply_to": self.in_reply_to,
            "tokens": list(self.tokens),
        }


@dataclass(frozen=True)
class ActorAttributes:
    actor: str
    age: float
    band: int
    tenure: float
    tslp: float
    labels: tuple[int | None, ...] = ()

    def label(self, period_index: int) -> int | None:
        if period_index < len(self.labels):
            return self.labels[period_index]
        return None


@dataclass
class Corpus:
    events: list[EmailEvent]
    attributes: dict[str, ActorAttributes] = field(default_factory=dict)
    periods: list[Period] = field(default_factory=list)

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: (e.timestamp, e.message_id))
        ps = sorted(self.periods)
        for p in ps:
            if not p.end > p.start:
                raise IngestError(f"empty period {p}")
        for a, b in zip(ps, ps[1:]):
            if b.start < a.end:
                raise IngestError(f"overlapping periods {a} and {b}")

    @property
    def actors(self) -> list[str]:
        seen = set()
        for e in self.events:
            seen.add(e.sender)
            seen.update(e.recipients)
        return sorted(seen)

    def missing_attributes(self) -> set[str]:
        """Actors seen in the events but absent from the attributes file."""
        return set(self.actors) - set(self.attributes)


def anonymizer(salt: str = DEFAULT_SALT):
    """Return a function mapping addresses to stable salted hashes."""
    cache: dict[str, str] = {}

    def hash_address(address: str) -> str:
        key = address.strip().lower()
        if key not in cache:
            cache[key] = hashlib.sha256((salt + "\0" + key).encode()).hexdigest()[:16]
        return cache[key]

    return hash_address


def make_event(message_id, sender, recipients, timestamp, in_reply_to=None, tokens=()):
    """Build a validated event. Recipients are deduplicated and the sender removed."""
    if not message_id:
        raise ValueError("message_id is empty")
    if not sender:
        raise ValueError("sender is empty")
    ts = float(timestamp)
    if not math.isfinite(ts) or ts < 0:
        raise ValueError(f"bad timestamp {timestamp!r}")
    rcpts = tuple(dict.fromkeys(r for r in recipients if r and r != sender))
    if not rcpts:
        raise ValueError("no recipients besides the sender")
    return EmailEvent(str(message_id), str(sender), rcpts, ts,
                      in_reply_to or None, tuple(tokens))


def _parse_time(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValueError(f"unparseable timestamp {value!r}")


def _addresses(msg, *headers) -> list[str]:
    values = []
    for h in headers:
        values.extend(str(v) for v in msg.get_all(h, []))
    return [addr.lower() for _, addr in email.utils.getaddresses(values) if "@" in addr]


def _body_text(msg) -> str:
    if msg.is_multipart():
        html = None
        for part in msg.walk():
            ctype = part.get_content_type()
            if part.get_content_disposition() == "attachment":
                continue
            if ctype == "text/plain":
                return _decode(part)
            if ctype == "text/html" and html is None:
                html = _decode(part)
        return _TAG.sub(" ", html) if html else ""
    text = _decode(msg)
    if msg.get_content_type() == "text/html":
        text = _TAG.sub(" ", text)
    return text


def _decode(part) -> str:
    payload = part.get_payload(decode=True)
    if payload is None:
        return ""
    charset = part.get_content_charset() or "utf-8"
    try:
        return payload.decode(charset, errors="replace")
    except LookupError:
        return payload.decode("utf-8", errors="replace")


def _msgid(value, last: bool = False) -> str | None:
    if not value:
        return None
    ids = re.findall(r"<[^>]+>", str(value))
    if ids:
        return ids[-1] if last else ids[0]
    return str(value).strip() or None


def parse_mbox(path, anonymize: bool = True, salt: str = DEFAULT_SALT,
               stopwords=None) -> tuple[list[EmailEvent], list[Reject]]:
    """Parse an mbox archive into time-ordered events plus a rejects report.

    Reject line numbers are 1-based message positions within the archive.
    When ``anonymize`` is set, every address (and reply header target) is
    replaced by a salted hash; message ids are kept since they carry no address.
    """
    try:
        with open(path, "rb"):
            pass
    except OSError as exc:
        raise IngestError(f"cannot read mbox {path}: {exc}") from exc

    hash_address = anonymizer(salt) if anonymize else (lambda a: a)
    box = mailbox.mbox(path, factory=None, create=False)
    events: list[EmailEvent] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    try:
        for i, msg in enumerate(box, start=1):
            try:
                senders = _addresses(msg, "From")
                if not senders:
                    raise ValueError("missing or unparseable From")
                rcpts = _addresses(msg, "To", "Cc")
                if not rcpts:
                    raise ValueError("missing or unparseable To")
                date = msg.get("Date")
                dt = email.utils.parsedate_to_datetime(date) if date else None
                if dt is None:
                    raise ValueError("missing Date")
                if dt.tzinfo is None:  # "-0000" zone
                    dt = dt.replace(tzinfo=timezone.utc)
                mid = _msgid(msg.get("Message-ID"))
                if mid is None:
                    basis = "|".join(str(msg.get(h, "")) for h in ("From", "To", "Date", "Subject"))
                    mid = "<" + hashlib.sha1(basis.encode()).hexdigest() + "@generated>"
                if mid in seen:
                    raise ValueError(f"duplicate Message-ID {mid}")
                # the last References entry is the immediate parent
                reply = _msgid(msg.get("In-Reply-To")) or _msgid(msg.get("References"), last=True)
                event = make_event(
                    mid,
                    hash_address(senders[0]),
                    [hash_address(r) for r in rcpts],
                    dt.astimezone(timezone.utc).timestamp(),
                    reply,
                    tokenize(_body_text(msg), stopwords),
                )
            except (ValueError, TypeError, IndexError) as exc:
                rejects.append(Reject(i, str(exc)))
                continue
            seen.add(mid)
            events.append(event)
    finally:
        box.close()
    events.sort(key=lambda e: (e.timestamp, e.message_id))
    if rejects:
        log.info("mbox %s: %d messages rejected", path, len(rejects))
    return events, rejects


_REQUIRED = ("message_id", "sender", "recipients", "timestamp")


def parse_jsonl(path) -> tuple[list[EmailEvent], list[Reject]]:
    """Parse newline-delimited event records; output sorted by timestamp."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    events, rejects = [], []
    seen: set[str] = set()
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                missing = [k for k in _REQUIRED if rec.get(k) in (None, "", [])]
                if missing:
                    raise ValueError("missing field(s): " + ", ".join(missing))
                if not isinstance(rec["recipients"], list):
                    raise ValueError("recipients must be a list")
                if rec["message_id"] in seen:
                    raise ValueError(f"duplicate message_id {rec['message_id']}")
                event = make_event(rec["message_id"], rec["sender"], rec["recipients"],
                                   _parse_time(rec["timestamp"]), rec.get("in_reply_to"),
                                   rec.get("tokens") or ())
            except (ValueError, TypeError, AttributeError) as exc:
                rejects.append(Reject(lineno, str(exc)))
                continue
            seen.add(event.message_id)
            events.append(event)
    events.sort(key=lambda e: (e.timestamp, e.message_id))
    return events, rejects


def write_jsonl(events: Iterable[EmailEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


def write_rejects(rejects: Iterable[Reject], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["line", "reason"])
        w.writerows(rejects)


def resolve_replies(events: list[EmailEvent],
                    horizon: float = REPLY_HORIZON) -> dict[str, set[str]]:
    """Map each message id to the ids of messages that answer it.

    A header link (``in_reply_to`` naming an earlier message by someone else)
    wins. Otherwise a message from X to Y answers the earliest message from Y
    to X that X has not yet answered, provided it falls within ``horizon``.
    Any answer, header or heuristic, marks every earlier pending Y->X message
    as answered, so a later X->Y message cannot be matched to a stale one.
    """
    by_id = {e.message_id: e for e in events}
    # (prompter, responder) -> pending prompting messages in time order
    pending: dict[tuple[str, str], list[EmailEvent]] = {}
    replies: dict[str, set[str]] = {}

    def clear(prompter: str, responder: str, before: float) -> None:
        queue = pending.get((prompter, responder))
        if queue:
            keys = [m.timestamp for m in queue]
            del queue[: bisect.bisect_left(keys, before)]

    for e in events:
        target = None
        parent = by_id.get(e.in_reply_to) if e.in_reply_to else None
        if parent is not None and parent.timestamp < e.timestamp and parent.sender != e.sender:
            target = parent
        elif parent is None:
            best = None
            for r in e.recipients:
                queue = pending.get((r, e.sender))
                if not queue:
                    continue
                # drop prompts that fell out of the horizon
                while queue and e.timestamp - queue[0].timestamp > horizon:
                    queue.pop(0)
                if queue and queue[0].timestamp < e.timestamp:
                    if best is None or (queue[0].timestamp, queue[0].message_id) < (best.timestamp, best.message_id):
                        best = queue[0]
            target = best
        if target is not None:
            replies.setdefault(target.message_id, set()).add(e.message_id)
            clear(target.sender, e.sender, e.timestamp)
        for r in e.recipients:
            pending.setdefault((e.sender, r), []).append(e)
    return replies


def load_attributes(path) -> dict[str, ActorAttributes]:
    """Read the HR attribute CSV (actor,age,band,tenure,tslp,label_p1,...)."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    out: dict[str, ActorAttributes] = {}
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:5] != ["actor", "age", "band", "tenure", "tslp"]:
            raise IngestError(f"unexpected attribute header {header}")
        label_cols = header[5:]
        for rowno, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            actor = row[0].strip()
            if actor in out:
                raise IngestError(f"duplicate actor {actor!r} at row {rowno}")
            try:
                age, band, tenure, tslp = (float(c) for c in row[1:5])
                labels = tuple(int(float(c)) if c.strip() else None for c in row[5:5 + len(label_cols)])
            except ValueError as exc:
                raise IngestError(f"non-numeric field at row {rowno}: {exc}") from exc
            if not age > 0 or tenure < 0 or tslp < 0 or band not in (0, 1):
                raise IngestError(f"attribute out of range at row {rowno}")
            if any(lab not in (None, 0, 1) for lab in labels):
                raise IngestError(f"label must be 0/1 at row {rowno}")
            out[actor] = ActorAttributes(actor, age, int(band), tenure, tslp, labels)
    return out


def anonymize_attributes(attrs: dict[str, ActorAttributes], salt: str = DEFAULT_SALT):
    hash_address = anonymizer(salt)
    return {hash_address(a): ActorAttributes(hash_address(a), v.age, v.band, v.tenure, v.tslp, v.labels)
            for a, v in attrs.items()}


def split_periods(events: list[EmailEvent], n: int) -> list[Period]:
    """Split the corpus span (from the first event's UTC midnight) into ``n`` equal windows."""
    if not events:
        raise IngestError("cannot derive periods from an empty corpus")
    first = min(e.timestamp for e in events)
    last = max(e.timestamp for e in events)
    start = math.floor(first / 86400.0) * 86400.0
    days = math.floor((last - start) / 86400.0) + 1
    step = math.ceil(days / n) * 86400.0
    return [Period(start + i * step, start + (i + 1) * step) for i in range(n)]
