"""Chat corpus ingestion: historical exports, realtime streams, merging, deletion diffing.

Two feeds cover the same channels: a historical export (post-moderation
snapshot) and a realtime stream (captures messages before moderators delete
them). Diffing the two yields deletion ground truth per channel.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone, timedelta

from .errors import DataError, ParseError

log = logging.getLogger(__name__)

SOURCE_HISTORICAL = "historical"
SOURCE_REALTIME = "realtime"

MessageKey = tuple[str, int]


def normalize_text(text: str) -> str:
    """NFC-normalize and trim; the canonical form for all exact-text matching."""
    return unicodedata.normalize("NFC", text).strip()


def key_str(channel_id: str, message_id: int) -> str:
    """Portable string form of a message key; parse with split_key."""
    return f"{channel_id}:{message_id}"


def split_key(s: str) -> MessageKey:
    channel, _, msgid = s.rpartition(":")
    if not channel:
        raise DataError(f"malformed message key {s!r}")
    return channel, int(msgid)


def parse_timestamp(raw: str) -> datetime:
    """ISO-8601 → aware UTC datetime. Naive timestamps are taken as UTC."""
    ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Message:
    channel_id: str
    message_id: int
    account_id: str | None
    timestamp: datetime
    text: str
    reply_to: int | None = None
    first_name: str | None = None
    last_name: str | None = None
    username: str | None = None
    deleted: bool = False
    source: str = SOURCE_HISTORICAL

    @property
    def key(self) -> MessageKey:
        return (self.channel_id, self.message_id)

    def to_dict(self) -> dict:
        return {
            "channel_id": self.channel_id,
            "message_id": self.message_id,
            "account_id": self.account_id,
            "timestamp": format_timestamp(self.timestamp),
            "text": self.text,
            "reply_to": self.reply_to,
            "first_name": self.first_name,
            "last_name": self.last_name,
            "username": self.username,
            "deleted": self.deleted,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(
            channel_id=str(d["channel_id"]),
            message_id=int(d["message_id"]),
            account_id=d.get("account_id"),
            timestamp=parse_timestamp(d["timestamp"]),
            text=d.get("text") or "",
            reply_to=d.get("reply_to"),
            first_name=d.get("first_name"),
            last_name=d.get("last_name"),
            username=d.get("username"),
            deleted=bool(d.get("deleted", False)),
            source=d.get("source", SOURCE_HISTORICAL),
        )


@dataclass
class Account:
    account_id: str
    first_name: str | None = None
    last_name: str | None = None
    username: str | None = None
    message_ids: list[MessageKey] = field(default_factory=list)
    channels_active: set[str] = field(default_factory=set)
    first_seen: datetime | None = None
    last_seen: datetime | None = None

    @property
    def lifespan(self) -> timedelta:
        return self.last_seen - self.first_seen

    @property
    def lifespan_hours(self) -> float:
        return self.lifespan.total_seconds() / 3600.0


@dataclass
class ParseResult:
    """Parsed messages plus a report of malformed records (never silently dropped)."""

    messages: list[Message]
    malformed: list[tuple[int, str]] = field(default_factory=list)

    @property
    def malformed_count(self) -> int:
        return len(self.malformed)


def flatten_rich_text(value) -> str:
    """Flatten an export 'text' value: plain string, or a list mixing strings and
    entity dicts whose textual parts are concatenated."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        parts = []
        for item in value:
            if isinstance(item, str):
                parts.append(item)
            elif isinstance(item, dict) and isinstance(item.get("text"), str):
                parts.append(item["text"])
        return "".join(parts)
    return str(value)


def _record_to_message(rec: dict, channel_id: str, source: str) -> Message:
    if "id" not in rec:
        raise ParseError("record missing 'id'")
    if "date" not in rec:
        raise ParseError("record missing 'date'")
    try:
        message_id = int(rec["id"])
    except (TypeError, ValueError):
        raise ParseError(f"non-integer id {rec.get('id')!r}")
    try:
        ts = parse_timestamp(str(rec["date"]))
    except ValueError as exc:
        raise ParseError(f"bad date {rec.get('date')!r}: {exc}")
    reply_to = rec.get("reply_to_message_id")
    if reply_to is not None:
        reply_to = int(reply_to)
    from_id = rec.get("from_id")
    return Message(
        channel_id=channel_id,
        message_id=message_id,
        account_id=str(from_id) if from_id is not None else None,
        timestamp=ts,
        text=flatten_rich_text(rec.get("text")),
        reply_to=reply_to,
        first_name=rec.get("first_name") or rec.get("from"),
        last_name=rec.get("last_name"),
        username=rec.get("username"),
        source=source,
    )


def parse_export(path, channel_id: str | None = None) -> ParseResult:
    """Parse a historical-export JSON file (top-level ``messages`` array).

    The channel id is read from the file's top-level ``id``/``name`` when not
    given explicitly. Malformed records are reported with their array index.
    """
    with open(path, "rb") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON: {exc}")
    if not isinstance(doc, dict) or not isinstance(doc.get("messages"), list):
        raise ParseError(f"{path}: expected an object with a 'messages' array")
    if channel_id is None:
        top = doc.get("id", doc.get("name"))
        if top is None:
            raise ParseError(f"{path}: no channel id (top-level 'id'/'name' absent)")
        channel_id = str(top)

    result = ParseResult(messages=[])
    for idx, rec in enumerate(doc["messages"]):
        if not isinstance(rec, dict):
            result.malformed.append((idx, "record is not an object"))
            continue
        # exports interleave service records (joins, pins) that carry no id/date
        if rec.get("type") not in (None, "message"):
            continue
        try:
            result.messages.append(_record_to_message(rec, channel_id, SOURCE_HISTORICAL))
        except ParseError as exc:
            result.malformed.append((idx, str(exc)))
    if result.malformed:
        log.warning("%s: %d malformed records", path, len(result.malformed))
    return result


def parse_stream(path) -> ParseResult:
    """Parse a realtime JSONL stream (one message event per line).

    Each line carries the export field names plus ``channel_id``. Malformed
    lines (bad UTF-8, bad JSON, schema violations) are reported by line number.
    """
    result = ParseResult(messages=[])
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                result.malformed.append((lineno, "invalid UTF-8"))
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                result.malformed.append((lineno, f"bad JSON: {exc.msg}"))
                continue
            if not isinstance(rec, dict):
                result.malformed.append((lineno, "event is not an object"))
                continue
            channel = rec.get("channel_id")
            if channel is None:
                result.malformed.append((lineno, "event missing 'channel_id'"))
                continue
            try:
                result.messages.append(_record_to_message(rec, str(channel), SOURCE_REALTIME))
            except ParseError as exc:
                result.malformed.append((lineno, str(exc)))
    if result.malformed:
        log.warning("%s: %d malformed lines", path, len(result.malformed))
    return result


class Corpus:
    """Immutable-after-build message index.

    Built by :func:`merge`. Holds the deduplicated messages keyed by
    (channel_id, message_id), a per-channel chronological index, the reply
    index (inverse of reply_to edges), the set of dangling replies, and the
    per-channel per-source feed time ranges observed at merge time.
    """

    def __init__(self, messages: dict[MessageKey, Message],
                 feed_ranges: dict[str, dict[str, tuple[datetime, datetime]]]):
        self.messages = messages
        self.feed_ranges = feed_ranges
        self.by_channel: dict[str, list[MessageKey]] = {}
        self.replies_to: dict[MessageKey, list[MessageKey]] = {}
        self.dangling: set[MessageKey] = set()
        self._index()

    def _index(self) -> None:
        for key in sorted(self.messages):
            self.by_channel.setdefault(key[0], []).append(key)
        for channel, keys in self.by_channel.items():
            keys.sort(key=lambda k: (self.messages[k].timestamp, k[1]))
        for key in sorted(self.messages):
            msg = self.messages[key]
            if msg.reply_to is None:
                continue
            target = (msg.channel_id, msg.reply_to)
            target_msg = self.messages.get(target)
            if target_msg is None or target_msg.timestamp > msg.timestamp:
                self.dangling.add(key)
            else:
                self.replies_to.setdefault(target, []).append(key)

    def __len__(self) -> int:
        return len(self.messages)

    def __contains__(self, key: MessageKey) -> bool:
        return key in self.messages

    def get(self, key: MessageKey) -> Message | None:
        return self.messages.get(key)

    def channels(self) -> list[str]:
        return sorted(self.by_channel)

    def iter_messages(self):
        """Messages in deterministic (channel, time, id) order."""
        for channel in self.channels():
            for key in self.by_channel[channel]:
                yield self.messages[key]

    def reply_count(self, key: MessageKey) -> int:
        return len(self.replies_to.get(key, ()))

    def trigger_of(self, key: MessageKey) -> Message | None:
        """The message this one replies to, or None when absent/dangling."""
        msg = self.messages[key]
        if msg.reply_to is None or key in self.dangling:
            return None
        return self.messages.get((msg.channel_id, msg.reply_to))

    def dump_jsonl(self, path) -> None:
        """Canonical corpus dump: one Message per line, deterministic order."""
        with open(path, "w", encoding="utf-8") as fh:
            for msg in self.iter_messages():
                fh.write(json.dumps(msg.to_dict(), ensure_ascii=False, sort_keys=True))
                fh.write("\n")

    @classmethod
    def load_jsonl(cls, path) -> "Corpus":
        """Rebuild a corpus from a canonical dump. Feed ranges are recomputed
        from per-message sources (see merge for the exact-range caveat)."""
        messages = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    messages.append(Message.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}")
        return merge([messages])


def merge(batches: list[list[Message]]) -> Corpus:
    """Merge message batches into a deduplicated, indexed corpus.

    Set semantics: idempotent and order-independent. Duplicate keys collapse;
    when texts differ the realtime text wins and the conflict is logged. A key
    seen in any historical batch keeps source=historical (so source=realtime
    means realtime-only, which is what deletion diffing needs).
    """
    merged: dict[MessageKey, Message] = {}
    ranges: dict[str, dict[str, tuple[datetime, datetime]]] = {}
    for batch in batches:
        for msg in batch:
            chan_ranges = ranges.setdefault(msg.channel_id, {})
            lo, hi = chan_ranges.get(msg.source, (msg.timestamp, msg.timestamp))
            chan_ranges[msg.source] = (min(lo, msg.timestamp), max(hi, msg.timestamp))

            key = msg.key
            existing = merged.get(key)
            if existing is None:
                merged[key] = msg
                continue
            if existing.text != msg.text:
                winner = msg if msg.source == SOURCE_REALTIME else existing
                loser = existing if winner is msg else msg
                log.warning("conflict at %s: realtime text wins (%r over %r)",
                            key, winner.text[:40], loser.text[:40])
                existing.text = winner.text
            if existing.source != msg.source:
                existing.source = SOURCE_HISTORICAL
            for attr in ("account_id", "reply_to", "first_name", "last_name", "username"):
                if getattr(existing, attr) is None and getattr(msg, attr) is not None:
                    setattr(existing, attr, getattr(msg, attr))
    return Corpus(merged, ranges)


def overlap_window(corpus: Corpus, channel: str) -> tuple[datetime, datetime] | None:
    """[max of first timestamps, min of last timestamps] across the two feeds,
    or None when the channel lacks one of the feeds."""
    chan_ranges = corpus.feed_ranges.get(channel, {})
    hist = chan_ranges.get(SOURCE_HISTORICAL)
    real = chan_ranges.get(SOURCE_REALTIME)
    if hist is None or real is None:
        return None
    lo = max(hist[0], real[0])
    hi = min(hist[1], real[1])
    if lo > hi:
        raise DataError(f"channel {channel}: feeds do not overlap "
                        f"(historical {hist}, realtime {real})")
    return lo, hi


def diff_deleted(corpus: Corpus) -> dict[str, int]:
    """Mark deleted messages by diffing the feeds; returns per-channel counts.

    A message is deleted iff it is realtime-only, its timestamp falls inside
    the channel's overlap window, and (equivalently, by the merge source
    convention) its key never appeared in the historical feed.
    """
    counts: dict[str, int] = {}
    any_overlap = False
    for channel in corpus.channels():
        window = overlap_window(corpus, channel)
        if window is None:
            continue
        any_overlap = True
        lo, hi = window
        n = 0
        for key in corpus.by_channel[channel]:
            msg = corpus.messages[key]
            if msg.source == SOURCE_REALTIME and lo <= msg.timestamp <= hi:
                msg.deleted = True
                n += 1
        counts[channel] = n
    if not any_overlap:
        raise DataError("no channel carries both feeds; deletion ratios undefined")
    return counts


def build_accounts(corpus: Corpus) -> list[Account]:
    """Aggregate per-account statistics. Channel-owner posts (no account id)
    are skipped. Display names reflect the latest observed message."""
    accounts: dict[str, Account] = {}
    for msg in corpus.iter_messages():
        if msg.account_id is None:
            continue
        acct = accounts.get(msg.account_id)
        if acct is None:
            acct = accounts[msg.account_id] = Account(account_id=msg.account_id)
        acct.message_ids.append(msg.key)
        acct.channels_active.add(msg.channel_id)
        if acct.first_seen is None or msg.timestamp < acct.first_seen:
            acct.first_seen = msg.timestamp
        if acct.last_seen is None or msg.timestamp >= acct.last_seen:
            acct.last_seen = msg.timestamp
            acct.first_name = msg.first_name
            acct.last_name = msg.last_name
            acct.username = msg.username
    return [accounts[a] for a in sorted(accounts)]
