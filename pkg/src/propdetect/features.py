"""Handcrafted per-message features for the metadata-based detector.

Eight features per message: length, word count, URL count, emoji count,
exclamation and question marks, time-of-day, and reply latency against the
trigger message (sentinel -1 when there is no trigger).

Emoji counting uses a frozen set of Unicode ranges:

    U+1F300-U+1F5FF  Miscellaneous Symbols and Pictographs
    U+1F600-U+1F64F  Emoticons
    U+1F680-U+1F6FF  Transport and Map Symbols
    U+1F900-U+1F9FF  Supplemental Symbols and Pictographs
    U+2605 (star) and U+2665 (heart) singletons
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from .corpus import Message
from .errors import DataError

FEATURE_NAMES = (
    "msg_length",
    "word_count",
    "url_count",
    "emoji_count",
    "exclamation_count",
    "question_count",
    "msg_time_of_day",
    "reply_latency",
)

SCHEMA_VERSION = 1

NO_TRIGGER_LATENCY = -1.0

_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x2605, 0x2605),
    (0x2665, 0x2665),
)

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)


def feature_schema_hash() -> str:
    blob = f"v{SCHEMA_VERSION}:" + ",".join(FEATURE_NAMES)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


@dataclass(frozen=True)
class FeatureVector:
    msg_length: int
    word_count: int
    url_count: int
    emoji_count: int
    exclamation_count: int
    question_count: int
    msg_time_of_day: float
    reply_latency: float

    def as_array(self) -> np.ndarray:
        return np.array([
            self.msg_length, self.word_count, self.url_count, self.emoji_count,
            self.exclamation_count, self.question_count, self.msg_time_of_day,
            self.reply_latency,
        ], dtype=np.float64)


def extract(message: Message, trigger: Message | None = None,
            time_mode: str = "midnight") -> FeatureVector:
    """Compute the eight features for one message.

    ``time_mode`` selects the time feature: seconds since UTC midnight
    (default, captures diurnal patterns) or raw epoch seconds.
    """
    text = message.text
    ts = message.timestamp
    if time_mode == "midnight":
        time_of_day = float(ts.hour * 3600 + ts.minute * 60 + ts.second)
    elif time_mode == "epoch":
        time_of_day = ts.timestamp()
    else:
        raise DataError(f"unknown time_mode {time_mode!r}")

    if trigger is None:
        latency = NO_TRIGGER_LATENCY
    else:
        delta = (message.timestamp - trigger.timestamp).total_seconds()
        if delta < 0:
            raise DataError(
                f"trigger {trigger.key} is later than reply {message.key}")
        latency = float(int(delta))

    return FeatureVector(
        msg_length=len(text),
        word_count=len(_WORD_RE.findall(text)),
        url_count=len(_URL_RE.findall(text)),
        emoji_count=sum(1 for ch in text if _is_emoji(ch)),
        exclamation_count=text.count("!"),
        question_count=text.count("?"),
        msg_time_of_day=time_of_day,
        reply_latency=latency,
    )


def batch_extract(pairs, time_mode: str = "midnight") -> tuple[np.ndarray, dict]:
    """pairs: iterable of (message, trigger-or-None). Returns (n x 8 matrix,
    schema descriptor). Row order follows input order."""
    rows = [extract(msg, trig, time_mode).as_array() for msg, trig in pairs]
    matrix = np.vstack(rows) if rows else np.empty((0, len(FEATURE_NAMES)))
    schema = {
        "names": list(FEATURE_NAMES),
        "version": SCHEMA_VERSION,
        "hash": feature_schema_hash(),
        "time_mode": time_mode,
    }
    return matrix, schema


def dump_features_csv(matrix: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(FEATURE_NAMES) + "\n")
        for row in matrix:
            fh.write(",".join(format(v, "g") for v in row) + "\n")
