"""Account labeling: username heuristics and repeated-text label propagation.

Seed labels come from manual review; augmentation propagates them through
exact reuse of long texts until a fixed point. The manual false-positive
check is modeled as an operator-supplied exclusion list consulted before an
account's texts enter the shared pool.
"""

from __future__ import annotations

import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from . import wordlists
from .corpus import Corpus, normalize_text
from .errors import DataError

PROPAGANDA = "propaganda"
USER = "user"

PROVENANCE_SEED = "seed"
PROVENANCE_AUGMENTED = "augmented"
PROVENANCE_EXTERNAL = "external"


@dataclass(frozen=True)
class Label:
    label: str
    provenance: str
    iteration: int = 0


class LabelSet:
    """account_id → label with provenance. Seeds are never overwritten."""

    def __init__(self):
        self._labels: dict[str, Label] = {}

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, account_id: str) -> bool:
        return account_id in self._labels

    def get(self, account_id: str) -> Label | None:
        return self._labels.get(account_id)

    def label_of(self, account_id: str) -> str | None:
        entry = self._labels.get(account_id)
        return entry.label if entry else None

    def add(self, account_id: str, label: str, provenance: str, iteration: int = 0) -> None:
        if label not in (PROPAGANDA, USER):
            raise DataError(f"unknown label {label!r}")
        existing = self._labels.get(account_id)
        if existing is not None:
            if existing.provenance == PROVENANCE_SEED and provenance == PROVENANCE_AUGMENTED:
                raise DataError(f"augmentation may not overwrite seed label of {account_id}")
            if existing == Label(label, provenance, iteration):
                return
            raise DataError(f"conflicting relabel of {account_id}")
        self._labels[account_id] = Label(label, provenance, iteration)

    def accounts(self, label: str | None = None) -> list[str]:
        if label is None:
            return sorted(self._labels)
        return sorted(a for a, entry in self._labels.items() if entry.label == label)

    def items(self):
        return sorted(self._labels.items())

    def copy(self) -> "LabelSet":
        clone = LabelSet()
        clone._labels = dict(self._labels)
        return clone

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for account_id, entry in self.items():
                fh.write(json.dumps({
                    "account_id": account_id,
                    "label": entry.label,
                    "provenance": entry.provenance,
                    "iteration": entry.iteration,
                }, ensure_ascii=False, sort_keys=True))
                fh.write("\n")

    @classmethod
    def load_jsonl(cls, path) -> "LabelSet":
        labels = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                labels.add(rec["account_id"], rec["label"],
                           rec.get("provenance", PROVENANCE_EXTERNAL),
                           rec.get("iteration", 0))
        return labels


def load_exclusions(path) -> frozenset[str]:
    """Exclusion list: one account_id per line, '#' comments allowed."""
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh
                         if line.strip() and not line.startswith("#"))


@dataclass(frozen=True)
class PatternReport:
    is_western_name_number: bool
    dictionary_reference: bool
    username_hidden: bool


_WESTERN_RE = re.compile(r"^([A-Za-z]+)(?:[._-]([A-Za-z]+))?[._-]?([0-9]+)$")
_SUBSTITUTIONS = str.maketrans({"1": "i", "0": "o"})
_ALPHA_RUNS = re.compile(r"[^\W\d_]+", re.UNICODE)


def username_pattern(username: str | None) -> PatternReport:
    """Deterministic username heuristics.

    western-name_number: one or two words from the bundled western-name list,
    optionally separated, followed by digits ("John_Smith31"). dictionary
    reference: after 1→i / 0→o substitutions, any maximal alphabetic run of
    length ≥ 4 appears in the bundled English or Russian lists.
    """
    if not username:
        return PatternReport(False, False, True)

    names = wordlists.western_names()
    western = False
    m = _WESTERN_RE.match(username)
    if m:
        parts = [p for p in (m.group(1), m.group(2)) if p]
        # single blob may be CamelCased ("JohnSmith31")
        if len(parts) == 1:
            camel = re.findall(r"[A-Z][a-z]+", parts[0])
            if len(camel) > 1:
                parts = camel
        western = all(p.lower() in names for p in parts)

    substituted = username.translate(_SUBSTITUTIONS)
    english = wordlists.english_words()
    russian = wordlists.russian_words()
    dictionary = any(
        run.lower() in english or run.lower() in russian
        for run in _ALPHA_RUNS.findall(substituted)
        if len(run) >= 4
    )
    return PatternReport(western, dictionary, False)


@dataclass
class TextStats:
    text: str
    length: int
    occurrences: int
    accounts: int


def repetition_stats(corpus: Corpus, cohort: set[str] | None = None) -> list[TextStats]:
    """Exact-text repetition counts, optionally restricted to a cohort.

    Texts are NFC-normalized and trimmed; empty texts are skipped. Returns one
    record per distinct text, sorted by (length, text).
    """
    occurrences: Counter[str] = Counter()
    writers: defaultdict[str, set[str]] = defaultdict(set)
    for msg in corpus.iter_messages():
        if cohort is not None and msg.account_id not in cohort:
            continue
        text = normalize_text(msg.text)
        if not text:
            continue
        occurrences[text] += 1
        if msg.account_id is not None:
            writers[text].add(msg.account_id)
    return sorted(
        (TextStats(t, len(t), n, len(writers[t])) for t, n in occurrences.items()),
        key=lambda s: (s.length, s.text),
    )


def repetition_histogram(stats: list[TextStats], bucket: int = 10) -> dict[int, Counter]:
    """length-bucket → Counter(repetition count → number of texts)."""
    hist: dict[int, Counter] = {}
    for s in stats:
        b = (s.length // bucket) * bucket
        hist.setdefault(b, Counter())[s.occurrences] += 1
    return hist


@dataclass
class AugmentResult:
    labels: LabelSet
    iteration_counts: list[int] = field(default_factory=list)
    review: list[tuple[str, str]] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.iteration_counts)


def augment_labels(corpus: Corpus, seeds: LabelSet, min_len: int = 30,
                   exclusions: frozenset[str] = frozenset()) -> AugmentResult:
    """Fixed-point propagation of propaganda labels via exact long-text reuse.

    Pool = normalized texts with more than ``min_len`` characters written by
    labeled propaganda accounts. Any account that wrote a pooled text becomes
    propaganda and its long texts join the pool; repeat until nothing changes.
    Excluded accounts are never labeled and never feed the pool. Newly labeled
    accounts are returned with one matching text each for manual review.
    """
    if min_len < 1:
        raise DataError("min_len must be >= 1")
    seed_propaganda = set(seeds.accounts(PROPAGANDA))
    if not seed_propaganda:
        raise DataError("seed set contains no propaganda accounts")

    long_texts: defaultdict[str, set[str]] = defaultdict(set)   # account -> texts
    text_writers: defaultdict[str, set[str]] = defaultdict(set)  # text -> accounts
    for msg in corpus.iter_messages():
        if msg.account_id is None:
            continue
        text = normalize_text(msg.text)
        if len(text) > min_len:
            long_texts[msg.account_id].add(text)
            text_writers[text].add(msg.account_id)

    result = AugmentResult(labels=seeds.copy())
    labeled = set(seed_propaganda)
    pool: set[str] = set()
    frontier = [a for a in sorted(seed_propaganda) if a not in exclusions]
    for account in frontier:
        pool.update(long_texts.get(account, ()))

    new_texts = pool
    iteration = 0
    while new_texts:
        iteration += 1
        matched: dict[str, str] = {}
        for text in sorted(new_texts):
            for account in sorted(text_writers.get(text, ())):
                if account not in labeled and account not in exclusions:
                    matched.setdefault(account, text)
        if not matched:
            break
        result.iteration_counts.append(len(matched))
        next_texts: set[str] = set()
        for account in sorted(matched):
            labeled.add(account)
            result.labels.add(account, PROPAGANDA, PROVENANCE_AUGMENTED, iteration)
            result.review.append((account, matched[account]))
            next_texts.update(t for t in long_texts.get(account, ()) if t not in pool)
        pool.update(next_texts)
        new_texts = next_texts
    return result


@dataclass(frozen=True)
class ReactivityReport:
    fraction: float
    replies: int
    total: int
    indeterminate: int


def reactivity_flag(corpus: Corpus, account_id: str) -> ReactivityReport:
    """Fraction of an account's messages that are (resolvable) replies.

    Dangling replies are indeterminate (reply vs channel comment is not
    distinguishable) and are excluded from the denominator.
    """
    total = replies = indeterminate = 0
    for msg in corpus.iter_messages():
        if msg.account_id != account_id:
            continue
        total += 1
        if msg.reply_to is None:
            continue
        if msg.key in corpus.dangling:
            indeterminate += 1
        else:
            replies += 1
    if total == 0:
        raise DataError(f"account {account_id} has no messages")
    determinate = total - indeterminate
    fraction = replies / determinate if determinate else 0.0
    return ReactivityReport(fraction, replies, total, indeterminate)
