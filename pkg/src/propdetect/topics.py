"""Topic clustering over message embeddings plus keyword-rule augmentation.

DBSCAN groups embedded messages by density; operator-supplied keyword rules
then sweep leftover noise messages into named topics. Timelines and longevity
summarize how topics come and go.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .corpus import Corpus, MessageKey, key_str, split_key
from .errors import DataError

NOISE = -1

PROVENANCE_DENSITY = "density-cluster"
PROVENANCE_KEYWORD = "keyword-rule"


def _pairwise_distances(x: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        sq = np.sum(x * x, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        return np.sqrt(np.maximum(d2, 0.0))
    if metric == "cosine-distance":
        norms = np.linalg.norm(x, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        unit = x / safe[:, None]
        sim = np.clip(unit @ unit.T, -1.0, 1.0)
        dist = 1.0 - sim
        # zero-norm vectors are maximally distant from everything
        zero = norms == 0.0
        dist[zero, :] = 1.0
        dist[:, zero] = 1.0
        return dist
    raise DataError(f"unknown metric {metric!r}")


def dbscan(vectors: np.ndarray, eps: float, min_pts: int,
           metric: str = "euclidean") -> np.ndarray:
    """Classic DBSCAN; returns an int label per row, -1 for noise.

    Core point: at least ``min_pts`` neighbors within ``eps`` (inclusive,
    counting itself). Clusters are numbered 0,1,... in order of discovery
    scanning rows in index order; border points join the first cluster that
    reaches them, which is the lowest cluster id among their core neighbors.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("vectors must be a 2-D array")
    if eps <= 0:
        raise DataError("eps must be positive")
    if min_pts < 1:
        raise DataError("min_pts must be >= 1")

    n = x.shape[0]
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels

    dist = _pairwise_distances(x, metric)
    neighbor_lists = [np.nonzero(dist[i] <= eps)[0] for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbor_lists])

    assigned = np.zeros(n, dtype=bool)
    cluster = 0
    for start in range(n):
        if assigned[start] or not core[start]:
            continue
        labels[start] = cluster
        assigned[start] = True
        queue = list(neighbor_lists[start])
        head = 0
        while head < len(queue):
            p = queue[head]
            head += 1
            if assigned[p]:
                continue
            labels[p] = cluster
            assigned[p] = True
            if core[p]:
                queue.extend(neighbor_lists[p])
        cluster += 1
    return labels


@dataclass
class TopicAssignment:
    """message key → (topic id, provenance). Unassigned messages are noise."""

    assignments: dict[MessageKey, tuple[str, str]] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)  # topic id -> human label

    def topic_of(self, key: MessageKey) -> str | None:
        entry = self.assignments.get(key)
        return entry[0] if entry else None

    def assign(self, key: MessageKey, topic: str, provenance: str) -> None:
        existing = self.assignments.get(key)
        if existing is not None and existing[1] == PROVENANCE_DENSITY \
                and provenance == PROVENANCE_KEYWORD:
            return  # keyword rules only claim noise messages
        self.assignments[key] = (topic, provenance)

    def topics(self) -> set[str]:
        return {t for t, _ in self.assignments.values()}

    def messages_of(self, topic: str) -> list[MessageKey]:
        return sorted(k for k, (t, _) in self.assignments.items() if t == topic)

    def __len__(self) -> int:
        return len(self.assignments)

    def copy(self) -> "TopicAssignment":
        return TopicAssignment(dict(self.assignments), dict(self.labels))

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self.assignments):
                topic, provenance = self.assignments[key]
                fh.write(json.dumps({
                    "message_id": key_str(*key),
                    "topic": topic,
                    "provenance": provenance,
                }, ensure_ascii=False, sort_keys=True))
                fh.write("\n")

    @classmethod
    def load_jsonl(cls, path) -> "TopicAssignment":
        assignment = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                assignment.assignments[split_key(rec["message_id"])] = (
                    rec["topic"], rec.get("provenance", PROVENANCE_DENSITY))
        return assignment


def cluster_messages(keys: list[MessageKey], vectors: np.ndarray, eps: float = 0.35,
                     min_pts: int = 5, metric: str = "cosine-distance") -> TopicAssignment:
    """Run DBSCAN over per-message vectors and build a TopicAssignment.

    Density clusters are named ``c0``, ``c1``, ... in discovery order; noise
    messages stay unassigned.
    """
    if len(keys) != len(vectors):
        raise DataError("keys and vectors length mismatch")
    labels = dbscan(vectors, eps, min_pts, metric)
    assignment = TopicAssignment()
    for key, label in zip(keys, labels):
        if label != NOISE:
            assignment.assign(key, f"c{label}", PROVENANCE_DENSITY)
    return assignment


@dataclass(frozen=True)
class KeywordRule:
    keywords: tuple[str, ...]
    topic: str


def load_rules(path) -> list[KeywordRule]:
    """Rules file: JSON list of {"keywords": [...], "topic": "name"}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise DataError("rules file must be a JSON list")
    return [KeywordRule(tuple(r["keywords"]), r["topic"]) for r in raw]


def keyword_augment(assignment: TopicAssignment, corpus: Corpus,
                    rules: list[KeywordRule]) -> TopicAssignment:
    """Assign noise messages to topics by case-insensitive substring match.

    First matching rule wins; density-cluster assignments are never replaced.
    """
    out = assignment.copy()
    for msg in corpus.iter_messages():
        if msg.key in out.assignments:
            continue
        text = msg.text.lower()
        for rule in rules:
            if any(kw.lower() in text for kw in rule.keywords):
                out.assign(msg.key, rule.topic, PROVENANCE_KEYWORD)
                break
    return out


def topic_timeline(corpus: Corpus, assignment: TopicAssignment,
                   bin_days: int = 1) -> dict[str, dict]:
    """Per-topic counts per UTC calendar bin (default daily)."""
    timeline: defaultdict[str, defaultdict] = defaultdict(lambda: defaultdict(int))
    for key, (topic, _) in assignment.assignments.items():
        msg = corpus.get(key)
        if msg is None:
            continue
        day = msg.timestamp.date()
        if bin_days > 1:
            day = day - timedelta(days=day.toordinal() % bin_days)
        timeline[topic][day] += 1
    return {t: dict(bins) for t, bins in timeline.items()}


def dump_timeline_csv(timeline: dict[str, dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,topic,count\n")
        for topic in sorted(timeline):
            for day in sorted(timeline[topic]):
                fh.write(f"{day.isoformat()},{topic},{timeline[topic][day]}\n")


def topic_longevity(timeline: dict[str, dict]) -> dict[str, int]:
    """Days between first and last nonzero bin per topic.

    A one-day topic scores 0 (read as one active calendar day).
    """
    out = {}
    for topic, bins in timeline.items():
        days = [d for d, n in bins.items() if n > 0]
        out[topic] = (max(days) - min(days)).days if days else 0
    return out


def unseen_topics(train: TopicAssignment, test: TopicAssignment) -> set[str]:
    """Topic ids present in the test assignment but absent from training."""
    return test.topics() - train.topics()
