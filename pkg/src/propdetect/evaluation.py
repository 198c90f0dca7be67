"""Evaluation protocol: temporal split, class balancing, accuracy reports,
moderator baseline, error overlap, and cross-network validation.

Everything is reproducible from (corpus hash, seed, config): iteration orders
are sorted, sampling is seeded, and reports serialize deterministically.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .corpus import Corpus, MessageKey, format_timestamp, key_str
from .embeddings import hash_embed
from .errors import DataError
from .features import batch_extract, feature_schema_hash
from .labeling import PROPAGANDA, USER, LabelSet
from .models import (GBTParams, MLPParams, build_pair_vector, train_gbt,
                     train_mlp)
from .topics import TopicAssignment

DEFAULT_MIN_TOPIC_MESSAGES = 50


def corpus_hash(corpus: Corpus) -> str:
    """SHA-256 over the canonical message dump, for report provenance."""
    digest = hashlib.sha256()
    for msg in corpus.iter_messages():
        digest.update(json.dumps(msg.to_dict(), ensure_ascii=False,
                                 sort_keys=True).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def temporal_split(corpus: Corpus, cutoff: datetime) -> tuple[list[MessageKey], list[MessageKey]]:
    """Half-open split: train = [start, cutoff), test = [cutoff, end].

    Strict partition by message key; account overlap is permitted.
    """
    train, test = [], []
    for msg in corpus.iter_messages():
        (test if msg.timestamp >= cutoff else train).append(msg.key)
    return sorted(train), sorted(test)


def assert_no_leakage(corpus: Corpus, train: list[MessageKey],
                      test: list[MessageKey], cutoff: datetime) -> None:
    shared = set(train) & set(test)
    if shared:
        raise DataError(f"split leakage: {len(shared)} shared keys, e.g. {sorted(shared)[:3]}")
    for key in test:
        if corpus.messages[key].timestamp < cutoff:
            raise DataError(f"test message {key} predates cutoff")


def balance(examples: list, labels: list[str], seed: int = 0) -> list[int]:
    """Indices of a class-balanced subset (majority class downsampled with a
    seeded RNG). Returned indices are sorted."""
    if len(examples) != len(labels):
        raise DataError("examples and labels must align")
    by_class: dict[str, list[int]] = {}
    for i, lbl in enumerate(labels):
        by_class.setdefault(lbl, []).append(i)
    if not by_class:
        return []
    n = min(len(v) for v in by_class.values())
    rng = random.Random(seed)
    chosen: list[int] = []
    for lbl in sorted(by_class):
        idx = by_class[lbl]
        chosen.extend(idx if len(idx) == n else rng.sample(idx, n))
    return sorted(chosen)


@dataclass
class ModelEval:
    name: str
    overall_accuracy: float
    confusion: dict[str, int]                  # tp / fp / tn / fn, propaganda = positive
    per_topic: dict[str, dict]                 # topic -> {accuracy, n}
    new_topic_accuracy: float | None = None
    errors: list[str] = field(default_factory=list)  # misclassified message ids

    @property
    def false_positive_rate(self) -> float:
        negatives = self.confusion["fp"] + self.confusion["tn"]
        return self.confusion["fp"] / negatives if negatives else 0.0


def evaluate(name: str, scores: np.ndarray, keys: list[MessageKey],
             truth: list[str], assignment: TopicAssignment | None = None,
             threshold: float = 0.5,
             min_topic_messages: int = DEFAULT_MIN_TOPIC_MESSAGES) -> ModelEval:
    """Score one detector's outputs against message-level truth labels."""
    if not (len(scores) == len(keys) == len(truth)):
        raise DataError("scores, keys and truth must align")
    if len(keys) == 0:
        raise DataError("empty evaluation set")

    predicted = [PROPAGANDA if s >= threshold else USER for s in scores]
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    errors = []
    topic_hits: dict[str, list[int]] = {}
    for key, pred, actual in zip(keys, predicted, truth):
        correct = pred == actual
        if actual == PROPAGANDA:
            confusion["tp" if correct else "fn"] += 1
        else:
            confusion["tn" if correct else "fp"] += 1
        if not correct:
            errors.append(key_str(*key))
        if assignment is not None:
            topic = assignment.topic_of(key)
            if topic is not None:
                topic_hits.setdefault(topic, []).append(int(correct))

    per_topic = {
        t: {"accuracy": float(np.mean(hits)), "n": len(hits)}
        for t, hits in sorted(topic_hits.items())
        if len(hits) >= min_topic_messages
    }
    overall = (confusion["tp"] + confusion["tn"]) / len(keys)
    return ModelEval(name=name, overall_accuracy=overall, confusion=confusion,
                     per_topic=per_topic, errors=sorted(errors))


def new_topic_accuracy(keys: list[MessageKey], correct: list[bool],
                       assignment: TopicAssignment, unseen: set[str]) -> float | None:
    """Mean accuracy over messages whose topic is unseen in training; None
    when there are no such messages."""
    hits = [int(c) for key, c in zip(keys, correct)
            if assignment.topic_of(key) in unseen]
    return float(np.mean(hits)) if hits else None


def attach_new_topic_accuracy(result: ModelEval, keys: list[MessageKey],
                              assignment: TopicAssignment, unseen: set[str]) -> None:
    error_set = set(result.errors)
    correct = [key_str(*k) not in error_set for k in keys]
    result.new_topic_accuracy = new_topic_accuracy(keys, correct, assignment, unseen)


@dataclass
class ChannelModeration:
    channel: str
    labeled_propaganda: int
    deleted_propaganda: int
    labeled_total: int
    deleted_total: int

    @property
    def propaganda_moderation_ratio(self) -> float:
        return self.deleted_propaganda / self.labeled_propaganda if self.labeled_propaganda else 0.0

    @property
    def total_moderation_ratio(self) -> float:
        return self.deleted_total / self.labeled_total if self.labeled_total else 0.0

    @property
    def precision_proxy(self) -> float:
        """deleted-propaganda / deleted-total within labeled messages. A proxy:
        true moderator false positives are unknowable from deletions alone."""
        return self.deleted_propaganda / self.deleted_total if self.deleted_total else 0.0


def moderator_baseline(corpus: Corpus, labels: LabelSet) -> dict[str, ChannelModeration]:
    """Per-channel moderation ratios over labeled messages, using the deleted
    flags produced by diff_deleted."""
    out: dict[str, ChannelModeration] = {}
    for channel in corpus.channels():
        stats = ChannelModeration(channel, 0, 0, 0, 0)
        for key in corpus.by_channel[channel]:
            msg = corpus.messages[key]
            label = labels.label_of(msg.account_id) if msg.account_id else None
            if label is None:
                continue
            stats.labeled_total += 1
            if msg.deleted:
                stats.deleted_total += 1
            if label == PROPAGANDA:
                stats.labeled_propaganda += 1
                if msg.deleted:
                    stats.deleted_propaganda += 1
        out[channel] = stats
    return out


def error_overlap(error_sets: dict[str, set[str]]) -> dict[str, int]:
    """Pairwise and triple intersection sizes between per-model error sets.

    Keys are the model names joined with ' & ', sorted.
    """
    names = sorted(error_sets)
    out: dict[str, int] = {n: len(error_sets[n]) for n in names}
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            b = names[j]
            out[f"{a} & {b}"] = len(error_sets[a] & error_sets[b])
            for k in range(j + 1, len(names)):
                c = names[k]
                out[f"{a} & {b} & {c}"] = len(error_sets[a] & error_sets[b] & error_sets[c])
    return out


@dataclass
class EvalReport:
    models: dict[str, ModelEval]
    moderator: dict[str, ChannelModeration]
    parameters: dict
    seed: int
    corpus_digest: str
    cutoff: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "corpus_hash": self.corpus_digest,
            "cutoff": format_timestamp(self.cutoff) if self.cutoff else None,
            "parameters": self.parameters,
            "models": {
                name: {
                    "overall_accuracy": ev.overall_accuracy,
                    "new_topic_accuracy": ev.new_topic_accuracy,
                    "false_positive_rate": ev.false_positive_rate,
                    "confusion": ev.confusion,
                    "per_topic": ev.per_topic,
                    "error_count": len(ev.errors),
                }
                for name, ev in sorted(self.models.items())
            },
            "error_overlap": error_overlap(
                {name: set(ev.errors) for name, ev in self.models.items()}),
            "moderator": {
                ch: {
                    "labeled_propaganda": m.labeled_propaganda,
                    "deleted_propaganda": m.deleted_propaganda,
                    "propaganda_moderation_ratio": m.propaganda_moderation_ratio,
                    "total_moderation_ratio": m.total_moderation_ratio,
                    "precision_proxy": m.precision_proxy,
                }
                for ch, m in sorted(self.moderator.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2,
                          ensure_ascii=False) + "\n"

    def to_markdown(self) -> str:
        """Human-readable tables mirroring the detection/moderation layout."""
        lines = ["# Evaluation report", ""]
        lines.append("## Detection performance")
        lines.append("")
        lines.append("| Method | Overall Accuracy | New Topics Accuracy | FPR |")
        lines.append("| --- | --- | --- | --- |")
        for name, ev in sorted(self.models.items()):
            nta = f"{ev.new_topic_accuracy:.1%}" if ev.new_topic_accuracy is not None else "-"
            lines.append(f"| {name} | {ev.overall_accuracy:.1%} | {nta} "
                         f"| {ev.false_positive_rate:.1%} |")
        lines.append("")
        lines.append("## Moderation baseline")
        lines.append("")
        lines.append("| Channel | Labeled | Propaganda Moderation | Total Moderation | Precision proxy |")
        lines.append("| --- | --- | --- | --- | --- |")
        for ch, m in sorted(self.moderator.items()):
            lines.append(f"| {ch} | {m.labeled_total} | {m.propaganda_moderation_ratio:.1%} "
                         f"| {m.total_moderation_ratio:.1%} | {m.precision_proxy:.1%} |")
        lines.append("")
        lines.append("## Worst topics per detector")
        lines.append("")
        lines.append("| Method | Topic | Accuracy | Messages |")
        lines.append("| --- | --- | --- | --- |")
        for name, ev in sorted(self.models.items()):
            worst = sorted(ev.per_topic.items(), key=lambda kv: kv[1]["accuracy"])[:5]
            for topic, row in worst:
                lines.append(f"| {name} | {topic} | {row['accuracy']:.1%} | {row['n']} |")
        return "\n".join(lines) + "\n"


MODEL_NAMES = ("handcrafted", "reply-emb", "trigger-emb", "ensemble", "pair-emb")


@dataclass
class SuiteConfig:
    dim: int = 384
    seed: int = 0
    threshold: float = 0.5
    min_topic_messages: int = DEFAULT_MIN_TOPIC_MESSAGES
    gbt: GBTParams = field(default_factory=GBTParams)
    mlp: MLPParams = field(default_factory=lambda: MLPParams(epochs=50))
    h1: int = 256
    h2: int = 64

    def to_dict(self) -> dict:
        return {"dim": self.dim, "seed": self.seed, "threshold": self.threshold,
                "min_topic_messages": self.min_topic_messages,
                "gbt": self.gbt.to_dict(), "mlp": self.mlp.to_dict(),
                "h1": self.h1, "h2": self.h2}


@dataclass
class SuiteResult:
    report: EvalReport
    test_keys: list[MessageKey]
    test_truth: list[str]
    scores: dict[str, np.ndarray]
    unseen: set[str]
    models: dict[str, object]


def run_detector_suite(corpus: Corpus, labels: LabelSet,
                       assignment: TopicAssignment, cutoff: datetime,
                       cfg: SuiteConfig | None = None) -> SuiteResult:
    """Train the five detectors of the paper's protocol and evaluate them.

    The classification unit is the trigger-reply pair: detectors score reply
    messages whose trigger resolves (non-reply messages are context only,
    mirroring moderation of reply streams). Temporal split at ``cutoff``,
    balanced train and test sets, hash embeddings, and a deterministic
    EvalReport including the moderator baseline and error overlaps.
    """
    cfg = cfg or SuiteConfig()
    train_keys, test_keys = temporal_split(corpus, cutoff)
    assert_no_leakage(corpus, train_keys, test_keys, cutoff)

    def labeled(keys: list[MessageKey]) -> tuple[list[MessageKey], list[str]]:
        out_keys, out_truth = [], []
        for key in keys:
            account = corpus.messages[key].account_id
            label = labels.label_of(account) if account else None
            if label is not None and corpus.trigger_of(key) is not None:
                out_keys.append(key)
                out_truth.append(label)
        return out_keys, out_truth

    train_keys, train_truth = labeled(train_keys)
    test_keys, test_truth = labeled(test_keys)
    if not train_keys or not test_keys:
        raise DataError("temporal split left an empty labeled train or test set")

    train_idx = balance(train_keys, train_truth, seed=cfg.seed)
    test_idx = balance(test_keys, test_truth, seed=cfg.seed + 1)
    train_keys = [train_keys[i] for i in train_idx]
    train_truth = [train_truth[i] for i in train_idx]
    test_keys = [test_keys[i] for i in test_idx]
    test_truth = [test_truth[i] for i in test_idx]

    memo: dict[str, np.ndarray] = {}

    def embed(text: str) -> np.ndarray:
        vec = memo.get(text)
        if vec is None:
            vec = memo[text] = hash_embed(text, cfg.dim)
        return vec

    def matrices(keys: list[MessageKey]):
        msgs = [corpus.messages[k] for k in keys]
        trigs = [corpus.trigger_of(k) for k in keys]
        hand, _ = batch_extract(zip(msgs, trigs))
        reply = np.vstack([embed(m.text) for m in msgs])
        zero = np.zeros(cfg.dim, dtype=np.float32)
        trig = np.vstack([embed(t.text) if t is not None else zero for t in trigs])
        pair = np.vstack([build_pair_vector(None if t is None else embed(t.text),
                                            embed(m.text))
                          for m, t in zip(msgs, trigs)])
        return hand, reply, trig, pair

    hand_tr, reply_tr, trig_tr, pair_tr = matrices(train_keys)
    hand_te, reply_te, trig_te, pair_te = matrices(test_keys)
    y_tr = np.array([1.0 if t == PROPAGANDA else 0.0 for t in train_truth])

    gbt = train_gbt(hand_tr, y_tr, cfg.gbt, feature_schema_hash=feature_schema_hash())
    mlp_reply = train_mlp(reply_tr, y_tr, cfg.h1, cfg.h2, cfg.mlp,
                          input_kind="reply-emb", embedding_dim=cfg.dim)
    mlp_trig = train_mlp(trig_tr, y_tr, cfg.h1, cfg.h2, cfg.mlp,
                         input_kind="trigger-emb", embedding_dim=cfg.dim)
    mlp_pair = train_mlp(pair_tr, y_tr, cfg.h1, cfg.h2, cfg.mlp,
                         input_kind="pair-emb", embedding_dim=cfg.dim)

    scores = {
        "handcrafted": gbt.predict(hand_te),
        "reply-emb": mlp_reply.predict(reply_te),
        "trigger-emb": mlp_trig.predict(trig_te),
        "pair-emb": mlp_pair.predict(pair_te),
    }
    # rounded-sum ensemble: mean of the two scores against 0.5 is exactly
    # "p_trigger + p_reply >= 1", ties to propaganda
    scores["ensemble"] = (scores["trigger-emb"] + scores["reply-emb"]) / 2.0

    train_topics = {assignment.topic_of(k) for k in train_keys} - {None}
    test_topics = {assignment.topic_of(k) for k in test_keys} - {None}
    unseen = test_topics - train_topics

    evals: dict[str, ModelEval] = {}
    for name in MODEL_NAMES:
        ev = evaluate(name, scores[name], test_keys, test_truth, assignment,
                      threshold=cfg.threshold,
                      min_topic_messages=cfg.min_topic_messages)
        attach_new_topic_accuracy(ev, test_keys, assignment, unseen)
        evals[name] = ev

    report = EvalReport(
        models=evals,
        moderator=moderator_baseline(corpus, labels),
        parameters=cfg.to_dict(),
        seed=cfg.seed,
        corpus_digest=corpus_hash(corpus),
        cutoff=cutoff,
    )
    models = {"handcrafted": gbt, "reply-emb": mlp_reply,
              "trigger-emb": mlp_trig, "pair-emb": mlp_pair}
    return SuiteResult(report=report, test_keys=test_keys, test_truth=test_truth,
                       scores=scores, unseen=unseen, models=models)


def cross_network_eval(models: dict, corpus: Corpus, labels: LabelSet,
                       cfg: SuiteConfig | None = None) -> dict[str, ModelEval]:
    """Score already-trained detectors on a second network's balanced corpus."""
    cfg = cfg or SuiteConfig()
    keys, truth = [], []
    for msg in corpus.iter_messages():
        label = labels.label_of(msg.account_id) if msg.account_id else None
        if label is not None and corpus.trigger_of(msg.key) is not None:
            keys.append(msg.key)
            truth.append(label)
    if not keys:
        raise DataError("external corpus carries no labeled messages")
    idx = balance(keys, truth, seed=cfg.seed)
    keys = [keys[i] for i in idx]
    truth = [truth[i] for i in idx]

    memo: dict[str, np.ndarray] = {}

    def embed(text: str) -> np.ndarray:
        vec = memo.get(text)
        if vec is None:
            vec = memo[text] = hash_embed(text, cfg.dim)
        return vec

    msgs = [corpus.messages[k] for k in keys]
    trigs = [corpus.trigger_of(k) for k in keys]
    hand, _ = batch_extract(zip(msgs, trigs))
    reply = np.vstack([embed(m.text) for m in msgs])
    zero = np.zeros(cfg.dim, dtype=np.float32)
    trig = np.vstack([embed(t.text) if t is not None else zero for t in trigs])
    pair = np.vstack([build_pair_vector(None if t is None else embed(t.text),
                                        embed(m.text))
                      for m, t in zip(msgs, trigs)])
    scores = {
        "handcrafted": models["handcrafted"].predict(hand),
        "reply-emb": models["reply-emb"].predict(reply),
        "trigger-emb": models["trigger-emb"].predict(trig),
        "pair-emb": models["pair-emb"].predict(pair),
    }
    scores["ensemble"] = (scores["trigger-emb"] + scores["reply-emb"]) / 2.0
    return {name: evaluate(name, s, keys, truth, threshold=cfg.threshold)
            for name, s in scores.items()}
