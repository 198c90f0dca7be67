"""Detector families: boosted trees on handcrafted features, MLPs on reply /
trigger / concatenated-pair embeddings, and the rounded-sum ensemble."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .gbt import GBTModel, GBTParams, train_gbt
from .mlp import MLPModel, MLPParams, grad_check, init_mlp, train_mlp
from .serialize import load_model, save_model

PROPAGANDA = "propaganda"
USER = "user"

__all__ = [
    "GBTModel", "GBTParams", "train_gbt",
    "MLPModel", "MLPParams", "train_mlp", "init_mlp", "grad_check",
    "save_model", "load_model",
    "Verdict", "ensemble_predict", "build_pair_vector", "build_pair_matrix",
    "PROPAGANDA", "USER",
]


@dataclass(frozen=True)
class Verdict:
    score: float
    label: str
    model_id: str
    threshold: float

    @classmethod
    def from_score(cls, score: float, threshold: float, model_id: str) -> "Verdict":
        label = PROPAGANDA if score >= threshold else USER
        return cls(score=float(score), label=label, model_id=model_id,
                   threshold=threshold)


def ensemble_predict(p_trigger: float, p_reply: float, mode: str = "sum") -> str:
    """Combine trigger-side and reply-side detector scores into one label.

    Default ("sum"): propaganda iff the score sum rounds to >= 1, i.e.
    p_trigger + p_reply >= 1.0, with the tie at exactly 1.0 going to
    propaganda. Alternative ("or"): binarize each at 0.5, OR the outcomes.
    """
    if mode == "sum":
        return PROPAGANDA if p_trigger + p_reply >= 1.0 else USER
    if mode == "or":
        return PROPAGANDA if (p_trigger >= 0.5 or p_reply >= 0.5) else USER
    raise DataError(f"unknown ensemble mode {mode!r}")


def build_pair_vector(trigger_vec: np.ndarray | None, reply_vec: np.ndarray) -> np.ndarray:
    """[trigger ‖ reply] concatenation; a missing trigger contributes zeros."""
    reply = np.asarray(reply_vec, dtype=np.float32)
    if trigger_vec is None:
        trigger = np.zeros_like(reply)
    else:
        trigger = np.asarray(trigger_vec, dtype=np.float32)
        if trigger.shape != reply.shape:
            raise DataError(f"trigger shape {trigger.shape} != reply shape {reply.shape}")
    return np.concatenate([trigger, reply])


def build_pair_matrix(pairs) -> np.ndarray:
    """pairs: iterable of (trigger_vec_or_None, reply_vec) → stacked matrix."""
    rows = [build_pair_vector(t, r) for t, r in pairs]
    if not rows:
        raise DataError("no pairs given")
    return np.vstack(rows)
