"""Model files: JSON envelope with base64 little-endian float32 weight blobs."""

from __future__ import annotations

import base64
import json

import numpy as np

from ..errors import FormatError, SchemaMismatchError
from .gbt import GBTModel, GBTParams, Tree, TreeNode
from .mlp import MLPModel, MLPParams

FORMAT_VERSION = 1


def _encode_f32(arr: np.ndarray) -> str:
    return base64.b64encode(np.asarray(arr, dtype="<f4").tobytes()).decode("ascii")


def _decode_f32(blob: str, shape=None) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(blob), dtype="<f4").astype(np.float32)
    return arr.reshape(shape) if shape is not None else arr


def save_model(model, path) -> None:
    if isinstance(model, GBTModel):
        doc = {
            "kind": "gbt",
            "version": FORMAT_VERSION,
            "feature_schema_hash": model.feature_schema_hash,
            "parameters": model.params.to_dict(),
            "lr": model.lr,
            "base_score": model.base_score,
            "train_loss": model.train_loss,
            "trees": [
                {
                    "feature": [n.feature for n in t.nodes],
                    "left": [n.left for n in t.nodes],
                    "right": [n.right for n in t.nodes],
                    "threshold": _encode_f32([n.threshold for n in t.nodes]),
                    "value": _encode_f32([n.value for n in t.nodes]),
                }
                for t in model.trees
            ],
        }
    elif isinstance(model, MLPModel):
        doc = {
            "kind": "mlp",
            "version": FORMAT_VERSION,
            "input_kind": model.input_kind,
            "embedding_dim": model.embedding_dim,
            "sizes": model.sizes,
            "parameters": model.params.to_dict(),
            "train_loss": model.train_loss,
            "weights": [_encode_f32(w) for w in model.weights],
            "biases": [_encode_f32(b) for b in model.biases],
        }
    else:
        raise FormatError(f"cannot serialize {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path, expect_schema_hash: str | None = None,
               expect_embedding_dim: int | None = None):
    """Load a model file; optional expectations guard train/infer mismatches."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not a model file: {exc}")
    kind = doc.get("kind")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')}")

    if kind == "gbt":
        model = GBTModel(
            trees=[],
            lr=float(doc["lr"]),
            base_score=float(doc["base_score"]),
            feature_schema_hash=doc.get("feature_schema_hash", ""),
            params=GBTParams(**doc.get("parameters", {})),
            train_loss=list(doc.get("train_loss", [])),
        )
        for td in doc["trees"]:
            thresholds = _decode_f32(td["threshold"])
            values = _decode_f32(td["value"])
            nodes = [
                TreeNode(feature=f, threshold=float(t), left=l, right=r, value=float(v))
                for f, t, l, r, v in zip(td["feature"], thresholds,
                                         td["left"], td["right"], values)
            ]
            model.trees.append(Tree(nodes=nodes))
        if expect_schema_hash is not None and model.feature_schema_hash != expect_schema_hash:
            raise SchemaMismatchError(
                f"{path}: trained on schema {model.feature_schema_hash}, "
                f"inference expects {expect_schema_hash}")
        return model

    if kind == "mlp":
        sizes = [int(s) for s in doc["sizes"]]
        weights = [_decode_f32(blob, (sizes[i], sizes[i + 1]))
                   for i, blob in enumerate(doc["weights"])]
        biases = [_decode_f32(blob, (sizes[i + 1],))
                  for i, blob in enumerate(doc["biases"])]
        model = MLPModel(
            sizes=sizes, weights=weights, biases=biases,
            input_kind=doc.get("input_kind", "generic"),
            embedding_dim=int(doc.get("embedding_dim", 0)),
            params=MLPParams(**doc.get("parameters", {})),
            train_loss=list(doc.get("train_loss", [])),
        )
        if expect_embedding_dim is not None and model.embedding_dim != expect_embedding_dim:
            raise SchemaMismatchError(
                f"{path}: trained for embedding dim {model.embedding_dim}, "
                f"inference expects {expect_embedding_dim}")
        return model

    raise FormatError(f"{path}: unknown model kind {kind!r}")
