"""Gradient-boosted regression trees with logistic loss, built with numpy.

Second-order boosting: each round fits a tree to the gradient/hessian of the
logistic loss, with XGBoost-style gain and Newton leaf values. Exact greedy
splits over sorted feature values; deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError


@dataclass
class TreeNode:
    feature: int = -1          # -1 marks a leaf
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    value: float = 0.0         # leaf output


@dataclass
class Tree:
    nodes: list[TreeNode] = field(default_factory=list)

    def predict_one(self, x: np.ndarray) -> float:
        i = 0
        node = self.nodes[i]
        while node.feature >= 0:
            i = node.left if x[node.feature] < node.threshold else node.right
            node = self.nodes[i]
        return node.value

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in X])


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


@dataclass
class GBTParams:
    trees: int = 200
    depth: int = 4
    lr: float = 0.1
    min_child: int = 5         # minimum samples per child
    reg_lambda: float = 1.0
    seed: int = 0              # reserved for subsampling variants

    def to_dict(self) -> dict:
        return {"trees": self.trees, "depth": self.depth, "lr": self.lr,
                "min_child": self.min_child, "reg_lambda": self.reg_lambda,
                "seed": self.seed}


@dataclass
class GBTModel:
    trees: list[Tree]
    lr: float
    base_score: float          # raw (pre-sigmoid) initial prediction
    feature_schema_hash: str
    params: GBTParams
    train_loss: list[float] = field(default_factory=list)

    @property
    def kind(self) -> str:
        return "gbt"

    def raw_predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            out += self.lr * tree.predict(X)
        return out

    def predict(self, X) -> np.ndarray:
        """Probability of the positive class, per row."""
        return _sigmoid(self.raw_predict(X))


def _build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, params: GBTParams) -> Tree:
    lam = params.reg_lambda
    tree = Tree()

    def leaf(idx: np.ndarray) -> int:
        value = -g[idx].sum() / (h[idx].sum() + lam)
        # stored as float32 on disk; keep memory identical for exact round-trips
        tree.nodes.append(TreeNode(value=float(np.float32(value))))
        return len(tree.nodes) - 1

    def best_split(idx: np.ndarray):
        G, H = g[idx].sum(), h[idx].sum()
        parent = G * G / (H + lam)
        best = (0.0, -1, 0.0)  # gain, feature, threshold
        for f in range(X.shape[1]):
            values = X[idx, f]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            gc = np.cumsum(g[idx][order])
            hc = np.cumsum(h[idx][order])
            # candidate split after position k (1-based size of left child)
            ks = np.nonzero(sv[:-1] < sv[1:])[0] + 1
            if len(ks) == 0:
                continue
            ks = ks[(ks >= params.min_child) & (len(idx) - ks >= params.min_child)]
            if len(ks) == 0:
                continue
            gl, hl = gc[ks - 1], hc[ks - 1]
            gr, hr = G - gl, H - hl
            gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            k_best = int(np.argmax(gains))
            if gains[k_best] > best[0] + 1e-12:
                k = ks[k_best]
                thr = 0.5 * (sv[k - 1] + sv[k])
                best = (float(gains[k_best]), f, float(np.float32(thr)))
        return best

    def grow(idx: np.ndarray, depth: int) -> int:
        if depth >= params.depth or len(idx) < 2 * params.min_child:
            return leaf(idx)
        gain, f, thr = best_split(idx)
        if f < 0 or gain <= 1e-12:
            return leaf(idx)
        mask = X[idx, f] < thr
        node_pos = len(tree.nodes)
        tree.nodes.append(TreeNode(feature=f, threshold=thr))
        tree.nodes[node_pos].left = grow(idx[mask], depth + 1)
        tree.nodes[node_pos].right = grow(idx[~mask], depth + 1)
        return node_pos

    grow(np.arange(len(g)), 0)
    return tree


def train_gbt(X, y, params: GBTParams | None = None,
              feature_schema_hash: str = "") -> GBTModel:
    """Fit boosted trees on a binary-labeled feature matrix.

    Training log-loss is recorded per round (it must never increase; the
    invariant is asserted in tests).
    """
    params = params or GBTParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("X must be 2-D and aligned with y")
    if len(y) < 2:
        raise DataError("need at least two examples")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise DataError("labels must be 0/1")
    if len(classes) < 2:
        raise DataError("both classes must be present")

    mean = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    base = float(np.log(mean / (1 - mean)))
    raw = np.full(len(y), base)
    model = GBTModel(trees=[], lr=params.lr, base_score=base,
                     feature_schema_hash=feature_schema_hash, params=params)
    model.train_loss.append(_log_loss(y, _sigmoid(raw)))
    for _ in range(params.trees):
        p = _sigmoid(raw)
        g = p - y
        h = np.maximum(p * (1 - p), 1e-16)
        tree = _build_tree(X, g, h, params)
        raw += params.lr * tree.predict(X)
        model.trees.append(tree)
        model.train_loss.append(_log_loss(y, _sigmoid(raw)))
    return model
