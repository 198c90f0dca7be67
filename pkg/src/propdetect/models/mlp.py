"""Feedforward classifier: two ReLU hidden layers, sigmoid output, Adam.

Pure numpy. Training is seeded and single-threaded, so identical inputs give
bitwise-identical weights. Weights are stored float32 (the on-disk format);
forward/backward math runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

INPUT_KINDS = ("reply-emb", "trigger-emb", "pair-emb", "generic")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _bce(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


@dataclass
class MLPParams:
    epochs: int = 30
    batch: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def to_dict(self) -> dict:
        return {"epochs": self.epochs, "batch": self.batch, "lr": self.lr,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "seed": self.seed}


@dataclass
class MLPModel:
    sizes: list[int]                   # [in, h1, h2, 1]
    weights: list[np.ndarray]          # float32, shape (fan_in, fan_out)
    biases: list[np.ndarray]           # float32, shape (fan_out,)
    input_kind: str = "generic"
    embedding_dim: int = 0
    params: MLPParams = field(default_factory=MLPParams)
    train_loss: list[float] = field(default_factory=list)

    @property
    def kind(self) -> str:
        return "mlp"

    def forward(self, X: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if a.shape[1] != self.sizes[0]:
            raise DataError(f"input width {a.shape[1]} != model input {self.sizes[0]}")
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.astype(np.float64) + b.astype(np.float64)
            a = _sigmoid(z) if i == n_layers - 1 else np.maximum(z, 0.0)
        return a[:, 0]

    def predict(self, X) -> np.ndarray:
        return self.forward(X)


def init_mlp(input_size: int, h1: int = 256, h2: int = 64, seed: int = 0,
             input_kind: str = "generic", embedding_dim: int = 0) -> MLPModel:
    """Scaled-uniform (Glorot) init, zero biases, seeded."""
    if input_kind not in INPUT_KINDS:
        raise DataError(f"unknown input kind {input_kind!r}")
    rng = np.random.default_rng(seed)
    sizes = [input_size, h1, h2, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)).astype(np.float32))
        biases.append(np.zeros(fan_out, dtype=np.float32))
    return MLPModel(sizes=sizes, weights=weights, biases=biases,
                    input_kind=input_kind, embedding_dim=embedding_dim)


def _forward_full(weights, biases, X):
    """Forward pass keeping pre-activations and activations for backprop."""
    a = X
    zs, activations = [], [X]
    n_layers = len(weights)
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        zs.append(z)
        a = _sigmoid(z) if i == n_layers - 1 else np.maximum(z, 0.0)
        activations.append(a)
    return zs, activations


def _gradients(weights, biases, X, y):
    """Mean cross-entropy gradients for a batch; returns (loss, dWs, dbs)."""
    n = len(X)
    zs, acts = _forward_full(weights, biases, X)
    p = acts[-1][:, 0]
    loss = _bce(y, p)
    delta = ((p - y) / n)[:, None]          # dL/dz for the sigmoid+BCE output
    dWs = [None] * len(weights)
    dbs = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        dWs[layer] = acts[layer].T @ delta
        dbs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (zs[layer - 1] > 0.0)
    return loss, dWs, dbs


def train_mlp(X, y, h1: int = 256, h2: int = 64,
              params: MLPParams | None = None,
              input_kind: str = "generic", embedding_dim: int = 0) -> MLPModel:
    """Train on 0/1 labels with mini-batch Adam; loss must end below start."""
    params = params or MLPParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("X must be 2-D and aligned with y")
    if len(y) < 2:
        raise DataError("need at least two examples")
    if len(np.unique(y)) < 2:
        raise DataError("both classes must be present")

    model = init_mlp(X.shape[1], h1, h2, seed=params.seed,
                     input_kind=input_kind, embedding_dim=embedding_dim)
    model.params = params
    weights = [w.astype(np.float64) for w in model.weights]
    biases = [b.astype(np.float64) for b in model.biases]

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]

    rng = np.random.default_rng(params.seed + 1)
    step = 0
    model.train_loss.append(_bce(y, _forward_full(weights, biases, X)[1][-1][:, 0]))
    for _ in range(params.epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), params.batch):
            batch = order[start:start + params.batch]
            _, dWs, dbs = _gradients(weights, biases, X[batch], y[batch])
            step += 1
            bc1 = 1.0 - params.beta1 ** step
            bc2 = 1.0 - params.beta2 ** step
            for i in range(len(weights)):
                m_w[i] = params.beta1 * m_w[i] + (1 - params.beta1) * dWs[i]
                v_w[i] = params.beta2 * v_w[i] + (1 - params.beta2) * dWs[i] ** 2
                weights[i] -= params.lr * (m_w[i] / bc1) / (np.sqrt(v_w[i] / bc2) + params.eps)
                m_b[i] = params.beta1 * m_b[i] + (1 - params.beta1) * dbs[i]
                v_b[i] = params.beta2 * v_b[i] + (1 - params.beta2) * dbs[i] ** 2
                biases[i] -= params.lr * (m_b[i] / bc1) / (np.sqrt(v_b[i] / bc2) + params.eps)
        model.train_loss.append(_bce(y, _forward_full(weights, biases, X)[1][-1][:, 0]))

    model.weights = [w.astype(np.float32) for w in weights]
    model.biases = [b.astype(np.float32) for b in biases]
    return model


def grad_check(model: MLPModel, x, y, h: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks every weight and bias coordinate at the model's current point for
    one (x, y) pair (or a small batch). Coordinates whose perturbation flips a
    ReLU activation are excluded: the loss is only piecewise smooth, and a
    central difference spanning two linear pieces says nothing about the
    gradient code. Such crossings are measure-zero in the parameters but do
    occur over many random draws.
    """
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    weights = [w.astype(np.float64) for w in model.weights]
    biases = [b.astype(np.float64) for b in model.biases]

    _, dWs, dbs = _gradients(weights, biases, X, y_arr)

    def probe():
        zs, acts = _forward_full(weights, biases, X)
        masks = tuple((z > 0.0).tobytes() for z in zs[:-1])
        return _bce(y_arr, acts[-1][:, 0]), masks

    worst = 0.0
    for arrays, grads in ((weights, dWs), (biases, dbs)):
        for arr, grad in zip(arrays, grads):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up, mask_up = probe()
                flat[i] = orig - h
                down, mask_down = probe()
                flat[i] = orig
                if mask_up != mask_down:
                    continue
                numeric = (up - down) / (2 * h)
                denom = max(abs(gflat[i]), abs(numeric), 1e-6)
                worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
