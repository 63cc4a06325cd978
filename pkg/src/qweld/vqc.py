"""Four-qubit variational classifier.

Pipeline per sample: ``x' = W x + b`` (4 features), angle embedding
``RY(x'_i) H |0>`` on each qubit, one variational layer of ``RY(theta_i)``
followed by a CX chain ``0 -> 1 -> 2 -> 3``, Pauli-Z readout, then a linear
layer and softmax.  Circuit derivatives (with respect to both ``theta`` and
the embedded ``x'``) use the two-term parameter-shift rule; the classical
layers are differentiated analytically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from . import simcore
from .data import metrics
from .optim import AdamState, adam_step
from .simcore import Circuit, cx, h, ry

NUM_QUBITS = 4
SHIFT = np.pi / 2
FORMAT = "qweld.vqc"
FORMAT_VERSION = 1


class GradientCheckError(AssertionError):
    pass


@dataclass
class VqcModel:
    w_in: np.ndarray
    b_in: np.ndarray
    theta: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        self.w_in = np.asarray(self.w_in, dtype=float)
        self.b_in = np.asarray(self.b_in, dtype=float).ravel()
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        self.w_out = np.asarray(self.w_out, dtype=float)
        self.b_out = np.asarray(self.b_out, dtype=float).ravel()
        if self.w_in.ndim != 2 or self.w_in.shape[0] != NUM_QUBITS:
            raise ValueError(f"w_in must be {NUM_QUBITS} x d, got {self.w_in.shape}")
        if self.b_in.shape != (NUM_QUBITS,) or self.theta.shape != (NUM_QUBITS,):
            raise ValueError("b_in and theta must have 4 entries")
        c = self.b_out.shape[0]
        if c < 2 or self.w_out.shape != (c, NUM_QUBITS):
            raise ValueError(f"w_out must be C x 4 with C >= 2, got {self.w_out.shape}")
        for name in ("w_in", "b_in", "theta", "w_out", "b_out"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]

    @property
    def num_classes(self) -> int:
        return self.b_out.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.w_in.ravel(), self.b_in, self.theta, self.w_out.ravel(), self.b_out]
        )

    def unflat(self, v) -> "VqcModel":
        v = np.asarray(v, dtype=float)
        d, c = self.dim, self.num_classes
        sizes = [4 * d, 4, 4, 4 * c, c]
        parts = np.split(v, np.cumsum(sizes)[:-1])
        return VqcModel(
            parts[0].reshape(4, d), parts[1], parts[2], parts[3].reshape(c, 4), parts[4]
        )


def init_model(d: int, num_classes: int, seed: int) -> VqcModel:
    """theta ~ U[0, pi); W, b ~ U(-1/d, 1/d); W_z, b_z ~ U(-1/2, 1/2).

    The input layer starts small: with d much larger than the sample count, a
    1/sqrt(d) start lets Adam's per-coordinate steps spread weight over noise
    directions and the embedded angles overfit.
    """
    rng = np.random.default_rng(seed)
    lim_in = 1.0 / d
    lim_out = 1.0 / np.sqrt(NUM_QUBITS)
    return VqcModel(
        w_in=rng.uniform(-lim_in, lim_in, size=(NUM_QUBITS, d)),
        b_in=rng.uniform(-lim_in, lim_in, size=NUM_QUBITS),
        theta=rng.uniform(0.0, np.pi, size=NUM_QUBITS),
        w_out=rng.uniform(-lim_out, lim_out, size=(num_classes, NUM_QUBITS)),
        b_out=rng.uniform(-lim_out, lim_out, size=num_classes),
    )


def reduce(model: VqcModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {x.shape[0]}")
    return model.w_in @ x + model.b_in


def circuit(theta, x_prime) -> Circuit:
    ops = []
    for i in range(NUM_QUBITS):
        ops += [h(i), ry(i, x_prime[i])]
    ops += [ry(i, theta[i]) for i in range(NUM_QUBITS)]
    ops += [cx(i, i + 1) for i in range(NUM_QUBITS - 1)]
    return Circuit(NUM_QUBITS, tuple(ops))


def embed_and_run(theta, x_prime) -> np.ndarray:
    """``z_i = <Z_i>`` after embedding ``x_prime`` and applying the layer."""
    theta = np.asarray(theta, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(x_prime))):
        raise ValueError("circuit inputs must be finite")
    state = simcore.run(circuit(theta, x_prime))
    return np.array([simcore.expectation_z(state, q) for q in range(NUM_QUBITS)])


def softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def forward(model: VqcModel, x) -> np.ndarray:
    z = embed_and_run(model.theta, reduce(model, x))
    return softmax(model.w_out @ z + model.b_out)


def predict_proba(model: VqcModel, X) -> np.ndarray:
    return np.stack([forward(model, x) for x in np.atleast_2d(X)])


def _check_batch(model, X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).ravel().astype(int)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    if np.any(y < 0) or np.any(y >= model.num_classes):
        raise ValueError(f"labels must lie in [0, {model.num_classes})")
    return X, y


def loss(model: VqcModel, X, y) -> float:
    """Mean cross-entropy."""
    X, y = _check_batch(model, X, y)
    p = predict_proba(model, X)
    return float(-np.mean(np.log(p[np.arange(len(y)), y])))


def _shift_jacobians(theta, x_prime) -> tuple:
    """``dz/dtheta`` and ``dz/dx'`` (rows: z index, cols: parameter)."""
    jt = np.empty((NUM_QUBITS, NUM_QUBITS))
    jx = np.empty((NUM_QUBITS, NUM_QUBITS))
    for i in range(NUM_QUBITS):
        e = np.zeros(NUM_QUBITS)
        e[i] = SHIFT
        jt[:, i] = 0.5 * (embed_and_run(theta + e, x_prime) - embed_and_run(theta - e, x_prime))
        jx[:, i] = 0.5 * (embed_and_run(theta, x_prime + e) - embed_and_run(theta, x_prime - e))
    return jt, jx


def gradients(model: VqcModel, X, y) -> VqcModel:
    """Gradient of the mean cross-entropy, shaped like the model."""
    X, y = _check_batch(model, X, y)
    g = VqcModel(
        np.zeros_like(model.w_in),
        np.zeros(NUM_QUBITS),
        np.zeros(NUM_QUBITS),
        np.zeros_like(model.w_out),
        np.zeros(model.num_classes),
    )
    for x, label in zip(X, y):
        xp = model.w_in @ x + model.b_in
        z = embed_and_run(model.theta, xp)
        delta = softmax(model.w_out @ z + model.b_out)
        delta[label] -= 1.0
        g.w_out += np.outer(delta, z)
        g.b_out += delta
        dz = model.w_out.T @ delta
        jt, jx = _shift_jacobians(model.theta, xp)
        g.theta += dz @ jt
        dxp = dz @ jx
        g.w_in += np.outer(dxp, x)
        g.b_in += dxp
    n = X.shape[0]
    return VqcModel(g.w_in / n, g.b_in / n, g.theta / n, g.w_out / n, g.b_out / n)


def numerical_gradients(model: VqcModel, X, y, step: float = 1e-5) -> VqcModel:
    """Central finite differences of :func:`loss` over every parameter."""
    base = model.flat()
    out = np.empty_like(base)
    for k in range(base.size):
        e = np.zeros_like(base)
        e[k] = step
        out[k] = (loss(model.unflat(base + e), X, y) - loss(model.unflat(base - e), X, y)) / (
            2 * step
        )
    return model.unflat(out)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 0.01
    seed: int = 42
    gradient_mode: Literal["parameter_shift", "finite_difference_check"] = "parameter_shift"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.gradient_mode not in ("parameter_shift", "finite_difference_check"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")


def _checked_gradients(model, X, y, tol=1e-6):
    """Parameter-shift gradients, verified against finite differences (slow)."""
    g = gradients(model, X, y)
    fd = numerical_gradients(model, X, y)
    err = float(np.max(np.abs(g.flat() - fd.flat())))
    if err > tol:
        raise GradientCheckError(f"parameter-shift vs finite-difference mismatch {err:.3e}")
    return g


def train(X, y, cfg: TrainConfig = TrainConfig(), num_classes: Optional[int] = None):
    """Adam over seeded shuffled mini-batches.

    Returns ``(model, history)``; ``history`` has one entry per epoch with the
    full-training-set loss and accuracy after that epoch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).ravel().astype(int)
    n = X.shape[0]
    if n == 0 or n != y.shape[0]:
        raise ValueError("features and labels must be non-empty and aligned")
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    c = int(num_classes if num_classes is not None else y.max() + 1)
    rng = np.random.default_rng(cfg.seed)
    model = init_model(X.shape[1], max(c, 2), int(rng.integers(2**63)))
    state = AdamState.zeros(model.flat().size, learning_rate=cfg.learning_rate)
    grad_fn = _checked_gradients if cfg.gradient_mode == "finite_difference_check" else gradients
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            g = grad_fn(model, X[idx], y[idx])
            params, state = adam_step(model.flat(), g.flat(), state)
            model = model.unflat(params)
        ev = evaluate(model, X, y)
        history.append({"epoch": epoch + 1, "loss": ev["loss"], "accuracy": ev["accuracy"]})
    return model, history


def predict(model: VqcModel, X) -> np.ndarray:
    # argmax takes the first maximum, i.e. the lowest class index on ties
    return np.argmax(predict_proba(model, X), axis=1)


def evaluate(model: VqcModel, X, y) -> dict:
    X, y = _check_batch(model, X, y)
    p = predict_proba(model, X)
    out = metrics(np.argmax(p, axis=1), y, model.num_classes)
    out["loss"] = float(-np.mean(np.log(p[np.arange(len(y)), y])))
    return out


def to_document(model: VqcModel, class_names, meta: Optional[dict] = None) -> dict:
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "num_qubits": NUM_QUBITS,
        "feature_dim": model.dim,
        "class_names": list(class_names),
        "w_in": model.w_in.tolist(),
        "b_in": model.b_in.tolist(),
        "theta": model.theta.tolist(),
        "w_out": model.w_out.tolist(),
        "b_out": model.b_out.tolist(),
        "training": dict(meta or {}),
    }


def from_document(doc: dict) -> VqcModel:
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a VQC model document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported VQC model version {doc.get('version')!r}")
    return VqcModel(doc["w_in"], doc["b_in"], doc["theta"], doc["w_out"], doc["b_out"])
