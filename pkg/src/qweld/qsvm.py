"""VQLS-backed least-squares SVM on the amplitude-encoded quantum kernel."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from . import qkernel, vqls
from .optim import DfoConfig
from .simcore import EXACT, ShotConfig

FORMAT = "qweld.qsvm"
FORMAT_VERSION = 1
DEGRADED_FIDELITY = 0.9
RESIDUAL_TOL = 1e-8


class SingularSystemError(ValueError):
    pass


def classical_dual_solve(K, y, lam: float) -> tuple:
    """Solve the LS-SVM system ``[[0, 1^T], [1, K + lam I]] (bias, alpha) = (0, y)``.

    Returns ``(alphas, bias)``.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = K.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"{y.shape[0]} labels for a {n}x{n} kernel")
    if lam <= 0:
        raise ValueError("lambda must be positive for the classical dual solve")
    A = np.zeros((n + 1, n + 1))
    A[0, 1:] = 1.0
    A[1:, 0] = 1.0
    A[1:, 1:] = K + lam * np.eye(n)
    rhs = np.concatenate([[0.0], y])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"LS-SVM system is singular (lambda={lam})") from exc
    residual = float(np.linalg.norm(A @ sol - rhs))
    if not residual < RESIDUAL_TOL * max(1.0, float(np.linalg.norm(rhs))):
        raise SingularSystemError(f"LS-SVM solve residual {residual:.3e}; system ill-posed")
    return sol[1:], float(sol[0])


def rescale_solution(amplitudes, reference_alphas) -> tuple:
    """Least-squares affine map ``reference ~ scale * amplitudes + offset``.

    Returns ``(alphas, scale, offset)`` with ``alphas`` the mapped amplitudes.
    """
    a = np.asarray(amplitudes, dtype=float).ravel()
    r = np.asarray(reference_alphas, dtype=float).ravel()
    if a.shape != r.shape:
        raise ValueError(f"length mismatch: {a.size} amplitudes vs {r.size} reference alphas")
    centred = a - a.mean()
    var = float(centred @ centred)
    if var <= 1e-24:
        raise ValueError("amplitudes have zero variance; affine fit undefined")
    scale = float(centred @ (r - r.mean()) / var)
    offset = float(r.mean() - scale * a.mean())
    return scale * a + offset, scale, offset


@dataclass
class QsvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    bias: float
    lam: float
    kernel_config: dict = field(default_factory=lambda: {"encoding": "amplitude"})
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.support_vectors = np.asarray(self.support_vectors, dtype=float)
        self.alphas = np.asarray(self.alphas, dtype=float).ravel()
        if self.alphas.size != self.support_vectors.shape[0]:
            raise ValueError("one alpha per support vector required")
        if not np.isfinite(self.bias):
            raise ValueError("bias must be finite")

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def degraded(self) -> bool:
        return bool(self.diagnostics.get("degraded", False))


def train_binary(
    X,
    y,
    lam: float = 0.1,
    vqls_cfg: DfoConfig = DfoConfig(),
    shot_cfg: ShotConfig = EXACT,
    seed: int = 42,
    backend: Literal["quantum", "classical"] = "quantum",
    layers: int = 1,
    kernel_cfg: Optional[ShotConfig] = None,
) -> QsvmModel:
    """Fit one +1/-1 classifier.

    The quantum backend solves ``(K + lam I) alpha = y / |y|`` with VQLS and
    maps the solution amplitudes onto the classical dual coefficients by an
    affine least-squares fit; the bias comes from the classical solve.  The
    classical backend uses the LS-SVM dual directly.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two training samples")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} samples but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be +1 or -1")
    if np.all(y == y[0]):
        raise ValueError("both classes must be present")

    K = qkernel.kernel_matrix(X, kernel_cfg)
    ref_alphas, bias = classical_dual_solve(K, y, lam)
    system = vqls.build_system(K, y, lam)
    diag = {
        "backend": backend,
        "kappa": system.condition_number(),
        "num_qubits": system.num_qubits,
        "pauli_terms": len(system.decomposition),
        "pauli_dropped_mass": system.decomposition.dropped_mass,
    }

    if backend == "classical":
        alphas = ref_alphas
        diag.update(iterations=0, final_cost=0.0, converged=True, fidelity=1.0, degraded=False)
    elif backend == "quantum":
        res = vqls.solve(system, vqls_cfg, shot_cfg, seed=seed, layers=layers)
        fid = vqls.fidelity(res.solution_amplitudes, system.dense_solution())
        alphas, scale, offset = rescale_solution(res.solution, ref_alphas)
        diag.update(
            iterations=res.iterations,
            final_cost=res.final_cost,
            converged=res.converged,
            fidelity=fid,
            degraded=fid < DEGRADED_FIDELITY,
            rescale_scale=scale,
            rescale_offset=offset,
            rescale_residual=float(np.linalg.norm(alphas - ref_alphas)),
            imag_residue=res.imag_residue,
            layers=layers,
            shots=None if shot_cfg.exact else shot_cfg.shots,
        )
    else:
        raise ValueError(f"unknown backend {backend!r}")

    return QsvmModel(X.copy(), alphas, bias, float(lam), {"encoding": "amplitude"}, diag)


def decision_batch(model: QsvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {X.shape[1]}")
    K = qkernel.cross_kernel(X, model.support_vectors)
    return K @ model.alphas + model.bias


def decision(model: QsvmModel, x) -> float:
    """``f(x) = sum_i alpha_i K(x_i, x) + bias``."""
    return float(decision_batch(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


# --------------------------------------------------------------------------
# one-vs-rest


@dataclass
class OvrModel:
    classes: list
    binaries: list

    def __post_init__(self):
        if not self.classes:
            raise ValueError("empty class list")
        if len(self.classes) != len(self.binaries):
            raise ValueError("one binary model per class required")

    @property
    def dim(self) -> int:
        return self.binaries[0].dim


def train_ovr(
    X,
    labels,
    classes: Optional[Sequence] = None,
    seed: int = 42,
    workers: int = 1,
    **kwargs,
) -> OvrModel:
    """One binary model per class (that class +1, the rest -1).

    Each binary gets its own derived seed, so results do not depend on
    ``workers``.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels).ravel()
    if classes is None:
        classes = sorted(np.unique(labels).tolist())
    classes = list(classes)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    for c in classes:
        if not np.any(labels == c):
            raise ValueError(f"class {c!r} has no samples")
    seeds = np.random.SeedSequence(seed).generate_state(len(classes))

    def fit(k):
        y = np.where(labels == classes[k], 1.0, -1.0)
        return train_binary(X, y, seed=int(seeds[k]), **kwargs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            binaries = list(pool.map(fit, range(len(classes))))
    else:
        binaries = [fit(k) for k in range(len(classes))]
    return OvrModel(classes, binaries)


def decision_matrix(model: OvrModel, X) -> np.ndarray:
    """``(n_samples, n_classes)`` decision values."""
    return np.column_stack([decision_batch(b, X) for b in model.binaries])


def argmax_lowest(values) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest column."""
    return np.argmax(np.asarray(values), axis=-1)


def predict_ovr(model: OvrModel, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return model.classes[int(argmax_lowest(decision_matrix(model, x[None, :]))[0])]
    return [model.classes[i] for i in argmax_lowest(decision_matrix(model, x))]


# --------------------------------------------------------------------------
# classifier facade: a single binary model for two classes, OvR above


def fit_classifier(X, labels, num_classes: int, seed: int = 42, workers: int = 1, **kwargs):
    labels = np.asarray(labels).ravel()
    if num_classes < 2:
        raise ValueError("need at least two classes")
    if num_classes == 2:
        y = np.where(labels == 1, 1.0, -1.0)
        return train_binary(X, y, seed=seed, **kwargs)
    return train_ovr(X, labels, classes=list(range(num_classes)), seed=seed, workers=workers, **kwargs)


def binaries_of(model) -> list:
    return [model] if isinstance(model, QsvmModel) else list(model.binaries)


def class_scores(model, X) -> np.ndarray:
    """Per-class scores; a binary model scores ``(-f, f)``."""
    if isinstance(model, QsvmModel):
        f = decision_batch(model, X)
        return np.column_stack([-f, f])
    return decision_matrix(model, X)


def predict(model, X) -> np.ndarray:
    return argmax_lowest(class_scores(model, X))


def class_probabilities(model, X) -> np.ndarray:
    """Softmax of the class scores (used only for the reported loss)."""
    s = class_scores(model, X)
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# serialisation


def _binary_doc(m: QsvmModel) -> dict:
    return {
        "alphas": m.alphas.tolist(),
        "bias": m.bias,
        "lambda": m.lam,
        "kernel": m.kernel_config,
        "diagnostics": m.diagnostics,
    }


def to_document(model, class_names: Sequence[str], support_vectors=None) -> dict:
    bins = binaries_of(model)
    sv = bins[0].support_vectors if support_vectors is None else support_vectors
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": "binary" if isinstance(model, QsvmModel) else "ovr",
        "class_names": list(class_names),
        "classes": [1] if isinstance(model, QsvmModel) else list(model.classes),
        "feature_dim": int(sv.shape[1]),
        "encoding": "amplitude",
        "support_vectors": np.asarray(sv).tolist(),
        "models": [_binary_doc(b) for b in bins],
    }


def from_document(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a QSVM model document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported QSVM model version {doc.get('version')!r}")
    sv = np.asarray(doc["support_vectors"], dtype=float)
    bins = [
        QsvmModel(sv, m["alphas"], m["bias"], m["lambda"], m["kernel"], m["diagnostics"])
        for m in doc["models"]
    ]
    if doc["kind"] == "binary":
        return bins[0]
    return OvrModel(list(doc["classes"]), bins)
