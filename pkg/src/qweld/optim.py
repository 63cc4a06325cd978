"""Classical optimisers: a budgeted derivative-free minimiser and Adam."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


class NonFiniteCostError(ArithmeticError):
    def __init__(self, params, value):
        self.params = np.array(params, dtype=float)
        self.value = value
        super().__init__(f"cost returned {value!r} at params {self.params.tolist()}")


@dataclass(frozen=True)
class DfoConfig:
    epsilon: float = 0.01
    max_iters: int = 300
    initial_step: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        # 0 is allowed: the loop guard then returns x0 with an empty trace
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")


class _Stop(Exception):
    pass


class _Budget:
    """Counts evaluations, tracks the incumbent, raises ``_Stop`` on either guard."""

    def __init__(self, cost, cfg):
        self.cost = cost
        self.cfg = cfg
        self.trace = []
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        if len(self.trace) >= self.cfg.max_iters:
            raise _Stop
        f = float(self.cost(x))
        if not np.isfinite(f):
            raise NonFiniteCostError(x, f)
        self.trace.append(f)
        if f < self.best_f:
            self.best_x, self.best_f = np.array(x, dtype=float), f
        if f <= self.cfg.epsilon:
            raise _Stop
        return f


# simplex acceptability, as fractions of the trust radius
_FAR = 2.1
_FLAT = 0.25
_GEOM_STEP = 0.5


def _linear_trust_region(fun, x0, rho, rho_end):
    """Unconstrained COBYLA iteration: linear interpolation on a simplex of
    ``n + 1`` points, steepest step to the trust-region boundary, radius
    halved whenever the model stops paying off on a well-shaped simplex."""
    n = x0.size
    ys = np.vstack([x0, x0 + rho * np.eye(n)])
    fs = np.array([fun(y) for y in ys])

    while True:
        b, others, diffs, inv = _frame(ys, fs)
        grad = inv @ (fs[others] - fs[b])
        gnorm = float(np.linalg.norm(grad))
        ratio = -np.inf
        if gnorm > 0:
            step = -rho * grad / gnorm
            y = ys[b] + step
            fy = fun(y)
            ratio = (fs[b] - fy) / (rho * gnorm)
            dist = np.linalg.norm(diffs, axis=1)
            score = np.abs(step @ inv) * np.maximum(1.0, dist / rho) ** 2
            k = int(np.argmax(score))
            if fy < fs[b] or score[k] > 1.0:
                ys[others[k]] = y
                fs[others[k]] = fy
        if ratio >= 0.1:
            continue

        # model failed: repair the simplex if it is badly shaped, otherwise
        # shrink the trust radius
        b, others, diffs, inv = _frame(ys, fs)
        dist = np.linalg.norm(diffs, axis=1)
        face = 1.0 / np.maximum(np.linalg.norm(inv, axis=0), 1e-300)
        if np.max(dist) > _FAR * rho or np.min(face) < _FLAT * rho:
            k = int(np.argmax(dist)) if np.max(dist) > _FAR * rho else int(np.argmin(face))
            normal = inv[:, k] / np.linalg.norm(inv[:, k])
            grad = inv @ (fs[others] - fs[b])
            sign = -1.0 if normal @ grad > 0 else 1.0
            y = ys[b] + sign * _GEOM_STEP * rho * normal
            ys[others[k]] = y
            fs[others[k]] = fun(y)
            continue
        if rho <= rho_end:
            return
        rho = max(0.5 * rho, rho_end)


def _frame(ys, fs):
    b = int(np.argmin(fs))
    others = [j for j in range(len(fs)) if j != b]
    diffs = ys[others] - ys[b]
    try:
        inv = np.linalg.inv(diffs)
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(diffs)
    return b, others, diffs, inv


def minimize_dfo(cost: Callable[[np.ndarray], float], x0, cfg: DfoConfig = DfoConfig()):
    """Minimise ``cost`` derivative-free until ``cost <= epsilon`` or the budget runs out.

    One iteration is one cost evaluation, as in the outer loop of the VQLS
    algorithm.  The returned trace holds every evaluated cost in order, so
    ``len(trace) <= cfg.max_iters``.  If the trust radius collapses first the
    method restarts around the incumbent with the initial radius.

    Returns ``(x_best, trace)``.
    """
    x0 = np.array(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    fun = _Budget(cost, cfg)
    fun.best_x = x0.copy()
    try:
        while len(fun.trace) < cfg.max_iters:
            _linear_trust_region(fun, fun.best_x.copy(), cfg.initial_step, _RHO_END)
    except _Stop:
        pass
    return fun.best_x, fun.trace


_RHO_END = 1e-6


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, **hyper) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0, **hyper)

    @property
    def dim(self) -> int:
        return self.first_moment.shape[0]


def adam_step(params, grads, state: AdamState):
    """Bias-corrected Adam update; returns ``(new_params, new_state)``."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != (state.dim,):
        raise ValueError(
            f"dimension mismatch: params {params.shape}, grads {grads.shape}, state {state.dim}"
        )
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradient")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1 - state.beta2) * grads**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return new_params, replace(state, first_moment=m, second_moment=v, step_count=t)
