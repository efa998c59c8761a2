"""Gaussian-process regression with a squared-exponential ARD kernel.

Zero prior mean.  The Cholesky factor of ``K + noise*I`` is cached and
rebuilt lazily whenever data or hyperparameters change, so the model is
always a pure function of ``(X, y, hyper)``.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
JITTER_START = 1e-8
JITTER_MAX = 1e-2


class GPNumericalError(ArithmeticError):
    """Covariance matrix stayed non-positive-definite after every jitter level."""


@dataclass(frozen=True)
class Hyperparameters:
    signal_std: float
    length_scales: tuple[float, float]
    noise_var: float = 0.0

    def __post_init__(self):
        ls = tuple(float(v) for v in np.broadcast_to(np.asarray(self.length_scales, float), (2,)))
        object.__setattr__(self, "length_scales", ls)
        if not self.signal_std > 0 or not all(v > 0 for v in ls):
            raise ValueError(f"signal_std and length scales must be positive: {self}")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")

    @property
    def signal_var(self) -> float:
        return self.signal_std ** 2

    def to_dict(self) -> dict:
        return {"signal_std": self.signal_std, "length_scales": list(self.length_scales),
                "noise_var": self.noise_var}

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        return cls(float(d["signal_std"]), tuple(d["length_scales"]), float(d.get("noise_var", 0.0)))


def kernel_matrix(A, B, hyper: Hyperparameters) -> np.ndarray:
    """Cross-covariance ``sigma^2 exp(-sum_d (a_d - b_d)^2 / (2 l_d^2))``."""
    A = np.atleast_2d(np.asarray(A, float)) / hyper.length_scales
    B = np.atleast_2d(np.asarray(B, float)) / hyper.length_scales
    d2 = (np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return hyper.signal_var * np.exp(-0.5 * d2)


def kernel(x, x2, hyper: Hyperparameters) -> float:
    diff = (np.asarray(x, float) - np.asarray(x2, float)) / hyper.length_scales
    return hyper.signal_var * math.exp(-0.5 * float(diff @ diff))


def _jittered_cholesky(K: np.ndarray, signal_var: float) -> tuple[np.ndarray, float]:
    try:
        return cholesky(K, lower=True, check_finite=False), 0.0
    except LinAlgError:
        pass
    jitter = JITTER_START
    eye = np.eye(len(K))
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = cholesky(K + jitter * signal_var * eye, lower=True, check_finite=False)
            logger.info("cholesky needed jitter %.0e * signal_var", jitter)
            return L, jitter * signal_var
        except LinAlgError:
            jitter *= 10.0
    raise GPNumericalError("covariance not positive definite after maximum jitter")


class Stopwatch:
    """Accumulates wall-clock seconds spent in GP operations."""

    def __init__(self):
        self.total = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.total += time.perf_counter() - self._t0


class GPModel:
    """GP posterior over 2-D inputs.

    ``clock`` is shared (not copied) by :meth:`copy`, so replicas keep
    charging GP time to whoever owns the clock unless given their own.
    """

    def __init__(self, hyper: Hyperparameters, X=None, y=None, clock: Stopwatch | None = None):
        self._hyper = hyper
        self._X = np.empty((0, 2)) if X is None else np.asarray(X, float).reshape(-1, 2).copy()
        self._y = np.empty(0) if y is None else np.asarray(y, float).ravel().copy()
        if len(self._X) != len(self._y):
            raise ValueError("X and y lengths differ")
        self.clock = clock if clock is not None else Stopwatch()
        self._invalidate()

    def _invalidate(self):
        self._L = None
        self._alpha = None
        self.jitter = 0.0

    @property
    def hyper(self) -> Hyperparameters:
        return self._hyper

    @hyper.setter
    def hyper(self, value: Hyperparameters):
        if value != self._hyper:
            self._hyper = value
            self._invalidate()

    @property
    def X(self) -> np.ndarray:
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    def __len__(self):
        return len(self._y)

    def add(self, x, y) -> None:
        x = np.asarray(x, float).reshape(-1, 2)
        y = np.asarray(y, float).ravel()
        self._X = np.vstack([self._X, x])
        self._y = np.concatenate([self._y, y])
        self._invalidate()

    def copy(self, clock: Stopwatch | None = None) -> "GPModel":
        new = GPModel(self._hyper, self._X, self._y, clock=clock or self.clock)
        if self._L is not None:
            new._L, new._alpha, new.jitter = self._L, self._alpha, self.jitter
        return new

    def _factor(self):
        if self._L is None and len(self._y):
            h = self._hyper
            K = kernel_matrix(self._X, self._X, h)
            K[np.diag_indices_from(K)] += h.noise_var
            self._L, self.jitter = _jittered_cholesky(K, h.signal_var)
            self._alpha = cho_solve((self._L, True), self._y, check_finite=False)
        return self._L

    def predict(self, queries, return_std: bool = True):
        """Posterior mean (and std) at ``queries`` of shape (m, 2)."""
        with self.clock:
            Q = np.atleast_2d(np.asarray(queries, float))
            h = self._hyper
            if not len(self._y):
                mean = np.zeros(len(Q))
                return (mean, np.full(len(Q), h.signal_std)) if return_std else mean
            L = self._factor()
            Ks = kernel_matrix(self._X, Q, h)
            mean = Ks.T @ self._alpha
            if not return_std:
                return mean
            V = solve_triangular(L, Ks, lower=True, check_finite=False)
            var = h.signal_var - np.einsum("ij,ij->j", V, V)
            return mean, np.sqrt(np.maximum(var, 0.0))

    def nlml(self) -> float:
        if not len(self._y):
            raise ValueError("nlml needs at least one observation")
        with self.clock:
            L = self._factor()
            return (0.5 * float(self._y @ self._alpha) + float(np.sum(np.log(np.diag(L))))
                    + 0.5 * len(self._y) * LOG_2PI)


# -- hyperparameter optimisation -------------------------------------------------

def _pack(h: Hyperparameters, fix_noise: bool) -> np.ndarray:
    p = [math.log(h.signal_std), math.log(h.length_scales[0]), math.log(h.length_scales[1])]
    if not fix_noise:
        p.append(math.log(h.noise_var))
    return np.array(p)


def _unpack(p: np.ndarray, fixed_noise: float | None) -> Hyperparameters:
    noise = fixed_noise if fixed_noise is not None else math.exp(p[3])
    return Hyperparameters(math.exp(p[0]), (math.exp(p[1]), math.exp(p[2])), noise)


def nlml_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray,
                  fixed_noise: float | None = None) -> tuple[float, np.ndarray]:
    """NLML and its gradient w.r.t. log(sigma), log(l1), log(l2)[, log(noise)].

    Raises GPNumericalError if the covariance cannot be factored.
    """
    h = _unpack(params, fixed_noise)
    n = len(y)
    Xs = X / h.length_scales
    D0 = (Xs[:, None, 0] - Xs[None, :, 0]) ** 2
    D1 = (Xs[:, None, 1] - Xs[None, :, 1]) ** 2
    K = h.signal_var * np.exp(-0.5 * (D0 + D1))
    Ky = K.copy()
    Ky[np.diag_indices(n)] += h.noise_var
    L, _ = _jittered_cholesky(Ky, h.signal_var)
    alpha = cho_solve((L, True), y, check_finite=False)
    value = 0.5 * float(y @ alpha) + float(np.sum(np.log(np.diag(L)))) + 0.5 * n * LOG_2PI
    W = cho_solve((L, True), np.eye(n), check_finite=False) - np.outer(alpha, alpha)
    grad = [np.sum(W * K),  # 0.5 tr(W * 2K)
            0.5 * np.sum(W * K * D0),
            0.5 * np.sum(W * K * D1)]
    if fixed_noise is None:
        grad.append(0.5 * h.noise_var * np.trace(W))
    return value, np.array(grad)


def optimize_hyperparameters(model: GPModel, init: Hyperparameters | None = None,
                             fix_noise: bool = True, restarts: int = 4,
                             diameter: float | None = None,
                             seed: int = 0) -> Hyperparameters:
    """Multi-start L-BFGS-B on the log-parameters; never returns worse than ``init``.

    Starts are ``init`` plus ``restarts`` points drawn uniformly from the
    log-parameter box (seeded, so the result is reproducible).
    Length scales are bounded to ``[1e-2, 10 * diameter]`` and the signal
    std to ``[1e-3, 1e3]``.
    """
    init = init or model.hyper
    X, y = model.X, model.y
    if len(y) < 2:
        raise ValueError("hyperparameter optimisation needs at least two observations")
    if diameter is None:
        diameter = float(np.hypot(*np.ptp(X, axis=0))) or 1.0
    if not fix_noise and init.noise_var <= 0:
        raise ValueError("free noise optimisation needs a positive initial noise_var")
    fixed = init.noise_var if fix_noise else None
    bounds = [(math.log(1e-3), math.log(1e3)),
              (math.log(1e-2), math.log(10 * diameter)),
              (math.log(1e-2), math.log(10 * diameter))]
    if not fix_noise:
        bounds.append((math.log(1e-10), math.log(1e2)))
    lo, hi = np.array(bounds).T

    with model.clock:
        p0 = np.clip(_pack(init, fix_noise), lo, hi)
        try:
            best_val, _ = nlml_and_grad(_pack(init, fix_noise), X, y, fixed)
        except GPNumericalError:
            best_val = math.inf
        best = init
        rng = np.random.default_rng(seed)
        starts = [p0] + [rng.uniform(lo, hi)
                         for _ in range(restarts)]
        succeeded = 0
        for start in starts:
            try:
                res = minimize(nlml_and_grad, start, args=(X, y, fixed), jac=True,
                               method="L-BFGS-B", bounds=bounds)
            except (GPNumericalError, FloatingPointError, ValueError):
                continue
            if not np.isfinite(res.fun):
                continue
            succeeded += 1
            if res.fun < best_val:
                best_val, best = float(res.fun), _unpack(res.x, fixed)
        if not succeeded:
            warnings.warn("all hyperparameter optimisation starts failed; keeping init",
                          RuntimeWarning, stacklevel=2)
    return best


def with_noise(h: Hyperparameters, noise_var: float) -> Hyperparameters:
    return replace(h, noise_var=noise_var)
