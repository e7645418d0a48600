"""Exact GP regression on the answer axis a in [0, 1].

Squared-exponential kernel with an additive noise term on the training
diagonal.  Posterior variance reported at test points is the latent
function variance (no noise term), which is what the confidence band shows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConditioningError, InputError, ParameterError

N_BINS = 101
BIN_WIDTH = 0.01

# k / 100 rather than k * 0.01 so that 0.5 and 1.0 land exactly on the grid
DEFAULT_GRID = np.arange(N_BINS, dtype=float) / 100.0

BAND_MODES = ("std", "variance")


@dataclass(frozen=True)
class KernelParams:
    length_scale: float = 0.1
    signal_variance: float = 1.0
    noise_variance: float = 0.025

    def __post_init__(self):
        for name in ("length_scale", "signal_variance", "noise_variance"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class Observation:
    location: float
    value: float


@dataclass(frozen=True)
class PosteriorCurve:
    grid: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


@dataclass(frozen=True)
class UncertaintySplit:
    """Band area over the negative half [0, .5] and positive half [.5, 1]."""

    u_neg: float
    u_pos: float

    @property
    def total(self) -> float:
        return self.u_neg + self.u_pos

    @property
    def peak(self) -> float:
        return max(self.u_neg, self.u_pos)

    @property
    def dominant_gt(self) -> int:
        """Ground-truth bit whose half carries more uncertainty (ties go to 0)."""
        return 0 if self.u_neg >= self.u_pos else 1


def kernel_eval(a_m: float, a_n: float, params: KernelParams = KernelParams(),
                same_index: bool = False) -> float:
    if not (0.0 <= a_m <= 1.0 and 0.0 <= a_n <= 1.0):
        raise InputError(f"kernel inputs must lie in [0, 1], got {a_m!r}, {a_n!r}")
    d = a_m - a_n
    k = params.signal_variance * math.exp(-(d * d) / (2.0 * params.length_scale ** 2))
    if same_index:
        k += params.noise_variance
    return k


def kernel_matrix(x1: np.ndarray, x2: np.ndarray, params: KernelParams) -> np.ndarray:
    """Noise-free SE cross-covariance between two location vectors."""
    d = np.subtract.outer(np.asarray(x1, float), np.asarray(x2, float))
    return params.signal_variance * np.exp(-(d * d) / (2.0 * params.length_scale ** 2))


def gp_posterior(obs: Sequence[Observation], grid: np.ndarray = DEFAULT_GRID,
                 params: KernelParams = KernelParams()) -> PosteriorCurve:
    grid = np.asarray(grid, dtype=float)
    if len(obs) == 0:
        return PosteriorCurve(grid, np.zeros_like(grid),
                              np.full_like(grid, params.signal_variance))

    x = np.array([o.location for o in obs], dtype=float)
    y = np.array([o.value for o in obs], dtype=float)
    if len(np.unique(x)) != len(x):
        raise InputError("observation locations must be pairwise distinct")

    K = kernel_matrix(x, x, params)
    K[np.diag_indices_from(K)] += params.noise_variance
    k_star = kernel_matrix(x, grid, params)  # (m, n_grid)
    try:
        factor = cho_factor(K, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise ConditioningError(str(exc)) from exc

    alpha = cho_solve(factor, y, check_finite=False)
    v = cho_solve(factor, k_star, check_finite=False)
    mean = k_star.T @ alpha
    variance = params.signal_variance - np.einsum("ij,ij->j", k_star, v)
    # round-off can push a tiny variance below zero
    np.maximum(variance, 0.0, out=variance)
    return PosteriorCurve(grid, mean, variance)


def trapezoid(f: np.ndarray, x: np.ndarray) -> float:
    """Trapezoidal rule; exact for constants on a uniform grid."""
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    if n < 1:
        return 0.0
    span = x[-1] - x[0]
    h = np.diff(x)
    if np.allclose(h, span / n, rtol=0.0, atol=1e-12):
        return float(span * (f.sum() - 0.5 * (f[0] + f[-1])) / n)
    return float(np.sum(h * (f[1:] + f[:-1]) * 0.5))


def band_integrals(curve: PosteriorCurve, mode: str = "std") -> UncertaintySplit:
    """Area of the +/-2 std band (or 4 * variance with ``mode='variance'``)."""
    if mode not in BAND_MODES:
        raise ParameterError(f"band mode must be one of {BAND_MODES}, got {mode!r}")
    grid = curve.grid
    if grid[0] != 0.0 or grid[-1] != 1.0 or not np.any(grid == 0.5):
        raise InputError("grid must span [0, 1] and contain 0.5")
    width = 4.0 * (curve.std if mode == "std" else curve.variance)
    lo = grid <= 0.5
    hi = grid >= 0.5
    return UncertaintySplit(trapezoid(width[lo], grid[lo]), trapezoid(width[hi], grid[hi]))


def prior_split(params: KernelParams = KernelParams(), mode: str = "std") -> UncertaintySplit:
    return band_integrals(gp_posterior([], DEFAULT_GRID, params), mode)
