"""Closed-form proximal and projection operators used by the experiment families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "SparsityBudget",
    "half_shrinkage",
    "half_shrinkage_threshold",
    "project_box",
    "project_nonneg",
    "project_sparse_nonneg",
    "project_sparse_nonneg_columns",
]


def half_shrinkage_threshold(kappa: float) -> float:
    """Magnitude below which the L-half prox is exactly zero: (3/2) kappa^(2/3)."""
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    return 1.5 * kappa ** (2.0 / 3.0)


def half_shrinkage(a, kappa: float) -> np.ndarray:
    """Elementwise global minimizer of  t -> kappa*|t|^(1/2) + (1/2)(t - a_i)^2.

    For |a_i| above the tie threshold (3/2) kappa^(2/3) the minimizer is the
    largest root of s^3 - |a_i| s + kappa/2 (s = sqrt(t)), which has the
    closed trigonometric form

        h = (2|a_i|/3) * (1 + cos(2*pi/3 - (2/3)*arccos((kappa/4) (|a_i|/3)^(-3/2))))

    taken with the sign of a_i; at or below the threshold the minimizer is 0
    (at equality both 0 and the root attain the minimum and 0 is returned).
    """
    thresh = half_shrinkage_threshold(kappa)
    a = np.asarray(a, dtype=float)
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    out = np.zeros_like(a)
    mask = np.abs(a) > thresh
    if np.any(mask):
        am = np.abs(a[mask])
        phi = np.arccos((kappa / 4.0) * (am / 3.0) ** -1.5)
        h = (2.0 * am / 3.0) * (1.0 + np.cos(2.0 * math.pi / 3.0 - 2.0 * phi / 3.0))
        out[mask] = np.sign(a[mask]) * h
    return out[0] if scalar else out


def project_box(v, lo: float, hi: float) -> np.ndarray:
    """Euclidean projection onto the box [lo, hi]^d (elementwise clamp)."""
    if lo > hi:
        raise ParameterError(f"empty box: lo={lo} > hi={hi}")
    return np.clip(np.asarray(v, dtype=float), lo, hi)


def project_nonneg(v) -> np.ndarray:
    """Euclidean projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(v, dtype=float), 0.0)


@dataclass(frozen=True)
class SparsityBudget:
    """Per-column sparsity budget: at most ceil(fraction * length) nonzeros."""

    fraction: float
    per_column: bool = True

    def __post_init__(self):
        if not (0.0 < self.fraction <= 1.0):
            raise ParameterError(f"fraction must be in (0, 1], got {self.fraction}")

    def max_support(self, length: int) -> int:
        k = math.ceil(self.fraction * length)
        if k < 1:
            raise ParameterError(f"budget admits no nonzeros for length {length}")
        return k


def project_sparse_nonneg(col, budget: SparsityBudget) -> np.ndarray:
    """Euclidean projection of a vector onto {v >= 0, ||v||_0 <= k}.

    Take the positive part, keep the k largest entries and zero the rest.
    Ties are broken toward the lowest index so repeated runs are identical.
    """
    v = project_nonneg(col)
    k = budget.max_support(v.size)
    if k >= v.size:
        return v
    # Stable sort on the negated values: among equal entries the lowest
    # index is kept.
    keep = np.argsort(-v, kind="stable")[:k]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def project_sparse_nonneg_columns(x, budget: SparsityBudget) -> np.ndarray:
    """Apply :func:`project_sparse_nonneg` to every column of a matrix."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = project_sparse_nonneg(x[:, j], budget)
    return out
