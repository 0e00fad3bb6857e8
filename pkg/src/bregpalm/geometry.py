"""Bregman geometries and the generic Bregman distance.

A geometry bundles a convex separably-differentiable kernel ``phi`` with its
gradient, the inverse of that gradient (the mirror map used by subproblem
solvers), a strong-convexity modulus ``theta`` valid on a declared operating
box, and domain predicates. The four kernels used by the solvers:

    euclidean    phi(x) = (mu/2) ||x||^2
    kl           phi(x) = mu * sum_i x_i ln x_i          (x > 0)
    is           phi(x) = -mu * sum_i ln x_i             (x > 0)
    mahalanobis  phi(x) = <x, M x>                       (M symmetric PD)

KL and IS are not globally strongly convex, so their ``theta`` is derived
from the operating box: theta_kl = mu / hi and theta_is = mu / hi^2 for a box
[lo, hi]. Without a box they carry theta = 0 and downstream admissibility
checks reject them unless overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DomainError, ParameterError

__all__ = [
    "BregmanGeometry",
    "bregman_distance",
    "check_domain",
    "make_euclidean",
    "make_kl",
    "make_itakura_saito",
    "make_mahalanobis",
    "geometry_from_token",
    "GEOMETRY_TOKENS",
]

# Entries at or below this are outside the KL/IS domain; they are rejected,
# never clamped, so solver bugs that drive iterates to the boundary surface.
DOMAIN_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class BregmanGeometry:
    """A Bregman kernel with the data solvers and diagnostics need.

    ``domain_mask``/``dual_mask`` return elementwise boolean masks: where a
    point is inside int dom phi, and where a dual vector is in the range of
    grad phi (so ``inv_grad`` applies).  ``hessian_scale``/``hessian_matrix``
    are set for quadratic kernels only and let quadratic subproblems be
    solved directly.
    """

    name: str
    phi: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    inv_grad: Callable[[np.ndarray], np.ndarray]
    theta: float
    grad_lipschitz: float
    domain_mask: Callable[[np.ndarray], np.ndarray]
    dual_mask: Callable[[np.ndarray], np.ndarray]
    hessian_scale: float | None = None
    hessian_matrix: np.ndarray | None = field(default=None, repr=False)
    box: tuple[float, float] | None = None

    def in_domain(self, v) -> bool:
        return bool(np.all(self.domain_mask(np.asarray(v, dtype=float))))


def check_domain(geom: BregmanGeometry, v, label: str = "point") -> np.ndarray:
    """Return ``v`` as an array, or raise naming the first offending coordinate."""
    arr = np.asarray(v, dtype=float)
    mask = geom.domain_mask(arr)
    if not np.all(mask):
        bad = int(np.argmin(np.ravel(mask)))
        raise DomainError(
            f"{label} outside dom {geom.name}: coordinate {bad} = {np.ravel(arr)[bad]!r}"
        )
    return arr


def bregman_distance(geom: BregmanGeometry, x, y) -> float:
    """D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>."""
    x = check_domain(geom, x, "x")
    y = check_domain(geom, y, "y")
    if x.shape != y.shape:
        raise ParameterError(f"shape mismatch: {x.shape} vs {y.shape}")
    d = geom.phi(x) - geom.phi(y) - float(np.vdot(geom.grad(y), x - y))
    # Mathematically nonnegative; guard against rounding a hair below zero.
    return max(d, 0.0)


def _all_true(v: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(v), dtype=bool)


def _positive(v: np.ndarray) -> np.ndarray:
    return np.asarray(v) > DOMAIN_FLOOR


def make_euclidean(mu: float) -> BregmanGeometry:
    """phi(x) = (mu/2)||x||^2 with grad = mu*x; theta = mu everywhere."""
    if mu <= 0:
        raise ParameterError("mu must be positive")
    return BregmanGeometry(
        name=f"euclid(mu={mu:g})",
        phi=lambda x: 0.5 * mu * float(np.vdot(x, x)),
        grad=lambda x: mu * np.asarray(x, dtype=float),
        inv_grad=lambda v: np.asarray(v, dtype=float) / mu,
        theta=mu,
        grad_lipschitz=mu,
        domain_mask=_all_true,
        dual_mask=_all_true,
        hessian_scale=mu,
    )


def make_kl(mu: float, box: tuple[float, float] | None = None) -> BregmanGeometry:
    """Kullback-Leibler kernel phi(x) = mu * sum x_i ln x_i on x > 0.

    grad = mu*(1 + ln x), inverse exp(v/mu - 1). On a box [lo, hi] the
    second derivative mu/x is at least mu/hi, giving theta = mu/hi.
    """
    if mu <= 0:
        raise ParameterError("mu must be positive")
    lo, hi = _checked_box(box)
    return BregmanGeometry(
        name=f"kl(mu={mu:g})",
        phi=lambda x: mu * float(np.sum(x * np.log(x))),
        grad=lambda x: mu * (1.0 + np.log(x)),
        inv_grad=lambda v: np.exp(np.asarray(v, dtype=float) / mu - 1.0),
        theta=mu / hi if box is not None else 0.0,
        grad_lipschitz=mu / lo if box is not None else math.inf,
        domain_mask=_positive,
        dual_mask=_all_true,
        box=box,
    )


def make_itakura_saito(mu: float, box: tuple[float, float] | None = None) -> BregmanGeometry:
    """Itakura-Saito kernel phi(x) = -mu * sum ln x_i on x > 0.

    grad = -mu/x with inverse -mu/v, defined only for v < 0. On a box
    [lo, hi] the second derivative mu/x^2 is at least mu/hi^2.
    """
    if mu <= 0:
        raise ParameterError("mu must be positive")
    lo, hi = _checked_box(box)
    return BregmanGeometry(
        name=f"is(mu={mu:g})",
        phi=lambda x: -mu * float(np.sum(np.log(x))),
        grad=lambda x: -mu / np.asarray(x, dtype=float),
        inv_grad=lambda v: -mu / np.asarray(v, dtype=float),
        theta=mu / hi**2 if box is not None else 0.0,
        grad_lipschitz=mu / lo**2 if box is not None else math.inf,
        domain_mask=_positive,
        dual_mask=lambda v: np.asarray(v) < 0.0,
        box=box,
    )


def make_mahalanobis(m) -> BregmanGeometry:
    """phi(x) = <x, M x> for symmetric positive definite M, so D(x,y) = ||x-y||_M^2."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"M must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12):
        raise ParameterError("M must be symmetric")
    m = 0.5 * (m + m.T)
    try:
        factor = cho_factor(2.0 * m)
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"M is not positive definite (Cholesky failed: {exc})") from exc
    eigs = np.linalg.eigvalsh(m)
    return BregmanGeometry(
        name=f"mahalanobis({m.shape[0]}x{m.shape[0]})",
        phi=lambda x: float(np.vdot(x, m @ x)),
        grad=lambda x: 2.0 * (m @ np.asarray(x, dtype=float)),
        inv_grad=lambda v: cho_solve(factor, np.asarray(v, dtype=float)),
        theta=2.0 * float(eigs[0]),
        grad_lipschitz=2.0 * float(eigs[-1]),
        domain_mask=_all_true,
        dual_mask=_all_true,
        hessian_matrix=2.0 * m,
    )


GEOMETRY_TOKENS = ("euclid", "kl", "is", "mahalanobis")


def geometry_from_token(
    token: str,
    mu: float = 1.0,
    box: tuple[float, float] | None = None,
    matrix=None,
) -> BregmanGeometry:
    """Build a geometry from its config name: euclid, kl, is or mahalanobis."""
    token = token.strip().lower()
    if token == "euclid":
        return make_euclidean(mu)
    if token == "kl":
        return make_kl(mu, box)
    if token == "is":
        return make_itakura_saito(mu, box)
    if token == "mahalanobis":
        if matrix is None:
            raise ParameterError("mahalanobis geometry needs a matrix")
        return make_mahalanobis(matrix)
    raise ParameterError(f"unknown geometry token {token!r}; expected one of {GEOMETRY_TOKENS}")


def _checked_box(box):
    if box is None:
        return (0.0, math.inf)
    lo, hi = float(box[0]), float(box[1])
    if not (0.0 < lo <= hi) or not math.isfinite(hi):
        raise ParameterError(f"operating box must satisfy 0 < lo <= hi < inf, got {box}")
    return lo, hi
