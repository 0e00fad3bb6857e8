"""Sparse signal recovery with an L-half penalty, split into two blocks.

The model couples a least-squares block with a half-quasinorm block:

    f(x) = (1/2)||Ax - b||^2
    Q(x, y) = (gamma/2)||x - y||^2
    g(y) = eta * sum_i sqrt(|y_i|)

With the x-geometry phi_1 = (1/2)||x||^2_{mu I - A'A} the x-subproblem has
the explicit solution

    x+ = (1/mu)[mu x - A'A x + A'b - gamma(x - y) - drift]

and with phi_2 = (lambda/2)||y||^2 the y-subproblem is one half-shrinkage.
Both blocks also accept general quadratic geometries, in which case the
normal equations are solved with a factorization cached per geometry. That
same machinery supplies the exact alternating block minimizers (the full
coupling kept in the subproblem) used by the two-step exact variant.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..errors import CapabilityError, ParameterError
from ..geometry import BregmanGeometry, make_euclidean
from ..linalg import (
    as_matrix,
    as_vector,
    gaussian_matrix,
    normalize_for_contraction,
    spectral_norm_sq,
)
from ..prox import half_shrinkage
from .base import CoupledProblem

__all__ = ["SignalRecoveryProblem", "make_signal_recovery"]


class SignalRecoveryProblem(CoupledProblem):
    """Two-block L-half recovery problem for a contractive sensing matrix.

    Requires ||A|| <= 1 < mu so that mu*I - A'A is positive definite, and
    lambda_y > gamma so the admissibility margin
    rho = min(mu - ||A||^2 - gamma, lambda_y - gamma) is positive.
    """

    def __init__(self, a_mat, b, eta, gamma=0.2, mu=2.0, lambda_y=1.5, x_true=None):
        self.a_mat = as_matrix(a_mat)
        self.b = as_vector(b)
        if self.a_mat.shape[0] != self.b.size:
            raise ParameterError(
                f"A has {self.a_mat.shape[0]} rows but b has {self.b.size} entries"
            )
        if eta <= 0:
            raise ParameterError("eta must be positive")
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.mu = float(mu)
        self.lambda_y = float(lambda_y)
        self.x_true = None if x_true is None else as_vector(x_true)
        self.a_norm_sq = spectral_norm_sq(self.a_mat)
        if self.mu <= self.a_norm_sq:
            raise ParameterError(
                f"mu = {self.mu} must exceed ||A||^2 = {self.a_norm_sq}; "
                "the x-geometry would not be positive definite"
            )
        if self.rho() <= 0:
            raise ParameterError(
                f"rho = {self.rho()} must be positive; "
                f"check mu, lambda_y against gamma = {self.gamma}"
            )
        self._atb = self.a_mat.T @ self.b
        self._x_geom = None
        self._gram = None
        self._solvers = {}

    # -- objective pieces ---------------------------------------------------

    def f_value(self, x) -> float:
        r = self.a_mat @ x - self.b
        return 0.5 * float(np.vdot(r, r))

    def g_value(self, y) -> float:
        return self.eta * float(np.sum(np.sqrt(np.abs(y))))

    def q_value(self, x, y) -> float:
        d = x - y
        return 0.5 * self.gamma * float(np.vdot(d, d))

    def grad_x_q(self, x, y) -> np.ndarray:
        return self.gamma * (x - y)

    def grad_y_q(self, x, y) -> np.ndarray:
        return self.gamma * (y - x)

    def coupling_lipschitz_bounds(self) -> tuple[float, float]:
        return (self.gamma, self.gamma)

    def rho(self) -> float:
        return min(self.mu - self.a_norm_sq - self.gamma, self.lambda_y - self.gamma)

    # -- geometries ----------------------------------------------------------

    def x_geometry(self) -> BregmanGeometry:
        """phi(x) = (1/2) x'(mu I - A'A) x, evaluated through A to stay O(n m)."""
        if self._x_geom is None:
            a, mu = self.a_mat, self.mu

            def phi(x):
                return 0.5 * (mu * float(np.vdot(x, x)) - float(np.vdot(a @ x, a @ x)))

            def grad(x):
                return mu * x - a.T @ (a @ x)

            def inv_grad(v):
                return cho_solve(self._m_factor(), np.asarray(v, dtype=float))

            self._x_geom = BregmanGeometry(
                name="sigrec-x(mu*I - A'A)",
                phi=phi,
                grad=grad,
                inv_grad=inv_grad,
                theta=self.mu - self.a_norm_sq,
                grad_lipschitz=self.mu,
                domain_mask=lambda v: np.ones(np.shape(v), dtype=bool),
                dual_mask=lambda v: np.ones(np.shape(v), dtype=bool),
            )
        return self._x_geom

    def default_geometries(self) -> tuple[BregmanGeometry, BregmanGeometry]:
        return (self.x_geometry(), make_euclidean(self.lambda_y))

    def _m_factor(self):
        key = "m"
        if key not in self._solvers:
            self._solvers[key] = cho_factor(self.mu * np.eye(self.a_mat.shape[1]) - self.gram())
        return self._solvers[key]

    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = self.a_mat.T @ self.a_mat
        return self._gram

    def _quad_factor(self, geom: BregmanGeometry, extra_identity: float):
        """Cached Cholesky of A'A + extra*I + Hess(phi) for a quadratic geometry."""
        key = (id(geom), extra_identity)
        if key not in self._solvers:
            if geom.hessian_scale is not None:
                lhs = self.gram() + (geom.hessian_scale + extra_identity) * np.eye(
                    self.a_mat.shape[1]
                )
            elif geom.hessian_matrix is not None:
                lhs = self.gram() + geom.hessian_matrix
                if extra_identity:
                    lhs = lhs + extra_identity * np.eye(self.a_mat.shape[1])
            else:
                raise CapabilityError(
                    f"signal-recovery x-block needs a quadratic geometry, got {geom.name}"
                )
            self._solvers[key] = cho_factor(lhs)
        return self._solvers[key]

    # -- block solvers -------------------------------------------------------

    def solve_x(self, geom, x_anchor, y_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        """Minimize f(x) + <x, grad_q + drift> + D_phi(x, anchor) exactly."""
        lin = grad_q + drift
        if geom is self._x_geom:
            ax = self.a_mat @ x_anchor
            x_new = (self.mu * x_anchor - self.a_mat.T @ ax + self._atb - lin) / self.mu
            return x_new, 1
        rhs = self._atb - lin + self._hess_apply(geom, x_anchor)
        return cho_solve(self._quad_factor(geom, 0.0), rhs), 1

    def solve_y(self, geom, y_anchor, x_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        """Minimize g(y) + <y, grad_q + drift> + (s/2)||y - anchor||^2 by half shrinkage."""
        s = self._euclid_scale(geom, "y")
        w = y_anchor - (grad_q + drift) / s
        return half_shrinkage(w, self.eta / s), 1

    def solve_x_full(self, geom, x_anchor, y_frozen, drift) -> tuple[np.ndarray, int]:
        """Exact minimizer of f(x) + Q(x, y) + D_phi(x, anchor) + <x, drift>."""
        if geom is self._x_geom:
            ax = self.a_mat @ x_anchor
            rhs = (
                self.mu * x_anchor
                - self.a_mat.T @ ax
                + self._atb
                + self.gamma * y_frozen
                - drift
            )
            return rhs / (self.mu + self.gamma), 1
        rhs = self._atb + self.gamma * y_frozen - drift + self._hess_apply(geom, x_anchor)
        return cho_solve(self._quad_factor(geom, self.gamma), rhs), 1

    def solve_y_full(self, geom, y_anchor, x_frozen, drift) -> tuple[np.ndarray, int]:
        """Exact minimizer of g(y) + Q(x, y) + (s/2)||y - anchor||^2 + <y, drift>."""
        s = self._euclid_scale(geom, "y")
        total = self.gamma + s
        w = (self.gamma * x_frozen + s * y_anchor - drift) / total
        return half_shrinkage(w, self.eta / total), 1

    def _hess_apply(self, geom, v):
        if geom.hessian_scale is not None:
            return geom.hessian_scale * v
        if geom.hessian_matrix is not None:
            return geom.hessian_matrix @ v
        raise CapabilityError(
            f"signal-recovery x-block needs a quadratic geometry, got {geom.name}"
        )

    def _euclid_scale(self, geom, block):
        if geom.hessian_scale is None:
            raise CapabilityError(
                f"signal-recovery {block}-block needs a Euclidean geometry, got {geom.name}"
            )
        return geom.hessian_scale

    def initial_point(self, seed: Optional[int] = None):
        """The origin, for every seed."""
        m = self.a_mat.shape[1]
        return np.zeros(m), np.zeros(m)


def make_signal_recovery(
    n: int,
    m: int,
    seed: int,
    noisy: bool = False,
    sparsity: float = 0.05,
    gamma: float = 0.2,
    mu: float = 2.0,
    lambda_y: float = 1.5,
) -> SignalRecoveryProblem:
    """Sample a recovery instance: Gaussian A scaled to ||A|| <= 1, sparse truth.

    The ground truth has ceil(sparsity * m) standard-normal entries at
    uniformly random positions, b = A x (plus N(0, 1e-3 I) noise when
    ``noisy``), and eta = 0.001 * ||A'b||_inf. The sensing matrix comes from
    the seed itself; all auxiliary draws use the child stream spawn_key=(1,)
    of the same seed, so instances are pure functions of the arguments.
    """
    if not n < m:
        raise ParameterError(f"need n < m, got n={n}, m={m}")
    a = normalize_for_contraction(gaussian_matrix(n, m, seed))
    aux = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    k = math.ceil(sparsity * m)
    x_true = np.zeros(m)
    support = aux.choice(m, size=k, replace=False)
    x_true[support] = aux.standard_normal(k)
    b = a @ x_true
    if noisy:
        b = b + aux.normal(0.0, math.sqrt(1e-3), size=n)
    eta = 1e-3 * float(np.max(np.abs(a.T @ b)))
    return SignalRecoveryProblem(
        a, b, eta, gamma=gamma, mu=mu, lambda_y=lambda_y, x_true=x_true
    )
