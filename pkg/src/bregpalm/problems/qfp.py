"""Quadratic fractional programming over a box, split into two blocks.

    f(x) = (x'Mx + a'x + c) / (b'x + d)      on  {x : b'x + d > 0}
    Q(x, y) = (gamma/2)||x - y||^2
    g(y) = indicator of the box [lo, hi]^m

The x-subproblem keeps f whole and is solved by a damped mirror fixed-point
iteration; the y-subproblem is solved coordinatewise in closed form through
the inverse mirror map followed by a clamp to the box. Since x'Mx depends
only on the symmetric part of M, the gradient of f uses (M + M')/2.
"""

from __future__ import annotations

from importlib import resources
from typing import Optional

import numpy as np

from ..errors import DomainError, ParameterError, SolverFault
from ..geometry import BregmanGeometry, check_domain, make_euclidean
from ..linalg import as_matrix, as_vector, load_matrix
from ..prox import project_box
from .base import CoupledProblem

__all__ = ["QfpProblem", "load_qfp_problem1", "make_random_qfp"]

_MAX_DAMPINGS = 60


class QfpProblem(CoupledProblem):
    """Box-constrained quadratic-over-linear objective coupled to a free block."""

    def __init__(
        self,
        m_mat,
        a_vec,
        b_vec,
        c: float = -2.0,
        d: float = 20.0,
        box: tuple[float, float] = (1.0, 3.0),
        gamma: float = 10.0,
        inner_tol: float = 1e-8,
        inner_cap: int = 500,
    ):
        self.m_mat = as_matrix(m_mat)
        self.a_vec = as_vector(a_vec)
        self.b_vec = as_vector(b_vec)
        m = self.a_vec.size
        if self.m_mat.shape != (m, m) or self.b_vec.size != m:
            raise ParameterError(
                f"inconsistent shapes: M {self.m_mat.shape}, a {self.a_vec.size}, "
                f"b {self.b_vec.size}"
            )
        self.m_sym = 0.5 * (self.m_mat + self.m_mat.T)
        self.c = float(c)
        self.d = float(d)
        self.box = (float(box[0]), float(box[1]))
        if not self.box[0] <= self.box[1]:
            raise ParameterError(f"empty box {self.box}")
        self.gamma = float(gamma)
        self.inner_tol = float(inner_tol)
        self.inner_cap = int(inner_cap)
        worst = self.min_vertex_denominator()
        if worst <= 0:
            raise ParameterError(
                f"denominator b'x + d can reach {worst} <= 0 on the box; "
                "the objective is not defined over the feasible set"
            )

    def min_vertex_denominator(self) -> float:
        """min over the box of b'x + d, attained at a vertex coordinatewise."""
        lo, hi = self.box
        return float(np.sum(np.minimum(self.b_vec * lo, self.b_vec * hi)) + self.d)

    # -- objective pieces ---------------------------------------------------

    def denominator(self, x) -> float:
        return float(self.b_vec @ x + self.d)

    def f_value(self, x) -> float:
        den = self.denominator(x)
        if den <= 0:
            raise DomainError(f"denominator b'x + d = {den} <= 0")
        num = float(x @ (self.m_sym @ x) + self.a_vec @ x + self.c)
        return num / den

    def grad_f(self, x) -> np.ndarray:
        den = self.denominator(x)
        if den <= 0:
            raise DomainError(f"denominator b'x + d = {den} <= 0")
        num = float(x @ (self.m_sym @ x) + self.a_vec @ x + self.c)
        return ((2.0 * (self.m_sym @ x) + self.a_vec) * den - num * self.b_vec) / den**2

    def g_value(self, y) -> float:
        lo, hi = self.box
        return 0.0 if bool(np.all((y >= lo) & (y <= hi))) else float("inf")

    def q_value(self, x, y) -> float:
        d = x - y
        return 0.5 * self.gamma * float(np.vdot(d, d))

    def grad_x_q(self, x, y) -> np.ndarray:
        return self.gamma * (x - y)

    def grad_y_q(self, x, y) -> np.ndarray:
        return self.gamma * (y - x)

    def coupling_lipschitz_bounds(self) -> tuple[float, float]:
        return (self.gamma, self.gamma)

    def objective(self, x, y) -> float:
        return self.f_value(x) + self.q_value(x, y) + self.g_value(y)

    def default_geometries(self) -> tuple[BregmanGeometry, BregmanGeometry]:
        g = make_euclidean(36.0)
        return (g, g)

    # -- block solvers -------------------------------------------------------

    def solve_x(self, geom, x_anchor, y_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        """Minimize f(x) + <x, grad_q + drift> + D_phi(x, anchor) by mirror fixed point.

        Iterates x <- inv_grad_phi(grad_phi(anchor) - grad f(x) - lin) until the
        stationarity residual drops below inner_tol * (1 + ||grad_phi(anchor)||).
        A candidate that leaves the domain or fails to reduce the residual is
        replaced by dual-space halving toward the current iterate; exhausted
        halvings or the iteration cap raise a solver fault with the residual.
        """
        x_anchor = check_domain(geom, x_anchor, "x-anchor")
        lin = grad_q + drift
        anchor_dual = geom.grad(x_anchor)
        tol = self.inner_tol * (1.0 + float(np.linalg.norm(anchor_dual)))

        x = x_anchor
        gx = self.grad_f(x)
        res = float(np.linalg.norm(gx + lin + geom.grad(x) - anchor_dual))
        inner = 0
        while res > tol:
            if inner >= self.inner_cap:
                raise SolverFault(
                    f"x-block mirror iteration hit the cap ({self.inner_cap}) "
                    f"with residual {res:.3e}",
                    block="x",
                    residual=res,
                )
            target = anchor_dual - gx - lin
            cur_dual = geom.grad(x)
            step = None
            v = target
            for _ in range(_MAX_DAMPINGS):
                if bool(np.all(geom.dual_mask(v))):
                    cand = geom.inv_grad(v)
                    if bool(np.all(geom.domain_mask(cand))) and self.denominator(cand) > 0:
                        g_cand = self.grad_f(cand)
                        res_cand = float(
                            np.linalg.norm(g_cand + lin + geom.grad(cand) - anchor_dual)
                        )
                        if res_cand < res:
                            step = (cand, g_cand, res_cand)
                            break
                v = 0.5 * (v + cur_dual)
            if step is None:
                raise SolverFault(
                    f"x-block made no progress after {_MAX_DAMPINGS} dampings "
                    f"(residual {res:.3e})",
                    block="x",
                    residual=res,
                )
            x, gx, res = step
            inner += 1
        return x, inner

    def solve_y(self, geom, y_anchor, x_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        """Coordinatewise exact minimizer of <y, lin> + D_phi(y, anchor) over the box.

        The unconstrained stationary point inv_grad_phi(grad_phi(anchor) - lin)
        is clamped to the box. Coordinates whose transformed gradient lies
        outside the range of grad phi (possible for the Itakura-Saito kernel,
        whose gradient is negative) have a strictly decreasing coordinate
        objective, so the upper box face is the minimizer there.
        """
        if geom.hessian_matrix is not None:
            raise ParameterError(
                f"y-block needs a separable kernel, got {geom.name}"
            )
        y_anchor = check_domain(geom, y_anchor, "y-anchor")
        lo, hi = self.box
        dual = geom.grad(y_anchor) - (grad_q + drift)
        mask = geom.dual_mask(dual)
        y = np.full_like(np.asarray(dual, dtype=float), hi)
        if np.any(mask):
            y[mask] = geom.inv_grad(dual[mask])
        return project_box(y, lo, hi), 1

    def initial_point(self, seed: Optional[int] = None):
        """One uniformly random point of the box, shared by both blocks."""
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        z0 = rng.uniform(lo, hi, size=self.a_vec.size)
        return z0, z0.copy()


def load_qfp_problem1(**kwargs) -> QfpProblem:
    """The bundled fixed 5x5 instance (c = -2, d = 20, box [1, 3])."""
    data = resources.files("bregpalm").joinpath("data")
    with resources.as_file(data.joinpath("qfp1_M.txt")) as p:
        m_mat = load_matrix(p)
    with resources.as_file(data.joinpath("qfp1_a.txt")) as p:
        a_vec = load_matrix(p).ravel()
    with resources.as_file(data.joinpath("qfp1_b.txt")) as p:
        b_vec = load_matrix(p).ravel()
    return QfpProblem(m_mat, a_vec, b_vec, **kwargs)


def make_random_qfp(m: int, seed: int, **kwargs) -> QfpProblem:
    """Random instance: M, a standard normal; b uniform on [0, 1).

    Nonnegative b keeps b'x + d positive over the box for the default d = 20,
    which the constructor verifies at the minimizing vertex.
    """
    rng = np.random.default_rng(seed)
    m_mat = rng.standard_normal((m, m))
    a_vec = rng.standard_normal(m)
    b_vec = rng.random(m)
    return QfpProblem(m_mat, a_vec, b_vec, **kwargs)
