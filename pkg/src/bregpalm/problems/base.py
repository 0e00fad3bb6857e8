"""Shared surface of the block-structured problems.

A coupled problem exposes the three objective pieces of

    L(x, y) = f(x) + Q(x, y) + g(y),

the partial gradients of the smooth coupling Q, Lipschitz bounds for those
gradients over the operating region, and block subproblem solvers. A block
solver receives the Bregman geometry, the prox anchor, the frozen other
block, the coupling gradient at the linearization point and the inertial
drift (the coefficient of the extra linear term), and returns the new block
value together with its inner iteration count.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


class CoupledProblem:
    """Base class; concrete problems implement the pieces they support."""

    def f_value(self, x) -> float:
        raise NotImplementedError

    def g_value(self, y) -> float:
        raise NotImplementedError

    def q_value(self, x, y) -> float:
        raise NotImplementedError

    def grad_x_q(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def grad_y_q(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def coupling_lipschitz_bounds(self) -> tuple[float, float]:
        """Upper bounds (L1, L2) on the partial-gradient moduli of Q."""
        raise NotImplementedError

    def objective(self, x, y) -> float:
        return self.f_value(x) + self.q_value(x, y) + self.g_value(y)

    def solve_x(self, geom, x_anchor, y_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        raise NotImplementedError

    def solve_y(self, geom, y_anchor, x_frozen, grad_q, drift) -> tuple[np.ndarray, int]:
        raise NotImplementedError

    def initial_point(self, seed: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError
