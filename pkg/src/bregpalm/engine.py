"""Generic two-step inertial Bregman proximal alternating minimization engine.

One iteration updates the x-block first, then the y-block, each by solving

    min_u  piece(u) + <u, grad_Q_at_linearization + drift> + D_phi(u, anchor)

through the problem's block subproblem solver, where the inertial drift is
the linear-term coefficient  a1_k (u_{k-1} - u_k) + a2_k (u_{k-2} - u_{k-1}).
The named reductions and baselines (one-step inertia, no inertia, Euclidean
prox, extrapolated-gradient and Gauss-Seidel tilde variants, and the exact
alternating variant) are separate step functions sharing the same state and
trace bookkeeping.

Diagnostics: the benefit function H (the objective augmented with weighted
squared iterate differences), its per-iteration sufficient-decrease slack
against the margin a = (rho - 2(alpha1 + alpha2))/2, and the criticality
residual assembled from gradient differences, mirror-map differences and
trailing inertial terms.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, InadmissibleScheduleError, ParameterError, SolverFault
from .geometry import BregmanGeometry

__all__ = [
    "VARIANTS",
    "CoefficientSeq",
    "InertialSchedule",
    "SolverState",
    "StoppingRule",
    "IterationRecord",
    "RunTrace",
    "validate_schedule",
    "compute_rho",
    "benefit_H",
    "sufficient_decrease_check",
    "decrease_ok",
    "criticality_residual",
    "tibpalm_step",
    "ibpalm_step",
    "bpalm_step",
    "palm_step",
    "ipalm_step",
    "gipalm_step",
    "tibam_step",
    "run",
]

VARIANTS = ("tibpalm", "ibpalm", "bpalm", "palm", "ipalm", "gipalm", "tibam")

# Variants whose block optimality conditions match the criticality-residual
# formula (linearized coupling, anchored prox at the previous iterate).
_RESIDUAL_VARIANTS = frozenset({"tibpalm", "ibpalm", "bpalm", "palm"})

_RAMP_TOKEN = "(k-1)/(k+2)"

_DIVERGENCE_MARGIN = 1e12


class CoefficientSeq:
    """Inertial coefficient sequence: a nonnegative constant or the (k-1)/(k+2) ramp."""

    def __init__(self, value):
        if isinstance(value, CoefficientSeq):
            self._constant = value._constant
            return
        if isinstance(value, str):
            if re.sub(r"\s+", "", value) != _RAMP_TOKEN:
                raise ParameterError(
                    f"unknown coefficient token {value!r}; expected a number or {_RAMP_TOKEN!r}"
                )
            self._constant = None
            return
        c = float(value)
        if c < 0.0 or not math.isfinite(c):
            raise ParameterError(f"inertial coefficient must be finite and >= 0, got {c}")
        self._constant = c

    def __call__(self, k: int) -> float:
        if self._constant is not None:
            return self._constant
        return max(0.0, (k - 1.0) / (k + 2.0))

    @property
    def bound(self) -> float:
        return self._constant if self._constant is not None else 1.0

    @property
    def token(self) -> str:
        return repr(self._constant) if self._constant is not None else _RAMP_TOKEN

    def __eq__(self, other):
        return isinstance(other, CoefficientSeq) and self._constant == other._constant

    def __repr__(self):
        return f"CoefficientSeq({self.token})"


@dataclass(frozen=True)
class InertialSchedule:
    """The four inertial sequences with their bounds and the admissibility margin rho.

    alpha1/alpha2 drive the x-block first/second-order terms, beta1/beta2 the
    y-block. The shared bounds are alpha1_bound = max over the two
    first-order sequences (likewise second-order), and the schedule is
    admissible iff 2*(alpha1_bound + alpha2_bound) < rho.
    """

    alpha1: CoefficientSeq
    alpha2: CoefficientSeq
    beta1: CoefficientSeq
    beta2: CoefficientSeq
    rho: float

    @classmethod
    def constant(cls, alpha1=0.0, alpha2=0.0, beta1=None, beta2=None, *, rho):
        """Schedule with constant coefficients; betas default to the alphas."""
        beta1 = alpha1 if beta1 is None else beta1
        beta2 = alpha2 if beta2 is None else beta2
        return cls(
            CoefficientSeq(alpha1), CoefficientSeq(alpha2),
            CoefficientSeq(beta1), CoefficientSeq(beta2), float(rho),
        )

    @property
    def alpha1_bound(self) -> float:
        return max(self.alpha1.bound, self.beta1.bound)

    @property
    def alpha2_bound(self) -> float:
        return max(self.alpha2.bound, self.beta2.bound)

    def margin(self) -> float:
        """a = (rho - 2*(alpha1 + alpha2)) / 2, positive iff admissible."""
        return 0.5 * (self.rho - 2.0 * (self.alpha1_bound + self.alpha2_bound))


def validate_schedule(sched: InertialSchedule) -> float:
    """Return the positive margin a, or raise carrying the violated inequality."""
    if sched.rho <= 0:
        raise InadmissibleScheduleError(
            f"rho = {sched.rho!r} must be positive for the descent guarantee"
        )
    a = sched.margin()
    if a <= 0:
        lhs = 2.0 * (sched.alpha1_bound + sched.alpha2_bound)
        raise InadmissibleScheduleError(
            f"inadmissible inertia: 2*(alpha1 + alpha2) = {lhs!r} >= rho = {sched.rho!r}"
        )
    return a


def compute_rho(problem, geom_x: BregmanGeometry, geom_y: BregmanGeometry) -> float:
    """rho = min(theta_1 - L1_plus, theta_2 - L2_plus) for fixed geometries."""
    l1, l2 = problem.coupling_lipschitz_bounds()
    return min(geom_x.theta - l1, geom_y.theta - l2)


@dataclass(frozen=True, eq=False)
class SolverState:
    """Rolling window of block iterates: z_k back to z_{k-3}.

    The algorithm itself needs z_k, z_{k-1}, z_{k-2}; the extra trailing slot
    exists so the criticality residual (which references z_{k-3} through its
    second-order inertial term) can be evaluated after a step. The tilde
    iterates are companions maintained only by the Gauss-Seidel variant.
    """

    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    y_prev: np.ndarray
    x_prev2: np.ndarray
    y_prev2: np.ndarray
    x_prev3: np.ndarray
    y_prev3: np.ndarray
    k: int = 0
    x_tilde: Optional[np.ndarray] = None
    y_tilde: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, x0, y0) -> "SolverState":
        """All window slots start at (x0, y0)."""
        x0 = np.asarray(x0, dtype=float)
        y0 = np.asarray(y0, dtype=float)
        return cls(x0, y0, x0, y0, x0, y0, x0, y0, 0, x0, y0)

    def advance(self, x_new, y_new, x_tilde=None, y_tilde=None) -> "SolverState":
        """Shift the window one step and install the new iterate."""
        return SolverState(
            x=x_new, y=y_new,
            x_prev=self.x, y_prev=self.y,
            x_prev2=self.x_prev, y_prev2=self.y_prev,
            x_prev3=self.x_prev2, y_prev3=self.y_prev2,
            k=self.k + 1,
            x_tilde=x_new if x_tilde is None else x_tilde,
            y_tilde=y_new if y_tilde is None else y_tilde,
        )


@dataclass(frozen=True)
class StoppingRule:
    """Stop once ||x_{k+1}-x_k|| + ||y_{k+1}-y_k|| < tol, or after max_iter steps."""

    tol: float = 1e-4
    max_iter: int = 20_000

    def __post_init__(self):
        if self.tol < 0 or math.isnan(self.tol):
            raise ParameterError(f"tol must be >= 0, got {self.tol}")
        if self.max_iter < 0:
            raise ParameterError(f"max_iter must be >= 0, got {self.max_iter}")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    objective: float
    benefit: float
    delta: float
    ek: float
    inner_x: int
    inner_y: int
    elapsed_ms: float
    s_resid: Optional[float] = None


@dataclass
class RunTrace:
    """Per-iteration records plus the run summary.

    ``records[0]`` describes the initial point, so ``len(records)`` is always
    ``iterations + 1``. ``terminal_block_gap`` is ||x_k - y_k|| at the final
    iterate when the blocks share a shape, else None.
    """

    variant: str
    seed: Optional[int]
    theory_supported: bool
    margin: float
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = "running"
    fault: Optional[str] = None
    terminal_block_gap: Optional[float] = None

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def total_time_s(self) -> float:
        return self.records[-1].elapsed_ms / 1e3 if self.records else 0.0

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.records]


def _norm(u) -> float:
    return float(np.linalg.norm(np.ravel(u)))


def _pair_norm_sq(dx, dy) -> float:
    return float(np.vdot(np.ravel(dx), np.ravel(dx)) + np.vdot(np.ravel(dy), np.ravel(dy)))


def benefit_H(problem, sched: InertialSchedule, z, z_prev, z_prev2) -> float:
    """H = L(z) + ((a1+a2)/2)||z - z_prev||^2 + (a2/2)||z_prev - z_prev2||^2.

    The weights are the schedule's bounds, so H collapses to L on constant
    windows and whenever both bounds are zero.
    """
    objective = problem.objective(z[0], z[1])
    return _benefit_from(objective, sched, z, z_prev, z_prev2)


def _benefit_from(objective, sched, z, z_prev, z_prev2) -> float:
    a1, a2 = sched.alpha1_bound, sched.alpha2_bound
    h = objective
    if a1 + a2 > 0:
        h += 0.5 * (a1 + a2) * _pair_norm_sq(z[0] - z_prev[0], z[1] - z_prev[1])
    if a2 > 0:
        h += 0.5 * a2 * _pair_norm_sq(z_prev[0] - z_prev2[0], z_prev[1] - z_prev2[1])
    return h


def sufficient_decrease_check(trace: RunTrace, a: Optional[float] = None) -> list[float]:
    """Slack H_k - H_{k+1} - a * delta_{k+1}^2 for every consecutive record pair.

    ``a`` defaults to the trace's schedule margin clamped at zero (so on
    theory-unsupported runs the check degrades to plain H-monotonicity).
    Purely diagnostic: never raises on negative slack.
    """
    if len(trace.records) < 2:
        raise ParameterError("need at least two recorded iterations")
    if a is None:
        a = max(trace.margin, 0.0)
    slacks = []
    for prev, cur in zip(trace.records, trace.records[1:]):
        slacks.append(prev.benefit - cur.benefit - a * cur.delta**2)
    return slacks


def decrease_ok(trace: RunTrace, a: Optional[float] = None, tol_rel: float = 1e-9) -> bool:
    """True when every slack is >= -tol_rel * (1 + |H_k|)."""
    slacks = sufficient_decrease_check(trace, a)
    return all(
        slack >= -tol_rel * (1.0 + abs(prev.benefit))
        for slack, prev in zip(slacks, trace.records)
    )


def criticality_residual(
    state: SolverState,
    problem,
    geom_x: BregmanGeometry,
    geom_y: BregmanGeometry,
    sched: InertialSchedule,
) -> float:
    """Norm of the subgradient witness at the current iterate.

    Assembled from coupling-gradient differences across the last step, mirror
    map differences, and the inertial terms of the step that produced the
    iterate; zero at a fixed point. Requires at least one completed step.
    """
    if state.k < 1:
        raise ParameterError("criticality residual needs one completed step")
    j = state.k - 1  # coefficients of the step that produced state
    s_x = (
        problem.grad_x_q(state.x, state.y)
        - problem.grad_x_q(state.x_prev, state.y_prev)
        + geom_x.grad(state.x_prev)
        - geom_x.grad(state.x)
        + sched.alpha1(j) * (state.x_prev - state.x_prev2)
        + sched.alpha2(j) * (state.x_prev2 - state.x_prev3)
    )
    s_y = (
        problem.grad_y_q(state.x, state.y)
        - problem.grad_y_q(state.x, state.y_prev)
        + geom_y.grad(state.y_prev)
        - geom_y.grad(state.y)
        + sched.beta1(j) * (state.y_prev - state.y_prev2)
        + sched.beta2(j) * (state.y_prev2 - state.y_prev3)
    )
    return math.sqrt(_pair_norm_sq(s_x, s_y))


# ---------------------------------------------------------------------------
# Step functions. Each performs one full block sweep and returns
# (new state, inner iterations for x, inner iterations for y).
# ---------------------------------------------------------------------------


def _geom_for_x(problem, geom_x, y_frozen):
    return geom_x if geom_x is not None else problem.geom_x_at(y_frozen)


def _geom_for_y(problem, geom_y, x_frozen):
    return geom_y if geom_y is not None else problem.geom_y_at(x_frozen)


def tibpalm_step(state, problem, geom_x, geom_y, sched):
    """Two-step inertial Bregman step: x-block at (x_k, y_k), then y-block at (x_{k+1}, y_k)."""
    k = state.k
    drift_x = sched.alpha1(k) * (state.x_prev - state.x) + sched.alpha2(k) * (
        state.x_prev2 - state.x_prev
    )
    gx = _geom_for_x(problem, geom_x, state.y)
    x_new, inner_x = problem.solve_x(gx, state.x, state.y, problem.grad_x_q(state.x, state.y), drift_x)

    drift_y = sched.beta1(k) * (state.y_prev - state.y) + sched.beta2(k) * (
        state.y_prev2 - state.y_prev
    )
    gy = _geom_for_y(problem, geom_y, x_new)
    y_new, inner_y = problem.solve_y(gy, state.y, x_new, problem.grad_y_q(x_new, state.y), drift_y)
    return state.advance(x_new, y_new), inner_x, inner_y


def ibpalm_step(state, problem, geom_x, geom_y, sched):
    """One-step inertial reduction: the second-order drift terms are absent."""
    k = state.k
    gx = _geom_for_x(problem, geom_x, state.y)
    x_new, inner_x = problem.solve_x(
        gx, state.x, state.y,
        problem.grad_x_q(state.x, state.y),
        sched.alpha1(k) * (state.x_prev - state.x),
    )
    gy = _geom_for_y(problem, geom_y, x_new)
    y_new, inner_y = problem.solve_y(
        gy, state.y, x_new,
        problem.grad_y_q(x_new, state.y),
        sched.beta1(k) * (state.y_prev - state.y),
    )
    return state.advance(x_new, y_new), inner_x, inner_y


def bpalm_step(state, problem, geom_x, geom_y, sched):
    """Bregman proximal alternating step without inertia."""
    gx = _geom_for_x(problem, geom_x, state.y)
    x_new, inner_x = problem.solve_x(
        gx, state.x, state.y, problem.grad_x_q(state.x, state.y), 0.0
    )
    gy = _geom_for_y(problem, geom_y, x_new)
    y_new, inner_y = problem.solve_y(
        gy, state.y, x_new, problem.grad_y_q(x_new, state.y), 0.0
    )
    return state.advance(x_new, y_new), inner_x, inner_y


def palm_step(state, problem, geom_x, geom_y, sched):
    """Proximal alternating linearized minimization with Euclidean prox terms.

    With phi = (mu/2)||.||^2 the Bregman prox equals the classical prox with
    step 1/mu; geometry kind is enforced at run configuration.
    """
    return bpalm_step(state, problem, geom_x, geom_y, sched)


def ipalm_step(state, problem, geom_x, geom_y, sched):
    """Inertial PALM: extrapolated prox centers u and gradient points v.

    Both x-side coefficients come from alpha1 and both y-side coefficients
    from beta1, matching runs where the pairs are chosen equal.
    """
    k = state.k
    x_ext = state.x + sched.alpha1(k) * (state.x - state.x_prev)
    gx = _geom_for_x(problem, geom_x, state.y)
    x_new, inner_x = problem.solve_x(gx, x_ext, state.y, problem.grad_x_q(x_ext, state.y), 0.0)

    y_ext = state.y + sched.beta1(k) * (state.y - state.y_prev)
    gy = _geom_for_y(problem, geom_y, x_new)
    y_new, inner_y = problem.solve_y(gy, y_ext, x_new, problem.grad_y_q(x_new, y_ext), 0.0)
    return state.advance(x_new, y_new), inner_x, inner_y


def gipalm_step(state, problem, geom_x, geom_y, sched):
    """Gauss-Seidel inertial step maintaining tilde companions of both blocks."""
    k = state.k
    xt, yt = state.x_tilde, state.y_tilde
    gx = _geom_for_x(problem, geom_x, yt)
    x_new, inner_x = problem.solve_x(gx, xt, yt, problem.grad_x_q(xt, yt), 0.0)
    xt_new = x_new + sched.alpha1(k) * (x_new - xt)

    gy = _geom_for_y(problem, geom_y, xt_new)
    y_new, inner_y = problem.solve_y(gy, yt, xt_new, problem.grad_y_q(xt_new, yt), 0.0)
    yt_new = y_new + sched.beta1(k) * (y_new - yt)
    return state.advance(x_new, y_new, xt_new, yt_new), inner_x, inner_y


def tibam_step(state, problem, geom_x, geom_y, sched):
    """Two-step inertial exact alternating step: the coupling is not linearized.

    Needs the problem to expose exact block minimizers of the full partial
    objective plus Bregman prox plus drift.
    """
    k = state.k
    drift_x = sched.alpha1(k) * (state.x_prev - state.x) + sched.alpha2(k) * (
        state.x_prev2 - state.x_prev
    )
    gx = _geom_for_x(problem, geom_x, state.y)
    x_new, inner_x = problem.solve_x_full(gx, state.x, state.y, drift_x)

    drift_y = sched.beta1(k) * (state.y_prev - state.y) + sched.beta2(k) * (
        state.y_prev2 - state.y_prev
    )
    gy = _geom_for_y(problem, geom_y, x_new)
    y_new, inner_y = problem.solve_y_full(gy, state.y, x_new, drift_y)
    return state.advance(x_new, y_new), inner_x, inner_y


STEP_FUNCTIONS: dict[str, Callable] = {
    "tibpalm": tibpalm_step,
    "ibpalm": ibpalm_step,
    "bpalm": bpalm_step,
    "palm": palm_step,
    "ipalm": ipalm_step,
    "gipalm": gipalm_step,
    "tibam": tibam_step,
}


def _check_capabilities(variant, problem, geom_x, geom_y):
    if variant == "tibam" and not (
        hasattr(problem, "solve_x_full") and hasattr(problem, "solve_y_full")
    ):
        raise CapabilityError(
            f"variant 'tibam' needs exact block minimizers, which "
            f"{type(problem).__name__} does not provide"
        )
    if variant in ("palm", "ipalm", "gipalm"):
        for label, geom in (("x", geom_x), ("y", geom_y)):
            if geom is not None and geom.hessian_scale is None:
                raise CapabilityError(
                    f"variant {variant!r} requires Euclidean geometries; "
                    f"{label}-geometry is {geom.name}"
                )


def run(
    problem,
    sched: InertialSchedule,
    variant: str = "tibpalm",
    *,
    geoms: Optional[tuple[BregmanGeometry, BregmanGeometry]] = None,
    stop: Optional[StoppingRule] = None,
    x0=None,
    y0=None,
    seed: Optional[int] = None,
    override_theory: bool = False,
    track_criticality: bool = True,
) -> RunTrace:
    """Iterate a variant until the stopping rule fires; return the full trace.

    Runs are deterministic given (problem, seed, configuration). Geometries
    default to the problem's adaptive per-iteration hooks when it has them,
    else to its fixed default pair. Inadmissible schedules abort before the
    first step unless ``override_theory`` is set, in which case the trace is
    marked theory-unsupported. A divergence guard terminates the run when the
    objective climbs more than 1e12 above its initial value or any iterate
    stops being finite; block-solver faults end the run with reason "fault"
    and the partial trace intact.
    """
    variant = variant.strip().lower()
    if variant not in STEP_FUNCTIONS:
        raise CapabilityError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    stop = stop or StoppingRule()

    if geoms is not None:
        geom_x, geom_y = geoms
    elif hasattr(problem, "geom_x_at"):
        geom_x = geom_y = None  # resolved per iteration from the problem
    elif hasattr(problem, "default_geometries"):
        geom_x, geom_y = problem.default_geometries()
    else:
        raise CapabilityError(
            f"{type(problem).__name__} provides neither fixed nor adaptive geometries"
        )
    _check_capabilities(variant, problem, geom_x, geom_y)

    margin = sched.margin()
    theory_supported = sched.rho > 0 and margin > 0
    if not theory_supported and not override_theory:
        validate_schedule(sched)  # raises with the violated inequality

    if x0 is None or y0 is None:
        x0, y0 = problem.initial_point(seed)
    state = SolverState.initial(x0, y0)
    step = STEP_FUNCTIONS[variant]

    trace = RunTrace(
        variant=variant, seed=seed, theory_supported=theory_supported, margin=margin
    )
    objective0 = problem.objective(state.x, state.y)
    trace.records.append(
        IterationRecord(0, objective0, objective0, 0.0, math.nan, 0, 0, 0.0)
    )

    with_residual = (
        track_criticality and variant in _RESIDUAL_VARIANTS and geom_x is not None
    )
    t0 = time.perf_counter()

    if math.isinf(stop.tol):
        trace.reason = "converged"
    else:
        while state.k < stop.max_iter:
            try:
                state, inner_x, inner_y = step(state, problem, geom_x, geom_y, sched)
            except SolverFault as fault:
                trace.reason = "fault"
                trace.fault = f"iteration {state.k}: {fault}"
                break

            ek = _norm(state.x - state.x_prev) + _norm(state.y - state.y_prev)
            delta = math.sqrt(_pair_norm_sq(state.x - state.x_prev, state.y - state.y_prev))
            objective = problem.objective(state.x, state.y)
            benefit = _benefit_from(
                objective, sched,
                (state.x, state.y), (state.x_prev, state.y_prev),
                (state.x_prev2, state.y_prev2),
            )
            resid = (
                criticality_residual(state, problem, geom_x, geom_y, sched)
                if with_residual else None
            )
            trace.records.append(
                IterationRecord(
                    state.k, objective, benefit, delta, ek, inner_x, inner_y,
                    (time.perf_counter() - t0) * 1e3, resid,
                )
            )

            finite = (
                math.isfinite(objective)
                and np.all(np.isfinite(state.x))
                and np.all(np.isfinite(state.y))
            )
            if not finite or objective > objective0 + _DIVERGENCE_MARGIN:
                trace.reason = "diverged"
                break
            if ek < stop.tol:
                trace.reason = "converged"
                break
        else:
            trace.reason = "max-iter"

    if np.shape(state.x) == np.shape(state.y):
        trace.terminal_block_gap = _norm(state.x - state.y)
    return trace
