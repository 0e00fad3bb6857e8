import math

import numpy as np
import pytest

from bregpalm import (
    CapabilityError,
    CoefficientSeq,
    InadmissibleScheduleError,
    InertialSchedule,
    ParameterError,
    SolverState,
    StoppingRule,
    benefit_H,
    compute_rho,
    criticality_residual,
    decrease_ok,
    make_euclidean,
    make_kl,
    make_signal_recovery,
    make_synthetic_nmf,
    run,
    sufficient_decrease_check,
    validate_schedule,
)
from bregpalm.engine import (
    bpalm_step,
    gipalm_step,
    ibpalm_step,
    ipalm_step,
    palm_step,
    tibam_step,
    tibpalm_step,
)
from bregpalm.problems.base import CoupledProblem


class TinyQuadProblem(CoupledProblem):
    """Smooth two-block quadratic: f = (c/2)||x||^2, Q = (g/2)||x-y||^2, h = (d/2)||y||^2.

    Every block subproblem is solved in closed form, so the engine's
    bookkeeping can be checked against exact optimality conditions.
    """

    def __init__(self, c=1.0, d=2.0, coupling=0.5, dim=2):
        self.c, self.d, self.coupling, self.dim = c, d, coupling, dim

    def f_value(self, x):
        return 0.5 * self.c * float(np.vdot(x, x))

    def g_value(self, y):
        return 0.5 * self.d * float(np.vdot(y, y))

    def q_value(self, x, y):
        diff = x - y
        return 0.5 * self.coupling * float(np.vdot(diff, diff))

    def grad_x_q(self, x, y):
        return self.coupling * (x - y)

    def grad_y_q(self, x, y):
        return self.coupling * (y - x)

    def coupling_lipschitz_bounds(self):
        return (self.coupling, self.coupling)

    def default_geometries(self):
        return (make_euclidean(2.0), make_euclidean(3.0))

    def solve_x(self, geom, x_anchor, y_frozen, grad_q, drift):
        s = geom.hessian_scale
        return (s * x_anchor - grad_q - drift) / (self.c + s), 1

    def solve_y(self, geom, y_anchor, x_frozen, grad_q, drift):
        s = geom.hessian_scale
        return (s * y_anchor - grad_q - drift) / (self.d + s), 1

    def initial_point(self, seed=None):
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim), rng.standard_normal(self.dim)

    def grad_full(self, x, y):
        return (
            self.c * x + self.coupling * (x - y),
            self.d * y + self.coupling * (y - x),
        )


class TestCoefficientSeq:
    def test_constant(self):
        seq = CoefficientSeq(0.3)
        assert seq(0) == seq(100) == 0.3
        assert seq.bound == 0.3

    def test_ramp_token(self):
        seq = CoefficientSeq("(k-1)/(k+2)")
        assert seq(0) == 0.0
        assert seq(1) == 0.0
        assert seq(3) == pytest.approx(0.4)
        assert seq.bound == 1.0

    def test_rejects_bad_values(self):
        with pytest.raises(ParameterError):
            CoefficientSeq(-0.1)
        with pytest.raises(ParameterError):
            CoefficientSeq("k/(k+3)")


class TestScheduleValidation:
    def test_margin_from_reference_recipe(self):
        sched = InertialSchedule.constant(0.198, 0.198, rho=0.8)
        assert validate_schedule(sched) == pytest.approx(0.004, abs=1e-12)

    def test_no_inertia_margin_is_half_rho(self):
        sched = InertialSchedule.constant(rho=0.8)
        assert validate_schedule(sched) == pytest.approx(0.4)

    def test_violated_inequality_raises(self):
        sched = InertialSchedule.constant(0.3, 0.2, rho=0.8)
        with pytest.raises(InadmissibleScheduleError, match="inadmissible inertia"):
            validate_schedule(sched)

    def test_nonpositive_rho_raises(self):
        with pytest.raises(InadmissibleScheduleError, match="rho"):
            validate_schedule(InertialSchedule.constant(rho=0.0))

    def test_bounds_cover_both_blocks(self):
        sched = InertialSchedule.constant(0.1, 0.0, beta1=0.4, rho=1.0)
        assert sched.alpha1_bound == 0.4


class TestBenefit:
    def test_collapses_to_objective_on_constant_window(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(0.7, 0.3, rho=10.0)
        z = (np.array([1.0, 2.0]), np.array([0.5, -1.0]))
        assert benefit_H(p, sched, z, z, z) == pytest.approx(p.objective(*z), rel=1e-15)

    def test_zero_bounds_give_objective(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(rho=1.0)
        z = (np.array([1.0]), np.array([2.0]))
        zp = (np.array([-3.0]), np.array([0.0]))
        assert benefit_H(p, sched, z, zp, zp) == p.objective(*z)

    def test_hand_computed_quadratic_terms(self):
        # unit bounds, ||z - z_prev|| = 1 and ||z_prev - z_prev2|| = 2
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(1.0, 1.0, rho=10.0)
        z = (np.array([1.0]), np.array([0.0]))
        zp = (np.array([0.0]), np.array([0.0]))
        zpp = (np.array([2.0]), np.array([0.0]))
        expected = p.objective(*z) + 0.5 * (1 + 1) * 1.0 + 0.5 * 1.0 * 4.0
        assert benefit_H(p, sched, z, zp, zpp) == pytest.approx(expected, rel=1e-14)


class TestStepBookkeeping:
    def test_fixed_point_is_stationary(self):
        # the joint minimizer of the tiny quadratic is the origin
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(0.2, 0.1, rho=1.0)
        state = SolverState.initial(np.zeros(2), np.zeros(2))
        new, _, _ = tibpalm_step(state, p, *p.default_geometries(), sched)
        np.testing.assert_array_equal(new.x, state.x)
        np.testing.assert_array_equal(new.y, state.y)

    def test_window_shift_replay(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(0.2, 0.1, rho=1.0)
        geoms = p.default_geometries()
        state = SolverState.initial(*p.initial_point(0))
        xs = [state.x]
        ys = [state.y]
        for n in range(1, 11):
            state, _, _ = tibpalm_step(state, p, *geoms, sched)
            xs.append(state.x)
            ys.append(state.y)
            assert state.k == n
            np.testing.assert_array_equal(state.x_prev, xs[n - 1])
            np.testing.assert_array_equal(state.x_prev2, xs[max(n - 2, 0)])
            np.testing.assert_array_equal(state.x_prev3, xs[max(n - 3, 0)])
            np.testing.assert_array_equal(state.y_prev, ys[n - 1])

    def test_initial_state_fills_all_slots(self):
        state = SolverState.initial([1.0], [2.0])
        for attr in ("x", "x_prev", "x_prev2", "x_prev3"):
            np.testing.assert_array_equal(getattr(state, attr), [1.0])


class TestReductions:
    def _drive(self, step, problem, geoms, sched, iters, seed=0):
        state = SolverState.initial(*problem.initial_point(seed))
        for _ in range(iters):
            state, _, _ = step(state, problem, *geoms, sched)
        return state

    def test_second_order_zero_matches_one_step_variant(self):
        p = make_signal_recovery(20, 60, seed=3)
        geoms = p.default_geometries()
        rho = compute_rho(p, *geoms)
        sched = InertialSchedule.constant(0.99 * rho / 2, 0.0, rho=rho)
        a = self._drive(tibpalm_step, p, geoms, sched, 120)
        b = self._drive(ibpalm_step, p, geoms, sched, 120)
        assert np.max(np.abs(a.x - b.x)) <= 1e-12
        assert np.max(np.abs(a.y - b.y)) <= 1e-12

    def test_all_zero_matches_uninertial_variant(self):
        p = make_signal_recovery(20, 60, seed=3)
        geoms = p.default_geometries()
        sched = InertialSchedule.constant(rho=compute_rho(p, *geoms))
        a = self._drive(tibpalm_step, p, geoms, sched, 120)
        b = self._drive(bpalm_step, p, geoms, sched, 120)
        assert np.max(np.abs(a.x - b.x)) <= 1e-12
        assert np.max(np.abs(a.y - b.y)) <= 1e-12

    def test_euclidean_zero_inertia_matches_classical_prox_steps(self):
        # phi = (mu/2)||.||^2 makes the Bregman step the classical prox step
        # with step size 1/mu
        p = make_signal_recovery(20, 60, seed=3)
        geoms = (make_euclidean(2.0), make_euclidean(1.5))
        sched = InertialSchedule.constant(rho=1.0)
        a = self._drive(tibpalm_step, p, geoms, sched, 120)
        b = self._drive(palm_step, p, geoms, sched, 120)
        assert np.max(np.abs(a.x - b.x)) <= 1e-12
        assert np.max(np.abs(a.y - b.y)) <= 1e-12

    def test_extrapolated_variants_collapse_without_inertia(self):
        p = make_synthetic_nmf(12, 8, 3, seed=1)
        sched = InertialSchedule.constant(rho=0.0)
        a = self._drive(ipalm_step, p, (None, None), sched, 40)
        b = self._drive(palm_step, p, (None, None), sched, 40)
        c = self._drive(gipalm_step, p, (None, None), sched, 40)
        assert np.max(np.abs(a.x - b.x)) <= 1e-12
        assert np.max(np.abs(c.x - b.x)) <= 1e-12
        np.testing.assert_array_equal(c.x_tilde, c.x)

    def test_exact_alternating_x_block_matches_linear_solve(self):
        # With a Euclidean kernel the exact x-block of the alternating
        # variant solves (A'A + (gamma + mu) I) x = A'b + gamma y + mu x_k.
        p = make_signal_recovery(10, 25, seed=5)
        geom_x = make_euclidean(2.0)
        rng = np.random.default_rng(0)
        anchor = rng.standard_normal(25)
        y = rng.standard_normal(25)
        x_new, _ = p.solve_x_full(geom_x, anchor, y, 0.0)
        a = p.a_mat
        lhs = a.T @ a + (p.gamma + 2.0) * np.eye(25)
        rhs = a.T @ p.b + p.gamma * y + 2.0 * anchor
        np.testing.assert_allclose(x_new, np.linalg.solve(lhs, rhs), atol=1e-10)

    def test_exact_alternating_without_inertia_on_default_geometry(self):
        p = make_signal_recovery(10, 25, seed=5)
        geoms = p.default_geometries()
        sched = InertialSchedule.constant(rho=compute_rho(p, *geoms))
        state = self._drive(tibam_step, p, geoms, sched, 30)
        # the x iterate solves the full partial minimization: check optimality
        gx, _ = geoms
        grad = (
            p.a_mat.T @ (p.a_mat @ state.x - p.b)
            + p.gamma * (state.x - state.y_prev)
            + gx.grad(state.x)
            - gx.grad(state.x_prev)
        )
        assert np.linalg.norm(grad) <= 1e-10


class TestRun:
    def test_infinite_tol_converges_immediately(self):
        p = TinyQuadProblem()
        trace = run(p, InertialSchedule.constant(rho=1.0), "tibpalm",
                    stop=StoppingRule(tol=math.inf), seed=0)
        assert trace.reason == "converged"
        assert trace.iterations == 0
        assert len(trace.records) == 1

    def test_max_iter_cap(self):
        p = TinyQuadProblem()
        trace = run(p, InertialSchedule.constant(rho=1.0), "tibpalm",
                    stop=StoppingRule(tol=0.0, max_iter=5), seed=0)
        assert trace.reason == "max-iter"
        assert trace.iterations == 5
        assert len(trace.records) == 6

    def test_record_count_matches_iterations(self):
        p = TinyQuadProblem()
        trace = run(p, InertialSchedule.constant(rho=1.0), "tibpalm",
                    stop=StoppingRule(tol=1e-10, max_iter=500), seed=1)
        assert trace.reason == "converged"
        assert len(trace.records) == trace.iterations + 1

    def test_deterministic_given_seed(self):
        p = make_signal_recovery(12, 40, seed=2)
        geoms = p.default_geometries()
        rho = compute_rho(p, *geoms)
        sched = InertialSchedule.constant(0.99 * rho / 4, 0.99 * rho / 4, rho=rho)
        t1 = run(p, sched, "tibpalm", geoms=geoms, stop=StoppingRule(1e-4, 30000), seed=2)
        t2 = run(p, sched, "tibpalm", geoms=geoms, stop=StoppingRule(1e-4, 30000), seed=2)
        assert t1.column("objective") == t2.column("objective")
        assert t1.column("ek") == t2.column("ek")
        assert t1.column("delta") == t2.column("delta")
        assert t1.column("s_resid") == t2.column("s_resid")

    def test_divergence_guard(self):
        class RunawayProblem(TinyQuadProblem):
            def solve_x(self, geom, x_anchor, y_frozen, grad_q, drift):
                return 10.0 * x_anchor + 1.0, 1

            def solve_y(self, geom, y_anchor, x_frozen, grad_q, drift):
                return 10.0 * y_anchor + 1.0, 1

        trace = run(RunawayProblem(), InertialSchedule.constant(rho=1.0), "tibpalm",
                    stop=StoppingRule(tol=0.0, max_iter=10_000), seed=0)
        assert trace.reason == "diverged"
        assert trace.iterations < 100

    def test_unknown_variant(self):
        with pytest.raises(CapabilityError, match="unknown variant"):
            run(TinyQuadProblem(), InertialSchedule.constant(rho=1.0), "sgd")

    def test_variant_names_are_case_insensitive(self):
        trace = run(TinyQuadProblem(), InertialSchedule.constant(rho=1.0), "TiBPALM",
                    stop=StoppingRule(1e-10, 500), seed=0)
        assert trace.variant == "tibpalm"
        assert trace.reason == "converged"

    def test_prox_variants_require_euclidean_geometry(self):
        p = TinyQuadProblem()
        geoms = (make_kl(1.0, (0.1, 10.0)), make_euclidean(1.0))
        with pytest.raises(CapabilityError, match="Euclidean"):
            run(p, InertialSchedule.constant(rho=0.5), "palm", geoms=geoms)

    def test_exact_variant_needs_capability(self):
        with pytest.raises(CapabilityError, match="exact block minimizers"):
            run(TinyQuadProblem(), InertialSchedule.constant(rho=1.0), "tibam")

    def test_inadmissible_schedule_refused_without_override(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(2.0, 1.0, rho=1.0)
        with pytest.raises(InadmissibleScheduleError):
            run(p, sched, "tibpalm", stop=StoppingRule(1e-8, 100), seed=0)
        trace = run(p, sched, "tibpalm", stop=StoppingRule(1e-8, 100), seed=0,
                    override_theory=True)
        assert trace.theory_supported is False

    def test_admissible_run_is_marked_supported(self):
        p = TinyQuadProblem()
        trace = run(p, InertialSchedule.constant(0.1, 0.05, rho=1.0), "tibpalm",
                    stop=StoppingRule(1e-8, 1000), seed=0)
        assert trace.theory_supported is True
        assert trace.margin == pytest.approx(0.35)


class TestDiagnostics:
    def _sigrec_trace(self, seed=0, variant="tibpalm"):
        p = make_signal_recovery(12, 40, seed=seed)
        geoms = p.default_geometries()
        rho = compute_rho(p, *geoms)
        q = 0.99 * rho / 4
        sched = InertialSchedule.constant(q, q, rho=rho)
        return p, sched, run(
            p, sched, variant, geoms=geoms, stop=StoppingRule(1e-4, 30000), seed=seed
        )

    def test_fixed_point_slack_is_zero(self):
        p = TinyQuadProblem()
        trace = run(p, InertialSchedule.constant(0.1, 0.1, rho=1.0), "tibpalm",
                    x0=np.zeros(2), y0=np.zeros(2), stop=StoppingRule(0.0, 3))
        slacks = sufficient_decrease_check(trace)
        assert slacks == [0.0, 0.0, 0.0]

    def test_admissible_run_decreases(self):
        for seed in (0, 1):
            _, sched, trace = self._sigrec_trace(seed)
            assert decrease_ok(trace, sched.margin())

    def test_benefit_monotone_within_tolerance(self):
        _, _, trace = self._sigrec_trace(3)
        hs = trace.column("benefit")
        for h_prev, h_next in zip(hs, hs[1:]):
            assert h_next <= h_prev + 1e-9 * (1.0 + abs(h_prev))

    def test_square_summability_bound(self):
        _, sched, trace = self._sigrec_trace(4)
        a = sched.margin()
        total = sum(r.delta**2 for r in trace.records)
        objs = trace.column("objective")
        assert total <= (objs[0] - min(objs)) / a + 1e-6

    def test_overridden_run_reports_without_crashing(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(3.0, 0.0, rho=1.0)
        trace = run(p, sched, "tibpalm", stop=StoppingRule(0.0, 50), seed=1,
                    override_theory=True)
        slacks = sufficient_decrease_check(trace, a=0.0)
        assert len(slacks) == trace.iterations

    def test_criticality_zero_at_fixed_point(self):
        p = TinyQuadProblem()
        sched = InertialSchedule.constant(0.1, 0.1, rho=1.0)
        geoms = p.default_geometries()
        state = SolverState.initial(np.zeros(2), np.zeros(2))
        state, _, _ = tibpalm_step(state, p, *geoms, sched)
        assert criticality_residual(state, p, *geoms, sched) == 0.0

    def test_criticality_equals_gradient_norm_on_smooth_problem(self):
        # On a fully smooth problem the subgradient witness is the unique
        # gradient of the objective, so the residual must equal ||grad L||.
        p = TinyQuadProblem(c=0.7, d=1.3, coupling=0.4, dim=1)
        sched = InertialSchedule.constant(0.3, 0.1, beta1=0.2, beta2=0.05, rho=5.0)
        geoms = p.default_geometries()
        state = SolverState.initial(np.array([1.0]), np.array([-2.0]))
        for _ in range(2):
            state, _, _ = tibpalm_step(state, p, *geoms, sched)
        gx, gy = p.grad_full(state.x, state.y)
        expected = math.sqrt(float(np.vdot(gx, gx) + np.vdot(gy, gy)))
        got = criticality_residual(state, p, *geoms, sched)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_criticality_requires_a_step(self):
        p = TinyQuadProblem()
        state = SolverState.initial(np.zeros(2), np.zeros(2))
        with pytest.raises(ParameterError):
            criticality_residual(state, p, *p.default_geometries(),
                                 InertialSchedule.constant(rho=1.0))

    def test_criticality_decays_along_converging_run(self):
        _, _, trace = self._sigrec_trace(1)
        assert trace.reason == "converged"
        resids = trace.column("s_resid")
        assert resids[-1] <= 1e-2 * resids[1]
