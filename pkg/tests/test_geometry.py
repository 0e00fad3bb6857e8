import math

import numpy as np
import pytest

from bregpalm import (
    DomainError,
    ParameterError,
    bregman_distance,
    geometry_from_token,
    make_euclidean,
    make_itakura_saito,
    make_kl,
    make_mahalanobis,
)

from oracles import central_diff_grad

BOX = (0.1, 10.0)


def sample_geometries():
    """The four kernels with their declared operating boxes for sweeps."""
    rng = np.random.default_rng(5)
    spd = rng.standard_normal((3, 3))
    spd = spd @ spd.T + 4.0 * np.eye(3)
    return [
        (make_euclidean(2.0), None),
        (make_kl(1.5, BOX), BOX),
        (make_itakura_saito(2.5, BOX), BOX),
        (make_mahalanobis(spd), None),
    ]


def draw_in_domain(rng, box, size):
    if box is None:
        return rng.standard_normal(size) * 3.0
    return rng.uniform(box[0], box[1], size)


class TestBregmanDistance:
    def test_zero_at_equal_points(self):
        rng = np.random.default_rng(0)
        for geom, box in sample_geometries():
            x = draw_in_domain(rng, box, 3)
            assert bregman_distance(geom, x, x) == 0.0

    def test_euclidean_value(self):
        geom = make_euclidean(2.0)
        assert bregman_distance(geom, [1.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_kl_closed_form(self):
        # mu=1, x=(1), y=(2): both the generic three-term formula and the
        # entropy closed form x ln(x/y) + y - x must give 1 - ln 2.
        geom = make_kl(1.0)
        x, y = np.array([1.0]), np.array([2.0])
        expected = 1.0 - math.log(2.0)
        closed = float(np.sum(x * np.log(x / y) + y - x))
        assert closed == pytest.approx(expected, abs=1e-15)
        assert bregman_distance(geom, x, y) == pytest.approx(expected, abs=1e-12)
        assert bregman_distance(geom, x, y) == pytest.approx(closed, abs=1e-12)

    def test_domain_error_names_coordinate(self):
        geom = make_kl(1.0)
        with pytest.raises(DomainError, match="coordinate 1"):
            bregman_distance(geom, [1.0, -2.0], [1.0, 1.0])

    def test_shape_mismatch(self):
        geom = make_euclidean(1.0)
        with pytest.raises(ParameterError):
            bregman_distance(geom, [1.0, 2.0], [1.0])


class TestFactories:
    def test_euclidean_closed_form_sweep(self):
        geom = make_euclidean(1.0)
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b = rng.standard_normal(2)
            expected = 0.5 * (a - b) ** 2
            assert bregman_distance(geom, [a], [b]) == pytest.approx(expected, abs=1e-12)

    def test_itakura_saito_self_distance(self):
        geom = make_itakura_saito(1.0)
        assert bregman_distance(geom, [1.0], [1.0]) == 0.0

    def test_mahalanobis_identity_is_squared_euclidean(self):
        geom = make_mahalanobis(np.eye(3))
        rng = np.random.default_rng(2)
        for _ in range(20):
            x, y = rng.standard_normal(3), rng.standard_normal(3)
            assert bregman_distance(geom, x, y) == pytest.approx(
                float(np.sum((x - y) ** 2)), rel=1e-12
            )

    def test_mahalanobis_rejects_indefinite(self):
        with pytest.raises(ParameterError, match="positive definite"):
            make_mahalanobis(np.diag([1.0, -1.0]))

    def test_mahalanobis_rejects_asymmetric(self):
        with pytest.raises(ParameterError, match="symmetric"):
            make_mahalanobis(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_scale_must_be_positive(self):
        for factory in (make_euclidean, make_kl, make_itakura_saito):
            with pytest.raises(ParameterError):
                factory(0.0)

    def test_token_dispatch(self):
        assert geometry_from_token("euclid", 2.0).theta == 2.0
        assert geometry_from_token("kl", 3.0, (1.0, 3.0)).theta == pytest.approx(1.0)
        assert geometry_from_token("is", 36.0, (1.0, 3.0)).theta == pytest.approx(4.0)
        with pytest.raises(ParameterError, match="unknown geometry token"):
            geometry_from_token("entropy")

    def test_box_theta_values(self):
        # theta on a box comes from the minimum curvature of the kernel there.
        assert make_kl(1.5, BOX).theta == pytest.approx(0.15)
        assert make_itakura_saito(2.5, BOX).theta == pytest.approx(0.025)
        assert make_kl(1.0).theta == 0.0  # no box declared


class TestGeometryInvariants:
    def test_nonnegativity_sweep(self):
        rng = np.random.default_rng(3)
        for geom, box in sample_geometries():
            for _ in range(1000):
                x = draw_in_domain(rng, box, 3)
                y = draw_in_domain(rng, box, 3)
                assert bregman_distance(geom, x, y) >= 0.0

    def test_strong_convexity_lower_bound(self):
        rng = np.random.default_rng(4)
        for geom, box in sample_geometries():
            assert geom.theta > 0
            for _ in range(1000):
                x = draw_in_domain(rng, box, 3)
                y = draw_in_domain(rng, box, 3)
                lower = 0.5 * geom.theta * float(np.sum((x - y) ** 2))
                assert bregman_distance(geom, x, y) >= lower - 1e-9 * (1.0 + lower)

    def test_grad_inverse_round_trip(self):
        rng = np.random.default_rng(6)
        for geom, box in sample_geometries():
            for _ in range(50):
                x = draw_in_domain(rng, box, 3)
                back = geom.inv_grad(geom.grad(x))
                assert np.linalg.norm(back - x) <= 1e-10 * (1.0 + np.linalg.norm(x))

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        for geom, box in sample_geometries():
            for _ in range(100):
                x = draw_in_domain(rng, box, 3)
                g = geom.grad(x)
                fd = central_diff_grad(geom.phi, x)
                assert np.linalg.norm(g - fd) <= 1e-5 * (1.0 + np.linalg.norm(g))

    def test_dual_mask_behaviour(self):
        geom = make_itakura_saito(2.0)
        np.testing.assert_array_equal(
            geom.dual_mask(np.array([-1.0, 0.0, 1.0])), [True, False, False]
        )
        # inverse map applies on the admissible part and round-trips
        v = np.array([-4.0, -0.5])
        np.testing.assert_allclose(geom.grad(geom.inv_grad(v)), v, rtol=1e-12)
