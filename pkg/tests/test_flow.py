"""
Tests for the geodesic flow: vector fields, natural and desingularized
integration, shooting out of parabolic points and discontinuity lines, and
the arrival / cusp measurements.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from pseudogeo.catalog import REGISTRY
from pseudogeo.errors import (
    DegenerateMetric,
    InsufficientSamples,
    InvalidStart,
    NotNormalized,
    NotParabolic,
)
from pseudogeo.flow import (
    IntegrationOptions,
    PhaseState,
    StopReason,
    constant_path_residual,
    cusp_exponent,
    desingularized_field,
    energy_drift,
    finite_time_check,
    integrate_desingularized,
    integrate_natural,
    seed_consistency,
    shoot_family,
    shoot_from_parabolic,
    shoot_from_regular,
    shoot_from_singular_line,
    spray,
)
from pseudogeo.metric import CurveType, form_scale
from pseudogeo.symmetry import alpha_for_level, energy_of_state, h_of_launch


class TestFields:
    def test_spray_klein(self, klein):
        assert spray(klein, PhaseState(0.0, 1.0, 1.0, 0.0)) == pytest.approx((0.0, -1.0))

    def test_spray_lorentzian(self, ex22):
        assert spray(ex22, PhaseState(0.0, 1.0, 0.0, 1.0)) == pytest.approx((0.0, -0.5))

    def test_spray_undefined_on_parabolic_set(self, ex21):
        with pytest.raises(DegenerateMetric):
            spray(ex21, PhaseState(0.0, 0.0, 1.0, 0.0))

    def test_desingularized_is_rescaled_spray(self, ex22):
        s = PhaseState(0.0, 1.0, 0.0, 1.0)
        assert desingularized_field(ex22, s) == pytest.approx((0.0, -2.0, 0.0, 1.0))

    def test_desingularized_defined_on_parabolic_set(self, ex21):
        f = desingularized_field(ex21, PhaseState(0.0, 0.0, 1.0, 1.0))
        assert all(math.isfinite(v) for v in f)
        assert f[0] == 0.0 and f[1] == 0.0


class TestNatural:
    def test_klein_geodesic_is_a_circle(self, klein):
        path = integrate_natural(klein, PhaseState(0.0, 1.0, 1.0, 0.0), 2.0)
        assert path.stop_reason == StopReason.REACHED_TMAX
        assert path.t[-1] == pytest.approx(2.0)
        assert path.type_tag == CurveType.TIMELIKE
        np.testing.assert_allclose(np.hypot(path.x, path.y), 1.0, atol=1e-6)
        assert np.all(np.diff(path.t) > 0)

    def test_lorentzian_closed_form(self, ex22):
        path = integrate_natural(ex22, PhaseState(1.0, 1.0, 1.0, 2.0 / 3.0, 1.0), 8.0)
        assert path.stop_reason == StopReason.REACHED_TMAX
        np.testing.assert_allclose(path.x, path.t, rtol=1e-6)
        np.testing.assert_allclose(path.y, path.t ** (2.0 / 3.0), rtol=1e-6)

    def test_vertical_geodesic_reaches_parabolic_line(self, ex21):
        path = integrate_natural(ex21, PhaseState(0.0, 1.0, 0.0, -1.0), 5.0)
        assert path.stop_reason == StopReason.HIT_PARABOLIC_SET
        assert path.endpoint.t == pytest.approx(2.0 / 3.0, abs=1e-4)
        assert abs(path.endpoint.y) < 1e-6

    def test_vertical_klein_geodesic_decays_exponentially(self, klein):
        path = integrate_natural(klein, PhaseState(0.0, 1.0, 0.0, -1.0), 5.0)
        assert path.stop_reason == StopReason.REACHED_TMAX
        np.testing.assert_allclose(path.y, np.exp(-path.t), rtol=1e-5)
        np.testing.assert_allclose(path.x, 0.0, atol=1e-12)

    def test_step_budget(self, klein):
        path = integrate_natural(klein, PhaseState(0.0, 1.0, 1.0, 0.0), 100.0,
                                 IntegrationOptions(max_steps=3))
        assert path.stop_reason == StopReason.STEP_UNDERFLOW

    def test_dense_samples(self, flat):
        coarse = integrate_natural(flat, PhaseState(0.0, 0.0, 1.0, 0.5), 1.0)
        dense = integrate_natural(flat, PhaseState(0.0, 0.0, 1.0, 0.5), 1.0,
                                  IntegrationOptions(dense_samples=5))
        assert len(dense) > len(coarse)
        np.testing.assert_allclose(dense.y, 0.5 * dense.x, atol=1e-12)

    def test_invalid_starts(self, sphere, klein):
        with pytest.raises(InvalidStart):
            integrate_natural(sphere, PhaseState(0.0, -2.0, 1.0, 0.0), 1.0)
        with pytest.raises(InvalidStart):
            integrate_natural(klein, PhaseState(0.0, 1.0, 0.0, 0.0), 1.0)

    def test_energy_conserved_from_random_starts(self, klein, rng):
        for _ in range(5):
            x, y = rng.uniform(-1, 1), rng.uniform(0.5, 2.0)
            theta = rng.uniform(0, 2 * math.pi)
            s0 = PhaseState(x, y, y * math.cos(theta), y * math.sin(theta))
            path = integrate_natural(klein, s0, 1.0)
            assert energy_drift(klein, path) < 1e-7


class TestDesingularized:
    def test_time_rescaling(self, klein, rng):
        for _ in range(4):
            x, y = rng.uniform(-1, 1), rng.uniform(1.0, 2.0)
            theta = rng.uniform(0, 2 * math.pi)
            s0 = PhaseState(x, y, math.cos(theta), math.sin(theta))
            slow = integrate_desingularized(klein, s0, 0.05)
            assert slow.sigma is not None
            assert np.all(np.diff(slow.t) > 0)
            fast = integrate_natural(klein, s0, float(slow.t[-1]))
            assert fast.endpoint.x == pytest.approx(slow.endpoint.x, abs=1e-7)
            assert fast.endpoint.y == pytest.approx(slow.endpoint.y, abs=1e-7)

    def test_parabolic_point_is_a_rest_point(self, ex21):
        path = integrate_desingularized(ex21, PhaseState(0.3, 0.0, 1.0, 0.0), 1.0)
        assert path.stop_reason == StopReason.REACHED_TMAX
        np.testing.assert_allclose(path.x, 0.3, atol=1e-12)
        np.testing.assert_allclose(path.y, 0.0, atol=1e-12)
        np.testing.assert_allclose(path.t, 0.0, atol=1e-12)


class TestShooting:
    def test_semicubic_family_is_exact(self, ex21):
        for alpha in (0.5, 1.0, 2.0):
            path = shoot_from_parabolic(ex21, (0.0, 0.0), alpha, "plus", "right", t_max=2.0)
            assert path.stop_reason == StopReason.REACHED_TMAX
            np.testing.assert_allclose(path.x, alpha * path.y ** 1.5, rtol=1e-5, atol=1e-9)

    def test_left_branch_mirrors_right(self, ex21):
        right = shoot_from_parabolic(ex21, (0.0, 0.0), 1.0, "plus", "right", t_max=1.0)
        left = shoot_from_parabolic(ex21, (0.0, 0.0), 1.0, "plus", "left", t_max=1.0)
        assert left.endpoint.x == pytest.approx(-right.endpoint.x, rel=1e-8)
        assert left.endpoint.y == pytest.approx(right.endpoint.y, rel=1e-8)

    def test_seed_halving_converges(self, ex21):
        assert seed_consistency(ex21, (0.0, 0.0), 1.0) < 1e-8

    def test_needs_parabolic_point(self, flat):
        with pytest.raises(NotParabolic):
            shoot_from_parabolic(flat, (0.0, 0.0), 1.0)

    def test_needs_normalized_metric(self, unsheared):
        with pytest.raises(NotNormalized):
            shoot_from_parabolic(unsheared, (0.0, 0.0), 1.0)

    def test_bad_side(self, ex21):
        with pytest.raises(ValueError):
            shoot_from_parabolic(ex21, (0.0, 0.0), 1.0, side="up")

    def test_singular_line_needs_the_line(self, klein):
        with pytest.raises(InvalidStart):
            shoot_from_singular_line(klein, (0.0, 1.0), 0.5)

    def test_klein_family_is_unit_speed(self, klein):
        path = shoot_from_singular_line(klein, (0.0, 0.0), 0.5, "plus", t_max=1.0)
        a, _, c = klein.coefficients(path.x, path.y)
        np.testing.assert_allclose(a * path.vx ** 2 + c * path.vy ** 2, 1.0, rtol=1e-6)

    def test_horizontal_regular_launch(self, flat):
        path = shoot_from_regular(flat, (0.0, 0.0), math.inf, t_max=1.0)
        np.testing.assert_allclose(path.y, 0.0, atol=1e-12)
        assert path.endpoint.x == pytest.approx(1.0)

    def test_family(self, ex21):
        out = shoot_family(ex21, (0.0, 0.0), [0.5, 1.0], sides=("plus",),
                           branches=("right", "left"), t_max=0.5, progress=False)
        assert [(a, s, b) for a, s, b, _ in out] == [
            (0.5, "plus", "right"), (0.5, "plus", "left"),
            (1.0, "plus", "right"), (1.0, "plus", "left"),
        ]

    def test_singular_line_shot_approaches_horizontal_geodesic_from_below(self, catalog):
        # ex34 has horizontal geodesics y = +-1 on the level h^2 = 2
        m = catalog("ex34")
        alpha = alpha_for_level(m, 0.0, 2.0, "klein")
        assert alpha == pytest.approx(1.0 / math.sqrt(2.0))
        path = shoot_from_singular_line(m, (0.0, 0.0), alpha, "plus", t_max=15.0)
        assert energy_of_state(m, path.start) == pytest.approx(2.0, rel=1e-9)
        k = int(np.argmax(path.y))
        assert np.all(np.diff(path.y[: k + 1]) > 0)
        assert path.y.max() < 1.0
        assert path.y.max() > 0.98

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
    @pytest.mark.parametrize(
        "name, launch, expected",
        [
            ("klein", "klein", lambda al: 4 * al ** 2),
            ("grushin_type", "grushin", lambda al: 9 * al ** 2),
            ("sphere", "parabolic", lambda al: al ** 2 / (al ** 2 - 4.0 / 9.0)),
        ],
    )
    def test_launch_level_is_kept_along_the_shot(self, catalog, name, launch, expected, alpha):
        m = catalog(name)
        if launch == "parabolic":
            path = shoot_from_parabolic(m, (0.0, 0.0), alpha, "plus", t_max=0.5)
        else:
            path = shoot_from_singular_line(m, (0.0, 0.0), alpha, "plus", t_max=1.0)
        level = h_of_launch(m, 0.0, alpha, launch, "plus")
        assert level == pytest.approx(expected(alpha), rel=1e-12)
        np.testing.assert_allclose(energy_of_state(m, path), expected(alpha), rtol=1e-5)

    def test_sphere_isotropic_launch_stays_isotropic(self, sphere):
        path = shoot_from_parabolic(sphere, (0.0, 0.0), 2.0 / 3.0, "plus", t_max=1.0)
        a, b, c = sphere.coefficients(path.x, path.y)
        L = a * path.vx ** 2 + 2 * b * path.vx * path.vy + c * path.vy ** 2
        scale = form_scale(sphere, path.x, path.y, path.vx, path.vy)
        assert np.max(np.abs(L) / scale) < 1e-7

    def test_sphere_level_one_and_a_half_returns(self, sphere):
        alpha = alpha_for_level(sphere, 0.0, 1.5, "parabolic", "plus")
        assert alpha == pytest.approx(math.sqrt(4.0 / 3.0))
        path = shoot_from_parabolic(sphere, (0.0, 0.0), alpha, "plus", t_max=20.0)
        k = int(np.argmax(path.y))
        # turning ordinate: 1 + sin y = 3/2
        assert path.y[k] == pytest.approx(math.pi / 6, abs=1e-4)
        assert np.all(np.diff(path.y[: k + 1]) >= 0)
        assert np.all(np.diff(path.y[k:]) <= 0)
        assert path.y[-1] < 1e-3

    def test_lorentzian_shot_is_the_closed_form(self, ex22):
        path = shoot_from_parabolic(ex22, (0.0, 0.0), 1.0, "plus", t_max=8.0)
        assert path.t[-1] == pytest.approx(8.0)
        late = path.t >= 0.01
        np.testing.assert_allclose(path.x[late], path.t[late], rtol=1e-6)
        np.testing.assert_allclose(path.y[late], path.t[late] ** (2.0 / 3.0), rtol=1e-6)

    @pytest.mark.parametrize(
        "name, q0",
        [("ex21", (0.0, 0.0)), ("sphere", (0.0, 0.0)),
         ("torus", (0.0, math.pi / 4)), ("torus", (0.0, 3 * math.pi / 4))],
    )
    def test_cusp_exponent_of_real_shots(self, catalog, name, q0):
        path = shoot_from_parabolic(catalog(name), q0, 1.0, "plus", t_max=0.5)
        assert cusp_exponent(path, q0) == pytest.approx(2.0 / 3.0, abs=0.01)


# y boxes of random starts, away from parabolic and singular lines
START_BOX = {
    "flat": (-1.0, 1.0),
    "minkowski": (-1.0, 1.0),
    "ex21": (0.5, 2.0),
    "ex22": (0.5, 2.0),
    "klein": (0.5, 2.0),
    "klein_type": (0.5, 2.0),
    "grushin_type": (0.5, 2.0),
    "ex34": (0.5, 2.0),
    "sphere": (0.4, 1.0),
    "torus": (-0.2, 0.2),
}


def _random_starts(m, rng, box, n=10):
    starts = []
    while len(starts) < n:
        x, y = rng.uniform(-1, 1), rng.uniform(*box)
        theta = rng.uniform(0, 2 * math.pi)
        vx, vy = math.cos(theta), math.sin(theta)
        a, b, c = m.coefficients(x, y)
        L = a * vx * vx + 2 * b * vx * vy + c * vy * vy
        if abs(L) >= 0.2 * form_scale(m, x, y, vx, vy):
            starts.append(PhaseState(x, y, vx, vy))
    return starts


class TestConservation:
    def test_every_catalog_metric_has_a_start_box(self):
        assert set(START_BOX) == set(REGISTRY)

    @pytest.mark.parametrize("name", sorted(REGISTRY))
    def test_energy_and_level_conserved(self, catalog, rng, name):
        m = catalog(name)
        for s0 in _random_starts(m, rng, START_BOX[name]):
            path = integrate_natural(m, s0, 0.2)
            assert energy_drift(m, path) < 1e-7
            h2 = energy_of_state(m, path)
            h2_0 = energy_of_state(m, s0)
            assert np.max(np.abs(h2 - h2_0)) <= 1e-6 * max(1.0, abs(h2_0))


class TestMeasurements:
    def test_linear_approach_is_finite(self):
        t = np.geomspace(1e-6, 1.0, 500)
        path = SimpleNamespace(t=t, x=np.zeros_like(t), y=t)
        check = finite_time_check(path, (0.0, 0.0))
        assert check.finite
        assert check.ratio == pytest.approx(0.5, abs=0.05)
        assert check.t_arrival == pytest.approx(0.0, abs=1e-4)

    def test_logarithmic_approach_is_infinite(self):
        t = np.linspace(0.0, 14.0, 2000)
        path = SimpleNamespace(t=t, x=np.zeros_like(t), y=np.exp(-t))
        check = finite_time_check(path, (0.0, 0.0))
        assert not check.finite
        assert math.isinf(check.t_arrival)

    def test_too_few_shells_is_undecided(self):
        t = np.linspace(0.0, 1.0, 50)
        path = SimpleNamespace(t=t, x=np.zeros_like(t), y=np.linspace(1.0, 0.25, 50))
        with pytest.raises(InsufficientSamples):
            finite_time_check(path, (0.0, 0.0))

    def test_short_klein_shot_is_undecided(self, klein):
        path = shoot_from_singular_line(klein, (0.0, 0.0), 0.5, "plus", t_max=1.0)
        with pytest.raises(InsufficientSamples):
            finite_time_check(path, (0.0, 0.0))

    def test_cusp_exponent(self):
        x = np.geomspace(1e-9, 1.0, 400)
        path = SimpleNamespace(x=x, y=x ** (2.0 / 3.0))
        assert cusp_exponent(path, (0.0, 0.0)) == pytest.approx(2.0 / 3.0, rel=1e-9)

    def test_horizontal_geodesic_residual(self, sphere, klein):
        assert constant_path_residual(sphere, math.pi / 2) < 1e-12
        assert constant_path_residual(sphere, 0.5) > 0.1
        assert constant_path_residual(klein, 1.0) > 0.1
