"""
Tests for the lift to directions: cubic coefficients, admissible directions
at parabolic points, integral curves across chart switches and the two
residual checks.
"""

import json
import math

import numpy as np
import pytest

from pseudogeo.catalog import REGISTRY, metric_from_expressions
from pseudogeo.errors import NotOnSurface, NotParabolic, NotTransverse, StepUnderflow
from pseudogeo.flow import IntegrationOptions, PhaseState
from pseudogeo.lift import (
    JetPoint,
    admissible_directions,
    commutation_residual,
    cubic,
    integrate_unparametrized,
    isotropic_invariance_residual,
    isotropy,
    lifted_field,
    mu_coefficients,
    nonisotropic_pair,
)
from pseudogeo.serialize import jet_path_from_dict, jet_path_to_dict

TORUS_POINT = (0.0, 3 * math.pi / 4)


def _torus_slope(rho):
    return math.sqrt(rho / math.sqrt(2) - 0.5)


class TestCubic:
    def test_sphere_coefficients(self, sphere):
        assert mu_coefficients(sphere, (0.0, 0.0)) == pytest.approx((1.0, 0.0, 1.0, 0.0), abs=1e-15)

    def test_cubic_is_horner(self):
        assert cubic((1.0, 2.0, 3.0, 4.0), 2.0) == pytest.approx(1 + 4 + 12 + 32)

    def test_field_vanishes_on_admissible_jet(self, torus):
        p = _torus_slope(2.0)
        f = lifted_field(torus, JetPoint.from_slope(*TORUS_POINT, p))
        np.testing.assert_allclose(f, 0.0, atol=1e-9)

    def test_inverted_chart_is_regular_at_vertical(self, sphere):
        f = lifted_field(sphere, JetPoint.from_slope(0.0, 0.0, math.inf))
        np.testing.assert_allclose(f, 0.0, atol=1e-15)

    def test_isotropy_in_both_charts(self, minkowski):
        assert isotropy(minkowski, JetPoint(0.0, 0.0, "affine", 1.0)) == pytest.approx(0.0)
        assert isotropy(minkowski, JetPoint(0.0, 0.0, "inverted", 0.0)) == pytest.approx(-1.0)


class TestAdmissible:
    def test_sphere_has_only_the_isotropic_direction(self, sphere):
        adm = admissible_directions(sphere, (0.0, 0.0))
        assert adm.count == 1
        d = adm.directions[0]
        assert d.direction.is_infinite
        assert d.kind == "isotropic"
        assert not adm.degenerate

    @pytest.mark.parametrize("rho", [2.0, 3.0])
    def test_torus_three_directions(self, catalog, rho):
        adm = admissible_directions(catalog("torus", rho=rho), TORUS_POINT)
        assert adm.count == 3
        finite = sorted(d.direction.p for d in adm.directions if not d.direction.is_infinite)
        assert finite == pytest.approx([-_torus_slope(rho), _torus_slope(rho)], rel=1e-8)
        kinds = {str(d.direction): d.kind for d in adm.directions}
        assert kinds["inf"] == "isotropic"
        assert sorted(kinds.values()) == ["isotropic", "nonisotropic", "nonisotropic"]

    def test_closed_form_pair_matches_roots(self, torus):
        pair = nonisotropic_pair(torus, TORUS_POINT[1])
        assert pair == pytest.approx((-_torus_slope(2.0), _torus_slope(2.0)), rel=1e-10)

    def test_double_root_is_degenerate(self, ex21):
        adm = admissible_directions(ex21, (0.0, 0.0))
        assert adm.count == 1
        assert adm.directions[0].direction.is_infinite
        assert adm.degenerate
        assert len(adm.degenerate_roots) == 1
        root = adm.degenerate_roots[0]
        assert root.multiplicity == 2
        assert root.direction.p == pytest.approx(0.0, abs=1e-6)

    def test_regular_point_is_rejected(self, flat):
        with pytest.raises(NotParabolic):
            admissible_directions(flat, (0.0, 0.0))

    def test_non_transverse_is_rejected(self):
        m = metric_from_expressions("1", "0", "y^2")
        with pytest.raises(NotTransverse):
            admissible_directions(m, (0.0, 0.0))


class TestIntegralCurves:
    def test_flat_lines(self, flat):
        path = integrate_unparametrized(flat, JetPoint(0.0, 0.0, "affine", 0.5), 1.0)
        assert path.stop == "finished"
        np.testing.assert_allclose(path.y, 0.5 * path.x, atol=1e-12)
        np.testing.assert_allclose(path.value, 0.5)
        assert path.x[-1] == pytest.approx(2.0)

    def test_klein_circle_switches_chart(self, klein):
        path = integrate_unparametrized(klein, JetPoint(0.0, 1.0, "affine", 0.0), 0.26)
        assert set(path.chart) == {"affine", "inverted"}
        np.testing.assert_allclose(np.hypot(path.x, path.y), 1.0, atol=1e-6)
        assert np.all(np.diff(path.x) >= 0)
        assert np.all(np.diff(path.s) > 0)
        # slope of the circle x^2 + y^2 = 1 is -x/y
        np.testing.assert_allclose(path.p, -path.x / path.y, rtol=1e-5, atol=1e-8)

    def test_jet_path_records(self, klein):
        path = integrate_unparametrized(klein, JetPoint(0.0, 1.0, "affine", 0.0), 0.26)
        doc = jet_path_to_dict(path)
        assert {r["chart"] for r in doc["samples"]} == {"affine", "inverted"}
        back = jet_path_from_dict(json.loads(json.dumps(doc)))
        np.testing.assert_array_equal(back.value, path.value)
        assert list(back.chart) == list(path.chart)

    def test_step_budget(self, klein):
        with pytest.raises(StepUnderflow):
            integrate_unparametrized(klein, JetPoint(0.0, 1.0, "affine", 0.0), 0.26,
                                     IntegrationOptions(max_steps=2))


class TestResiduals:
    def test_phase_flow_projects_to_lifted_flow(self, klein):
        assert commutation_residual(klein, PhaseState(0.0, 1.0, 1.0, 0.0), 0.05) < 1e-5

    def test_isotropic_surface_is_invariant(self, minkowski):
        j0 = JetPoint(0.0, 0.0, "affine", 1.0)
        assert isotropic_invariance_residual(minkowski, j0, span=1.0) < 1e-12

    def test_isotropic_surface_precondition(self, minkowski):
        with pytest.raises(NotOnSurface):
            isotropic_invariance_residual(minkowski, JetPoint(0.0, 0.0, "affine", 0.5))

    @pytest.mark.parametrize(
        "name, start",
        [
            ("flat", (0.0, 0.5, 1.0, 0.3)),
            ("minkowski", (0.0, 0.5, 1.0, 0.3)),
            ("ex21", (0.0, 1.0, 1.0, 0.5)),
            ("ex22", (0.0, 1.0, 1.0, 0.5)),
            ("klein", (0.0, 1.0, 1.0, 0.5)),
            ("klein_type", (0.0, 1.0, 1.0, 0.5)),
            ("grushin_type", (0.0, 1.0, 1.0, 0.5)),
            ("ex34", (0.0, 0.5, 1.0, 0.5)),
            ("sphere", (0.0, 0.5, 1.0, 0.5)),
            ("torus", (0.0, 0.0, 1.0, 0.5)),
        ],
    )
    def test_commutation_on_catalog(self, catalog, name, start):
        m = catalog(name)
        a, b, c = m.coefficients(start[0], start[1])
        horizon = 0.05 / abs(a * c - b * b)
        assert commutation_residual(m, PhaseState(*start), horizon) < 1e-6

    def test_commutation_covers_catalog(self):
        names = {"flat", "minkowski", "ex21", "ex22", "klein", "klein_type",
                 "grushin_type", "ex34", "sphere", "torus"}
        assert names == set(REGISTRY)

    @pytest.mark.parametrize("name, y", [("sphere", 0.5), ("torus", 0.0)])
    def test_isotropic_surface_is_invariant_on_curved_metrics(self, catalog, name, y):
        m = catalog(name)
        a, b, c = m.coefficients(0.0, y)
        p = math.sqrt(-a / c)
        j0 = JetPoint.from_slope(0.0, y, p)
        assert abs(isotropy(m, j0)) < 1e-12 * abs(a)
        span = 0.1 / (2 * abs(a * c - b * b))
        assert isotropic_invariance_residual(m, j0, span) < 1e-7
