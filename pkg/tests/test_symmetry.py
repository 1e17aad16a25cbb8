"""
Tests for y-only metrics: energy levels, the implicit first-order equation,
turning ordinates, launch maps and the classification tables.
"""

import math

import pytest

from pseudogeo.catalog import metric_from_expressions
from pseudogeo.errors import AssumptionViolated, BadParam, IsotropicJet, NotNormalized
from pseudogeo.metric import CurveType
from pseudogeo.serialize import classification_to_dict, dumps
from pseudogeo.symmetry import (
    Case,
    EnergyLevel,
    ScanOptions,
    SolutionKind,
    alpha_for_level,
    classify_family,
    discriminant_curve,
    energy,
    format_range,
    h_of_launch,
    horizontal_geodesics,
    implicit_ode_roots,
    launch_kind_at,
    side_interval,
    singular_solution_test,
    turning_analysis,
    value_set,
)


class TestEnergy:
    def test_timelike_and_spacelike_levels(self, flat, minkowski):
        assert energy(flat, 0.0, 0.0) == pytest.approx(1.0)
        assert energy(flat, 0.0, math.inf) == pytest.approx(0.0)
        assert energy(minkowski, 0.0, 2.0) == pytest.approx(-1.0 / 3.0)

    def test_isotropic_direction_has_no_finite_level(self, minkowski):
        with pytest.raises(IsotropicJet):
            energy(minkowski, 0.0, 1.0)

    def test_level_type_is_checked(self):
        assert EnergyLevel(math.inf).type_tag == CurveType.ISOTROPIC
        assert EnergyLevel(-2.0).type_tag == CurveType.SPACELIKE
        with pytest.raises(BadParam):
            EnergyLevel(-1.0, CurveType.TIMELIKE)


class TestImplicitEquation:
    def test_two_simple_roots(self, flat):
        roots = implicit_ode_roots(flat, 0.0, 0.5)
        assert sorted(d.p for d in roots) == pytest.approx([-1.0, 1.0])

    def test_double_root_at_horizontal_level(self, flat):
        roots = implicit_ode_roots(flat, 0.0, 1.0)
        assert [d.p for d in roots] == pytest.approx([0.0, 0.0])

    def test_isotropic_level(self, flat, minkowski):
        assert implicit_ode_roots(flat, 0.0, math.inf) == []
        assert sorted(d.p for d in implicit_ode_roots(minkowski, 0.0, math.inf)) == pytest.approx([-1.0, 1.0])

    def test_roots_reproduce_their_level(self, sphere):
        roots = implicit_ode_roots(sphere, 0.5, 2.0)
        assert len(roots) == 2
        for d in roots:
            assert energy(sphere, 0.5, d) == pytest.approx(2.0, rel=1e-10)

    def test_singular_solutions(self, sphere):
        assert singular_solution_test(sphere, math.pi / 2) == SolutionKind.HORIZONTAL_GEODESIC
        assert singular_solution_test(sphere, 0.3) == SolutionKind.ENVELOPE_NOT_GEODESIC


class TestScans:
    def test_sphere_equator(self, sphere):
        found = horizontal_geodesics(sphere)
        assert len(found) == 1
        assert found[0].y == pytest.approx(math.pi / 2, abs=1e-9)
        assert found[0].h2 == pytest.approx(2.0)

    def test_torus_parallels(self, torus):
        found = sorted(horizontal_geodesics(torus), key=lambda g: g.y)
        assert [g.y for g in found] == pytest.approx([0.0, math.pi], abs=1e-9)
        assert [g.h2 for g in found] == pytest.approx([9.0, 1.0])

    def test_discriminant_curve(self, sphere):
        assert discriminant_curve(sphere, 1.5) == pytest.approx([math.pi / 6, 5 * math.pi / 6], abs=1e-9)

    def test_strip_bounded_by_parabolic_lines(self, sphere):
        up = side_interval(sphere, 0.5, "plus")
        down = side_interval(sphere, 0.5, "minus")
        assert (up.kind, down.kind) == ("parabolic", "parabolic")
        assert up.omega == pytest.approx(math.pi, abs=1e-9)
        assert down.omega == pytest.approx(0.0, abs=1e-9)

    def test_strip_bounded_by_singular_line(self, klein):
        down = side_interval(klein, 1.0, "minus")
        assert (down.kind, down.omega) == ("singular", 0.0)
        up = side_interval(klein, 1.0, "plus")
        assert up.kind == "infinite" and math.isinf(up.omega)


class TestTurning:
    def test_return(self, sphere):
        res = turning_analysis(sphere, 0.0, 1.5, "plus")
        assert res.case_plus == Case.RETURNS
        assert res.y_hat_plus == pytest.approx(math.pi / 6, abs=1e-9)
        assert res.a_prime_plus == pytest.approx(math.cos(math.pi / 6), rel=1e-6)
        assert res.case_minus is None

    def test_asymptote(self, sphere):
        res = turning_analysis(sphere, 0.0, 2.0, "plus")
        assert res.case_plus == Case.ASYMPTOTE
        assert res.horizontal_geodesic == pytest.approx(math.pi / 2, abs=1e-6)

    def test_escape(self, sphere):
        res = turning_analysis(sphere, 0.0, 3.0, "plus")
        assert res.case_plus == Case.ESCAPES
        assert res.y_hat_plus == pytest.approx(math.pi, abs=1e-9)

    def test_both_sides(self, torus):
        res = turning_analysis(torus, math.pi, 1.5, "both")
        assert res.case_plus == Case.RETURNS
        assert res.case_minus == Case.RETURNS
        assert res.y_hat_plus - math.pi == pytest.approx(math.pi - res.y_hat_minus, abs=1e-9)

    def test_sign_change_of_a_is_reported(self):
        m = metric_from_expressions("y - 0.5", "1", "-1")
        with pytest.raises(AssumptionViolated) as err:
            turning_analysis(m, 0.0, 1.0, "plus")
        assert err.value.sample == pytest.approx(0.5, rel=0.05)


class TestLaunch:
    def test_launch_kinds(self, sphere, klein, flat):
        assert launch_kind_at(sphere, 0.0) == "parabolic"
        assert launch_kind_at(klein, 0.0) == "klein"
        assert launch_kind_at(flat, 0.0) == "regular"

    def test_parabolic_launch_map(self, sphere):
        assert h_of_launch(sphere, 0.0, 1.0, "parabolic", "plus").h2 == pytest.approx(9.0 / 5.0)
        assert h_of_launch(sphere, 0.0, 1.0, "parabolic", "minus").h2 == pytest.approx(9.0 / 13.0)
        assert h_of_launch(sphere, 0.0, math.inf, "parabolic", "plus").h2 == pytest.approx(1.0)
        assert h_of_launch(sphere, 0.0, 2.0 / 3.0, "parabolic", "plus").is_isotropic

    def test_singular_launch_maps(self, klein, catalog):
        assert h_of_launch(klein, 0.0, 0.5, "klein").h2 == pytest.approx(1.0)
        assert h_of_launch(catalog("grushin_type"), 0.0, 0.5, "grushin").h2 == pytest.approx(2.25)

    def test_inverse(self, sphere):
        for alpha in (0.1, 0.5, 1.0, 3.0):
            h2 = h_of_launch(sphere, 0.0, alpha, "parabolic", "plus").h2
            assert alpha_for_level(sphere, 0.0, h2, "parabolic", "plus") == pytest.approx(alpha)

    def test_unreachable_level(self, sphere):
        with pytest.raises(BadParam):
            alpha_for_level(sphere, 0.0, 0.5, "parabolic", "plus")

    def test_value_sets(self, sphere):
        plus = value_set(sphere, 0.0, "parabolic", "plus")
        assert [(p.lo, p.hi) for p in plus] == [(1.0, math.inf), (math.inf, math.inf), (-math.inf, 0.0)]
        minus = value_set(sphere, 0.0, "parabolic", "minus")
        assert [(p.lo, p.hi, p.lo_closed, p.hi_closed) for p in minus] == [(0.0, 1.0, True, False)]

    def test_needs_normalized_line(self, unsheared):
        with pytest.raises(NotNormalized):
            h_of_launch(unsheared, 0.0, 1.0, "parabolic")


class TestClassification:
    def test_sphere_region(self, sphere):
        table = classify_family(sphere, 0.0, "region-plus")
        assert len(table) == 7
        assert table.boundaries == pytest.approx([1.0, 2.0])
        first, equator, escape, isotropic, spacelike = table.rows[:5]
        assert first.h2_range == "(1, 2)"
        assert first.case_plus == Case.RETURNS
        assert (first.endpoint_1, first.endpoint_2) == ("cusp on C_N", "cusp on C_N")
        assert equator.case_plus == Case.ASYMPTOTE
        assert equator.endpoint_2 == "---"
        assert escape.endpoint_2 == "cusp on C_S"
        assert isotropic.type == CurveType.ISOTROPIC
        assert spacelike.type == CurveType.SPACELIKE
        assert spacelike.h2_range == "(-∞, 0]"
        # the families launched from C_S keep only the connecting classes
        assert all(r.launch_y == pytest.approx(math.pi) for r in table.rows[5:])
        assert all(r.case_minus != Case.ESCAPES for r in table.rows[5:])

    def test_torus_both_sides(self, torus):
        table = classify_family(torus, math.pi, "both")
        assert len(table) == 5
        assert table.boundaries == pytest.approx([1.0, (2.0 - 1.0 / math.sqrt(2.0)) ** 2])

    def test_klein_type_line(self, catalog):
        table = classify_family(catalog("ex34"), 0.0, "plus")
        assert [r.h2_range for r in table.rows] == ["[0, 2)", "{2}", "(2, ∞)"]
        assert [r.case_plus for r in table.rows] == [Case.ESCAPES, Case.ASYMPTOTE, Case.RETURNS]
        assert table.rows[2].endpoint_2 == "vertical on A"

    def test_klein_type_line_verifies(self, catalog):
        table = classify_family(catalog("ex34"), 0.0, "plus", verify=True)
        assert [r.status for r in table.rows] == ["ok", "ok", "ok"]

    @pytest.mark.parametrize("name, y0, side", [("sphere", 0.0, "region-plus"), ("torus", math.pi, "both")])
    def test_parallel_labelling_matches_serial(self, catalog, name, y0, side):
        m = catalog(name)
        serial = classify_family(m, y0, side, scan=ScanOptions(workers=1))
        parallel = classify_family(m, y0, side, scan=ScanOptions(workers=4))
        assert dumps(classification_to_dict(serial)) == dumps(classification_to_dict(parallel))

    def test_general_metric_refused(self):
        with pytest.raises(BadParam):
            classify_family(metric_from_expressions("1", "0", "x"), 0.0)

    def test_format_range(self):
        assert format_range(0.0, 1.0, True, False) == "[0, 1)"
        assert format_range(math.inf, math.inf, True, True) == "∞"
        assert format_range(2.0, 2.0, True, True) == "{2}"
