"""Heteroclinic location by shooting, the power-law fit, and the unstable
periodic orbit."""

import math

import numpy as np
import pytest

from sirbif import (
    REFERENCE_BASE,
    REFERENCE_HET_POINTS,
    NotInRegionEError,
    PowerFit,
    ReducedPoint,
    SameSignBracketError,
    SplitFunction,
    build_het_table,
    endemic,
    find_het_p,
    find_periodic_orbit,
    fit_reference_curve,
    het_curve_from_fit,
    in_invariant_region,
    invariant_region_bound,
    omega_limit_estimate,
    p_h,
    p_t,
    power_fit,
    reduced_to_params,
    splitting,
)
from sirbif.connections import FitSingularError


@pytest.fixture(scope="module")
def reference_fit():
    return fit_reference_curve()


@pytest.fixture(scope="module")
def het26(base):
    return find_het_p(2.6, base)


# ---------------------------------------------------------------------------
# embedded reference table


def test_reference_table_shape():
    assert len(REFERENCE_HET_POINTS) == 13
    r0s = [r for r, _ in REFERENCE_HET_POINTS]
    ps = [p for _, p in REFERENCE_HET_POINTS]
    assert r0s == sorted(r0s) and len(set(r0s)) == 13
    assert ps == sorted(ps, reverse=True)
    assert REFERENCE_HET_POINTS[0] == (2.0725, 0.793486)
    assert REFERENCE_HET_POINTS[-1] == (3.6667, 0.183883)
    assert all(r > 2.0 and 0.0 < p < 1.0 for r, p in REFERENCE_HET_POINTS)


# ---------------------------------------------------------------------------
# splitting function and bisection


def test_splitting_signs_straddle_reference(base):
    below = splitting(2.6, 0.40, base)
    above = splitting(2.6, 0.50, base)
    assert below < -0.01
    assert above > 0.01


def test_splitting_validation(base):
    with pytest.raises(ValueError, match="needs r0 > 2"):
        splitting(1.5, 0.3, base)
    with pytest.raises(ValueError, match="needs 0 < p < p_t"):
        splitting(2.6, 0.9, base)


def test_split_function_is_monotone_near_root(base, het26):
    split = SplitFunction(2.6, base)
    lo = split(het26.p_het - 0.01)
    hi = split(het26.p_het + 0.01)
    assert lo < 0.0 < hi


def test_find_het_reference_slice(base, het26):
    res = het26
    assert res.r0 == 2.6
    assert res.p_het == pytest.approx(0.4459443, abs=2e-4)
    assert res.splitting_residual <= 1e-4
    assert res.iterations > 0
    assert res.bracket[0] < res.p_het < res.bracket[1]
    # observed placement: the connection sits below the Hopf value here
    assert res.ordering == "het < h < t < sn"
    assert 0.0 < res.p_het < p_h(2.6, base) < p_t(2.6, base)
    # within 2% of the interpolated reference value at this abscissa
    assert abs(res.p_het - 0.453994) / 0.453994 < 0.02


def test_find_het_offset_robustness(base, het26):
    alt = find_het_p(2.6, base, offset=1e-7)
    assert abs(alt.p_het - het26.p_het) <= 1e-5


def test_find_het_same_sign_bracket(base):
    with pytest.raises(SameSignBracketError):
        find_het_p(2.6, base, bracket=(0.48, 0.50))
    with pytest.raises(ValueError, match="empty bracket"):
        find_het_p(2.6, base, bracket=(0.5, 0.4))


def test_het_table_rows_match_single_solves(base, het26):
    rows = build_het_table([2.2, 2.6], base)
    assert [r.r0 for r in rows] == [2.2, 2.6]
    assert all(r.error == "" for r in rows)
    assert rows[1].p_het == pytest.approx(het26.p_het, abs=1e-9)
    assert rows[0].p_het == pytest.approx(0.685397, abs=1e-3)


def test_het_table_failures_become_rows(base):
    rows = build_het_table([2.6], base, tol_p=1e-6,
                           horizon=900.0)
    assert rows[0].error == ""
    bad = build_het_table([float("nan")], base)
    assert len(bad) == 1
    assert bad[0].error != ""
    assert math.isnan(bad[0].p_het)


def test_het_table_parallel_agrees(base):
    seq = build_het_table([2.3, 2.9], base, jobs=1)
    par = build_het_table([2.3, 2.9], base, jobs=2)
    for a, b in zip(seq, par):
        assert a.r0 == b.r0
        assert a.p_het == b.p_het
        assert a.error == b.error == ""


# ---------------------------------------------------------------------------
# power-law fit


def test_power_fit_recovers_exact_parameters():
    a, b, c = 2.0, -1.0, 0.5
    points = [(r0, a * r0 ** b + c) for r0 in np.linspace(2.1, 3.5, 12)]
    fit = power_fit(points)
    assert fit.a == pytest.approx(a, abs=1e-8)
    assert fit.b == pytest.approx(b, abs=1e-8)
    assert fit.c == pytest.approx(c, abs=1e-8)
    assert fit.rss <= 1e-16
    assert fit.corr >= 1.0 - 1e-12
    assert fit(2.5) == pytest.approx(a * 2.5 ** b + c, abs=1e-8)


def test_power_fit_shift_property(reference_fit):
    shifted = power_fit([(r, p + 1.0) for r, p in REFERENCE_HET_POINTS])
    assert shifted.c == pytest.approx(reference_fit.c + 1.0, abs=1e-6)
    assert shifted.a == pytest.approx(reference_fit.a, abs=1e-6)
    assert shifted.b == pytest.approx(reference_fit.b, abs=1e-6)


def test_reference_fit_values(reference_fit):
    fit = reference_fit
    assert fit.a == pytest.approx(4.495, abs=0.01)
    assert fit.b == pytest.approx(-2.313, abs=0.01)
    assert fit.c == pytest.approx(-0.039, abs=0.002)
    assert fit.corr >= 0.99999
    assert fit.iterations < 500
    assert fit.grad_norm <= 1e-8 * (1.0 + fit.rss)
    # the callable and the curve wrapper agree
    curve = het_curve_from_fit(fit)
    assert curve(2.6) == pytest.approx(fit.a * 2.6 ** fit.b + fit.c, rel=1e-12)
    assert curve(2.6) == pytest.approx(0.453869, abs=1e-6)


def test_power_fit_singular_inputs():
    with pytest.raises(ValueError, match="at least 4"):
        power_fit([(2.1, 0.7), (2.5, 0.5)])          # fewer points than parameters
    with pytest.raises(FitSingularError):
        power_fit([(2.4, 0.5)] * 6)                  # no spread in r0
    with pytest.raises(ValueError, match="positive"):
        power_fit([(-2.1, 0.7), (2.2, 0.6), (2.3, 0.55), (2.4, 0.5)])


def test_power_fit_result_is_value_object(reference_fit):
    clone = PowerFit(reference_fit.a, reference_fit.b, reference_fit.c,
                     reference_fit.rss, reference_fit.corr,
                     reference_fit.iterations, reference_fit.grad_norm)
    assert clone == reference_fit


# ---------------------------------------------------------------------------
# the unstable periodic orbit


def test_periodic_orbit_reference(base, het26):
    orbit = find_periodic_orbit(2.6, 0.48, base, het_p=het26.p_het)
    params = reduced_to_params(ReducedPoint(2.6, 0.48, base))
    e2 = endemic(params)
    assert orbit.section_S == pytest.approx(e2.S, rel=1e-12)
    assert orbit.section_I > e2.I
    assert orbit.period == pytest.approx(17.2508, abs=1e-3)
    assert orbit.floquet == pytest.approx(1.7361, abs=1e-3)
    assert orbit.floquet > 1.0
    assert orbit.return_residual <= 1e-9
    assert len(orbit.t) == len(orbit.states)
    assert all(in_invariant_region(tuple(s), params, tol=1e-9)
               for s in orbit.states)
    assert float(np.min(orbit.states[:, 1])) > 0.0
    # loop closes: first and last recorded states coincide to the polish tol
    gap = math.hypot(orbit.states[0][0] - orbit.states[-1][0],
                     orbit.states[0][1] - orbit.states[-1][1])
    assert gap <= 1e-6


def test_periodic_orbit_serialization(base, het26):
    orbit = find_periodic_orbit(2.6, 0.48, base, het_p=het26.p_het)
    rows = list(orbit.to_csv_rows())
    assert rows[0] == ("t", "S", "I")
    assert len(rows) == len(orbit.t) + 1
    d = orbit.to_json_dict()
    assert d["period"] == orbit.period
    assert d["floquet"] == orbit.floquet
    assert d["section"]["S"] == orbit.section_S


def test_periodic_orbit_band_shrinks_toward_hopf(base, het26):
    # closer to the Hopf value the cycle is smaller and faster
    near_het = find_periodic_orbit(2.6, 0.48, base, het_p=het26.p_het)
    near_hopf = find_periodic_orbit(2.6, 0.50, base, het_p=het26.p_het)
    e2_48 = endemic(reduced_to_params(ReducedPoint(2.6, 0.48, base)))
    e2_50 = endemic(reduced_to_params(ReducedPoint(2.6, 0.50, base)))
    amp_48 = near_het.section_I - e2_48.I
    amp_50 = near_hopf.section_I - e2_50.I
    assert amp_50 < amp_48
    assert near_hopf.period < near_het.period


def test_periodic_orbit_rejects_outside_band(base, het26):
    with pytest.raises(NotInRegionEError, match="cycle band"):
        find_periodic_orbit(2.6, 0.60, base, het_p=het26.p_het)
    with pytest.raises(NotInRegionEError, match="cycle band"):
        find_periodic_orbit(2.6, 0.40, base, het_p=het26.p_het)


def test_cycle_separates_basins(base, het26):
    # inside the unstable orbit trajectories sink to E2; outside they reach
    # the wall and the infection dies out
    p = 0.48
    params = reduced_to_params(ReducedPoint(2.6, p, base))
    orbit = find_periodic_orbit(2.6, p, base, het_p=het26.p_het)
    e2 = endemic(params)
    inside_I = 0.5 * (e2.I + orbit.section_I)
    inside = omega_limit_estimate((orbit.section_S, inside_I), params)
    assert inside.outcome == "E2"
    outside_I = orbit.section_I + 0.5 * (orbit.section_I - e2.I)
    bound = invariant_region_bound(params)
    assert orbit.section_S + outside_I < bound
    outside = omega_limit_estimate((orbit.section_S, outside_I), params)
    assert outside.outcome == "boundary-axis"
