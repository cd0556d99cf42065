"""Core model layer: parameters, vector field, reduced coordinates,
invariant region, and the comparison envelope."""

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sirbif import (
    REFERENCE_BASE,
    BaseParams,
    ModelParams,
    ReducedPoint,
    boundary_field,
    gronwall_envelope,
    in_invariant_region,
    invariant_region_bound,
    params_to_reduced,
    r0_of,
    reduced_to_params,
    vector_field,
)

from conftest import assert_close

positive = st.floats(min_value=1e-3, max_value=10.0,
                     allow_nan=False, allow_infinity=False)
fraction = st.floats(min_value=0.0, max_value=1.0,
                     allow_nan=False, allow_infinity=False)


def params_strategy():
    return st.builds(ModelParams, A=positive, beta=positive, m=positive,
                     mu=positive, d=positive, g=positive, p=fraction)


# ---------------------------------------------------------------------------
# parameter containers


def test_reference_base_values(base):
    assert base.A == 1.1
    assert base.m == 0.35
    assert base.mu == 0.175
    assert base.d == 0.175
    assert base.g == 0.35
    assert_close(base.sigma, 0.35, label="sigma")
    assert_close(base.removal, 0.7, label="removal")


def test_params_derived_rates(figure_params):
    params = figure_params(p=0.5)
    assert_close(params.sigma, params.mu + params.d, label="sigma")
    assert_close(params.removal, params.sigma + params.g, label="removal")
    assert_close(r0_of(params), 1.1 * 1.3 / 0.7, label="r0")


@pytest.mark.parametrize("field", ["A", "beta", "m", "mu", "d", "g"])
def test_params_reject_nonpositive(field):
    kwargs = dict(A=1.1, beta=1.3, m=0.35, mu=0.175, d=0.175, g=0.35, p=0.0)
    kwargs[field] = 0.0
    with pytest.raises(ValueError, match="must be positive"):
        ModelParams(**kwargs)
    kwargs[field] = float("nan")
    with pytest.raises(ValueError, match="finite"):
        ModelParams(**kwargs)


@pytest.mark.parametrize("bad_p", [-0.1, 1.0000001, 1.5])
def test_params_reject_out_of_range_p(bad_p):
    with pytest.raises(ValueError, match=r"p must lie in \[0, 1\]"):
        ModelParams(A=1.1, beta=1.3, m=0.35, mu=0.175, d=0.175, g=0.35,
                    p=bad_p)


@given(params_strategy())
def test_dict_round_trip(params):
    assert ModelParams.from_dict(params.to_dict()) == params


@given(params_strategy())
def test_json_round_trip(params):
    assert ModelParams.from_json(params.to_json()) == params


@given(params_strategy())
def test_config_round_trip(params):
    assert ModelParams.from_config(params.to_config()) == params


def test_from_dict_rejects_unknown_and_missing_keys():
    good = ModelParams(A=1.1, beta=1.3, m=0.35, mu=0.175, d=0.175, g=0.35,
                       p=0.2).to_dict()
    with pytest.raises(ValueError, match="unknown parameter keys"):
        ModelParams.from_dict({**good, "extra": 1.0})
    bad = dict(good)
    del bad["beta"]
    with pytest.raises(ValueError, match="missing parameter keys"):
        ModelParams.from_dict(bad)


def test_from_json_requires_object():
    with pytest.raises(ValueError, match="must be an object"):
        ModelParams.from_json("[1, 2, 3]")


def test_from_config_error_reporting():
    text = "A = 1.1\nbeta = 1.3\nm = 0.35\nmu = 0.175\nd = 0.175\ng = 0.35\np = 0.0\n"
    parsed = ModelParams.from_config("# comment\n\n" + text)
    assert parsed.A == 1.1 and parsed.p == 0.0
    with pytest.raises(ValueError, match="line 8: duplicate key 'p'"):
        ModelParams.from_config(text + "p = 0.1\n")
    with pytest.raises(ValueError, match="line 1: bad number"):
        ModelParams.from_config("A = not-a-number\n" + text)
    with pytest.raises(ValueError, match="unknown parameter key 'q'"):
        ModelParams.from_config(text + "q = 1.0\n")
    with pytest.raises(ValueError, match="expected 'key = value'"):
        ModelParams.from_config("A 1.1\n")


def test_base_params_round_trip(base):
    rebuilt = BaseParams(**base.to_dict())
    assert rebuilt == base


# ---------------------------------------------------------------------------
# reduced coordinates


def test_reduced_point_validation(base):
    with pytest.raises(ValueError, match="r0 must be positive"):
        ReducedPoint(0.0, 0.5, base)
    with pytest.raises(ValueError, match=r"p must lie in \[0, 1\]"):
        ReducedPoint(2.0, -0.01, base)


@given(st.floats(min_value=0.05, max_value=8.0, allow_nan=False), fraction)
def test_reduced_round_trip(r0, p):
    point = ReducedPoint(r0, p, REFERENCE_BASE)
    params = reduced_to_params(point)
    back = params_to_reduced(params)
    assert_close(back.r0, r0, rel=1e-12, label="r0 round trip")
    assert back.p == p
    assert back.base == REFERENCE_BASE
    assert_close(r0_of(params), r0, rel=1e-12, label="r0_of")


def test_reduced_beta_formula(base):
    params = reduced_to_params(ReducedPoint(2.6, 0.4, base))
    assert_close(params.beta, 2.6 * base.removal / base.A, label="beta")
    assert params.p == 0.4
    assert (params.A, params.m, params.mu, params.d, params.g) == (
        base.A, base.m, base.mu, base.d, base.g)


# ---------------------------------------------------------------------------
# vector field


def test_vector_field_reference_value(figure_params):
    params = figure_params(p=0.5)
    dS, dI = vector_field((0.5, 0.1), params)
    assert dS == pytest.approx(0.06, abs=1e-13)
    assert dI == pytest.approx(-0.005, abs=1e-13)


@given(params_strategy(),
       st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
       st.floats(min_value=0.0, max_value=3.0, allow_nan=False))
def test_vector_field_matches_formula(params, S, I):
    dS, dI = vector_field((S, I), params)
    want_dS = S * (params.A - S) - params.beta * I * S - params.p * params.m
    want_dI = params.beta * I * S - params.removal * I
    assert_close(dS, want_dS, rel=1e-12, abs_=1e-12, label="dS")
    assert_close(dI, want_dI, rel=1e-12, abs_=1e-12, label="dI")


def test_vector_field_rejects_nonfinite(figure_params):
    with pytest.raises(ValueError, match="non-finite"):
        vector_field((float("nan"), 0.1), figure_params())


def test_boundary_field_decay(figure_params):
    params = figure_params(p=0.5)
    dS, dI = boundary_field((0.0, 0.8), params)
    assert dS == 0.0
    assert_close(dI, -params.removal * 0.8, label="wall decay")
    with pytest.raises(ValueError, match="requires S = 0"):
        boundary_field((1e-12, 0.8), params)


def test_axis_is_invariant(figure_params):
    # On I = 0 the infected component has zero derivative for any S.
    params = figure_params(p=0.3)
    for S in (0.0, 0.2, 0.9, 1.1):
        if S == 0.0:
            _, dI = boundary_field((S, 0.0), params)
        else:
            _, dI = vector_field((S, 0.0), params)
        assert dI == 0.0


# ---------------------------------------------------------------------------
# invariant region


def test_invariant_region_bound_reference(base, figure_params):
    want = 1.1 * (0.7 + 1.1) / 0.7
    got_base = invariant_region_bound(base)
    got_params = invariant_region_bound(figure_params(p=0.2))
    assert_close(got_base, want, rel=1e-14, label="bound from base")
    assert got_base == got_params
    assert got_base == pytest.approx(2.8285714285714287, abs=5e-15)


def test_in_invariant_region(base, figure_params):
    params = figure_params()
    bound = invariant_region_bound(params)
    assert in_invariant_region((0.0, 0.0), params)
    assert in_invariant_region((1.1, 0.0), params)
    assert in_invariant_region((0.5, bound - 0.5), params)
    assert not in_invariant_region((-1e-3, 0.1), params)
    assert not in_invariant_region((0.5, -1e-3), params)
    assert not in_invariant_region((1.2, 0.0), params)
    assert not in_invariant_region((0.5, bound), params)
    # tolerance slack admits boundary overshoot up to tol
    assert in_invariant_region((-1e-9, 0.1), params, tol=1e-8)
    assert in_invariant_region((0.5, bound - 0.5 + 1e-9), params, tol=1e-8)


# ---------------------------------------------------------------------------
# comparison envelope


def test_gronwall_envelope_endpoints(figure_params):
    params = figure_params(p=0.4)
    bound = invariant_region_bound(params)
    assert gronwall_envelope(1.7, 0.0, params) == pytest.approx(1.7, abs=1e-15)
    assert gronwall_envelope(1.7, 1e6, params) == pytest.approx(bound, rel=1e-12)
    assert gronwall_envelope(bound, 3.0, params) == pytest.approx(bound, rel=1e-12)


@given(st.floats(min_value=0.0, max_value=2.8, allow_nan=False),
       st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
       st.floats(min_value=0.0, max_value=50.0, allow_nan=False))
def test_gronwall_envelope_semigroup(phi0, t1, t2):
    params = ModelParams(A=1.1, beta=1.3, m=0.35, mu=0.175, d=0.175, g=0.35,
                         p=0.3)
    direct = gronwall_envelope(phi0, t1 + t2, params)
    stepped = gronwall_envelope(gronwall_envelope(phi0, t1, params), t2, params)
    assert_close(stepped, direct, rel=1e-9, abs_=1e-12, label="semigroup")


@given(st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
       st.floats(min_value=0.01, max_value=40.0, allow_nan=False))
def test_gronwall_envelope_monotone_toward_bound(phi0, t):
    params = ModelParams(A=1.1, beta=1.3, m=0.35, mu=0.175, d=0.175, g=0.35,
                         p=0.3)
    bound = invariant_region_bound(params)
    now = gronwall_envelope(phi0, t, params)
    later = gronwall_envelope(phi0, t + 1.0, params)
    assert min(phi0, bound) - 1e-12 <= now <= max(phi0, bound) + 1e-12
    if phi0 <= bound:
        assert now <= later + 1e-12
    assert abs(later - bound) <= abs(now - bound) + 1e-12
