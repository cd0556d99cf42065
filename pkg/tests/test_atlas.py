"""Bifurcation curves, certificates, region classification, and sampling."""

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sirbif import (
    REFERENCE_BASE,
    CurveDomainError,
    CurveSet,
    ModelParams,
    RegionFlagError,
    RegionLabel,
    ReducedPoint,
    curve_ordering_check,
    curve_values_at,
    classify_region,
    dz_point,
    endemic,
    e2_trace,
    fit_reference_curve,
    het_curve_from_fit,
    hopf_certificate,
    in_invariant_region,
    jacobian,
    p_bt1,
    p_bt2,
    p_h,
    p_sn,
    p_t,
    reduced_to_params,
    region_fan,
    sample_curves,
)

from conftest import assert_close

r0s = st.floats(min_value=1.05, max_value=6.0, allow_nan=False)
ps = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@pytest.fixture(scope="module")
def het():
    return het_curve_from_fit(fit_reference_curve())


# ---------------------------------------------------------------------------
# curve formulas


def test_curve_reference_values(base):
    assert p_sn(2.0, base) == pytest.approx(0.8642857142857144, rel=1e-14)
    assert p_sn(3.7, base) == p_sn(1.3, base)  # constant in r0
    assert p_t(3.0, base) == pytest.approx(0.7682539682539684, rel=1e-13)
    assert p_h(3.0, base) == pytest.approx(0.3841269841269841, rel=1e-13)
    assert p_h(2.0, base) == pytest.approx(p_sn(2.0, base), rel=1e-14)
    assert p_t(2.0, base) == pytest.approx(p_sn(2.0, base), rel=1e-14)
    assert p_bt2(2.0, base) == pytest.approx(p_sn(2.0, base), rel=1e-9)


def test_curve_domains(base):
    with pytest.raises(CurveDomainError):
        p_t(1.0, base)
    with pytest.raises(CurveDomainError):
        p_h(1.9, base)
    # diagnostic evaluation left of the fold is explicit opt-in
    left = p_h(1.9, base, allow_left=True)
    assert left > p_sn(1.9, base)
    with pytest.raises(CurveDomainError):
        p_h(0.9, base, allow_left=True)


@given(st.floats(min_value=1.05, max_value=6.0, allow_nan=False))
def test_transcritical_conjugacy(r0):
    # (r0 - 1)/r0^2 is invariant under r0 -> r0/(r0 - 1)
    mirror = r0 / (r0 - 1.0)
    assert_close(p_t(r0, REFERENCE_BASE), p_t(mirror, REFERENCE_BASE),
                 rel=1e-9, label="p_t conjugacy")


@given(r0s, ps)
def test_e2_trace_matches_jacobian(r0, p):
    params = reduced_to_params(ReducedPoint(r0, p, REFERENCE_BASE))
    e2 = endemic(params)
    assume(e2.interior)
    J = jacobian(e2.location, params)
    tr = float(J[0, 0] + J[1, 1])
    assert_close(e2_trace(r0, p, REFERENCE_BASE), tr, rel=1e-9, abs_=1e-10,
                 label="trace identity")


@pytest.mark.parametrize("r0", [2.0, 2.3, 2.6, 3.0, 4.0, 5.5])
def test_trace_vanishes_on_hopf_curve(base, r0):
    assert abs(e2_trace(r0, p_h(r0, base), base)) <= 1e-12


# ---------------------------------------------------------------------------
# certificates


def test_dz_certificate(base):
    cert = dz_point(base)
    assert cert.ok
    assert cert.point == (2.0, pytest.approx(0.8642857142857144, rel=1e-14))
    assert cert.location[0] == pytest.approx(0.55, abs=1e-15)
    assert cert.location[1] == 0.0
    want = ((0.0, -0.7), (0.0, 0.0))
    for row, wrow in zip(cert.jacobian, want):
        for entry, wentry in zip(row, wrow):
            assert abs(entry - wentry) <= 1e-12
    assert cert.max_entry_error <= 1e-12
    assert all(mod <= 1e-10 for mod in cert.eig_moduli)
    assert cert.endemic_location_error <= 1e-12


@pytest.mark.parametrize("r0", [2.5, 3.0, 3.5])
def test_hopf_certificate(base, r0):
    cert = hopf_certificate(r0, base)
    assert cert.ok
    assert cert.p == pytest.approx(p_h(r0, base), rel=1e-14)
    assert abs(cert.trace) <= 1e-10
    assert cert.determinant > 0.0
    assert cert.omega == pytest.approx(math.sqrt(cert.determinant), rel=1e-12)
    assert_close(cert.transversality, base.A / (2.0 * r0 * r0), rel=1e-12,
                 label="transversality closed form")
    assert_close(cert.dre_dr0, 2.0 * cert.transversality, rel=1e-12,
                 label="fixed-p eigenvalue rate")
    # finite-difference oracle for the fixed-p rate of Re(lambda) = trace/2
    h = 1e-6
    fd = (e2_trace(r0 + h, cert.p, base)
          - e2_trace(r0 - h, cert.p, base)) / (2.0 * h) / 2.0
    assert cert.dre_dr0 == pytest.approx(fd, rel=1e-6)


def test_ordering_report(base):
    at_dz = curve_ordering_check(2.0, base)
    assert at_dz.at_dz and at_dz.relation == "p_h = p_t = p_sn"
    left = curve_ordering_check(1.5, base)
    assert left.relation == "p_t < p_sn"
    assert left.p_h is None
    assert left.p_t < left.p_sn
    right = curve_ordering_check(3.0, base)
    assert right.relation == "p_h < p_t < p_sn"
    assert right.p_h < right.p_t < right.p_sn
    with pytest.raises(CurveDomainError):
        curve_ordering_check(1.0, base)


# ---------------------------------------------------------------------------
# region classification


SWEEP = [
    (1.5, 0.9, RegionLabel.A),
    (1.5, 0.8, RegionLabel.B),
    (1.15, 0.2, RegionLabel.C),
    (1.5, 0.75, RegionLabel.C),
    (1.5, 0.2, RegionLabel.D),
    (2.6, 0.30, RegionLabel.D),
    (2.6, 0.48, RegionLabel.E),
    (2.6, 0.60, RegionLabel.F),
    (2.6, 0.805, RegionLabel.G),
    (2.6, 0.84, RegionLabel.H),
]


@pytest.mark.parametrize("r0,p,want", SWEEP)
def test_classify_region_sweep(base, het, r0, p, want):
    assert classify_region(r0, p, base, het=het) is want


@pytest.mark.parametrize("r0,p,want", SWEEP)
def test_classify_region_locally_constant(base, het, r0, p, want):
    eps = 1e-8
    for dr, dp in [(eps, 0.0), (-eps, 0.0), (0.0, eps), (0.0, -eps)]:
        assert classify_region(r0 + dr, p + dp, base, het=het) is want


def test_classify_region_boundary_and_errors(base, het):
    assert classify_region(3.0, p_h(3.0, base), base, het=het) \
        is RegionLabel.BOUNDARY
    assert classify_region(1.5, p_t(1.5, base) + 1e-9, base, het=het) \
        is RegionLabel.BOUNDARY
    with pytest.raises(RegionFlagError, match="heteroclinic curve is required"):
        classify_region(2.6, 0.48, base)
    with pytest.raises(CurveDomainError):
        classify_region(0.0, 0.5, base)
    # left of the fold a stable focus needs no heteroclinic data
    assert classify_region(1.9, 0.2, base) is RegionLabel.D


def test_region_persistence_flags(base, het):
    # persistence labels have an interior equilibrium; eradication ones do not
    for r0, p, want in SWEEP:
        e2 = endemic(reduced_to_params(ReducedPoint(r0, p, base)))
        if want in (RegionLabel.C, RegionLabel.D, RegionLabel.E,
                    RegionLabel.F, RegionLabel.G):
            assert e2.interior
        else:
            assert not e2.interior


def test_fitted_curve_approaches_organising_centre(base, het):
    # the interpolated connection curve meets the other curves near r0 = 2
    assert abs(het(2.05) - p_sn(2.0, base)) <= 0.05


# ---------------------------------------------------------------------------
# bundles and sampling


def test_curve_set_and_values(base, het):
    cs = CurveSet(base, het)
    assert cs.dz == (2.0, pytest.approx(p_sn(2.0, base)))
    vals = curve_values_at(1.1, base)
    assert set(vals) == {"sn", "t"}
    vals = curve_values_at(1.5, base)
    assert set(vals) == {"sn", "t", "bt1", "bt2"}
    vals = curve_values_at(2.6, base, het=het)
    assert set(vals) == {"sn", "t", "h", "bt1", "bt2", "het"}
    assert vals["h"] < vals["t"] < vals["sn"]
    assert vals["het"] == pytest.approx(het(2.6))
    assert vals["bt1"] == pytest.approx(p_bt1(2.6, base))


def test_sample_curves_window(base, het):
    out = sample_curves(base, 1.2, 3.5, 40, het=het)
    assert {"sn", "t", "h", "bt1", "bt2", "het"} <= set(out)
    for name, pts in out.items():
        r0_list = [r for r, _ in pts]
        assert r0_list == sorted(r0_list)
        assert all(1.2 - 1e-12 <= r <= 3.5 + 1e-12 for r in r0_list)
        if name == "h":
            assert all(r >= 2.0 for r in r0_list)
        if name == "het":
            assert all(r > 2.0 for r in r0_list)


def test_region_fan_layouts(base):
    inside = reduced_to_params(ReducedPoint(2.6, 0.48, base))
    seeds = region_fan(inside)
    assert len(seeds) == 20  # 12 boundary + 8 ring
    assert all(in_invariant_region(s, inside, tol=1e-9) for s in seeds)
    e2 = endemic(inside)
    ring = seeds[12:]
    assert all(math.hypot(s[0] - e2.S, s[1] - e2.I) <= 0.02 + 1e-12
               for s in ring)

    empty = reduced_to_params(ReducedPoint(1.5, 0.9, base))
    assert len(region_fan(empty)) == 12  # ring omitted without a centre
    assert len(region_fan(empty, n_boundary=20, n_ring=0)) == 20
    custom = region_fan(empty, ring_center=(0.4, 0.3), n_ring=4)
    assert len(custom) == 16
