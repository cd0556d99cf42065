"""Bifurcation curves in the (r0, p) plane and the region classifier.

The five organising curves, as functions of r0 at a fixed base:

* ``p_sn``  — saddle-node of the disease-free pair, A^2/(4m), constant in r0;
* ``p_t``   — transcritical (E2 crosses the I = 0 axis), (A^2/m)(r0-1)/r0^2;
* ``p_h``   — Hopf of E2, A^2/(m r0^2), meaningful for r0 >= 2;
* ``p_bt2`` — upper node/focus transition of E2 (discriminant root);
* the heteroclinic curve, located numerically (see ``connections``) and
  supplied here as a callable.

All of them pass through the organising centre ``dz = (2, A^2/(4m))`` where
the disease-free pair collides exactly on the E2 branch and the Jacobian
degenerates to a nilpotent [[0, -(sigma+g)], [0, 0]].

``classify_region`` maps a parameter point to one of the labels A-H purely
from computed flags (equilibrium existence and stability classes plus a cycle
indicator), never from the sign conventions of any single curve; this keeps
the classification correct even where the analytic ordering of the Hopf and
heteroclinic curves is in doubt.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import BaseParams, ModelParams, ReducedPoint, invariant_region_bound, reduced_to_params
from . import equilibria as eq
from .equilibria import (
    BelyakovDomainError,
    StabilityClass,
    belyakov_r0_zero_p,
    belyakov_roots,
    delta2_eval,
)

__all__ = [
    "CurveDomainError",
    "OrderingViolation",
    "RegionFlagError",
    "RegionLabel",
    "CurveSet",
    "OrderingReport",
    "DZCertificate",
    "HopfCertificate",
    "p_sn",
    "p_t",
    "p_h",
    "p_bt1",
    "p_bt2",
    "e2_trace",
    "curve_ordering_check",
    "dz_point",
    "hopf_certificate",
    "classify_region",
    "curve_values_at",
    "sample_curves",
    "region_fan",
    "belyakov_r0_zero_p",
]

#: classification within this distance (in p) of any curve returns BOUNDARY
BOUNDARY_TOL = 1e-6


class CurveDomainError(ValueError):
    """Curve evaluated outside the r0 range where it is defined."""


class OrderingViolation(RuntimeError):
    """The proved curve ordering failed numerically (should be unreachable)."""


class RegionFlagError(RuntimeError):
    """The computed flags match no region (mis-set parameters or a bug)."""


class RegionLabel(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"
    H = "H"
    BOUNDARY = "boundary"


# ----------------------------------------------------------------------
# curves


def p_sn(r0: float, base: BaseParams) -> float:
    """Saddle-node value A^2/(4m); constant, r0 accepted for uniformity."""
    return base.A * base.A / (4.0 * base.m)


def p_t(r0: float, base: BaseParams) -> float:
    """Transcritical curve (A^2/m)(r0-1)/r0^2, defined for r0 > 1."""
    if r0 <= 1.0:
        raise CurveDomainError(f"p_t needs r0 > 1, got {r0}")
    return (base.A * base.A / base.m) * (r0 - 1.0) / (r0 * r0)


def p_h(r0: float, base: BaseParams, *, allow_left: bool = False) -> float:
    """Hopf curve A^2/(m r0^2), defined for r0 >= 2.

    With ``allow_left=True`` the formula is evaluated for 1 < r0 < 2 as a
    diagnostic; there it exceeds p_sn and crosses no admissible dynamics, so
    the classifier never consults it on that side.
    """
    low = 1.0 if allow_left else 2.0
    if r0 < low:
        raise CurveDomainError(f"p_h needs r0 >= {low}, got {r0}")
    return base.A * base.A / (base.m * r0 * r0)


def p_bt1(r0: float, base: BaseParams) -> float:
    """Lower node/focus transition (often negative, hence diagnostic)."""
    return belyakov_roots(r0, base)[0]


def p_bt2(r0: float, base: BaseParams) -> float:
    """Upper node/focus transition of E2 (beta substituted from r0)."""
    return belyakov_roots(r0, base)[1]


def e2_trace(r0: float, p: float, base: BaseParams) -> float:
    """Trace of the Jacobian at E2 in reduced coordinates.

    trace = p*m*r0/A - A/r0; it vanishes exactly on p_h and is increasing
    in p, so E2 is spectrally stable below the Hopf curve and unstable above.
    """
    return p * base.m * r0 / base.A - base.A / r0


@dataclass(frozen=True)
class CurveSet:
    """Bundle of the curve evaluators for one base (plus an optional
    heteroclinic interpolant from the ``connections`` module)."""
    base: BaseParams
    het: object | None = None          # callable r0 -> p, defined for r0 > 2

    @property
    def dz(self):
        return (2.0, self.base.A * self.base.A / (4.0 * self.base.m))

    def sn(self, r0: float) -> float:
        return p_sn(r0, self.base)

    def t(self, r0: float) -> float:
        return p_t(r0, self.base)

    def h(self, r0: float, *, allow_left: bool = False) -> float:
        return p_h(r0, self.base, allow_left=allow_left)

    def bt2(self, r0: float) -> float:
        return p_bt2(r0, self.base)

    def het_p(self, r0: float) -> float:
        if self.het is None:
            raise CurveDomainError("no heteroclinic curve attached to this CurveSet")
        if r0 <= 2.0:
            raise CurveDomainError(f"heteroclinic curve needs r0 > 2, got {r0}")
        return float(self.het(r0))


# ----------------------------------------------------------------------
# curve ordering


@dataclass(frozen=True)
class OrderingReport:
    r0: float
    p_h: float | None
    p_t: float
    p_sn: float
    relation: str
    at_dz: bool


def curve_ordering_check(r0: float, base: BaseParams) -> OrderingReport:
    """Verify the proved ordering of the closed-form curves at one r0.

    r0 > 2: p_h < p_t < p_sn (strict); 1 < r0 < 2: p_t < p_sn;
    |r0 - 2| <= 1e-12 is reported as the triple-equality boundary point.
    Raises OrderingViolation with all values if the inequalities fail.
    """
    if r0 <= 1.0:
        raise CurveDomainError(f"ordering check needs r0 > 1, got {r0}")
    sn = p_sn(r0, base)
    t = p_t(r0, base)
    if abs(r0 - 2.0) <= 1e-12:
        h = p_h(2.0, base)
        return OrderingReport(r0, h, t, sn, "p_h = p_t = p_sn", True)
    if r0 < 2.0:
        if not t < sn:
            raise OrderingViolation(f"expected p_t < p_sn at r0={r0}: {t} vs {sn}")
        return OrderingReport(r0, None, t, sn, "p_t < p_sn", False)
    h = p_h(r0, base)
    if not (h < t < sn):
        raise OrderingViolation(
            f"expected p_h < p_t < p_sn at r0={r0}: {h}, {t}, {sn}")
    return OrderingReport(r0, h, t, sn, "p_h < p_t < p_sn", False)


# ----------------------------------------------------------------------
# degeneracy certificates


@dataclass(frozen=True)
class DZCertificate:
    point: tuple                 # (r0, p) = (2, A^2/(4m))
    location: tuple              # (S, I) of the collided equilibrium
    jacobian: tuple              # ((a, b), (c, d)) as evaluated
    expected: tuple              # ((0, -(sigma+g)), (0, 0))
    max_entry_error: float
    eig_moduli: tuple
    endemic_location_error: float | None   # |S2 - A/2| via the E2 formula
    ok: bool


def dz_point(base: BaseParams, *, entry_tol: float = 1e-12,
             eig_tol: float = 1e-10) -> DZCertificate:
    """The organising centre (2, A^2/(4m)) with a numerical certificate.

    The Jacobian is evaluated at the exact collision location (A*0.5, 0):
    the diagonal cancels identically in floating point (A - 2*(A*0.5) == 0
    and beta*0 == 0), leaving a triangular matrix whose eigenvalue moduli are
    required to be <= ``eig_tol`` and whose entries must match
    [[0, -(sigma+g)], [0, 0]] to ``entry_tol``.
    """
    A = base.A
    u = base.removal
    p_star = A * A / (4.0 * base.m)
    # jacobian() never reads p, so a clamped placeholder is safe when the
    # collision value lies above the admissible vaccination range.
    params = reduced_to_params(ReducedPoint(2.0, min(p_star, 1.0), base))
    S_star = A * 0.5
    jac = eq.jacobian((S_star, 0.0), params)
    expected = ((0.0, -u), (0.0, 0.0))
    max_err = max(abs(jac[i][j] - expected[i][j]) for i in range(2) for j in range(2))
    eigs = eq.eigenvalues_2x2(jac)
    moduli = (abs(eigs[0]), abs(eigs[1]))
    endemic_err = None
    if p_star <= 1.0:
        e2 = eq.endemic(reduced_to_params(ReducedPoint(2.0, p_star, base)))
        endemic_err = abs(e2.S - S_star)
    ok = max_err <= entry_tol and max(moduli) <= eig_tol
    return DZCertificate(
        point=(2.0, p_star),
        location=(S_star, 0.0),
        jacobian=tuple(tuple(float(v) for v in row) for row in jac),
        expected=expected,
        max_entry_error=max_err,
        eig_moduli=moduli,
        endemic_location_error=endemic_err,
        ok=ok,
    )


@dataclass(frozen=True)
class HopfCertificate:
    r0: float
    p: float
    trace: float                 # trace of the Jacobian at E2, ~0
    omega: float                 # imaginary part of the eigenvalue pair
    determinant: float           # > 0: genuinely a centre-type linearisation
    transversality: float        # A/(2 r0^2), the conventional reported rate
    dre_dr0: float               # A/r0^2, full d(Re lambda)/dr0 at fixed p
    ok: bool


def hopf_certificate(r0: float, base: BaseParams) -> HopfCertificate:
    """Certificate that E2 undergoes a Hopf bifurcation on p = p_h(r0).

    ``transversality`` is the closed form A/(2 r0^2) (the rate left after the
    criticality substitution freezes the p-term of the trace); the complete
    derivative of Re(lambda) in r0 at fixed p is twice that, A/r0^2, exposed
    as ``dre_dr0``. Both are positive together, which is what the bifurcation
    argument needs.
    """
    if r0 < 2.0:
        raise CurveDomainError(f"hopf certificate needs r0 >= 2, got {r0}")
    p = p_h(r0, base)
    params = reduced_to_params(ReducedPoint(r0, p, base))
    e2 = eq.endemic(params)
    jac = eq.jacobian(e2.location, params)
    trace = float(jac[0][0] + jac[1][1])
    det = float(jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0])
    omega = abs(e2.eigenvalues[0].imag)
    transversality = base.A / (2.0 * r0 * r0)
    ok = abs(trace) <= 1e-10 and det > 0.0 and omega > 0.0
    return HopfCertificate(r0, p, trace, omega, det, transversality,
                           2.0 * transversality, ok)


# ----------------------------------------------------------------------
# region classification


def curve_values_at(r0: float, base: BaseParams, het=None) -> dict:
    """All curve values defined at this r0, as {name: p}. Belyakov roots are
    included when real (the lower one is the stable node/focus divide)."""
    values = {"sn": p_sn(r0, base)}
    if r0 > 1.0:
        values["t"] = p_t(r0, base)
    if r0 >= 2.0:
        values["h"] = p_h(r0, base)
    try:
        lo, hi = belyakov_roots(r0, base)
    except BelyakovDomainError:
        pass
    else:
        values["bt1"] = lo
        values["bt2"] = hi
    if het is not None and r0 > 2.0:
        values["het"] = float(het(r0))
    return values


_STABLE = (StabilityClass.SINK_NODE, StabilityClass.SINK_FOCUS)
_SOURCE = (StabilityClass.SOURCE_NODE, StabilityClass.SOURCE_FOCUS)


def classify_region(r0: float, p: float, base: BaseParams, *, het=None,
                    boundary_tol: float = BOUNDARY_TOL) -> RegionLabel:
    """Label the open region containing (r0, p), or BOUNDARY near a curve.

    The label is read off computed flags:

    ======  =====================================================
    A       no disease-free equilibria (p above the saddle-node)
    B       disease-free pair (saddle, sink), E2 not interior
    H       disease-free pair (source, saddle), E2 not interior
    C       E2 interior, stable node
    D       E2 interior, stable focus, no surrounding cycle
    E       E2 interior, stable focus inside the cycle band
    F       E2 interior, unstable focus
    G       E2 interior, unstable node
    ======  =====================================================

    The cycle band is the open p-interval between the Hopf value and the
    heteroclinic value at this r0, taken orientation-neutrally (the unstable
    periodic orbit lives between those two curves whichever is lower). For
    r0 > 2 an attached heteroclinic curve is required to split D from E;
    pass ``het`` (callable r0 -> p) or a fitted interpolant.
    """
    if r0 <= 0.0:
        raise CurveDomainError(f"classification needs r0 > 0, got {r0}")
    for value in curve_values_at(r0, base, het).values():
        if abs(p - value) <= boundary_tol:
            return RegionLabel.BOUNDARY

    params = reduced_to_params(ReducedPoint(r0, p, base))
    dfe = eq.disease_free(params)
    if not dfe:
        return RegionLabel.A

    e2 = eq.endemic(params)
    if e2.stability is StabilityClass.NONEXISTENT or e2.I <= 0.0:
        e0, e1 = dfe
        if e1.stability in _STABLE:
            return RegionLabel.B
        if e0.stability in _SOURCE:
            return RegionLabel.H
        raise RegionFlagError(
            f"disease-free pair with classes ({e0.stability.value}, "
            f"{e1.stability.value}) matches neither B nor H at (r0, p) = ({r0}, {p})")

    if e2.stability is StabilityClass.SINK_NODE:
        return RegionLabel.C
    if e2.stability is StabilityClass.SINK_FOCUS:
        if r0 <= 2.0:
            return RegionLabel.D
        if het is None:
            raise RegionFlagError(
                "a heteroclinic curve is required to separate D from E for "
                f"r0 > 2 (got r0 = {r0}); pass het=...")
        lo, hi = sorted((p_h(r0, base), float(het(r0))))
        return RegionLabel.E if lo < p < hi else RegionLabel.D
    if e2.stability is StabilityClass.SOURCE_FOCUS:
        return RegionLabel.F
    if e2.stability is StabilityClass.SOURCE_NODE:
        return RegionLabel.G
    raise RegionFlagError(
        f"interior equilibrium is {e2.stability.value} away from every "
        f"declared curve at (r0, p) = ({r0}, {p})")


# ----------------------------------------------------------------------
# sampling helpers (CLI / portraits)


def sample_curves(base: BaseParams, r0_min: float, r0_max: float, n: int,
                  het=None) -> dict:
    """Sample each curve on its domain intersected with [r0_min, r0_max].

    Returns {name: [(r0, p), ...]}; Belyakov branches are included only
    where real, the heteroclinic only where the callable is defined (r0 > 2).
    """
    if n < 2:
        raise ValueError("need at least 2 sample points")
    if not r0_min < r0_max:
        raise ValueError("need r0_min < r0_max")
    grid = [r0_min + (r0_max - r0_min) * i / (n - 1) for i in range(n)]
    out = {"sn": [], "t": [], "h": [], "bt1": [], "bt2": []}
    if het is not None:
        out["het"] = []
    for r0 in grid:
        out["sn"].append((r0, p_sn(r0, base)))
        if r0 > 1.0:
            out["t"].append((r0, p_t(r0, base)))
        if r0 >= 2.0:
            out["h"].append((r0, p_h(r0, base)))
        try:
            lo, hi = belyakov_roots(r0, base)
        except BelyakovDomainError:
            pass
        else:
            out["bt1"].append((r0, lo))
            out["bt2"].append((r0, hi))
        if het is not None and r0 > 2.0:
            out["het"].append((r0, float(het(r0))))
    return out


def region_fan(params: ModelParams, *, n_boundary: int = 12, n_ring: int = 8,
               ring_center=None, ring_radius: float = 0.02) -> list:
    """Initial conditions probing one region's phase portrait.

    ``n_boundary`` seeds sit on the slanted top edge S + I = bound of the
    flow-invariant region (S from 0.05*A to 0.98*A), entering the region
    under the flow; ``n_ring`` seeds ring the interior equilibrium (or
    ``ring_center``) at ``ring_radius``, probing its local basin. When E2 is
    not interior and no centre is given, the ring is omitted.
    """
    bound = invariant_region_bound(params)
    A = params.A
    seeds = []
    for i in range(n_boundary):
        frac = i / (n_boundary - 1) if n_boundary > 1 else 0.5
        S = A * (0.05 + 0.93 * frac)
        seeds.append((S, bound - S))
    center = ring_center
    if center is None:
        e2 = eq.endemic(params)
        if e2.I > 0.0:
            center = e2.location
    if center is not None and n_ring > 0:
        cS, cI = center
        radius = min(ring_radius, 0.5 * cI) if cI > 0 else ring_radius
        for k in range(n_ring):
            angle = 2.0 * math.pi * k / n_ring
            seeds.append((cS + radius * math.cos(angle),
                          cI + radius * math.sin(angle)))
    return seeds
