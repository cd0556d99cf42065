"""Equilibria of the planar system and their linear stability.

Three equilibria organise the dynamics:

* E0, E1: disease-free states on the I = 0 axis, the two roots of
  S*(A - S) = p*m. They exist iff A^2 - 4*p*m >= 0 and merge in a
  saddle-node at p = A^2/(4m).
* E2: the endemic state at S2 = (sigma+g)/beta,
  I2 = (-p*m*beta^2 + A*(sigma+g)*beta - (sigma+g)^2) / (beta^2*(sigma+g)),
  interior iff I2 > 0.

Eigenvalues are always taken from the closed-form quadratic of the analytic
2x2 Jacobian, never from an iterative solver. Classification treats a real
(or imaginary) part as zero when it is within RELATIVE_EIG_TOL*(1 + |lambda|).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import BaseParams, ModelParams, vector_field

__all__ = [
    "StabilityClass",
    "Equilibrium",
    "RELATIVE_EIG_TOL",
    "jacobian",
    "eigenvalues_2x2",
    "classify",
    "disease_free",
    "endemic",
    "delta2_eval",
    "belyakov_roots",
    "belyakov_r0_zero_p",
    "BelyakovDomainError",
]

#: relative tolerance deciding "zero real part" / "zero imaginary part"
RELATIVE_EIG_TOL = 1e-9

#: |A^2 - 4 p m| below this (scaled) means the disease-free pair is coincident
_COINCIDENCE_TOL = 1e-12


class StabilityClass(enum.Enum):
    SADDLE = "saddle"
    SINK_NODE = "sink-node"
    SINK_FOCUS = "sink-focus"
    SOURCE_NODE = "source-node"
    SOURCE_FOCUS = "source-focus"
    NON_HYPERBOLIC = "non-hyperbolic"
    NONEXISTENT = "nonexistent"


@dataclass(frozen=True)
class Equilibrium:
    ident: str                      # "E0" | "E1" | "E2"
    S: float
    I: float
    eigenvalues: tuple              # (complex, complex), sorted by (re, im)
    stability: StabilityClass

    @property
    def location(self):
        return (self.S, self.I)

    @property
    def interior(self) -> bool:
        return self.S > 0.0 and self.I > 0.0

    def to_json_dict(self) -> dict:
        return {
            "id": self.ident,
            "S": self.S,
            "I": self.I,
            "eig": [{"re": ev.real, "im": ev.imag} for ev in self.eigenvalues],
            "class": self.stability.value,
        }


class BelyakovDomainError(ValueError):
    """beta < 2 - r0: the node/focus transition has no real root in p."""


def jacobian(x, params: ModelParams) -> np.ndarray:
    """Jacobian of the interior field at x = (S, I)."""
    S, I = x
    b = params.beta
    u = params.sigma + params.g
    return np.array([
        [-b * I + params.A - 2.0 * S, -b * S],
        [b * I, b * S - u],
    ])


def eigenvalues_2x2(matrix) -> tuple:
    """Eigenvalues of a real 2x2 matrix by the quadratic formula.

    Returns a pair sorted by real part, then imaginary part. A negative
    discriminant yields the conjugate pair (tr/2 -/+ i*sqrt(-disc)/2).
    """
    (a, b), (c, d) = matrix
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        lam1 = complex((tr - root) / 2.0, 0.0)
        lam2 = complex((tr + root) / 2.0, 0.0)
    else:
        root = math.sqrt(-disc) / 2.0
        lam1 = complex(tr / 2.0, -root)
        lam2 = complex(tr / 2.0, root)
    pair = sorted((lam1, lam2), key=lambda z: (z.real, z.imag))
    return (pair[0], pair[1])


def _is_zero(value: float, scale: float) -> bool:
    return abs(value) <= RELATIVE_EIG_TOL * (1.0 + scale)


def classify(eigenvalues) -> StabilityClass:
    """Map an eigenvalue pair to a stability class.

    Any real part within tolerance of zero wins: the point is reported
    non-hyperbolic rather than guessed.
    """
    l1, l2 = eigenvalues
    if _is_zero(l1.real, abs(l1)) or _is_zero(l2.real, abs(l2)):
        return StabilityClass.NON_HYPERBOLIC
    if l1.real < 0.0 < l2.real:
        return StabilityClass.SADDLE
    real = _is_zero(l1.imag, abs(l1)) and _is_zero(l2.imag, abs(l2))
    if l1.real < 0.0:
        return StabilityClass.SINK_NODE if real else StabilityClass.SINK_FOCUS
    return StabilityClass.SOURCE_NODE if real else StabilityClass.SOURCE_FOCUS


def _make(ident: str, S: float, I: float, params: ModelParams,
          stability: StabilityClass | None = None) -> Equilibrium:
    eigs = eigenvalues_2x2(jacobian((S, I), params))
    return Equilibrium(ident, S, I, eigs, stability or classify(eigs))


def disease_free(params: ModelParams) -> list:
    """The disease-free equilibria [E0, E1] (S0 <= S1), or [] if none exist.

    Within the coincidence window |A^2 - 4pm| <= 1e-12*max(1, A^2) the pair is
    returned merged at (A/2, 0); the axis eigenvalue A - 2*(A/2) is then an
    exact floating-point zero, so both copies classify as non-hyperbolic.
    """
    A = params.A
    disc = A * A - 4.0 * params.p * params.m
    tol = _COINCIDENCE_TOL * max(1.0, A * A)
    if disc < -tol:
        return []
    if disc <= tol:
        S_star = A / 2.0
        merged = _make("E0", S_star, 0.0, params)
        return [merged, Equilibrium("E1", S_star, 0.0, merged.eigenvalues,
                                    merged.stability)]
    root = math.sqrt(disc)
    return [
        _make("E0", (A - root) / 2.0, 0.0, params),
        _make("E1", (A + root) / 2.0, 0.0, params),
    ]


def endemic(params: ModelParams) -> Equilibrium:
    """The endemic equilibrium E2.

    If I2 <= 0 the point is not biologically admissible; it is reported with
    stability NONEXISTENT and the formal location attached for diagnostics.
    """
    b = params.beta
    u = params.sigma + params.g
    S2 = u / b
    I2 = (-params.p * params.m * b * b + params.A * u * b - u * u) / (b * b * u)
    if I2 > 0.0:
        return _make("E2", S2, I2, params)
    eigs = eigenvalues_2x2(jacobian((S2, I2), params))
    return Equilibrium("E2", S2, I2, eigs, StabilityClass.NONEXISTENT)


def residual_at(eq: Equilibrium, params: ModelParams) -> float:
    """Max-norm of the field at the equilibrium location (diagnostic)."""
    dS, dI = vector_field(eq.location, params)
    return max(abs(dS), abs(dI))


def delta2_eval(p: float, params) -> float:
    """Discriminant of the E2 eigenvalue quadratic, as a polynomial in p.

    delta2(p) = m^2 b^4 p^2 + 2 m b^2 (2b - 1) u^2 p + (4b + 1) u^4 - 4 A u^3 b^2

    with b = beta and u = sigma + g taken from ``params`` (its own p is
    ignored). E2 has real eigenvalues iff delta2 >= 0.
    """
    b = params.beta
    u = params.sigma + params.g
    m = params.m
    return (m * m * b**4 * p * p
            + 2.0 * m * b * b * (2.0 * b - 1.0) * u * u * p
            + (4.0 * b + 1.0) * u**4
            - 4.0 * params.A * u**3 * b * b)


def delta2_scale(params) -> float:
    """Magnitude scale of delta2's coefficients, for zero tests."""
    b = params.beta
    u = params.sigma + params.g
    m = params.m
    return (m * m * b**4
            + 2.0 * m * b * b * abs(2.0 * b - 1.0) * u * u
            + (4.0 * b + 1.0) * u**4
            + 4.0 * params.A * u**3 * b * b)


def belyakov_roots(r0: float, base: BaseParams) -> tuple:
    """Roots (p1, p2) of delta2(p) = 0 along the r0-slice, p1 <= p2.

    p_{1,2} = (-2b + 1 -/+ 2*sqrt(b*(r0 + b - 2))) * A^2 / (m * r0^2),
    b = r0*(sigma+g)/A. Requires b*(r0 + b - 2) >= 0, i.e. b > 2 - r0;
    otherwise the node/focus transition has no real root and
    BelyakovDomainError is raised.
    """
    A = base.A
    u = base.removal
    b = r0 * u / A
    arg = b * (r0 + b - 2.0)
    if arg < 0.0:
        raise BelyakovDomainError(
            f"no real node/focus transition: beta = {b:.6g} < 2 - r0 = {2.0 - r0:.6g}")
    root = 2.0 * math.sqrt(arg)
    scale = A * A / (base.m * r0 * r0)
    return ((-2.0 * b + 1.0 - root) * scale, (-2.0 * b + 1.0 + root) * scale)


def belyakov_r0_zero_p(base: BaseParams) -> float:
    """The r0 at which the upper Belyakov root crosses p = 0.

    Solves r0 = 1 + 1/(4*beta(r0)) self-consistently with
    beta = r0*(sigma+g)/A, giving r0 = (1 + sqrt(1 + A/(sigma+g)))/2.
    For p = 0 and r0 below this value E2 is a stable node, above it a
    stable focus.
    """
    return 0.5 * (1.0 + math.sqrt(1.0 + base.A / base.removal))
