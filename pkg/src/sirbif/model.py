"""Planar SIR model with logistic recruitment and constant vaccination flux.

The state is (S, I): susceptibles and infectives. Susceptibles reproduce
logistically with intrinsic rate A (carrying capacity A as well, after
rescaling), are infected by mass action at rate beta*S*I, and are vaccinated
at the constant flux p*m. Infectives leave the class by natural death mu,
disease-induced death d, and recovery g:

    dS/dt = S*(A - S) - beta*I*S - p*m
    dI/dt = beta*I*S - (sigma + g)*I,        sigma = mu + d

For p > 0 the flux term makes dS/dt = -p*m < 0 on the wall S = 0, so the
planar field is extended non-smoothly there: on S = 0 the dynamics are

    dS/dt = 0,    dI/dt = -(sigma + g)*I

which absorbs trajectories that reach the wall and lets I decay to zero.

The recovered class R decouples (dR/dt = p*m + g*I - mu*R) and can be
reconstructed after the fact from an (S, I) trajectory; see
``sirbif.integrate.recover_recovered``.

Everything downstream is organised around the reduced coordinates
(r0, p) with r0 = A*beta/(sigma + g): a fixed base (A, m, mu, d, g) is
chosen and beta carries r0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

__all__ = [
    "ModelParams",
    "BaseParams",
    "ReducedPoint",
    "REFERENCE_BASE",
    "vector_field",
    "boundary_field",
    "r0_of",
    "reduced_to_params",
    "params_to_reduced",
    "invariant_region_bound",
    "in_invariant_region",
    "gronwall_envelope",
]

_PARAM_KEYS = ("A", "beta", "m", "mu", "d", "g", "p")


def _check_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise ValueError(f"parameter {name} must be a finite number, got {value!r}")
    if value <= 0.0:
        raise ValueError(f"parameter {name} must be positive, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set. All rates positive; 0 <= p <= 1.

    sigma is stored split as (mu, d) because the recovered-class ODE needs mu
    on its own; the planar dynamics only ever see sigma + g.
    """

    A: float
    beta: float
    m: float
    mu: float
    d: float
    g: float
    p: float = 0.0

    def __post_init__(self):
        for key in ("A", "beta", "m", "mu", "d", "g"):
            _check_positive(key, getattr(self, key))
        p = self.p
        if not (isinstance(p, (int, float)) and math.isfinite(p)):
            raise ValueError(f"parameter p must be a finite number, got {p!r}")
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"vaccination fraction p must lie in [0, 1], got {p!r}")

    @property
    def sigma(self) -> float:
        return self.mu + self.d

    @property
    def removal(self) -> float:
        """Total exit rate from the infective class, sigma + g."""
        return (self.mu + self.d) + self.g

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in _PARAM_KEYS}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        unknown = set(data) - set(_PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = set(_PARAM_KEYS) - set(data)
        if missing:
            raise ValueError(f"missing parameter keys: {sorted(missing)}")
        return cls(**{k: float(data[k]) for k in _PARAM_KEYS})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("parameter JSON must be an object")
        return cls.from_dict(data)

    def to_config(self) -> str:
        """Flat key-value text, one ``key = value`` line per parameter."""
        return "".join(f"{k} = {getattr(self, k)!r}\n" for k in _PARAM_KEYS)

    @classmethod
    def from_config(cls, text: str) -> "ModelParams":
        data: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _PARAM_KEYS:
                raise ValueError(f"config line {lineno}: unknown parameter key {key!r}")
            if key in data:
                raise ValueError(f"config line {lineno}: duplicate key {key!r}")
            try:
                data[key] = float(value.strip())
            except ValueError:
                raise ValueError(f"config line {lineno}: bad number {value.strip()!r}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class BaseParams:
    """The fixed part of a reduced parameterization: everything except beta.

    beta is reconstructed from r0 via beta = r0*(sigma+g)/A.
    """

    A: float
    m: float
    mu: float
    d: float
    g: float

    def __post_init__(self):
        for key in ("A", "m", "mu", "d", "g"):
            _check_positive(key, getattr(self, key))

    @property
    def sigma(self) -> float:
        return self.mu + self.d

    @property
    def removal(self) -> float:
        return (self.mu + self.d) + self.g

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


#: Base used by the bundled reference data and the CLI defaults:
#: A=1.1, m=0.35, sigma=0.35 (split evenly between mu and d), g=0.35.
REFERENCE_BASE = BaseParams(A=1.1, m=0.35, mu=0.175, d=0.175, g=0.35)


@dataclass(frozen=True)
class ReducedPoint:
    """(r0, p) plus the fixed base that makes the map to ModelParams exact."""

    r0: float
    p: float
    base: BaseParams

    def __post_init__(self):
        if not (math.isfinite(self.r0) and self.r0 > 0.0):
            raise ValueError(f"r0 must be positive and finite, got {self.r0!r}")
        if not (math.isfinite(self.p) and 0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")


def vector_field(x, params: ModelParams):
    """Interior field at state x = (S, I).

    Rejects non-finite state components. The formula is also evaluated for
    S = 0 (where it points out of the quadrant when p > 0); the integrator is
    responsible for handing off to :func:`boundary_field` there.
    """
    S, I = x
    if not (math.isfinite(S) and math.isfinite(I)):
        raise ValueError(f"non-finite state components: {x!r}")
    dS = S * (params.A - S) - params.beta * I * S - params.p * params.m
    dI = params.beta * I * S - (params.sigma + params.g) * I
    return (dS, dI)


def boundary_field(x, params: ModelParams):
    """Field on the wall S = 0: dS/dt = 0, dI/dt = -(sigma+g)*I."""
    S, I = x
    if S != 0.0:
        raise ValueError(f"boundary_field requires S = 0, got S = {S!r}")
    if not math.isfinite(I):
        raise ValueError(f"non-finite state components: {x!r}")
    return (0.0, -(params.sigma + params.g) * I)


def r0_of(params: ModelParams) -> float:
    """Basic reproduction number r0 = A*beta/(sigma + g)."""
    return params.A * params.beta / (params.sigma + params.g)


def reduced_to_params(point: ReducedPoint) -> ModelParams:
    base = point.base
    beta = point.r0 * base.removal / base.A
    return ModelParams(A=base.A, beta=beta, m=base.m, mu=base.mu,
                       d=base.d, g=base.g, p=point.p)


def params_to_reduced(params: ModelParams) -> ReducedPoint:
    base = BaseParams(A=params.A, m=params.m, mu=params.mu, d=params.d, g=params.g)
    return ReducedPoint(r0=r0_of(params), p=params.p, base=base)


def invariant_region_bound(params) -> float:
    """Upper bound on S + I inside the forward-invariant region M.

    M = { (S, I) : 0 <= S <= A,  0 <= S + I <= A*(sigma + g + A)/(sigma + g) }.
    Accepts ModelParams or BaseParams (only A, sigma, g are used).
    """
    u = params.removal
    return params.A * (u + params.A) / u


def in_invariant_region(x, params, tol: float = 0.0) -> bool:
    """Membership test for M, with an optional slack tol on each inequality."""
    S, I = x
    if not (math.isfinite(S) and math.isfinite(I)):
        return False
    if S < -tol or I < -tol:
        return False
    if S > params.A + tol:
        return False
    return S + I <= invariant_region_bound(params) + tol


def gronwall_envelope(phi0: float, t: float, params) -> float:
    """Decay envelope for phi = S + I along forward orbits.

    phi(t) <= phi(0)*exp(-(sigma+g)*t) + bound*(1 - exp(-(sigma+g)*t)),
    where bound is :func:`invariant_region_bound`. Used by the invariance
    test-suite; exact for the comparison ODE phi' = -(sigma+g)*phi + const.
    """
    u = params.removal
    decay = math.exp(-u * t)
    return phi0 * decay + invariant_region_bound(params) * (1.0 - decay)
