"""Adaptive Runge-Kutta integration of the planar field with events.

The stepper is an explicit Dormand-Prince 5(4) pair (FSAL) with
proportional-integral step-size control and a mixed absolute/relative error
norm, err_i / (atol + rtol*|x_i|) with atol = rtol = tol. Dense output is
cubic Hermite on each accepted step and is used to localise section
crossings to |residual| <= 1e-10.

Two model-specific behaviours live here:

* the S = 0 wall: when a step crosses S = 1e-12 going down, integration is
  trimmed to the crossing, S is clamped to 0 and the boundary field
  (dS/dt = 0, dI/dt = -(sigma+g)I) takes over for the rest of the run — the
  non-smooth extension of the flow. On the wall the origin is a genuine
  attracting point and can be targeted like any equilibrium.
* eigenvector-offset shooting from a saddle, forward along the unstable
  direction or in reversed time (field negated) along the stable one.

Trajectories are immutable once returned; independent integrations share
nothing and may run concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, vector_field
from . import equilibria as eqmod
from .equilibria import Equilibrium, StabilityClass

__all__ = [
    "SectionEvent",
    "EquilibriumTarget",
    "TerminalEvent",
    "Crossing",
    "IntegrationStats",
    "Trajectory",
    "StepFailure",
    "integrate",
    "omega_limit_estimate",
    "OmegaLimitResult",
    "manifold_shoot",
    "recover_recovered",
    "WALL_CLAMP",
]

#: S below this is clamped to the wall and the boundary field takes over
WALL_CLAMP = 1e-12

#: located crossings satisfy |x[coord] - value| <= this
EVENT_RESIDUAL = 1e-10

_TOL_RANGE = (1e-13, 1e-3)

# Dormand-Prince 5(4) tableau (FSAL: the 7th stage is f at the endpoint).
_C2, _C3, _C4, _C5, _C6 = 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b - bhat: weights of the embedded error estimate (includes the FSAL stage)
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_ALPHA = 0.17          # err exponent in the PI controller
_BETA = 0.04           # memory exponent
_FAC_MIN, _FAC_MAX = 0.2, 5.0
_MAX_STEPS = 2_000_000


class StepFailure(RuntimeError):
    """Raised internally; surfaced to callers as a 'step-failure' terminal."""


@dataclass(frozen=True)
class SectionEvent:
    """A coordinate section x[coord] = value to detect and localise.

    direction: -1 only decreasing crossings, +1 only increasing, 0 both.
    terminal_after: stop the run once this many crossings of this section
    have been recorded (None: record only).
    """
    coord: int                   # 0 = S, 1 = I
    value: float
    direction: int = 0
    terminal_after: int | None = None
    name: str = "section"


@dataclass(frozen=True)
class EquilibriumTarget:
    """Convergence target: terminal when ||x - (S, I)|| <= radius and the
    active field satisfies ||f(x)|| <= field_tol."""
    ident: str
    S: float
    I: float
    radius: float = 1e-8
    field_tol: float = 1e-10

    @classmethod
    def from_equilibrium(cls, equilibrium: Equilibrium, **kw) -> "EquilibriumTarget":
        return cls(equilibrium.ident, equilibrium.S, equilibrium.I, **kw)


@dataclass(frozen=True)
class Crossing:
    name: str
    t: float
    state: tuple
    direction: int               # -1 or +1, sign of d(x[coord])/dt


@dataclass(frozen=True)
class TerminalEvent:
    kind: str                    # time-horizon | converged-to-equilibrium |
                                 # crossed-section | left-domain | step-failure
    t: float
    state: tuple
    equilibrium: str | None = None
    section: str | None = None
    direction: int = 0
    detail: str = ""

    def to_json_dict(self) -> dict:
        out = {"kind": self.kind, "t": self.t,
               "state": {"S": self.state[0], "I": self.state[1]}}
        if self.equilibrium is not None:
            out["equilibrium"] = self.equilibrium
        if self.section is not None:
            out["section"] = self.section
            out["direction"] = self.direction
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class IntegrationStats:
    steps_accepted: int
    steps_rejected: int
    max_error_estimate: float
    field_evals: int


@dataclass(frozen=True)
class Trajectory:
    """An integration result: samples, crossings, terminal event, stats.

    t is strictly increasing (elapsed integration time; for reversed runs it
    is elapsed *backward* time). interpolate() evaluates the cubic Hermite
    dense output; at the sample where the run switched to the wall field the
    stored derivative is the wall-side one, so interpolation is exact on each
    smooth piece and merely continuous at the kink.
    """
    t: np.ndarray
    states: np.ndarray           # shape (n, 2)
    derivs: np.ndarray           # shape (n, 2), active-field derivatives
    crossings: tuple
    terminal: TerminalEvent
    stats: IntegrationStats
    params: ModelParams
    reversed_time: bool
    tol: float

    @property
    def final_state(self) -> tuple:
        return (float(self.states[-1, 0]), float(self.states[-1, 1]))

    @property
    def on_wall(self) -> bool:
        return self.states[-1, 0] == 0.0

    def interpolate(self, t_query: float) -> tuple:
        t = self.t
        if not t[0] <= t_query <= t[-1]:
            raise ValueError(f"t={t_query} outside [{t[0]}, {t[-1]}]")
        j = int(np.searchsorted(t, t_query, side="right"))
        j = min(max(j, 1), len(t) - 1)
        t0, t1 = float(t[j - 1]), float(t[j])
        h = t1 - t0
        if h == 0.0:
            return (float(self.states[j, 0]), float(self.states[j, 1]))
        theta = (t_query - t0) / h
        x0, x1 = self.states[j - 1], self.states[j]
        f0, f1 = self.derivs[j - 1], self.derivs[j]
        out = _hermite(theta, h, x0, f0, x1, f1)
        return (float(out[0]), float(out[1]))

    def to_csv_rows(self):
        yield ("t", "S", "I")
        for i in range(len(self.t)):
            yield (float(self.t[i]), float(self.states[i, 0]),
                   float(self.states[i, 1]))

    def to_json_dict(self) -> dict:
        return {
            "t": [float(v) for v in self.t],
            "S": [float(v) for v in self.states[:, 0]],
            "I": [float(v) for v in self.states[:, 1]],
            "crossings": [
                {"name": c.name, "t": c.t, "S": c.state[0], "I": c.state[1],
                 "direction": c.direction}
                for c in self.crossings
            ],
            "terminal": self.terminal.to_json_dict(),
            "stats": {
                "steps_accepted": self.stats.steps_accepted,
                "steps_rejected": self.stats.steps_rejected,
                "max_error_estimate": self.stats.max_error_estimate,
                "field_evals": self.stats.field_evals,
            },
            "reversed_time": self.reversed_time,
            "tol": self.tol,
            "params": self.params.to_dict(),
        }


def _hermite(theta, h, x0, f0, x1, f1):
    """Cubic Hermite basis evaluation (componentwise, numpy or scalars)."""
    t2 = theta * theta
    h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta)
    h10 = theta * (1.0 - theta) * (1.0 - theta)
    h01 = t2 * (3.0 - 2.0 * theta)
    h11 = t2 * (theta - 1.0)
    return h00 * x0 + h10 * h * f0 + h01 * x1 + h11 * h * f1


def _hermite_component(theta, h, x0, f0, x1, f1):
    t2 = theta * theta
    return ((1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta) * x0
            + theta * (1.0 - theta) * (1.0 - theta) * h * f0
            + t2 * (3.0 - 2.0 * theta) * x1
            + t2 * (theta - 1.0) * h * f1)


def _initial_step(f, x0, f0, t_span, atol, rtol):
    w0 = (atol + rtol * abs(x0[0]), atol + rtol * abs(x0[1]))
    d0 = math.sqrt(((x0[0] / w0[0]) ** 2 + (x0[1] / w0[1]) ** 2) / 2.0)
    d1 = math.sqrt(((f0[0] / w0[0]) ** 2 + (f0[1] / w0[1]) ** 2) / 2.0)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    x1 = (x0[0] + h0 * f0[0], x0[1] + h0 * f0[1])
    f1 = f(x1)
    d2 = math.sqrt((((f1[0] - f0[0]) / w0[0]) ** 2
                    + ((f1[1] - f0[1]) / w0[1]) ** 2) / 2.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_span)


def integrate(x0, params: ModelParams, t_end: float, *, tol: float = 1e-8,
              t0: float = 0.0, reverse_time: bool = False, sections=(),
              targets=(), max_step: float = math.inf,
              domain_bound: float | None = None,
              record: bool = True) -> Trajectory:
    """Integrate from x0 over [t0, t_end] (elapsed time; the field is negated
    when reverse_time is set).

    sections are SectionEvents to record/stop on; targets are
    EquilibriumTargets checked after every accepted step (with the active
    field, so the wall origin is targetable). domain_bound terminates with
    'left-domain' when max(|S|, |I|) exceeds it; by default it is 50 times
    the invariant-region height, which only reversed runs ever reach.

    The step size underflowing 1e-14*max(1, t) yields a 'step-failure'
    terminal rather than an exception.
    """
    if not _TOL_RANGE[0] <= tol <= _TOL_RANGE[1]:
        raise ValueError(f"tol must lie in {_TOL_RANGE}, got {tol}")
    S0, I0 = float(x0[0]), float(x0[1])
    if not (math.isfinite(S0) and math.isfinite(I0)):
        raise ValueError(f"non-finite initial state {x0}")
    if S0 < -1e-12 or I0 < -1e-12:
        raise ValueError(f"initial state outside the closed quadrant: {x0}")
    if t_end <= t0:
        raise ValueError("need t_end > t0")

    A = params.A
    beta = params.beta
    u = params.sigma + params.g
    pm = params.p * params.m
    sgn = -1.0 if reverse_time else 1.0
    if domain_bound is None:
        domain_bound = 50.0 * max(1.0, A * (u + A) / u)

    def f_interior(x):
        S, I = x
        return (sgn * (S * (A - S) - beta * I * S - pm),
                sgn * (beta * I * S - u * I))

    def f_wall(x):
        return (0.0, sgn * (-u * x[1]))

    on_wall = S0 == 0.0 or (S0 < WALL_CLAMP and f_interior((S0, I0))[0] < 0.0)
    if on_wall:
        S0 = 0.0
    fieldf = f_wall if on_wall else f_interior

    x = (S0, I0)
    t = t0
    fx = fieldf(x)
    evals = 1
    ts, xs, fs = [t], [x], [fx]
    crossings: list = []
    counts = {id(s): 0 for s in sections}
    terminal: TerminalEvent | None = None
    accepted = rejected = 0
    max_err = 0.0

    def push(tv, xv, fv):
        # record=False keeps only the initial and the running last sample
        if record or len(ts) < 2:
            ts.append(tv), xs.append(xv), fs.append(fv)
        else:
            ts[-1], xs[-1], fs[-1] = tv, xv, fv

    hit = _target_hit(x, fx, targets)
    if hit is not None:
        terminal = TerminalEvent("converged-to-equilibrium", t, x,
                                 equilibrium=hit.ident)

    h = min(_initial_step(fieldf, x, fx, t_end - t0, tol, tol), max_step)
    evals += 1
    facold = 1e-4

    while terminal is None:
        if accepted + rejected > _MAX_STEPS:
            raise StepFailure(f"step budget exhausted ({_MAX_STEPS}) at t={t}")
        if h < 1e-14 * max(1.0, abs(t)):
            terminal = TerminalEvent("step-failure", t, x,
                                     detail=f"step size underflow h={h:.3e}")
            break
        h = min(h, t_end - t, max_step)
        last = t + h >= t_end - 1e-14 * max(1.0, t_end)

        S, I = x
        f1 = fx
        k2 = fieldf((S + h * _A21 * f1[0], I + h * _A21 * f1[1]))
        k3 = fieldf((S + h * (_A31 * f1[0] + _A32 * k2[0]),
                     I + h * (_A31 * f1[1] + _A32 * k2[1])))
        k4 = fieldf((S + h * (_A41 * f1[0] + _A42 * k2[0] + _A43 * k3[0]),
                     I + h * (_A41 * f1[1] + _A42 * k2[1] + _A43 * k3[1])))
        k5 = fieldf((S + h * (_A51 * f1[0] + _A52 * k2[0] + _A53 * k3[0]
                              + _A54 * k4[0]),
                     I + h * (_A51 * f1[1] + _A52 * k2[1] + _A53 * k3[1]
                              + _A54 * k4[1])))
        k6 = fieldf((S + h * (_A61 * f1[0] + _A62 * k2[0] + _A63 * k3[0]
                              + _A64 * k4[0] + _A65 * k5[0]),
                     I + h * (_A61 * f1[1] + _A62 * k2[1] + _A63 * k3[1]
                              + _A64 * k4[1] + _A65 * k5[1])))
        Sn = S + h * (_B1 * f1[0] + _B3 * k3[0] + _B4 * k4[0] + _B5 * k5[0]
                      + _B6 * k6[0])
        In = I + h * (_B1 * f1[1] + _B3 * k3[1] + _B4 * k4[1] + _B5 * k5[1]
                      + _B6 * k6[1])
        k7 = fieldf((Sn, In))
        evals += 6

        eS = h * (_E1 * f1[0] + _E3 * k3[0] + _E4 * k4[0] + _E5 * k5[0]
                  + _E6 * k6[0] + _E7 * k7[0])
        eI = h * (_E1 * f1[1] + _E3 * k3[1] + _E4 * k4[1] + _E5 * k5[1]
                  + _E6 * k6[1] + _E7 * k7[1])
        wS = tol + tol * max(abs(S), abs(Sn))
        wI = tol + tol * max(abs(I), abs(In))
        err = math.sqrt(((eS / wS) ** 2 + (eI / wI) ** 2) / 2.0)

        if err > 1.0:
            rejected += 1
            h *= max(_FAC_MIN, min(1.0, _SAFETY * err ** (-_ALPHA)))
            continue

        accepted += 1
        max_err = max(max_err, err)
        t_new = t_end if last else t + h
        x_new = (Sn, In)
        f_new = k7

        # quadrant housekeeping: clamp a tiny numerical undershoot of I = 0
        if In < 0.0:
            if In < -1e-9:
                terminal = TerminalEvent(
                    "step-failure", t_new, x_new,
                    detail=f"I undershot the axis: {In:.3e}")
                break
            x_new = (Sn, 0.0)
            f_new = fieldf(x_new)
            evals += 1

        step_h = t_new - t
        events = _scan_step(t, x, f1, t_new, x_new, f_new, step_h,
                            sections, counts, crossings,
                            wall_armed=not on_wall)
        if events is not None and events[0] == "wall":
            _, t_hit, I_hit = events
            t, x = t_hit, (0.0, max(I_hit, 0.0))
            on_wall = True
            fieldf = f_wall
            fx = fieldf(x)
            evals += 1
            crossings.append(Crossing("wall", t, x, -1))
            push(t, x, fx)
            hit = _target_hit(x, fx, targets)
            if hit is not None:
                terminal = TerminalEvent("converged-to-equilibrium", t, x,
                                         equilibrium=hit.ident)
            continue
        if events is not None:
            _, sec, t_hit, x_hit, direction = events
            t, x = t_hit, x_hit
            fx = fieldf(x)
            evals += 1
            terminal = TerminalEvent("crossed-section", t, x,
                                     section=sec.name, direction=direction)
            break

        t, x, fx = t_new, x_new, f_new
        push(t, x, fx)

        if max(abs(x[0]), abs(x[1])) > domain_bound:
            terminal = TerminalEvent("left-domain", t, x,
                                     detail=f"|x| exceeded {domain_bound:g}")
            break
        hit = _target_hit(x, fx, targets)
        if hit is not None:
            terminal = TerminalEvent("converged-to-equilibrium", t, x,
                                     equilibrium=hit.ident)
            break
        if last:
            terminal = TerminalEvent("time-horizon", t, x)
            break

        fac = _SAFETY * err ** (-_ALPHA) * facold ** _BETA if err > 0.0 else _FAC_MAX
        h *= min(_FAC_MAX, max(_FAC_MIN, fac))
        facold = max(err, 1e-4)

    if ts[-1] != t or xs[-1] != x:
        ts.append(t), xs.append(x), fs.append(fx)
    return Trajectory(
        t=np.asarray(ts, dtype=float),
        states=np.asarray(xs, dtype=float),
        derivs=np.asarray(fs, dtype=float),
        crossings=tuple(crossings),
        terminal=terminal,
        stats=IntegrationStats(accepted, rejected, max_err, evals),
        params=params,
        reversed_time=reverse_time,
        tol=tol,
    )


def _target_hit(x, fx, targets):
    for tgt in targets:
        dS = x[0] - tgt.S
        dI = x[1] - tgt.I
        if (math.sqrt(dS * dS + dI * dI) <= tgt.radius
                and math.hypot(fx[0], fx[1]) <= tgt.field_tol):
            return tgt
    return None


def _scan_step(t, x, fx, t_new, x_new, f_new, h, sections, counts,
               crossings, *, wall_armed):
    """Scan one accepted step for section crossings on the Hermite
    interpolant (4 subintervals per section). Returns None, a wall hit
    ('wall', t_hit, I_hit), or a terminal section hit
    ('section', section, t_hit, x_hit, direction); non-terminal crossings
    are appended to ``crossings`` in time order.
    """
    if h <= 0.0:
        return None
    found = []
    if wall_armed:
        found.extend(_bracket_roots(t, x, fx, t_new, x_new, f_new, h,
                                    coord=0, value=WALL_CLAMP, direction=-1,
                                    tag=None))
    for sec in sections:
        found.extend(_bracket_roots(t, x, fx, t_new, x_new, f_new, h,
                                    coord=sec.coord, value=sec.value,
                                    direction=sec.direction, tag=sec))
    if not found:
        return None
    found.sort(key=lambda item: item[0])
    for t_hit, x_hit, direction, tag in found:
        if tag is None:
            return ("wall", t_hit, x_hit[1])
        counts[id(tag)] += 1
        crossings.append(Crossing(tag.name, t_hit, x_hit, direction))
        if tag.terminal_after is not None and counts[id(tag)] >= tag.terminal_after:
            return ("section", tag, t_hit, x_hit, direction)
    return None


def _bracket_roots(t, x, fx, t_new, x_new, f_new, h, *, coord, value,
                   direction, tag, nsub=4):
    """Find crossings of x[coord] = value inside one step via sign changes
    of the Hermite interpolant on nsub subintervals, bisected to
    |residual| <= 1e-12 (well inside the 1e-10 contract)."""
    x0c, x1c = x[coord], x_new[coord]
    f0c, f1c = fx[coord], f_new[coord]

    def g(theta):
        return _hermite_component(theta, h, x0c, f0c, x1c, f1c) - value

    thetas = [i / nsub for i in range(nsub + 1)]
    vals = [g(th) for th in thetas]
    out = []
    for i in range(nsub):
        g0, g1 = vals[i], vals[i + 1]
        if g0 == 0.0 and i == 0:
            continue            # starting exactly on the section: not a crossing
        if g0 * g1 > 0.0:
            continue
        lo, hi = thetas[i], thetas[i + 1]
        glo = g0
        if g0 * g1 == 0.0 and g1 != 0.0:
            continue
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if abs(gm) <= 1e-12:
                lo = mid
                break
            if glo * gm <= 0.0:
                hi = mid
            else:
                lo, glo = mid, gm
        theta_hit = 0.5 * (lo + hi) if abs(g(lo)) > 1e-12 else lo
        cross_dir = -1 if g0 > g1 else 1
        if direction != 0 and cross_dir != direction:
            continue
        other = 1 - coord
        o0, o1 = x[other], x_new[other]
        fo0, fo1 = fx[other], f_new[other]
        other_val = _hermite_component(theta_hit, h, o0, fo0, o1, fo1)
        coord_val = g(theta_hit) + value
        state = (coord_val, other_val) if coord == 0 else (other_val, coord_val)
        out.append((t + theta_hit * h, state, cross_dir, tag))
    return out


# ----------------------------------------------------------------------
# omega-limit estimation


@dataclass(frozen=True)
class OmegaLimitResult:
    outcome: str                 # E0 | E1 | E2 | cycle | boundary-axis | undecided
    trajectory: Trajectory
    detail: str = ""


def omega_limit_estimate(x0, params: ModelParams, horizon: float = 10000.0,
                         tol: float = 1e-8) -> OmegaLimitResult:
    """Estimate the forward limit set of the trajectory through x0.

    Equilibrium-convergence events are armed for every admissible
    equilibrium plus the wall origin (reported as 'boundary-axis'). 'cycle'
    is reported when, within the last 20% of the horizon, the trajectory
    crosses the section S = S2 (downward) at least 3 times with successive
    gaps and crossing heights each consistent to 1%; crossings whose mean
    height has already collapsed to within 1e-3 of I2 are counted as
    convergence to E2 instead of a cycle.
    """
    targets = [EquilibriumTarget.from_equilibrium(e)
               for e in eqmod.disease_free(params)]
    e2 = eqmod.endemic(params)
    sections = []
    if e2.I > 0.0:
        targets.append(EquilibriumTarget.from_equilibrium(e2))
        sections.append(SectionEvent(coord=0, value=e2.S, direction=-1,
                                     name="omega-S2"))
    targets.append(EquilibriumTarget("wall-origin", 0.0, 0.0))

    traj = integrate(x0, params, horizon, tol=tol, sections=sections,
                     targets=targets)
    term = traj.terminal
    if term.kind == "converged-to-equilibrium":
        if term.equilibrium == "wall-origin":
            return OmegaLimitResult("boundary-axis", traj)
        return OmegaLimitResult(term.equilibrium, traj)
    if term.kind == "step-failure":
        raise StepFailure(term.detail)
    if term.kind == "left-domain":
        return OmegaLimitResult("undecided", traj, detail="left the domain")
    if traj.on_wall:
        return OmegaLimitResult("boundary-axis", traj,
                                detail="on the wall, I still decaying")

    late = [c for c in traj.crossings
            if c.name == "omega-S2" and c.t >= 0.8 * horizon]
    if len(late) >= 3:
        gaps = [late[i + 1].t - late[i].t for i in range(len(late) - 1)]
        heights = [c.state[1] for c in late]
        mean_gap = sum(gaps) / len(gaps)
        mean_height = sum(heights) / len(heights)
        if e2.I > 0.0 and all(abs(ht - e2.I) < 1e-3 for ht in heights):
            # crossing heights hugging I2: the spiral has collapsed, even if
            # phase jitter at the tolerance floor blurs the crossing times
            return OmegaLimitResult(
                "E2", traj, detail="spiral collapsed onto E2")
        gaps_ok = all(abs(gp - mean_gap) <= 0.01 * mean_gap for gp in gaps)
        heights_ok = mean_height > 0.0 and all(
            abs(ht - mean_height) <= 0.01 * mean_height for ht in heights)
        if gaps_ok and heights_ok:
            return OmegaLimitResult(
                "cycle", traj,
                detail=f"period ~ {mean_gap:.6g}, section height ~ {mean_height:.6g}")

    # Slow final approach: a weakly attracting equilibrium may not shrink
    # the distance below the 1e-8 trigger radius within the horizon even
    # though convergence is unambiguous.  Accept proximity at 1e-6 when the
    # field is already negligible there.
    xf = traj.final_state
    ff = vector_field(xf, params)
    if math.hypot(ff[0], ff[1]) < 1e-6:
        candidates = list(eqmod.disease_free(params))
        if e2.I > 0.0:
            candidates.append(e2)
        for eq in candidates:
            if math.hypot(xf[0] - eq.S, xf[1] - eq.I) < 1e-6:
                return OmegaLimitResult(
                    eq.ident, traj,
                    detail="slow approach, within 1e-6 at horizon end")
    return OmegaLimitResult("undecided", traj)


# ----------------------------------------------------------------------
# invariant-manifold shooting


def manifold_shoot(equilibrium: Equilibrium, direction: str, side: str,
                   offset: float, params: ModelParams, t_end: float, *,
                   tol: float = 1e-8, sections=(), targets=(),
                   domain_bound: float | None = None,
                   record: bool = True) -> Trajectory:
    """Launch a trajectory off a saddle along an eigenvector.

    The start is location + offset*v with v the unit eigenvector of the
    unstable (positive) or stable (negative) eigenvalue; 'stable' shots run
    in reversed time, tracing the stable manifold backwards out of the
    saddle. side '+' orients v to positive I-component (falling back to
    positive S when the I-component vanishes, as on the axis equilibria);
    side '-' is the opposite.
    """
    if equilibrium.stability is not StabilityClass.SADDLE:
        raise ValueError(
            f"{equilibrium.ident} is {equilibrium.stability.value}, not a saddle")
    if not 1e-8 <= offset <= 1e-4:
        raise ValueError(f"offset must lie in [1e-8, 1e-4], got {offset}")
    if direction not in ("stable", "unstable"):
        raise ValueError(f"direction must be 'stable' or 'unstable', got {direction!r}")
    if side not in ("+", "-"):
        raise ValueError(f"side must be '+' or '-', got {side!r}")

    jac = eqmod.jacobian(equilibrium.location, params)
    lam_s, lam_u = equilibrium.eigenvalues
    lam = lam_u.real if direction == "unstable" else lam_s.real
    (a, b), (c, d) = jac
    v = (b, lam - a)
    if math.hypot(*v) <= 1e-13 * (1.0 + abs(lam)):
        v = (lam - d, c)
    norm = math.hypot(*v)
    if norm <= 1e-13 * (1.0 + abs(lam)):
        raise ValueError("eigenvector numerically undefined (defective matrix)")
    v = (v[0] / norm, v[1] / norm)
    if v[1] != 0.0:
        flip = v[1] < 0.0
    else:
        flip = v[0] < 0.0
    if flip:
        v = (-v[0], -v[1])
    if side == "-":
        v = (-v[0], -v[1])
    x0 = (equilibrium.S + offset * v[0], equilibrium.I + offset * v[1])
    if x0[1] < 0.0:
        x0 = (x0[0], 0.0)
    return integrate(x0, params, t_end, tol=tol,
                     reverse_time=(direction == "stable"),
                     sections=sections, targets=targets,
                     domain_bound=domain_bound, record=record)


# ----------------------------------------------------------------------
# recovered-class reconstruction


def recover_recovered(traj: Trajectory, R0_initial: float,
                      params: ModelParams | None = None) -> np.ndarray:
    """Integrate dR/dt = p*m + g*I(t) - mu*R along the trajectory's grid.

    I(t) is the trajectory's dense output; each grid interval is advanced by
    fifth-order Runge-Kutta substeps (length <= 0.25) so the scalar solution
    carries the same order as the planar one. Returns R at traj.t.
    """
    if traj.reversed_time:
        raise ValueError("recovered-class reconstruction needs a forward run")
    pr = params or traj.params
    pm = pr.p * pr.m
    g = pr.g
    mu = pr.mu
    t = traj.t
    out = np.empty(len(t))
    out[0] = R = float(R0_initial)
    for j in range(1, len(t)):
        t0, t1 = float(t[j - 1]), float(t[j])
        h_full = t1 - t0
        if h_full == 0.0:
            out[j] = R
            continue
        I0 = float(traj.states[j - 1, 1])
        I1 = float(traj.states[j, 1])
        fI0 = float(traj.derivs[j - 1, 1])
        fI1 = float(traj.derivs[j, 1])

        def I_of(tau):           # tau in [0, h_full]
            return _hermite_component(tau / h_full, h_full, I0, fI0, I1, fI1)

        nsub = max(1, math.ceil(h_full / 0.25))
        hs = h_full / nsub
        tau = 0.0
        for _ in range(nsub):
            def fR(tloc, Rloc):
                return pm + g * I_of(tloc) - mu * Rloc
            k1 = fR(tau, R)
            k2 = fR(tau + hs * _C2, R + hs * _A21 * k1)
            k3 = fR(tau + hs * _C3, R + hs * (_A31 * k1 + _A32 * k2))
            k4 = fR(tau + hs * _C4, R + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3))
            k5 = fR(tau + hs * _C5, R + hs * (_A51 * k1 + _A52 * k2
                                              + _A53 * k3 + _A54 * k4))
            k6 = fR(tau + hs, R + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3
                                        + _A64 * k4 + _A65 * k5))
            R = R + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            tau += hs
        out[j] = R
    return out
