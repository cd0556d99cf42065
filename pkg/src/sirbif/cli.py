"""Command-line front end: reproducible atlas, portrait, and connection runs.

Every run resolves to a configuration that is echoed into each artifact it
writes (CSV ``#`` header, JSON ``config`` object, SVG ``<desc>``), so any
output file identifies the run that produced it and re-running with the same
configuration reproduces the same bytes.  File schemas are documented in
FORMAT.md and in each subcommand's ``--help``.

Exit codes: 0 success; 2 validation error (malformed flags or config,
parameters outside their domain, I/O problems); 3 numerical failure
(integration breakdown, bracket without sign change, non-convergent fit).
"""
from __future__ import annotations

import argparse
import csv as _csvmod
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .atlas import (
    BelyakovDomainError,
    CurveDomainError,
    RegionFlagError,
    classify_region,
    curve_values_at,
    dz_point,
    p_bt2,
    p_h,
    p_sn,
    p_t,
    region_fan,
)
from .connections import (
    REFERENCE_HET_POINTS,
    build_het_table,
    find_periodic_orbit,
    fit_reference_curve,
    power_fit,
)
from .equilibria import StabilityClass, disease_free, endemic
from .integrate import (
    integrate,
    manifold_shoot,
    omega_limit_estimate,
    recover_recovered,
)
from .model import (
    REFERENCE_BASE,
    BaseParams,
    ModelParams,
    ReducedPoint,
    invariant_region_bound,
    r0_of,
    reduced_to_params,
)
from .svgplot import PALETTE, Canvas

_FORMATS = ("csv", "json", "svg")
_REGION_NAMES = ("A", "B", "C", "D", "E", "F", "G", "H", "het")


# ----------------------------------------------------------------------
# run configuration and artifact writers


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one subcommand invocation."""

    command: str
    settings: dict

    def to_json_dict(self) -> dict:
        return {"command": self.command, "tool": "sirbif",
                "version": __version__, "settings": self.settings}

    def compact(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True,
                          separators=(",", ":"))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(float(value))
    return str(value)


def _quote(cell: str) -> str:
    if any(ch in cell for ch in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def _write_csv(path: Path, config: RunConfig, columns, rows) -> None:
    lines = [f"# sirbif {__version__}", f"# config {config.compact()}",
             ",".join(columns)]
    lines.extend(",".join(_quote(_cell(v)) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, config: RunConfig, payload: dict) -> None:
    doc = dict(payload)
    doc["config"] = config.to_json_dict()
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_svg(path: Path, canvas: Canvas) -> None:
    path.write_text(canvas.render())


def _announce(path: Path) -> None:
    print(f"wrote {path}")


# ----------------------------------------------------------------------
# parameter plumbing


def _resolve_base(ns) -> BaseParams:
    return BaseParams(A=ns.A, m=ns.m, mu=ns.mu, d=ns.d, g=ns.g)


def _resolve_params(ns) -> ModelParams:
    base = _resolve_base(ns)
    if getattr(ns, "beta", None) is not None:
        return ModelParams(A=ns.A, beta=ns.beta, m=ns.m, mu=ns.mu, d=ns.d,
                           g=ns.g, p=ns.p)
    if getattr(ns, "r0", None) is not None:
        return reduced_to_params(ReducedPoint(ns.r0, ns.p, base))
    raise ValueError("give either --beta or --r0 to fix the transmission rate")


def _base_of(params: ModelParams) -> BaseParams:
    return BaseParams(A=params.A, m=params.m, mu=params.mu, d=params.d,
                      g=params.g)


def _base_dict(base: BaseParams) -> dict:
    return {"A": base.A, "m": base.m, "mu": base.mu, "d": base.d, "g": base.g}


def _params_dict(params: ModelParams) -> dict:
    return {"A": params.A, "beta": params.beta, "m": params.m, "mu": params.mu,
            "d": params.d, "g": params.g, "p": params.p}


def _formats(ns) -> tuple:
    chosen = ns.format or list(_FORMATS)
    return tuple(f for f in _FORMATS if f in chosen)


def _effective_tol(ns, default: float) -> float:
    return default if ns.tol is None else ns.tol


def _config_for(ns, command: str, extra: dict, tol: float) -> RunConfig:
    settings = {"tol": tol, "jobs": ns.jobs, "seed": ns.seed,
                "formats": list(_formats(ns))}
    settings.update(extra)
    return RunConfig(command, settings)


def _out_dir(ns) -> Path:
    out = Path(ns.out) if ns.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# equilibria


def _eig_text(eq) -> str:
    parts = []
    for lam in eq.eigenvalues:
        if lam.imag == 0.0:
            parts.append(repr(lam.real))
        else:
            parts.append(f"{lam.real!r} {'+' if lam.imag >= 0 else '-'} "
                         f"{abs(lam.imag)!r}i")
    return ", ".join(parts)


def cmd_equilibria(ns) -> int:
    params = _resolve_params(ns)
    base = _base_of(params)
    tol = _effective_tol(ns, 1e-8)
    config = _config_for(ns, "equilibria", {"params": _params_dict(params)}, tol)

    dfe = disease_free(params)
    e2 = endemic(params)
    print(f"parameters: A={params.A!r} beta={params.beta!r} m={params.m!r} "
          f"mu={params.mu!r} d={params.d!r} g={params.g!r} p={params.p!r}")
    print(f"R0 = {r0_of(params)!r}")
    if not dfe:
        print(f"no disease-free equilibria (p = {params.p!r} exceeds "
              f"p_SN = {p_sn(2.0, base)!r})")
    rows = []
    for eq in [*dfe, e2]:
        rows.append((eq.ident, eq.S, eq.I,
                     eq.eigenvalues[0].real, eq.eigenvalues[0].imag,
                     eq.eigenvalues[1].real, eq.eigenvalues[1].imag,
                     eq.stability.value))
        if eq.stability is StabilityClass.NONEXISTENT:
            print(f"{eq.ident}: not interior (formal location S={eq.S!r} "
                  f"I={eq.I!r})")
        else:
            print(f"{eq.ident}: S={eq.S!r} I={eq.I!r} [{eq.stability.value}] "
                  f"eigenvalues {_eig_text(eq)}")

    if ns.out is not None:
        outdir = _out_dir(ns)
        fmts = _formats(ns)
        if "csv" in fmts:
            path = outdir / "equilibria.csv"
            _write_csv(path, config,
                       ("id", "S", "I", "eig1_re", "eig1_im", "eig2_re",
                        "eig2_im", "class"), rows)
            _announce(path)
        if "json" in fmts:
            path = outdir / "equilibria.json"
            _write_json(path, config, {
                "r0": r0_of(params),
                "equilibria": [eq.to_json_dict() for eq in [*dfe, e2]],
            })
            _announce(path)
    return 0


# ----------------------------------------------------------------------
# dz certificate


def cmd_dz(ns) -> int:
    base = _resolve_base(ns)
    config = _config_for(ns, "dz", {"base": _base_dict(base)},
                         _effective_tol(ns, 1e-8))
    cert = dz_point(base)
    r0s, ps = cert.point
    conc = {
        "p_sn": p_sn(r0s, base),
        "dev_t": abs(p_sn(r0s, base) - p_t(r0s, base)),
        "dev_h": abs(p_sn(r0s, base) - p_h(r0s, base)),
        "dev_bt2": abs(p_sn(r0s, base) - p_bt2(r0s, base)),
    }
    jac = [[float(v) for v in row] for row in cert.jacobian]
    print(f"double-zero point: (R0, p) = ({r0s!r}, {ps!r})")
    print(f"E2 location there: S={cert.location[0]!r} I={cert.location[1]!r}")
    print(f"Jacobian: {jac!r}")
    print(f"expected: {[list(row) for row in cert.expected]!r}")
    print(f"max entry error: {float(cert.max_entry_error)!r}")
    print(f"eigenvalue moduli: {[float(v) for v in cert.eig_moduli]!r}")
    print(f"curve concurrence at R0=2: p_SN={conc['p_sn']!r} "
          f"|p_SN-p_T|={conc['dev_t']!r} |p_SN-p_H|={conc['dev_h']!r} "
          f"|p_SN-p_Bt2|={conc['dev_bt2']!r}")
    print(f"certificate ok: {cert.ok}")
    if ns.out is not None and "json" in _formats(ns):
        outdir = _out_dir(ns)
        path = outdir / "dz.json"
        _write_json(path, config, {
            "point": {"r0": r0s, "p": ps},
            "location": {"S": cert.location[0], "I": cert.location[1]},
            "jacobian": jac,
            "max_entry_error": float(cert.max_entry_error),
            "eig_moduli": [float(v) for v in cert.eig_moduli],
            "endemic_location_error": cert.endemic_location_error,
            "concurrence": conc,
            "ok": cert.ok,
        })
        _announce(path)
    return 0 if cert.ok else 3


# ----------------------------------------------------------------------
# atlas


_CURVE_COLUMNS = ("sn", "t", "h", "bt1", "bt2", "het")


def _atlas_rows(base: BaseParams, het, r0_min: float, r0_max: float,
                n: int) -> list:
    rows = []
    for i in range(n):
        r0 = r0_min + (r0_max - r0_min) * i / (n - 1)
        vals = curve_values_at(r0, base, het=het)
        rows.append((r0,) + tuple(vals.get(k) for k in _CURVE_COLUMNS))
    return rows


def _region_label_anchors(base: BaseParams, het) -> list:
    """(label, r0, p) anchors for the open regions, computed from the curves
    so they stay inside their bands under any base."""
    anchors = []

    def mid(lo, hi):
        return 0.5 * (lo + hi)

    try:
        anchors.append(("A", 2.2, mid(p_sn(2.2, base), min(1.0, 1.12 * p_sn(2.2, base)))))
        anchors.append(("B", 1.55, mid(p_t(1.55, base), p_sn(1.55, base))))
        anchors.append(("C", 1.16, 0.45 * p_t(1.16, base)))
        anchors.append(("D", 2.35, 0.5 * het(2.35)))
        anchors.append(("E", 3.0, mid(het(3.0), p_h(3.0, base))))
        anchors.append(("F", 2.8, mid(p_h(2.8, base), p_bt2(2.8, base))))
        anchors.append(("G", 3.2, mid(p_bt2(3.2, base), p_t(3.2, base))))
        anchors.append(("H", 3.0, mid(p_t(3.0, base), p_sn(3.0, base))))
    except (CurveDomainError, BelyakovDomainError):
        pass
    return anchors


def _atlas_svg(base: BaseParams, rows, het, config: RunConfig,
               window) -> Canvas:
    r0_min, r0_max, p_min, p_max = window
    canvas = Canvas(720, 540, (r0_min, r0_max), (p_min, p_max),
                    title="(R0, p) bifurcation atlas", desc=config.compact())
    names = {"sn": "saddle-node", "t": "transcritical", "h": "Hopf",
             "bt2": "node-focus", "het": "heteroclinic"}
    for idx, key in enumerate(_CURVE_COLUMNS):
        if key == "bt1":
            continue  # second node-focus root is negative throughout the window
        pts = [(row[0], row[1 + idx]) for row in rows if row[1 + idx] is not None]
        dash = "6,3" if key in ("bt2", "het") else ""
        canvas.polyline(pts, PALETTE[key], width=1.8, dash=dash)
    dz_r0, dz_p = 2.0, p_sn(2.0, base)
    if r0_min <= dz_r0 <= r0_max and p_min <= dz_p <= p_max:
        canvas.marker(dz_r0, dz_p, "filled", PALETTE["axis"], size=5.0)
        canvas.text(dz_r0, dz_p, "DZ", dy=-9.0, bold=True)
    for label, r0a, pa in _region_label_anchors(base, het):
        if r0_min < r0a < r0_max and p_min < pa < p_max:
            canvas.text(r0a, pa, label, size=13, bold=True)
    ticks_r0 = [t for t in (1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
                if r0_min <= t <= r0_max]
    ticks_p = [t for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
               if p_min <= t <= p_max]
    canvas.axes("R0", "p", ticks_r0, ticks_p)
    canvas.legend([(names[k], PALETTE[k]) for k in
                   ("sn", "t", "h", "bt2", "het")])
    return canvas


def cmd_atlas(ns) -> int:
    base = _resolve_base(ns)
    if not (ns.r0_max > ns.r0_min and ns.p_max > ns.p_min):
        raise ValueError("empty atlas window")
    if ns.samples < 2 or ns.grid < 2:
        raise ValueError("--samples and --grid must be at least 2")
    het = fit_reference_curve()
    tol = _effective_tol(ns, 1e-8)
    config = _config_for(ns, "atlas", {
        "base": _base_dict(base),
        "window": [ns.r0_min, ns.r0_max, ns.p_min, ns.p_max],
        "samples": ns.samples, "grid": ns.grid,
    }, tol)

    rows = _atlas_rows(base, het, ns.r0_min, ns.r0_max, ns.samples)
    grid_rows = []
    for i in range(ns.grid):
        r0 = ns.r0_min + (ns.r0_max - ns.r0_min) * i / (ns.grid - 1)
        for j in range(ns.grid):
            p = ns.p_min + (ns.p_max - ns.p_min) * j / (ns.grid - 1)
            try:
                label = classify_region(r0, p, base, het=het).value
            except (RegionFlagError, CurveDomainError, BelyakovDomainError):
                # corner cases sitting exactly on a degenerate locus
                label = "boundary"
            grid_rows.append((r0, p, label))

    outdir = _out_dir(ns)
    fmts = _formats(ns)
    if "csv" in fmts:
        path = outdir / "atlas_curves.csv"
        _write_csv(path, config,
                   ("r0", "p_sn", "p_t", "p_h", "p_bt1", "p_bt2", "p_het"),
                   rows)
        _announce(path)
        path = outdir / "atlas_regions.csv"
        _write_csv(path, config, ("r0", "p", "label"), grid_rows)
        _announce(path)
    if "json" in fmts:
        curves = {}
        for idx, key in enumerate(_CURVE_COLUMNS):
            curves[key] = [[row[0], row[1 + idx]] for row in rows
                           if row[1 + idx] is not None]
        path = outdir / "atlas.json"
        _write_json(path, config, {
            "dz": {"r0": 2.0, "p": p_sn(2.0, base)},
            "curves": curves,
        })
        _announce(path)
    if "svg" in fmts:
        canvas = _atlas_svg(base, rows, het, config,
                            (ns.r0_min, ns.r0_max, ns.p_min, ns.p_max))
        path = outdir / "atlas.svg"
        _write_svg(path, canvas)
        _announce(path)
    return 0


# ----------------------------------------------------------------------
# portraits


@dataclass(frozen=True)
class PortraitPack:
    region: str
    params: ModelParams
    n_boundary: int
    n_ring: int
    note: str


def _builtin_packs() -> dict:
    base = REFERENCE_BASE
    het = fit_reference_curve()

    def red(r0, p):
        return reduced_to_params(ReducedPoint(r0, p, base))

    return {
        "A": PortraitPack("A", red(2.6, 0.90), 20, 0,
                          "beyond the saddle-node: no equilibria off the wall"),
        "B": PortraitPack("B", ModelParams(A=1.0, beta=1.3, m=0.35, mu=0.25,
                                           d=0.25, g=0.50, p=0.61), 20, 0,
                          "disease-free window (A=1, beta=1.3, sigma=g=0.50)"),
        "C": PortraitPack("C", ModelParams(A=1.1, beta=0.91, m=0.35, mu=0.175,
                                           d=0.175, g=0.35, p=0.60), 12, 8,
                          "stable endemic node (beta=0.91)"),
        "D": PortraitPack("D", red(2.6, 0.30), 12, 8, "stable endemic focus"),
        "E": PortraitPack("E", red(2.6, 0.48), 12, 8,
                          "stable focus ringed by the unstable cycle"),
        "F": PortraitPack("F", red(2.6, 0.60), 12, 8, "unstable endemic focus"),
        "G": PortraitPack("G", red(2.6, 0.805), 12, 8, "unstable endemic node"),
        "H": PortraitPack("H", red(2.6, 0.84), 20, 0,
                          "endemic equilibrium gone; extinction window"),
        "het": PortraitPack("het", red(2.6, round(float(het(2.6)), 6)), 12, 8,
                            "near the saddle-to-saddle connection"),
    }


def _marker_kind(eq) -> str:
    if eq.stability in (StabilityClass.SINK_NODE, StabilityClass.SINK_FOCUS):
        return "filled"
    if eq.stability is StabilityClass.SADDLE:
        return "saddle"
    return "open"


def _downsample(n: int, limit: int) -> list:
    stride = max(1, -(-n // limit))
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _run_portrait(pack: PortraitPack, ns, outdir: Path, fmts, tol: float) -> dict:
    params = pack.params
    base = _base_of(params)
    r0 = r0_of(params)
    bound = invariant_region_bound(params)
    config = _config_for(ns, "portraits", {
        "region": pack.region, "params": _params_dict(params),
        "horizon": ns.horizon, "max_samples": ns.max_samples,
        "note": pack.note,
    }, tol)

    fan = region_fan(params, n_boundary=pack.n_boundary, n_ring=pack.n_ring)
    results = [omega_limit_estimate(x0, params, horizon=ns.horizon, tol=tol)
               for x0 in fan]

    cycle = None
    cycle_error = ""
    if pack.region == "E":
        het = fit_reference_curve()
        try:
            cycle = find_periodic_orbit(r0, params.p, base,
                                        het_p=float(het(r0)))
        except (ValueError, RuntimeError) as exc:
            cycle_error = str(exc)

    legs = []
    if pack.region == "het":
        e0, e1 = disease_free(params)
        legs.append(manifold_shoot(e1, "unstable", "+", 1e-6, params,
                                   ns.horizon, tol=tol))
        legs.append(manifold_shoot(e0, "stable", "+", 1e-6, params,
                                   ns.horizon, tol=tol))

    outcome_rows = []
    for k, (x0, res) in enumerate(zip(fan, results)):
        fin = res.trajectory.final_state
        outcome_rows.append((k, x0[0], x0[1], res.outcome, res.detail,
                             res.trajectory.t[-1], fin[0], fin[1]))
    counts: dict = {}
    for res in results:
        counts[res.outcome] = counts.get(res.outcome, 0) + 1

    stem = f"portrait_{pack.region}"
    if "csv" in fmts:
        rows = []
        for k, res in enumerate(results):
            traj = res.trajectory
            for i in _downsample(len(traj.t), ns.max_samples):
                rows.append((k, traj.t[i], traj.states[i, 0], traj.states[i, 1]))
        path = outdir / f"{stem}.csv"
        _write_csv(path, config, ("traj", "t", "S", "I"), rows)
        _announce(path)
        path = outdir / f"{stem}_outcomes.csv"
        _write_csv(path, config,
                   ("traj", "S0", "I0", "outcome", "detail", "t_end",
                    "S_end", "I_end"), outcome_rows)
        _announce(path)
    if "json" in fmts:
        payload = {
            "region": pack.region, "note": pack.note, "r0": r0,
            "p": params.p, "outcome_counts": counts,
            "fan": [{"start": [row[1], row[2]], "outcome": row[3],
                     "detail": row[4]} for row in outcome_rows],
        }
        if pack.region == "E":
            payload["cycle"] = (None if cycle is None else {
                "period": cycle.period, "floquet": cycle.floquet,
                "section_S": cycle.section_S, "section_I": cycle.section_I,
                "return_residual": cycle.return_residual,
            })
            if cycle_error:
                payload["cycle_error"] = cycle_error
        path = outdir / f"{stem}.json"
        _write_json(path, config, payload)
        _announce(path)
    if "svg" in fmts:
        A = params.A
        canvas = Canvas(560, 520, (-0.02 * A, 1.04 * A),
                        (-0.02 * bound, 1.02 * bound),
                        title=f"region {pack.region}: R0={r0:.4g}, p={params.p:.4g}",
                        desc=config.compact())
        canvas.polyline([(0.0, 0.0), (A, 0.0), (A, bound - A), (0.0, bound),
                         (0.0, 0.0)], PALETTE["boundary"], width=1.0,
                        dash="4,3")
        for res in results:
            traj = res.trajectory
            idx = _downsample(len(traj.t), 600)
            canvas.polyline([(traj.states[i, 0], traj.states[i, 1])
                             for i in idx], PALETTE["traj"], width=0.9,
                            opacity=0.75)
        for leg in legs:
            idx = _downsample(len(leg.t), 600)
            canvas.polyline([(leg.states[i, 0], leg.states[i, 1])
                             for i in idx], PALETTE["manifold"], width=1.8)
        if cycle is not None:
            idx = _downsample(len(cycle.t), 800)
            canvas.polyline([(cycle.states[i, 0], cycle.states[i, 1])
                             for i in idx], PALETTE["cycle"], width=2.0)
        for eq in [*disease_free(params), endemic(params)]:
            if eq.stability is StabilityClass.NONEXISTENT:
                continue
            canvas.marker(eq.S, eq.I, _marker_kind(eq), PALETTE["axis"])
            canvas.text(eq.S, eq.I, eq.ident, dy=-8.0, size=10)
        sx = [t for t in (0.0, 0.25, 0.5, 0.75, 1.0) if t <= 1.04 * A]
        sy = [round(bound * f, 2) for f in (0.0, 0.5, 1.0)]
        canvas.axes("S", "I", sx, sy)
        path = outdir / f"{stem}.svg"
        _write_svg(path, canvas)
        _announce(path)

    summary = {"region": pack.region, "counts": counts}
    if pack.region == "E":
        summary["cycle"] = None if cycle is None else cycle.floquet
    return summary


def cmd_portraits(ns) -> int:
    tol = _effective_tol(ns, 1e-8)
    fmts = _formats(ns)
    outdir = _out_dir(ns)

    if getattr(ns, "beta", None) is not None or getattr(ns, "r0", None) is not None:
        params = _resolve_params(ns)
        base = _base_of(params)
        label = "custom"
        try:
            het = fit_reference_curve() if base == REFERENCE_BASE else None
            label = classify_region(r0_of(params), params.p, base,
                                    het=het).value
        except (RegionFlagError, CurveDomainError, BelyakovDomainError):
            pass
        packs = [PortraitPack(label, params, 12, 8, "custom parameter point")]
    else:
        builtin = _builtin_packs()
        wanted = ns.region or ["all"]
        if "all" in wanted:
            wanted = list(_REGION_NAMES)
        seen = []
        for name in wanted:
            if name not in builtin:
                raise ValueError(f"unknown region {name!r}; choose from "
                                 f"{', '.join(_REGION_NAMES)} or 'all'")
            if name not in seen:
                seen.append(name)
        packs = [builtin[name] for name in seen]

    for pack in packs:
        summary = _run_portrait(pack, ns, outdir, fmts, tol)
        counts = ", ".join(f"{k}: {v}" for k, v in
                           sorted(summary["counts"].items()))
        line = f"region {summary['region']}: {counts}"
        if "cycle" in summary and summary["cycle"] is not None:
            line += f" (cycle Floquet {summary['cycle']:.4f})"
        print(line)
    return 0


# ----------------------------------------------------------------------
# simulate


def cmd_simulate(ns) -> int:
    params = _resolve_params(ns)
    if ns.t_end <= 0.0:
        raise ValueError("--t-end must be positive")
    tol = _effective_tol(ns, 1e-8)
    config = _config_for(ns, "simulate", {
        "params": _params_dict(params), "x0": [ns.S0, ns.I0],
        "r_init": ns.r_init, "t_end": ns.t_end,
    }, tol)

    traj = integrate((ns.S0, ns.I0), params, ns.t_end, tol=tol)
    recovered = recover_recovered(traj, ns.r_init, params)
    term = traj.terminal
    print(f"integrated to t = {float(traj.t[-1])!r} ({len(traj.t)} samples); "
          f"terminal: {term.kind}" + (f" [{term.detail}]" if term.detail else ""))

    outdir = _out_dir(ns)
    fmts = _formats(ns)
    if "csv" in fmts:
        rows = [(traj.t[i], traj.states[i, 0], traj.states[i, 1],
                 float(recovered[i])) for i in range(len(traj.t))]
        path = outdir / "trajectory.csv"
        _write_csv(path, config, ("t", "S", "I", "R"), rows)
        _announce(path)
    if "json" in fmts:
        path = outdir / "trajectory.json"
        doc = traj.to_json_dict()
        doc["R"] = [float(v) for v in recovered]
        _write_json(path, config, doc)
        _announce(path)
    if "svg" in fmts:
        A, bound = params.A, invariant_region_bound(params)
        canvas = Canvas(560, 520, (-0.02 * A, 1.04 * A),
                        (-0.02 * bound, 1.02 * bound),
                        title=f"trajectory from ({ns.S0:g}, {ns.I0:g})",
                        desc=config.compact())
        canvas.polyline([(0.0, 0.0), (A, 0.0), (A, bound - A), (0.0, bound),
                         (0.0, 0.0)], PALETTE["boundary"], width=1.0, dash="4,3")
        idx = _downsample(len(traj.t), 1200)
        canvas.polyline([(traj.states[i, 0], traj.states[i, 1]) for i in idx],
                        PALETTE["traj"], width=1.4)
        canvas.marker(ns.S0, ns.I0, "open", PALETTE["axis"], size=3.5)
        for eq in [*disease_free(params), endemic(params)]:
            if eq.stability is StabilityClass.NONEXISTENT:
                continue
            canvas.marker(eq.S, eq.I, _marker_kind(eq), PALETTE["axis"])
        sx = [t for t in (0.0, 0.25, 0.5, 0.75, 1.0) if t <= 1.04 * A]
        sy = [round(bound * f, 2) for f in (0.0, 0.5, 1.0)]
        canvas.axes("S", "I", sx, sy)
        path = outdir / "trajectory.svg"
        _write_svg(path, canvas)
        _announce(path)
    return 0


# ----------------------------------------------------------------------
# heteroclinic table and fit


def _parse_r0_list(text: str) -> list:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"bad --r0-list: {exc}") from None
    if not values:
        raise ValueError("--r0-list is empty")
    return values


def cmd_het_table(ns) -> int:
    base = _resolve_base(ns)
    tol = _effective_tol(ns, 1e-10)
    if ns.r0_list and not ns.shoot:
        raise ValueError("--r0-list only makes sense with --shoot; "
                         "the embedded table has fixed abscissae")
    abscissae = (_parse_r0_list(ns.r0_list) if ns.r0_list
                 else [r0 for r0, _ in REFERENCE_HET_POINTS])
    config = _config_for(ns, "het-table", {
        "base": _base_dict(base), "shoot": bool(ns.shoot),
        "r0_list": abscissae,
    }, tol)

    reference = dict(REFERENCE_HET_POINTS)
    rows = []
    if ns.shoot:
        table = build_het_table(abscissae, base, jobs=ns.jobs, tol=tol)
        for row in table:
            delta = None
            if not row.error and row.r0 in reference:
                delta = row.p_het - reference[row.r0]
            rows.append((row.r0, None if row.error else row.p_het,
                         None if row.error else row.splitting_residual,
                         delta, row.error))
            if row.error:
                print(f"r0 = {row.r0!r}: failed ({row.error})")
            else:
                print(f"r0 = {row.r0!r}: p_het = {row.p_het!r}")
    else:
        rows = [(r0, p, None, None, "") for r0, p in REFERENCE_HET_POINTS]
        print(f"embedded connection table: {len(rows)} rows")

    outdir = _out_dir(ns)
    fmts = _formats(ns)
    if "csv" in fmts:
        path = outdir / "het_table.csv"
        _write_csv(path, config,
                   ("r0", "p_het", "splitting_residual", "delta_vs_reference",
                    "error"), rows)
        _announce(path)
    if "json" in fmts:
        path = outdir / "het_table.json"
        _write_json(path, config, {"rows": [
            {"r0": r[0], "p_het": r[1], "splitting_residual": r[2],
             "delta_vs_reference": r[3], "error": r[4]} for r in rows]})
        _announce(path)
    failed = sum(1 for r in rows if r[4])
    return 3 if failed == len(rows) else 0


def _read_points_csv(path: Path) -> list:
    points = []
    with path.open(newline="") as handle:
        rows = [row for row in _csvmod.reader(handle)
                if row and not row[0].lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    header = [cell.strip() for cell in rows[0]]
    try:
        i_r0, i_p = header.index("r0"), header.index("p_het")
    except ValueError:
        raise ValueError(f"{path}: header must name 'r0' and 'p_het' columns")
    for row in rows[1:]:
        if len(row) <= max(i_r0, i_p) or not row[i_p].strip():
            continue
        points.append((float(row[i_r0]), float(row[i_p])))
    if len(points) < 3:
        raise ValueError(f"{path}: need at least 3 usable (r0, p_het) rows")
    return points


def cmd_het_fit(ns) -> int:
    base = _resolve_base(ns)
    tol = _effective_tol(ns, 1e-10)
    if ns.table and ns.shoot:
        raise ValueError("--table and --shoot are mutually exclusive")
    if ns.table:
        source = ns.table
        points = _read_points_csv(Path(ns.table))
    elif ns.shoot:
        source = "shoot"
        abscissae = [r0 for r0, _ in REFERENCE_HET_POINTS]
        table = build_het_table(abscissae, base, jobs=ns.jobs, tol=tol)
        points = [(row.r0, row.p_het) for row in table if not row.error]
        if len(points) < 3:
            raise ValueError("shooting produced fewer than 3 usable rows")
    else:
        source = "embedded"
        points = list(REFERENCE_HET_POINTS)

    fit = power_fit(points)
    config = _config_for(ns, "het-fit", {
        "base": _base_dict(base), "source": source, "n_points": len(points),
    }, tol)
    print(f"p_het(r0) ~ a*r0^b + c with a = {fit.a!r}, b = {fit.b!r}, "
          f"c = {fit.c!r}")
    print(f"rss = {fit.rss!r}, corr = {fit.corr!r}, "
          f"iterations = {fit.iterations}")

    outdir = _out_dir(ns)
    fmts = _formats(ns)
    payload = {"a": fit.a, "b": fit.b, "c": fit.c, "rss": fit.rss,
               "corr": fit.corr, "iterations": fit.iterations,
               "grad_norm": fit.grad_norm, "n_points": len(points)}
    if "json" in fmts:
        path = outdir / "het_fit.json"
        _write_json(path, config, {"fit": payload})
        _announce(path)
    if "csv" in fmts:
        path = outdir / "het_fit.csv"
        _write_csv(path, config,
                   ("a", "b", "c", "rss", "corr", "iterations", "grad_norm",
                    "n_points"),
                   [(fit.a, fit.b, fit.c, fit.rss, fit.corr, fit.iterations,
                     fit.grad_norm, len(points))])
        _announce(path)
    return 0


# ----------------------------------------------------------------------
# periodic orbit


def cmd_cycle(ns) -> int:
    base = _resolve_base(ns)
    tol = _effective_tol(ns, 1e-10)
    het_p = ns.het_p
    if het_p is None:
        het_p = float(fit_reference_curve()(ns.r0))
    config = _config_for(ns, "cycle", {
        "base": _base_dict(base), "r0": ns.r0, "p": ns.p, "het_p": het_p,
    }, tol)

    orbit = find_periodic_orbit(ns.r0, ns.p, base, het_p=het_p, tol=tol)
    print(f"unstable cycle at (R0, p) = ({ns.r0!r}, {ns.p!r}): "
          f"period = {orbit.period!r}, Floquet multiplier = {orbit.floquet!r}")
    print(f"section point: S = {orbit.section_S!r}, I = {orbit.section_I!r} "
          f"(return residual {orbit.return_residual!r})")

    outdir = _out_dir(ns)
    fmts = _formats(ns)
    if "csv" in fmts:
        path = outdir / "cycle.csv"
        _write_csv(path, config, ("t", "S", "I"), orbit.to_csv_rows())
        _announce(path)
    if "json" in fmts:
        path = outdir / "cycle.json"
        _write_json(path, config, orbit.to_json_dict())
        _announce(path)
    if "svg" in fmts:
        params = reduced_to_params(ReducedPoint(ns.r0, ns.p, base))
        A, bound = params.A, invariant_region_bound(params)
        canvas = Canvas(560, 520, (-0.02 * A, 1.04 * A),
                        (-0.02 * bound, 1.02 * bound),
                        title=f"unstable cycle: R0={ns.r0:g}, p={ns.p:g}",
                        desc=config.compact())
        canvas.polyline([(0.0, 0.0), (A, 0.0), (A, bound - A), (0.0, bound),
                         (0.0, 0.0)], PALETTE["boundary"], width=1.0, dash="4,3")
        idx = _downsample(len(orbit.t), 1200)
        canvas.polyline([(orbit.states[i, 0], orbit.states[i, 1])
                         for i in idx], PALETTE["cycle"], width=2.0)
        for eq in [*disease_free(params), endemic(params)]:
            if eq.stability is StabilityClass.NONEXISTENT:
                continue
            canvas.marker(eq.S, eq.I, _marker_kind(eq), PALETTE["axis"])
            canvas.text(eq.S, eq.I, eq.ident, dy=-8.0, size=10)
        sx = [t for t in (0.0, 0.25, 0.5, 0.75, 1.0) if t <= 1.04 * A]
        sy = [round(bound * f, 2) for f in (0.0, 0.5, 1.0)]
        canvas.axes("S", "I", sx, sy)
        path = outdir / "cycle.svg"
        _write_svg(path, canvas)
        _announce(path)
    return 0


# ----------------------------------------------------------------------
# parser assembly


def _add_base_args(parser) -> None:
    grp = parser.add_argument_group("base parameters")
    grp.add_argument("--A", type=float, default=REFERENCE_BASE.A,
                     help="recruitment scale (default %(default)s)")
    grp.add_argument("--m", type=float, default=REFERENCE_BASE.m,
                     help="vaccination supply rate (default %(default)s)")
    grp.add_argument("--mu", type=float, default=REFERENCE_BASE.mu,
                     help="natural mortality (default %(default)s)")
    grp.add_argument("--d", type=float, default=REFERENCE_BASE.d,
                     help="disease-induced mortality (default %(default)s)")
    grp.add_argument("--g", type=float, default=REFERENCE_BASE.g,
                     help="recovery rate (default %(default)s)")


def _add_point_args(parser) -> None:
    grp = parser.add_argument_group("parameter point")
    grp.add_argument("--beta", type=float, default=None,
                     help="transmission rate (overrides --r0)")
    grp.add_argument("--r0", type=float, default=None,
                     help="basic reproduction number; sets beta = r0*(mu+d+g)/A")
    grp.add_argument("--p", type=float, default=0.0,
                     help="vaccination level in [0, 1] (default %(default)s)")


def _io_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    grp = parent.add_argument_group("run control")
    grp.add_argument("--config", metavar="FILE", default=None,
                     help="JSON file of flag defaults for this subcommand")
    grp.add_argument("--out", metavar="DIR", default=None,
                     help="output directory (default: current directory)")
    grp.add_argument("--format", action="append", choices=_FORMATS,
                     metavar="FMT", default=None,
                     help="output format (csv/json/svg); repeatable, "
                          "default: all that apply")
    grp.add_argument("--tol", type=float, default=None,
                     help="integration tolerance (command-specific default)")
    grp.add_argument("--jobs", type=int, default=1,
                     help="parallel workers for independent rows "
                          "(default %(default)s)")
    grp.add_argument("--seed", type=int, default=0,
                     help="seed recorded in the run configuration "
                          "(default %(default)s)")
    return parent


def build_parser():
    top = argparse.ArgumentParser(
        prog="sirbif",
        description="Bifurcation toolkit for a vaccinated logistic-SIR "
                    "planar system.",
        epilog="File schemas are documented in FORMAT.md.")
    top.add_argument("--version", action="version",
                     version=f"sirbif {__version__}")
    sub = top.add_subparsers(dest="command", required=True, metavar="COMMAND")
    io = _io_parent()
    parsers = {}

    ap = sub.add_parser(
        "equilibria", parents=[io],
        help="list equilibria, eigenvalues, and stability classes",
        description="Print every equilibrium with its eigenvalues and "
                    "stability class. CSV columns: id,S,I,eig1_re,eig1_im,"
                    "eig2_re,eig2_im,class.")
    _add_base_args(ap)
    _add_point_args(ap)
    ap.set_defaults(func=cmd_equilibria)
    parsers["equilibria"] = ap

    ap = sub.add_parser(
        "atlas", parents=[io],
        help="emit bifurcation curves, region grid, and SVG diagram",
        description="Sample the five bifurcation/transition curves and "
                    "classify a (R0, p) grid. CSV schemas: atlas_curves.csv "
                    "r0,p_sn,p_t,p_h,p_bt1,p_bt2,p_het (empty cell = outside "
                    "domain); atlas_regions.csv r0,p,label.")
    _add_base_args(ap)
    ap.add_argument("--r0-min", type=float, default=1.0)
    ap.add_argument("--r0-max", type=float, default=4.0)
    ap.add_argument("--p-min", type=float, default=0.0)
    ap.add_argument("--p-max", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=400,
                    help="points per curve (default %(default)s)")
    ap.add_argument("--grid", type=int, default=200,
                    help="region grid resolution per axis (default %(default)s)")
    ap.set_defaults(func=cmd_atlas)
    parsers["atlas"] = ap

    ap = sub.add_parser(
        "portraits", parents=[io],
        help="phase-portrait evidence packs for the open regions",
        description="Integrate an initial-condition fan for each requested "
                    "region at its documented representative parameters, "
                    "classifying every trajectory's forward limit. CSV "
                    "schemas: portrait_<R>.csv traj,t,S,I; "
                    "portrait_<R>_outcomes.csv traj,S0,I0,outcome,detail,"
                    "t_end,S_end,I_end. Passing --r0/--beta runs a single "
                    "custom portrait instead.")
    _add_base_args(ap)
    _add_point_args(ap)
    ap.add_argument("--region", action="append", metavar="R", default=None,
                    help="region label (A..H, het, or all); repeatable "
                         "(default: all)")
    ap.add_argument("--horizon", type=float, default=800.0,
                    help="integration horizon per trajectory "
                         "(default %(default)s)")
    ap.add_argument("--max-samples", type=int, default=400,
                    help="cap on CSV samples per trajectory "
                         "(default %(default)s)")
    ap.set_defaults(func=cmd_portraits)
    parsers["portraits"] = ap

    ap = sub.add_parser(
        "simulate", parents=[io],
        help="integrate one trajectory and reconstruct the removed class",
        description="Integrate from (--S0, --I0), reporting the terminal "
                    "event and the reconstructed removed-compartment series. "
                    "CSV columns: t,S,I,R.")
    _add_base_args(ap)
    _add_point_args(ap)
    ap.add_argument("--S0", type=float, required=True, help="initial S")
    ap.add_argument("--I0", type=float, required=True, help="initial I")
    ap.add_argument("--r-init", type=float, default=0.0,
                    help="initial removed-class value (default %(default)s)")
    ap.add_argument("--t-end", type=float, default=100.0,
                    help="integration horizon (default %(default)s)")
    ap.set_defaults(func=cmd_simulate)
    parsers["simulate"] = ap

    ap = sub.add_parser(
        "het-table", parents=[io],
        help="heteroclinic connection table (embedded or freshly shot)",
        description="Emit the connection-curve table. Default: the embedded "
                    "13-row reference table. With --shoot, locate each "
                    "connection by bisection on the manifold splitting. CSV "
                    "columns: r0,p_het,splitting_residual,delta_vs_reference,"
                    "error (empty cells where not applicable).")
    _add_base_args(ap)
    ap.add_argument("--shoot", action="store_true",
                    help="recompute the table by shooting instead of using "
                         "the embedded rows")
    ap.add_argument("--r0-list", default=None, metavar="LIST",
                    help="comma-separated abscissae (requires --shoot)")
    ap.set_defaults(func=cmd_het_table)
    parsers["het-table"] = ap

    ap = sub.add_parser(
        "het-fit", parents=[io],
        help="power-law fit p_het(r0) = a*r0^b + c",
        description="Fit the three-parameter power law to a connection "
                    "table: the embedded rows (default), a CSV with r0 and "
                    "p_het columns (--table), or a freshly shot table "
                    "(--shoot). JSON payload: a,b,c,rss,corr.")
    _add_base_args(ap)
    ap.add_argument("--table", default=None, metavar="FILE",
                    help="CSV file with r0 and p_het columns")
    ap.add_argument("--shoot", action="store_true",
                    help="shoot a fresh table at the embedded abscissae")
    ap.set_defaults(func=cmd_het_fit)
    parsers["het-fit"] = ap

    ap = sub.add_parser(
        "cycle", parents=[io],
        help="locate the unstable periodic orbit around the endemic focus",
        description="Find the unstable cycle at (--r0, --p) inside the band "
                    "between the connection and Hopf curves. CSV columns: "
                    "t,S,I over one period; JSON payload includes period and "
                    "Floquet multiplier.")
    _add_base_args(ap)
    ap.add_argument("--r0", type=float, default=2.6)
    ap.add_argument("--p", type=float, default=0.48)
    ap.add_argument("--het-p", type=float, default=None,
                    help="connection value p_het(r0) (default: embedded fit)")
    ap.set_defaults(func=cmd_cycle)
    parsers["cycle"] = ap

    ap = sub.add_parser(
        "dz", parents=[io],
        help="double-zero certificate and curve concurrence",
        description="Evaluate the Jacobian at the organizing double-zero "
                    "point (R0, p) = (2, A^2/(4m)) and check that all curves "
                    "pass through it.")
    _add_base_args(ap)
    ap.set_defaults(func=cmd_dz)
    parsers["dz"] = ap

    return top, parsers


# ----------------------------------------------------------------------
# config-file preloading and entry point


def _peek_config(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a file argument")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _load_config_defaults(path: str, subparser) -> None:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    dests = {action.dest for action in subparser._actions}
    clean = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ValueError(f"unknown config key {key!r} for this command")
        clean[dest] = value
    subparser.set_defaults(**clean)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    top, parsers = build_parser()
    try:
        cfg = _peek_config(argv)
        if cfg is not None:
            if not argv or argv[0] not in parsers:
                raise ValueError("--config requires a leading subcommand")
            _load_config_defaults(cfg, parsers[argv[0]])
        ns = top.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except ValueError as exc:
        print(f"sirbif: {exc}", file=sys.stderr)
        return 2

    try:
        return int(ns.func(ns) or 0)
    except (RuntimeError, ArithmeticError) as exc:
        print(f"sirbif: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"sirbif: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
