"""Command-line front end: ``dgk <command> --config <path> [--out <dir>] [--seed <u64>]``.

Each run reads one JSON config, resolves defaults, and writes a JSON report
(``<command>.json``) plus CSV tables with JSON sidecars into the output
directory.  Reports embed the resolved config, its SHA-256 hash, the seed,
the lattice and the tolerances in force; nothing time-dependent is written,
so identical inputs give byte-identical files.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import PRESETS, preset
from .curvature import CURVATURE_MARGIN, ball_volume, curvature_bundle
from .dynamics import (
    FRW_COLUMNS,
    ChartFieldMetric,
    ConstantFieldMetric,
    Couplings,
    DeformationPotentialSpec,
    FieldConfig,
    ScalarKineticMetric,
    ScalarSectorSpec,
    conservation_check,
    consistency_functional,
    einstein_residual,
    eom_projection,
    frw_solve,
    sigma_residual,
    stress_energy,
)
from .errors import ConfigError, DegeneracyError, DgkError
from .gaussian_states import OVERLAP_CONDITION_CAP, SpatialDetectorParams, TemporalDetectorParams
from .info_geometry import DEFAULT_STEPS, ParamChart, berry_connection, qgt_numeric, spatial_metric_closed, temporal_metric_closed
from .io import config_hash, lattice_table, write_csv, write_json
from .lattice import Lattice
from .metric_field import RANK_TOL, DetectorFieldGrid, reconstruct
from .profiles import Profile

COMMANDS = ("qgt", "reconstruct", "curvature", "volume", "residuals", "sigma", "frw")

TOLERANCES = {
    "rank_tol": RANK_TOL,
    "overlap_condition_cap": OVERLAP_CONDITION_CAP,
    "metric_condition_cap": 1e12,
    "stencil_order": 2,
    "curvature_margin": CURVATURE_MARGIN,
    "psd_floor": -1e-9,
}


# ---------------------------------------------------------------- config helpers


def _get(block, key, path, default=None, required=False):
    if not isinstance(block, dict):
        raise ConfigError(f"expected an object at {path or 'top level'}", path)
    if key not in block:
        if required:
            raise ConfigError(f"missing required field {key!r}", f"{path}.{key}" if path else key)
        return copy.deepcopy(default)
    return block[key]


def _field(path, key):
    return f"{path}.{key}" if path else key


def _guard(path, fn, *args):
    """Run a parser and turn value errors into config errors naming ``path``."""
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc), path) from None


def _parse_state(block, path):
    """``{"q", "A", "B", "p", "phi"}`` or temporal ``{"t", "a", "b", "pi", "varphi"}``."""
    if not isinstance(block, dict):
        raise ConfigError("state must be an object", path)
    if "a" in block or "t" in block:
        a = _get(block, "a", path, required=True)
        res = {
            "t": float(_get(block, "t", path, 0.0)),
            "a": a,
            "b": float(_get(block, "b", path, 0.0)),
            "pi": float(_get(block, "pi", path, 0.0)),
            "varphi": float(_get(block, "varphi", path, 0.0)),
        }
        state = _guard(_field(path, "a"), lambda: TemporalDetectorParams(**{k: float(v) for k, v in res.items()}))
        return state, state.to_dict()
    A = _get(block, "A", path, required=True)
    A = _guard(_field(path, "A"), lambda: np.atleast_2d(np.asarray(A, dtype=float)))
    n = A.shape[0]
    q = _get(block, "q", path, [0.0] * n)
    B = _get(block, "B", path, np.zeros((n, n)).tolist())
    p = _get(block, "p", path, [0.0] * n)
    phi = _get(block, "phi", path, 0.0)
    for key, val in (("q", q), ("B", B), ("p", p)):
        _guard(_field(path, key), lambda v=val: np.asarray(v, dtype=float))
    state = _guard(
        _field(path, "A"),
        lambda: SpatialDetectorParams(q=np.asarray(q, float), A=A, B=np.atleast_2d(np.asarray(B, float)), p=np.asarray(p, float), phi=float(phi)),
    )
    return state, state.to_dict()


def _parse_chart(block, path, base):
    coords = _get(block, "chart", path, None)
    if coords is None:
        chart = ParamChart.labels(base)
    else:
        chart = _guard(_field(path, "chart"), ParamChart, coords, base)
    return chart, [c.label() for c in chart.coords]


def _parse_lattice(block, path):
    lat = _get(block, "lattice", path, required=True)
    lp = _field(path, "lattice")
    if "bounds" in lat:
        lo, hi = lat["bounds"]
        lattice = _guard(lp, Lattice.from_bounds, lo, hi, _get(lat, "dims", lp, required=True))
    else:
        lattice = _guard(
            lp,
            lambda: Lattice(tuple(_get(lat, "dims", lp, required=True)), tuple(_get(lat, "spacing", lp, required=True)), lat.get("origin")),
        )
    return lattice


def _parse_profile(val, path):
    return _guard(path, lambda: val if isinstance(val, Profile) else Profile.from_dict(val))


def _parse_metric(block, path, lattice=None):
    m = _get(block, "metric", path, required=True)
    mp = _field(path, "metric")
    name = _get(m, "preset", mp, required=True)
    if name not in PRESETS:
        raise ConfigError(f"unknown metric preset {name!r}; choose from {sorted(PRESETS)}", _field(mp, "preset"))
    kwargs = {k: v for k, v in m.items() if k != "preset"}
    metric = _guard(mp, lambda: preset(name, **kwargs))
    return metric


def _parse_couplings(block, path):
    c = _get(block, "couplings", path, {})
    cp = _field(path, "couplings")
    if c.get("einstein_normalized"):
        kw = {k: float(v) for k, v in c.items() if k in ("G", "mu", "nu")}
        return _guard(cp, lambda: Couplings.einstein_normalized(**kw))
    unknown = set(c) - {"alpha", "mu", "nu", "G", "einstein_normalized"}
    if unknown:
        raise ConfigError(f"unknown coupling fields {sorted(unknown)}", cp)
    return _guard(cp, lambda: Couplings(**{k: float(v) for k, v in c.items() if k != "einstein_normalized"}))


def _parse_potential(block, path):
    """Returns the potential and its resolved config block."""
    pot = _get(block, "potential", path, required=True)
    pp = _field(path, "potential")
    kind = _get(pot, "kind", pp, required=True)
    if kind == "scalar":
        keys = ("m2", "lambda3", "lambda4", "chi0", "chi1")
        spec = _guard(pp, lambda: ScalarSectorSpec(**{k: float(pot[k]) for k in keys if k in pot}))
        return spec, {"kind": "scalar", **spec.to_dict()}
    if kind == "quadratic":
        spec = _guard(pp, lambda: DeformationPotentialSpec("quadratic", M=_get(pot, "M", pp, required=True)))
        return spec, {"kind": "quadratic", "M": spec.M.tolist()}
    state, state_d = _parse_state(_get(pot, "state", pp, required=True), _field(pp, "state"))
    chart, labels = _parse_chart(pot, pp, state)
    spec = _guard(pp, lambda: DeformationPotentialSpec(kind, chart=chart))
    return spec, {"kind": kind, "state": state_d, "chart": labels}


def _parse_field_metric(block, path, potential):
    """Returns the field-space metric and its resolved config block."""
    fm = _get(block, "field_metric", path, None)
    fp = _field(path, "field_metric")
    if fm is None:
        if isinstance(potential, ScalarSectorSpec):
            m = potential.field_metric()
            return m, m.to_dict()
        raise ConfigError("missing required field 'field_metric'", fp)
    kind = _get(fm, "kind", fp, required=True)
    if kind == "constant":
        m = _guard(fp, ConstantFieldMetric, _get(fm, "G", fp, required=True))
        return m, m.to_dict()
    if kind == "scalar":
        m = _guard(fp, lambda: ScalarKineticMetric(float(fm.get("chi0", 1.0)), float(fm.get("chi1", 0.0))))
        return m, m.to_dict()
    if kind == "chart":
        state, state_d = _parse_state(_get(fm, "state", fp, required=True), _field(fp, "state"))
        chart, labels = _parse_chart(fm, fp, state)
        nodes = _guard(_field(fp, "nodes"), int, fm.get("nodes", 51))
        m = _guard(fp, ChartFieldMetric, chart, nodes)
        return m, {"kind": "chart", "state": state_d, "chart": labels, "nodes": nodes}
    raise ConfigError(f"unknown field-metric kind {kind!r}", _field(fp, "kind"))


# ---------------------------------------------------------------- commands


class Run:
    """Collects outputs for one command invocation."""

    def __init__(self, command, config, seed, out):
        self.command = command
        self.config = config
        self.seed = seed
        self.out = Path(out)
        self.files = []
        self.lattice = None

    @property
    def hash(self):
        return config_hash({"command": self.command, "config": self.config, "seed": self.seed})

    def csv(self, name, columns, data, extra=None):
        meta = {
            "command": self.command,
            "config": self.config,
            "config_hash": self.hash,
            "seed": self.seed,
            "lattice": None if self.lattice is None else self.lattice.to_dict(),
        }
        meta.update(extra or {})
        write_csv(self.out / name, columns, data, sidecar=meta)
        self.files.extend([name, Path(name).with_suffix(".json").name])

    def report(self, results, status="ok"):
        doc = {
            "command": self.command,
            "version": __version__,
            "status": status,
            "config": self.config,
            "config_hash": self.hash,
            "seed": self.seed,
            "lattice": None if self.lattice is None else self.lattice.to_dict(),
            "tolerances": TOLERANCES,
            "results": results,
            "outputs": sorted(self.files),
        }
        write_json(self.out / f"{self.command}.json", doc)
        return doc


def cmd_qgt(cfg, run):
    state, state_d = _parse_state(_get(cfg, "state", "", required=True), "state")
    chart, labels = _parse_chart(cfg, "", state)
    xi = _guard("xi", lambda: np.asarray(cfg.get("xi", [0.0] * chart.dim), dtype=float).reshape(chart.dim))
    steps = _guard("steps", lambda: tuple(float(s) for s in cfg.get("steps", DEFAULT_STEPS)))
    run.config.update({"state": state_d, "chart": labels, "xi": xi.tolist(), "steps": list(steps)})
    res = qgt_numeric(chart, xi, steps)
    results = {
        "coords": labels,
        "Q_real": res.Q.real,
        "Q_imag": res.Q.imag,
        "metric": res.metric,
        "berry_curvature": res.berry,
        "berry_connection": berry_connection(chart, xi, steps),
        "psd": bool(np.linalg.eigvalsh(res.metric).min() >= TOLERANCES["psd_floor"]),
    }
    label_idx = [i for i, c in enumerate(chart.coords) if c.kind == "q"]
    if label_idx:
        s = chart.embed(xi)
        if chart.temporal:
            closed = np.array([[temporal_metric_closed(s)]])
        else:
            full = spatial_metric_closed(s)
            qi = [chart.coords[i].index[0] for i in label_idx]
            closed = full[np.ix_(qi, qi)]
        numeric = res.metric[np.ix_(label_idx, label_idx)]
        results["closed_form_label_metric"] = closed
        results["max_abs_closed_minus_numeric"] = float(np.abs(closed - numeric).max())
    run.csv("qgt_metric.csv", labels, res.metric)
    run.csv("qgt_berry.csv", labels, res.berry)
    return results, 0


def _parse_detector_grid(cfg, path=""):
    lattice = _parse_lattice(cfg, path)
    sp = _field(path, "spatial")
    sblock = _get(cfg, "spatial", path, required=True)
    sstate, sstate_d = _parse_state(_get(sblock, "state", sp, required=True), _field(sp, "state"))
    schart, slabels = _parse_chart(sblock, sp, sstate)
    sprof = [_parse_profile(v, f"{sp}.profiles[{i}]") for i, v in enumerate(_get(sblock, "profiles", sp, required=True))]
    sbg = {k: _parse_profile(v, f"{sp}.background.{k}") for k, v in _get(sblock, "background", sp, {}).items()}
    tp = _field(path, "temporal")
    tblock = _get(cfg, "temporal", path, required=True)
    tstate, tstate_d = _parse_state(_get(tblock, "state", tp, required=True), _field(tp, "state"))
    tchart, tlabels = _parse_chart(tblock, tp, tstate)
    tprof = [_parse_profile(v, f"{tp}.profiles[{i}]") for i, v in enumerate(_get(tblock, "profiles", tp, required=True))]
    tbg = {k: _parse_profile(v, f"{tp}.background.{k}") for k, v in _get(tblock, "background", tp, {}).items()}
    if len(sprof) != schart.dim:
        raise ConfigError(f"need {schart.dim} spatial profiles, got {len(sprof)}", _field(sp, "profiles"))
    if len(tprof) != tchart.dim:
        raise ConfigError(f"need {tchart.dim} temporal profiles, got {len(tprof)}", _field(tp, "profiles"))
    grid = _guard(
        path or "spatial",
        DetectorFieldGrid.from_profiles,
        lattice,
        schart,
        sprof,
        tchart,
        tprof,
        sbg,
        tbg,
    )
    resolved = {
        "lattice": lattice.to_dict(),
        "spatial": {
            "state": sstate_d,
            "chart": slabels,
            "profiles": [p.to_dict() for p in sprof],
            "background": {k: v.to_dict() for k, v in sbg.items()},
        },
        "temporal": {
            "state": tstate_d,
            "chart": tlabels,
            "profiles": [p.to_dict() for p in tprof],
            "background": {k: v.to_dict() for k, v in tbg.items()},
        },
    }
    return grid, resolved


def cmd_reconstruct(cfg, run):
    grid, resolved = _parse_detector_grid(cfg)
    allow = bool(cfg.get("allow_degenerate", False))
    run.config.update(resolved)
    run.config["allow_degenerate"] = allow
    run.lattice = grid.lattice
    metric = reconstruct(grid, allow_degenerate=True)
    flagged = ~metric.valid
    h = metric.g[..., 1:, 1:]
    N2 = -metric.g[..., 0, 0]
    ok = metric.valid
    eig = np.linalg.eigvalsh(h[ok]) if ok.any() else np.zeros((0, 1))
    results = {
        "flagged_sites": int(flagged.sum()),
        "flagged_indices": [list(map(int, s)) for s in np.argwhere(flagged)[:100]],
        "h_eigenvalue_min": float(eig.min()) if eig.size else None,
        "h_eigenvalue_max": float(eig.max()) if eig.size else None,
        "N2_min": float(N2[ok].min()) if ok.any() else None,
        "N2_max": float(N2[ok].max()) if ok.any() else None,
    }
    cols, data = lattice_table(grid.lattice, {"g": metric.g, "valid": metric.valid.astype(float)})
    run.csv("metric.csv", cols, data, {"signature": metric.signature})
    return results, (1 if flagged.any() and not allow else 0)


def _metric_on_lattice(cfg, run):
    if "reconstruct" in cfg:
        grid, resolved = _parse_detector_grid(cfg["reconstruct"], "reconstruct")
        run.config["reconstruct"] = resolved
        try:
            metric = reconstruct(grid)
        except DegeneracyError as exc:
            raise DegeneracyError(f"reconstructed metric is degenerate: {exc}", exc.sites) from None
        if cfg.get("spatial_slice") is not None:
            metric = metric.spatial_slice(int(cfg["spatial_slice"]))
            run.config["spatial_slice"] = int(cfg["spatial_slice"])
        return metric, {"reconstruct": True}
    lattice = _parse_lattice(cfg, "")
    am = _parse_metric(cfg, "")
    run.config["lattice"] = lattice.to_dict()
    run.config["metric"] = am.to_dict()
    return _guard("metric", am.sample, lattice), am.to_dict()


def cmd_curvature(cfg, run):
    metric, desc = _metric_on_lattice(cfg, run)
    run.lattice = metric.lattice
    bundle = curvature_bundle(metric)
    R = bundle.scalar
    ok = np.isfinite(R)
    results = {
        "metric": desc,
        "valid_sites": int(ok.sum()),
        "R_min": float(R[ok].min()),
        "R_max": float(R[ok].max()),
        "R_mean": float(R[ok].mean()),
        "scalar_contraction_max_diff": float(np.nanmax(np.abs(bundle.scalar_from_riemann() - R))),
    }
    probe = cfg.get("probe")
    if probe is not None:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(metric.lattice.axes(), R, bounds_error=False, fill_value=np.nan)
        run.config["probe"] = list(map(float, probe))
        results["probe"] = run.config["probe"]
        results["R_probe"] = float(interp(np.asarray(probe, dtype=float)[None])[0])
    cols, data = lattice_table(metric.lattice, {"R": R})
    run.csv("scalar_curvature.csv", cols, data)
    run.config["write_ricci"] = bool(cfg.get("write_ricci", False))
    if run.config["write_ricci"]:
        cols, data = lattice_table(metric.lattice, {"Ric": bundle.ricci})
        run.csv("ricci.csv", cols, data)
    return results, 0


def cmd_volume(cfg, run):
    am = _parse_metric(cfg, "")
    center = _guard("center", lambda: [float(c) for c in _get(cfg, "center", "", required=True)])
    r = _guard("r", float, _get(cfg, "r", "", required=True))
    n_samples = _guard("n_samples", int, cfg.get("n_samples", 100_000))
    steps = _guard("steps", int, cfg.get("steps", 200))
    run.config.update({"metric": am.to_dict(), "center": center, "r": r, "n_samples": n_samples, "steps": steps})
    target = am
    if "lattice" in cfg:
        lattice = _parse_lattice(cfg, "")
        run.config["lattice"] = lattice.to_dict()
        run.lattice = lattice
        target = am.sample(lattice)
    rep = _guard("n_samples", lambda: ball_volume(target, center, r, n_samples=n_samples, seed=run.seed, steps=steps))
    results = rep.to_dict()
    results["consistent_2sigma"] = rep.consistent()
    return results, 0


def _dynamics_setup(cfg, run):
    lattice = _parse_lattice(cfg, "")
    am = _parse_metric(cfg, "")
    couplings = _parse_couplings(cfg, "")
    potential, pot_d = _parse_potential(cfg, "")
    fm, fm_d = _parse_field_metric(cfg, "", potential)
    fld = _get(cfg, "field", "", required=True)
    if fld == "vacuum":
        profiles = [Profile.constant(0.0)] * fm.dim
    else:
        comps = _get(fld, "components", "field", required=True)
        profiles = [_parse_profile(v, f"field.components[{i}]") for i, v in enumerate(comps)]
    if len(profiles) != fm.dim or potential.dim != fm.dim:
        raise ConfigError(
            f"field has {len(profiles)} components, field metric {fm.dim}, potential {potential.dim}", "field"
        )
    x = lattice.coordinates()
    xi = np.stack([p(x) for p in profiles], axis=-1)
    grid = FieldConfig(lattice, xi, fm)
    metric = _guard("metric", am.sample, lattice)
    run.lattice = lattice
    run.config.update(
        {
            "lattice": lattice.to_dict(),
            "metric": am.to_dict(),
            "couplings": couplings.to_dict(),
            "potential": pot_d,
            "field_metric": fm_d,
            "field": {"components": [p.to_dict() for p in profiles]},
        }
    )
    return grid, metric, couplings, potential


def _max_abs(a):
    return float(np.nanmax(np.abs(a))) if np.isfinite(a).any() else None


def cmd_sigma(cfg, run):
    grid, metric, couplings, potential = _dynamics_setup(cfg, run)
    res = sigma_residual(grid, metric, couplings, potential)
    cols, data = lattice_table(grid.lattice, {"sigma": res})
    run.csv("sigma_residual.csv", cols, data)
    return {"sigma_residual_max_abs": _max_abs(res), "margin": CURVATURE_MARGIN}, 0


def cmd_residuals(cfg, run):
    grid, metric, couplings, potential = _dynamics_setup(cfg, run)
    bundle = curvature_bundle(metric)
    res = sigma_residual(grid, metric, couplings, potential)
    T = stress_energy(grid, metric, couplings, potential)
    ein = einstein_residual(bundle, T, couplings)
    div = conservation_check(bundle, metric, T)
    proj = eom_projection(grid, res)
    inside = grid.lattice.interior(CURVATURE_MARGIN)
    func = consistency_functional(grid, metric, bundle, couplings, potential)
    results = {
        "functional": func.to_dict(),
        "T_max_abs_interior": _max_abs(T.T[inside]),
        "sigma_residual_max_abs": _max_abs(res),
        "einstein_residual_max_abs": _max_abs(ein),
        "conservation_max_abs": _max_abs(div),
        "divergence_identity_max_abs": _max_abs(div - proj),
        "margin": CURVATURE_MARGIN,
    }
    lat = grid.lattice
    for name, arr in (
        ("stress_energy.csv", {"T": T.T}),
        ("sigma_residual.csv", {"sigma": res}),
        ("einstein_residual.csv", {"E": ein}),
        ("conservation.csv", {"divT": div, "eom": proj}),
    ):
        cols, data = lattice_table(lat, arr)
        run.csv(name, cols, data)
    return results, 0


def cmd_frw(cfg, run):
    sblock = _get(cfg, "scalar", "", {})
    keys = ("m2", "lambda3", "lambda4", "chi0", "chi1")
    unknown = set(sblock) - set(keys)
    if unknown:
        raise ConfigError(f"unknown scalar fields {sorted(unknown)}", "scalar")
    spec = _guard("scalar", lambda: ScalarSectorSpec(**{k: float(v) for k, v in sblock.items()}))
    couplings = _parse_couplings(cfg, "")
    ics = _get(cfg, "ics", "", required=True)
    if "a0" not in ics:
        raise ConfigError("missing required field 'a0'", "ics.a0")
    t_end = _guard("t_end", float, _get(cfg, "t_end", "", required=True))
    dt = _guard("dt", float, _get(cfg, "dt", "", required=True))
    t0 = _guard("t0", float, cfg.get("t0", 0.0))
    run.config.update({"scalar": spec.to_dict(), "couplings": couplings.to_dict(), "ics": ics, "t_end": t_end, "dt": dt, "t0": t0})
    sol = _guard("ics", frw_solve, spec, couplings, ics, t_end, dt, t0)
    run.csv("frw_series.csv", list(FRW_COLUMNS), sol.table())
    results = {
        "integration_status": sol.status,
        "steps": int(len(sol.t) - 1),
        "max_relative_drift": sol.max_drift,
        "a_final": float(sol.a[-1]),
        "phi_final": float(sol.phi[-1]),
        "t_final": float(sol.t[-1]),
    }
    return results, (0 if sol.status == "ok" else 1)


HANDLERS = {
    "qgt": cmd_qgt,
    "reconstruct": cmd_reconstruct,
    "curvature": cmd_curvature,
    "volume": cmd_volume,
    "residuals": cmd_residuals,
    "sigma": cmd_sigma,
    "frw": cmd_frw,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dgk", description="Detector-state geometry toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default="dgk-out", help="output directory (default: dgk-out)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    return parser


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def run_command(command, cfg, out, seed=None):
    """Run one command on a parsed config; returns ``(exit_code, report)``."""
    cfg = copy.deepcopy(cfg)
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}", "command")
    cfg_seed = cfg.pop("seed", 0)
    cfg.pop("command", None)
    seed = cfg_seed if seed is None else seed
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    run = Run(command, {"seed": seed}, seed, out)
    results, code = HANDLERS[command](cfg, run)
    report = run.report(results, "ok" if code == 0 else "numerical-failure")
    return code, report


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        code, report = run_command(args.command, cfg, args.out, args.seed)
    except ConfigError as exc:
        where = f" (field {exc.field!r})" if exc.field else ""
        print(f"dgk: config error{where}: {exc}", file=sys.stderr)
        return 2
    except (DgkError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"dgk: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        print(f"dgk: config error: {exc}", file=sys.stderr)
        return 2
    summary = {k: v for k, v in report["results"].items() if not isinstance(v, (list, dict, np.ndarray))}
    print(json.dumps({"command": args.command, "status": report["status"], **summary}, sort_keys=True, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
