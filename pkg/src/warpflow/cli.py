"""Command line runner: ``warpflow run|check|slice-profile|sweep --config FILE``.

Configuration is an INI file; see configs/ for complete examples. Every key
outside the schema below is rejected.

Exit codes: 0 all audits pass, 2 an audit failed, 3 runtime error,
4 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import initdata, monitors
from . import quantities as qty
from .errors import MeanConvexityError, WarpFlowError
from .flow import TRACE_COLUMNS, FlowConfig, evolve
from .geometry import curvature_field
from .grid import Grid
from .warp import Kind, make_model

log = logging.getLogger("warpflow")

EXIT_OK, EXIT_AUDIT, EXIT_RUNTIME, EXIT_CONFIG = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# section -> key -> (parser, default)
_REQUIRED = object()
SCHEMA = {
    "ambient": {"kind": (str, _REQUIRED), "n": (int, _REQUIRED), "m": (float, 0.0),
                "r_max": (float, 6.0)},
    "flow": {"k": (int, 1), "cfl": (float, 0.5), "t_end": (float, math.inf),
             "stop_speed_tol": (float, 1e-8), "stop_osc_tol": (float, 1e-6),
             "max_steps": (int, 10_000_000), "record_every": (int, 100),
             "stop_on_convergence": ("bool", True)},
    "grid": {"N": (int, _REQUIRED)},
    "init": {"kind": (str, _REQUIRED), "s": (float, None), "amplitude": (float, None),
             "mode": (int, None), "rho": (float, None), "d": (float, None)},
    "output": {"trace_csv": (str, "trace.csv"), "summary_json": (str, "summary.json"),
               "profile_csv": (str, "slice_profile.csv"), "sweep_json": (str, "sweep.json")},
    "audit": {"monotone_rel_slack": (float, 1e-6), "barrier_slack": (float, 1e-10),
              "certify_functional_tol": (float, 1e-4)},
    "profile": {"s_min": (float, None), "s_max": (float, None), "count": (int, 400)},
    "sweep": {"command": (str, "check"), "min_order": (float, 1.8)},
}
OPTIONAL_SECTIONS = {"flow", "output", "audit", "profile", "sweep"}
INIT_PARAMS = {"slice": ("s",), "perturbed": ("s", "amplitude", "mode"), "offcenter": ("rho", "d")}


def load_config(path):
    """Parse and validate an INI experiment file into a nested dict."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (N)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    cfg = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    for section, keys in SCHEMA.items():
        present = parser[section] if parser.has_section(section) else {}
        if not present and section not in OPTIONAL_SECTIONS:
            raise ConfigError(f"missing section [{section}]")
        for key in present:
            if key not in keys:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
        values = {}
        for key, (kind, default) in keys.items():
            if key in present:
                raw = present[key].strip()
                try:
                    if kind == "bool":
                        values[key] = parser[section].getboolean(key)
                    else:
                        values[key] = kind(raw)
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
            elif default is _REQUIRED:
                raise ConfigError(f"missing key '{key}' in [{section}]")
            else:
                values[key] = default
        cfg[section] = values

    try:
        cfg["ambient"]["kind"] = Kind.parse(cfg["ambient"]["kind"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    init = cfg["init"]
    if init["kind"] not in INIT_PARAMS:
        raise ConfigError(f"[init] kind must be one of {sorted(INIT_PARAMS)}, got {init['kind']!r}")
    needed = INIT_PARAMS[init["kind"]]
    for key in ("s", "amplitude", "mode", "rho", "d"):
        if key in needed and init[key] is None:
            raise ConfigError(f"[init] kind={init['kind']} requires '{key}'")
        if key not in needed and init[key] is not None:
            raise ConfigError(f"[init] key '{key}' does not apply to kind={init['kind']}")
    if cfg["sweep"]["command"] not in ("run", "check"):
        raise ConfigError("[sweep] command must be 'run' or 'check'")
    try:
        cfg["flow_config"] = FlowConfig(**cfg["flow"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[flow] {exc}") from exc
    if cfg["grid"]["N"] < 16 or cfg["ambient"]["n"] < 1:
        raise ConfigError("need N >= 16 and n >= 1")
    return cfg


# --- building blocks ----------------------------------------------------------


def build_model(cfg):
    amb = cfg["ambient"]
    return make_model(amb["kind"], amb["n"], amb["m"], amb["r_max"])


def build_surface(cfg, model, N=None):
    grid = Grid(N or cfg["grid"]["N"], model.n)
    init = cfg["init"]
    if init["kind"] == "slice":
        return initdata.slice(model, grid, init["s"])
    if init["kind"] == "perturbed":
        return initdata.perturbed_slice(model, grid, init["s"], init["amplitude"], init["mode"])
    return initdata.offcenter_sphere(model, grid, init["rho"], init["d"])


def build_profile(cfg, model, surface=None):
    prof = cfg["profile"]
    a, b = model.domain
    lo = prof["s_min"]
    hi = prof["s_max"]
    if lo is None:
        lo = a + 1e-6 * min(1.0, b - a)
    if hi is None:
        top = 4.0 if surface is None else max(4.0, 2.0 * float(surface.r.max()))
        hi = min(top, b - 1e-6 * min(1.0, b - a))
    return qty.build_slice_profile(model, np.linspace(lo, hi, prof["count"]))


def _out_path(cfg, key, out_dir):
    path = Path(cfg["output"][key])
    if out_dir is not None and not path.is_absolute():
        path = Path(out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x):
    return format(float(x), ".17g")


def write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in trace:
            fh.write(",".join(_fmt(x) for x in rec.row()) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _inequalities(surface, profile):
    """Report as a list of dicts; a failed precondition becomes an error entry."""
    try:
        return [rec.as_dict() for rec in qty.inequality_report(surface, profile)], None
    except (MeanConvexityError, qty.RangeError) as exc:
        return [], f"{type(exc).__name__}: {exc}"


def _inequality_failures(records):
    return [r["name"] for r in records
            if r["applicable"] and not r["info_only"] and not r["holds"]]


def _identity_audits(surface):
    """Discrete integral identities with O(dtheta^2) tolerances."""
    cf = curvature_field(surface)
    n = surface.n
    dmu = cf.v * cf.lam**n
    grid = surface.grid
    tol = lambda scale: max(1e-10, 10.0 * grid.dtheta**2 * abs(scale))
    mink_scale = grid.integrate(n * cf.dlam * dmu)
    s2_scale = grid.integrate(np.abs((n - 1) * cf.H * cf.dlam) * dmu) + 1.0
    out = {
        "minkowski_residual": qty.minkowski_residual(surface, cf),
        "minkowski_tolerance": tol(mink_scale),
        "sigma2_identity_residual": qty.sigma2_identity_residual(surface, cf),
        "sigma2_tolerance": tol(s2_scale),
    }
    out["minkowski_pass"] = abs(out["minkowski_residual"]) <= out["minkowski_tolerance"]
    out["sigma2_pass"] = abs(out["sigma2_identity_residual"]) <= out["sigma2_tolerance"]
    return out


# --- commands -------------------------------------------------------------------


def run_experiment(cfg, N=None):
    """Evolve the configured surface and audit the trace. Returns (summary, trace)."""
    model = build_model(cfg)
    surface = build_surface(cfg, model, N)
    fc = cfg["flow_config"]
    if fc.k > model.n:
        raise ConfigError(f"[flow] k={fc.k} exceeds n={model.n}")
    result = evolve(surface, fc)
    trace = result.trace
    audit = cfg["audit"]

    verdicts = []
    # weighted volume grows for every quotient speed (Heintze-Karcher step)
    checks = [("weighted_volume", "nondecreasing")]
    if fc.k == 1 and model.lambda_second_nonnegative:
        checks += [("area", "nondecreasing"), ("Q", "nonincreasing")]
    for key, direction in checks:
        slack = monitors.monotone_slack(trace, key, audit["monotone_rel_slack"])
        verdicts.append(monitors.audit_monotone(trace, key, direction, slack))
    verdicts += monitors.audit_barriers(trace, audit["barrier_slack"])
    if model.kind is Kind.SPHERICAL_CAP:
        kmin = min(rec.kappa_min for rec in trace)
        verdicts.append(monitors.Verdict("kappa_min", "positive", kmin > 0, kmin, -1, 0.0))

    profile = build_profile(cfg, model, surface)
    cert = monitors.certify_convergence(
        trace, result.surface, profile, fc.stop_osc_tol, audit["certify_functional_tol"]
    )
    ineq_initial, err_initial = _inequalities(surface, profile)
    ineq_final, err_final = _inequalities(result.surface, profile)
    failures = [v.key for v in verdicts if not v.passed]
    if not cert.certified:
        failures.append("convergence")
    failures += [f"initial:{name}" for name in _inequality_failures(ineq_initial)]
    failures += [f"final:{name}" for name in _inequality_failures(ineq_final)]

    summary = {
        "converged": bool(result.converged),
        "stop_reason": result.reason,
        "steps": result.steps,
        "final_time": result.surface.time,
        "N": surface.grid.N,
        "audits": [v.as_dict() for v in verdicts],
        "convergence": cert.as_dict(),
        "monitor_bounds": monitors.monitor_bounds(trace),
        "inequalities": {"initial": ineq_initial, "final": ineq_final},
        "inequality_errors": {"initial": err_initial, "final": err_final},
        "failures": failures,
        "passed": not failures,
    }
    return summary, trace


def cmd_run(cfg, out_dir=None):
    summary, trace = run_experiment(cfg)
    write_trace_csv(_out_path(cfg, "trace_csv", out_dir), trace)
    write_json(_out_path(cfg, "summary_json", out_dir), summary)
    log.info("run: converged=%s steps=%d failures=%s",
             summary["converged"], summary["steps"], summary["failures"])
    return EXIT_OK if summary["passed"] else EXIT_AUDIT


def check_surface(cfg, N=None):
    model = build_model(cfg)
    surface = build_surface(cfg, model, N)
    cf = curvature_field(surface)
    profile = build_profile(cfg, model, surface)
    identities = _identity_audits(surface)
    records, err = _inequalities(surface, profile)
    try:
        hk = qty.heintze_karcher_deficit(surface, cf)
    except MeanConvexityError:
        hk = math.nan
    failures = [name for name in ("minkowski", "sigma2") if not identities[f"{name}_pass"]]
    failures += _inequality_failures(records)
    report = {
        "N": surface.grid.N,
        "curvature": {
            "kappa1_min": float(cf.kappa1.min()), "kappa1_max": float(cf.kappa1.max()),
            "kappa2_min": float(np.nanmin(cf.kappa2)) if model.n > 1 else None,
            "kappa2_max": float(np.nanmax(cf.kappa2)) if model.n > 1 else None,
            "H_min": float(cf.H.min()), "H_max": float(cf.H.max()),
            "u_min": float(cf.u.min()), "v_max": float(cf.v.max()),
        },
        "functionals": {
            "area": qty.area(surface, cf),
            "weighted_volume": qty.weighted_volume(surface),
            "weighted_area": qty.weighted_area(surface, cf),
            "mean_weighted": qty.mean_weighted(surface, cf),
            "curvature_volume": qty.curvature_volume(surface),
            "Q": qty.Q_functional(surface, cf),
            "hk_deficit": hk,
            "minkowski2_gap": qty.minkowski2_gap(surface, cf),
        },
        "identities": identities,
        "inequalities": records,
        "inequality_error": err,
        "failures": failures,
        "passed": not failures,
    }
    return report


def cmd_check(cfg, out_dir=None):
    report = check_surface(cfg)
    write_json(_out_path(cfg, "summary_json", out_dir), report)
    return EXIT_OK if report["passed"] else EXIT_AUDIT


def cmd_slice_profile(cfg, out_dir=None):
    model = build_model(cfg)
    profile = build_profile(cfg, model)
    path = _out_path(cfg, "profile_csv", out_dir)
    worst = 0.0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("s,A,W,Q,xi1_residual,xi0_residual\n")
        for s, A, W, Q in zip(profile.s, profile.A, profile.W, profile.Q):
            r1 = Q - profile.xi1(A)
            r0 = Q - profile.xi0(W)
            worst = max(worst, abs(r1) / max(1.0, abs(Q)), abs(r0) / max(1.0, abs(Q)))
            fh.write(",".join(_fmt(x) for x in (s, A, W, Q, r1, r0)) + "\n")
    ok = worst <= 1e-8 and (profile.q_monotone or not model.lambda_second_nonnegative)
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_sweep(cfg, out_dir=None):
    N0 = cfg["grid"]["N"]
    levels = [N0, 2 * N0, 4 * N0]
    command = cfg["sweep"]["command"]
    values = {}
    for N in levels:
        if command == "check":
            rep = check_surface(cfg, N)
            entry = {
                "minkowski_residual": rep["identities"]["minkowski_residual"],
                "sigma2_identity_residual": rep["identities"]["sigma2_identity_residual"],
                "area": rep["functionals"]["area"],
                "Q": rep["functionals"]["Q"],
            }
        else:
            summary, _ = run_experiment(cfg, N)
            entry = {"s_star": summary["convergence"]["s_star"],
                     "converged": summary["converged"]}
        values[N] = entry
    orders = {}
    for key, first in values[N0].items():
        if isinstance(first, bool):
            continue
        series = [values[N][key] for N in levels]
        orders[key] = monitors.refinement_order(*series)
    # residuals with a zero continuum value must converge at the target order
    gated = [k for k in ("minkowski_residual", "sigma2_identity_residual", "s_star") if k in orders]
    min_order = cfg["sweep"]["min_order"]
    # identities that hold exactly at every level (slices) have no observable order
    exact = lambda k: all(abs(values[N][k]) <= 1e-12 for N in levels)
    failures = [k for k in gated if not (orders[k] >= min_order or (k != "s_star" and exact(k)))]
    payload = {"command": command, "levels": levels,
               "values": {str(N): v for N, v in values.items()},
               "orders": orders, "min_order": min_order,
               "failures": failures, "passed": not failures}
    write_json(_out_path(cfg, "sweep_json", out_dir), payload)
    return EXIT_OK if not failures else EXIT_AUDIT


COMMANDS = {
    "run": cmd_run,
    "check": cmd_check,
    "slice-profile": cmd_slice_profile,
    "sweep": cmd_sweep,
}


def main(argv=None):
    ap = argparse.ArgumentParser(prog="warpflow", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--out-dir", default=None, help="directory for relative output paths")
    ap.add_argument("--seed", type=int, default=None,
                    help="accepted for interface compatibility; all commands are deterministic")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WarpFlowError, ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
