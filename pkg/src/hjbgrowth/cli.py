"""Config-driven command line: solve, simulate, verify, bound.

Config files are INI-style with sections [model], [grid], [solver],
[simulate] and [output]; see configs/ for annotated examples.  Unknown keys
are rejected.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from hjbgrowth import bounds, hjb, model, trajectory
from hjbgrowth.errors import CertificationError, ConvergenceError, GridExtensionError, IntegrationError
from hjbgrowth.export import fmt, read_grid_csv, write_grid_csv, write_json
from hjbgrowth.ode import IntegratorSpec

EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISSING = 0, 1, 2, 3, 4

KEYS = {
    "model": {
        "name", "rho", "utility", "theta", "utility_scale", "utility_shift", "k_weight", "technology",
        "gamma", "production", "kappa", "alpha", "depreciation", "A", "B", "w_flag",
        "witness5", "witness3", "witness6",
    },
    "grid": {"k_min", "k_max", "n", "spacing", "pinned"},
    "solver": {"tol", "max_iter", "damping", "candidate"},
    "simulate": {"k_bar", "T", "atol", "rtol", "n_out"},
    "output": {"directory", "formats"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: model.ModelSpec
    grid: hjb.GridSpec
    solver: hjb.SolverSpec
    candidate: str = "none"
    k_bars: tuple = (1.0,)
    T: Optional[float] = None
    integrator: object = None
    n_out: int = 2001
    out_dir: str = "out"
    formats: tuple = ("csv", "json")
    source: str = ""
    extras: dict = field(default_factory=dict)


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _num(sec, key, default=None, kind=float, lo=None, hi=None, strict_lo=False):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] missing required key '{key}'")
        return default
    raw = sec[key]
    try:
        val = kind(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a valid {kind.__name__}") from None
    if lo is not None and (val <= lo if strict_lo else val < lo):
        raise ConfigError(f"[{sec.name}] {key} = {val} must be {'>' if strict_lo else '>='} {lo}")
    if hi is not None and val > hi:
        raise ConfigError(f"[{sec.name}] {key} = {val} must be <= {hi}")
    return val


def parse_config(path: str, tol_override: Optional[float] = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for name in cp.sections():
        if name not in KEYS:
            raise ConfigError(f"{path}: unknown section [{name}]")
        extra = set(cp[name]) - KEYS[name]
        if extra:
            raise ConfigError(f"{path}: unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    if "model" not in cp:
        raise ConfigError(f"{path}: missing [model] section")
    m = _build_model(cp["model"])
    g = cp["grid"] if "grid" in cp else cp["DEFAULT"]
    pinned = ()
    raw_pin = g.get("pinned", "").strip()
    if raw_pin:
        vals = []
        for tok in raw_pin.split(","):
            tok = tok.strip()
            if tok == "fiscal_kink":
                ks = model.fiscal_kink_capital(m)
                if ks is None:
                    raise ConfigError("[grid] pinned = fiscal_kink needs a fiscal technology with d > 0")
                vals.append(ks)
            elif tok:
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise ConfigError(f"[grid] pinned entry {tok!r} is not a number") from None
        pinned = tuple(vals)
    try:
        grid = hjb.GridSpec(
            _num(g, "k_min", lo=0, strict_lo=True),
            _num(g, "k_max", lo=0, strict_lo=True),
            _num(g, "n", 500, int, lo=16),
            g.get("spacing", "log"),
            pinned,
        )
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    s = cp["solver"] if "solver" in cp else cp["DEFAULT"]
    tol = tol_override if tol_override is not None else _num(s, "tol", 1e-10, lo=0, strict_lo=True)
    solver = hjb.SolverSpec(tol, _num(s, "max_iter", 500, int, lo=1), _num(s, "damping", 1.0, lo=0, hi=1, strict_lo=True))
    candidate = s.get("candidate", "none")
    if candidate not in ("none", "zero"):
        raise ConfigError(f"[solver] candidate must be 'none' or 'zero', got {candidate!r}")
    sim = cp["simulate"] if "simulate" in cp else cp["DEFAULT"]
    try:
        k_bars = _floats(sim.get("k_bar", "1.0"))
    except ValueError:
        raise ConfigError("[simulate] k_bar must be a comma-separated list of numbers") from None
    if not k_bars or any(k <= 0 for k in k_bars):
        raise ConfigError("[simulate] k_bar values must be positive")
    T = _num(sim, "T", lo=0, strict_lo=True) if "T" in sim else None
    integ = IntegratorSpec(_num(sim, "atol", 1e-10, lo=0, strict_lo=True), _num(sim, "rtol", 1e-8, lo=0, strict_lo=True))
    n_out = _num(sim, "n_out", 2001, int, lo=3)
    o = cp["output"] if "output" in cp else cp["DEFAULT"]
    formats = tuple(x.strip() for x in o.get("formats", "csv,json").split(",") if x.strip())
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"[output] unknown format {f!r}")
    return RunConfig(m, grid, solver, candidate, k_bars, T, integ, n_out, o.get("directory", "out"), formats, path)


def _build_model(sec) -> model.ModelSpec:
    rho = _num(sec, "rho")
    if not rho > 0:
        raise ConfigError(f"[model] rho = {rho}: the discount rate must be positive (assumption A1: rho > 0)")
    ukind = sec.get("utility", "log")
    if ukind not in ("log", "crra"):
        raise ConfigError(f"[model] utility must be 'log' or 'crra' in config files, got {ukind!r}")
    try:
        util = model.Utility(
            ukind,
            theta=_num(sec, "theta", 1.0, lo=0, strict_lo=True),
            scale=_num(sec, "utility_scale", 1.0, lo=0, strict_lo=True),
            shift=_num(sec, "utility_shift", 0.0),
            k_weight=_num(sec, "k_weight", 0.0, lo=0),
        )
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    tkind = sec.get("technology", "rck")
    name = sec.get("name", tkind)
    try:
        if tkind == "ak":
            m = model.ak(_num(sec, "gamma", lo=0, strict_lo=True), rho, util, name=name)
        elif tkind in ("rck", "fiscal"):
            pkind = sec.get("production", "cobb_douglas")
            if pkind != "cobb_douglas":
                raise ConfigError("[model] only cobb_douglas production is supported for rck/fiscal configs")
            kappa = _num(sec, "kappa", 1.0, lo=0, strict_lo=True)
            alpha = _num(sec, "alpha", lo=0, strict_lo=True, hi=1)
            d = _num(sec, "depreciation", 0.0, lo=0)
            if tkind == "rck":
                m = model.rck(kappa, alpha, d, rho, util, name=name)
            else:
                m = model.fiscal(kappa, alpha, d, _num(sec, "A"), _num(sec, "B"), rho, util, name=name)
        else:
            raise ConfigError(f"[model] technology must be ak, rck or fiscal, got {tkind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    updates = {"w_flag": sec.get("w_flag", "W1")}
    if updates["w_flag"] not in ("W1", "W2"):
        raise ConfigError("[model] w_flag must be W1 or W2")
    w5 = sec.get("witness5", "auto").strip()
    if w5 == "none":
        updates["assumption5"] = None
    elif w5 != "auto":
        vals = _floats(w5)
        if len(vals) != 8:
            raise ConfigError("[model] witness5 needs 8 numbers: k*, c*, gamma, delta, theta, a, b, C")
        updates["assumption5"] = model.Assumption5Witness(*vals)
    w3 = sec.get("witness3", "auto").strip()
    if w3 != "auto":
        vals = _floats(w3)
        if len(vals) != 2:
            raise ConfigError("[model] witness3 needs d1, d2")
        updates["assumption3"] = model.Assumption3Witness(*vals)
    w6 = sec.get("witness6", "auto").strip()
    if w6 != "auto":
        vals = _floats(w6)
        if len(vals) not in (1, 2):
            raise ConfigError("[model] witness6 needs k[, eps0]")
        updates["assumption6"] = model.Assumption6Witness(*vals)
    return replace(m, **updates)


# ---------------------------------------------------------------------------
# commands


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _out_dir(args, cfg):
    d = args.out or cfg.out_dir
    os.makedirs(d, exist_ok=True)
    return d


def certify_grid(V, m):
    """Monotonicity, concavity, viscosity residual, envelope and growth checks for a value grid."""
    out = {"increasing": V.is_increasing(), "concave": V.is_concave()}
    rep = hjb.viscosity_certify(V, m, strict=False)
    out["viscosity"] = rep.to_dict()
    if m.assumption5 is not None:
        env = bounds.envelope_check(V, m, rep.residual)
        out["envelope"] = env.to_dict()
    else:
        out["envelope"] = {"passed": None, "detail": "no envelope witness"}
    kb = float(V.nodes[V.n // 2])
    try:
        g = bounds.growth_condition_check(V, m, kb)
        out["growth"] = {"passed": g.member, "trace_passed": g.passed, "tail": g.tail, "tolerance": g.tolerance, "shortcut": g.shortcut,
                         "shortcut_gamma": g.shortcut_gamma, "k_bar": kb}
    except IntegrationError as exc:
        out["growth"] = {"passed": False, "detail": str(exc)}
    checks = [out["increasing"], out["concave"], rep.passed, out["growth"]["passed"]]
    if out["envelope"]["passed"] is not None:
        checks.append(out["envelope"]["passed"])
    out["all_passed"] = bool(all(checks))
    return out, rep


def cmd_solve(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    m = cfg.model
    try:
        V = hjb.solve(m, cfg.grid, cfg.solver, certify=False)
    except ConvergenceError as exc:
        path = os.path.join(out, "residual_history.txt")
        with open(path, "w") as fh:
            fh.writelines(f"{fmt(x)}\n" for x in exc.history)
        print(f"solver failure: {exc} (history in {path})", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    cert, rep = certify_grid(V, m)
    meta = {k: v for k, v in V.metadata.items() if k not in ("runtime_s", "residual_history")}
    cert["metadata"] = meta
    cert["model"] = m.name
    if cfg.candidate == "zero":
        cand = hjb.candidate_check(m, lambda k: 0.0, lambda k: 0.0, V.nodes)
        cert["candidate"] = {
            "candidate": "V = 0",
            "classical_pass": cand.classical_pass,
            "max_classical_residual": cand.max_classical_residual,
            "increasing": cand.increasing,
            "in_class": cand.in_class,
            "verdict": "member of the candidate class" if cand.in_class else f"not in the candidate class: {cand.reason}",
            "solver_differs_from_candidate": bool(np.max(np.abs(V.values)) > 1e-6),
        }
    if "csv" in cfg.formats:
        write_grid_csv(V, os.path.join(out, "value_grid.csv"), rep.residual)
    if "json" in cfg.formats:
        write_json(cert, os.path.join(out, "certification.json"))
    _say(args, f"solve: {V.n} nodes, {V.metadata['iterations']} iterations, "
               f"viscosity residual {rep.max_relative:.3g}, certified={cert['all_passed']}")
    if "candidate" in cert:
        _say(args, f"candidate V=0: classical residual pass={cert['candidate']['classical_pass']}; "
                   f"{cert['candidate']['verdict']}")
    return EXIT_OK if cert["all_passed"] else EXIT_CERT


def _load_grid(path, m):
    k, v = read_grid_csv(path)
    return hjb.ValueFunctionGrid.from_values(k, v, m)


def cmd_simulate(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    m = cfg.model
    grid_path = args.grid or os.path.join(out, "value_grid.csv")
    if os.path.exists(grid_path):
        try:
            V = _load_grid(grid_path, m)
        except ValueError as exc:
            print(f"malformed grid file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    elif args.solve:
        try:
            V = hjb.solve(m, cfg.grid, cfg.solver)
        except (ConvergenceError, CertificationError, ValueError) as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    else:
        print(f"missing value grid {grid_path}: run 'solve' first or pass --solve", file=sys.stderr)
        return EXIT_MISSING
    report = {"model": m.name, "trajectories": []}
    status = EXIT_OK
    T = cfg.T if cfg.T is not None else 20.0 / m.rho
    for kb in cfg.k_bars:
        try:
            tr = trajectory.synthesize(V, m, kb, T, cfg.integrator, cfg.n_out)
        except GridExtensionError as exc:
            lo, hi = exc.suggested_bounds
            print(f"k_bar={kb}: {exc}; suggested grid bounds k_min={lo:.6g}, k_max={hi:.6g}", file=sys.stderr)
            return EXIT_MISSING
        except ValueError as exc:
            print(f"k_bar={kb}: {exc}", file=sys.stderr)
            return EXIT_CERT
        times = [t for t in (1.0, 10.0, 100.0, T) if t <= T]
        defects = trajectory.bellman_defects(tr, V, m, times)
        obj = trajectory.evaluate_objective(tr, m, V)
        entry = {
            "k_bar": kb,
            "T": T,
            "k_end": float(tr.k[-1]),
            "k_at_10": tr.k_at(10.0) if T >= 10 else None,
            "positivity_floor": tr.positivity_floor,
            "tail_bound": tr.tail_bound,
            "grade": tr.grade,
            "bellman_defects": dict(zip([str(t) for t in times], defects.tolist())),
            "bellman_tolerance": 1e-2 * (1.0 + abs(float(V.evaluate(kb)))),
            "objective": {"integral": obj.integral, "tail": obj.tail, "total": obj.total,
                          "tail_bracket": list(obj.tail_bracket)},
            "V_k_bar": float(V.evaluate(kb)),
            "events": [list(e) for e in tr.events],
            "warnings": tr.warnings,
        }
        kss = m.steady_state()
        if kss is not None:
            entry["steady_state"] = {"k_ss": kss, "relative_gap": abs(tr.k[-1] - kss) / kss}
        report["trajectories"].append(entry)
        if "csv" in cfg.formats:
            tr.to_csv(os.path.join(out, f"trajectory_k{fmt(kb)}.csv"))
        _say(args, f"simulate k_bar={kb}: k(T)={tr.k[-1]:.6g}, max Bellman defect {defects.max():.3g}")
        if defects.max() > entry["bellman_tolerance"]:
            status = EXIT_CERT
    if "json" in cfg.formats:
        write_json(report, os.path.join(out, "consistency.json"))
    return status


def cmd_verify(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    m = cfg.model
    path = args.grid or os.path.join(out, "value_grid.csv")
    if not os.path.exists(path):
        print(f"missing grid file {path}", file=sys.stderr)
        return EXIT_MISSING
    try:
        V = _load_grid(path, m)
    except ValueError as exc:
        print(f"malformed grid file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cert, _ = certify_grid(V, m)
    cert["source"] = os.path.basename(path)
    if "json" in cfg.formats:
        write_json(cert, os.path.join(out, "verify_report.json"))
    verdicts = {
        "increasing": cert["increasing"],
        "concave": cert["concave"],
        "viscosity": cert["viscosity"]["passed"],
        "envelope": cert["envelope"]["passed"],
        "growth": cert["growth"]["passed"],
    }
    for k, v in verdicts.items():
        _say(args, f"{k:10s} {'pass' if v else ('n/a' if v is None else 'FAIL')}")
    return EXIT_OK if cert["all_passed"] else EXIT_CERT


def cmd_bound(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    m = cfg.model
    if m.assumption5 is None:
        print("model has no envelope witness (witness5)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        params = bounds.EnvelopeParams.from_model(m)
    except ValueError as exc:
        print(f"invalid envelope witness: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ks = cfg.grid.nodes()
    rows = np.column_stack([ks, bounds.v3(params, ks), bounds.v4(params, ks), bounds.envelope_value(params, ks)])
    if "csv" in cfg.formats:
        with open(os.path.join(out, "envelope.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "V3", "V4", "envelope"])
            for r in rows:
                w.writerow([fmt(x) for x in r])
    for kb in cfg.k_bars:
        _say(args, f"k_bar={kb}: V3={bounds.v3(params, kb):.10g} V4={bounds.v4(params, kb):.10g} "
                   f"envelope={bounds.envelope_value(params, kb):.10g}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "verify": cmd_verify, "bound": cmd_bound}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hjbgrowth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI config path")
        sp.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
        sp.add_argument("--tol", type=float, default=None, help="solver tolerance override")
        sp.add_argument("--quiet", action="store_true")
        if name in ("simulate", "verify"):
            sp.add_argument("--grid", default=None, help="value grid CSV (default: <out>/value_grid.csv)")
        if name == "simulate":
            sp.add_argument("--solve", action="store_true", help="solve first when no grid file exists")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    np.seterr(all="ignore")
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
