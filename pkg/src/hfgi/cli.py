"""Command-line harness: ``hfgi <experiment> [flags]``.

Every experiment writes a CSV with a fixed header plus a JSON summary
(config echo, seed, wall time, catalog checksum, pass/fail of the attached
checks) into ``--out``.  Flags may also come from a ``key = value`` config
file (``--config``), one section per experiment or ``[DEFAULT]``; flags on the
command line win.  Grid points run in a process pool whose size is read from
the ``HFGI_WORKERS`` environment variable (default 1).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import engine, hmc
from .error_terms import hf_multipliers
from .schemes import (catalog, catalog_checksum, catalog_csv, catalog_json, count_forces, get_scheme,
                      validate_order_conditions)

EXPERIMENTS = ("list-schemes", "validate", "converge", "efficiency", "drift", "reversibility",
               "hmc-scan", "hmc-run")
MODELS = ("solar", "quartic", "harmonic", "pendulum", "schwinger")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _floats(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in str(s).split(",") if v.strip()]


def _scheme_names(spec: str) -> list:
    if spec in (None, "", "all"):
        return [s.name for s in catalog()]
    names = [n.strip() for n in spec.split(",") if n.strip()]
    for n in names:
        get_scheme(n)
    return names


def build_model(name: str, opts: dict):
    """``(model, state)`` for a model selector and its options."""
    if name == "solar":
        from .models import solar
        if opts.get("initial"):
            return solar.load_csv(opts["initial"])
        return solar.default_initial_data()
    if name in ("quartic", "harmonic", "pendulum"):
        from .models import simple
        cls = {"quartic": simple.Quartic, "harmonic": simple.Harmonic, "pendulum": simple.Pendulum}[name]
        return cls(), simple.point([1.0], [0.5])
    if name == "schwinger":
        from .models.schwinger import SchwingerModel
        m = SchwingerModel(int(opts.get("L", 8)), int(opts.get("T", 0)) or int(opts.get("L", 8)),
                           beta=float(opts.get("beta", 1.0)), m0=float(opts.get("m0", 0.352443)),
                           solver=opts.get("solver", "lu"))
        return m, m.state(m.cold_start())
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODELS)}")


def _model_opts(args) -> dict:
    return {k: getattr(args, k) for k in ("initial", "L", "T", "beta", "m0", "solver") if getattr(args, k, None) is not None}


def _pool_map(fn, items):
    workers = int(os.environ.get("HFGI_WORKERS", "1") or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    path.write_text(buf.getvalue())


def _default_h(p: int) -> list:
    return [100.0, 50.0, 25.0] if p >= 6 else [40.0, 20.0, 10.0]


# grid-point workers (top level so the pool can pickle them)

def _converge_point(item):
    name, model_name, opts, t_end, h_list, mode = item
    model, s0 = build_model(model_name, opts)
    scheme = get_scheme(name)
    h_list = h_list or _default_h(scheme.order_p)
    ref = engine.reference_solution(model, s0, t_end)
    fit = engine.measure_order(scheme, model, s0, t_end, h_list, mode, reference=ref)
    return name, scheme.order_p, fit.h.tolist(), fit.errors.tolist(), fit.slope


def _efficiency_point(item):
    name, model_name, opts, t_end, n_list, mode, ref = item
    model, s0 = build_model(model_name, opts)
    scheme = get_scheme(name)
    rows = []
    for n in n_list:
        out, c = engine.integrate(scheme, model, s0, t_end / n, n, mode)
        rows.append((name, n, c.work, engine.global_error(out, ref)))
    return rows


def _drift_point(item):
    name, model_name, opts, t_end, h, mode, every = item
    model, s0 = build_model(model_name, opts)
    fit = engine.energy_drift(get_scheme(name), model, s0, h, t_end, mode, every)
    return name, fit


def _scan_point(item):
    name, N, opts, cfg_kw, start_q = item
    model, s0 = build_model("schwinger", opts)
    cfg = hmc.HmcConfig(scheme=name, n_steps=N, **cfg_kw)
    stats = hmc.run_chain(model, cfg, s0.replace(q=start_q))
    return stats.summary()


def _thermalize(opts, seed, n_traj):
    model, s0 = build_model("schwinger", opts)
    cfg = hmc.HmcConfig(scheme="BAB", n_steps=10, n_traj=n_traj, seed=seed)
    return hmc.run_chain(model, cfg, s0).final_state.q


# experiments; each returns (files, assertions, extra summary)

def cmd_list_schemes(args, out: Path):
    names = _scheme_names(args.schemes)
    schemes = [get_scheme(n) for n in names]
    path = out / "schemes.csv"
    path.write_text(catalog_csv(schemes))
    (out / "schemes.json").write_text(catalog_json(schemes, indent=1))
    if not args.quiet:
        for s in schemes:
            print(f"{s.table_id:>3} {s.name:<22} {s.letters:<22} p={s.order_p} n_f={s.n_f} Eff={s.eff}")
    return [path.name, "schemes.json"], {"rows_loaded": len(schemes) == len(names)}, {"rows": len(schemes)}


def cmd_validate(args, out: Path):
    rows, ok = [], True
    for name in _scheme_names(args.schemes):
        s = get_scheme(name)
        sa, sb = s.coefficient_sums()
        nf = count_forces(s)
        rep = validate_order_conditions(s)
        mult = hf_multipliers(s)
        conditions_ok = rep.passed or not rep.checkable
        passed = abs(float(sa) - 1) <= 1e-15 and abs(float(sb) - 1) <= 1e-15 and nf == s.n_f and conditions_ok
        ok &= passed
        resid = max(abs(r) for r in rep.residuals.values()) if rep.checkable else ""
        rows.append((name, float(sa), float(sb), s.n_f, nf, resid,
                     float(mult.gamma5), int(passed)))
    path = out / "validate.csv"
    _write_csv(path, ["scheme", "sum_a", "sum_b", "n_f", "n_f_counted", "max_residual", "gamma5", "passed"], rows)
    return [path.name], {"all_valid": bool(ok)}, {}


def cmd_converge(args, out: Path):
    names = _scheme_names(args.schemes)
    h_list = _floats(args.h) if args.h else None
    items = [(n, args.model, _model_opts(args), args.t_end, h_list, args.mode) for n in names]
    rows, ok = [], True
    for name, p, hs, errs, slope in _pool_map(_converge_point, items):
        tol = 0.3 if p >= 6 else 0.15
        ok &= abs(slope - p) <= tol
        rows += [(name, h, e, slope) for h, e in zip(hs, errs)]
        if not args.quiet:
            print(f"{name:<22} p={p} fitted {slope:.3f}")
    path = out / "converge.csv"
    _write_csv(path, ["scheme", "h", "global_error", "fitted_order"], rows)
    return [path.name], {"orders_match_catalog": bool(ok)}, {}


def cmd_efficiency(args, out: Path):
    names = _scheme_names(args.schemes or "BABABABABAB,BADAB,ABADABADABA")
    n_list = _ints(args.nsteps) if args.nsteps else list(range(1000, 10001, 1000))
    model, s0 = build_model(args.model, _model_opts(args))
    ref = engine.reference_solution(model, s0, args.t_end)
    items = [(n, args.model, _model_opts(args), args.t_end, n_list, args.mode, ref) for n in names]
    rows = [r for chunk in _pool_map(_efficiency_point, items) for r in chunk]
    monotone = True
    for name in names:
        errs = [r[3] for r in rows if r[0] == name]
        monotone &= bool(np.all(np.diff(errs) < 0))
    path = out / "efficiency.csv"
    _write_csv(path, ["scheme", "total_force_evals", "global_error"], [(r[0], r[2], r[3]) for r in rows])
    checks = {"monotone_curves": monotone}
    curves = {n: ([r[2] for r in rows if r[0] == n], [r[3] for r in rows if r[0] == n]) for n in names}
    extra = {}
    base = "BABABABABAB"
    if base in curves:
        for other, factor in (("ABADABADABA", 10.0), ("BADAB", 1.0)):
            if other in curves:
                ratio = engine.error_ratio_at_equal_work(curves[base], curves[other], 1e-4)
                extra[f"{base}/{other}"] = ratio
                checks[f"{other}_beats_{base}_by_{factor:g}x"] = bool(ratio >= factor)
    return [path.name], checks, {"min_error_ratio": extra}


def cmd_drift(args, out: Path):
    names = _scheme_names(args.schemes or "ABADABADABA")
    h = _floats(args.h)[0] if args.h else 200.0
    items = [(n, args.model, _model_opts(args), args.t_end, h, args.mode, args.every) for n in names]
    files, ok, extra = [], True, {}
    for name, fit in _pool_map(_drift_point, items):
        path = out / (f"drift_{name}.csv" if len(names) > 1 else "drift.csv")
        _write_csv(path, ["t", "rel_energy_error"], zip(fit.t, fit.rel_error))
        files.append(path.name)
        bounded = fit.consistent_with_zero or fit.drift_over_span < fit.amplitude
        ok &= bounded
        extra[name] = {"slope": fit.slope, "slope_ci": [fit.slope_low, fit.slope_high],
                       "drift_over_span": fit.drift_over_span, "amplitude": fit.amplitude}
    return files, {"drift_bounded": bool(ok)}, extra


def cmd_reversibility(args, out: Path):
    model_name = args.model if args.model != "solar" else "quartic"
    model, s0 = build_model(model_name, _model_opts(args))
    h = _floats(args.h)[0] if args.h else 0.1
    rows, ok = [], True
    for name in _scheme_names(args.schemes):
        s = get_scheme(name)
        scale = max(1.0, engine._inf_norm(s0.q), engine._inf_norm(s0.p))
        defect = engine.reversibility_defect(s, model, s0, h, args.mode, n_steps=10) / scale
        det = engine.jacobian_det(s, model, s0, h, args.mode)
        ok &= defect < 1e-10 and abs(det - 1) < 1e-7
        rows.append((name, h, defect, det))
    path = out / "reversibility.csv"
    _write_csv(path, ["scheme", "h", "scaled_defect", "jacobian_det"], rows)
    return [path.name], {"reversible_and_volume_preserving": bool(ok)}, {"model": model_name}


def cmd_hmc_scan(args, out: Path):
    names = _scheme_names(args.schemes or "BAB,BADAB")
    n_list = _ints(args.nsteps) if args.nsteps else [8, 10, 12, 16]
    opts = _model_opts(args)
    start = _thermalize(opts, args.seed, args.ntherm_start)
    cfg_kw = {"tau": args.tau, "mode": args.mode, "n_traj": args.ntraj, "seed": args.seed}
    items = [(n, N, opts, cfg_kw, start) for n in names for N in n_list]
    summaries = _pool_map(_scan_point, items)
    rows, fits = [], {}
    for name in names:
        ss = [s for s in summaries if s["scheme"] == name]
        try:
            fit = hmc.nf_per_unit_at_target([(s["N"], s["sigma2"]) for s in ss], count_forces(get_scheme(name)),
                                            args.tau, 0.9)
            nf90, fits[name] = fit.nf_per_unit, {"a": fit.a, "b": fit.b, "N_star": fit.n_star}
        except ValueError as exc:
            nf90, fits[name] = float("nan"), {"error": str(exc)}
        rows += [(name, s["N"], s["sigma2"], s["sigma2_err"], s["acc"], s["acc_err"], nf90) for s in ss]
    path = out / "hmc_scan.csv"
    _write_csv(path, ["scheme", "N", "sigma2", "sigma2_err", "acc", "acc_err", "nf_per_unit_at_90"], rows)
    checks = {}
    for s in summaries:
        if 0.01 <= s["sigma2"] <= 1:
            err = np.hypot(s["acc_err"], 1e-12)
            checks[f"erfc_{s['scheme']}_{s['N']}"] = bool(abs(s["acc"] - s["acc_erfc"]) <= 3 * err)
    return [path.name], checks, {"fits": fits, "chains": summaries}


def cmd_hmc_run(args, out: Path):
    name = _scheme_names(args.schemes or "BAB")[0]
    N = _ints(args.nsteps)[0] if args.nsteps else 10
    model, s0 = build_model("schwinger", _model_opts(args))
    if args.ntherm_start:
        s0 = s0.replace(q=_thermalize(_model_opts(args), args.seed, args.ntherm_start))
    cfg = hmc.HmcConfig(tau=args.tau, n_steps=N, scheme=name, mode=args.mode, n_traj=args.ntraj, seed=args.seed)
    stats = hmc.run_chain(model, cfg, s0)
    path = out / "chain.csv"
    hmc.write_chain_log(path, stats)
    summ = stats.summary()
    ok = abs(summ["exp_minus_dH"] - 1) <= 3 * summ["exp_minus_dH_err"]
    if not args.quiet:
        print(json.dumps(summ, indent=1))
    return [path.name], {"exp_minus_dH_is_one": bool(ok)}, {"chain": summ}


COMMANDS = {
    "list-schemes": cmd_list_schemes, "validate": cmd_validate, "converge": cmd_converge,
    "efficiency": cmd_efficiency, "drift": cmd_drift, "reversibility": cmd_reversibility,
    "hmc-scan": cmd_hmc_scan, "hmc-run": cmd_hmc_run,
}

_T_END = {"converge": 2000.0, "efficiency": 200000.0, "drift": 200000.0}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hfgi", description="Hessian-free force-gradient integrator experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--model", default="schwinger" if name.startswith("hmc") else "solar", choices=MODELS)
        p.add_argument("--schemes", default=None, help="comma-separated scheme names or 'all'")
        p.add_argument("--mode", default="hessian_free", choices=[m.value for m in engine.StepMode])
        p.add_argument("--h", default=None, help="comma-separated step sizes")
        p.add_argument("--nsteps", default=None, help="comma-separated step counts")
        p.add_argument("--t-end", dest="t_end", type=float, default=_T_END.get(name, 2000.0))
        p.add_argument("--tau", type=float, default=1.0)
        p.add_argument("--ntraj", type=int, default=200)
        p.add_argument("--ntherm-start", dest="ntherm_start", type=int, default=100,
                       help="thermalization trajectories before HMC measurements")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--every", type=int, default=1, help="energy sampling stride for drift")
        p.add_argument("--initial", default=None, help="initial-data CSV for the solar model")
        p.add_argument("--L", type=int, default=8)
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--m0", type=float, default=0.352443)
        p.add_argument("--solver", default="lu", choices=["lu", "cg"])
        p.add_argument("--out", default=".")
        p.add_argument("--quiet", action="store_true")
    return ap


def _apply_config(parser, argv):
    """Reparse with defaults taken from the config file named on the command line."""
    pre, _ = parser.parse_known_args(argv)
    if not getattr(pre, "config", None):
        return pre
    cp = configparser.ConfigParser()
    if not cp.read(pre.config):
        raise SystemExit(f"cannot read config file {pre.config}")
    section = cp[pre.command] if cp.has_section(pre.command) else cp.defaults()
    sub = parser._subparsers._group_actions[0].choices[pre.command]
    known = {a.dest for a in sub._actions}
    vals = {}
    for k, v in section.items():
        dest = k.replace("-", "_")
        if dest not in known:
            raise SystemExit(f"unknown config key {k!r}")
        vals[dest] = v
    if "quiet" in vals:
        vals["quiet"] = cp.BOOLEAN_STATES.get(str(vals["quiet"]).lower(), False)
    sub.set_defaults(**vals)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = make_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _apply_config(parser, argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        files, checks, extra = COMMANDS[args.command](args, out)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary = {
        "command": args.command,
        "config": {k: v for k, v in vars(args).items() if k != "command"},
        "seed": args.seed,
        "wall_time_s": time.perf_counter() - t0,
        "catalog_checksum": catalog_checksum(),
        "files": files,
        "assertions": checks,
        "passed": all(checks.values()),
        "details": extra,
    }
    name = args.command.replace("-", "_")
    (out / f"{name}.json").write_text(json.dumps(summary, indent=1, default=_json_default))
    if not args.quiet:
        print(f"{args.command}: {'PASS' if summary['passed'] else 'FAIL'} -> {out}")
    return 0 if summary["passed"] else 1


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
