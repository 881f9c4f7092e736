"""Batch command-line front end.

Commands: classify, spectrum, mean, convolve, solve, report.  All inputs
are JSON configs, all tabular outputs CSV, all reports deterministic JSON.
Exit codes: 0 success, 1 config error, 2 inconclusive numerics, 3 a
theorem-level precondition failed.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import jsonio
from .convolution import verify_pap0_stability
from .errors import (
    ConditionViolated,
    ConfigError,
    DichotomyViolated,
    DivergentRatio,
    InconclusiveLimit,
    MassRatioUndefined,
    MaxIterExceeded,
    MissingFrequencies,
    NoTranslationNumberFound,
    NotAContraction,
    NotConverged,
    NotMassRatioLimited,
    OscillationConditionFailed,
    PapkitError,
    PreconditionFailed,
    QuadratureFailure,
    SolveFailed,
    StepSizeUnderflow,
    TailTruncationFailure,
    ZeroFrequency,
)
from .evolution import solve_mild, verify_solution_pap
from .spectral import doubly_weighted_bohr, doubly_weighted_mean, scan_spectrum
from .weights import classify_weight

INCONCLUSIVE = (
    InconclusiveLimit,
    NotConverged,
    DivergentRatio,
    MassRatioUndefined,
    QuadratureFailure,
    TailTruncationFailure,
    MaxIterExceeded,
    SolveFailed,
    StepSizeUnderflow,
    NoTranslationNumberFound,
    MissingFrequencies,
)
PRECONDITION = (
    PreconditionFailed,
    NotAContraction,
    OscillationConditionFailed,
    ConditionViolated,
    NotMassRatioLimited,
    DichotomyViolated,
    ZeroFrequency,
)


def _check_keys(spec, allowed, path="config"):
    unknown = set(spec) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _schedule_from(cfg, args, default=None):
    schedule = cfgmod.parse_schedule(cfg.get("schedule"), default=default)
    if args.schedule:
        try:
            t0_s, dbl_s = args.schedule.split(",")
            schedule = replace(schedule, t0=float(t0_s), doublings=int(dbl_s))
        except ValueError as exc:
            raise ConfigError(f"--schedule expects T0,DOUBLINGS: {exc}") from exc
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigError("--tol must be positive")
        schedule = replace(schedule, rtol=args.tol)
    return schedule


def _mean_to_json(est):
    return {
        "value": [[float(v.real), float(v.imag)] for v in np.atleast_1d(est.value)],
        "converged": est.converged,
        "tol_used": est.tol_used,
        "trace_length": len(est.trace),
    }


def _trace_rows(est):
    rows = []
    for T, v in est.trace:
        row = [T]
        for c in np.atleast_1d(v):
            row += [c.real, c.imag]
        rows.append(row)
    return rows


def cmd_classify(cfg, out_dir, args):
    _check_keys(cfg, {"weight", "tau_grid", "schedule", "dense_span", "dense_step"})
    w = cfgmod.parse_weight(cfg["weight"])
    schedule = _schedule_from(cfg, args)
    report = classify_weight(
        w,
        tau_grid=cfg.get("tau_grid"),
        schedule=schedule,
        dense_span=cfg.get("dense_span", 50.0),
        dense_step=cfg.get("dense_step", 0.01),
    )
    path = out_dir / "classify.json"
    jsonio.write_json(path, {"weight": w.to_json(), "report": report.to_json()})
    print(f"wrote {path}")
    return 0


def cmd_spectrum(cfg, out_dir, args):
    _check_keys(
        cfg, {"signal", "mu", "nu", "grid", "schedule", "threshold_rel", "traces"}
    )
    f = cfgmod.parse_signal(cfg["signal"])
    mu = cfgmod.parse_weight(cfg["mu"], "mu")
    nu = cfgmod.parse_weight(cfg["nu"], "nu")
    grid_spec = cfg.get("grid")
    if not isinstance(grid_spec, dict):
        raise ConfigError("grid: object required")
    if "points" in grid_spec:
        _check_keys(grid_spec, {"points"}, "grid")
        grid = np.asarray(grid_spec["points"], dtype=float)
    else:
        _check_keys(grid_spec, {"start", "stop", "count"}, "grid")
        grid = np.linspace(
            float(grid_spec["start"]), float(grid_spec["stop"]), int(grid_spec["count"])
        )
    schedule = _schedule_from(cfg, args)
    report = scan_spectrum(
        f, mu, nu, grid, schedule=schedule, threshold_rel=cfg.get("threshold_rel", 1e-3)
    )
    doc = report.to_json()
    warnings = []
    step = float(np.max(np.diff(grid))) if grid.size > 1 else 0.0
    for freq in f.ap.freqs:
        if grid.size == 0 or np.min(np.abs(grid - freq)) > step:
            warnings.append(
                f"missing_frequencies: declared frequency {freq:g} "
                "is not covered by the grid"
            )
    doc["warnings"] = warnings
    path = out_dir / "spectrum.json"
    jsonio.write_json(path, doc)
    print(f"wrote {path}")
    if cfg.get("traces", True) and report.classical:
        rows = []
        for lam, _ in report.classical[:16]:
            est = doubly_weighted_bohr(
                f, mu, nu, lam, schedule=schedule, check_preconditions=False
            )
            for T, v in est.trace:
                vv = np.atleast_1d(v)
                rows.append([lam, T, vv[0].real, vv[0].imag])
        tpath = out_dir / "spectrum_traces.csv"
        jsonio.write_csv(tpath, ["lambda", "T", "re", "im"], rows)
        print(f"wrote {tpath}")
    return 0


def cmd_mean(cfg, out_dir, args):
    _check_keys(cfg, {"signal", "mu", "nu", "lam", "schedule", "rel_floor"})
    f = cfgmod.parse_signal(cfg["signal"])
    mu = cfgmod.parse_weight(cfg["mu"], "mu")
    nu = cfgmod.parse_weight(cfg["nu"], "nu")
    schedule = _schedule_from(cfg, args)
    lam = float(cfg.get("lam", 0.0))
    rel_floor = float(cfg.get("rel_floor", 1e-4))
    if lam == 0.0:
        est = doubly_weighted_mean(f, mu, nu, schedule=schedule, rel_floor=rel_floor)
    else:
        est = doubly_weighted_bohr(
            f, mu, nu, lam, schedule=schedule, rel_floor=rel_floor
        )
    path = out_dir / "mean.json"
    jsonio.write_json(path, {"lam": lam, "estimate": _mean_to_json(est)})
    tpath = out_dir / "mean_trace.csv"
    header = ["T"]
    for c in range(f.dim):
        header += [f"re{c + 1}", f"im{c + 1}"]
    jsonio.write_csv(tpath, header, _trace_rows(est))
    print(f"wrote {path}")
    print(f"wrote {tpath}")
    return 0 if est.converged else 2


def cmd_convolve(cfg, out_dir, args):
    from .convolution import convolve

    _check_keys(cfg, {"signal", "kernel", "grid", "max_window", "stability"})
    f = cfgmod.parse_signal(cfg["signal"])
    kern = cfgmod.parse_kernel(cfg["kernel"])
    grid_spec = cfg.get("grid", {})
    _check_keys(grid_spec, {"start", "stop", "step"}, "grid")
    t0 = float(grid_spec.get("start", -50.0))
    t1 = float(grid_spec.get("stop", 50.0))
    dt = float(grid_spec.get("step", 0.01))
    max_window = float(cfg.get("max_window", 500.0))
    trace = convolve(f, kern, t0, t1, dt, max_window=max_window)
    tpath = out_dir / "convolve.csv"
    trace.write_csv(tpath)
    print(f"wrote {tpath}")
    doc = {
        "l1_norm": kern.l1_norm(),
        "signal_sup_bound": f.sup_bound(),
        "conv_sup": trace.sup_norm(),
        "young_bound_ok": bool(
            trace.sup_norm() <= f.sup_bound() * kern.l1_norm() * (1.0 + 1e-9) + 1e-12
        ),
    }
    stab = cfg.get("stability")
    if stab is not None:
        _check_keys(stab, {"mu", "nu", "radii", "tau_grid", "threshold"}, "stability")
        mu = cfgmod.parse_weight(stab["mu"], "stability.mu")
        nu = cfgmod.parse_weight(stab["nu"], "stability.nu")
        report = verify_pap0_stability(
            f.ergodic,
            kern,
            mu,
            nu,
            radii=stab.get("radii"),
            tau_grid=tuple(stab.get("tau_grid", (0.5, 1.0, 5.0, -1.0))),
            threshold=float(stab.get("threshold", 1e-3)),
            max_window=max_window,
        )
        doc["stability"] = report.to_json()
    path = out_dir / "convolve.json"
    jsonio.write_json(path, doc)
    print(f"wrote {path}")
    return 0


def cmd_solve(cfg, out_dir, args):
    _check_keys(
        cfg,
        {"problem", "t_span", "tol", "dt", "max_iter", "window_factor", "seed", "pap_check"},
    )
    prob = cfgmod.parse_problem(cfg["problem"])
    tol = float(cfg.get("tol", 1e-6))
    if args.tol is not None:
        tol = args.tol
    try:
        sol = solve_mild(
            prob,
            t_span=float(cfg.get("t_span", 10.0)),
            tol=tol,
            dt=float(cfg.get("dt", 0.01)),
            max_iter=int(cfg.get("max_iter", 60)),
            window_factor=float(cfg.get("window_factor", 40.0)),
            seed=int(cfg.get("seed", 7)),
        )
    except NotAContraction as exc:
        path = out_dir / "solve.json"
        jsonio.write_json(
            path,
            {
                "error": "not_a_contraction",
                "lipschitz": exc.lipschitz,
                "solver_constant": exc.solver_constant,
                "product": exc.lipschitz * exc.solver_constant,
            },
        )
        print(f"wrote {path}")
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    doc = sol.to_json()
    pap = cfg.get("pap_check")
    if pap is not None:
        _check_keys(pap, {"mu", "nu", "schedule", "freq_candidates"}, "pap_check")
        mu = cfgmod.parse_weight(pap["mu"], "pap_check.mu")
        nu = cfgmod.parse_weight(pap["nu"], "pap_check.nu")
        rep = verify_solution_pap(
            prob,
            sol,
            mu,
            nu,
            schedule=cfgmod.parse_schedule(
                pap.get("schedule"), "pap_check.schedule", default=None
            )
            if pap.get("schedule")
            else None,
            freq_candidates=pap.get("freq_candidates"),
        )
        doc["pap_check"] = {
            "ergodic_ok": rep.ergodic_ok,
            "ap_frequencies": [float(x) for x in rep.ap_part.freqs]
            if rep.ap_part is not None
            else [],
            "mean_trace": [[t, v] for t, v in rep.mean_trace],
        }
    spath = out_dir / "solution.csv"
    sol.trace().write_csv(spath)
    path = out_dir / "solve.json"
    jsonio.write_json(path, doc)
    print(f"wrote {spath}")
    print(f"wrote {path}")
    return 0


def cmd_report(out_dir, args):
    entries = []
    for p in sorted(out_dir.glob("*.json")):
        if p.name == "report.json":
            continue
        try:
            import json

            with open(p, encoding="utf-8") as fh:
                doc = json.load(fh)
            entries.append(
                {"file": p.name, "keys": sorted(doc), "ok": "error" not in doc}
            )
        except Exception as exc:  # unreadable artifacts are reported, not fatal
            entries.append({"file": p.name, "error": str(exc), "ok": False})
    path = out_dir / "report.json"
    jsonio.write_json(
        path,
        {
            "artifacts": entries,
            "n_artifacts": len(entries),
            "n_ok": sum(1 for e in entries if e.get("ok")),
        },
    )
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="papkit",
        description="weighted ergodic means, Bohr spectra, convolution "
        "stability, and mild solutions of hyperbolic systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("classify", "spectrum", "mean", "convolve", "solve", "report"):
        p = sub.add_parser(name)
        if name != "report":
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--schedule", default=None, help="T0,DOUBLINGS override")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "report":
            return cmd_report(out_dir, args)
        cfg = cfgmod.load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("top-level config must be an object")
        handler = {
            "classify": cmd_classify,
            "spectrum": cmd_spectrum,
            "mean": cmd_mean,
            "convolve": cmd_convolve,
            "solve": cmd_solve,
        }[args.command]
        return handler(cfg, out_dir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except PRECONDITION as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3
    except INCONCLUSIVE as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2
    except PapkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
