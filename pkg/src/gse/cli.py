"""Command line driver: ``gse compare | slopes | union | identities``.

Exit codes: 0 all checks pass, 1 an inequality fails beyond tolerance,
2 usage or configuration error, 3 solver non-convergence (``--strict``).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .bounds import build_report, reports_to_csv, reports_to_json
from .config import ConfigError, load_config
from .continuum_op import NotConvergedError, mu_B, slope_fit_muB
from .cube_fourier import identity_suite
from .discrete_op import union_spectrum_inf

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3
SLOPES_VERSION = "# gse-slopes v1"
SLOPES_COLUMNS = ["potential", "p", "d", "slope", "bracket_lo", "bracket_hi", "margin", "pass"]
UNION_VERSION = "# gse-union v1"
UNION_COLUMNS = ["potential", "d", "theta", "eta_grid", "union_inf", "argmin_eta", "mu_B", "union_converged", "mu_B_converged", "holds"]


def _solver_kwargs(cfg):
    kw = {"eig_tol": cfg.eig_tol}
    if cfg.max_radius is not None:
        kw["max_radius"] = cfg.max_radius
    return kw


def _compare_point(task):
    cfg, selector, theta = task
    return build_report(
        selector.build(),
        theta,
        qs=cfg.qs if cfg.run_thm31 else (),
        tol=cfg.tol,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        thm41_tol=cfg.thm41_tol,
        eta_grid=cfg.eta_grid or None,
        union_period=cfg.union_period,
        run_thm41=cfg.run_thm41,
        irrational=cfg.irrational,
        solver_kwargs=_solver_kwargs(cfg),
    )


def _map(func, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _table(version, columns, rows):
    buf = io.StringIO()
    buf.write(version + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def run_compare(cfg, jobs=1, strict=False, out=None):
    """Evaluate every sweep point; returns (exit status, reports)."""
    out = sys.stdout if out is None else out
    tasks = [(cfg, sel, t) for sel in cfg.potentials for t in cfg.thetas]
    reports = _map(_compare_point, tasks, jobs)
    reports.sort(key=lambda r: (r.potential, r.theta))
    csv_path = _write(cfg.output_path(".csv"), reports_to_csv(reports))
    _write(cfg.output_path(".json"), reports_to_json(reports))
    violated = False
    unconverged = False
    for rep in reports:
        bad = rep.violations()
        violated |= bool(bad)
        unconverged |= not rep.converged
        flags = ", ".join(bad) if bad else "ok"
        if not rep.converged:
            flags += " (not converged)"
        print(f"{rep.potential} theta={rep.theta:.6g} mu_A={rep.mu_A:.10g} mu_B={rep.mu_B:.10g} {flags}", file=out)
    print(f"wrote {csv_path}", file=out)
    if violated:
        return EXIT_VIOLATION, reports
    if strict and unconverged:
        return EXIT_NONCONVERGED, reports
    return EXIT_OK, reports


def run_slopes(cfg, out=None):
    out = sys.stdout if out is None else out
    if len(cfg.thetas) < 4:
        raise ConfigError(f"{cfg.path}: slopes needs at least 4 theta values, got {len(cfg.thetas)}")
    rows, status = [], EXIT_OK
    for sel in sorted(cfg.potentials, key=lambda s: s.label()):
        spec = sel.build()
        fit = slope_fit_muB(spec, cfg.thetas, tol=cfg.tol, margin=cfg.slope_margin, eig_tol=cfg.eig_tol)
        p = spec.coercivity.P if spec.coercivity is not None else None
        rows.append([_cell(v) for v in (spec.label(), p, spec.dim, fit.slope, fit.bracket[0], fit.bracket[1], cfg.slope_margin, fit.within)])
        if not fit.within:
            status = EXIT_VIOLATION
        print(f"{spec.label()} slope={fit.slope:.6f} bracket=[{fit.bracket[0]:.6g}, {fit.bracket[1]:.6g}] {'pass' if fit.within else 'FAIL'}", file=out)
    path = _write(cfg.output_path("_slopes.csv"), _table(SLOPES_VERSION, SLOPES_COLUMNS, rows))
    print(f"wrote {path}", file=out)
    return status


def _union_point(task):
    cfg, sel, theta = task
    spec = sel.build()
    grid = cfg.eta_grid or 8
    u = union_spectrum_inf(spec, theta, grid, tol=cfg.tol, period=cfg.union_period, **_solver_kwargs(cfg))
    b = mu_B(spec, theta, tol=cfg.tol, eig_tol=cfg.eig_tol)
    holds = u.value <= b.value * (1.0 + cfg.rel_tol) + cfg.abs_tol
    eta = " ".join(repr(float(e)) for e in u.eta)
    return (spec.label(), spec.dim, float(theta), grid, u.value, eta, b.value, u.converged, b.converged, bool(holds))


def run_union(cfg, jobs=1, strict=False, out=None):
    out = sys.stdout if out is None else out
    tasks = [(cfg, sel, t) for sel in cfg.potentials for t in cfg.thetas]
    rows = sorted(_map(_union_point, tasks, jobs), key=lambda r: (r[0], r[2]))
    path = _write(cfg.output_path("_union.csv"), _table(UNION_VERSION, UNION_COLUMNS, [[_cell(v) for v in r] for r in rows]))
    for r in rows:
        print(f"{r[0]} theta={r[2]:.6g} union_inf={r[4]:.10g} mu_B={r[6]:.10g} {'ok' if r[9] else 'FAIL'}", file=out)
    print(f"wrote {path}", file=out)
    if not all(r[9] for r in rows):
        return EXIT_VIOLATION
    if strict and not all(r[7] and r[8] for r in rows):
        return EXIT_NONCONVERGED
    return EXIT_OK


def run_identities(dims=(1, 2, 3), seed=0, count=200, rtol=1e-12, out=None):
    out = sys.stdout if out is None else out
    status = EXIT_OK
    for d in dims:
        rep = identity_suite(d, count=count, seed=seed, rtol=rtol)
        verdict = "pass" if rep.passed else "FAIL"
        print(f"d={d} count={rep.count} max_rel_error={rep.max_rel_error:.3e} ({rep.worst}) {verdict}", file=out)
        if not rep.passed:
            status = EXIT_VIOLATION
    return status


def build_parser():
    parser = argparse.ArgumentParser(prog="gse", description="Ground state energies of discrete and continuum Schroedinger operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="compare mu(A) and mu(B) and check every bound over a sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 3 when a solver does not converge")

    p = sub.add_parser("slopes", help="fit log mu(B) against log theta")
    p.add_argument("--config", required=True)

    p = sub.add_parser("union", help="infimum over shifts of the discrete ground energy against mu(B)")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser("identities", help="run the exact Fourier identity suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, choices=(1, 2, 3))
    p.add_argument("--count", type=int, default=200)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "identities":
            if args.count < 1:
                raise ConfigError("--count must be positive")
            dims = (args.dim,) if args.dim else (1, 2, 3)
            return run_identities(dims, args.seed, args.count)
        if getattr(args, "jobs", 1) < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config)
        if args.command == "compare":
            return run_compare(cfg, args.jobs, args.strict)[0]
        if args.command == "slopes":
            return run_slopes(cfg)
        return run_union(cfg, args.jobs, args.strict)
    except ConfigError as exc:
        print(f"gse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConvergedError as exc:
        print(f"gse: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
