"""Command line front end: ``spde-yosida {run,sweep,validate,noise-check}``.

Exit codes: 0 all checks pass, 2 configuration error, 3 numerical failure,
4 a certificate or check failed.

Output files (all floats with 17 significant digits):

``trajectory.csv`` / ``limit_trajectory.csv``
    ``step,t,j,x,v,z,u,zeta``, one row per node of every stored snapshot.
``certificates.csv``
    ``name,value,bound,tolerance,sense,passed,scenario_hash,lambda,seed,detail``.
``cauchy.csv``
    ``j,lambda,d_j,fenchel_gap_integral,energy_slack_min,weak_1..weak_5``;
    ``d_j`` and the weak columns compare ``lambda_j`` with ``lambda_{j+1}``
    and are empty on the last row.
``noise_check.csv``
    ``k,mu,b,exact_variance,empirical_variance,standard_error,z_score,passed``.
``report.txt``
    Human-readable summary of the invocation.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, solver, validation
from .config import certificate_tolerance, load_scenario
from .errors import ConfigError, DomainError, NumericalError
from .semigroup import SpectralOperator

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CERTIFICATE = 0, 2, 3, 4
TRAJECTORY_COLUMNS = ("step", "t", "j", "x", "v", "z", "u", "zeta")
NOISE_COLUMNS = ("k", "mu", "b", "exact_variance", "empirical_variance", "standard_error", "z_score", "passed")
_SHIPPED = Path(__file__).parent / "scenarios"


def _f(x):
    return "" if x is None else "%.17g" % x


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_trajectory(path, bundle, stride):
    steps = list(range(0, bundle.grid.n_steps + 1, stride))
    if steps[-1] != bundle.grid.n_steps:
        steps.append(bundle.grid.n_steps)
    x = np.arange(1, bundle.v.shape[1] + 1) / (bundle.v.shape[1] + 1)
    u, z = bundle.u, bundle.z.values
    fh, w = _writer(path)
    with fh:
        w.writerow(TRAJECTORY_COLUMNS)
        for n in steps:
            t = bundle.times[n]
            for j in range(x.size):
                w.writerow((n, _f(t), j + 1, _f(x[j]), _f(bundle.v[n, j]), _f(z[n, j]), _f(u[n, j]), _f(bundle.zeta[n, j])))


def write_cauchy(path, result):
    rows = result.rows()
    cols = list(rows[0])
    fh, w = _writer(path)
    with fh:
        w.writerow(cols)
        for r in rows:
            w.writerow([r["j"]] + [_f(r[c]) for c in cols[1:]])


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _load(args):
    if args.config is None:
        raise ConfigError(f"{args.command} needs --config PATH (shipped scenarios: {_SHIPPED})")
    return load_scenario(args.config, args.set, args.seed)


def cmd_run(args):
    sc, data = _load(args)
    out = _out_dir(args.out)
    bundle = solver.solve(sc)
    certs = diagnostics.certify(bundle, certificate_tolerance(data))
    write_trajectory(out / "trajectory.csv", bundle, sc.stride)
    diagnostics.write_certificates(out / "certificates.csv", certs)
    extra = [f"scenario {args.config} (hash {sc.hash()})", f"lambda {bundle.lam:.17g}, scheme {bundle.scheme}, seed {sc.seed}",
             f"mild residual {solver.mild_residual(bundle):.6g}", ""]
    report = diagnostics.format_report("run", certs, extra)
    (out / "report.txt").write_text(report)
    print(report, end="")
    return EXIT_OK if all(c.passed for c in certs) else EXIT_CERTIFICATE


def cmd_sweep(args):
    sc, data = _load(args)
    out = _out_dir(args.out)
    result = solver.continuation(sc, jobs=args.jobs)
    tol = certificate_tolerance(data)
    certs = [c for b in result.bundles for c in diagnostics.certify(b, tol)]
    write_cauchy(out / "cauchy.csv", result)
    write_trajectory(out / "limit_trajectory.csv", result.limit, sc.stride)
    diagnostics.write_certificates(out / "certificates.csv", certs)
    d_ok = bool(np.all(np.diff(result.d) < 0.0))
    gap_ok = bool(np.all(np.diff(result.gap_integrals) < 0.0))
    extra = [f"scenario {args.config} (hash {sc.hash()})", f"{len(result.lambdas)} lambda values, seed {sc.seed}",
             f"d_j strictly decreasing: {'yes' if d_ok else 'no'}", f"gap integral decreasing: {'yes' if gap_ok else 'no'}"]
    extra += [f"solve failed at lambda={lam:.6g}: {err}" for lam, err in result.errors]
    extra.append("")
    report = diagnostics.format_report("sweep", certs, extra)
    (out / "report.txt").write_text(report)
    print(report, end="")
    return EXIT_OK if d_ok and gap_ok and not result.errors else EXIT_CERTIFICATE


def cmd_validate(args):
    checks = validation.run_all()
    lines = [c.line() for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} properties passed")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        (_out_dir(args.out) / "report.txt").write_text(text)
    return EXIT_OK if n_fail == 0 else EXIT_CERTIFICATE


def cmd_noise_check(args):
    sc, data = _load(args)
    out = _out_dir(args.out)
    nc = data.get("noise_check", {})
    samples = int(nc.get("samples", 10000))
    first = int(nc.get("first_seed", sc.seed))
    if samples < 2:
        raise ConfigError("noise_check.samples must be at least 2")
    op = SpectralOperator(sc.n_x, sc.shift)
    rows, cov, cov_se = validation.variance_table(sc.noise, op, sc.grid, range(first, first + samples))
    fh, w = _writer(out / "noise_check.csv")
    all_ok = True
    with fh:
        w.writerow(NOISE_COLUMNS)
        for k, mu, b, exact, emp, se in rows:
            z = (emp - exact) / se if se > 0.0 else (0.0 if emp == exact else np.inf)
            ok = abs(z) <= 3.0
            all_ok &= ok
            w.writerow((k, _f(mu), _f(b), _f(exact), _f(emp), _f(se), _f(z), int(ok)))
    cov_ok = abs(cov) <= 3.0 * cov_se
    lines = [f"noise-check: {samples} paths, {sc.n_x} modes, T={sc.grid.T:g}, dt={sc.grid.dt:g}",
             f"modes within 3 SE: {sum(abs((e - x) / s) <= 3.0 for _, _, _, x, e, s in rows if s > 0)}/{len(rows)}",
             f"cov(z_1, z_2) = {cov:.6g} (SE {cov_se:.3g}): {'PASS' if cov_ok else 'FAIL'}"]
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if all_ok and cov_ok else EXIT_CERTIFICATE


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "noise-check": cmd_noise_check}


def build_parser():
    p = argparse.ArgumentParser(prog="spde-yosida", description="Yosida-regularized SPDE solver and certificates.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "solve one scenario at its lambda"), ("sweep", "lambda continuation"),
                           ("validate", "invariant suites on fixed fixtures"), ("noise-check", "noise variance table")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", metavar="PATH", help="scenario TOML file")
        s.add_argument("--seed", type=int, help="noise seed (unsigned 64-bit), overrides noise.seed")
        s.add_argument("--out", metavar="DIR", default=None if name == "validate" else "out", help="output directory")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override table.key (repeatable)")
        s.add_argument("--jobs", type=int, default=1, help="parallel lambda jobs for sweep")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
