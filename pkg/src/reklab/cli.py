"""Command-line front end: ``reklab gen | solve | verify | reproduce``.

Exit codes: 0 success / all checks pass, 1 verification or invariant
failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .figures import DEFAULT_ITERS, SCALES, reproduce_figures
from .generators import PAPER_DEFAULTS, gen_paper_problem, gen_synthetic
from .io import load_problem, save_problem, write_manifest
from .problem import ProblemInvariantError
from .sampling import derive_stream
from .solvers import SolveConfig, rek_solve, rk_solve
from .verification import (
    REPORT_COLUMNS,
    EnumerationBudgetError,
    enumeration_report,
    log_grid,
    montecarlo_report,
    report_passed,
    simulate,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("reklab")


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """17 significant digits: round-trips every float64."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def parse_ints(text: str, rank: int | None = None) -> list[int]:
    """Comma list of integers; the token ``r`` means the rank."""
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "r":
            if rank is None:
                raise UsageError("'r' needs a problem with known rank")
            out.append(rank)
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise UsageError(f"not an integer: {token!r}") from None
    return out


def parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}: {exc}") from None


def base_manifest(args, command: str) -> dict:
    return {"command": command, "argv": " ".join(args.argv), "version": __version__}


# --- gen -------------------------------------------------------------------


def cmd_gen(args) -> int:
    rng = derive_stream(args.seed, 0)
    manifest = base_manifest(args, "gen")
    try:
        if args.paper:
            problem = gen_paper_problem(args.n, args.shift, args.perturb, args.zero_rows, rng)
            manifest.update(generator="paper", shift=args.shift, perturb=args.perturb, zero_rows=args.zero_rows)
        else:
            if args.m is None or args.spectrum is None:
                raise UsageError("--synthetic needs --m, --n and --spectrum")
            spectrum = parse_floats(args.spectrum)
            problem = gen_synthetic(args.m, args.n, spectrum, args.inconsistent, rng)
            manifest.update(generator="synthetic", spectrum=spectrum, inconsistent=args.inconsistent)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest.update(seed=args.seed, sigma_1=float(problem.svd.sigma[0]), sigma_r=problem.svd.sigma_r)
    save_problem(problem, args.out, manifest)
    print(
        f"m={problem.m} n={problem.n} rank={problem.rank} "
        f"sigma_1={problem.svd.sigma[0]:.6g} sigma_r={problem.svd.sigma_r:.6g} "
        f"consistent={problem.consistent}"
    )
    return EXIT_OK


# --- solve -----------------------------------------------------------------


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    ells = parse_ints(args.track_ell, problem.rank) if args.track_ell else []
    try:
        cfg = SolveConfig(
            max_iters=args.iters,
            resid_tol=args.resid_tol,
            record_every=args.record_every,
            track_ells=tuple(ells),
        )
        rng = derive_stream(args.seed, 1)
        if args.method == "rk":
            _, rec = rk_solve(problem, cfg, rng)
        else:
            _, rec = rek_solve(problem, cfg, rng)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out = Path(args.out) if args.out else Path(args.problem) / f"trajectory_{args.method}.csv"
    header = ["k", "err_norm", "alignment", "rayleigh"] + [f"coeff_ell_{ell}" for ell in rec.coeffs]
    columns = [rec.ks, rec.err_norm, rec.alignment, rec.rayleigh, *rec.coeffs.values()]
    write_csv(out, header, zip(*columns))
    manifest = base_manifest(args, "solve")
    manifest.update(
        problem=str(args.problem), method=args.method, iters=args.iters, seed=args.seed,
        record_every=args.record_every, resid_tol=args.resid_tol, track_ell=ells, output=str(out),
    )
    write_manifest(out.with_suffix(".manifest.txt"), manifest)
    print(f"wrote {len(rec)} rows to {out}; final err_norm={rec.err_norm[-1]:.6g}")
    return EXIT_OK


# --- verify ----------------------------------------------------------------


def cmd_verify(args) -> int:
    if args.auto:
        problem = gen_synthetic(3, 2, [2.0, 0.7], inconsistent=True, rng=derive_stream(args.seed, 0))
    elif args.problem:
        problem = load_problem(args.problem)
    else:
        raise UsageError("give a problem directory or --auto")
    ells = parse_ints(args.ell, problem.rank) if args.ell else None
    if ells is not None and any(not 1 <= e <= problem.rank for e in ells):
        raise UsageError(f"--ell values must lie in 1..{problem.rank}")

    manifest = base_manifest(args, "verify")
    manifest.update(mode=args.mode, seed=args.seed, problem="auto" if args.auto else str(args.problem))
    if args.mode == "enumerate":
        try:
            report = enumeration_report(problem, None, None, args.kmax, ells, tol=args.tol)
        except EnumerationBudgetError as exc:
            raise UsageError(str(exc)) from None
        manifest.update(kmax=args.kmax, tol=args.tol)
    else:
        grid = parse_ints(args.kgrid) if args.kgrid else log_grid(args.K)
        if args.trials < 100:
            raise UsageError("--trials must be >= 100")
        if ells is None:
            ells = sorted({1, problem.rank})
        run = simulate(problem, grid, args.trials, args.seed, method=args.method)
        report = montecarlo_report(run, ells, args.nsigma)
        manifest.update(trials=args.trials, kgrid=grid, ell=ells, nsigma=args.nsigma, method=args.method)

    out = Path(args.out)
    files = []
    for name, rows in report.items():
        write_csv(out / f"{name}.csv", REPORT_COLUMNS, rows)
        files.append(f"{name}.csv")
    manifest["outputs"] = files
    write_manifest(out / "manifest.txt", manifest)

    ok = report_passed(report)
    for name, rows in report.items():
        failed = sum(not row[-1] for row in rows)
        print(f"{name}: {len(rows) - failed}/{len(rows)} pass")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


# --- reproduce -------------------------------------------------------------


def cmd_reproduce(args) -> int:
    iters = args.iters if args.iters is not None else DEFAULT_ITERS
    record_every = args.record_every or (1 if args.scale == "desk" else 100)
    data = reproduce_figures(args.scale, args.seed, iters, record_every)
    rec, sigma_r = data.record, data.sigma_r
    out = Path(args.out)
    write_csv(out / "fig1.csv", ["k", "alignment"], zip(rec.ks, rec.alignment))
    write_csv(
        out / "fig2.csv",
        ["k", "rayleigh", "sigma_r"],
        ((k, r, sigma_r) for k, r in zip(rec.ks, rec.rayleigh)),
    )
    manifest = base_manifest(args, "reproduce")
    manifest.update(
        scale=args.scale, seed=args.seed, iters=iters, record_every=record_every,
        **{key: SCALES[args.scale][key] for key in PAPER_DEFAULTS},
        sigma_1=float(data.problem.svd.sigma[0]), sigma_r=sigma_r, rank=data.problem.rank,
        outputs=["fig1.csv", "fig2.csv"],
    )
    write_manifest(out / "manifest.txt", manifest)
    a_first, a_last = data.alignment_windows()
    r_first, r_last = data.rayleigh_windows()
    print(f"sigma_r={sigma_r:.6g} rank={data.problem.rank}")
    print(f"alignment median: first 1% {a_first:.4f}, final 10% {a_last:.4f}")
    print(f"rayleigh median:  first 1% {r_first:.6g} ({r_first / sigma_r:.3g} sigma_r), "
          f"final 10% {r_last:.6g} ({r_last / sigma_r:.3g} sigma_r)")
    return EXIT_OK


# --- wiring ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reklab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"reklab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a problem directory")
    kind = g.add_mutually_exclusive_group(required=True)
    kind.add_argument("--paper", action="store_true", help="near-rank-deficient test matrix")
    kind.add_argument("--synthetic", action="store_true", help="prescribed spectrum, Haar-random U and V")
    g.add_argument("--n", type=int, default=PAPER_DEFAULTS["n"])
    g.add_argument("--m", type=int)
    g.add_argument("--shift", type=float, default=PAPER_DEFAULTS["shift"])
    g.add_argument("--perturb", type=float, default=PAPER_DEFAULTS["perturb"])
    g.add_argument("--zero-rows", type=int, default=PAPER_DEFAULTS["zero_rows"])
    g.add_argument("--spectrum", help="comma-separated singular values")
    g.add_argument("--inconsistent", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run REK or RK and write a trajectory CSV")
    s.add_argument("problem")
    s.add_argument("--method", choices=("rek", "rk"), default="rek")
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--record-every", type=int, default=1)
    s.add_argument("--resid-tol", type=float, default=0.0)
    s.add_argument("--track-ell", default="", help="comma list of indices; 'r' = rank")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check the expectation formulas and bounds")
    v.add_argument("problem", nargs="?")
    v.add_argument("--auto", action="store_true", help="use a built-in 3x2 inconsistent instance")
    v.add_argument("--mode", choices=("enumerate", "montecarlo"), default="enumerate")
    v.add_argument("--kmax", type=int, default=3)
    v.add_argument("--tol", type=float, default=1e-12)
    v.add_argument("--trials", type=int, default=20000)
    v.add_argument("--kgrid", help="comma list of iteration counts")
    v.add_argument("--K", type=int, default=50, help="log-grid horizon when --kgrid is absent")
    v.add_argument("--ell", help="comma list of indices; 'r' = rank")
    v.add_argument("--nsigma", type=float, default=4.0)
    v.add_argument("--method", choices=("rek", "rk"), default="rek")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="verify_out")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reproduce", help="alignment and Rayleigh-quotient traces")
    r.add_argument("--scale", choices=sorted(SCALES), default="desk")
    r.add_argument("--seed", type=int, default=3)
    r.add_argument("--iters", type=int)
    r.add_argument("--record-every", type=int)
    r.add_argument("--out", default="figures_out")
    r.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"reklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProblemInvariantError as exc:
        print(f"reklab: invalid problem: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        print(f"reklab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
