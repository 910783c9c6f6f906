"""Config-driven command line for spectra, kernels, checks, and gap reports.

Subcommands: spectrum, kernels, verify, asymptotics, validate-bc.  The
potentials and boundary data come from a JSON problem document (matrices
are unwieldy as flags); scalar fields like the grid size can be
overridden by flags.  All numeric output renders at 17 significant
digits, so re-running a command with the same config and seed produces
byte-identical files.

Exit codes: 0 success (or consistent/inconclusive verdicts), 2 config or
usage error (including ambiguous windows and failed boundary validation),
3 violated verdict, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .asymptotics import asymptotic_gap_report, asymptotic_predictions, write_gap_csv
from .harness import (HypothesisError, check_ground_state_directions,
                      check_integral_balance, check_mean_potential_identity,
                      check_zero_spectrum_rigidity, random_q_entries)
from .ioutil import dumps_canonical, format_float
from .kernels import (representation_residual, solve_goursat,
                      trace_identity_residual, write_lattice_csv)
from .model import (DocumentError, UniformGrid, dirichlet_boundary,
                    neumann_boundary, parse_problem_document,
                    validate_boundary)
from .spectral import (AmbiguousWindowError, SolverOptions, WindowMismatchError,
                       locate_eigenvalues, write_spectrum_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATED = 3
EXIT_NUMERICAL = 4

_KERNEL_LAMBDA_SET = (1.3, 2.7, 5.1)
_DEFAULT_T31_WINDOW = (-3.5, 3.5)
_DEFAULT_CHECK_TOL = 1e-8
_DEFAULT_MATCH_TOL = 1e-4


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True,
                        help="path to a problem document (JSON)")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-n", type=int, default=None,
                        help="override the document's grid_n (>= 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pencil-spectra",
        description="Spectral toolkit for matrix quadratic pencils on [0, pi]")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="locate eigenvalues on a window")
    _add_config(sp)
    _add_grid(sp)
    sp.add_argument("--out", default="spectrum.csv")
    sp.add_argument("--lambda-min", type=float, required=True)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.add_argument("--n-scan", type=int, default=None,
                    help="scan samples (default: 200 per unit of window)")
    sp.add_argument("--tol", type=float, default=None,
                    help="acceptance tolerance on normalized sigma_min")
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=cmd_spectrum)

    kp = sub.add_parser("kernels", help="solve the kernel lattice and residuals")
    _add_config(kp)
    _add_grid(kp)
    kp.add_argument("--out", default="kernels.csv")
    kp.add_argument("--gzip", action="store_true",
                    help="gzip-compress the lattice CSV")
    kp.add_argument("--lambda-min", type=float, default=None,
                    help="ignored by kernels (accepted for config reuse)")
    kp.add_argument("--lambda-max", type=float, default=None,
                    help="ignored by kernels (accepted for config reuse)")
    kp.set_defaults(func=cmd_kernels)

    vp = sub.add_parser("verify", help="run the verification checks")
    _add_config(vp)
    _add_grid(vp)
    vp.add_argument("--out", default="verify_report.json")
    vp.add_argument("--theorem", default="all",
                    choices=["t31", "t32", "ground", "eq39", "all"])
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--tol", type=float, default=None,
                    help="check tolerance (default 1e-8)")
    vp.add_argument("--lambda-min", type=float, default=None,
                    help="t31 window lower end (default -3.5)")
    vp.add_argument("--lambda-max", type=float, default=None,
                    help="t31 window upper end (default 3.5)")
    vp.add_argument("--n-max", type=int, default=3,
                    help="t32 reference spectrum extent (default 3)")
    vp.add_argument("--jobs", type=int, default=None)
    vp.set_defaults(func=cmd_verify)

    ap = sub.add_parser("asymptotics", help="gap report against n + alpha_j/pi")
    _add_config(ap)
    _add_grid(ap)
    ap.add_argument("--out", default="gaps.csv")
    ap.add_argument("--lambda-min", type=float, required=True)
    ap.add_argument("--lambda-max", type=float, required=True)
    ap.add_argument("--n-scan", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=None)
    ap.set_defaults(func=cmd_asymptotics)

    bp = sub.add_parser("validate-bc", help="check boundary admissibility")
    _add_config(bp)
    bp.add_argument("--tol", type=float, default=None,
                    help="override the symmetry and rank thresholds")
    bp.set_defaults(func=cmd_validate_bc)
    return parser


def _load_document(path: str):
    with open(path) as fh:
        return parse_problem_document(fh.read())


def _resolve_grid(args, doc) -> UniformGrid:
    grid_n = doc.grid_n if args.grid_n is None else args.grid_n
    if grid_n < 16:
        raise DocumentError(f"grid_n must be >= 16, got {grid_n}")
    return UniformGrid.from_steps(grid_n)


def cmd_spectrum(args) -> int:
    doc = _load_document(args.config)
    grid = _resolve_grid(args, doc)
    accept_tol = 1e-6 if args.tol is None else args.tol
    options = SolverOptions(n_scan=args.n_scan, accept_tol=accept_tol,
                            jobs=args.jobs)
    spectrum = locate_eigenvalues(doc.problem, grid, args.lambda_min,
                                  args.lambda_max, options)
    write_spectrum_csv(spectrum, args.out)
    min_residual = min((r.residual for r in spectrum.records), default=0.0)
    print(f"eigenvalues {len(spectrum.records)} "
          f"window [{format_float(args.lambda_min)}, {format_float(args.lambda_max)}] "
          f"min_residual {format_float(min_residual)}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _summary_path(out: str) -> str:
    base = out[:-3] if out.endswith(".gz") else out
    dot = base.rfind(".")
    stem = base[:dot] if dot > 0 else base
    return stem + "_summary.json"


def cmd_kernels(args) -> int:
    doc = _load_document(args.config)
    grid = _resolve_grid(args, doc)
    if args.lambda_min is not None or args.lambda_max is not None:
        print("warning: window options are ignored by kernels", file=sys.stderr)
    field = solve_goursat(doc.problem, grid)
    write_lattice_csv(field, args.out, compress=args.gzip)
    rr = representation_residual(field, doc.problem, grid, _KERNEL_LAMBDA_SET)
    r33, r212, r213 = trace_identity_residual(field, doc.problem, grid)
    summary = {
        "grid_n": grid.n_steps,
        "r33": r33,
        "r212": r212,
        "r213": r213,
        "representation_residual": rr.value,
        "representation_lambda": rr.lam,
        "representation_x": rr.x,
        "lambda_set": list(_KERNEL_LAMBDA_SET),
    }
    spath = _summary_path(args.out)
    with open(spath, "w") as fh:
        fh.write(dumps_canonical(summary))
    print(f"kernels N={grid.n_steps} r33 {format_float(r33)} "
          f"r212 {format_float(r212)} r213 {format_float(r213)} "
          f"representation_residual {format_float(rr.value)}")
    print(f"wrote {args.out} and {spath}")
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = _load_document(args.config)
    problem = doc.problem
    grid = _resolve_grid(args, doc)
    tol = _DEFAULT_CHECK_TOL if args.tol is None else args.tol
    rng = np.random.default_rng(args.seed)
    options = SolverOptions(jobs=args.jobs)
    names = (["t31", "t32", "ground", "eq39"] if args.theorem == "all"
             else [args.theorem])

    reports = []
    for name in names:
        if name == "t31":
            q_tilde = doc.q_tilde if doc.q_tilde is not None else \
                random_q_entries(problem.dimension, rng)
            window = (_DEFAULT_T31_WINDOW[0] if args.lambda_min is None else args.lambda_min,
                      _DEFAULT_T31_WINDOW[1] if args.lambda_max is None else args.lambda_max)
            reports.append(check_mean_potential_identity(
                problem, q_tilde, grid, window, tol=tol,
                match_tol=_DEFAULT_MATCH_TOL, options=options, seed=args.seed))
        elif name == "t32":
            reports.append(check_zero_spectrum_rigidity(
                problem, grid, args.n_max, tol=tol,
                match_tol=_DEFAULT_MATCH_TOL, options=options, seed=args.seed))
        elif name == "ground":
            reports.append(check_ground_state_directions(
                problem, grid, tol=tol, seed=args.seed))
        else:
            reports.append(check_integral_balance(problem, seed=args.seed))

    payload = (reports[0].to_dict() if len(reports) == 1
               else [r.to_dict() for r in reports])
    with open(args.out, "w") as fh:
        fh.write(dumps_canonical(payload))
    for report in reports:
        print(f"{report.theorem_id}: {report.verdict}")
    print(f"wrote {args.out}")
    return EXIT_VIOLATED if any(r.verdict == "violated" for r in reports) else EXIT_OK


def cmd_asymptotics(args) -> int:
    doc = _load_document(args.config)
    grid = _resolve_grid(args, doc)
    options = SolverOptions(n_scan=args.n_scan, jobs=args.jobs)
    spectrum = locate_eigenvalues(doc.problem, grid, args.lambda_min,
                                  args.lambda_max, options)
    n_min = math.ceil(args.lambda_min)
    n_max = math.floor(args.lambda_max)
    predictions = (asymptotic_predictions(doc.problem, n_min, n_max)
                   if n_min <= n_max else [])
    report = asymptotic_gap_report(spectrum, predictions)
    write_gap_csv(report, args.out)
    for row in report.skipped_rows():
        print(f"warning: skipped n={row.n} j={row.channel_j}: prediction "
              f"{format_float(row.predicted)} outside window", file=sys.stderr)
    for fit in report.fits:
        exp_text = "n/a" if fit.exponent is None else format_float(fit.exponent)
        print(f"channel {fit.channel_j}: c_fit {format_float(fit.coefficient)} "
              f"exponent {exp_text} n_used {fit.n_used}")
    print(f"rows {len(report.rows)} max_gap {format_float(report.max_gap())}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_validate_bc(args) -> int:
    with open(args.config) as fh:
        raw = json.loads(fh.read())
    if not isinstance(raw, dict):
        raise DocumentError("problem document must be a JSON object")
    d = raw.get("dimension")
    if not isinstance(d, int) or d < 1:
        raise DocumentError("'dimension' must be a positive integer")
    bnd = raw.get("boundary")
    if isinstance(bnd, str):
        named = {"neumann": neumann_boundary, "dirichlet": dirichlet_boundary}
        if bnd not in named:
            raise DocumentError(f"unknown boundary name {bnd!r}")
        a, b, c, dd = named[bnd](d)
    elif isinstance(bnd, dict):
        try:
            mats = [np.asarray(bnd[key], dtype=float) for key in "ABCD"]
        except KeyError as exc:
            raise DocumentError(f"boundary object missing key {exc}") from exc
        mats = [m.reshape(d, d) if m.shape == (d * d,) else m for m in mats]
        for key, m in zip("ABCD", mats):
            if m.shape != (d, d):
                raise DocumentError(f"boundary matrix {key} must be {d}x{d}")
        a, b, c, dd = mats
    else:
        raise DocumentError("'boundary' must be a name or an {A,B,C,D} object")

    kwargs = {}
    if args.tol is not None:
        kwargs = {"tau_sym": args.tol, "tau_rank": args.tol}
    report = validate_boundary(a, b, c, dd, **kwargs)
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"{check.condition}: {status} residual {format_float(check.residual)} "
              f"threshold {format_float(check.threshold)}")
    return EXIT_OK if report.all_passed else EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: config parse failure at line {exc.lineno} "
              f"column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_CONFIG
    except AmbiguousWindowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DocumentError, HypothesisError, WindowMismatchError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
