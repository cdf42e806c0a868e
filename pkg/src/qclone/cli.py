"""Command-line front end.

Exit codes: 0 success or inside, 1 outside or failed verification, 2 usage
error, 3 numerical guard. JSON goes to stdout, warnings and errors to stderr.
Relative ``--out`` paths are resolved against ``$QCLONE_OUTPUT_DIR`` when set.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import cloner, oracle, qnorm, spectral
from .tensor_core import DimensionError

EXIT_OK, EXIT_OUTSIDE, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3
OUTPUT_DIR_ENV = "QCLONE_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} cannot be serialized")
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17 significant digits for every float."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent, _level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    return str(v)


def write_csv(rows: Sequence[dict], path: str) -> str:
    if not rows:
        raise ValueError("nothing to write")
    target = resolve_output(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(r[k]) for k in header])
    os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
    return target


def resolve_output(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def parse_vector(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed vector {text!r}: expected comma-separated decimals")
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"malformed vector {text!r}")
    return np.asarray(vals)


def _floats(v: Iterable[float]) -> List[float]:
    return [float(x) for x in v]


def _emit(obj, out) -> None:
    out.write(to_json(obj) + "\n")


def cmd_qnorm(args, out) -> int:
    x = parse_vector(args.x)
    lam = spectral.lambda_max_reduced(x, args.d)
    _emit({"value": qnorm.q_norm(x, args.d), "lambda_max": lam, "l1": float(np.abs(x).sum())}, out)
    return EXIT_OK


def _verdict(args) -> qnorm.RegionVerdict:
    p = parse_vector(args.p)
    if np.any(p < 0) or np.any(p > 1):
        raise UsageError("clone qualities must lie in [0, 1]")
    return qnorm.in_region(p, args.d, tol=args.tol, resolution=args.resolution, refine_iters=args.refine_iters)


def cmd_dualnorm(args, out) -> int:
    v = _verdict(args)
    _emit({"dual_norm": v.dual_norm, "witness_alpha": _floats(v.witness_alpha), "inside": v.inside,
           "margin": v.margin}, out)
    return EXIT_OK


def cmd_member(args, out) -> int:
    v = _verdict(args)
    _emit({"inside": v.inside, "dual_norm": v.dual_norm, "margin": v.margin}, out)
    return EXIT_OK if v.inside else EXIT_OUTSIDE


def _beta_from_args(args) -> np.ndarray:
    roles = [r for r in ("alpha", "beta", "f") if getattr(args, r) is not None]
    if len(roles) != 1:
        raise UsageError("give exactly one of --alpha, --beta, --f")
    d = args.d
    if args.alpha is not None:
        alpha = parse_vector(args.alpha)
        if np.any(alpha < 0) or np.any(alpha > 1):
            raise UsageError("alpha entries must lie in [0, 1]")
        if not alpha.any():
            raise UsageError("alpha must not be zero")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            beta = spectral.perron_beta(alpha, d)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return beta
    if args.beta is not None:
        beta = parse_vector(args.beta)
        r = spectral.normalization_residual(beta, d)
        if abs(r) > 1e-10:
            if args.strict:
                raise UsageError(f"beta is not normalized (residual {r:.3e})")
            print(f"warning: beta rescaled to the normalization (residual was {r:.3e})", file=sys.stderr)
            beta = spectral.normalize_beta(beta, d)
        return beta
    try:
        return qnorm.fidelities_to_beta(parse_vector(args.f), d)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_cloner(args, out) -> int:
    beta = _beta_from_args(args)
    d = args.d
    ch = cloner.CloningChannel(beta, d)
    C = ch.choi
    unscaled = C.operator / float(cloner.choi_prefactor(d, ch.N))
    fit = cloner.fit_marginals(ch, args.samples, args.seed)
    p = qnorm.optimal_surface_point(beta, d)
    cert = C.certificate()
    cert["projector_residual"] = float(np.abs(unscaled @ unscaled - unscaled).max())
    cert["covariance_residual"] = cloner.covariance_check(C, args.trials, args.seed)
    _emit(
        {
            "d": d,
            "N": ch.N,
            "beta": _floats(beta),
            "p": _floats(p),
            "fidelities": _floats(qnorm.surface_fidelities(beta, d)),
            "kay_residual": qnorm.kay_residual(p, d),
            "fit": {"p": _floats(fit.p), "residual": fit.residual},
            "choi": cert,
        },
        out,
    )
    return EXIT_OK


def cmd_boundary(args, out) -> int:
    rows = qnorm.boundary_export(args.d, args.N, args.grid, with_dual=not args.no_dual)
    target = write_csv(rows, args.out)
    _emit({"rows": len(rows), "out": target}, out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    checks = oracle.lemma_suite(args.d, args.N, seed=args.seed)
    report = oracle.agreement_report(args.d, args.N, trials=args.trials, seed=args.seed)
    summary = report.summary()
    ok = all(c.passed for c in checks) and summary["disagreements_outside_band"] == 0
    _emit(
        {
            "lemmas": [{"name": c.name, "residual": c.residual, "passed": c.passed} for c in checks],
            "agreement": summary,
            "passed": ok,
        },
        out,
    )
    return EXIT_OK if ok else EXIT_OUTSIDE


def cmd_figures(args, out) -> int:
    if args.which == "ellipse":
        rows = [dict(r, d=args.d) for r in qnorm.ellipse_curve(args.d, args.points)]
    elif args.which == "qnorm-sphere":
        rows = qnorm.qnorm_unit_sphere((args.d,), args.points)
    else:
        rows = qnorm.flat_slice(args.d, args.grid)
    target = write_csv(rows, args.out)
    _emit({"which": args.which, "rows": len(rows), "out": target}, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qclone", description="Asymmetric 1→N cloning toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_d(p):
        p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
        return p

    p = with_d(sub.add_parser("qnorm", help="Q-norm of a vector"))
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_qnorm)

    for name, func, help_ in (("dualnorm", cmd_dualnorm, "dual Q-norm of p"),
                              ("member", cmd_member, "region membership (exit 0 inside, 1 outside)")):
        p = with_d(sub.add_parser(name, help=help_))
        p.add_argument("--p", required=True)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--refine-iters", type=int, default=50)
        p.set_defaults(func=func)

    p = with_d(sub.add_parser("cloner", help="build and certify T_beta"))
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p.add_argument("--f")
    p.add_argument("--strict", action="store_true", help="reject non-normalized beta")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cloner)

    p = with_d(sub.add_parser("boundary", help="optimal surface table as CSV"))
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--no-dual", action="store_true", help="skip the dual-norm column")
    p.set_defaults(func=cmd_boundary)

    p = with_d(sub.add_parser("verify", help="lemma suite and oracle agreement"))
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = with_d(sub.add_parser("figures", help="figure data as CSV"))
    p.add_argument("--which", choices=["ellipse", "qnorm-sphere", "flat-slice"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=361)
    p.add_argument("--grid", type=int, default=30)
    p.set_defaults(func=cmd_figures)
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.d < 2:
        print("error: --d must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
