"""Command-line entry point: ``sgfractal <command> ...``.

Exit status is 0 on success, 1 when a check fails or a computation
errors, and 2 on usage errors (bad flags, unparsable expressions or an
invalid configuration).
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import MeasureSpec, cbeta_norm, energy_norm, lq_norm, measure_dimension
from .config import ConfigError, RunConfig
from .field import FieldParseError, VertexFunction, sample, sup_norm
from .fractal import (
    MAX_OPERATOR_LEVEL,
    BaseOperator,
    BoundaryMismatchWarning,
    DiscreteNorm,
    ScalingFamily,
    alpha_fractal,
    assemble_operator,
    estimate_inverse_norm,
    estimate_operator_norm,
    self_referential_residual,
    trial_fields,
)
from .lattice import cached_lattice
from .theorems import run_report, space_constants

__all__ = ["main", "export_surface", "FIGURE1"]

FIGURE1 = {
    "f": "y^2*sin(x)/2",
    "b": "x*(x-1)*(y-sqrt3/2)*y^2*sin(0.5)/2",
    "alpha": 0.9,
    "N": 1,
}


class UsageError(Exception):
    pass


def export_surface(vf: VertexFunction, path: str | Path) -> None:
    """Write ``x,y,z`` rows in canonical vertex order, 17 significant digits."""
    xy = vf.lattice.coords
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z"])
        for (x, y), z in zip(xy.tolist(), vf.values.tolist()):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{z:.17g}"])


def _export_lattice(level: int, out: str, edges_out: str | None) -> None:
    lat = cached_lattice(level)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "birth"])
        for i, ((x, y), b) in enumerate(zip(lat.coords.tolist(), lat.birth.tolist())):
            w.writerow([i, f"{x:.17g}", f"{y:.17g}", b])
    if edges_out:
        with open(edges_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j"])
            w.writerows(lat.edges(level).tolist())


# --- argument helpers -------------------------------------------------------


def _measure(text: str | None) -> MeasureSpec:
    if text is None:
        return MeasureSpec.uniform()
    try:
        return MeasureSpec.parse(text)
    except ValueError as err:
        raise UsageError(f"--p: {err}") from None


def _operator(text: str) -> BaseOperator:
    try:
        return BaseOperator.parse(text)
    except ValueError as err:
        raise UsageError(f"--T: {err}") from None


def _family(spec: str, N: int, sample_level: int, unchecked: bool) -> ScalingFamily:
    try:
        return ScalingFamily.parse(spec, N, sample_level=sample_level, unchecked=unchecked)
    except FieldParseError:
        raise
    except ValueError as err:
        raise UsageError(f"--alpha: {err}") from None


def _seed_line(seed: int) -> None:
    print(f"seed: {seed}")


# --- commands ---------------------------------------------------------------


def cmd_lattice(args) -> int:
    _export_lattice(args.level, args.out, args.edges_out)
    lat = cached_lattice(args.level)
    print(f"level {args.level}: {len(lat)} vertices, {3 ** (args.level + 1)} edges -> {args.out}")
    return 0


def cmd_sample(args) -> int:
    lat = cached_lattice(args.level)
    vf = sample(args.f, lat, args.threads)
    if args.out:
        export_surface(vf, args.out)
    print(f"{len(lat)} vertices, sup norm {sup_norm(vf)!r}")
    return 0


def cmd_alpha(args) -> int:
    lat = cached_lattice(args.level)
    f = sample(args.f, lat, args.threads)
    if args.b is not None:
        b = sample(args.b, lat, args.threads)
    else:
        b = VertexFunction(lat, _operator(args.T).apply_values(f.values, lat))
    alpha = _family(args.alpha, args.N, args.alpha_level, args.unchecked)
    F = alpha_fractal(f, b, alpha, strict_boundary=args.strict_boundary)
    if args.out:
        export_surface(F, args.out)
    resid = self_referential_residual(F, f, b, alpha)
    print(f"{len(lat)} vertices written" + (f" to {args.out}" if args.out else ""))
    print(f"sup norm: {sup_norm(F)!r}")
    print(f"self-referential residual: {float(resid.max(initial=0.0))!r}")
    return 0


def cmd_norms(args) -> int:
    lat = cached_lattice(args.level)
    g = sample(args.f, lat, args.threads)
    if args.which == "sup":
        value = sup_norm(g)
    elif args.which == "energy":
        value = energy_norm(g)
    elif args.which == "cbeta":
        value = cbeta_norm(g, args.beta, args.n_max)[0]
    else:
        value = lq_norm(g, args.q, _measure(args.p))
    print(repr(value))
    return 0


def cmd_operator(args) -> int:
    if args.level > MAX_OPERATOR_LEVEL:
        raise UsageError(f"--level: the dense operator is capped at level {MAX_OPERATOR_LEVEL}")
    lat = cached_lattice(args.level)
    T = _operator(args.T)
    p = _measure(args.p)
    alpha = _family(args.alpha, args.N, args.alpha_level, False)
    norm = DiscreteNorm(args.norm, beta=args.beta, n_max=args.n_max, q=args.q, p=p)
    fields = trial_fields(lat, args.trials, args.seed)
    F = assemble_operator(alpha, alpha.N, T, lat)
    Tm = T.matrix(lat)
    _seed_line(args.seed)
    est = estimate_operator_norm(F, norm, lat, fields=fields)
    t_est = estimate_operator_norm(Tm, norm, lat, fields=fields)
    idt = estimate_operator_norm(np.eye(len(lat)) - Tm, norm, lat, fields=fields)
    inv, resid = estimate_inverse_norm(F, norm, lat, fields=fields)
    print(f"norm: {norm.describe()}  level: {args.level}  trial fields: {len(fields)}")
    print(f"||F|| estimate:      {est!r}")
    print(f"||T|| estimate:      {t_est!r}")
    print(f"||Id - T|| estimate: {idt!r}")
    print(f"||F^-1|| estimate:   {inv!r}  (solve residual {resid:.3g})")
    space = {"cbeta": "oscillation", "energy": "energy", "lq": "lebesgue"}.get(args.norm)
    if space is None:
        print("no theorem bounds for the sup norm")
        return 0
    c = space_constants(space, alpha, args.beta, args.n_max, args.q, p)
    print(f"{space} hypothesis: {c.hypothesis.lhs!r} < {c.hypothesis.rhs!r} -> {c.hypothesis.holds}")
    print(f"upper bound on ||F||:      {c.norm_upper(idt)!r}")
    for variant, fn in c.inverse_upper.items():
        print(f"upper bound on ||F^-1|| ({variant}): {fn(t_est)!r}")
        print(f"lower bound on ||F^-1|| ({variant}): {c.inverse_lower[variant](t_est)!r}")
    return 0


_OVERRIDES = ("f", "b", "T", "alpha", "N", "level", "beta", "n_max", "q", "p", "seed", "trials")


def cmd_verify(args) -> int:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for name in _OVERRIDES:
        v = getattr(args, name, None)
        if v is None:
            continue
        if name == "p":
            v = [float(t) for t in v.split(",")]
        elif name == "alpha":
            try:
                v = float(v)
            except ValueError:
                pass
        setattr(cfg, name, v)
    cfg.validate()
    if args.dump_config:
        cfg.dump(args.dump_config)
    _seed_line(cfg.seed)
    report = run_report(cfg)
    text = report.to_json() + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    for c in report.checks:
        flag = "PASS" if c.passed else "FAIL"
        print(f"{flag}  {c.name}: {c.lhs!r} {c.relation} {c.rhs!r}")
    total = len(report.checks)
    failed = sum(not c.passed for c in report.checks)
    print(f"{total - failed}/{total} checks passed")
    return 0 if failed == 0 else 1


def cmd_dim(args) -> int:
    print(repr(measure_dimension(_measure(args.p))))
    return 0


def cmd_figure1(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lat = cached_lattice(args.level)
    f = sample(FIGURE1["f"], lat, args.threads)
    b = sample(FIGURE1["b"], lat, args.threads)
    alpha = ScalingFamily.constant(FIGURE1["N"], FIGURE1["alpha"])
    F = alpha_fractal(f, b, alpha)
    path = out_dir / f"figure1_level{args.level}.csv"
    export_surface(F, path)
    export_surface(f, out_dir / f"figure1_seed_level{args.level}.csv")
    nN = lat.count(FIGURE1["N"])
    interp_ok = bool(np.array_equal(F.values[:nN], f.values[:nN]))
    resid = float(self_referential_residual(F, f, b, alpha).max(initial=0.0))
    bound = 1e-10 * (1.0 + sup_norm(f))
    print(f"f = {FIGURE1['f']}")
    print(f"b = {FIGURE1['b']}")
    print(f"alpha = {FIGURE1['alpha']}, N = {FIGURE1['N']}, level = {args.level}")
    print(f"{len(lat)} rows -> {path}")
    print(f"f^alpha = f on V_{FIGURE1['N']}: {interp_ok}")
    print(f"self-referential residual: {resid!r} (bound {bound!r})")
    return 0 if interp_ok and resid <= bound else 1


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SGFRACTAL_THREADS or 1)")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 42)")

    parser = argparse.ArgumentParser(
        prog="sgfractal", description="Fractal functions and operators on the Sierpinski gasket."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", parents=[common], help="export the vertex set V_M")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--edges-out", default=None, help="also write level-M edges")
    p.set_defaults(run=cmd_lattice)

    p = sub.add_parser("sample", parents=[common], help="sample an expression on V_M")
    p.add_argument("--f", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(run=cmd_sample)

    p = sub.add_parser("alpha", parents=[common], help="construct an alpha-fractal function")
    p.add_argument("--f", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--b", default=None)
    g.add_argument("--T", default="harmonic0", help="id, harmonic0 or blend:LAMBDA")
    p.add_argument("--alpha", required=True, help="constant, table a,b,c or expression")
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--alpha-level", type=int, default=6)
    p.add_argument("--out", default=None)
    p.add_argument("--strict-boundary", action="store_true")
    p.add_argument("--unchecked", action="store_true", help="allow ||alpha||_inf >= 1")
    p.set_defaults(run=cmd_alpha)

    p = sub.add_parser("norms", parents=[common], help="discrete norms of an expression")
    p.add_argument("--which", choices=("sup", "energy", "cbeta", "lq"), required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--p", default=None)
    p.set_defaults(run=cmd_norms)

    p = sub.add_parser("operator", parents=[common], help="estimate fractal operator norms")
    p.add_argument("--alpha", required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--T", default="harmonic0")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--alpha-level", type=int, default=6)
    p.add_argument("--norm", choices=("sup", "cbeta", "energy", "lq"), default="cbeta")
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--p", default=None)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(run=cmd_operator)

    p = sub.add_parser("verify", parents=[common], help="run the inequality report")
    p.add_argument("--config", default=None, help="JSON config (or a previous report)")
    p.add_argument("--report", default=None, help="write the JSON report here")
    p.add_argument("--dump-config", default=None, help="write the effective config here")
    p.add_argument("--f", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--T", default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--p", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("dim", parents=[common], help="dimension of a self-similar measure")
    p.add_argument("--p", required=True)
    p.set_defaults(run=cmd_dim)

    p = sub.add_parser("figure1", parents=[common], help="the gasket surface example, alpha = 0.9")
    p.add_argument("--level", type=int, choices=(2, 3, 4, 5), required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(run=cmd_figure1)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if args.command != "verify" and args.seed is None:
        args.seed = 42
    with warnings.catch_warnings():
        warnings.simplefilter("always", BoundaryMismatchWarning)
        warnings.showwarning = _show_warning
        return _run(parser, args)


def _run(parser: argparse.ArgumentParser, args) -> int:
    try:
        return args.run(args)
    except (UsageError, ConfigError, FieldParseError) as err:
        parser.print_usage(sys.stderr)
        print(f"sgfractal {args.command}: error: {err}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, MemoryError, OSError) as err:
        print(f"sgfractal {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
