"""Command line entry point: ``apet <subcommand> ...``.

Exit codes: 0 success, 2 usage error (bad flags, impossible budgets),
3 data error (unreadable or malformed input), 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .approximation import fit_basis
from .compression import DEFAULT_BASIS_M, MERGE_MODES, ApetConfig, compress
from .errors import ApetError, InvalidBudget, SingularGram
from .evaluation import BASELINES, KINDS, SyntheticSpec, gen_synthetic, mse_entropy_bound, run_grid
from .linalg import DEFAULT_RIDGE
from .sampling import DEFAULT_DC_PERCENTILE, STRATEGIES, sample_basis

log = logging.getLogger("apet")

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed_range(text: str) -> list[int]:
    """``"3"``, ``"0..49"`` (inclusive) or ``"1,5,9"``."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}; use S0..S1") from None


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        value = float("nan")
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a finite number >= 0, got {text!r}")
    return value


def _percentile(text: str) -> float:
    value = _nonneg_float(text)
    if not 0 < value < 100:
        raise argparse.ArgumentTypeError(f"percentile must be in (0, 100), got {text!r}")
    return value


def _name_list(choices):
    def parse(text):
        names = [v.strip() for v in text.split(",") if v.strip()]
        bad = [v for v in names if v not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown {bad}; choose from {','.join(choices)}")
        return names
    return parse


def _add_input(p):
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--format", choices=io.FORMATS, help="default: from file extension")


def _add_sampler(p, m_flag="--basis-m"):
    p.add_argument(m_flag, type=int, default=DEFAULT_BASIS_M, dest="basis_m")
    p.add_argument("--sampler", choices=STRATEGIES, default="fps")
    p.add_argument("--dc-percentile", type=_percentile, default=DEFAULT_DC_PERCENTILE)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apet", description="Approximation-error guided token compression")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a token matrix")
    _add_input(p)
    keep = p.add_mutually_exclusive_group(required=True)
    keep.add_argument("--keep", type=int)
    keep.add_argument("--ratio", type=float)
    _add_sampler(p)
    p.add_argument("--ridge", type=_nonneg_float, default=DEFAULT_RIDGE)
    p.add_argument("--merge", choices=MERGE_MODES, default="mean")
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("score", help="per-token approximation errors as csv")
    _add_input(p)
    _add_sampler(p)
    p.add_argument("--ridge", type=_nonneg_float, default=DEFAULT_RIDGE)
    p.add_argument("--output", type=Path, help="default: stdout")

    p = sub.add_parser("sample", help="basis token indices, one per line")
    _add_input(p)
    _add_sampler(p, "--m")
    p.add_argument("--output", type=Path, help="default: stdout")

    p = sub.add_parser("synth", help="generate a synthetic token matrix")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rank", type=int, default=5)
    p.add_argument("--outliers", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--truth", type=Path)

    p = sub.add_parser("eval", help="compare ApET with baseline selectors")
    _add_input(p)
    p.add_argument("--truth", type=Path)
    p.add_argument("--keep", type=_int_list, required=True, help="K or K1,K2,...")
    p.add_argument("--basis-m", type=_int_list, default=[DEFAULT_BASIS_M], help="M or M1,M2,...")
    p.add_argument("--baselines", type=_name_list(BASELINES), default=list(BASELINES))
    p.add_argument("--seeds", type=_seed_range, default=[0])
    p.add_argument("--report", required=True, type=Path)

    p = sub.add_parser("bound", help="entropy lower bound on reconstruction MSE")
    p.add_argument("--h-cond", type=float, required=True, help="conditional entropy in nats")
    p.add_argument("--dim", type=int, required=True)
    return parser


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        io.ensure_parent(path)
        path.write_text(text)


def cmd_compress(args) -> None:
    cfg = ApetConfig(
        keep=args.keep,
        keep_ratio=args.ratio,
        basis_m=args.basis_m,
        sampler=args.sampler,
        dc_percentile=args.dc_percentile,
        ridge_rel=args.ridge,
        merge=args.merge,
        seed=args.seed,
    )
    x = io.read_matrix(args.input, args.format)
    out, report = compress(x, cfg)
    io.ensure_parent(args.output)
    io.write_matrix(args.output, out)
    log.info("timings (ms): %s", report.to_dict(include_timings=True)["timings_ms"])
    if args.report:
        from .plotting import plot_residuals

        io.ensure_parent(args.report)
        io.write_report(args.report, report)
        plot_residuals(report.residuals, report.retained, args.report.with_suffix(".png"))


def _score_basis(args, x):
    return sample_basis(x, args.basis_m, args.sampler, seed=args.seed, dc_percentile=args.dc_percentile)


def cmd_score(args) -> None:
    x = io.read_matrix(args.input, args.format)
    res = fit_basis(x, _score_basis(args, x), args.ridge).residuals
    _emit("index,residual\n" + "".join(f"{i},{r!r}\n" for i, r in enumerate(res.tolist())), args.output)


def cmd_sample(args) -> None:
    x = io.read_matrix(args.input, args.format)
    basis = _score_basis(args, x)
    if basis.degenerate:
        log.warning("all tokens coincide; density peaks fell back to the first %d indices", basis.m)
    _emit("".join(f"{i}\n" for i in basis.indices), args.output)


def cmd_synth(args) -> None:
    try:
        spec = SyntheticSpec(kind=args.kind, n=args.n, d=args.d, rank=args.rank,
                             outliers=args.outliers, sigma=args.sigma, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x, truth = gen_synthetic(spec)
    io.ensure_parent(args.output)
    io.write_matrix(args.output, x)
    if args.truth:
        io.ensure_parent(args.truth)
        io.write_indices(args.truth, [] if truth is None else truth)


def cmd_eval(args) -> None:
    from .plotting import plot_eval

    x = io.read_matrix(args.input, args.format)
    truth = io.read_indices(args.truth) if args.truth else None
    if truth is not None and any(not 0 <= t < x.shape[0] for t in truth):
        raise InvalidBudget("truth indices out of range for the input")
    result = run_grid(x, keeps=args.keep, basis_ms=args.basis_m, baselines=args.baselines,
                      seeds=args.seeds, truth=truth)
    for name, sec in result.timings.items():
        log.info("%s: %.2f ms/run", name, sec * 1e3)
    io.ensure_parent(args.report)
    io.write_report(args.report, result.to_dict())
    args.report.with_suffix(".csv").write_text(result.to_csv())
    plot_eval(result.rows, args.report.with_suffix(".png"), title=args.input.name)


def cmd_bound(args) -> None:
    try:
        value = mse_entropy_bound(args.h_cond, args.dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(repr(value))


COMMANDS = {
    "compress": cmd_compress,
    "score": cmd_score,
    "sample": cmd_sample,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "bound": cmd_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, InvalidBudget) as exc:
        print(f"apet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SingularGram as exc:
        print(f"apet {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ApetError, ValueError, OSError) as exc:
        print(f"apet {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
