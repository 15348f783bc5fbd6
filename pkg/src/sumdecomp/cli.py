"""``sumdecomp`` command-line entry point.

Exit status: 0 on success, 1 on domain errors (bad sets, latents outside the
codec image, I/O failures), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import statistics
import sys

from . import countable as cnt
from .errors import PreconditionError, SumDecompError
from .experiment import (
    TrainConfig,
    critical_points,
    load_config,
    parse_grid,
    read_sweep_csv,
    sweep,
    write_critical_csv,
    write_sweep_csv,
)
from .lab import ElementMap, check_sum_decomposition, max_collision_adversary, random_mlp_map
from .multiset import (
    DomainInterval,
    format_multiset,
    format_number,
    format_vector,
    make_rng,
    parse_multiset,
    parse_numbers,
    random_multiset,
)
from .power_sum import PowerSumCodec
from .psi import LN4, PsiConfig, emit_plot, truncation_for
from .varsize import VarSizeCodec

EXIT_CODES = "exit status: 0 success, 1 domain or I/O error, 2 usage error"

SET_FUNCTIONS = {
    "max": max,
    "min": min,
    "sum": sum,
    "mean": statistics.fmean,
    "median": statistics.median,
}


def _domain(args) -> DomainInterval:
    return DomainInterval(args.lo, args.hi)


def _add_domain(p):
    p.add_argument("--lo", type=float, default=0.0, help="domain lower bound (default 0)")
    p.add_argument("--hi", type=float, default=1.0, help="domain upper bound (default 1)")


def _power_codec(args) -> PowerSumCodec:
    return PowerSumCodec(args.m, _domain(args), root_tol=args.root_tol, scaling=args.scaling)


def _var_codec(args) -> VarSizeCodec:
    return VarSizeCodec(args.m, _domain(args), sentinel=args.k, root_tol=args.root_tol)


def cmd_encode(args):
    codec = _power_codec(args)
    print(format_vector(codec.encode(parse_multiset(args.set, codec.domain))))


def cmd_decode(args):
    print(format_multiset(_power_codec(args).decode(parse_numbers(args.latent))))


def cmd_encode_var(args):
    codec = _var_codec(args)
    print(format_vector(codec.encode(parse_multiset(args.set, codec.domain))))


def cmd_decode_var(args):
    print(format_multiset(_var_codec(args).decode(parse_numbers(args.latent))))


def cmd_countable(args):
    u = cnt.CountableUniverse(args.universe)
    if args.action == "encode":
        print(cnt.format_rational(cnt.base4_encode(u, cnt.parse_indices(_need(args.indices, "--indices")))))
    elif args.action == "decode":
        idx = cnt.base4_decode(u, cnt.parse_rational(_need(args.value, "--value")))
        print(",".join(str(i) for i in sorted(idx)))
    elif args.action == "prime-encode":
        print(cnt.prime_encode(u, cnt.parse_indices(_need(args.indices, "--indices"))))
    elif args.action == "prime-decode":
        try:
            n = int(_need(args.value, "--value"))
        except ValueError as exc:
            raise PreconditionError(f"--value must be an integer, got {args.value!r}") from exc
        print(",".join(str(i) for i in cnt.prime_decode(u, n)))


def _need(value, flag):
    if value is None:
        raise PreconditionError(f"{flag} is required for this action")
    return value


def _parse_phi(choice: str, n: int) -> ElementMap:
    kind, _, arg = choice.partition(":")
    if kind == "random":
        try:
            seed = int(arg)
        except ValueError as exc:
            raise PreconditionError(f"bad phi seed in {choice!r}") from exc
        return random_mlp_map(n, seed)
    if kind == "powers":
        return ElementMap(n, lambda x: [x ** (q + 1) for q in range(n)])
    if kind == "signed":
        return ElementMap(n, lambda x: [x if q % 2 == 0 else -x for q in range(n)])
    raise PreconditionError(f"unknown phi {choice!r}; use random:SEED, powers or signed")


def cmd_adversary(args):
    phi = _parse_phi(args.phi, args.n)
    _, report = max_collision_adversary(phi, parse_numbers(args.x), args.m)
    rows = report.rows()
    width = max(len(r[0]) for r in rows)
    left_w = max(len(r[1]) for r in rows)
    print(f"{'':{width}}  {'x':{left_w}} | x_tilde")
    for name, left, right in rows:
        print(f"{name:{width}}  {left:{left_w}} | {right}")
    print(f"{'certified':{width}}  maxima equal: {report.maxima_equal}, sums differ: {report.sums_differ}")
    if not report.certified:
        return 1


def cmd_check_decomp(args):
    f = SET_FUNCTIONS[args.f]
    if args.variable:
        codec = _var_codec(args)
        rng = make_rng(args.seed)
        samples = [random_multiset(rng, int(rng.integers(0, args.m + 1)), codec.domain) for _ in range(args.samples)]
    else:
        codec = _power_codec(args)
        rng = make_rng(args.seed)
        samples = [random_multiset(rng, args.m, codec.domain) for _ in range(args.samples)]

    def guarded(X):
        return f(X) if len(X) else codec.domain.lo

    rho = codec.build_rho(guarded)
    report = check_sum_decomposition(codec.element_map(), rho, guarded, samples, args.tol)
    print(f"samples,{len(samples)}")
    print(f"worst_residual,{format_number(report.worst_residual)}")
    print(f"failures,{len(report.failures)}")
    print(f"passed,{str(report.passed).lower()}")
    return 0 if report.passed else 1


def cmd_psi(args):
    cfg = PsiConfig(scale_A=args.scale, truncation_n=truncation_for(args.tol))
    svg = args.svg if args.svg else False
    emit_plot(cfg, args.resolution, args.out, svg=svg, tol=args.tol)
    print(args.out)


def cmd_experiment(args):
    base = load_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        base = TrainConfig(**{**base.__dict__, "seed": args.seed})
    result = sweep(parse_grid(args.grid), args.repeats, base, workers=args.workers)
    write_sweep_csv(result, args.out)
    for M, N, seed, err in result.failures:
        print(f"run failed: M={M} N={N} seed={seed}: {err}", file=sys.stderr)
    if args.svg:
        from .plotting import plot_sweep

        plot_sweep(result.cells(), args.svg)
    print(args.out)
    return 1 if result.failures else 0


def cmd_critical_points(args):
    points = critical_points(read_sweep_csv(args.inp))
    write_critical_csv(points, args.out)
    if args.svg:
        from .plotting import plot_critical_points

        plot_critical_points(points, args.svg)
    print(args.out)


def _subcommand(sub, name, help):
    return sub.add_parser(name, help=help, description=help, epilog=EXIT_CODES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumdecomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def codec_parser(name, help_, fixed=True):
        p = _subcommand(sub, name, help_)
        p.add_argument("--m", type=int, required=True, help="set size (maximum size for variable codecs)")
        _add_domain(p)
        p.add_argument("--root-tol", type=float, default=1e-9)
        if fixed:
            # latents cross the CLI as 12-digit text, so print plain power sums by default
            p.add_argument(
                "--scaling",
                choices=("unit", "symmetric"),
                default="unit",
                help="unit: power sums of the values rescaled to [0,1] (default); "
                "symmetric: rescaled to [-1,1], better conditioned for M > 6",
            )
        else:
            p.add_argument("--k", type=float, default=None, help="sentinel (default lo - 1)")
        return p

    p = codec_parser("encode", "power sums of a size-M set")
    p.add_argument("--set", required=True, help='e.g. "{0.25,0.75}"')
    p.set_defaults(func=cmd_encode)
    p = codec_parser("decode", "recover a size-M set from its power sums")
    p.add_argument("--latent", required=True, help='e.g. "1.0,0.625"; use --latent=... if it starts with -')
    p.set_defaults(func=cmd_decode)
    p = codec_parser("encode-var", "sentinel-shifted power sums of a set of size <= M", fixed=False)
    p.add_argument("--set", required=True)
    p.set_defaults(func=cmd_encode_var)
    p = codec_parser("decode-var", "recover a set of size <= M", fixed=False)
    p.add_argument("--latent", required=True, help="use --latent=... if it starts with -")
    p.set_defaults(func=cmd_decode_var)

    p = _subcommand(sub, "countable", help="exact base-4 and prime encodings over an indexed universe")
    p.add_argument("action", choices=("encode", "decode", "prime-encode", "prime-decode"))
    p.add_argument("--universe", type=int, required=True, help="number of indices U")
    p.add_argument("--indices", help='e.g. "0,2"')
    p.add_argument("--value", help="rational num/den (decode) or integer (prime-decode)")
    p.set_defaults(func=cmd_countable)

    p = _subcommand(sub, "adversary", help="same coordinate maxima, different sum (N < M)")
    p.add_argument("--n", type=int, required=True, help="latent dimension N")
    p.add_argument("--m", type=int, required=True, help="set size M")
    p.add_argument("--phi", default="random:0", help="random:SEED, powers or signed")
    p.add_argument("--x", required=True, help='distinct elements, e.g. "1,2,3"')
    p.set_defaults(func=cmd_adversary)

    p = codec_parser("check-decomp", "check rho(sum phi(x)) == f(X) on random sets")
    p.add_argument("--f", choices=sorted(SET_FUNCTIONS), default="max")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--variable", action="store_true", help="use the variable-size codec (sizes 0..M)")
    p.add_argument("--k", type=float, default=None, help="sentinel for --variable")
    p.set_defaults(func=cmd_check_decomp)

    p = _subcommand(sub, "psi", help="tabulate and plot the rational-continuous function")
    p.add_argument("--resolution", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--scale", type=float, default=LN4, help="domain length A (default ln 4)")
    p.add_argument("--out", required=True, help="CSV path (columns x,psi)")
    p.add_argument("--svg", help="SVG figure path")
    p.set_defaults(func=cmd_psi)

    p = _subcommand(sub, "experiment", help="latent-dimension sweep for median regression")
    p.add_argument("--grid", default="M=4,8,16;N=1..24", help='e.g. "M=4,8,16;N=1..24"')
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", required=True, help="CSV path (columns M,N,seed,rmse_final)")
    p.add_argument("--svg", help="RMSE-vs-N figure path")
    p.add_argument("--config", help="key=value file of training settings")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = _subcommand(sub, "critical-points", help="smallest N within 10%% of the per-M minimum")
    p.add_argument("--in", dest="inp", required=True, help="sweep CSV")
    p.add_argument("--out", required=True, help="CSV path (columns M,critical_N,min_rmse,threshold)")
    p.add_argument("--svg", help="critical-point figure path")
    p.set_defaults(func=cmd_critical_points)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except SumDecompError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
