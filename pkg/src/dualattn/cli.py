"""Command-line interface.

Subcommands:

    bench         sweep attention modes over sequence lengths, emit CSV
    verify        randomized streaming-vs-reference equivalence sweep
    quant         fixed-point error sweep on the standard fixture
    dump-fixture  write a seeded random tensor in the text fixture format
    load-fixture  read a fixture file and print a summary

Exit codes: 0 success, 2 usage error, 3 config/shape error, 4 failed
correctness check, 5 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import CSV_HEADER, emit_csv, run_sweep
from .costmodel import BENCH_MODES
from .errors import CheckFailure, ConfigError, ShapeError, UsageError
from .layer import AttentionConfig, parse_config_file
from .numerics import FixedPointFormat
from .quantsim import ERROR_REPORT_CSV_HEADER, fixed_attention_error
from .tensor import dump_fixture, load_fixture, seeded_random_tensor
from .verify import equivalence_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECK = 4
EXIT_IO = 5

# Standard fixture shape for the quantization sweep.
QUANT_FIXTURE = dict(seed=23, batch=2, heads=4, seq=32, dim=16, window=8)


def _csv_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualattn", description="Dual-branch attention benchmark and verification tool.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="sweep modes over sequence lengths and write CSV")
    p_bench.add_argument("--modes", required=True, help=f"comma-separated subset of: {','.join(BENCH_MODES)}")
    p_bench.add_argument("--batch", type=int, default=1)
    p_bench.add_argument("--heads", type=int, default=2)
    p_bench.add_argument("--dim", type=int, default=64)
    p_bench.add_argument("--window", type=int, default=8)
    p_bench.add_argument("--tile", type=int, default=None, help="local-branch tile length (default: one tile per window)")
    p_bench.add_argument("--seq-tile", type=int, default=None, help="global-branch sequence block length")
    p_bench.add_argument("--seq-lens", required=True, help="comma-separated sequence lengths")
    p_bench.add_argument("--repeats", type=int, default=9)
    p_bench.add_argument("--warmups", type=int, default=3)
    p_bench.add_argument("--threads", type=int, default=None, help="pin BLAS worker count")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--config", default=None, help="flat key=value file with layer defaults")

    p_verify = sub.add_parser("verify", help="run the oracle-equivalence suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--max-n", type=int, default=256)
    p_verify.add_argument("--trials", type=int, default=20)

    p_quant = sub.add_parser("quant", help="fixed-point error sweep on the standard fixture")
    p_quant.add_argument("--format", required=True, help="comma-separated Qm.n formats, e.g. Q1.6,Q3.12")
    p_quant.add_argument("--mode", default="mix_streaming")
    p_quant.add_argument("--seed", type=int, default=QUANT_FIXTURE["seed"])
    p_quant.add_argument("--out", required=True)

    p_dump = sub.add_parser("dump-fixture", help="write a seeded random tensor fixture")
    p_dump.add_argument("--seed", type=int, required=True)
    p_dump.add_argument("--batch", type=int, required=True)
    p_dump.add_argument("--seq", type=int, required=True)
    p_dump.add_argument("--dim", type=int, required=True)
    p_dump.add_argument("--out", required=True)

    p_load = sub.add_parser("load-fixture", help="read a fixture file and print a summary")
    p_load.add_argument("path")

    return parser


def _cmd_bench(args) -> int:
    modes = [m for m in args.modes.split(",") if m]
    tile, seq_tile, window = args.tile, args.seq_tile, args.window
    if args.config is not None:
        cfg = parse_config_file(args.config)
        if cfg.window_len is not None and args.window == 8:
            window = cfg.window_len
        tile = tile if tile is not None else cfg.tile_len
        seq_tile = seq_tile if seq_tile is not None else cfg.seq_tile
    records = run_sweep(
        modes,
        _csv_ints(args.seq_lens),
        batch=args.batch,
        heads=args.heads,
        dim=args.dim,
        window_len=window,
        tile_len=tile,
        seq_tile=seq_tile,
        repeats=args.repeats,
        warmups=args.warmups,
        threads=args.threads,
        seed=args.seed,
    )
    emit_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out} ({CSV_HEADER})")
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = equivalence_suite(args.trials, max_n=args.max_n, base_seed=args.seed)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} equivalence trials passed")
    if failed:
        raise CheckFailure(f"{failed} equivalence trials failed")
    return EXIT_OK


def _cmd_quant(args) -> int:
    formats = [FixedPointFormat.parse(tok) for tok in args.format.split(",") if tok]
    if not formats:
        raise UsageError("no fixed-point formats given")
    fx = QUANT_FIXTURE
    rng = np.random.default_rng(args.seed)
    q, k, v = (rng.uniform(-1.0, 1.0, size=(fx["batch"], fx["heads"], fx["seq"], fx["dim"])) for _ in range(3))
    cfg = AttentionConfig(mode=args.mode, window_len=fx["window"])
    lines = [ERROR_REPORT_CSV_HEADER]
    for fmt in formats:
        report = fixed_attention_error(q, k, v, cfg, fmt)
        lines.append(report.csv_row())
        print(f"{fmt.label}: max_abs={report.max_abs:.3e} mean_abs={report.mean_abs:.3e} sat={report.sat_count}")
    with open(args.out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_dump_fixture(args) -> int:
    tensor = seeded_random_tensor((args.batch, args.seq, args.dim), args.seed)
    dump_fixture(tensor, args.out)
    print(f"wrote fixture {args.out}: B={args.batch} N={args.seq} D={args.dim}")
    return EXIT_OK


def _cmd_load_fixture(args) -> int:
    tensor = load_fixture(args.path)
    b, n, d = tensor.dims
    data = tensor.data
    print(f"{args.path}: B={b} N={n} D={d} min={data.min():.6g} max={data.max():.6g} mean={data.mean():.6g}")
    return EXIT_OK


_COMMANDS = {
    "bench": _cmd_bench,
    "verify": _cmd_verify,
    "quant": _cmd_quant,
    "dump-fixture": _cmd_dump_fixture,
    "load-fixture": _cmd_load_fixture,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
