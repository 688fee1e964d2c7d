"""Benchmark harness: mode sweeps over sequence length, CSV reporting.

Timing is wall-clock (median of R repeats after fixed warm-ups, strictly
sequential measurements). Before anything is timed, every requested
streaming mode is checked against its reference counterpart on the actual
sweep inputs; timing only starts once that pre-check passes. Modeled
operation counts come from the closed-form cost model and are independent
of the measurements.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from statistics import median

import numpy as np

from .costmodel import BENCH_MODES, modeled_cost
from .errors import CheckFailure, ConfigError, UsageError
from .layer import MODES, REFERENCE_COUNTERPART, AttentionConfig, dual_branch_attention
from .numerics import relative_error
from .reference import vanilla_attention
from .tensor import Tensor3

CSV_HEADER = "mode,B,H,N,D,window_len,wall_ns,modeled_mults,modeled_exps"

MODE_PAIR_TOLERANCE = 1e-10


@dataclass(frozen=True)
class BenchRecord:
    """One benchmark measurement row."""

    mode: str
    b: int
    h: int
    n: int
    d: int
    window_len: int
    wall_ns: int
    modeled_mults: int
    modeled_exps: int

    def csv_row(self) -> str:
        return (
            f"{self.mode},{self.b},{self.h},{self.n},{self.d},"
            f"{self.window_len},{self.wall_ns},{self.modeled_mults},{self.modeled_exps}"
        )


def _sweep_inputs(b: int, h: int, n: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    return tuple(rng.uniform(-1.0, 1.0, size=(b, h, n, d)) for _ in range(3))


def _make_runner(mode: str, cfg_base: AttentionConfig, q, k, v):
    if mode == "vanilla":
        b, h, n, d = q.shape
        qt = Tensor3(q.reshape(b * h, n, d))
        kt = Tensor3(k.reshape(b * h, n, d))
        vt = Tensor3(v.reshape(b * h, n, d))
        return lambda: vanilla_attention(qt, kt, vt)
    cfg = AttentionConfig(
        mode=mode,
        window_len=cfg_base.window_len,
        tile_len=cfg_base.tile_len,
        seq_tile=cfg_base.seq_tile,
        local_fraction=cfg_base.local_fraction,
        precision=cfg_base.precision,
    )
    return lambda: dual_branch_attention(q, k, v, cfg)


def _precheck_mode(mode: str, cfg_base: AttentionConfig, q, k, v) -> None:
    """Streaming output must match its reference counterpart before timing."""
    if mode == "vanilla" or REFERENCE_COUNTERPART[mode] == mode:
        return
    out = _make_runner(mode, cfg_base, q, k, v)()
    ref = _make_runner(REFERENCE_COUNTERPART[mode], cfg_base, q, k, v)()
    err = relative_error(out, ref)
    if not err <= MODE_PAIR_TOLERANCE:
        b, h, n, d = q.shape
        raise CheckFailure(
            f"pre-check failed: mode {mode} differs from {REFERENCE_COUNTERPART[mode]} "
            f"by {err:.3e} (> {MODE_PAIR_TOLERANCE}) at B={b} H={h} N={n} D={d}"
        )


def _time_runner(runner, warmups: int, repeats: int) -> int:
    for _ in range(warmups):
        runner()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter_ns()
        runner()
        samples.append(time.perf_counter_ns() - start)
    return max(1, int(median(samples)))


def run_sweep(
    modes: list[str],
    seq_lens: list[int],
    *,
    batch: int,
    heads: int,
    dim: int,
    window_len: int,
    tile_len: int | None = None,
    seq_tile: int | None = None,
    repeats: int = 9,
    warmups: int = 3,
    threads: int | None = None,
    seed: int = 0,
) -> list[BenchRecord]:
    """Measure every (mode, N) pair and return records in request order.

    ``threads`` pins the BLAS worker count for the duration of the sweep so
    measurements are reproducible across machines with different core
    counts.
    """
    for mode in modes:
        if mode not in BENCH_MODES:
            raise UsageError(f"unknown mode {mode!r}, valid modes: {', '.join(BENCH_MODES)}")
    if not seq_lens:
        raise UsageError("no sequence lengths requested")
    if repeats < 1 or warmups < 0:
        raise UsageError(f"repeats must be >= 1 and warmups >= 0, got {repeats}, {warmups}")

    cfg_base = AttentionConfig(
        mode=MODES[0], window_len=window_len, tile_len=tile_len, seq_tile=seq_tile
    )
    needs_windows = [m for m in modes if m not in ("vanilla", "global_only_streaming", "global_only_reference")]
    for n in seq_lens:
        if needs_windows and n % window_len != 0:
            raise ConfigError(f"sequence length {n} is not divisible by window_len {window_len}")

    if threads is not None:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            return _run_sweep_inner(modes, seq_lens, cfg_base, batch, heads, dim, window_len, repeats, warmups, seed)
    return _run_sweep_inner(modes, seq_lens, cfg_base, batch, heads, dim, window_len, repeats, warmups, seed)


def _run_sweep_inner(modes, seq_lens, cfg_base, batch, heads, dim, window_len, repeats, warmups, seed):
    inputs = {n: _sweep_inputs(batch, heads, n, dim, seed + n) for n in seq_lens}

    # correctness gate first, timing second
    for mode in modes:
        for n in seq_lens:
            _precheck_mode(mode, cfg_base, *inputs[n])

    records = []
    for mode in modes:
        for n in seq_lens:
            runner = _make_runner(mode, cfg_base, *inputs[n])
            wall_ns = _time_runner(runner, warmups, repeats)
            mults, exps = modeled_cost(
                mode, batch, heads, n, dim,
                window_len=window_len, local_fraction=cfg_base.local_fraction,
            )
            records.append(
                BenchRecord(
                    mode=mode, b=batch, h=heads, n=n, d=dim, window_len=window_len,
                    wall_ns=wall_ns, modeled_mults=mults, modeled_exps=exps,
                )
            )
    return records


def emit_csv(records: list[BenchRecord], path) -> None:
    """Write records as CSV with LF endings; refuses an empty record list."""
    if not records:
        raise UsageError("no records to emit")
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def read_csv(path) -> list[BenchRecord]:
    """Parse a CSV written by :func:`emit_csv` back into records."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise UsageError(f"unexpected CSV header in {path}: {header!r}")
        records = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            mode, *nums = line.split(",")
            b, h, n, d, window_len, wall_ns, mults, exps = (int(x) for x in nums)
            records.append(BenchRecord(mode, b, h, n, d, window_len, wall_ns, mults, exps))
    return records


def loglog_exponent(ns: list[int], wall_ns: list[int]) -> float:
    """Least-squares slope of log(wall time) against log(N)."""
    if len(ns) < 2:
        raise UsageError("need at least two points for a growth exponent")
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(wall_ns, dtype=np.float64))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
