"""Analytical operation counts per attention mode.

Counts multiplies and exponentials only; multiply count is the cycle proxy
for a GEMM-centric design, adds are not modeled. Closed forms:

    vanilla        mults = B*H * 2*N^2*D      exps = B*H * N^2
    local branch   mults = B*H_l * T * 2*N_w^2*D,  T = N/N_w
                   exps  = B*H_l * T * N_w^2
    global branch  mults = B*H_g * 2*N*D^2
                   exps  = B*H_g * 2*N*D   (feature softmax + sequence softmax)

The quadratic/linear separation these imply is the portable claim; absolute
hardware cycle counts are not modeled.
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .layer import MODES

BENCH_MODES = MODES + ("vanilla",)


def vanilla_cost(b: int, h: int, n: int, d: int) -> tuple[int, int]:
    return b * h * 2 * n * n * d, b * h * n * n


def local_branch_cost(b: int, h_local: int, n: int, d: int, window_len: int) -> tuple[int, int]:
    if window_len < 1 or n % window_len != 0:
        raise ConfigError(f"sequence length {n} is not divisible by window_len {window_len}")
    t = n // window_len
    return b * h_local * t * 2 * window_len * window_len * d, b * h_local * t * window_len * window_len


def global_branch_cost(b: int, h_global: int, n: int, d: int) -> tuple[int, int]:
    return b * h_global * 2 * n * d * d, b * h_global * 2 * n * d


def split_heads(h: int, local_fraction: float = 0.5) -> tuple[int, int]:
    """Round-half-up head split used by the mix modes."""
    h_local = math.floor(local_fraction * h + 0.5)
    if h_local < 1 or h - h_local < 1:
        raise ConfigError(f"mix modes need nonempty head sets, fraction {local_fraction} of {h} heads gives {h_local} local")
    return h_local, h - h_local


def modeled_cost(
    mode: str,
    b: int,
    h: int,
    n: int,
    d: int,
    window_len: int | None = None,
    local_fraction: float = 0.5,
) -> tuple[int, int]:
    """Closed-form (multiplies, exponentials) for one mode at one shape.

    Streaming and reference variants of a mode compute the same products,
    so they share a count.
    """
    if mode not in BENCH_MODES:
        raise ConfigError(f"unknown mode {mode!r}, valid modes: {', '.join(BENCH_MODES)}")
    if min(b, h, n, d) < 1:
        raise ConfigError(f"shape counts must be positive, got B={b} H={h} N={n} D={d}")
    if mode == "vanilla":
        return vanilla_cost(b, h, n, d)
    if mode in ("global_only_streaming", "global_only_reference"):
        return global_branch_cost(b, h, n, d)
    if window_len is None:
        raise ConfigError(f"mode {mode!r} requires window_len")
    h_local, h_global = split_heads(h, local_fraction)
    lm, le = local_branch_cost(b, h_local, n, d, window_len)
    gm, ge = global_branch_cost(b, h_global, n, d)
    return lm + gm, le + ge
