"""Randomized streaming-vs-reference equivalence sweep.

Each trial draws a shape and inputs from its own seed, runs every streaming
mode next to its reference counterpart, and requires agreement within the
mode-pair tolerance. Used by the CLI ``verify`` command and the acceptance
suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bench import MODE_PAIR_TOLERANCE
from .layer import REFERENCE_COUNTERPART, AttentionConfig, dual_branch_attention
from .numerics import relative_error

STREAMING_PAIRS = tuple(
    (mode, ref) for mode, ref in REFERENCE_COUNTERPART.items() if mode != ref
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _draw_shape(rng: np.random.Generator, max_n: int, max_b: int, max_h: int, max_d: int):
    window_len = int(rng.choice([w for w in (2, 4, 8, 16) if w <= max_n]))
    t = int(rng.integers(1, max(1, max_n // window_len) + 1))
    n = window_len * t
    b = int(rng.integers(1, max_b + 1))
    h = int(rng.integers(2, max_h + 1))
    d = int(rng.choice([x for x in (4, 8, 16, 32, 64) if x <= max_d]))
    tile_len = int(rng.integers(1, window_len + 1))
    seq_tile = int(rng.integers(1, n + 1))
    return b, h, n, d, window_len, tile_len, seq_tile


def equivalence_trial(seed: int, max_n: int = 256, max_b: int = 4, max_h: int = 8, max_d: int = 64) -> CheckResult:
    """One seeded trial over all streaming/reference mode pairs."""
    rng = np.random.default_rng(seed)
    b, h, n, d, window_len, tile_len, seq_tile = _draw_shape(rng, max_n, max_b, max_h, max_d)
    q, k, v = (rng.uniform(-1.0, 1.0, size=(b, h, n, d)) for _ in range(3))

    worst = 0.0
    worst_pair = ""
    for mode, ref_mode in STREAMING_PAIRS:
        cfg = AttentionConfig(mode=mode, window_len=window_len, tile_len=tile_len, seq_tile=seq_tile)
        out = dual_branch_attention(q, k, v, cfg)
        ref = dual_branch_attention(q, k, v, cfg.reference_counterpart())
        err = relative_error(out, ref)
        if err > worst:
            worst, worst_pair = err, f"{mode} vs {ref_mode}"

    shape = f"B={b} H={h} N={n} D={d} W={window_len} tile={tile_len} seq_tile={seq_tile}"
    passed = worst <= MODE_PAIR_TOLERANCE
    return CheckResult(
        name=f"seed {seed}",
        passed=passed,
        detail=f"{shape}: worst {worst:.3e} ({worst_pair or 'n/a'}), tolerance {MODE_PAIR_TOLERANCE}",
    )


def equivalence_suite(
    trials: int,
    max_n: int = 256,
    *,
    base_seed: int = 0,
    max_b: int = 4,
    max_h: int = 8,
    max_d: int = 64,
) -> list[CheckResult]:
    """Run ``trials`` independent seeded equivalence trials."""
    return [
        equivalence_trial(base_seed + i, max_n=max_n, max_b=max_b, max_h=max_h, max_d=max_d)
        for i in range(trials)
    ]
