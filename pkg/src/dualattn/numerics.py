"""Precision handling: float modes and signed fixed-point grids.

The fixed-point grid models saturating Qm.n arithmetic: values are rounded
to the nearest multiple of 2**-frac_bits (ties to even) and clamped to the
two's-complement range of ``total_bits`` bits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_QFMT_RE = re.compile(r"^[Qq](\d+)\.(\d+)$")


@dataclass(frozen=True)
class FixedPointFormat:
    """Signed fixed-point format with saturation and round-to-nearest-even.

    total_bits counts the sign bit, so Q1.6 is an 8-bit format
    (1 integer bit + 6 fraction bits + sign).
    """

    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.total_bits < 2:
            raise ConfigError(f"total_bits must be >= 2, got {self.total_bits}")
        if not 0 <= self.frac_bits < self.total_bits:
            raise ConfigError(
                f"frac_bits must satisfy 0 <= frac_bits < total_bits, "
                f"got frac_bits={self.frac_bits}, total_bits={self.total_bits}"
            )

    @classmethod
    def parse(cls, label: str) -> "FixedPointFormat":
        """Parse a 'Qm.n' label, e.g. Q3.12 -> 16 bits with 12 fraction bits."""
        m = _QFMT_RE.match(label.strip())
        if m is None:
            raise ConfigError(f"invalid fixed-point format {label!r}, expected Qm.n")
        int_bits, frac_bits = int(m.group(1)), int(m.group(2))
        return cls(total_bits=int_bits + frac_bits + 1, frac_bits=frac_bits)

    @property
    def label(self) -> str:
        return f"Q{self.total_bits - self.frac_bits - 1}.{self.frac_bits}"

    @property
    def step(self) -> float:
        """Grid spacing 2**-frac_bits."""
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return -(2 ** (self.total_bits - 1)) * self.step

    @property
    def max_value(self) -> float:
        return (2 ** (self.total_bits - 1) - 1) * self.step


def quantize_array(x: np.ndarray, fmt: FixedPointFormat) -> tuple[np.ndarray, int]:
    """Round ``x`` onto the fixed-point grid, saturating out-of-range values.

    Returns the quantized array (float64) and the number of saturated
    entries. Division and multiplication by the power-of-two step are exact,
    so the half-step error bound |x - q| <= step/2 holds exactly for
    in-range inputs.
    """
    lo = -(2 ** (fmt.total_bits - 1))
    hi = 2 ** (fmt.total_bits - 1) - 1
    ticks = np.rint(np.asarray(x, dtype=np.float64) / fmt.step)
    saturated = int(np.count_nonzero((ticks < lo) | (ticks > hi)))
    return np.clip(ticks, lo, hi) * fmt.step, saturated


class GridQuantizer:
    """Callable quantization hook that accumulates a saturation count.

    Attention paths apply the hook at their operand and accumulator-exit
    seams; the running ``sat_count`` feeds the quantized-evaluation report.
    """

    def __init__(self, fmt: FixedPointFormat):
        self.fmt = fmt
        self.sat_count = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        q, saturated = quantize_array(x, self.fmt)
        self.sat_count += saturated
        return q


def resolve_precision(precision) -> tuple[np.dtype, FixedPointFormat | None]:
    """Map a config precision ('double', 'single', or a format) to
    (streaming dtype, optional grid)."""
    if isinstance(precision, FixedPointFormat):
        # Grid arithmetic simulates wide accumulators, so the float carrier
        # stays double.
        return np.dtype(np.float64), precision
    if precision == "double":
        return np.dtype(np.float64), None
    if precision == "single":
        return np.dtype(np.float32), None
    if isinstance(precision, str) and _QFMT_RE.match(precision.strip()):
        return np.dtype(np.float64), FixedPointFormat.parse(precision)
    raise ConfigError(f"unknown precision {precision!r}")


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Relative Frobenius-norm error ||a - e|| / ||e|| (0 when both are 0)."""
    a = np.asarray(actual, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    denom = float(np.linalg.norm(e.ravel()))
    diff = float(np.linalg.norm((a - e).ravel()))
    if denom == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return diff / denom
