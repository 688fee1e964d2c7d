"""Fixed-point evaluation of the attention paths.

Models the quantized deployment regime: every matrix-product operand and
every accumulator exit is rounded onto the Qm.n grid, while products
accumulate in wide (double) precision and softmax itself stays in floating
point with only its inputs and outputs on the grid. Saturations are silent
but counted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .layer import AttentionConfig, dual_branch_attention
from .numerics import FixedPointFormat, GridQuantizer, quantize_array
from .tensor import Tensor3

ERROR_REPORT_CSV_HEADER = "total_bits,frac_bits,max_abs,mean_abs,sat_count"


def quantize(x: Tensor3, fmt: FixedPointFormat) -> Tensor3:
    """Round every value onto the fixed-point grid, saturating at the ends.

    In-range values move by at most step/2 = 2**(-frac_bits - 1), exactly.
    """
    q, _ = quantize_array(x.data, fmt)
    return Tensor3(q)


@dataclass(frozen=True)
class ErrorReport:
    """Error statistics of a fixed-point attention run vs the double reference."""

    total_bits: int
    frac_bits: int
    max_abs: float
    mean_abs: float
    sat_count: int

    def csv_row(self) -> str:
        return f"{self.total_bits},{self.frac_bits},{self.max_abs!r},{self.mean_abs!r},{self.sat_count}"


def fixed_attention_error(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    cfg: AttentionConfig,
    fmt: FixedPointFormat,
) -> ErrorReport:
    """Run the layer with grid arithmetic and compare against the
    double-precision reference-mode output."""
    quantizer = GridQuantizer(fmt)
    fixed_out = dual_branch_attention(q, k, v, replace(cfg, precision=fmt), quantizer=quantizer)
    ref_out = dual_branch_attention(q, k, v, cfg.reference_counterpart())
    diff = np.abs(fixed_out - ref_out)
    return ErrorReport(
        total_bits=fmt.total_bits,
        frac_bits=fmt.frac_bits,
        max_abs=float(diff.max()),
        mean_abs=float(diff.mean()),
        sat_count=quantizer.sat_count,
    )
