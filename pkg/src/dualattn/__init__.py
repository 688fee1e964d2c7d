"""Dual-branch attention: block-local streaming softmax plus global linear
attention, with brute-force oracles, a fixed-point evaluation mode, and a
benchmark harness."""

from .bench import BenchRecord, emit_csv, loglog_exponent, read_csv, run_sweep
from .costmodel import BENCH_MODES, modeled_cost
from .errors import CheckFailure, ConfigError, ShapeError, UsageError
from .global_attn import (
    ContentMatrix,
    content_matrix_direct,
    global_content_matrix_streaming,
    global_linear_attention,
)
from .layer import (
    MODES,
    AttentionConfig,
    dual_branch_attention,
    parse_config_file,
    split_streams,
)
from .local import BlockedTensors, blockify, deblockify, local_block_attention, local_window_attention
from .numerics import FixedPointFormat, relative_error
from .quantsim import ErrorReport, fixed_attention_error, quantize
from .reference import linear_attention_direct, vanilla_attention
from .tensor import (
    Matrix,
    Tensor3,
    dump_fixture,
    gemm,
    load_fixture,
    seeded_random_qkv,
    seeded_random_tensor,
    softmax_feat,
    softmax_seq,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionConfig",
    "BENCH_MODES",
    "BenchRecord",
    "BlockedTensors",
    "CheckFailure",
    "ConfigError",
    "ContentMatrix",
    "ErrorReport",
    "FixedPointFormat",
    "MODES",
    "Matrix",
    "ShapeError",
    "Tensor3",
    "UsageError",
    "blockify",
    "content_matrix_direct",
    "deblockify",
    "dual_branch_attention",
    "dump_fixture",
    "emit_csv",
    "fixed_attention_error",
    "gemm",
    "global_content_matrix_streaming",
    "global_linear_attention",
    "linear_attention_direct",
    "load_fixture",
    "local_block_attention",
    "local_window_attention",
    "loglog_exponent",
    "modeled_cost",
    "parse_config_file",
    "quantize",
    "read_csv",
    "relative_error",
    "run_sweep",
    "seeded_random_qkv",
    "seeded_random_tensor",
    "softmax_feat",
    "softmax_seq",
    "split_streams",
    "vanilla_attention",
]
