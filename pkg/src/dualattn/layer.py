"""Dual-branch attention layer: split heads, run branches, fuse by concat.

Heads [0, H_local) go to the windowed local branch, the rest to the global
linear branch; both branches see the full sequence. Branch outputs are
concatenated back in the original head order (fusion is parameter-free).
Five modes pair streaming and reference implementations per branch:

    mix_streaming              local streaming  + global streaming
    mix_reference              local reference  + global reference
    local_ref_global_streaming local reference  + global streaming
    global_only_streaming      all heads global, streaming
    global_only_reference      all heads global, reference

Every streaming mode has a reference counterpart producing the same values
(within tolerance); reference branches always run in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np

from .errors import ConfigError, ShapeError
from .global_attn import global_linear_attention
from .local import local_block_attention, local_window_attention
from .numerics import FixedPointFormat, GridQuantizer, resolve_precision
from .reference import linear_attention_direct
from .tensor import Tensor3, wrap_tensor3

MODES = (
    "mix_streaming",
    "mix_reference",
    "local_ref_global_streaming",
    "global_only_streaming",
    "global_only_reference",
)

# Reference-mode counterpart used for equivalence checks and as the
# double-precision baseline of the quantization error report.
REFERENCE_COUNTERPART = {
    "mix_streaming": "mix_reference",
    "mix_reference": "mix_reference",
    "local_ref_global_streaming": "mix_reference",
    "global_only_streaming": "global_only_reference",
    "global_only_reference": "global_only_reference",
}

_LOCAL_STREAMING_MODES = frozenset({"mix_streaming"})
_GLOBAL_STREAMING_MODES = frozenset({"mix_streaming", "local_ref_global_streaming", "global_only_streaming"})
_DEFAULT_SEQ_TILE_CAP = 64


@dataclass(frozen=True)
class AttentionConfig:
    """Layer configuration.

    window_len / tile_len drive the local branch, seq_tile the global
    streaming loop. tile_len defaults to window_len (one tile per window);
    seq_tile defaults to min(64, N). local_fraction is the share of heads
    routed to the local branch in mix modes (round-half-up).
    """

    mode: str = "mix_streaming"
    window_len: int | None = None
    tile_len: int | None = None
    seq_tile: int | None = None
    local_fraction: float = 0.5
    precision: Union[str, FixedPointFormat] = "double"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}, valid modes: {', '.join(MODES)}")
        if not 0.0 <= self.local_fraction <= 1.0:
            raise ConfigError(f"local_fraction must be in [0, 1], got {self.local_fraction}")
        resolve_precision(self.precision)  # fail fast on bad precision labels

    @property
    def has_local_branch(self) -> bool:
        return self.mode in ("mix_streaming", "mix_reference", "local_ref_global_streaming")

    def local_head_count(self, heads: int) -> int:
        """Heads routed local: round-half-up of fraction * H, 0 in global-only modes."""
        if not self.has_local_branch:
            return 0
        h_local = math.floor(self.local_fraction * heads + 0.5)
        if h_local < 1 or heads - h_local < 1:
            raise ConfigError(
                f"mode {self.mode!r} needs nonempty local and global head sets; "
                f"fraction {self.local_fraction} of {heads} heads gives {h_local} local"
            )
        return h_local

    def resolved_tile_len(self) -> int:
        if self.window_len is None:
            raise ConfigError(f"mode {self.mode!r} requires window_len")
        return self.window_len if self.tile_len is None else self.tile_len

    def resolved_seq_tile(self, n: int) -> int:
        return min(_DEFAULT_SEQ_TILE_CAP, n) if self.seq_tile is None else self.seq_tile

    def reference_counterpart(self) -> "AttentionConfig":
        return replace(self, mode=REFERENCE_COUNTERPART[self.mode], precision="double")


class StreamSplit(NamedTuple):
    local: tuple[Tensor3, Tensor3, Tensor3] | None
    global_: tuple[Tensor3, Tensor3, Tensor3]
    h_local: int
    h_global: int


def _check_head_tensors(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> tuple[int, int, int, int]:
    shapes = {np.asarray(t).shape for t in (q, k, v)}
    if len(shapes) != 1:
        raise ShapeError(f"q/k/v head tensors disagree: {sorted(shapes)}")
    shape = shapes.pop()
    if len(shape) != 4:
        raise ShapeError(f"head tensors must be (B, H, N, D), got {shape}")
    for t in (q, k, v):
        if not np.all(np.isfinite(t)):
            raise ShapeError("head tensor contains non-finite values")
    return shape


def _fold_heads(arr: np.ndarray, lo: int, hi: int) -> Tensor3:
    b, _, n, d = arr.shape
    # copy only when the head slice is non-contiguous; finiteness was already checked
    folded = np.ascontiguousarray(arr[:, lo:hi]).reshape(b * (hi - lo), n, d)
    return wrap_tensor3(folded)


def split_streams(q: np.ndarray, k: np.ndarray, v: np.ndarray, cfg: AttentionConfig) -> StreamSplit:
    """Route heads [0, H_local) to the local branch, the rest global.

    The head axis is folded into the batch axis for the branch calls; both
    branches see the full sequence. Folded tensors may share the caller's
    buffers (they are never written to).
    """
    _, h, _, _ = _check_head_tensors(q, k, v)
    h_local = cfg.local_head_count(h)
    h_global = h - h_local
    q64, k64, v64 = (np.asarray(t, dtype=np.float64) for t in (q, k, v))
    local = None
    if h_local:
        local = tuple(_fold_heads(t, 0, h_local) for t in (q64, k64, v64))
    global_ = tuple(_fold_heads(t, h_local, h) for t in (q64, k64, v64))
    return StreamSplit(local=local, global_=global_, h_local=h_local, h_global=h_global)


def _reraise_with_branch(branch: str, exc: Exception):
    raise type(exc)(f"{branch} branch: {exc}") from exc


def dual_branch_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    cfg: AttentionConfig,
    *,
    quantizer: GridQuantizer | None = None,
) -> np.ndarray:
    """Run the configured branches over (B, H, N, D) inputs and fuse.

    Streaming branches run in the configured precision; reference branches
    always run in double. When the precision is a fixed-point format (or an
    explicit ``quantizer`` is passed) the grid hook is applied at the
    branches' operand and accumulator-exit seams.
    """
    b, h, n, d = _check_head_tensors(q, k, v)
    dtype, grid = resolve_precision(cfg.precision)
    quant = quantizer if quantizer is not None else (GridQuantizer(grid) if grid is not None else None)

    if cfg.has_local_branch:
        if cfg.window_len is None:
            raise ConfigError(f"mode {cfg.mode!r} requires window_len")
        if n % cfg.window_len != 0:
            raise ConfigError(f"sequence length {n} is not divisible by window_len {cfg.window_len}")

    split = split_streams(q, k, v, cfg)
    seq_tile = cfg.resolved_seq_tile(n)

    out = np.empty((b, h, n, d), dtype=np.float64)

    if split.local is not None:
        ql, kl, vl = split.local
        try:
            if cfg.mode in _LOCAL_STREAMING_MODES:
                local_out = local_block_attention(
                    ql, kl, vl, cfg.window_len, cfg.resolved_tile_len(), dtype=dtype, quant=quant
                )
            else:
                local_out = local_window_attention(ql, kl, vl, cfg.window_len, quant=quant)
        except (ConfigError, ShapeError) as exc:
            _reraise_with_branch("local", exc)
        out[:, : split.h_local] = local_out.data.reshape(b, split.h_local, n, d)

    qg, kg, vg = split.global_
    try:
        if cfg.mode in _GLOBAL_STREAMING_MODES:
            global_out = global_linear_attention(qg, kg, vg, seq_tile, dtype=dtype, quant=quant)
        else:
            global_out = linear_attention_direct(qg, kg, vg, quant=quant)
    except (ConfigError, ShapeError) as exc:
        _reraise_with_branch("global", exc)
    out[:, split.h_local :] = global_out.data.reshape(b, split.h_global, n, d)

    return out


_CONFIG_KEYS = {"mode", "window_len", "tile_len", "seq_tile", "local_fraction", "precision"}
_INT_KEYS = {"window_len", "tile_len", "seq_tile"}


def parse_config_file(path) -> AttentionConfig:
    """Read a flat key=value configuration file.

    Blank lines and '#' comments are skipped. Example::

        mode=mix_streaming
        window_len=49
        precision=Q3.12
    """
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}, valid keys: {', '.join(sorted(_CONFIG_KEYS))}")
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key == "local_fraction":
                values[key] = float(value)
            else:
                values[key] = value
    try:
        return AttentionConfig(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
