"""Local branch: windowing and tiled online-softmax attention.

The sequence is cut into independent windows (a lossless reshape), and each
window runs scaled dot-product attention. The streaming path never forms a
full window score matrix at once: it walks key/value tiles keeping a running
max m, normalizer l, and accumulator, rescaling by exp(m_old - m) as the max
tightens, and divides once at the end. Windows are the parallel axis; tiles
within a window are strictly sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .reference import vanilla_attention
from .tensor import Tensor3, check_same_dims, wrap_tensor3


@dataclass(frozen=True)
class BlockedTensors:
    """Windowed q/k/v with dims (B*T, N_w, D)."""

    q_b: Tensor3
    k_b: Tensor3
    v_b: Tensor3
    window_count: int
    window_len: int


def _blockify_array(arr: np.ndarray, window_len: int) -> np.ndarray:
    b, n, d = arr.shape
    t = n // window_len
    return arr.reshape(b * t, window_len, d)


def blockify(q: Tensor3, k: Tensor3, v: Tensor3, window_len: int) -> BlockedTensors:
    """Partition the sequence into windows of ``window_len`` tokens.

    Window i of batch b lands at blocked batch index b*T + i; values are
    copied in order, so deblockify restores the input bitwise. Sequence
    lengths that do not divide evenly are rejected rather than padded.
    """
    b, n, _ = check_same_dims(q, k, v)
    if window_len < 1:
        raise ConfigError(f"window_len must be positive, got {window_len}")
    if n % window_len != 0:
        raise ConfigError(f"sequence length {n} is not divisible by window_len {window_len}")
    t = n // window_len
    # reshape views of the already-validated inputs, no copies
    return BlockedTensors(
        q_b=wrap_tensor3(_blockify_array(q.data, window_len)),
        k_b=wrap_tensor3(_blockify_array(k.data, window_len)),
        v_b=wrap_tensor3(_blockify_array(v.data, window_len)),
        window_count=t,
        window_len=window_len,
    )


def deblockify(x_b: Tensor3, original_b: int) -> Tensor3:
    """Exact inverse of blockify: merge windows back into full sequences."""
    bt, n_w, d = x_b.dims
    if original_b < 1 or bt % original_b != 0:
        raise ShapeError(f"blocked batch count {bt} is not divisible by original batch count {original_b}")
    t = bt // original_b
    return wrap_tensor3(x_b.data.reshape(original_b, t * n_w, d))


def _mm(a: np.ndarray, b: np.ndarray, dtype) -> np.ndarray:
    # Matrix products accumulate in double even in single-precision mode;
    # only the stored result drops to the streaming dtype.
    out = np.matmul(a.astype(np.float64, copy=False), b.astype(np.float64, copy=False))
    return out.astype(dtype, copy=False)


def local_block_attention(
    q: Tensor3,
    k: Tensor3,
    v: Tensor3,
    window_len: int,
    tile_len: int,
    *,
    dtype=np.float64,
    quant=None,
) -> Tensor3:
    """Per-window attention via the streaming online-softmax recurrence.

    Equivalent to blockify -> softmax(Q_i K_i^T / sqrt(D)) V_i -> deblockify,
    but each window's keys/values are consumed in tiles of ``tile_len`` rows
    (a short final tile is fine). The running max starts at the most negative
    finite value of the dtype; the first rescale factor is forced to 0 so the
    sentinel never produces NaN.
    """
    b, _, d = check_same_dims(q, k, v)
    blocked = blockify(q, k, v, window_len)
    if not 1 <= tile_len <= window_len:
        raise ConfigError(f"tile_len must be in [1, window_len], got tile_len={tile_len}, window_len={window_len}")

    dtype = np.dtype(dtype)
    q_b = np.asarray(blocked.q_b.data, dtype=dtype)
    k_b = np.asarray(blocked.k_b.data, dtype=dtype)
    v_b = np.asarray(blocked.v_b.data, dtype=dtype)
    if quant is not None:
        q_b, k_b, v_b = quant(q_b), quant(k_b), quant(v_b)

    bt = q_b.shape[0]
    scale = dtype.type(math.sqrt(d))
    sentinel = np.finfo(dtype).min
    m = np.full((bt, window_len), sentinel, dtype=dtype)
    l = np.zeros((bt, window_len), dtype=dtype)
    acc = np.zeros((bt, window_len, d), dtype=dtype)

    for start in range(0, window_len, tile_len):
        k_tile = k_b[:, start : start + tile_len, :]
        v_tile = v_b[:, start : start + tile_len, :]
        scores = _mm(q_b, k_tile.transpose(0, 2, 1), dtype) / scale
        if quant is not None:
            scores = quant(scores)
        m_old = m
        m = np.maximum(m, scores.max(axis=2))
        p = np.exp(scores - m[:, :, None])
        if quant is not None:
            p = quant(p)
        rescale = np.where(m_old == sentinel, dtype.type(0), np.exp(m_old - m)).astype(dtype)
        acc = acc * rescale[:, :, None] + _mm(p, v_tile, dtype)
        l = l * rescale + p.sum(axis=2)

    out = acc / l[:, :, None]
    if quant is not None:
        out = quant(out)
    return deblockify(wrap_tensor3(np.ascontiguousarray(out, dtype=np.float64)), b)


def local_window_attention(q: Tensor3, k: Tensor3, v: Tensor3, window_len: int, *, quant=None) -> Tensor3:
    """Reference local branch: per-window attention with explicit scores."""
    b, _, _ = check_same_dims(q, k, v)
    blocked = blockify(q, k, v, window_len)
    out = vanilla_attention(blocked.q_b, blocked.k_b, blocked.v_b, quant=quant)
    return deblockify(out, b)
