"""Global branch: streaming content matrix and linear attention projection.

The D x D content matrix summarizes the whole sequence: row f holds the
V rows averaged under the sequence-softmax weights of K's feature column f.
The streaming construction walks sequence blocks keeping, per (batch,
feature) pair, a running max over K[:, f], a normalizer, and a length-D
accumulator, so memory stays O(D^2) per batch however long the sequence is.
(batch, feature) pairs are the parallel axes; sequence blocks are
sequential within a pair. No sqrt(D) scaling appears anywhere in this
branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensor import Tensor3, check_same_dims, wrap_tensor3


@dataclass(frozen=True)
class ContentMatrix:
    """Per-batch D x D content summary; row f is a convex combination of V rows."""

    data: np.ndarray  # (B, D, D), read-only

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ConfigError(f"content matrix must be (B, D, D), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def batches(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def _mm(a: np.ndarray, b: np.ndarray, dtype) -> np.ndarray:
    out = np.matmul(a.astype(np.float64, copy=False), b.astype(np.float64, copy=False))
    return out.astype(dtype, copy=False)


def _feat_softmax(arr: np.ndarray, dtype) -> np.ndarray:
    shifted = arr - arr.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return (e / e.sum(axis=-1, keepdims=True)).astype(dtype, copy=False)


def content_matrix_direct(kg: Tensor3, vg: Tensor3) -> ContentMatrix:
    """Explicit (softmax over sequence of K)^T V, the streaming oracle."""
    check_same_dims(kg, vg)
    ka = kg.data
    shifted = ka - ka.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    weights = e / e.sum(axis=1, keepdims=True)
    return ContentMatrix(np.matmul(weights.transpose(0, 2, 1), vg.data))


def global_content_matrix_streaming(
    kg: Tensor3,
    vg: Tensor3,
    seq_tile: int,
    *,
    dtype=np.float64,
    quant=None,
) -> ContentMatrix:
    """Build the content matrix by streaming over sequence blocks.

    For each feature f the running max is taken over K's column f only; the
    per-feature accumulator cv collects exp-weighted V rows and is divided by
    its normalizer once at the end, matching the explicit sequence softmax.
    """
    _, n, _ = check_same_dims(kg, vg)
    if not 1 <= seq_tile <= n:
        raise ConfigError(f"seq_tile must be in [1, N], got seq_tile={seq_tile}, N={n}")

    dtype = np.dtype(dtype)
    k_arr = np.asarray(kg.data, dtype=dtype)
    v_arr = np.asarray(vg.data, dtype=dtype)
    if quant is not None:
        k_arr, v_arr = quant(k_arr), quant(v_arr)

    b, _, d = k_arr.shape
    sentinel = np.finfo(dtype).min
    m = np.full((b, d), sentinel, dtype=dtype)
    norm = np.zeros((b, d), dtype=dtype)
    cv = np.zeros((b, d, d), dtype=dtype)

    for start in range(0, n, seq_tile):
        k_block = k_arr[:, start : start + seq_tile, :]
        v_block = v_arr[:, start : start + seq_tile, :]
        m_old = m
        m = np.maximum(m, k_block.max(axis=1))
        p = np.exp(k_block - m[:, None, :])
        if quant is not None:
            p = quant(p)
        rescale = np.where(m_old == sentinel, dtype.type(0), np.exp(m_old - m)).astype(dtype)
        cv = cv * rescale[:, :, None] + _mm(p.transpose(0, 2, 1), v_block, dtype)
        norm = norm * rescale + p.sum(axis=1)

    content = cv / norm[:, :, None]
    if quant is not None:
        content = quant(content)
    return ContentMatrix(content.astype(np.float64))


def global_linear_attention(
    qg: Tensor3,
    kg: Tensor3,
    vg: Tensor3,
    seq_tile: int,
    *,
    dtype=np.float64,
    quant=None,
) -> Tensor3:
    """Feature-softmaxed Q times the streaming content matrix."""
    check_same_dims(qg, kg, vg)
    dtype = np.dtype(dtype)
    q_arr = np.asarray(qg.data, dtype=dtype)
    if quant is not None:
        q_arr = quant(q_arr)
    q_prime = _feat_softmax(q_arr, dtype)
    if quant is not None:
        q_prime = quant(q_prime)
    content = global_content_matrix_streaming(kg, vg, seq_tile, dtype=dtype, quant=quant)
    out = _mm(q_prime, np.asarray(content.data, dtype=dtype), dtype)
    if quant is not None:
        out = quant(out)
    return wrap_tensor3(np.ascontiguousarray(out, dtype=np.float64))
