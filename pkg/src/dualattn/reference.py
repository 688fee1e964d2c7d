"""Brute-force attention oracles.

These are the ground truth every streaming path is checked against: full
quadratic softmax attention with an explicit score matrix, and the directly
factorized linear form. Both always run in double precision.

The optional ``quant`` hook exists only for the quantized-deployment
simulation; left at None (the default) the functions are pure float64
oracles.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor3, check_same_dims, wrap_tensor3


def _rows_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def vanilla_attention(q: Tensor3, k: Tensor3, v: Tensor3, *, quant=None) -> Tensor3:
    """softmax(Q K^T / sqrt(D)) V with the full N x N score matrix.

    Attention rows sum to 1 by construction; cost grows as N^2 * D.
    """
    _, _, d = check_same_dims(q, k, v)
    qa, ka, va = q.data, k.data, v.data
    if quant is not None:
        qa, ka, va = quant(qa), quant(ka), quant(va)
    scores = np.matmul(qa, ka.transpose(0, 2, 1)) / math.sqrt(d)
    if quant is not None:
        scores = quant(scores)
    weights = _rows_softmax(scores)
    if quant is not None:
        weights = quant(weights)
    out = np.matmul(weights, va)
    if quant is not None:
        out = quant(out)
    return wrap_tensor3(out)


def linear_attention_direct(qg: Tensor3, kg: Tensor3, vg: Tensor3, *, quant=None) -> Tensor3:
    """Factorized linear attention with the content matrix formed explicitly.

    Per batch: softmax over features of Q times (softmax over sequence of
    K)^T V. No sqrt(D) scaling appears here; only the local/vanilla form
    scales its scores.
    """
    check_same_dims(qg, kg, vg)
    qa, ka, va = qg.data, kg.data, vg.data
    if quant is not None:
        qa, ka, va = quant(qa), quant(ka), quant(va)
    # softmax over the sequence axis, independently per feature column
    k_shift = ka - ka.max(axis=1, keepdims=True)
    ek = np.exp(k_shift)
    seq_weights = ek / ek.sum(axis=1, keepdims=True)
    if quant is not None:
        seq_weights = quant(seq_weights)
    content = np.matmul(seq_weights.transpose(0, 2, 1), va)
    if quant is not None:
        content = quant(content)
    q_prime = _rows_softmax(qa)
    if quant is not None:
        q_prime = quant(q_prime)
    out = np.matmul(q_prime, content)
    if quant is not None:
        out = quant(out)
    return wrap_tensor3(out)
