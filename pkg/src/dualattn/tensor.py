"""Dense rank-3 tensors, 2-D matrices, GEMM, and the two softmax axes.

Everything downstream (attention branches, quantization, benchmarks) builds
on these carriers. Values are float64 and read-only after construction, so
instances can be shared across threads freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


def _frozen(array: np.ndarray, rank: int, what: str) -> np.ndarray:
    arr = np.array(array, dtype=np.float64, order="C", copy=True)
    if arr.ndim != rank:
        raise ShapeError(f"{what} expects rank-{rank} data, got rank {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ShapeError(f"{what} dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{what} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Immutable (batch, sequence, feature) tensor with row-major data."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 3, "Tensor3"))

    @property
    def dims(self) -> tuple[int, int, int]:
        b, n, d = self.data.shape
        return b, n, d

    def __eq__(self, other) -> bool:
        return isinstance(other, Tensor3) and np.array_equal(self.data, other.data)


def wrap_tensor3(arr: np.ndarray) -> Tensor3:
    """Adopt a float64 C-contiguous array as a Tensor3 without copying.

    For internal results whose finiteness is guaranteed by construction;
    the array is marked read-only in place.
    """
    arr.flags.writeable = False
    t = object.__new__(Tensor3)
    object.__setattr__(t, "data", arr)
    return t


@dataclass(frozen=True, eq=False)
class Matrix:
    """Immutable 2-D matrix, the carrier for content matrices and window views."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 2, "Matrix"))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and np.array_equal(self.data, other.data)


def gemm(a: Matrix, b: Matrix, transpose_b: bool = False) -> Matrix:
    """Exact-order matrix product a @ b (or a @ b.T).

    Accumulates with a fixed i-k-j loop nest (realized as a k-ordered sum of
    outer products, which is bitwise identical): results are reproducible
    across runs and platforms, and match a scalar triple loop to 0 ulp.
    """
    rhs = b.data.T if transpose_b else b.data
    if a.cols != rhs.shape[0]:
        a_shape = (a.rows, a.cols)
        b_shape = (b.rows, b.cols)
        op = "b.T" if transpose_b else "b"
        raise ShapeError(f"gemm inner dims disagree: a is {a_shape}, {op} is {rhs.shape} (b is {b_shape})")
    out = np.zeros((a.rows, rhs.shape[1]), dtype=np.float64)
    for k in range(a.cols):
        out += np.multiply.outer(a.data[:, k], rhs[k, :])
    return Matrix(out)


def softmax_feat(x: Matrix) -> Matrix:
    """Softmax along the feature axis: every row sums to 1.

    The row max is subtracted before exponentiation, matching the running-max
    discipline of the streaming branches.
    """
    arr = x.data
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return Matrix(e / e.sum(axis=1, keepdims=True))


def softmax_seq(x: Matrix) -> Matrix:
    """Softmax along the sequence axis: every column sums to 1."""
    arr = x.data
    shifted = arr - arr.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return Matrix(e / e.sum(axis=0, keepdims=True))


def seeded_random_tensor(dims: tuple[int, int, int], seed: int) -> Tensor3:
    """Deterministic uniform values in [-1, 1] from numpy's PCG64 stream.

    The same seed yields the same tensor on every platform.
    """
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ShapeError(f"dims must be three positive counts, got {dims}")
    rng = np.random.default_rng(seed)
    return Tensor3(rng.uniform(-1.0, 1.0, size=dims))


def seeded_random_qkv(dims: tuple[int, int, int], seed: int) -> tuple[Tensor3, Tensor3, Tensor3]:
    """Draw a (q, k, v) triple from one seeded PCG64 stream."""
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ShapeError(f"dims must be three positive counts, got {dims}")
    rng = np.random.default_rng(seed)
    q, k, v = (rng.uniform(-1.0, 1.0, size=dims) for _ in range(3))
    return Tensor3(q), Tensor3(k), Tensor3(v)


def dump_fixture(tensor: Tensor3, path) -> None:
    """Write the text fixture format: header 'B N D', then B*N lines of D values.

    Values are written with shortest round-trip decimal repr, so a load
    reproduces the tensor bitwise.
    """
    b, n, d = tensor.dims
    rows = tensor.data.reshape(b * n, d)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{b} {n} {d}\n")
        for row in rows:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_fixture(path) -> Tensor3:
    """Read a tensor fixture written by :func:`dump_fixture`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ShapeError(f"fixture {path}: header must be 'B N D', got {header!r}")
        b, n, d = (int(t) for t in header)
        data = np.empty((b * n, d), dtype=np.float64)
        for i in range(b * n):
            parts = fh.readline().split()
            if len(parts) != d:
                raise ShapeError(f"fixture {path}: line {i + 2} has {len(parts)} values, expected {d}")
            data[i] = [float(p) for p in parts]
    return Tensor3(data.reshape(b, n, d))


def check_same_dims(*tensors: Tensor3) -> tuple[int, int, int]:
    """Require all tensors to share (B, N, D); returns the common dims."""
    dims = tensors[0].dims
    for t in tensors[1:]:
        if t.dims != dims:
            raise ShapeError(f"tensor dims disagree: {dims} vs {t.dims}")
    return dims
