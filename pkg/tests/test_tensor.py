"""Tensor carriers, GEMM, softmax normalizations, fixtures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualattn.errors import ShapeError
from dualattn.tensor import (
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


def triple_loop_gemm(a, b):
    """Scalar i-k-j oracle with plain Python floats."""
    rows, inner = a.shape
    cols = b.shape[1]
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for k in range(inner):
            aik = a[i][k]
            for j in range(cols):
                out[i][j] += aik * b[k][j]
    return np.array(out)


def scalar_softmax(values):
    m = max(values)
    exps = [math.exp(v - m) for v in values]
    s = sum(exps)
    return [e / s for e in exps]


class TestGemm:
    def test_identity(self):
        m = Matrix([[3.5, -1.0], [2.0, 7.25]])
        eye = Matrix(np.eye(2))
        assert gemm(eye, m) == m

    def test_hand_case(self):
        a = Matrix([[1.0, 2.0], [3.0, 4.0]])
        b = Matrix([[5.0, 6.0], [7.0, 8.0]])
        assert np.array_equal(gemm(a, b).data, [[19.0, 22.0], [43.0, 50.0]])

    def test_matches_triple_loop_exactly(self):
        rng = np.random.default_rng(123)
        a = Matrix(rng.uniform(-1, 1, (7, 5)))
        b = Matrix(rng.uniform(-1, 1, (5, 3)))
        # same accumulation order, so 0 ulp difference
        assert np.array_equal(gemm(a, b).data, triple_loop_gemm(a.data, b.data))

    def test_transpose_b(self):
        rng = np.random.default_rng(7)
        a = Matrix(rng.uniform(-1, 1, (4, 6)))
        b = Matrix(rng.uniform(-1, 1, (3, 6)))
        assert np.array_equal(gemm(a, b, transpose_b=True).data, triple_loop_gemm(a.data, b.data.T))

    def test_shape_error_names_both_shapes(self):
        a = Matrix(np.ones((2, 3)))
        b = Matrix(np.ones((4, 2)))
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
            gemm(a, b)

    def test_associativity(self):
        rng = np.random.default_rng(99)
        a = Matrix(rng.uniform(-1, 1, (64, 32)))
        b = Matrix(rng.uniform(-1, 1, (32, 48)))
        c = Matrix(rng.uniform(-1, 1, (48, 64)))
        left = gemm(gemm(a, b), c).data
        right = gemm(a, gemm(b, c)).data
        err = np.linalg.norm(left - right) / np.linalg.norm(right)
        assert err < 1e-10


class TestSoftmax:
    def test_uniform_over_equal_logits(self):
        out = softmax_feat(Matrix([[0.0, 0.0]]))
        assert np.array_equal(out.data, [[0.5, 0.5]])

    def test_shift_invariance_bitwise(self):
        # exactly representable shift, so max subtraction cancels it bitwise
        base = softmax_feat(Matrix([[0.0, 3.0]]))
        shifted = softmax_feat(Matrix([[1.5, 4.5]]))
        assert np.array_equal(base.data, shifted.data)

    def test_123_against_extended_precision_values(self):
        # frozen from a 50-digit scalar exp/sum computation
        expected = [0.090030573170380457998, 0.24472847105479765247, 0.66524095577482188953]
        out = softmax_feat(Matrix([[1.0, 2.0, 3.0]]))
        assert np.all(np.abs(out.data[0] - expected) < 1e-15)

    def test_seq_trivial_column(self):
        out = softmax_seq(Matrix([[0.0], [0.0]]))
        assert np.array_equal(out.data, [[0.5], [0.5]])

    def test_seq_single_row_is_ones(self):
        out = softmax_seq(Matrix([[2.5, -3.0, 0.1]]))
        assert np.array_equal(out.data, [[1.0, 1.0, 1.0]])

    def test_seq_matches_scalar_oracle(self):
        rng = np.random.default_rng(42)
        x = Matrix(rng.uniform(-2, 2, (6, 3)))
        out = softmax_seq(x)
        for j in range(3):
            expected = scalar_softmax(list(x.data[:, j]))
            assert np.all(np.abs(out.data[:, j] - expected) < 1e-14)

    def test_seq_is_transposed_feat(self):
        rng = np.random.default_rng(8)
        x = Matrix(rng.uniform(-1, 1, (6, 4)))
        via_feat = softmax_feat(Matrix(x.data.T)).data.T
        assert np.array_equal(softmax_seq(x).data, via_feat)

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=8), st.integers())
    @settings(max_examples=50, deadline=None)
    def test_row_and_column_sums(self, rows, cols, seed):
        rng = np.random.default_rng(seed % (2**32))
        x = Matrix(rng.uniform(-5, 5, (rows, cols)))
        feat = softmax_feat(x).data
        seq = softmax_seq(x).data
        assert np.all(np.abs(feat.sum(axis=1) - 1.0) <= 1e-12)
        assert np.all(np.abs(seq.sum(axis=0) - 1.0) <= 1e-12)
        assert np.all(feat > 0) and np.all(feat <= 1)
        assert np.all(seq > 0) and np.all(seq <= 1)


class TestSeededRandom:
    def test_determinism(self):
        a = seeded_random_tensor((2, 3, 4), 42)
        b = seeded_random_tensor((2, 3, 4), 42)
        assert a == b

    def test_different_seeds_differ(self):
        a = seeded_random_tensor((2, 3, 4), 1)
        b = seeded_random_tensor((2, 3, 4), 2)
        assert a != b

    def test_range(self):
        t = seeded_random_tensor((4, 16, 8), 7)
        assert t.data.min() >= -1.0 and t.data.max() <= 1.0

    def test_zero_dim_rejected(self):
        with pytest.raises(ShapeError):
            seeded_random_tensor((2, 0, 4), 1)

    def test_qkv_triple_is_deterministic_and_distinct(self):
        q1, k1, v1 = seeded_random_qkv((1, 4, 2), 5)
        q2, k2, v2 = seeded_random_qkv((1, 4, 2), 5)
        assert q1 == q2 and k1 == k2 and v1 == v2
        assert q1 != k1 and k1 != v1


class TestCarriers:
    def test_tensor3_rejects_nonfinite(self):
        with pytest.raises(ShapeError):
            Tensor3(np.full((1, 2, 2), np.nan))

    def test_tensor3_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            Tensor3(np.ones((2, 2)))

    def test_tensor3_is_immutable(self):
        t = seeded_random_tensor((1, 2, 2), 0)
        with pytest.raises(ValueError):
            t.data[0, 0, 0] = 1.0

    def test_matrix_rejects_empty(self):
        with pytest.raises(ShapeError):
            Matrix(np.ones((0, 3)))

    def test_data_length(self):
        t = seeded_random_tensor((3, 5, 7), 1)
        assert t.data.size == 3 * 5 * 7
        assert t.dims == (3, 5, 7)


class TestFixtureFile:
    def test_round_trip_bitwise(self, tmp_path):
        t = seeded_random_tensor((2, 3, 4), 31)
        path = tmp_path / "t.txt"
        dump_fixture(t, path)
        assert load_fixture(path) == t

    def test_header_format(self, tmp_path):
        t = seeded_random_tensor((2, 3, 4), 31)
        path = tmp_path / "t.txt"
        dump_fixture(t, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "2 3 4"
        assert len(lines) == 1 + 2 * 3

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\n")
        with pytest.raises(ShapeError):
            load_fixture(path)

    def test_short_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 1 3\n0.5 0.5\n")
        with pytest.raises(ShapeError):
            load_fixture(path)
