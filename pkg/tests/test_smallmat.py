import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxscp.smallmat import DimensionError, gemv_acc, mat_mat, mat_vec, norms


def naive_mat_vec(A, x):
    out = []
    for i in range(len(A)):
        acc = 0.0
        for j in range(len(x)):
            acc += A[i][j] * x[j]
        out.append(acc)
    return np.array(out)


def naive_mat_mat(A, B):
    out = np.zeros((len(A), len(B[0])))
    for i in range(len(A)):
        for j in range(len(B[0])):
            acc = 0.0
            for p in range(len(B)):
                acc += A[i][p] * B[p][j]
            out[i, j] = acc
    return out


def test_mat_vec_examples():
    assert np.array_equal(mat_vec(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    assert np.array_equal(mat_vec(np.zeros((2, 3)), [1.0, 1.0, 1.0]), [0.0, 0.0])
    assert np.array_equal(mat_vec([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0]), [3.0, 7.0])


def test_mat_vec_leaves_inputs_alone():
    A = np.arange(6.0).reshape(2, 3)
    x = np.ones(3)
    A0, x0 = A.copy(), x.copy()
    mat_vec(A, x)
    mat_vec(A, np.ones(2), transpose=True)
    assert np.array_equal(A, A0) and np.array_equal(x, x0)


def test_mat_vec_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2,\)"):
        mat_vec(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(DimensionError):
        mat_vec(np.zeros((2, 3)), np.zeros(3), transpose=True)


def test_mat_mat_examples():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    assert np.array_equal(mat_mat(A, np.eye(4)), A)
    assert np.array_equal(mat_mat([[1.0, 2.0], [3.0, 4.0]], [[1.0, 0.0], [0.0, 2.0]]), [[1.0, 4.0], [3.0, 8.0]])
    assert np.array_equal(mat_mat(A, np.zeros((4, 2))), np.zeros((4, 2)))
    with pytest.raises(DimensionError):
        mat_mat(np.zeros((2, 3)), np.zeros((2, 3)))


def test_norms_examples():
    assert norms([0.0, 0.0, 0.0]) == (0.0, 0.0, 0.0)
    assert norms([3.0, 4.0]) == (5.0, 4.0, 7.0)
    assert norms([-2.0]) == (2.0, 2.0, 2.0)
    with pytest.raises(DimensionError):
        norms(np.zeros(0))


def test_accumulating_kernel_adds_into_buffer():
    out = np.array([1.0, -1.0])
    gemv_acc(np.array([[1.0, 0.0], [0.0, 2.0]]), np.array([1.0, 1.0]), 0.5, out)
    assert np.array_equal(out, [1.5, 0.0])


small = st.integers(1, 6)
finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_transpose_flag_matches_explicit_transpose(data):
    m, n = data.draw(small), data.draw(small)
    A = data.draw(arrays(np.float64, (m, n), elements=finite))
    x = data.draw(arrays(np.float64, (m,), elements=finite))
    assert np.array_equal(mat_vec(A, x, transpose=True), mat_vec(np.ascontiguousarray(A.T), x))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_kernels_match_naive_loops_bitwise(data):
    m, k, n = data.draw(small), data.draw(small), data.draw(small)
    A = data.draw(arrays(np.float64, (m, k), elements=finite))
    B = data.draw(arrays(np.float64, (k, n), elements=finite))
    x = data.draw(arrays(np.float64, (k,), elements=finite))
    assert np.array_equal(mat_vec(A, x), naive_mat_vec(A, x))
    assert np.array_equal(mat_mat(A, B), naive_mat_mat(A, B))


def test_mat_mat_associative():
    rng = np.random.default_rng(1)
    for _ in range(20):
        A, B, C = (rng.standard_normal((5, 5)) for _ in range(3))
        left = mat_mat(mat_mat(A, B), C)
        right = mat_mat(A, mat_mat(B, C))
        assert np.max(np.abs(left - right)) <= 1e-12 * max(1.0, np.abs(left).max())


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 20), elements=finite))
def test_norms_agree_with_numpy(x):
    two, inf, one = norms(x)
    assert two == pytest.approx(np.linalg.norm(x), rel=1e-13, abs=1e-300)
    assert inf == np.abs(x).max()
    assert one == pytest.approx(np.abs(x).sum(), rel=1e-13, abs=1e-300)
