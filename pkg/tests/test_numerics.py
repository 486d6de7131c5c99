import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiq.numerics import (
    DimensionError,
    format_matrix,
    is_hermitian,
    kron,
    min_eig,
    parse_matrices,
    parse_matrix,
    partial_trace,
    partial_transpose,
    permute_parties,
    psd_project,
    trace_norm,
)
from oracles import permutation_matrix, ptrace_loops, ptranspose_loops

dims_st = st.lists(st.integers(2, 3), min_size=1, max_size=3)


def _rand(dims, seed):
    n = int(np.prod(dims))
    r = np.random.default_rng(seed)
    return r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))


@settings(max_examples=40, deadline=None)
@given(dims_st, st.integers(0, 2**32 - 1), st.data())
def test_partial_trace_matches_loops(dims, seed, data):
    keep = data.draw(st.lists(st.integers(0, len(dims) - 1), unique=True))
    m = _rand(dims, seed)
    np.testing.assert_allclose(partial_trace(m, dims, keep), ptrace_loops(m, dims, keep), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(dims_st, st.integers(0, 2**32 - 1), st.data())
def test_partial_transpose_matches_loops(dims, seed, data):
    parties = data.draw(st.lists(st.integers(0, len(dims) - 1), unique=True, min_size=1))
    m = _rand(dims, seed)
    np.testing.assert_allclose(partial_transpose(m, dims, parties), ptranspose_loops(m, dims, parties))


@settings(max_examples=30, deadline=None)
@given(dims_st, st.integers(0, 2**32 - 1), st.data())
def test_permute_parties_is_conjugation(dims, seed, data):
    order = data.draw(st.permutations(range(len(dims))))
    m = _rand(dims, seed)
    p = permutation_matrix(dims, order)
    np.testing.assert_allclose(permute_parties(m, dims, order), p @ m @ p.T, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_psd_project_is_nearest_psd(n, seed):
    m = _rand([n], seed)
    h = (m + m.conj().T) / 2
    p = psd_project(h)
    assert min_eig(p) >= -1e-12
    w = np.linalg.eigvalsh(h)
    assert np.linalg.norm(h - p) == pytest.approx(np.linalg.norm(np.minimum(w, 0)), abs=1e-10)


def test_trace_norm_of_unitary_and_projector():
    assert trace_norm(np.diag([1, -1j, 1j])) == pytest.approx(3)
    assert trace_norm(np.ones((2, 2)) / 2) == pytest.approx(1)


def test_hermiticity_tolerance_is_relative():
    h = np.eye(2) * 1e6
    h[0, 1] = 1e-5
    assert is_hermitian(h)
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))


def test_kron_order_party_zero_most_significant():
    a = np.array([[0, 1], [0, 0]])
    b = np.eye(3)
    assert kron(a, b)[0, 3] == 1


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(6), (2, 2), [0])


@settings(max_examples=25, deadline=None)
@given(dims_st, st.integers(0, 2**32 - 1))
def test_text_format_round_trip_is_exact(dims, seed):
    m = _rand(dims, seed)
    back, bd = parse_matrix(format_matrix(m, dims))
    assert list(bd) == list(dims)
    assert np.array_equal(back, m)


def test_text_format_comments_and_multiple_blocks():
    text = "# two blocks\ndims: 2\n1 0 0 0\n0 0 1 0  # identity\n\ndims: 2\n0 0 0 -1\n0 1 0 0\n"
    blocks = parse_matrices(text)
    assert len(blocks) == 2
    np.testing.assert_array_equal(blocks[1][0], np.array([[0, -1j], [1j, 0]]))


@pytest.mark.parametrize("text", [
    "1 0 0 0\n",
    "dims: 2\n1 0 0\n",
    "dims: x\n1 0\n",
    "dims: 2\n1 0 0 0\n0 0\n",
])
def test_text_format_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_matrix(text)
