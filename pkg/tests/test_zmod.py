import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from resolvent.errors import DimensionMismatch, ModulusMismatch, NoSolution
from resolvent.zmod import (
    SPARSE_THRESHOLD,
    LinearSolver,
    ResidueMatrix,
    RowSpan,
    howell_form,
    kernel_generators,
    mat_mul,
    smith_reduce,
    solve,
)


def span_of_rows(rows, m):
    """All vectors in the row span, by enumerating coefficient tuples."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.shape[0] == 0:
        return {tuple([0] * rows.shape[1])}
    out = set()
    for coeffs in itertools.product(range(m), repeat=rows.shape[0]):
        out.add(tuple((np.array(coeffs) @ rows) % m))
    return out


def all_vectors(n, m):
    return [np.array(v, dtype=np.int64) for v in itertools.product(range(m), repeat=n)]


small_matrix = st.integers(2, 6).flatmap(
    lambda m: st.tuples(
        st.just(m),
        st.integers(0, 3).flatmap(
            lambda r: st.integers(1, 3).flatmap(
                lambda c: st.lists(
                    st.lists(st.integers(0, m - 1), min_size=c, max_size=c), min_size=r, max_size=r
                ).map(lambda rows, c=c: np.array(rows, dtype=np.int64).reshape(len(rows), c))
            )
        ),
    )
)


def test_mat_mul_examples():
    a = ResidueMatrix(4, [[2]])
    assert mat_mul(a, a) == ResidueMatrix(4, [[0]])
    x = ResidueMatrix(2, [[1, 1], [0, 1]])
    y = ResidueMatrix(2, [[1, 0], [1, 1]])
    assert (x @ y).tolist() == [[0, 1], [1, 1]]
    a = ResidueMatrix(5, [[1, 2], [3, 4], [0, 1]])
    assert ResidueMatrix.identity(5, 3) @ a == a


def test_mat_mul_errors():
    with pytest.raises(DimensionMismatch):
        ResidueMatrix(4, [[1, 2]]) @ ResidueMatrix(4, [[1, 2]])
    with pytest.raises(ModulusMismatch):
        ResidueMatrix(4, [[1]]) @ ResidueMatrix(2, [[1]])


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(0)
    n = SPARSE_THRESHOLD + 10
    cols = rng.integers(0, 2, size=(3, n))
    big = ResidueMatrix(2, sp.csr_matrix(cols))
    assert big.is_sparse
    small = ResidueMatrix(2, rng.integers(0, 2, size=(n, 4)))
    assert small.is_sparse
    prod = big @ small
    assert not prod.is_sparse
    assert np.array_equal(prod.to_array(), (cols @ small.to_array()) % 2)
    assert big == ResidueMatrix(2, cols)


def test_large_modulus_product_exact():
    m = 2**31 - 1
    a = np.full((3, 50), m - 1, dtype=np.int64)
    got = (ResidueMatrix(m, a) @ ResidueMatrix(m, a.T)).to_array()
    expect = [[(50 * (m - 1) ** 2) % m] * 3] * 3
    assert got.tolist() == expect


def test_howell_examples():
    z = ResidueMatrix.zeros(4, 2, 3)
    h, _ = howell_form(z)
    assert h.rows == 0
    h, _ = howell_form(ResidueMatrix.identity(6, 3))
    assert h == ResidueMatrix.identity(6, 3)
    a = ResidueMatrix(4, [[2, 0], [0, 2], [1, 1]])
    h, u = howell_form(a)
    assert h.tolist() == [[1, 1], [0, 2]]
    assert u @ a == h


@settings(max_examples=150, deadline=None)
@given(small_matrix)
def test_howell_span_and_canonicity(case):
    m, a = case
    h, u = howell_form(ResidueMatrix(m, a))
    assert span_of_rows(h.to_array(), m) == span_of_rows(a, m)
    if a.shape[0]:
        assert u @ ResidueMatrix(m, a) == h
    # idempotent
    h2, _ = howell_form(h)
    assert h2 == h
    # row order and redundancy do not matter
    shuffled = np.vstack([a[::-1], a]) if a.shape[0] else a
    h3, _ = howell_form(ResidueMatrix(m, shuffled))
    assert h3 == h


@settings(max_examples=100, deadline=None)
@given(small_matrix)
def test_howell_restriction_property(case):
    m, a = case
    span = RowSpan(a, m)
    full = span_of_rows(a, m)
    for k in range(a.shape[1] + 1):
        want = {v for v in full if not any(v[:k])}
        assert span_of_rows(span.restricted(k), m) == want


def test_kernel_examples():
    assert kernel_generators(ResidueMatrix.identity(5, 3)).cols == 0
    k = kernel_generators(ResidueMatrix(4, [[2]]))
    assert span_of_rows(k.to_array().T, 4) == {(0,), (2,)}
    k = kernel_generators(ResidueMatrix(2, [[1, 1]]))
    assert k.tolist() == [[1], [1]]


@settings(max_examples=150, deadline=None)
@given(small_matrix)
def test_kernel_brute_force(case):
    m, a = case
    if a.shape[0] == 0:
        return
    mat = ResidueMatrix(m, a)
    k = kernel_generators(mat)
    assert (mat @ k).is_zero()
    expected = {tuple(x) for x in all_vectors(a.shape[1], m) if not ((a @ x) % m).any()}
    assert span_of_rows(k.to_array().T, m) == expected


def test_solve_examples():
    b = np.array([3, 1, 2])
    assert solve(ResidueMatrix.identity(4, 3), b).tolist() == [3, 1, 2]
    with pytest.raises(NoSolution):
        solve(ResidueMatrix(4, [[2]]), [1])
    x = solve(ResidueMatrix(4, [[2]]), [2])
    assert (2 * x[0]) % 4 == 2
    with pytest.raises(DimensionMismatch):
        solve(ResidueMatrix(4, [[2]]), [1, 2])


@settings(max_examples=150, deadline=None)
@given(small_matrix, st.data())
def test_solve_brute_force(case, data):
    m, a = case
    if a.shape[0] == 0:
        return
    b = np.array(data.draw(st.lists(st.integers(0, m - 1), min_size=a.shape[0], max_size=a.shape[0])))
    reachable = {tuple((a @ x) % m) for x in all_vectors(a.shape[1], m)}
    mat = ResidueMatrix(m, a)
    if tuple(b) in reachable:
        x = solve(mat, b)
        assert np.array_equal(mat.apply(x), b % m)
    else:
        with pytest.raises(NoSolution):
            solve(mat, b)


def test_solver_with_relations():
    # 2x = 1 modulo the relation 3 = 0 in Z/6 gives x = 2 (2*2 = 4 = 1 + 3)
    s = LinearSolver(ResidueMatrix(6, [[2]]), relations=np.array([[3]]))
    x, ok = s.solve_many(np.array([[1]]))
    assert ok[0]
    assert (2 * x[0, 0] - 1) % 3 == 0


@settings(max_examples=150, deadline=None)
@given(small_matrix)
def test_smith_reduce(case):
    m, a = case
    k = a.T.copy()  # g x t
    if k.shape[0] == 0:
        return
    u, uinv, diag = smith_reduce(k, m)
    g = k.shape[0]
    assert np.array_equal((u @ uinv) % m, np.eye(g, dtype=np.int64))
    nz = [d for d in diag if d]
    assert all(m % d == 0 for d in nz)
    assert all(nz[i + 1] % nz[i] == 0 for i in range(len(nz) - 1))
    # column span of u@k equals span of the diagonal columns
    diag_cols = np.diag(np.array(diag, dtype=np.int64))
    assert span_of_rows(((u @ k) % m).T, m) == span_of_rows(diag_cols.T, m)
