"""Exact linear algebra over the ring Z/m.

Maps act on column vectors throughout: a matrix with ``r`` rows and ``c``
columns sends ``(Z/m)^c`` to ``(Z/m)^r``.

Storage is dense (``numpy.int64``) for small matrices and ``scipy.sparse``
CSR once either dimension exceeds :data:`SPARSE_THRESHOLD`.  The two
representations are observably identical: equality, products and
``to_array`` never depend on which one backs a given matrix.

Row spans are canonicalised by the Howell form, which plays the role reduced
echelon form plays over a field.  It is what makes membership tests, kernels
and solving exact when ``m`` is not prime.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, ModulusMismatch, NoSolution

__all__ = [
    "SPARSE_THRESHOLD",
    "check_modulus",
    "as_columns",
    "ResidueMatrix",
    "mat_mul",
    "hstack",
    "vstack",
    "howell_form",
    "kernel_generators",
    "solve",
    "RowSpan",
    "LinearSolver",
    "smith_reduce",
    "normalizing_unit",
]

SPARSE_THRESHOLD = 4096
_MAX_MODULUS = 2**31


def check_modulus(m) -> int:
    m = int(m)
    if m < 2 or m >= _MAX_MODULUS:
        raise ValueError(f"modulus must satisfy 2 <= m < 2**31, got {m}")
    return m


def as_columns(x, rows: int) -> np.ndarray:
    """``x`` as an int64 array with ``rows`` rows (handles empty inputs)."""
    x = np.asarray(x, dtype=np.int64)
    if x.ndim == 2 and x.shape[0] == rows:
        return x
    if x.size == 0:
        return np.zeros((rows, 0), dtype=np.int64)
    return x.reshape(rows, -1)


def _wants_sparse(shape) -> bool:
    return max(shape) > SPARSE_THRESHOLD


class ResidueMatrix:
    """Immutable matrix of residues modulo ``modulus``."""

    __slots__ = ("modulus", "shape", "_dense", "_sparse")

    def __init__(self, modulus, data, *, reduce: bool = True):
        m = check_modulus(modulus)
        self.modulus = m
        if sp.issparse(data):
            s = sp.csr_matrix(data, dtype=np.int64, copy=True)
            if reduce:
                s.data %= m
                s.eliminate_zeros()
            shape = s.shape
            if _wants_sparse(shape):
                self._sparse, self._dense = s, None
            else:
                self._sparse, self._dense = None, s.toarray()
        else:
            arr = np.array(data, dtype=np.int64)
            if arr.ndim != 2:
                raise DimensionMismatch(f"expected a 2-d array, got shape {arr.shape}")
            if reduce:
                arr %= m
            shape = arr.shape
            if _wants_sparse(shape):
                self._sparse, self._dense = sp.csr_matrix(arr), None
            else:
                self._sparse, self._dense = None, arr
        if self._dense is not None:
            self._dense.flags.writeable = False
        self.shape = (int(shape[0]), int(shape[1]))

    # construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, modulus, rows: int, cols: int) -> "ResidueMatrix":
        if _wants_sparse((rows, cols)):
            return cls(modulus, sp.csr_matrix((rows, cols), dtype=np.int64), reduce=False)
        return cls(modulus, np.zeros((rows, cols), dtype=np.int64), reduce=False)

    @classmethod
    def identity(cls, modulus, n: int) -> "ResidueMatrix":
        if _wants_sparse((n, n)):
            return cls(modulus, sp.identity(n, dtype=np.int64, format="csr"), reduce=False)
        return cls(modulus, np.eye(n, dtype=np.int64), reduce=False)

    @classmethod
    def from_rows(cls, modulus, rows: Sequence[Sequence[int]], cols: int | None = None):
        rows = [list(r) for r in rows]
        if not rows:
            return cls.zeros(modulus, 0, cols or 0)
        return cls(modulus, rows)

    @classmethod
    def from_columns(cls, modulus, columns: Iterable[Sequence[int]], rows: int):
        cols = [np.asarray(c, dtype=np.int64).reshape(-1) for c in columns]
        if not cols:
            return cls.zeros(modulus, rows, 0)
        return cls(modulus, np.stack(cols, axis=1))

    # properties -----------------------------------------------------------
    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def is_sparse(self) -> bool:
        return self._sparse is not None

    def to_array(self) -> np.ndarray:
        """Dense copy-free view (read-only) or materialised array for sparse storage."""
        if self._dense is not None:
            return self._dense
        return self._sparse.toarray()

    def to_sparse(self) -> sp.csr_matrix:
        if self._sparse is not None:
            return self._sparse
        return sp.csr_matrix(self._dense)

    def tolist(self) -> list[list[int]]:
        return self.to_array().tolist()

    def column(self, j: int) -> np.ndarray:
        if self._dense is not None:
            return self._dense[:, j].copy()
        return self._sparse[:, j].toarray().reshape(-1)

    def is_zero(self) -> bool:
        if self._dense is not None:
            return not self._dense.any()
        return self._sparse.nnz == 0

    @property
    def T(self) -> "ResidueMatrix":
        if self._dense is not None:
            return ResidueMatrix(self.modulus, self._dense.T, reduce=False)
        return ResidueMatrix(self.modulus, self._sparse.T, reduce=False)

    def submatrix(self, rows=None, cols=None) -> "ResidueMatrix":
        rows = slice(None) if rows is None else rows
        cols = slice(None) if cols is None else cols
        if self._dense is not None:
            return ResidueMatrix(self.modulus, self._dense[rows][:, cols], reduce=False)
        return ResidueMatrix(self.modulus, self._sparse[rows][:, cols], reduce=False)

    # arithmetic -----------------------------------------------------------
    def _check_same(self, other: "ResidueMatrix"):
        if not isinstance(other, ResidueMatrix):
            return NotImplemented
        if other.modulus != self.modulus:
            raise ModulusMismatch(f"{self.modulus} vs {other.modulus}")
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")

    def __add__(self, other):
        self._check_same(other)
        if self.is_sparse or other.is_sparse:
            return ResidueMatrix(self.modulus, self.to_sparse() + other.to_sparse())
        return ResidueMatrix(self.modulus, self._dense + other._dense)

    def __sub__(self, other):
        self._check_same(other)
        if self.is_sparse or other.is_sparse:
            return ResidueMatrix(self.modulus, self.to_sparse() - other.to_sparse())
        return ResidueMatrix(self.modulus, self._dense - other._dense)

    def __neg__(self):
        if self.is_sparse:
            return ResidueMatrix(self.modulus, -self._sparse)
        return ResidueMatrix(self.modulus, -self._dense)

    def scale(self, c: int) -> "ResidueMatrix":
        c = int(c) % self.modulus
        if self.is_sparse:
            return ResidueMatrix(self.modulus, self._sparse * c)
        return ResidueMatrix(self.modulus, self._dense * c)

    def __matmul__(self, other):
        if not isinstance(other, ResidueMatrix):
            return NotImplemented
        return mat_mul(self, other)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Apply to column vectors; ``vectors`` has shape ``(cols,)`` or ``(cols, k)``."""
        v = np.asarray(vectors, dtype=np.int64)
        flat = v.ndim == 1
        if flat:
            v = v.reshape(-1, 1)
        if v.shape[0] != self.cols:
            raise DimensionMismatch(f"cannot apply {self.shape} to {v.shape[0]}-vectors")
        if self.is_sparse:
            _check_sparse_product(self.cols, self.modulus)
            out = np.asarray(self._sparse @ v) % self.modulus
        else:
            out = _dense_matmul(self._dense, v, self.modulus)
        return out.reshape(-1) if flat else out

    def __eq__(self, other):
        if not isinstance(other, ResidueMatrix):
            return NotImplemented
        if self.modulus != other.modulus or self.shape != other.shape:
            return False
        if self.is_sparse or other.is_sparse:
            return (self.to_sparse() != other.to_sparse()).nnz == 0
        return bool(np.array_equal(self._dense, other._dense))

    __hash__ = None

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        if not self.is_sparse and self.rows * self.cols <= 64:
            return f"ResidueMatrix(mod {self.modulus}, {self.tolist()})"
        return f"ResidueMatrix(mod {self.modulus}, {self.rows}x{self.cols}, {kind})"


def _dense_matmul(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    k = x.shape[1]
    if k == 0:
        return np.zeros((x.shape[0], y.shape[1]), dtype=np.int64)
    if k * (m - 1) ** 2 < 2**52:
        prod = x.astype(np.float64) @ y.astype(np.float64)
        return prod.astype(np.int64) % m
    step = max(1, (2**62) // ((m - 1) ** 2))
    acc = np.zeros((x.shape[0], y.shape[1]), dtype=np.int64)
    for s in range(0, k, step):
        acc = (acc + (x[:, s : s + step] @ y[s : s + step]) % m) % m
    return acc


def _check_sparse_product(k: int, m: int):
    if k * (m - 1) ** 2 >= 2**63:
        raise OverflowError(f"sparse product of inner size {k} may overflow for modulus {m}")


def mat_mul(a: ResidueMatrix, b: ResidueMatrix) -> ResidueMatrix:
    """Product ``a @ b`` reduced mod m."""
    if a.modulus != b.modulus:
        raise ModulusMismatch(f"{a.modulus} vs {b.modulus}")
    if a.cols != b.rows:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    m = a.modulus
    if not a.is_sparse and not b.is_sparse:
        return ResidueMatrix(m, _dense_matmul(a._dense, b._dense, m), reduce=False)
    _check_sparse_product(a.cols, m)
    if a.is_sparse and b.is_sparse:
        return ResidueMatrix(m, a._sparse @ b._sparse)
    if a.is_sparse:
        return ResidueMatrix(m, np.asarray(a._sparse @ b._dense))
    return ResidueMatrix(m, np.asarray((b._sparse.T @ a._dense.T).T))


def hstack(mats: Sequence[ResidueMatrix], modulus=None, rows=None) -> ResidueMatrix:
    if not mats:
        return ResidueMatrix.zeros(modulus, rows or 0, 0)
    m = mats[0].modulus
    if any(x.is_sparse for x in mats):
        return ResidueMatrix(m, sp.hstack([x.to_sparse() for x in mats], format="csr"), reduce=False)
    return ResidueMatrix(m, np.hstack([x.to_array() for x in mats]), reduce=False)


def vstack(mats: Sequence[ResidueMatrix], modulus=None, cols=None) -> ResidueMatrix:
    if not mats:
        return ResidueMatrix.zeros(modulus, 0, cols or 0)
    m = mats[0].modulus
    if any(x.is_sparse for x in mats):
        return ResidueMatrix(m, sp.vstack([x.to_sparse() for x in mats], format="csr"), reduce=False)
    return ResidueMatrix(m, np.vstack([x.to_array() for x in mats]), reduce=False)


# ---------------------------------------------------------------------------
# Howell form
# ---------------------------------------------------------------------------


def _ext_gcd(a: int, b: int):
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def normalizing_unit(a: int, m: int) -> int:
    """A unit ``u`` of Z/m with ``a*u == gcd(a, m)`` (mod m)."""
    a %= m
    g = math.gcd(a, m)
    mg = m // g
    if mg == 1:
        return 1
    u = pow((a // g) % mg, -1, mg)
    while math.gcd(u, m) != 1:
        u += mg
    return u % m


def _first_nonzero(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    nz = rows != 0
    return np.where(nz.any(axis=1), nz.argmax(axis=1), rows.shape[1])


def _back_reduce(out: np.ndarray, m: int) -> np.ndarray:
    piv = _first_nonzero(out)
    for k in range(out.shape[0]):
        p = piv[k]
        d = int(out[k, p])
        if k == 0:
            continue
        q = out[:k, p] // d
        if q.any():
            out[:k] = (out[:k] - np.outer(q, out[k])) % m
    return out


def _howell_gf2(a: np.ndarray) -> np.ndarray:
    active = (a & 1).astype(np.uint8)
    active = active[active.any(axis=1)]
    out = []
    for j in range(a.shape[1]):
        if active.shape[0] == 0:
            break
        hits = np.flatnonzero(active[:, j])
        if hits.size == 0:
            continue
        p = hits[0]
        prow = active[p].copy()
        active[hits[1:]] ^= prow
        keep = np.ones(active.shape[0], dtype=bool)
        keep[p] = False
        if hits.size > 1:
            keep[hits[1:]] = active[hits[1:]].any(axis=1)
        active = active[keep]
        out.append(prow)
    if not out:
        return np.zeros((0, a.shape[1]), dtype=np.int64)
    res = np.array(out, dtype=np.int64)
    return _back_reduce(res, 2)


def _howell_rows(a: np.ndarray, m: int) -> np.ndarray:
    """Howell basis (nonzero rows only) of the row span of ``a``."""
    a = np.asarray(a, dtype=np.int64) % m
    if a.ndim != 2:
        raise DimensionMismatch("expected a 2-d array")
    c = a.shape[1]
    if m == 2:
        return _howell_gf2(a)
    active = a[a.any(axis=1)].copy()
    out = []
    for j in range(c):
        if active.shape[0] == 0:
            break
        col = active[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        target = math.gcd(int(np.gcd.reduce(col[nz])), m)
        p = int(nz[np.argmin(np.gcd(col[nz], m))])
        while math.gcd(int(active[p, j]), m) != target:
            ga = math.gcd(int(active[p, j]), m)
            q = int(nz[np.flatnonzero(active[nz, j] % ga)[0]])
            x, y = int(active[p, j]), int(active[q, j])
            g, s, t = _ext_gcd(x, y)
            rp = (s * active[p] + t * active[q]) % m
            rq = ((-y // g) * active[p] + (x // g) * active[q]) % m
            active[p], active[q] = rp, rq
        u = normalizing_unit(int(active[p, j]), m)
        prow = active[p] * u % m
        keep = np.ones(active.shape[0], dtype=bool)
        keep[p] = False
        active = active[keep]
        factors = active[:, j] // target
        if factors.any():
            active = (active - np.outer(factors, prow)) % m
        ann = prow * (m // target) % m
        if ann.any():
            active = np.vstack([active, ann[None, :]])
        active = active[active.any(axis=1)]
        out.append(prow)
    if not out:
        return np.zeros((0, c), dtype=np.int64)
    return _back_reduce(np.array(out, dtype=np.int64), m)


class RowSpan:
    """Howell basis of a row span together with reduction against it.

    Rows are listed in echelon order; ``pivots[i]`` is the leading column of
    row ``i``.  The rows whose pivot is ``>= k`` span exactly the vectors of the
    span whose first ``k`` coordinates vanish.
    """

    def __init__(self, rows, modulus: int):
        self.modulus = check_modulus(modulus)
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim == 1:
            rows = rows.reshape(0, rows.shape[0]) if rows.size == 0 else rows[None, :]
        self.width = rows.shape[1]
        self.basis = _howell_rows(rows, self.modulus)
        self.basis.flags.writeable = False
        self.pivots = _first_nonzero(self.basis)

    def restricted(self, k: int) -> np.ndarray:
        return self.basis[self.pivots >= k]

    def reduce(self, vectors: np.ndarray, stop: int | None = None) -> np.ndarray:
        """Reduce row vectors against basis rows with pivot ``< stop``."""
        m = self.modulus
        v = np.array(vectors, dtype=np.int64) % m
        flat = v.ndim == 1
        if flat:
            v = v[None, :]
        stop = self.width if stop is None else stop
        for row, p in zip(self.basis, self.pivots):
            if p >= stop:
                break
            q = v[:, p] // row[p]
            if q.any():
                v = (v - np.outer(q, row)) % m
        return v[0] if flat else v

    def contains(self, vectors: np.ndarray) -> np.ndarray | bool:
        r = self.reduce(vectors)
        if r.ndim == 1:
            return not r.any()
        return ~r.any(axis=1)

    def __len__(self):
        return self.basis.shape[0]


def howell_form(a: ResidueMatrix) -> tuple[ResidueMatrix, ResidueMatrix]:
    """Howell form ``h`` of the row span of ``a`` with a transform ``u``.

    ``u @ a == h`` and the rows of ``h`` span the same submodule as the rows of
    ``a``.  Over a non-field the Howell basis can be longer than ``a`` has
    rows, so ``u`` has one row per row of ``h``.
    """
    m = a.modulus
    r, c = a.shape
    aug = np.hstack([a.to_array(), np.eye(r, dtype=np.int64)])
    span = RowSpan(aug, m)
    top = span.basis[span.pivots < c]
    k = top.shape[0]
    h = ResidueMatrix(m, top[:, :c].reshape(k, c), reduce=False)
    u = ResidueMatrix(m, top[:, c:].reshape(k, r), reduce=False)
    return h, u


def _relation_rows(relations, n: int) -> np.ndarray:
    if relations is None:
        return np.zeros((0, n), dtype=np.int64)
    if isinstance(relations, ResidueMatrix):
        return relations.to_array().T
    rel = np.asarray(relations, dtype=np.int64)
    return rel.T if rel.ndim == 2 else np.zeros((0, n), dtype=np.int64)


def kernel_generators(a: ResidueMatrix, relations=None) -> ResidueMatrix:
    """Columns generating ``{x : a @ x in span(relations)}``.

    With ``relations=None`` this is the plain kernel ``{x : a @ x == 0}``.
    """
    m = a.modulus
    r, c = a.shape
    body = np.hstack([a.to_array().T, np.eye(c, dtype=np.int64)])
    rel = _relation_rows(relations, r)
    rel = np.hstack([rel, np.zeros((rel.shape[0], c), dtype=np.int64)])
    span = RowSpan(np.vstack([body, rel]), m)
    gens = span.restricted(r)[:, r:]
    return ResidueMatrix(m, gens.T.reshape(c, gens.shape[0]), reduce=False)


class LinearSolver:
    """Reusable solver for ``a @ x == b`` modulo an optional relation span."""

    def __init__(self, a: ResidueMatrix, relations=None):
        m = a.modulus
        self.modulus = m
        self.shape = a.shape
        r, c = a.shape
        arr = a.to_array()
        body = np.hstack([arr.T, np.eye(c, dtype=np.int64)])
        rel = _relation_rows(relations, r)
        rel = np.hstack([rel, np.zeros((rel.shape[0], c), dtype=np.int64)])
        self._span = RowSpan(np.vstack([body, rel]), m)

    def solve_many(self, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve for every column of ``b``; returns ``(x, ok)``.

        ``x`` has one column per column of ``b``; columns with ``ok == False``
        are meaningless.
        """
        r, c = self.shape
        b = as_columns(b, r) % self.modulus
        v = np.hstack([b.T, np.zeros((b.shape[1], c), dtype=np.int64)])
        res = self._span.reduce(v, stop=r)
        ok = ~res[:, :r].any(axis=1)
        x = (-res[:, r:]) % self.modulus
        return x.T, ok

    def solve(self, b) -> np.ndarray:
        x, ok = self.solve_many(np.asarray(b).reshape(-1, 1))
        if not ok[0]:
            raise NoSolution("right-hand side lies outside the column span")
        return x[:, 0]


def solve(a: ResidueMatrix, b, relations=None) -> np.ndarray:
    """One solution ``x`` of ``a @ x == b``; raises :class:`NoSolution`."""
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if b.shape[0] != a.rows:
        raise DimensionMismatch(f"rhs of length {b.shape[0]} for {a.shape} system")
    return LinearSolver(a, relations).solve(b)


# ---------------------------------------------------------------------------
# Smith-style diagonalisation (used to read off invariant factors)
# ---------------------------------------------------------------------------


def smith_reduce(k: np.ndarray, m: int):
    """Diagonalise the columns ``k`` (g x t) of relations over Z/m.

    Returns ``(u, uinv, diag)`` where ``u`` is an invertible g x g row
    transform, ``uinv`` its inverse and ``diag`` the g diagonal entries of
    ``u @ k @ v`` for some untracked invertible ``v``.  Nonzero diagonal
    entries are divisors of ``m`` forming a divisibility chain; trailing zeros
    stand for free summands.
    """
    a = as_columns(k, k.shape[0]) % m
    g, t = a.shape
    u = np.eye(g, dtype=np.int64)
    uinv = np.eye(g, dtype=np.int64)
    diag = [0] * g

    def row_swap(i, j):
        if i != j:
            a[[i, j]] = a[[j, i]]
            u[[i, j]] = u[[j, i]]
            uinv[:, [i, j]] = uinv[:, [j, i]]

    def col_swap(i, j):
        if i != j:
            a[:, [i, j]] = a[:, [j, i]]

    r = 0
    while r < min(g, t):
        sub = a[r:, r:]
        if not sub.any():
            break
        target = math.gcd(int(np.gcd.reduce(sub[sub != 0])), m)
        gsub = np.gcd(sub, m)
        i, j = np.unravel_index(np.argmin(gsub), gsub.shape)
        row_swap(r, r + i)
        col_swap(r, r + j)
        while math.gcd(int(a[r, r]), m) != target:
            ga = math.gcd(int(a[r, r]), m)
            bad = np.argwhere(a[r:, r:] % ga != 0)[0]
            bi, bj = int(bad[0]) + r, int(bad[1]) + r
            if bj != r and bi != r:
                # pull the offending entry into row r
                a[r] = (a[r] + a[bi]) % m
                u[r] = (u[r] + u[bi]) % m
                uinv[:, bi] = (uinv[:, bi] - uinv[:, r]) % m
                bi = r
            if bi == r:
                x, y = int(a[r, r]), int(a[r, bj])
                gg, s, tt = _ext_gcd(x, y)
                cr = (s * a[:, r] + tt * a[:, bj]) % m
                cj = ((-y // gg) * a[:, r] + (x // gg) * a[:, bj]) % m
                a[:, r], a[:, bj] = cr, cj
            else:
                x, y = int(a[r, r]), int(a[bi, r])
                gg, s, tt = _ext_gcd(x, y)
                p, q = -y // gg, x // gg
                rr = (s * a[r] + tt * a[bi]) % m
                rb = (p * a[r] + q * a[bi]) % m
                a[r], a[bi] = rr, rb
                ur = (s * u[r] + tt * u[bi]) % m
                ub = (p * u[r] + q * u[bi]) % m
                u[r], u[bi] = ur, ub
                # inverse of [[s, tt], [p, q]] (det 1) is [[q, -tt], [-p, s]]
                c_r = (uinv[:, r] * q + uinv[:, bi] * (-p)) % m
                c_b = (uinv[:, r] * (-tt) + uinv[:, bi] * s) % m
                uinv[:, r], uinv[:, bi] = c_r, c_b
        unit = normalizing_unit(int(a[r, r]), m)
        if unit != 1:
            inv = pow(unit, -1, m)
            a[r] = a[r] * unit % m
            u[r] = u[r] * unit % m
            uinv[:, r] = uinv[:, r] * inv % m
        d = int(a[r, r])
        fac = a[r + 1 :, r] // d
        if fac.any():
            a[r + 1 :] = (a[r + 1 :] - np.outer(fac, a[r])) % m
            u[r + 1 :] = (u[r + 1 :] - np.outer(fac, u[r])) % m
            idx = np.flatnonzero(fac) + r + 1
            uinv[:, r] = (uinv[:, r] + uinv[:, idx] @ fac[idx - r - 1]) % m
        cfac = a[r, r + 1 :] // d
        if cfac.any():
            a[:, r + 1 :] = (a[:, r + 1 :] - np.outer(a[:, r], cfac)) % m
        diag[r] = d
        r += 1
    return u, uinv, diag
