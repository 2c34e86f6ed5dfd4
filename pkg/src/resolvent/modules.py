"""Finitely presented modules over Z/m and the maps between them.

Every module is stored in invariant-factor form ``Z/d1 + ... + Z/dk`` with
``d1 | d2 | ... | dk | m``, so two modules are isomorphic exactly when they
compare equal.  Elements are integer vectors whose ``i``-th coordinate lives
in ``[0, d_i)``.  A :class:`ModuleMap` is a residue matrix acting on such
column vectors; its rows are kept reduced modulo the codomain factors so that
equal maps have equal matrices.

Limits and colimits are computed by exact linear algebra inside a product
(or a free cover) and then re-canonicalised through :func:`canonical_decompose`.
"""

from __future__ import annotations

import contextlib
import contextvars
import itertools
import math
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConstraintViolation,
    DimensionMismatch,
    EnumerationTooLarge,
    InvalidStructure,
    ModulusMismatch,
    NotEpi,
)
from .zmod import (
    SPARSE_THRESHOLD,
    LinearSolver,
    as_columns,
    ResidueMatrix,
    RowSpan,
    check_modulus,
    kernel_generators,
    smith_reduce,
)

DEFAULT_MAX_ENUM = 2**20
_MAX_ENUM = contextvars.ContextVar("resolvent_max_enum", default=None)


def enumeration_limit() -> int:
    """Current element-enumeration guard.

    Resolution order: :func:`max_enumeration` context, then the
    ``RESOLVENT_MAX_ENUM`` environment variable, then 2**20.
    """
    v = _MAX_ENUM.get()
    if v is not None:
        return v
    env = os.environ.get("RESOLVENT_MAX_ENUM")
    return int(env) if env else DEFAULT_MAX_ENUM


@contextlib.contextmanager
def max_enumeration(limit: int):
    token = _MAX_ENUM.set(int(limit))
    try:
        yield
    finally:
        _MAX_ENUM.reset(token)


# ---------------------------------------------------------------------------
# Objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpModule:
    modulus: int
    factors: tuple = ()
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        m = check_modulus(self.modulus)
        facs = tuple(int(d) for d in self.factors)
        object.__setattr__(self, "modulus", m)
        object.__setattr__(self, "factors", facs)
        prev = 1
        for d in facs:
            if d < 2 or m % d:
                raise InvalidStructure(f"factor {d} is not a divisor >= 2 of {m}")
            if d % prev:
                raise InvalidStructure(f"factors {facs} do not form a divisibility chain")
            prev = d

    @classmethod
    def free(cls, modulus, rank: int, label=None) -> "FpModule":
        return cls(modulus, (int(modulus),) * rank, label)

    @classmethod
    def zero(cls, modulus) -> "FpModule":
        return cls(modulus, ())

    @classmethod
    def from_orders(cls, modulus, orders: Sequence[int]) -> "FpModule":
        """Canonical form of ``Z/o1 + Z/o2 + ...`` for arbitrary divisors of m."""
        return canonicalize_orders(modulus, tuple(orders)).module

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        return math.prod(self.factors)

    @property
    def is_zero(self) -> bool:
        return not self.factors

    @property
    def is_free(self) -> bool:
        return all(d == self.modulus for d in self.factors)

    @cached_property
    def orders(self) -> np.ndarray:
        a = np.array(self.factors, dtype=np.int64)
        a.flags.writeable = False
        return a

    def relations(self) -> np.ndarray:
        """Columns spanning the relations ``d_i e_i`` inside ``(Z/m)^rank``."""
        return np.diag(self.orders % self.modulus).astype(np.int64).reshape(self.rank, self.rank)

    def reduce(self, vectors: np.ndarray) -> np.ndarray:
        v = np.asarray(vectors, dtype=np.int64)
        if v.ndim == 1:
            return v % self.orders
        return v % self.orders[:, None]

    def __str__(self):
        if not self.factors:
            return "0"
        parts = []
        for d, run in itertools.groupby(self.factors):
            k = len(list(run))
            parts.extend([f"Z/{d}"] * k if k <= 3 else [f"(Z/{d})^{k}"])
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "factors": list(self.factors)}

    @classmethod
    def from_json(cls, obj: dict) -> "FpModule":
        return cls.from_orders(obj["modulus"], obj.get("factors", []))


def _reduce_rows(arr, orders: np.ndarray):
    if sp.issparse(arr):
        s = sp.csr_matrix(arr, dtype=np.int64, copy=True)
        rows = np.repeat(np.arange(s.shape[0]), np.diff(s.indptr))
        s.data %= orders[rows]
        s.eliminate_zeros()
        return s
    return np.asarray(arr, dtype=np.int64) % orders[:, None]


class ModuleMap:
    """A module homomorphism ``dom -> cod`` given by a residue matrix."""

    __slots__ = ("dom", "cod", "matrix")

    def __init__(self, dom: FpModule, cod: FpModule, matrix, *, check: bool = True):
        if dom.modulus != cod.modulus:
            raise ModulusMismatch("domain and codomain moduli differ")
        m = dom.modulus
        if isinstance(matrix, ResidueMatrix):
            raw = matrix.to_sparse() if matrix.is_sparse else matrix.to_array()
        else:
            raw = matrix if sp.issparse(matrix) else np.asarray(matrix, dtype=np.int64)
            if not sp.issparse(raw) and raw.size == 0:
                raw = raw.reshape(cod.rank, dom.rank)
        if raw.shape != (cod.rank, dom.rank):
            raise DimensionMismatch(f"matrix shape {raw.shape} for map {dom} -> {cod}")
        if not cod.is_free:
            raw = _reduce_rows(raw, cod.orders)
        mat = ResidueMatrix(m, raw)
        if check and not dom.is_free:
            _check_compatible(mat, dom, cod)
        self.dom, self.cod, self.matrix = dom, cod, mat

    @classmethod
    def identity(cls, module: FpModule) -> "ModuleMap":
        return cls(module, module, ResidueMatrix.identity(module.modulus, module.rank), check=False)

    @classmethod
    def zero(cls, dom: FpModule, cod: FpModule) -> "ModuleMap":
        return cls(dom, cod, ResidueMatrix.zeros(dom.modulus, cod.rank, dom.rank), check=False)

    @property
    def modulus(self) -> int:
        return self.dom.modulus

    def apply(self, vectors) -> np.ndarray:
        return self.cod.reduce(self.matrix.apply(vectors))

    def compose(self, other: "ModuleMap") -> "ModuleMap":
        """``self o other``."""
        if other.cod != self.dom:
            raise DimensionMismatch(f"cannot compose {other.cod} -> with {self.dom} ->")
        return ModuleMap(other.dom, self.cod, self.matrix @ other.matrix, check=False)

    def __matmul__(self, other):
        if not isinstance(other, ModuleMap):
            return NotImplemented
        return self.compose(other)

    def _same_shape(self, other):
        if self.dom != other.dom or self.cod != other.cod:
            raise DimensionMismatch("maps have different domain or codomain")

    def __add__(self, other):
        self._same_shape(other)
        return ModuleMap(self.dom, self.cod, self.matrix + other.matrix, check=False)

    def __sub__(self, other):
        self._same_shape(other)
        return ModuleMap(self.dom, self.cod, self.matrix - other.matrix, check=False)

    def __neg__(self):
        return ModuleMap(self.dom, self.cod, -self.matrix, check=False)

    def scale(self, c: int) -> "ModuleMap":
        return ModuleMap(self.dom, self.cod, self.matrix.scale(c), check=False)

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    def __eq__(self, other):
        if not isinstance(other, ModuleMap):
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and self.matrix == other.matrix

    __hash__ = None

    def __repr__(self):
        return f"ModuleMap({self.dom} -> {self.cod}, {self.matrix!r})"

    def to_json(self) -> dict:
        return {"dom": self.dom.to_json(), "cod": self.cod.to_json(), "matrix": self.matrix.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ModuleMap":
        dom = FpModule.from_json(obj["dom"])
        cod = FpModule.from_json(obj["cod"])
        mat = np.array(obj["matrix"], dtype=np.int64).reshape(cod.rank, dom.rank)
        return cls(dom, cod, mat)


def _check_compatible(mat: ResidueMatrix, dom: FpModule, cod: FpModule):
    d = dom.orders
    e = cod.orders
    if mat.is_sparse:
        s = mat.to_sparse().tocoo()
        bad = (s.data * d[s.col]) % e[s.row]
        ok = not bad.any()
    else:
        ok = not ((mat.to_array() * d[None, :]) % e[:, None]).any()
    if not ok:
        raise InvalidStructure(f"matrix does not define a homomorphism {dom} -> {cod}")


# ---------------------------------------------------------------------------
# Presentations
# ---------------------------------------------------------------------------


class Presentation(NamedTuple):
    """Result of :func:`canonical_decompose`.

    ``projection`` is the quotient map from the free cover (one free generator
    per input generator) onto ``module``; ``lift`` holds, column by column,
    free-cover coordinates of a representative of each canonical generator.
    """

    module: FpModule
    projection: ModuleMap
    lift: np.ndarray


def _present(gens: np.ndarray, rels: np.ndarray, m: int):
    a = gens.shape[0]
    g = gens.shape[1]
    if g == 0:
        return FpModule.zero(m), np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0), dtype=np.int64)
    kmat = kernel_generators(ResidueMatrix(m, gens), relations=as_columns(rels, a)).to_array()
    u, uinv, diag = smith_reduce(kmat, m)
    orders = [d if d else m for d in diag]
    keep = [i for i, d in enumerate(orders) if d != 1]
    module = FpModule(m, tuple(orders[i] for i in keep))
    return module, u[keep].reshape(len(keep), g), uinv[:, keep].reshape(g, len(keep))


def canonical_decompose(generators: ResidueMatrix, relations: ResidueMatrix) -> Presentation:
    """Canonical form of the subquotient ``(span(G) + span(R)) / span(R)``.

    ``generators`` and ``relations`` are column sets in the same free module
    ``(Z/m)^a``.  With ``generators = I`` this is the module presented by
    ``relations``.
    """
    m = generators.modulus
    if relations.rows != generators.rows:
        raise DimensionMismatch("generators and relations live in different spaces")
    module, proj, lift = _present(generators.to_array(), relations.to_array(), m)
    free = FpModule.free(m, generators.cols)
    return Presentation(module, ModuleMap(free, module, proj, check=False), lift)


class _Canonical(NamedTuple):
    module: FpModule
    to_canonical: ResidueMatrix  # raw coordinates -> canonical coordinates
    from_canonical: ResidueMatrix  # canonical coordinates -> raw coordinates


@lru_cache(maxsize=4096)
def canonicalize_orders(m: int, orders: tuple) -> _Canonical:
    """Canonical form of a raw direct sum of cyclic modules ``Z/o_i``.

    Orders that already form a divisibility chain after sorting are handled
    by a permutation; anything else goes through the Smith reduction.
    """
    m = check_modulus(m)
    orders = tuple(math.gcd(int(o), m) if o else m for o in orders)
    n = len(orders)
    nontrivial = [i for i, o in enumerate(orders) if o != 1]
    perm = sorted(nontrivial, key=lambda i: (orders[i], i))
    chain = all(orders[perm[k + 1]] % orders[perm[k]] == 0 for k in range(len(perm) - 1))
    if chain:
        module = FpModule(m, tuple(orders[i] for i in perm))
        k = len(perm)
        to_c = sp.csr_matrix((np.ones(k, dtype=np.int64), (np.arange(k), perm)), shape=(k, n))
        return _Canonical(module, ResidueMatrix(m, to_c), ResidueMatrix(m, to_c.T))
    rel = np.diag(np.array(orders, dtype=np.int64) % m)
    module, proj, lift = _present(np.eye(n, dtype=np.int64), rel, m)
    return _Canonical(module, ResidueMatrix(m, proj), ResidueMatrix(m, lift))


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


def _guard(size: int, where: str = ""):
    limit = enumeration_limit()
    if size > limit:
        raise EnumerationTooLarge(size, limit, where)


def enumerate_elements(module: FpModule, where: str = "") -> np.ndarray:
    """All elements in lexicographic order (first coordinate most significant)."""
    size = module.size
    _guard(size, where or str(module))
    if module.rank == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(module.factors, dtype=np.int64)
    return grids.reshape(module.rank, module.size).T.copy()


def element_index(module: FpModule, vectors: np.ndarray) -> np.ndarray:
    """Position of each element (rows of ``vectors``) in the enumeration order."""
    v = np.asarray(vectors, dtype=np.int64)
    flat = v.ndim == 1
    if flat:
        v = v[None, :]
    v = v % module.orders[None, :]
    idx = np.zeros(v.shape[0], dtype=np.int64) if module.size < 2**62 else np.zeros(v.shape[0], dtype=object)
    for k, d in enumerate(module.factors):
        idx = idx * d + v[:, k]
    return idx[0] if flat else idx


def unit_vector_index(module: FpModule, i: int) -> int:
    """Enumeration index of the ``i``-th canonical generator."""
    return math.prod(module.factors[i + 1 :])


# ---------------------------------------------------------------------------
# Subobjects, kernels, cokernels, images
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subobject:
    ambient: FpModule
    embedding: ModuleMap

    @property
    def module(self) -> FpModule:
        return self.embedding.dom

    @classmethod
    def generated_by(cls, ambient: FpModule, gens) -> "Subobject":
        m = ambient.modulus
        g = gens.to_array() if isinstance(gens, ResidueMatrix) else np.asarray(gens, dtype=np.int64)
        g = as_columns(g, ambient.rank) % m
        module, _, lift = _present(g, ambient.relations(), m)
        emb = (g @ lift) % m if lift.size else np.zeros((ambient.rank, module.rank), dtype=np.int64)
        return cls(ambient, ModuleMap(module, ambient, emb, check=False))

    @classmethod
    def whole(cls, ambient: FpModule) -> "Subobject":
        return cls(ambient, ModuleMap.identity(ambient))

    @classmethod
    def zero(cls, ambient: FpModule) -> "Subobject":
        return cls(ambient, ModuleMap.zero(FpModule.zero(ambient.modulus), ambient))

    @cached_property
    def lattice(self) -> RowSpan:
        """Howell basis of the preimage of this submodule in ``(Z/m)^rank``."""
        rows = np.vstack([self.embedding.matrix.to_array().T, self.ambient.relations().T])
        return RowSpan(rows, self.ambient.modulus)

    @cached_property
    def _solver(self) -> LinearSolver:
        return LinearSolver(self.embedding.matrix, relations=self.ambient.relations())

    def __eq__(self, other):
        if not isinstance(other, Subobject):
            return NotImplemented
        return self.ambient == other.ambient and np.array_equal(
            self.lattice.basis, other.lattice.basis
        )

    __hash__ = None

    def contains(self, vectors) -> bool:
        """True iff every column of ``vectors`` lies in the submodule."""
        v = as_columns(vectors, self.ambient.rank)
        return bool(np.all(self.lattice.contains(v.T)))

    def coordinates(self, vectors) -> np.ndarray:
        """Canonical coordinates of ambient vectors (columns) lying in the submodule."""
        v = as_columns(vectors, self.ambient.rank)
        x, ok = self._solver.solve_many(v)
        if not ok.all():
            raise ConstraintViolation("vector does not lie in the subobject")
        return self.module.reduce(x)

    def factor(self, g: ModuleMap) -> ModuleMap:
        """The unique map ``h`` with ``embedding o h == g``."""
        if g.cod != self.ambient:
            raise DimensionMismatch("map does not land in the ambient module")
        coords = self.coordinates(g.matrix.to_array())
        return ModuleMap(g.dom, self.module, coords, check=False)

    def is_zero(self) -> bool:
        return self.module.is_zero


def kernel(f: ModuleMap) -> Subobject:
    gens = kernel_generators(f.matrix, relations=f.cod.relations())
    return Subobject.generated_by(f.dom, gens)


class Cokernel(NamedTuple):
    projection: ModuleMap
    q: FpModule


def cokernel(f: ModuleMap) -> Cokernel:
    m = f.modulus
    n = f.cod.rank
    rels = np.hstack([f.matrix.to_array(), f.cod.relations()])
    module, proj, _ = _present(np.eye(n, dtype=np.int64), rels, m)
    return Cokernel(ModuleMap(f.cod, module, proj, check=False), module)


class ImageFactorization(NamedTuple):
    e: ModuleMap
    mimage: Subobject


def image(f: ModuleMap) -> Subobject:
    return Subobject.generated_by(f.cod, f.matrix)


def image_factorization(f: ModuleMap) -> ImageFactorization:
    sub = image(f)
    return ImageFactorization(sub.factor(f), sub)


def is_injective(f: ModuleMap) -> bool:
    return image(f).module.size == f.dom.size


def is_surjective(f: ModuleMap) -> bool:
    return image(f).module.size == f.cod.size


def is_isomorphic(a: FpModule, b: FpModule) -> bool:
    return a.modulus == b.modulus and a.factors == b.factors


def is_iso(f: ModuleMap) -> bool:
    return is_injective(f) and is_surjective(f)


def is_exact_at(f: ModuleMap, g: ModuleMap) -> bool:
    """``im f == ker g`` as submodules of ``cod f``."""
    if f.cod != g.dom:
        raise DimensionMismatch("cod(f) must equal dom(g)")
    return image(f) == kernel(g)


# ---------------------------------------------------------------------------
# Sums and finite limits
# ---------------------------------------------------------------------------


class DirectSum(NamedTuple):
    module: FpModule
    injections: list
    projections: list


def direct_sum(modules: Sequence[FpModule], modulus=None) -> DirectSum:
    modules = list(modules)
    m = modules[0].modulus if modules else check_modulus(modulus)
    raw = tuple(d for M in modules for d in M.factors)
    canon = canonicalize_orders(m, raw)
    to_c, from_c = canon.to_canonical.to_array(), canon.from_canonical.to_array()
    inj, proj, off = [], [], 0
    for M in modules:
        k = M.rank
        inj.append(ModuleMap(M, canon.module, to_c[:, off : off + k], check=False))
        proj.append(ModuleMap(canon.module, M, from_c[off : off + k, :], check=False))
        off += k
    return DirectSum(canon.module, inj, proj)


@dataclass(frozen=True, eq=False)
class Limit:
    """Apex of a limit cone together with its projections.

    :meth:`factor` is the universal property: a compatible family of maps
    into the diagram objects factors uniquely through the apex.
    """

    apex: FpModule
    projections: list

    def __iter__(self):
        return iter((self.apex, self.projections))

    @cached_property
    def _solver(self) -> LinearSolver:
        m = self.apex.modulus
        total = sum(p.cod.rank for p in self.projections)
        emb = np.vstack([p.matrix.to_array() for p in self.projections]) if self.projections else None
        emb = as_columns(emb if emb is not None else np.zeros((0, self.apex.rank)), total)
        return LinearSolver(
            ResidueMatrix(m, emb), relations=_raw_relations([p.cod for p in self.projections])
        )

    def factor(self, maps: Sequence[ModuleMap]) -> ModuleMap:
        """The map ``u`` with ``projections[i] o u == maps[i]`` for all i."""
        maps = list(maps)
        if len(maps) != len(self.projections):
            raise DimensionMismatch("one map per projection is required")
        dom = maps[0].dom
        for f, p in zip(maps, self.projections):
            if f.cod != p.cod or f.dom != dom:
                raise DimensionMismatch("family does not match the limit cone")
        v = np.vstack([f.matrix.to_array() for f in maps])
        y, ok = self._solver.solve_many(v)
        if not ok.all():
            raise ConstraintViolation("family does not satisfy the limit constraints")
        return ModuleMap(dom, self.apex, y, check=False)


def _raw_relations(modules: Sequence[FpModule]) -> np.ndarray:
    if not modules:
        return np.zeros((0, 0), np.int64)
    orders = np.concatenate([M.orders for M in modules])
    return np.diag(orders % modules[0].modulus).reshape(orders.size, orders.size)


def constrained_product(objects: Sequence[FpModule], constraints: Sequence[tuple]) -> Limit:
    """Submodule of ``prod objects`` cut out by linear constraints.

    Each constraint is ``(terms, cod)`` where ``terms`` is a list of
    ``(slot, map)`` pairs with ``map: objects[slot] -> cod``; it demands
    ``sum map(x_slot) == 0`` in ``cod``.
    """
    objects = list(objects)
    m = objects[0].modulus
    ranks = [M.rank for M in objects]
    total = sum(ranks)
    if total > SPARSE_THRESHOLD:
        raise EnumerationTooLarge(total, SPARSE_THRESHOLD, "limit product rank")
    offs = np.cumsum([0] + ranks)
    blocks, cods = [], []
    for terms, cod in constraints:
        row = np.zeros((cod.rank, total), dtype=np.int64)
        for slot, f in terms:
            if f.dom != objects[slot] or f.cod != cod:
                raise DimensionMismatch("constraint term does not match diagram objects")
            row[:, offs[slot] : offs[slot + 1]] += f.matrix.to_array()
        blocks.append(row % m)
        cods.append(cod)
    if blocks:
        cons = np.vstack(blocks)
        gens = kernel_generators(ResidueMatrix(m, cons), relations=_raw_relations(cods)).to_array()
    else:
        gens = np.eye(total, dtype=np.int64)
    gens = as_columns(gens, total)
    module, _, lift = _present(gens, _raw_relations(objects), m)
    emb = (gens @ lift) % m if lift.size else np.zeros((total, module.rank), np.int64)
    projections = [
        ModuleMap(module, M, emb[offs[i] : offs[i + 1], :], check=False) for i, M in enumerate(objects)
    ]
    return Limit(module, projections)


def finite_limit(objects: Sequence[FpModule], arrows: Sequence[tuple]) -> Limit:
    """Limit of a finite diagram.

    ``arrows`` holds triples ``(src, tgt, map)`` indexing into ``objects``.
    The apex is the submodule of the product of all objects cut out by
    ``map(x_src) == x_tgt`` for every arrow.
    """
    objects = list(objects)
    constraints = []
    for s, t, f in arrows:
        if f.dom != objects[s] or f.cod != objects[t]:
            raise DimensionMismatch("arrow does not match diagram objects")
        constraints.append(([(s, f), (t, -ModuleMap.identity(f.cod))], f.cod))
    return constrained_product(objects, constraints)


def pullback(f: ModuleMap, g: ModuleMap) -> Limit:
    """Pullback of ``f: X -> Z`` and ``g: Y -> Z``; projections to X and Y."""
    if f.cod != g.cod:
        raise DimensionMismatch("pullback needs a common codomain")
    lim = constrained_product([f.dom, g.dom], [([(0, f), (1, -g)], f.cod)])
    return lim


def kernel_pair(f: ModuleMap) -> Limit:
    return pullback(f, f)


def equalizer(f: ModuleMap, g: ModuleMap) -> Subobject:
    return kernel(f - g)


def simplicial_kernel(fs: Sequence[ModuleMap]) -> Limit:
    """Universal family ``(k_0..k_{n+1})`` with ``f_i k_j = f_{j-1} k_i`` for i < j."""
    fs = list(fs)
    if not fs:
        raise DimensionMismatch("need at least one map")
    X, Y = fs[0].dom, fs[0].cod
    if any(f.dom != X or f.cod != Y for f in fs):
        raise DimensionMismatch("simplicial kernel needs parallel maps")
    copies = len(fs) + 1
    constraints = [
        ([(j, fs[i]), (i, -fs[j - 1])], Y) for j in range(copies) for i in range(j)
    ]
    return constrained_product([X] * copies, constraints)


# ---------------------------------------------------------------------------
# Squares
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CospanSquare:
    """Commuting square ``bottom o left == right o top``.

    ::

        X' --top--> Y'
        |left       |right
        X --bottom-> Y
    """

    top: ModuleMap
    left: ModuleMap
    right: ModuleMap
    bottom: ModuleMap

    def __post_init__(self):
        if self.bottom @ self.left != self.right @ self.top:
            raise InvalidStructure("square does not commute")


def regular_pushout_check(sq: CospanSquare, *, require_epi: bool = True) -> bool:
    """Is the comparison map ``X' -> X x_Y Y'`` surjective?

    With ``require_epi=False`` the surjectivity test is still answered for
    squares whose horizontal maps are not onto.
    """
    if require_epi and not (is_surjective(sq.top) and is_surjective(sq.bottom)):
        raise NotEpi("horizontal maps of a regular pushout square must be surjective")
    pb = pullback(sq.bottom, sq.right)
    # both sides as lattices in the raw product X + Y'
    m = sq.top.modulus
    rels = _raw_relations([sq.left.cod, sq.top.cod])
    cmp_gens = np.vstack([sq.left.matrix.to_array(), sq.top.matrix.to_array()])
    emb = np.vstack([p.matrix.to_array() for p in pb.projections])
    n = rels.shape[0]
    span_img = RowSpan(np.vstack([cmp_gens.T, rels.T]), m)
    span_pb = RowSpan(np.vstack([emb.T, rels.T]), m)
    return np.array_equal(span_img.basis, span_pb.basis)


# ---------------------------------------------------------------------------
# Tensor products
# ---------------------------------------------------------------------------


def _raw_tensor_orders(b: FpModule, M: FpModule) -> tuple:
    return tuple(math.gcd(bk, d) for bk in b.factors for d in M.factors)


def tensor_maps(alpha: ModuleMap, f: ModuleMap) -> ModuleMap:
    """``alpha (x) f : B (x) M -> B' (x) N`` in canonical coordinates."""
    if alpha.modulus != f.modulus:
        raise ModulusMismatch("maps over different rings")
    m = f.modulus
    cd = canonicalize_orders(m, _raw_tensor_orders(alpha.dom, f.dom))
    cc = canonicalize_orders(m, _raw_tensor_orders(alpha.cod, f.cod))
    if alpha.matrix.is_sparse or f.matrix.is_sparse or alpha.dom.rank * f.dom.rank > SPARSE_THRESHOLD:
        raw = sp.kron(alpha.matrix.to_sparse(), f.matrix.to_sparse(), format="csr")
    else:
        raw = np.kron(alpha.matrix.to_array(), f.matrix.to_array()).reshape(
            alpha.cod.rank * f.cod.rank, alpha.dom.rank * f.dom.rank
        )
    mat = cc.to_canonical @ ResidueMatrix(m, raw) @ cd.from_canonical
    return ModuleMap(cd.module, cc.module, mat, check=False)


@dataclass(frozen=True)
class TensorFunctor:
    """The functor ``B (x)_{Z/m} -`` on modules and maps."""

    b: FpModule

    def obj(self, M: FpModule) -> FpModule:
        if M.modulus != self.b.modulus:
            raise ModulusMismatch("coefficient module over a different ring")
        return canonicalize_orders(M.modulus, _raw_tensor_orders(self.b, M)).module

    def map(self, f: ModuleMap) -> ModuleMap:
        return tensor_maps(ModuleMap.identity(self.b), f)

    def __call__(self, x):
        return self.map(x) if isinstance(x, ModuleMap) else self.obj(x)


def tensor(b: FpModule, x):
    """``b (x) x`` for a module or a map ``x``."""
    return TensorFunctor(b)(x)
