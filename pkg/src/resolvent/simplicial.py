"""Truncated simplicial modules, their chain complexes, homology and homotopies.

Conventions
-----------
``A.face(n, i)`` is ``d_i : A_n -> A_{n-1}`` and ``A.degeneracy(n, i)`` is
``s_i : A_n -> A_{n+1}``.  An augmented object also has a level ``-1`` and
``A.face(0, 0)`` is the augmentation.  Only identities whose every term lies
inside the truncation are ever asserted.

Hom-valued views (``Hom(P, A)`` for a module ``P``) are handled by
:class:`GroupView`: an element at level ``n`` is an integer array with one
row per generator of ``A_n`` and one column per generator of ``P``.  Module
elements are the one-column case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConstraintViolation,
    DimensionMismatch,
    InvalidHorn,
    InvalidStructure,
    TruncationTooShallow,
    WindowTooSmall,
)
from .modules import (
    FpModule,
    Limit,
    ModuleMap,
    Subobject,
    _present,
    _raw_relations,
    cokernel,
    constrained_product,
    enumeration_limit,
    enumerate_elements,
    kernel,
)
from .zmod import LinearSolver, ResidueMatrix, RowSpan, as_columns, kernel_generators, vstack

# ---------------------------------------------------------------------------
# Simplicial objects
# ---------------------------------------------------------------------------


class AugSimplicialObject:
    """A simplicial module truncated at ``depth``, optionally augmented.

    ``levels`` maps ``n`` to ``A_n``; ``faces`` maps ``(n, i)`` to ``d_i`` on
    ``A_n``; ``degeneracies`` maps ``(n, i)`` to ``s_i`` on ``A_n``.
    """

    def __init__(
        self,
        levels: dict,
        faces: dict,
        degeneracies: dict,
        *,
        augmented: bool = False,
        validate: bool = True,
        name: str | None = None,
    ):
        self.augmented = bool(augmented)
        self.lo = -1 if self.augmented else 0
        if not levels:
            raise InvalidStructure("a simplicial object needs at least one level")
        self.depth = max(levels)
        self.levels = {n: levels[n] for n in range(self.lo, self.depth + 1)}
        self.modulus = self.levels[self.lo].modulus
        self.faces = dict(faces)
        self.degeneracies = dict(degeneracies)
        self.name = name
        for n in range(self.lo + 1, self.depth + 1):
            for i in range(n + 1):
                f = self.faces.get((n, i))
                if f is None:
                    raise InvalidStructure(f"missing face d_{i} on level {n}")
                if f.dom != self.levels[n] or f.cod != self.levels[n - 1]:
                    raise InvalidStructure(f"face d_{i} on level {n} has wrong (co)domain")
        for n in range(0, self.depth):
            for i in range(n + 1):
                s = self.degeneracies.get((n, i))
                if s is None:
                    raise InvalidStructure(f"missing degeneracy s_{i} on level {n}")
                if s.dom != self.levels[n] or s.cod != self.levels[n + 1]:
                    raise InvalidStructure(f"degeneracy s_{i} on level {n} has wrong (co)domain")
        if validate and not validate_simplicial(self):
            raise InvalidStructure("simplicial identities fail")

    def level(self, n: int) -> FpModule:
        if n not in self.levels:
            raise TruncationTooShallow(f"level {n} is outside the truncation [{self.lo}, {self.depth}]")
        return self.levels[n]

    def face(self, n: int, i: int) -> ModuleMap:
        if (n, i) not in self.faces:
            raise TruncationTooShallow(f"face d_{i} on level {n} is not available")
        return self.faces[(n, i)]

    def degeneracy(self, n: int, i: int) -> ModuleMap:
        if (n, i) not in self.degeneracies:
            raise TruncationTooShallow(f"degeneracy s_{i} on level {n} is not available")
        return self.degeneracies[(n, i)]

    @property
    def augmentation(self) -> ModuleMap:
        return self.face(0, 0)

    def require(self, n: int, what: str = ""):
        if n > self.depth:
            raise TruncationTooShallow(f"{what or 'operation'} needs level {n}, truncation is {self.depth}")

    def truncated(self, depth: int) -> "AugSimplicialObject":
        self.require(depth)
        return AugSimplicialObject(
            {n: M for n, M in self.levels.items() if n <= depth},
            {k: v for k, v in self.faces.items() if k[0] <= depth},
            {k: v for k, v in self.degeneracies.items() if k[0] < depth},
            augmented=self.augmented,
            validate=False,
            name=self.name,
        )

    def non_augmented(self) -> "AugSimplicialObject":
        if not self.augmented:
            return self
        return AugSimplicialObject(
            {n: M for n, M in self.levels.items() if n >= 0},
            {k: v for k, v in self.faces.items() if k[0] >= 1},
            self.degeneracies,
            augmented=False,
            validate=False,
            name=self.name,
        )

    def map_levels(self, on_obj: Callable, on_map: Callable, validate: bool = True) -> "AugSimplicialObject":
        """Apply a functor levelwise."""
        return AugSimplicialObject(
            {n: on_obj(M) for n, M in self.levels.items()},
            {k: on_map(v) for k, v in self.faces.items()},
            {k: on_map(v) for k, v in self.degeneracies.items()},
            augmented=self.augmented,
            validate=validate,
            name=self.name,
        )

    def ranks(self) -> list[int]:
        return [self.levels[n].rank for n in range(self.lo, self.depth + 1)]

    def __repr__(self):
        kind = "augmented " if self.augmented else ""
        return f"<{kind}simplicial module depth {self.depth}, ranks {self.ranks()}>"

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "augmented": self.augmented,
            "levels": {str(n): M.to_json() for n, M in self.levels.items()},
            "faces": [[n, i, f.matrix.tolist()] for (n, i), f in sorted(self.faces.items())],
            "degeneracies": [[n, i, s.matrix.tolist()] for (n, i), s in sorted(self.degeneracies.items())],
        }

    @classmethod
    def from_json(cls, obj: dict, validate: bool = True) -> "AugSimplicialObject":
        levels = {int(n): FpModule.from_json(M) for n, M in obj["levels"].items()}
        faces = {
            (n, i): ModuleMap(levels[n], levels[n - 1], np.array(mat, dtype=np.int64).reshape(levels[n - 1].rank, levels[n].rank))
            for n, i, mat in obj["faces"]
        }
        degs = {
            (n, i): ModuleMap(levels[n], levels[n + 1], np.array(mat, dtype=np.int64).reshape(levels[n + 1].rank, levels[n].rank))
            for n, i, mat in obj["degeneracies"]
        }
        return cls(levels, faces, degs, augmented=obj.get("augmented", False), validate=validate)


def constant_object(module: FpModule, depth: int, augmented: bool = False) -> AugSimplicialObject:
    """``K(M)``: every level ``M`` and every structure map the identity."""
    ident = ModuleMap.identity(module)
    lo = -1 if augmented else 0
    levels = {n: module for n in range(lo, depth + 1)}
    faces = {(n, i): ident for n in range(lo + 1, depth + 1) for i in range(n + 1)}
    degs = {(n, i): ident for n in range(depth) for i in range(n + 1)}
    return AugSimplicialObject(levels, faces, degs, augmented=augmented)


def simplicial_identity_failures(a: AugSimplicialObject) -> list[str]:
    """Names of the in-range simplicial identities that fail."""
    bad = []
    d, s = a.faces, a.degeneracies
    for n in range(a.lo + 2, a.depth + 1):
        for j in range(n + 1):
            for i in range(j):
                if d[(n - 1, i)] @ d[(n, j)] != d[(n - 1, j - 1)] @ d[(n, i)]:
                    bad.append(f"d{i} d{j} = d{j - 1} d{i} on level {n}")
    for n in range(0, a.depth):
        ident = ModuleMap.identity(a.levels[n])
        for j in range(n + 1):
            sj = s[(n, j)]
            for i in range(n + 2):
                lhs = d[(n + 1, i)] @ sj
                if i < j:
                    rhs = s[(n - 1, j - 1)] @ d[(n, i)] if n >= 1 else None
                elif i in (j, j + 1):
                    rhs = ident
                else:
                    rhs = s[(n - 1, j)] @ d[(n, i - 1)] if n >= 1 else None
                if rhs is not None and lhs != rhs:
                    bad.append(f"d{i} s{j} on level {n}")
    for n in range(0, a.depth - 1):
        for j in range(n + 1):
            for i in range(j + 1):
                if s[(n + 1, i)] @ s[(n, j)] != s[(n + 1, j + 1)] @ s[(n, i)]:
                    bad.append(f"s{i} s{j} = s{j + 1} s{i} on level {n}")
    return bad


def validate_simplicial(a: AugSimplicialObject) -> bool:
    return not simplicial_identity_failures(a)


# ---------------------------------------------------------------------------
# Maps between simplicial objects
# ---------------------------------------------------------------------------


class SemiSimplicialMap:
    """Levelwise maps commuting with the faces."""

    def __init__(self, source: AugSimplicialObject, target: AugSimplicialObject, components: dict, *, check: bool = True):
        self.source, self.target = source, target
        self.components = dict(components)
        self.lo = min(self.components)
        self.depth = max(self.components)
        for n in range(self.lo, self.depth + 1):
            c = self.components.get(n)
            if c is None:
                raise InvalidStructure(f"missing component at level {n}")
            if c.dom != source.level(n) or c.cod != target.level(n):
                raise InvalidStructure(f"component {n} has wrong (co)domain")
        if check:
            failures = self.face_failures()
            if failures:
                raise InvalidStructure("map does not commute with faces: " + ", ".join(failures[:3]))

    def __getitem__(self, n: int) -> ModuleMap:
        if n not in self.components:
            raise TruncationTooShallow(f"component at level {n} not available")
        return self.components[n]

    def face_failures(self) -> list[str]:
        bad = []
        for n in range(self.lo + 1, self.depth + 1):
            for i in range(n + 1):
                if self.target.face(n, i) @ self[n] != self[n - 1] @ self.source.face(n, i):
                    bad.append(f"d{i} at level {n}")
        return bad

    def degeneracy_failures(self) -> list[str]:
        bad = []
        for n in range(self.lo, self.depth):
            if n < 0:
                continue
            for i in range(n + 1):
                if self.target.degeneracy(n, i) @ self[n] != self[n + 1] @ self.source.degeneracy(n, i):
                    bad.append(f"s{i} at level {n}")
        return bad

    def is_simplicial(self) -> bool:
        return not self.face_failures() and not self.degeneracy_failures()

    def compose(self, other: "SemiSimplicialMap") -> "SemiSimplicialMap":
        """``self o other``."""
        lo = max(self.lo, other.lo)
        hi = min(self.depth, other.depth)
        comps = {n: self[n] @ other[n] for n in range(lo, hi + 1)}
        return SemiSimplicialMap(other.source, self.target, comps, check=False)

    def __matmul__(self, other):
        return self.compose(other)

    def restricted(self, lo: int, hi: int) -> "SemiSimplicialMap":
        return SemiSimplicialMap(self.source, self.target, {n: self[n] for n in range(lo, hi + 1)}, check=False)

    def __eq__(self, other):
        if not isinstance(other, SemiSimplicialMap):
            return NotImplemented
        return self.components.keys() == other.components.keys() and all(
            self[n] == other[n] for n in self.components
        )

    __hash__ = None

    @classmethod
    def identity(cls, a: AugSimplicialObject) -> "SemiSimplicialMap":
        return cls(a, a, {n: ModuleMap.identity(M) for n, M in a.levels.items()}, check=False)

    def to_json(self) -> dict:
        return {str(n): c.matrix.tolist() for n, c in sorted(self.components.items())}


def combine_maps(coeffs: Iterable[int], maps: list[SemiSimplicialMap]) -> SemiSimplicialMap:
    """Pointwise linear combination of parallel maps."""
    coeffs = list(coeffs)
    base = maps[0]
    comps = {}
    for n in base.components:
        acc = base[n].scale(coeffs[0])
        for c, f in zip(coeffs[1:], maps[1:]):
            acc = acc + f[n].scale(c)
        comps[n] = acc
    return SemiSimplicialMap(base.source, base.target, comps, check=False)


# ---------------------------------------------------------------------------
# Chain complexes
# ---------------------------------------------------------------------------


class ChainComplex:
    """Objects ``C_n`` for ``lo <= n <= hi`` with boundaries ``d_n : C_n -> C_{n-1}``.

    ``lower_closed`` / ``upper_closed`` say whether the objects just outside
    the window are known to vanish.
    """

    def __init__(self, objects: dict, boundaries: dict, *, lower_closed=True, upper_closed=False, check=True):
        self.objects = dict(objects)
        self.boundaries = dict(boundaries)
        self.lo, self.hi = min(self.objects), max(self.objects)
        self.lower_closed, self.upper_closed = lower_closed, upper_closed
        for n in range(self.lo + 1, self.hi + 1):
            d = self.boundaries.get(n)
            if d is None or d.dom != self.objects[n] or d.cod != self.objects[n - 1]:
                raise InvalidStructure(f"bad boundary d_{n}")
        if check:
            for n in range(self.lo + 2, self.hi + 1):
                if not (self.boundaries[n - 1] @ self.boundaries[n]).is_zero():
                    raise InvalidStructure(f"d_{n - 1} d_{n} != 0")

    def obj(self, n: int) -> FpModule:
        m = next(iter(self.objects.values())).modulus
        if n in self.objects:
            return self.objects[n]
        if (n < self.lo and self.lower_closed) or (n > self.hi and self.upper_closed):
            return FpModule.zero(m)
        raise WindowTooSmall(f"degree {n} outside the window [{self.lo}, {self.hi}]")

    def d(self, n: int) -> ModuleMap:
        if n in self.boundaries:
            return self.boundaries[n]
        return ModuleMap.zero(self.obj(n), self.obj(n - 1))


def homology_of_complex(c: ChainComplex, n: int) -> FpModule:
    """``K[d_n] / im d_{n+1}`` in canonical form."""
    c.obj(n - 1), c.obj(n + 1)
    z = kernel(c.d(n))
    d_prime = z.factor(c.d(n + 1))
    return cokernel(d_prime).q


def is_exact_complex_at(c: ChainComplex, n: int) -> bool:
    from .modules import is_exact_at

    return is_exact_at(c.d(n + 1), c.d(n))


# ---------------------------------------------------------------------------
# Moore complex and homology
# ---------------------------------------------------------------------------


def _stacked_faces(a: AugSimplicialObject, n: int, count: int) -> ResidueMatrix:
    mats = [a.face(n, i).matrix for i in range(count)]
    return vstack(mats, modulus=a.modulus, cols=a.level(n).rank)


def _face_kernel(a: AugSimplicialObject, n: int, count: int) -> Subobject:
    """``intersection_{i < count} K[d_i]`` inside ``A_n``."""
    An = a.level(n)
    if count == 0 or n == 0 and not a.augmented:
        return Subobject.whole(An)
    rel = _raw_relations([a.level(n - 1)] * count)
    gens = kernel_generators(_stacked_faces(a, n, count), relations=rel)
    return Subobject.generated_by(An, gens)


@dataclass
class MooreComplex:
    complex: ChainComplex
    normalized: dict  # n -> Subobject of A_n
    cycles: dict  # n -> Subobject of A_n


def moore_complex(a: AugSimplicialObject, up_to: int | None = None) -> MooreComplex:
    """Normalized complex of the non-augmented part, with cycle subobjects."""
    b = a.non_augmented()
    top = b.depth if up_to is None else up_to
    b.require(top, "Moore complex")
    normalized = {n: _face_kernel(b, n, n) for n in range(0, top + 1)}
    objects = {n: N.module for n, N in normalized.items()}
    bounds = {}
    for n in range(1, top + 1):
        dn = b.face(n, n) @ normalized[n].embedding
        bounds[n] = normalized[n - 1].factor(dn)
    cplx = ChainComplex(objects, bounds, lower_closed=True, upper_closed=False)
    cycles = {}
    for n in range(0, top + 1):
        if n == 0:
            cycles[n] = Subobject.whole(b.level(0))
        else:
            cycles[n] = _face_kernel(b, n, n + 1)
    return MooreComplex(cplx, normalized, cycles)


def unnormalized_complex(a: AugSimplicialObject, up_to: int | None = None) -> ChainComplex:
    """``C_n = A_n`` with ``d_n = sum (-1)^i d_i``."""
    b = a.non_augmented()
    top = b.depth if up_to is None else up_to
    b.require(top, "unnormalized complex")
    objects = {n: b.level(n) for n in range(0, top + 1)}
    bounds = {}
    for n in range(1, top + 1):
        acc = ModuleMap.zero(b.level(n), b.level(n - 1))
        for i in range(n + 1):
            f = b.face(n, i)
            acc = acc + f if i % 2 == 0 else acc - f
        bounds[n] = acc
    return ChainComplex(objects, bounds, lower_closed=True, upper_closed=False)


class HomologyData:
    """``H_n`` of a simplicial module with enough bookkeeping to induce maps.

    ``representatives`` holds, as columns in ``A_n`` coordinates, one cycle
    for each canonical generator of ``module``.
    """

    def __init__(self, a: AugSimplicialObject, n: int):
        b = a.non_augmented()
        b.require(n + 1, f"H_{n}")
        self.n = n
        self.ambient = An = b.level(n)
        m = b.modulus
        if n == 0:
            zg = np.eye(An.rank, dtype=np.int64)
        else:
            rel = _raw_relations([b.level(n - 1)] * (n + 1))
            zg = kernel_generators(_stacked_faces(b, n, n + 1), relations=rel).to_array()
        self.cycle_generators = as_columns(zg, An.rank)
        bound = _boundary_lattice(b, n)
        self.boundary_rows = bound
        rels = np.hstack([bound.T, An.relations()]) if bound.size else An.relations()
        self._rels = as_columns(rels, An.rank)
        module, proj, lift = _present(self.cycle_generators, self._rels, m)
        self.module = module
        self._proj = proj
        reps = (self.cycle_generators @ lift) % m if lift.size else np.zeros((An.rank, module.rank), np.int64)
        self.representatives = An.reduce(reps)

    @cached_property
    def _solver(self) -> LinearSolver:
        return LinearSolver(ResidueMatrix(self.ambient.modulus, self.cycle_generators), relations=self._rels)

    def classes(self, vectors) -> np.ndarray:
        """Canonical coordinates in ``H_n`` of cycles given as columns."""
        v = as_columns(vectors, self.ambient.rank)
        y, ok = self._solver.solve_many(v)
        if not ok.all():
            raise ConstraintViolation("vector is not a cycle")
        if self.module.rank == 0:
            return np.zeros((0, v.shape[1]), dtype=np.int64)
        return self.module.reduce(ResidueMatrix(self.ambient.modulus, self._proj).apply(y))

    def induced(self, fn: ModuleMap, target: "HomologyData") -> ModuleMap:
        """``H_n f`` for a chain-level map ``fn : A_n -> B_n``."""
        if fn.dom != self.ambient or fn.cod != target.ambient:
            raise DimensionMismatch("map does not match homology data")
        images = fn.apply(self.representatives)
        return ModuleMap(self.module, target.module, target.classes(images), check=False)


def _boundary_lattice(b: AugSimplicialObject, n: int) -> np.ndarray:
    """Rows spanning ``d_{n+1}(N_{n+1})`` (with the relations of ``A_n``) in ``A_n`` coordinates.

    Computed without materialising ``N_{n+1}``: the Howell basis of the
    graph ``{(S x, T x)}`` with ``S`` the first ``n+1`` faces and ``T`` the last
    one, restricted to rows whose ``S`` part vanishes.
    """
    m = b.modulus
    An = b.level(n)
    top = _stacked_faces(b, n + 1, n + 2)  # S stacked over T
    k = (n + 1) * An.rank
    graph = top.T.to_array()
    rel_s = _raw_relations([An] * (n + 1))
    rows = [graph]
    if rel_s.size:
        rows.append(np.hstack([rel_s.T, np.zeros((rel_s.shape[0], An.rank), np.int64)]))
    if An.rank:
        rows.append(np.hstack([np.zeros((An.rank, k), np.int64), An.relations().T]))
    span = RowSpan(np.vstack(rows), m)
    return span.restricted(k)[:, k:]


def homology_data(a: AugSimplicialObject, n: int) -> HomologyData:
    return HomologyData(a, n)


def homology_of_simplicial(a: AugSimplicialObject, n: int) -> FpModule:
    """``H_n`` of the Moore complex of the non-augmented part."""
    return HomologyData(a, n).module


def induced_on_homology(f: SemiSimplicialMap, n: int, src: HomologyData | None = None, tgt: HomologyData | None = None) -> ModuleMap:
    src = src or HomologyData(f.source, n)
    tgt = tgt or HomologyData(f.target, n)
    return src.induced(f[n], tgt)


# ---------------------------------------------------------------------------
# Group views, horns, fillers
# ---------------------------------------------------------------------------


class GroupView:
    """``Hom(P, A)`` as a simplicial abelian group (``columns`` = rank of P).

    With ``columns == 1`` and ``P`` free of rank one this is ``A`` itself.
    Elements are arrays of shape ``(rank A_n, columns)``.
    """

    def __init__(self, a: AugSimplicialObject, columns: int = 1):
        self.a = a
        self.columns = columns
        self.modulus = a.modulus
        self._cache = {}

    def _op(self, key, mat: ModuleMap):
        op = self._cache.get(key)
        if op is None:
            m = self.modulus
            inner = mat.dom.rank
            if inner * (m - 1) ** 2 >= 2**62:
                op = ("slow", mat)
            elif mat.matrix.is_sparse:
                op = ("sparse", mat.matrix.to_sparse(), mat.cod.orders[:, None])
            else:
                op = ("dense", np.ascontiguousarray(mat.matrix.to_array()), mat.cod.orders[:, None])
            self._cache[key] = op
        return op

    @staticmethod
    def _run(op, x):
        if op[0] == "slow":
            return op[1].apply(x)
        out = op[1] @ x
        return np.asarray(out) % op[2]

    def rank(self, n: int) -> int:
        return self.a.level(n).rank

    def zero(self, n: int) -> np.ndarray:
        return np.zeros((self.rank(n), self.columns), dtype=np.int64)

    def reduce(self, n: int, x: np.ndarray) -> np.ndarray:
        return x % self.a.level(n).orders[:, None]

    def face(self, n: int, i: int, x: np.ndarray) -> np.ndarray:
        return self._run(self._op(("d", n, i), self.a.face(n, i)), x)

    def degeneracy(self, n: int, i: int, x: np.ndarray) -> np.ndarray:
        return self._run(self._op(("s", n, i), self.a.degeneracy(n, i)), x)

    def equal(self, n: int, x, y) -> bool:
        return bool(np.array_equal(self.reduce(n, x), self.reduce(n, y)))


@dataclass
class Horn:
    """An ``(n, k)``-horn: faces ``s_i`` (level ``n-1``) for ``i != k``."""

    view: GroupView
    n: int
    k: int
    faces: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.k <= self.n:
            raise InvalidHorn(f"no ({self.n}, {self.k})-horns")
        expected = set(range(self.n + 1)) - {self.k}
        if set(self.faces) != expected:
            raise InvalidHorn(f"horn needs faces {sorted(expected)}")

    def is_compatible(self) -> bool:
        v, n = self.view, self.n
        if n - 2 < v.a.lo:
            return True
        for j in self.faces:
            for i in self.faces:
                if i < j and not v.equal(n - 2, v.face(n - 1, i, self.faces[j]), v.face(n - 1, j - 1, self.faces[i])):
                    return False
        return True


def fill_horn(horn: Horn, check: bool = True) -> np.ndarray:
    """Filler by the ascending/descending degeneracy sweep."""
    if check and not horn.is_compatible():
        raise InvalidHorn("horn faces are not compatible")
    v, n, k = horn.view, horn.n, horn.k
    w = v.zero(n)
    for i in range(k):
        diff = horn.faces[i] - v.face(n, i, w)
        w = w + v.degeneracy(n - 1, i, diff)
    for i in range(n, k, -1):
        diff = horn.faces[i] - v.face(n, i, w)
        w = w + v.degeneracy(n - 1, i - 1, diff)
    return v.reduce(n, w)


def horn_from_element(view: GroupView, n: int, k: int, x: np.ndarray) -> Horn:
    return Horn(view, n, k, {i: view.face(n, i, x) for i in range(n + 1) if i != k})


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------


class Contraction:
    """Maps ``h_n`` from level ``n`` to level ``n+1`` given as an element function.

    ``fn(n, x)`` takes a batch of level-``n`` elements (columns) and returns
    their images.  The same function contracts every ``Hom(P, A)`` with ``P``
    free, acting column by column.
    """

    def __init__(self, a: AugSimplicialObject, fn: Callable, lo: int | None = None, hi: int | None = None, name: str = ""):
        self.a = a
        self.fn = fn
        self.lo = a.lo if lo is None else lo
        self.hi = a.depth - 1 if hi is None else hi
        self.name = name

    def __call__(self, n: int, x: np.ndarray) -> np.ndarray:
        if not self.lo <= n <= self.hi:
            raise TruncationTooShallow(f"contraction not available at level {n}")
        x = as_columns(x, self.a.level(n).rank)
        return self.fn(n, x)

    def on_map(self, n: int, f: ModuleMap) -> ModuleMap:
        """``h_n(f)`` for ``f : P -> A_n`` with ``P`` free."""
        if not f.dom.is_free:
            raise InvalidStructure("contractions act on maps out of free modules")
        return ModuleMap(f.dom, self.a.level(n + 1), self(n, f.matrix.to_array()), check=False)


def _sample_elements(module: FpModule, rng: np.random.Generator, count: int) -> np.ndarray:
    if module.size <= min(count, enumeration_limit()):
        return enumerate_elements(module).T
    return rng.integers(0, 1 << 62, size=(module.rank, count)) % module.orders[:, None]


def contraction_failures(c: Contraction, samples: int = 256, seed: int = 0) -> list[str]:
    view = GroupView(c.a)
    rng = np.random.default_rng(seed)
    bad = []
    for n in range(c.lo, c.hi + 1):
        x = _sample_elements(c.a.level(n), rng, samples)
        hx = c(n, x)
        if not view.equal(n, view.face(n + 1, 0, hx), x):
            bad.append(f"d0 h_{n} != 1")
        for i in range(1, n + 2):
            if n - 1 < c.lo:
                break
            lhs = view.face(n + 1, i, hx)
            rhs = c(n - 1, view.face(n, i - 1, x))
            if not view.equal(n, lhs, rhs):
                bad.append(f"d{i} h_{n} != h_{n - 1} d{i - 1}")
    return bad


def verify_contraction(c: Contraction, samples: int = 256, seed: int = 0) -> bool:
    """Check both contraction identities on every element (or a seeded sample)."""
    return not contraction_failures(c, samples, seed)


# ---------------------------------------------------------------------------
# Homotopies
# ---------------------------------------------------------------------------


@dataclass
class Homotopy:
    """Maps ``h^n_i : B_n -> A_{n+1}`` for ``0 <= i <= n <= depth`` between ``f`` and ``g``."""

    f: SemiSimplicialMap
    g: SemiSimplicialMap
    maps: dict
    depth: int

    def __getitem__(self, key) -> ModuleMap:
        return self.maps[key]


def homotopy_failures(h: Homotopy) -> list[str]:
    a = h.f.target
    bsrc = h.f.source
    bad = []
    for n in range(0, h.depth + 1):
        if h[(n, 0)].dom != bsrc.level(n) or h[(n, 0)].cod != a.level(n + 1):
            bad.append(f"h^{n} has wrong (co)domain")
            continue
        if a.face(n + 1, 0) @ h[(n, 0)] != h.f[n]:
            bad.append(f"d0 h^{n}_0 != f_{n}")
        if a.face(n + 1, n + 1) @ h[(n, n)] != h.g[n]:
            bad.append(f"d{n + 1} h^{n}_{n} != g_{n}")
        for j in range(n + 1):
            hj = h[(n, j)]
            for i in range(n + 2):
                lhs = a.face(n + 1, i) @ hj
                if i < j:
                    rhs = h[(n - 1, j - 1)] @ bsrc.face(n, i)
                elif i == j and j != 0:
                    rhs = a.face(n + 1, j) @ h[(n, j - 1)]
                elif i > j + 1:
                    rhs = h[(n - 1, j)] @ bsrc.face(n, i - 1)
                else:
                    continue
                if lhs != rhs:
                    bad.append(f"d{i} h^{n}_{j}")
    return bad


def verify_homotopy(h: Homotopy) -> bool:
    try:
        return not homotopy_failures(h)
    except (KeyError, DimensionMismatch, TruncationTooShallow):
        return False


def degenerate_self_homotopy(f: SemiSimplicialMap, depth: int | None = None) -> Homotopy:
    """``h^n_i = s_i f_n``, a homotopy from ``f`` to itself when ``f`` is simplicial."""
    a = f.target
    depth = min(f.depth, a.depth - 1) if depth is None else depth
    maps = {(n, i): a.degeneracy(n, i) @ f[n] for n in range(depth + 1) for i in range(n + 1)}
    return Homotopy(f, f, maps, depth)


# ---------------------------------------------------------------------------
# Cocylinder
# ---------------------------------------------------------------------------


class Cocylinder:
    """The path object ``A^I`` with ``eps0, eps1 : A^I -> A`` and ``s : A -> A^I``."""

    def __init__(self, base, obj, limits, eps0, eps1, s):
        self.base = base
        self.obj = obj
        self.limits = limits  # n -> Limit with projections pr_1..pr_{n+1}
        self.eps0, self.eps1, self.s = eps0, eps1, s

    def pr(self, n: int, j: int) -> ModuleMap:
        return self.limits[n].projections[j - 1]

    def structure_failures(self) -> list[str]:
        """Identities of ``A^I`` and simplicial-ness of ``eps0``, ``eps1``, ``s``."""
        bad = simplicial_identity_failures(self.obj)
        for name, e in (("eps0", self.eps0), ("eps1", self.eps1), ("s", self.s)):
            bad += [f"{name}: {x}" for x in e.face_failures() + e.degeneracy_failures()]
        return bad

    def section_failures(self) -> list[str]:
        ident = SemiSimplicialMap.identity(self.base.truncated(self.obj.depth))
        bad = []
        if self.eps0 @ self.s != ident:
            bad.append("eps0 s != 1")
        if self.eps1 @ self.s != ident:
            bad.append("eps1 s != 1")
        return bad

    def failures(self) -> list[str]:
        return self.structure_failures() + self.section_failures()


def cocylinder(a: AugSimplicialObject, up_to: int | None = None, *, check: bool = True) -> Cocylinder:
    b = a.non_augmented()
    top = b.depth - 1 if up_to is None else up_to
    if top < 0 or top + 1 > b.depth:
        raise TruncationTooShallow(f"cocylinder up to level {top} needs level {top + 1} of the base")
    limits = {}
    for n in range(top + 1):
        objs = [b.level(n + 1)] * (n + 1)
        cons = [
            ([(j - 1, b.face(n + 1, j)), (j, -b.face(n + 1, j))], b.level(n)) for j in range(1, n + 1)
        ]
        limits[n] = constrained_product(objs, cons)
    levels = {n: lim.apex for n, lim in limits.items()}
    faces = {}
    for n in range(1, top + 1):
        prs = limits[n].projections
        for i in range(n + 1):
            family = []
            for j in range(1, n + 1):
                if j <= i:
                    family.append(b.face(n + 1, i + 1) @ prs[j - 1])
                else:
                    family.append(b.face(n + 1, i) @ prs[j])
            faces[(n, i)] = limits[n - 1].factor(family)
    degs = {}
    for n in range(top):
        prs = limits[n].projections
        for i in range(n + 1):
            family = []
            for k in range(1, n + 3):
                if k <= i + 1:
                    family.append(b.degeneracy(n + 1, i + 1) @ prs[k - 1])
                else:
                    family.append(b.degeneracy(n + 1, i) @ prs[k - 2])
            degs[(n, i)] = limits[n + 1].factor(family)
    obj = AugSimplicialObject(levels, faces, degs, augmented=False, validate=False, name="cocylinder")
    eps0 = {n: b.face(n + 1, 0) @ limits[n].projections[0] for n in range(top + 1)}
    eps1 = {n: b.face(n + 1, n + 1) @ limits[n].projections[n] for n in range(top + 1)}
    s = {n: limits[n].factor([b.degeneracy(n, i) for i in range(n + 1)]) for n in range(top + 1)}
    base = b.truncated(top) if b.depth > top else b
    coc = Cocylinder(
        b,
        obj,
        limits,
        SemiSimplicialMap(obj, base, eps0, check=False),
        SemiSimplicialMap(obj, base, eps1, check=False),
        SemiSimplicialMap(base, obj, s, check=False),
    )
    if check:
        bad = coc.failures()
        if bad:
            raise InvalidStructure("cocylinder identities fail: " + ", ".join(bad[:4]))
    return coc


def homotopy_to_cocylinder(h: Homotopy, coc: Cocylinder | None = None) -> SemiSimplicialMap:
    """``H_n = (h^n_0, ..., h^n_n) : B_n -> A^I_n``."""
    a = h.f.target
    coc = coc or cocylinder(a, h.depth)
    src = h.f.source.non_augmented()
    comps = {n: coc.limits[n].factor([h[(n, i)] for i in range(n + 1)]) for n in range(h.depth + 1)}
    H = SemiSimplicialMap(src, coc.obj, comps, check=False)
    if H.face_failures():
        raise ConstraintViolation("tuple does not commute with the cocylinder faces")
    for n in range(h.depth + 1):
        if coc.eps0[n] @ H[n] != h.f[n] or coc.eps1[n] @ H[n] != h.g[n]:
            raise ConstraintViolation("endpoints of the cocylinder map differ from f, g")
    return H


def cocylinder_to_homotopy(H: SemiSimplicialMap, coc: Cocylinder) -> Homotopy:
    depth = H.depth
    f = SemiSimplicialMap(H.source, coc.base, {n: coc.eps0[n] @ H[n] for n in range(depth + 1)}, check=False)
    g = SemiSimplicialMap(H.source, coc.base, {n: coc.eps1[n] @ H[n] for n in range(depth + 1)}, check=False)
    maps = {(n, i): coc.pr(n, i + 1) @ H[n] for n in range(depth + 1) for i in range(n + 1)}
    return Homotopy(f, g, maps, depth)


def normalized_square(coc: Cocylinder, n: int):
    """The square ``N_{n+1} A^I -> N_{n+1} A`` over ``Z_n A^I -> Z_n A`` as a CospanSquare."""
    from .modules import CospanSquare

    ai, a = coc.obj, coc.base
    mi, ma = moore_complex(ai, n + 1), moore_complex(a, n + 1)

    top_src, top_tgt = mi.normalized[n + 1], ma.normalized[n + 1]
    z_src, z_tgt = mi.cycles[n], ma.cycles[n]
    top = top_tgt.factor(coc.eps0[n + 1] @ top_src.embedding)
    bottom = z_tgt.factor(coc.eps0[n] @ z_src.embedding)
    left = z_src.factor(ai.face(n + 1, n + 1) @ top_src.embedding)
    right = z_tgt.factor(a.face(n + 1, n + 1) @ top_tgt.embedding)
    return CospanSquare(top=top, left=left, right=right, bottom=bottom)
