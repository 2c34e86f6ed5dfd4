"""Simplicial modules that are free on chosen nondegenerate generators.

A basis element at level ``q`` is a pair ``(alpha, x)`` where ``x`` is a
generator introduced at level ``k`` and ``alpha : [q] -> [k]`` is a monotone
surjection (stored as its value tuple).  It stands for the degenerate simplex
``alpha^* x``.  Degeneracies precompose ``alpha`` with ``s_i``.  A face
precomposes with ``d_j``; if the result misses a value ``v`` it factors as
``d_v o beta`` and the face is ``beta^*`` applied to ``d_v x``.

Generators may have any order ``d | m`` as long as their faces are
``d``-torsion, so the same builder produces free resolutions and small
random simplicial modules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationTooLarge, InvalidStructure
from .modules import (
    FpModule,
    Limit,
    ModuleMap,
    canonicalize_orders,
    cokernel,
    constrained_product,
    enumerate_elements,
    simplicial_kernel,
)
from .simplicial import AugSimplicialObject
from .zmod import SPARSE_THRESHOLD, LinearSolver, ResidueMatrix, as_columns


def surjections(q: int, k: int) -> list[tuple]:
    """Monotone surjections ``[q] -> [k]`` in lexicographic order."""
    out = []
    for steps in itertools.combinations(range(1, q + 1), k):
        vals, cur, s = [], 0, set(steps)
        for t in range(q + 1):
            if t in s:
                cur += 1
            vals.append(cur)
        out.append(tuple(vals))
    return sorted(out)


@dataclass
class _Generator:
    order: int
    faces: list  # raw vectors one level down (or in the base module at level 0)


class FreeSimplicialBuilder:
    """Grow a free simplicial module one level at a time.

    With ``base`` given the result is augmented over it and level-0
    generators carry their augmentation value.
    """

    def __init__(self, modulus: int, base: FpModule | None = None):
        self.modulus = modulus
        self.base = base
        self.gens: list[list[_Generator]] = []
        self._basis: list[list[tuple]] = []
        self._index: list[dict] = []
        self._canon = []
        self._faces: dict = {}
        self._degs: dict = {}
        self._object: AugSimplicialObject | None = None

    @property
    def depth(self) -> int:
        return len(self.gens) - 1

    def level_module(self, q: int) -> FpModule:
        return self._canon[q].module

    def basis(self, q: int) -> list[tuple]:
        return self._basis[q]

    def generator_index(self, q: int) -> list[int]:
        """Basis positions of the nondegenerate generators at level ``q``."""
        ident = tuple(range(q + 1))
        return [self._index[q][(ident, q, g)] for g in range(len(self.gens[q]))]

    def _to_raw(self, q: int, vectors: np.ndarray) -> np.ndarray:
        c = self._canon[q]
        return c.from_canonical.apply(as_columns(vectors, c.module.rank))

    def _to_canonical(self, q: int, raw: np.ndarray) -> np.ndarray:
        return self._canon[q].to_canonical.apply(raw)

    def add_level(self, generators: list[tuple[int, list]]):
        """Append a level of generators ``(order, faces)``.

        ``faces`` are canonical coordinate vectors: the augmentation value in
        ``base`` at level 0, otherwise ``q + 1`` vectors at level ``q - 1``.
        """
        q = len(self.gens)
        m = self.modulus
        new = []
        for order, faces in generators:
            if q == 0:
                if self.base is None:
                    raw = []
                else:
                    raw = [np.asarray(faces[0], dtype=np.int64).reshape(-1) % m]
            else:
                if len(faces) != q + 1:
                    raise InvalidStructure(f"a level-{q} generator needs {q + 1} faces")
                raw = [self._to_raw(q - 1, np.asarray(f, dtype=np.int64).reshape(-1, 1))[:, 0] for f in faces]
            for v in raw:
                if ((order * v) % m).any():
                    raise InvalidStructure("generator faces must be killed by its order")
            new.append(_Generator(int(order), raw))
        self.gens.append(new)
        basis = []
        for k in range(q + 1):
            for alpha in surjections(q, k):
                for g in range(len(self.gens[k])):
                    basis.append((alpha, k, g))
        self._basis.append(basis)
        self._index.append({b: i for i, b in enumerate(basis)})
        orders = tuple(self.gens[k][g].order for (_, k, g) in basis)
        self._canon.append(canonicalize_orders(m, orders))
        self._build_maps(q)
        self._object = None

    def _pull(self, beta: tuple, k_from: int, vec: np.ndarray, q_to: int) -> np.ndarray:
        """``beta^*`` of a raw level-``k_from`` vector, landing in level ``q_to``."""
        out = np.zeros(len(self._basis[q_to]), dtype=np.int64)
        for idx in np.nonzero(vec)[0]:
            gamma, k, g = self._basis[k_from][idx]
            comp = tuple(gamma[b] for b in beta)
            out[self._index[q_to][(comp, k, g)]] += vec[idx]
        return out % self.modulus

    def _raw_face_column(self, q: int, j: int, entry: tuple) -> np.ndarray:
        alpha, k, g = entry
        beta = alpha[:j] + alpha[j + 1 :]
        missing = set(range(k + 1)) - set(beta)
        if not missing:
            col = np.zeros(len(self._basis[q - 1]), dtype=np.int64)
            col[self._index[q - 1][(beta, k, g)]] = 1
            return col
        (v,) = missing
        reduced = tuple(b if b < v else b - 1 for b in beta)
        return self._pull(reduced, k - 1, self.gens[k][g].faces[v], q - 1)

    def _build_maps(self, q: int):
        m = self.modulus
        basis = self._basis[q]
        if q == 0:
            if self.base is not None:
                cols = [self.gens[0][g].faces[0] for (_, _, g) in basis]
                raw = np.array(cols, dtype=np.int64).reshape(len(basis), self.base.rank).T
                mat = ResidueMatrix(m, raw) @ self._canon[0].from_canonical
                self._faces[(0, 0)] = ModuleMap(self.level_module(0), self.base, mat)
            return
        for j in range(q + 1):
            cols = [self._raw_face_column(q, j, e) for e in basis]
            raw = np.array(cols, dtype=np.int64).reshape(len(basis), len(self._basis[q - 1])).T
            mat = self._canon[q - 1].to_canonical @ ResidueMatrix(m, raw) @ self._canon[q].from_canonical
            self._faces[(q, j)] = ModuleMap(self.level_module(q), self.level_module(q - 1), mat)
        for i in range(q):
            raw = np.zeros((len(basis), len(self._basis[q - 1])), dtype=np.int64)
            for col, (alpha, k, g) in enumerate(self._basis[q - 1]):
                image = alpha[: i + 1] + alpha[i:]
                raw[self._index[q][(image, k, g)], col] = 1
            mat = self._canon[q].to_canonical @ ResidueMatrix(m, raw) @ self._canon[q - 1].from_canonical
            self._degs[(q - 1, i)] = ModuleMap(self.level_module(q - 1), self.level_module(q), mat)

    def object(self, validate: bool = True) -> AugSimplicialObject:
        if self._object is None:
            levels = {q: c.module for q, c in enumerate(self._canon)}
            if self.base is not None:
                levels[-1] = self.base
            self._object = AugSimplicialObject(
                levels, self._faces, self._degs, augmented=self.base is not None, validate=validate
            )
        return self._object

    def degenerate_positions(self, q: int) -> list[int]:
        return [i for i, (_, k, _) in enumerate(self._basis[q]) if k < q]

    def next_kernel(self) -> Limit:
        """Simplicial kernel of the faces at the current top level."""
        a = self.object(validate=False)
        q = self.depth
        if q < 0:
            raise InvalidStructure("no levels yet")
        if q == 0 and self.base is None:
            return constrained_product([a.level(0)] * 2, [])
        return simplicial_kernel([a.face(q, i) for i in range(q + 1)])

    def degenerate_image(self, kern: Limit) -> ModuleMap:
        """The degenerate part of the next level, mapped into ``kern`` by its faces.

        Returned as a map out of a free module with one generator per
        degenerate basis element.
        """
        q = self.depth
        a = self.object(validate=False)
        m = self.modulus
        An = a.level(q)
        images = []
        for (alpha, k, g) in _next_degenerate_basis(self, q + 1):
            cols = []
            for j in range(q + 2):
                beta = alpha[:j] + alpha[j + 1 :]
                missing = set(range(k + 1)) - set(beta)
                if not missing:
                    raw = np.zeros(len(self._basis[q]), dtype=np.int64)
                    raw[self._index[q][(beta, k, g)]] = 1
                else:
                    (v,) = missing
                    reduced = tuple(b if b < v else b - 1 for b in beta)
                    raw = self._pull(reduced, k - 1, self.gens[k][g].faces[v], q)
                cols.append(self._to_canonical(q, raw.reshape(-1, 1))[:, 0])
            images.append(cols)
        free = FpModule.free(m, len(images))
        maps = []
        for j in range(q + 2):
            mat = np.array([img[j] for img in images], dtype=np.int64).reshape(len(images), An.rank).T
            maps.append(ModuleMap(free, An, mat))
        return kern.factor(maps)


def _next_degenerate_basis(b: FreeSimplicialBuilder, q: int) -> list[tuple]:
    out = []
    for k in range(q):
        for alpha in surjections(q, k):
            for g in range(len(b.gens[k])):
                out.append((alpha, k, g))
    return out


def _apex_elements_as_faces(kern: Limit, vectors: np.ndarray) -> list[list[np.ndarray]]:
    """Face tuples (canonical coordinates) of apex elements given as columns."""
    vecs = as_columns(vectors, kern.apex.rank)
    parts = [p.apply(vecs) for p in kern.projections]
    return [[part[:, c] for part in parts] for c in range(vecs.shape[1])]


def cokernel_generators(f: ModuleMap) -> np.ndarray:
    """Columns in ``cod f`` whose classes are the canonical generators of ``coker f``."""
    ck = cokernel(f)
    q = ck.projection
    if ck.q.rank == 0:
        return np.zeros((q.dom.rank, 0), dtype=np.int64)
    solver = LinearSolver(q.matrix, relations=ck.q.relations())
    x, ok = solver.solve_many(np.eye(ck.q.rank, dtype=np.int64))
    assert ok.all()
    return q.dom.reduce(x)


STRATEGIES = ("minimal", "set", "pointed")


def _choose(strategy: str, module: FpModule, minimal_cols) -> np.ndarray:
    if strategy == "minimal":
        return minimal_cols()
    if module.size > SPARSE_THRESHOLD:
        raise EnumerationTooLarge(module.size, SPARSE_THRESHOLD, f"{strategy} cover of {module}")
    elems = enumerate_elements(module, where=f"presentation of {module}").T
    if strategy == "pointed":
        elems = elems[:, 1:]
    elif strategy != "set":
        raise ValueError(f"unknown presentation strategy {strategy!r}")
    return elems


def _check_level_rank(b: FreeSimplicialBuilder, new: int, strategy: str):
    q = b.depth + 1
    rank = len(_next_degenerate_basis(b, q)) + new if q > 0 else new
    if rank > SPARSE_THRESHOLD:
        raise EnumerationTooLarge(rank, SPARSE_THRESHOLD, f"rank of level {q} ({strategy} covers)")


def free_resolution(x: FpModule, strategy: str = "minimal", depth: int = 2) -> FreeSimplicialBuilder:
    """Levelwise free augmented resolution built from simplicial kernels.

    Each new level is the degenerate part plus free generators mapping onto
    the simplicial kernel (all of it modulo degeneracies for ``minimal``,
    every element or every nonzero element otherwise).
    """
    m = x.modulus
    b = FreeSimplicialBuilder(m, x)
    cols = _choose(strategy, x, lambda: np.eye(x.rank, dtype=np.int64))
    _check_level_rank(b, cols.shape[1], strategy)
    b.add_level([(m, [cols[:, c]]) for c in range(cols.shape[1])])
    for _ in range(depth):
        kern = b.next_kernel()
        if strategy == "minimal":
            cols = cokernel_generators(b.degenerate_image(kern))
        else:
            cols = _choose(strategy, kern.apex, None)
        _check_level_rank(b, cols.shape[1], strategy)
        b.add_level([(m, faces) for faces in _apex_elements_as_faces(kern, cols)])
    return b


def random_simplicial_module(rng: np.random.Generator, modulus: int, depth: int = 4, max_generators: int = 4) -> AugSimplicialObject:
    """Seeded non-augmented simplicial module with at most ``max_generators`` generators.

    One or two generators at level 0, at most one at each higher level, each
    of random order; faces of a new generator are a random element of the
    simplicial kernel scaled into the right torsion.
    """
    from .sampling import divisors

    ds = divisors(modulus)[1:]
    b = FreeSimplicialBuilder(modulus, None)
    r0 = int(rng.integers(1, 3))
    b.add_level([(int(rng.choice(ds)), []) for _ in range(r0)])
    budget = max_generators - r0
    for _ in range(depth):
        kern = b.next_kernel()
        gens = []
        if budget > 0 and rng.random() < 0.6:
            d = int(rng.choice(ds))
            apex = kern.apex
            raw = rng.integers(0, modulus, size=(apex.rank, 1)) if apex.rank else np.zeros((0, 1), np.int64)
            elem = apex.reduce((modulus // d) * raw)
            gens.append((d, _apex_elements_as_faces(kern, elem)[0]))
            budget -= 1
        b.add_level(gens)
    return b.object()
