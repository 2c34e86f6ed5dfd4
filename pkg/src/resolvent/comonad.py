"""Free-module comonads on Z/m-modules and their canonical resolutions.

``G`` sends a module ``M`` to the free module on its elements (``SET_FREE``)
or on its nonzero elements (``POINTED_FREE``, where the basepoint ``0`` is
sent to ``0``).  Basis labels are enumeration indices of ``M`` so that
nested applications of ``G`` stay reproducible.  The top level of a
resolution is only ever described by its rank.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EnumerationTooLarge, InvalidStructure
from .modules import (
    FpModule,
    ModuleMap,
    TensorFunctor,
    element_index,
    enumeration_limit,
    enumerate_elements,
    is_surjective,
)
from .simplicial import AugSimplicialObject, Contraction
from .zmod import ResidueMatrix, as_columns


class ComonadKind(enum.Enum):
    SET_FREE = "set-free"
    POINTED_FREE = "pointed-free"

    @property
    def offset(self) -> int:
        """Enumeration index of basis label 0."""
        return 1 if self is ComonadKind.POINTED_FREE else 0

    @classmethod
    def parse(cls, name) -> "ComonadKind":
        if isinstance(name, cls):
            return name
        return cls(str(name).lower().replace("_", "-"))


SET_FREE = ComonadKind.SET_FREE
POINTED_FREE = ComonadKind.POINTED_FREE


@dataclass(frozen=True)
class FreeWithBasis:
    """``G(underlying)`` with basis label ``b`` standing for element ``b + offset``."""

    kind: ComonadKind
    underlying: FpModule
    carrier: FpModule

    def labels(self) -> np.ndarray:
        """Elements of ``underlying`` labelling the basis, one per row."""
        elems = enumerate_elements(self.underlying, where=f"labels of G({self.underlying})")
        return elems[self.kind.offset :]

    def label_of(self, elements: np.ndarray) -> np.ndarray:
        """Basis label of each element (rows); ``-1`` for the pointed basepoint."""
        return element_index(self.underlying, elements) - self.kind.offset


def _g_rank(kind: ComonadKind, module: FpModule) -> int:
    return module.size - kind.offset


def _check_size(module: FpModule, where: str):
    limit = enumeration_limit()
    bits = sum(math.log2(d) for d in module.factors)
    if bits > math.log2(limit) + 1e-9:
        # exact sizes of huge modules are costly to even multiply out
        raise EnumerationTooLarge(module.size if bits < 62 else 1 << int(bits), limit, where)


def g_object(kind, module: FpModule, where: str = "") -> FreeWithBasis:
    kind = ComonadKind.parse(kind)
    _check_size(module, where or f"G({module})")
    carrier = FpModule.free(module.modulus, _g_rank(kind, module))
    return FreeWithBasis(kind, module, carrier)


def _label_matrix(m: int, rows: int, cols: int, targets: np.ndarray) -> ResidueMatrix:
    """Matrix sending basis vector ``j`` to basis vector ``targets[j]`` (or 0 if negative)."""
    keep = targets >= 0
    data = np.ones(int(keep.sum()), dtype=np.int64)
    mat = sp.csr_matrix((data, (targets[keep], np.nonzero(keep)[0])), shape=(rows, cols))
    return ResidueMatrix(m, mat, reduce=False)


def g_morphism(kind, f: ModuleMap, where: str = "") -> ModuleMap:
    """``G(f)``: the label of ``x`` goes to the label of ``f(x)``."""
    kind = ComonadKind.parse(kind)
    dom = g_object(kind, f.dom, where)
    cod = g_object(kind, f.cod, where)
    elems = dom.labels()
    images = f.apply(elems.T).T
    targets = cod.label_of(images)
    mat = _label_matrix(f.modulus, cod.carrier.rank, dom.carrier.rank, np.asarray(targets, dtype=np.int64))
    return ModuleMap(dom.carrier, cod.carrier, mat, check=False)


def counit(kind, module: FpModule, where: str = "") -> ModuleMap:
    """``eps : GM -> M``, label ``b`` to the element it names."""
    g = g_object(kind, module, where)
    elems = g.labels()
    mat = ResidueMatrix(module.modulus, as_columns(elems.T, module.rank))
    return ModuleMap(g.carrier, module, mat, check=False)


def comult(kind, module: FpModule) -> ModuleMap:
    """``delta : GM -> G(GM)``, label ``b`` to the label of the basis vector ``e_b``.

    Only index arithmetic is needed, so ``GM`` itself is never enumerated.
    """
    kind = ComonadKind.parse(kind)
    g = g_object(kind, module)
    r = g.carrier.rank
    m = module.modulus
    _check_size(FpModule.free(m, r), f"G(G({module}))")
    size_gg = m**r
    targets = np.array([m ** (r - 1 - b) - kind.offset for b in range(r)], dtype=np.int64)
    mat = _label_matrix(m, int(size_gg) - kind.offset, r, targets)
    return ModuleMap(g.carrier, FpModule.free(m, int(size_gg) - kind.offset), mat, check=False)


def canonical_splitting(kind, p: FpModule) -> ModuleMap:
    """``s : P -> GP`` sending the ``i``-th generator to its own label."""
    kind = ComonadKind.parse(kind)
    g = g_object(kind, p)
    eye = np.eye(p.rank, dtype=np.int64)
    targets = np.asarray(g.label_of(eye), dtype=np.int64).reshape(-1)
    mat = _label_matrix(p.modulus, g.carrier.rank, p.rank, targets)
    return ModuleMap(p, g.carrier, mat, check=False)


def _decode(index: int, m: int, rank: int) -> list[int]:
    digits = []
    for _ in range(rank):
        index, d = divmod(index, m)
        digits.append(d)
    return digits[::-1]


def _label_law_failures(kind: ComonadKind, module: FpModule) -> list[str]:
    """Comonad laws on labels, for when ``G^2 M`` is too large to write down.

    Elements of ``G^2 M`` are kept as sparse ``{position: coefficient}`` dicts,
    which double as labels of ``G^3 M``.
    """
    m, off = module.modulus, kind.offset
    elems = enumerate_elements(module, where=f"labels of G({module})")[off:]
    r = elems.shape[0]

    def delta(x):  # element of GM (dense) -> element of G^2 M (sparse)
        out = {}
        for j, c in enumerate(x):
            if c % m:
                pos = m ** (r - 1 - j) - off
                out[pos] = (out.get(pos, 0) + c) % m
        return {k: v for k, v in out.items() if v}

    bad = []
    for b in range(r):
        (t,) = delta([int(j == b) for j in range(r)]).keys()
        x_t = _decode(t + off, m, r)  # the element of GM labelled t
        if x_t != [int(j == b) for j in range(r)]:
            bad.append(f"eps_G o delta != 1 on label {b}")
        image = np.array(x_t, dtype=np.int64) @ elems % module.orders
        if int(element_index(module, image)) - off != b:
            bad.append(f"G(eps) o delta != 1 on label {b}")
        if delta(x_t) != {t: 1}:
            bad.append(f"coassociativity on label {b}")
    return bad


def comonad_law_failures(kind, module: FpModule) -> list[str]:
    """Counit and coassociativity laws.

    Matrix equality is used whenever the maps fit in the enumeration guard;
    otherwise the laws are checked on labels.
    """
    kind = ComonadKind.parse(kind)
    try:
        gm = g_object(kind, module).carrier
        g_object(kind, gm)
        delta = comult(kind, module)
        g_object(kind, delta.cod)
    except EnumerationTooLarge:
        return _label_law_failures(kind, module)
    eps_m = counit(kind, module)
    eps_gm = counit(kind, gm)
    ident = ModuleMap.identity(gm)
    bad = []
    if eps_gm @ delta != ident:
        bad.append("eps_G o delta != 1")
    if g_morphism(kind, eps_m) @ delta != ident:
        bad.append("G(eps) o delta != 1")
    if g_morphism(kind, delta) @ delta != comult(kind, gm) @ delta:
        bad.append("coassociativity")
    return bad


def comonadic_resolution(kind, x: FpModule, depth: int, validate: bool = True) -> AugSimplicialObject:
    """``A_{-1} = X``, ``A_n = G^{n+1} X`` with ``d_i = G^i eps`` and ``s_i = G^i delta``.

    Elements are enumerated only up to level ``depth - 1``.
    """
    kind = ComonadKind.parse(kind)
    if depth < 0:
        raise InvalidStructure("depth must be non-negative")
    levels = {-1: x}
    for n in range(depth + 1):
        prev = levels[n - 1]
        # the top level is never enumerated but its rank is |A_{n-1}|
        _check_size(prev, f"level {n - 1} of the resolution" if n < depth else f"rank of level {n}")
        levels[n] = FpModule.free(x.modulus, _g_rank(kind, prev))
    faces, degs = {}, {}
    for n in range(0, depth + 1):
        where = f"level {n - 1} of the resolution"
        faces[(n, 0)] = counit(kind, levels[n - 1], where)
        for i in range(1, n + 1):
            faces[(n, i)] = g_morphism(kind, faces[(n - 1, i - 1)], where)
    for n in range(0, depth):
        degs[(n, 0)] = comult(kind, levels[n - 1])
        for i in range(1, n + 1):
            degs[(n, i)] = g_morphism(kind, degs[(n - 1, i - 1)], f"level {n - 1} of the resolution")
    res = AugSimplicialObject(levels, faces, degs, augmented=True, validate=validate, name=kind.value)
    res.comonad = kind
    return res


def canonical_contraction(res: AugSimplicialObject, kind=None) -> Contraction:
    """``h_n(x) = [x]``, the basis vector labelled by ``x``; on ``Hom(P, -)`` this is ``G(f) o s``."""
    kind = ComonadKind.parse(kind or res.comonad)

    def fn(n, x):
        src = res.level(n)
        dst = res.level(n + 1)
        idx = np.asarray(element_index(src, x.T), dtype=np.int64).reshape(-1) - kind.offset
        out = np.zeros((dst.rank, x.shape[1]), dtype=np.int64)
        keep = idx >= 0
        out[idx[keep], np.nonzero(keep)[0]] = 1
        return out

    return Contraction(res, fn, lo=-1, hi=res.depth - 1, name=f"canonical {kind.value}")


def hom_contraction(p: FpModule, res: AugSimplicialObject, kind=None) -> Contraction:
    """Contraction of ``Hom(P, res)`` for a free ``P``, acting on maps column by column."""
    if not p.is_free:
        raise InvalidStructure("contraction of Hom(P, -) needs a free P")
    return canonical_contraction(res, kind)


def is_p_epi(f: ModuleMap) -> bool:
    """Both comonads give the projective class whose epis are the surjections."""
    return is_surjective(f)


class Identity:
    """The identity coefficient functor."""

    def obj(self, module):
        return module

    def map(self, f):
        return f

    def __call__(self, x):
        return x

    def __repr__(self):
        return "Identity()"


def apply_coefficients(e, a: AugSimplicialObject, validate: bool = False) -> AugSimplicialObject:
    """Apply ``e`` (``Identity`` or a ``TensorFunctor``) levelwise."""
    if e is None or isinstance(e, Identity):
        return a
    if not isinstance(e, TensorFunctor):
        raise InvalidStructure(f"unsupported coefficient functor {e!r}")
    out = a.map_levels(e.obj, e.map, validate=validate)
    if hasattr(a, "comonad"):
        out.comonad = a.comonad
    return out
