"""Maps and homotopies between resolutions, built by filling horns.

Every construction works in the hom-group view ``Hom(P, A)`` where ``P`` is a
free level of the source resolution: a map ``P -> A_n`` is an array with one
column per generator of ``P``, and a contraction of ``A`` acts on it column
by column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .comonad import ComonadKind, canonical_contraction, g_morphism, is_p_epi
from .errors import IncompatibleFamily, InvalidStructure, TruncationTooShallow
from .freesimp import STRATEGIES, free_resolution
from .modules import FpModule, ModuleMap, simplicial_kernel
from .simplicial import (
    AugSimplicialObject,
    Contraction,
    GroupView,
    Homotopy,
    Horn,
    SemiSimplicialMap,
    fill_horn,
)
from .zmod import LinearSolver, ResidueMatrix, as_columns, kernel_generators, vstack


def _check_family(view: GroupView, level: int, maps: list[np.ndarray]):
    if level - 1 < view.a.lo:
        return
    for j in range(len(maps)):
        for i in range(j):
            if not view.equal(level - 1, view.face(level, i, maps[j]), view.face(level, j - 1, maps[i])):
                raise IncompatibleFamily(f"faces d{i} a{j} and d{j - 1} a{i} differ")


def lift_through_faces(a: AugSimplicialObject, contraction: Contraction, maps: list) -> np.ndarray:
    """An element ``w`` at level ``n`` with ``d_i w = maps[i]`` for ``i = 0..n``.

    ``maps`` are arrays at level ``n - 1`` (one column per generator of ``P``).
    The ``(n+1, 0)``-horn ``(h a_0, ..., h a_n)`` is filled one level up and its
    zeroth face returned.
    """
    maps = [np.asarray(x, dtype=np.int64) for x in maps]
    n = len(maps) - 1
    a.require(n + 1, "lifting through faces")
    cols = maps[0].shape[1] if maps[0].ndim == 2 else 1
    maps = [as_columns(x, a.level(n - 1).rank) for x in maps]
    view = GroupView(a, cols)
    _check_family(view, n - 1, maps)
    faces = {i + 1: contraction(n - 1, x) for i, x in enumerate(maps)}
    w = fill_horn(Horn(view, n + 1, 0, faces), check=False)
    return view.face(n + 1, 0, w)


def lift_map(a: AugSimplicialObject, contraction: Contraction, maps: list[ModuleMap]) -> ModuleMap:
    """:func:`lift_through_faces` on module maps out of a free module."""
    p = maps[0].dom
    if not p.is_free:
        raise InvalidStructure("lifting needs a free domain")
    n = len(maps) - 1
    arr = lift_through_faces(a, contraction, [f.matrix.to_array() for f in maps])
    return ModuleMap(p, a.level(n), arr, check=False)


@dataclass
class ResolutionPair:
    """A free resolution ``p`` and a target ``a`` with a contraction of ``Hom(P_i, a)``."""

    p: AugSimplicialObject
    a: AugSimplicialObject
    contraction: Contraction

    def __post_init__(self):
        for n in range(0, self.p.depth + 1):
            if not self.p.level(n).is_free:
                raise InvalidStructure(f"level {n} of the source is not free")


def extend_map(pair: ResolutionPair, f: ModuleMap, depth: int | None = None) -> SemiSimplicialMap:
    """Semi-simplicial extension ``(f_n)`` of ``f : X -> Y`` with ``f_{-1} = f``."""
    p, a = pair.p, pair.a
    depth = p.depth if depth is None else depth
    p.require(depth, "extension")
    a.require(depth + 1, "extension")
    if f.dom != p.level(-1) or f.cod != a.level(-1):
        raise InvalidStructure("map does not connect the augmentation bases")
    comps = {-1: f}
    for n in range(0, depth + 1):
        fam = [comps[n - 1] @ p.face(n, i) for i in range(n + 1)]
        comps[n] = lift_map(a, pair.contraction, fam)
    return SemiSimplicialMap(p, a, comps)


def _fill_map(a, p_level: FpModule, n: int, k: int, faces: dict) -> ModuleMap:
    view = GroupView(a, p_level.rank)
    horn = Horn(view, n, k, {i: f.matrix.to_array() for i, f in faces.items()})
    return ModuleMap(p_level, a.level(n), fill_horn(horn), check=False)


def build_homotopy(pair: ResolutionPair, f: SemiSimplicialMap, g: SemiSimplicialMap, depth: int | None = None,
                   progress: Callable | None = None) -> Homotopy:
    """Homotopy ``h^n_i : P_n -> A_{n+1}`` from ``f`` to ``g`` (both over the same base map).

    Level ``n`` fills ``(n+1, l+1)``-horns for ``l = 0..n-1`` and finishes
    with a lift, which reaches level ``n + 2`` of the target.
    """
    p, a = pair.p, pair.a
    depth = min(f.depth, g.depth) if depth is None else depth
    a.require(depth + 2, "homotopy")
    if f[-1] != g[-1]:
        raise InvalidStructure("maps must agree on the augmentation base")
    h = {}
    for n in range(0, depth + 1):
        pn = p.level(n)
        if n == 0:
            h[(0, 0)] = lift_map(a, pair.contraction, [f[0], g[0]])
        else:
            faces = {0: f[n]}
            faces.update({i: h[(n - 1, 0)] @ p.face(n, i - 1) for i in range(2, n + 2)})
            h[(n, 0)] = _fill_map(a, pn, n + 1, 1, faces)
            for l in range(1, n):
                faces = {i: h[(n - 1, l - 1)] @ p.face(n, i) for i in range(l)}
                faces[l] = a.face(n + 1, l) @ h[(n, l - 1)]
                faces.update({i: h[(n - 1, l)] @ p.face(n, i - 1) for i in range(l + 2, n + 2)})
                h[(n, l)] = _fill_map(a, pn, n + 1, l + 1, faces)
            fam = [h[(n - 1, n - 1)] @ p.face(n, i) for i in range(n)]
            fam.append(a.face(n + 1, n) @ h[(n, n - 1)])
            fam.append(g[n])
            h[(n, n)] = lift_map(a, pair.contraction, fam)
        if progress:
            progress(n)
    return Homotopy(f, g, h, depth)


def self_homotopy_fast(res: AugSimplicialObject, f: SemiSimplicialMap, depth: int | None = None, kind=None) -> Homotopy:
    """Homotopy from ``f`` to the identity on a comonadic resolution: ``h^n_i = G^{i+1}(f_{n-i}) s_i``."""
    kind = ComonadKind.parse(kind or res.comonad)
    depth = min(f.depth, res.depth - 1) if depth is None else depth
    ident = SemiSimplicialMap.identity(res)
    powers = {}

    def g_power(k: int, times: int) -> ModuleMap:
        key = (k, times)
        if key not in powers:
            powers[key] = f[k] if times == 0 else g_morphism(kind, g_power(k, times - 1))
        return powers[key]

    h = {(n, i): g_power(n - i, i + 1) @ res.degeneracy(n, i) for n in range(depth + 1) for i in range(n + 1)}
    return Homotopy(f, ident.restricted(-1, depth + 1), h, depth)


# ---------------------------------------------------------------------------
# Resolutions built from simplicial kernels
# ---------------------------------------------------------------------------


def _stacked(a: AugSimplicialObject, n: int) -> ResidueMatrix:
    return vstack([a.face(n, i).matrix for i in range(n + 1)], modulus=a.modulus, cols=a.level(n).rank)


def _relations(a: AugSimplicialObject, n: int, copies: int) -> np.ndarray:
    d = np.concatenate([a.level(n).orders] * copies) % a.modulus
    return np.diag(d).reshape(d.size, d.size)


def solving_contraction(a: AugSimplicialObject, seed: int | None = None) -> Contraction:
    """A contraction obtained by solving ``d_0 y = x`` and ``d_i y = h(d_{i-1} x)``.

    Exists whenever the comparison maps to the simplicial kernels are onto.
    With a ``seed`` a fixed random linear map into the joint kernel of all
    faces is added, giving a different but equally valid contraction.
    """
    if not a.augmented:
        raise InvalidStructure("contractions live on augmented objects")
    m = a.modulus
    solvers, kernels, mixers = {}, {}, {}
    rng = np.random.default_rng(seed) if seed is not None else None

    def solver(n):
        if n not in solvers:
            stacked = _stacked(a, n)
            solvers[n] = LinearSolver(stacked, relations=_relations(a, n - 1, n + 1))
            if rng is not None:
                kern = kernel_generators(stacked, relations=_relations(a, n - 1, n + 1)).to_array()
                kernels[n] = as_columns(kern, a.level(n).rank)
                mixers[n] = rng.integers(0, m, size=(kernels[n].shape[1], a.level(n - 1).rank))
        return solvers[n]

    def fn(n, x):
        if n == -1:
            rhs = x
        else:
            parts = [x] + [fn(n - 1, a_face) for a_face in (GroupView(a, x.shape[1]).face(n, i, x) for i in range(n + 1))]
            rhs = np.vstack(parts)
        y, ok = solver(n + 1).solve_many(rhs)
        if not ok.all():
            raise InvalidStructure(f"comparison map at level {n + 1} is not onto")
        if rng is not None and kernels[n + 1].shape[1]:
            y = y + kernels[n + 1] @ (mixers[n + 1] @ x % m)
        return a.level(n + 1).reduce(y % m)

    return Contraction(a, fn, lo=-1, hi=a.depth - 1, name="solving" if seed is None else f"solving/{seed}")


def tv_resolution(x: FpModule, strategy: str = "minimal", depth: int = 2) -> AugSimplicialObject:
    """Free resolution from iterated simplicial kernels; ``strategy`` picks the covers."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    res = free_resolution(x, strategy, depth).object()
    res.name = f"tv-{strategy}"
    return res


def default_contraction(a: AugSimplicialObject) -> Contraction:
    if getattr(a, "comonad", None) is not None:
        return canonical_contraction(a)
    return solving_contraction(a)


def p_exactness_report(a: AugSimplicialObject) -> list[bool]:
    """Onto-ness of the augmentation followed by each comparison map ``A_{n+1} -> K_{n+1}``."""
    if not a.augmented:
        raise InvalidStructure("exactness is checked on augmented objects")
    out = [is_p_epi(a.face(0, 0))]
    for n in range(0, a.depth):
        kern = simplicial_kernel([a.face(n, i) for i in range(n + 1)])
        cmp = kern.factor([a.face(n + 1, i) for i in range(n + 2)])
        out.append(is_p_epi(cmp))
    return out


def p_exactness_check(a: AugSimplicialObject) -> bool:
    return all(p_exactness_report(a))


def resolution(method: str, x: FpModule, depth: int) -> AugSimplicialObject:
    """Build a resolution by method name (``set-free``, ``pointed-free``, ``tv-min``, ...)."""
    from .comonad import comonadic_resolution

    method = method.lower()
    if method in ("set-free", "pointed-free"):
        return comonadic_resolution(method, x, depth)
    if method.startswith("tv-"):
        strategy = {"tv-min": "minimal", "tv-minimal": "minimal"}.get(method, method[3:])
        return tv_resolution(x, strategy, depth)
    raise ValueError(f"unknown resolution method {method!r}")


def require_depth(a: AugSimplicialObject, depth: int, what: str):
    if a.depth < depth:
        raise TruncationTooShallow(f"{what} needs depth {depth}, have {a.depth}")
