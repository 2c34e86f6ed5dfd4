"""Homology requests, the classical Tor cross-check and the comparison reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .comonad import Identity, apply_coefficients
from .comparison import (
    ResolutionPair,
    build_homotopy,
    default_contraction,
    extend_map,
    resolution,
)
from .errors import DegreeOutOfRange, EnumerationTooLarge, ResolventError, TruncationTooShallow
from .modules import (
    FpModule,
    ModuleMap,
    TensorFunctor,
    is_iso,
    kernel,
    regular_pushout_check,
    tensor,
    tensor_maps,
)
from .simplicial import (
    AugSimplicialObject,
    ChainComplex,
    HomologyData,
    SemiSimplicialMap,
    cocylinder,
    cocylinder_to_homotopy,
    combine_maps,
    homology_of_complex,
    normalized_square,
    verify_homotopy,
)

METHODS = ("set-free", "pointed-free", "tv-min", "tv-set", "tv-pointed", "oracle")


def coefficients(desc, modulus: int):
    """``None``/``"id"`` for the identity, a module or ``"tensor:2,4"`` for ``B (x) -``."""
    if desc is None or isinstance(desc, Identity):
        return Identity()
    if isinstance(desc, TensorFunctor):
        return desc
    if isinstance(desc, FpModule):
        return TensorFunctor(desc)
    text = str(desc).strip().lower()
    if text in ("id", "identity"):
        return Identity()
    if text.startswith("tensor:"):
        orders = [int(t) for t in text[len("tensor:") :].split(",") if t.strip()]
        return TensorFunctor(FpModule.from_orders(modulus, orders))
    raise ValueError(f"unknown coefficient functor {desc!r}")


def coefficient_module(e, modulus: int) -> FpModule:
    """The module ``B`` with ``E = B (x) -`` (``Z/m`` for the identity)."""
    return e.b if isinstance(e, TensorFunctor) else FpModule.free(modulus, 1)


def _check_degree(n: int):
    if n < 1:
        raise DegreeOutOfRange(f"homology degrees start at 1, got {n}")


def resolved_homology(res: AugSimplicialObject, e, n: int) -> HomologyData:
    """``H_{n-1}`` of the Moore complex of ``E`` applied to ``res``."""
    return HomologyData(apply_coefficients(e, res), n - 1)


def homology(x: FpModule, e=None, method: str = "pointed-free", n: int = 1) -> FpModule:
    """``H_n(X, E)`` by the given method, with the shift ``H_n = H_{n-1} N E A``."""
    _check_degree(n)
    e = coefficients(e, x.modulus)
    if method == "oracle":
        return tor_oracle(coefficient_module(e, x.modulus), x, n - 1)
    res = resolution(method, x, n)
    return resolved_homology(res, e, n).module


# ---------------------------------------------------------------------------
# Tor oracle
# ---------------------------------------------------------------------------


def minimal_free_resolution(x: FpModule, length: int) -> list[ModuleMap]:
    """``[eps, d_1, ..., d_length]`` of a free resolution by kernels and canonical covers."""
    m = x.modulus
    f0 = FpModule.free(m, x.rank)
    maps = [ModuleMap(f0, x, np.eye(x.rank, dtype=np.int64))]
    for _ in range(length):
        k = kernel(maps[-1])
        fk = FpModule.free(m, k.module.rank)
        maps.append(ModuleMap(fk, maps[-1].dom, k.embedding.matrix))
    return maps


def tor_oracle(b: FpModule, x: FpModule, n: int) -> FpModule:
    """``Tor_n(B, X)`` over ``Z/m`` from a free resolution of ``X`` tensored with ``B``."""
    if n < 0:
        raise DegreeOutOfRange("Tor is indexed from 0")
    maps = minimal_free_resolution(x, n + 1)
    objects = {i: tensor(b, maps[i].dom) for i in range(n + 2)}
    bounds = {i: tensor(b, maps[i]) for i in range(1, n + 2)}
    cplx = ChainComplex(objects, bounds, lower_closed=True, upper_closed=False)
    return homology_of_complex(cplx, n)


# ---------------------------------------------------------------------------
# Cross-method comparison
# ---------------------------------------------------------------------------


def _comparison_maps(ra, rb, x, e, n):
    """Induced maps on ``H_n`` both ways between two resolutions of ``x``."""
    ident = ModuleMap.identity(x)
    f = extend_map(ResolutionPair(ra, rb, default_contraction(rb)), ident, n - 1)
    g = extend_map(ResolutionPair(rb, ra, default_contraction(ra)), ident, n - 1)
    ha, hb = resolved_homology(ra, e, n), resolved_homology(rb, e, n)
    fn = ha.induced(e.map(f[n - 1]), hb)
    gn = hb.induced(e.map(g[n - 1]), ha)
    return fn, gn


def compare_methods(x: FpModule, e=None, methods=("pointed-free", "tv-min", "oracle"), n_max: int = 2,
                    *, comparison_maps: bool = True, timing: bool = False) -> dict:
    """Homology per method and degree, with isomorphism verdicts.

    Infeasible cells are reported rather than raised.  For pairs of
    simplicial methods feasible at a degree the comparison maps are built
    both ways and their composites checked to be identities on homology.
    """
    e = coefficients(e, x.modulus)
    cells, values, resolutions = [], {}, {}
    for method in methods:
        for n in range(1, n_max + 1):
            t0 = time.perf_counter()
            cell = {"method": method, "degree": n}
            try:
                val = homology(x, e, method, n)
                cell["value"] = str(val)
                cell["factors"] = list(val.factors)
                values[(method, n)] = val
            except (EnumerationTooLarge, TruncationTooShallow) as err:
                cell["infeasible"] = str(err)
            if method == "oracle":
                cell["tor_index"] = n - 1
            if timing:
                cell["millis"] = round(1000 * (time.perf_counter() - t0), 3)
            cells.append(cell)
    verdicts = []
    for n in range(1, n_max + 1):
        vals = [values[(mth, n)] for mth in methods if (mth, n) in values]
        verdict = {"degree": n, "feasible": len(vals), "isomorphic": all(v == vals[0] for v in vals)}
        simplicial = [mth for mth in methods if mth != "oracle" and (mth, n) in values]
        if comparison_maps and len(simplicial) >= 2:
            checks = []
            for i in range(len(simplicial)):
                for j in range(i + 1, len(simplicial)):
                    a_name, b_name = simplicial[i], simplicial[j]
                    try:
                        ra = resolutions.get((a_name, n)) or resolution(a_name, x, n)
                        rb = resolutions.get((b_name, n)) or resolution(b_name, x, n)
                        fn, gn = _comparison_maps(ra, rb, x, e, n)
                        ok = (gn @ fn == ModuleMap.identity(fn.dom)) and (fn @ gn == ModuleMap.identity(fn.cod))
                        checks.append({"pair": [a_name, b_name], "inverse_on_homology": bool(ok)})
                    except (EnumerationTooLarge, TruncationTooShallow) as err:
                        checks.append({"pair": [a_name, b_name], "infeasible": str(err)})
            verdict["comparison_maps"] = checks
        verdicts.append(verdict)
    all_iso = all(v["isomorphic"] for v in verdicts) and all(
        c.get("inverse_on_homology", True) for v in verdicts for c in v.get("comparison_maps", [])
    )
    return {
        "request": {
            "modulus": x.modulus,
            "module": list(x.factors),
            "coefficients": _describe(e),
            "methods": list(methods),
            "degrees": [1, n_max],
        },
        "cells": cells,
        "verdicts": verdicts,
        "verdict": "isomorphic" if all_iso else "not isomorphic",
    }


def _describe(e) -> str:
    return "id" if isinstance(e, Identity) else "tensor:" + ",".join(map(str, e.b.factors))


# ---------------------------------------------------------------------------
# Naturality
# ---------------------------------------------------------------------------


def _ext(src, dst, f, depth):
    return extend_map(ResolutionPair(src, dst, default_contraction(dst)), f, depth)


def naturality_check(f: ModuleMap, e=None, kind_a: str = "set-free", kind_b: str = "pointed-free", n: int = 1) -> bool:
    """Both ways round the square ``A(X) -> A(Y) -> B(Y)`` and ``A(X) -> B(X) -> B(Y)`` agree on ``H_n``."""
    _check_degree(n)
    e = coefficients(e, f.modulus)
    x, y = f.dom, f.cod
    ax, ay = resolution(kind_a, x, n), resolution(kind_a, y, n)
    bx, by = resolution(kind_b, x, n), resolution(kind_b, y, n)
    ix, iy = ModuleMap.identity(x), ModuleMap.identity(y)
    top = _ext(ax, ay, f, n - 1)
    right = _ext(ay, by, iy, n - 1)
    left = _ext(ax, bx, ix, n - 1)
    bottom = _ext(bx, by, f, n - 1)
    h_ax, h_by = resolved_homology(ax, e, n), resolved_homology(by, e, n)
    h_ay, h_bx = resolved_homology(ay, e, n), resolved_homology(bx, e, n)
    path1 = h_ay.induced(e.map(right[n - 1]), h_by) @ h_ax.induced(e.map(top[n - 1]), h_ay)
    path2 = h_bx.induced(e.map(bottom[n - 1]), h_by) @ h_ax.induced(e.map(left[n - 1]), h_bx)
    return path1 == path2


def naturality_in_coefficients(alpha: ModuleMap, x: FpModule, kind_a: str = "set-free", kind_b: str = "pointed-free",
                               n: int = 1) -> bool:
    """``alpha : B -> B'`` commutes with the comparison isomorphism on ``H_n``."""
    _check_degree(n)
    e, e2 = TensorFunctor(alpha.dom), TensorFunctor(alpha.cod)
    ra, rb = resolution(kind_a, x, n), resolution(kind_b, x, n)
    f = _ext(ra, rb, ModuleMap.identity(x), n - 1)
    k = n - 1
    # levelwise the square already commutes
    for lvl in range(0, n):
        ea = tensor_maps(alpha, ModuleMap.identity(ra.level(lvl)))
        eb = tensor_maps(alpha, ModuleMap.identity(rb.level(lvl)))
        if eb @ e.map(f[lvl]) != e2.map(f[lvl]) @ ea:
            return False
    h_a, h_b = resolved_homology(ra, e, n), resolved_homology(rb, e, n)
    h_a2, h_b2 = resolved_homology(ra, e2, n), resolved_homology(rb, e2, n)
    alpha_a = h_a.induced(tensor_maps(alpha, ModuleMap.identity(ra.level(k))), h_a2)
    alpha_b = h_b.induced(tensor_maps(alpha, ModuleMap.identity(rb.level(k))), h_b2)
    path1 = alpha_b @ h_a.induced(e.map(f[k]), h_b)
    path2 = h_a2.induced(e2.map(f[k]), h_b2) @ alpha_a
    return path1 == path2


# ---------------------------------------------------------------------------
# Homotopy invariance
# ---------------------------------------------------------------------------


@dataclass
class InvarianceReport:
    cocylinder_valid: bool = False
    sections: bool = False
    iso: dict = field(default_factory=dict)
    equal_on_homology: dict = field(default_factory=dict)
    regular_pushout: dict = field(default_factory=dict)
    sampled: dict = field(default_factory=dict)
    round_trip: bool = False
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        maps = (self.iso, self.equal_on_homology, self.regular_pushout, self.sampled)
        return (
            self.cocylinder_valid
            and self.sections
            and self.round_trip
            and not self.errors
            and all(all(d.values()) for d in maps)
        )

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "cocylinder_valid": self.cocylinder_valid,
            "sections": self.sections,
            "iso": {str(k): v for k, v in self.iso.items()},
            "equal_on_homology": {str(k): v for k, v in self.equal_on_homology.items()},
            "regular_pushout": {str(k): v for k, v in self.regular_pushout.items()},
            "sampled": {str(k): v for k, v in self.sampled.items()},
            "round_trip": self.round_trip,
            "errors": self.errors,
        }


def verify_homotopy_invariance(a: AugSimplicialObject, seed: int = 0, n_max: int = 2, samples: int = 3) -> InvarianceReport:
    """Cocylinder checks plus ``H_n f = H_n g`` for pairs homotopic through it."""
    rep = InvarianceReport()
    base = a.non_augmented()
    try:
        coc = cocylinder(base, n_max + 1, check=False)
    except ResolventError as err:
        rep.errors.append(repr(err))
        return rep
    rep.cocylinder_valid = not coc.structure_failures()
    rep.sections = not coc.section_failures()
    rng = np.random.default_rng(seed)
    ai = coc.obj
    ident = SemiSimplicialMap.identity(ai)
    s_e0 = coc.s @ coc.eps0
    s_e1 = coc.s @ coc.eps1
    h_i = {n: HomologyData(ai, n) for n in range(n_max + 1)}
    h_a = {n: HomologyData(base, n) for n in range(n_max + 1)}
    for n in range(n_max + 1):
        e0 = h_i[n].induced(coc.eps0[n], h_a[n])
        e1 = h_i[n].induced(coc.eps1[n], h_a[n])
        rep.iso[n] = is_iso(e0) and is_iso(e1)
        rep.equal_on_homology[n] = e0 == e1
        try:
            rep.regular_pushout[n] = regular_pushout_check(normalized_square(coc, n))
        except ResolventError as err:
            rep.regular_pushout[n] = False
            rep.errors.append(repr(err))
    m = base.modulus
    trips = []
    for k in range(samples):
        c = [int(v) for v in rng.integers(0, m, size=3)]
        H = combine_maps(c, [ident.restricted(0, n_max + 1), s_e0, s_e1])
        f = coc.eps0 @ H
        g = coc.eps1 @ H
        for n in range(n_max + 1):
            rep.sampled[(k, n)] = h_i[n].induced(f[n], h_a[n]) == h_i[n].induced(g[n], h_a[n])
        h = cocylinder_to_homotopy(H.restricted(0, n_max), coc)
        trips.append(verify_homotopy(h))
    rep.round_trip = all(trips)
    return rep


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


def random_horn(rng: np.random.Generator, a: AugSimplicialObject, columns: int = 1):
    """A horn cut from the faces of a random element at a random level."""
    from .simplicial import GroupView, horn_from_element

    n = int(rng.integers(max(1, a.lo + 1), a.depth + 1))
    k = int(rng.integers(0, n + 1))
    view = GroupView(a, columns)
    lvl = a.level(n)
    x = rng.integers(0, 1 << 30, size=(lvl.rank, columns)) % lvl.orders[:, None]
    return horn_from_element(view, n, k, x)


def horn_suite(seed: int, count: int, hosts: list[AugSimplicialObject]) -> dict:
    from .simplicial import fill_horn

    rng = np.random.default_rng(seed)
    passed, times = 0, []
    for i in range(count):
        a = hosts[i % len(hosts)]
        horn = random_horn(rng, a, int(rng.integers(1, 4)))
        t0 = time.perf_counter()
        w = fill_horn(horn)
        times.append(time.perf_counter() - t0)
        v = horn.view
        passed += all(v.equal(horn.n - 1, v.face(horn.n, i, w), s) for i, s in horn.faces.items())
    return {"passed": passed, "total": count, "median_ms": 1000 * float(np.median(times)) if times else 0.0}


def normalization_agrees(a: AugSimplicialObject, n_max: int = 3) -> bool:
    from .simplicial import unnormalized_complex

    c = unnormalized_complex(a)
    return all(HomologyData(a, n).module == homology_of_complex(c, n) for n in range(n_max + 1))


def comparison_case(rng: np.random.Generator, depth: int = 1) -> tuple:
    """A random in-guard resolution pair with a random map and two contractions of the target."""
    from .comonad import canonical_contraction
    from .comparison import solving_contraction
    from .sampling import random_map, random_module

    m = int(rng.choice([2, 3, 4]))
    x = random_module(rng, m, max_rank=2, min_rank=1)
    y = random_module(rng, m, max_rank=2, min_rank=1)
    src = str(rng.choice(["tv-min", "pointed-free"] if x.size <= 4 else ["tv-min"]))
    try:
        p = resolution(src, x, depth)
    except EnumerationTooLarge:
        p = resolution("tv-min", x, depth)
    a = resolution("tv-min", y, depth + 2)
    f = random_map(rng, x, y)
    c1 = solving_contraction(a)
    c2 = solving_contraction(a, seed=int(rng.integers(1 << 30)))
    return p, a, f, c1, c2


def comparison_suite(seed: int, count: int, depth: int = 1) -> dict:
    from .simplicial import verify_homotopy as vh

    rng = np.random.default_rng(seed)
    faces_ok = homotopies_ok = distinct = 0
    for _ in range(count):
        p, a, f, c1, c2 = comparison_case(rng, depth)
        e1 = extend_map(ResolutionPair(p, a, c1), f, depth)
        e2 = extend_map(ResolutionPair(p, a, c2), f, depth)
        faces_ok += not e1.face_failures() and not e2.face_failures()
        distinct += e1 != e2
        h = build_homotopy(ResolutionPair(p, a, c1), e1, e2, depth)
        homotopies_ok += vh(h)
    return {"total": count, "faces": faces_ok, "homotopies": homotopies_ok, "distinct_pairs": distinct}


def run_suites(seed: int = 0, scale: int = 1) -> dict:
    """Small seeded versions of every property suite (``scale`` multiplies sample counts)."""
    from .comonad import POINTED_FREE, SET_FREE, comonad_law_failures, comonadic_resolution, canonical_contraction
    from .freesimp import random_simplicial_module
    from .simplicial import verify_contraction, validate_simplicial

    rng = np.random.default_rng(seed)
    corpus = [random_simplicial_module(rng, 4) for _ in range(4 * scale)]
    inv = [verify_homotopy_invariance(a, seed=seed + i).passed for i, a in enumerate(corpus)]
    norm = [normalization_agrees(a) for a in corpus]
    hosts = corpus + [comonadic_resolution(POINTED_FREE, FpModule.from_orders(4, [2]), 2)]
    horns = horn_suite(seed, 200 * scale, hosts)
    cmp = comparison_suite(seed, 3 * scale)
    laws, contr = [], []
    for m, orders in [(2, [2]), (3, [3]), (4, [2]), (4, [4])]:
        x = FpModule.from_orders(m, orders)
        for kind in (SET_FREE, POINTED_FREE):
            laws.append(not comonad_law_failures(kind, x))
            res = comonadic_resolution(kind, x, 1)
            contr.append(validate_simplicial(res) and verify_contraction(canonical_contraction(res)))
    results = {
        "homotopy_invariance": {"passed": sum(inv), "total": len(inv)},
        "normalized_vs_unnormalized": {"passed": sum(norm), "total": len(norm)},
        "horn_filling": {"passed": horns["passed"], "total": horns["total"]},
        "comparison": {"passed": min(cmp["faces"], cmp["homotopies"]), "total": cmp["total"]},
        "comonad_laws": {"passed": sum(laws), "total": len(laws)},
        "contractions": {"passed": sum(contr), "total": len(contr)},
    }
    return {"seed": seed, "suites": results, "passed": all(r["passed"] == r["total"] for r in results.values())}
