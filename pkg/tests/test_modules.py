import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import brute
from resolvent.errors import (
    ConstraintViolation,
    DimensionMismatch,
    EnumerationTooLarge,
    InvalidStructure,
    NotEpi,
)
from resolvent.modules import (
    CospanSquare,
    FpModule,
    ModuleMap,
    canonical_decompose,
    cokernel,
    direct_sum,
    element_index,
    enumerate_elements,
    equalizer,
    finite_limit,
    image_factorization,
    is_exact_at,
    is_injective,
    is_isomorphic,
    is_surjective,
    kernel,
    kernel_pair,
    max_enumeration,
    pullback,
    regular_pushout_check,
    simplicial_kernel,
    tensor,
)
from resolvent.sampling import random_map, random_module
from resolvent.zmod import ResidueMatrix

Z4 = FpModule(4, (4,))
Z2_4 = FpModule(4, (2,))
red = ModuleMap(Z4, Z2_4, [[1]])  # reduction Z/4 -> Z/2
times2 = ModuleMap(Z4, Z4, [[2]])


def small_pair(seed, max_size=64):
    rng = np.random.default_rng(seed)
    m = int(rng.choice([2, 3, 4, 6, 8, 12]))
    while True:
        a = random_module(rng, m, max_rank=3)
        b = random_module(rng, m, max_rank=3)
        if a.size <= max_size and b.size <= max_size:
            return rng, random_map(rng, a, b)


seeds = st.integers(0, 2**32 - 1)


# -- objects ----------------------------------------------------------------


def test_module_invariants():
    with pytest.raises(InvalidStructure):
        FpModule(4, (4, 2))
    with pytest.raises(InvalidStructure):
        FpModule(4, (3,))
    with pytest.raises(InvalidStructure):
        FpModule(4, (1,))
    assert FpModule.from_orders(4, (4, 2)) == FpModule(4, (2, 4))
    assert FpModule.from_orders(6, (2, 3)) == FpModule(6, (6,))
    assert FpModule.from_orders(12, (4, 6)) == FpModule(12, (2, 12))
    assert FpModule.zero(5).size == 1
    assert str(FpModule(4, (2, 4))) == "Z/2 + Z/4"


def test_isomorphism_predicates():
    assert is_isomorphic(FpModule.from_orders(4, (2, 4)), FpModule.from_orders(4, (4, 2)))
    assert not is_isomorphic(Z4, FpModule(4, (2, 2)))
    assert is_surjective(red) and not is_injective(red)


def test_map_compatibility_is_checked():
    with pytest.raises(InvalidStructure):
        ModuleMap(Z2_4, Z4, [[1]])
    ModuleMap(Z2_4, Z4, [[2]])
    with pytest.raises(DimensionMismatch):
        ModuleMap(Z4, Z4, [[1, 1]])


def test_canonical_decompose_examples():
    pres = canonical_decompose(ResidueMatrix.identity(4, 2), ResidueMatrix.zeros(4, 2, 0))
    assert pres.module.factors == (4, 4)
    pres = canonical_decompose(ResidueMatrix.identity(4, 1), ResidueMatrix(4, [[2]]))
    assert pres.module.factors == (2,)
    pres = canonical_decompose(ResidueMatrix.identity(4, 2), ResidueMatrix(4, [[1], [1]]))
    assert pres.module.factors == (4,)
    assert is_surjective(pres.projection)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_canonical_decompose_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.choice([4, 6, 8, 12]))
    a, g, r = int(rng.integers(1, 4)), int(rng.integers(0, 4)), int(rng.integers(0, 3))
    gens = rng.integers(0, m, size=(a, g))
    rels = rng.integers(0, m, size=(a, r))
    pres = canonical_decompose(ResidueMatrix(m, gens), ResidueMatrix(m, rels))
    # brute force: subgroup generated by gens and rels, quotient by rels
    total = brute.closure(list(gens.T) + list(rels.T), [m] * a)
    relspan = brute.closure(list(rels.T), [m] * a)
    assert pres.module.size * len(relspan) == len(total)
    # element order histogram of the quotient
    hist = {}
    for v in total:
        k = 1
        while tuple(int(x) for x in (k * np.array(v)) % m) not in relspan:
            k += 1
        hist[k] = hist.get(k, 0) + 1
    hist = {k: c // len(relspan) for k, c in hist.items()}
    assert hist == brute.order_profile(pres.module)


# -- kernels, cokernels, images ------------------------------------------------


def test_kernel_examples():
    assert kernel(ModuleMap.identity(Z4)).is_zero()
    k = kernel(times2)
    assert k.module == Z2_4
    assert brute.image_set(k.embedding) == {(0,), (2,)}
    k = kernel(red)
    assert k.module == Z2_4
    assert brute.image_set(k.embedding) == {(0,), (2,)}


def test_cokernel_examples():
    zero_in = ModuleMap.zero(FpModule.zero(4), FpModule(4, (2, 4)))
    assert cokernel(zero_in).q == FpModule(4, (2, 4))
    assert cokernel(times2).q == Z2_4
    assert cokernel(red).q.is_zero


def test_image_examples():
    e, sub = image_factorization(ModuleMap.identity(Z4))
    assert sub.module == Z4 and is_injective(e) and is_surjective(e)
    _, sub = image_factorization(ModuleMap.zero(Z4, Z4))
    assert sub.is_zero()
    _, sub = image_factorization(times2)
    assert sub.module == Z2_4
    assert brute.image_set(sub.embedding) == {(0,), (2,)}


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_kernel_cokernel_image_brute_force(seed):
    rng, f = small_pair(seed)
    k = kernel(f)
    ks = brute.kernel_set(f)
    assert brute.image_set(k.embedding) == ks
    assert brute.order_histogram(ks, f.dom.orders) == brute.order_profile(k.module)
    assert is_injective(k.embedding)
    assert (f @ k.embedding).is_zero()

    e, sub = image_factorization(f)
    ims = brute.image_set(f)
    assert sub.embedding @ e == f
    assert is_surjective(e) and is_injective(sub.embedding)
    assert brute.image_set(sub.embedding) == ims

    proj, q = cokernel(f)
    assert q.size * len(ims) == f.cod.size
    assert (proj @ f).is_zero() and is_surjective(proj)

    assert is_exact_at(f, proj)
    assert is_exact_at(k.embedding, f)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_kernel_universality(seed):
    rng, f = small_pair(seed)
    k = kernel(f)
    w = random_module(rng, f.modulus, max_rank=2)
    g = k.embedding @ random_map(rng, w, k.module)
    h = k.factor(g)
    assert k.embedding @ h == g
    # cokernel universality: a map killing f is constant on the fibres of the
    # (surjective) projection, so it factors through it uniquely
    proj, q = cokernel(f)
    w2 = random_module(rng, f.modulus, max_rank=2)
    for _ in range(5):
        c = random_map(rng, f.cod, w2)
        if not (c @ f).is_zero():
            continue
        fibres = {}
        for y in brute.elements(f.cod):
            fibres.setdefault(brute.apply(proj, y), set()).add(brute.apply(c, y))
        assert all(len(v) == 1 for v in fibres.values())


def test_factor_rejects_outside_vectors():
    k = kernel(times2)
    with pytest.raises(ConstraintViolation):
        k.factor(ModuleMap.identity(Z4))


def test_exactness_examples():
    zero = FpModule.zero(4)
    assert not is_exact_at(ModuleMap.zero(zero, Z4), ModuleMap.zero(Z4, zero))
    assert is_exact_at(times2, times2)
    assert is_exact_at(ModuleMap.zero(zero, Z4), ModuleMap.identity(Z4))
    with pytest.raises(DimensionMismatch):
        is_exact_at(red, red)


# -- limits ---------------------------------------------------------------------


def test_pullback_over_zero_is_product():
    m, n = FpModule(4, (2,)), FpModule(4, (4,))
    z = FpModule.zero(4)
    lim = pullback(ModuleMap.zero(m, z), ModuleMap.zero(n, z))
    assert lim.apex == FpModule(4, (2, 4))


def test_kernel_pair_example():
    lim = kernel_pair(red)
    assert lim.apex == FpModule(4, (2, 4))
    p0, p1 = lim.projections
    pairs = {brute.apply(p0, x) + brute.apply(p1, x) for x in brute.elements(lim.apex)}
    assert pairs == {(a, b) for a in range(4) for b in range(4) if (a - b) % 2 == 0}


def test_equalizer_of_equal_maps_is_whole():
    assert equalizer(red, red).module == Z4


def test_finite_limit_generic_diagram():
    # the limit of a single object with no arrows is that object
    lim = finite_limit([FpModule(4, (2, 4))], [])
    assert lim.apex == FpModule(4, (2, 4))
    assert lim.projections[0] == ModuleMap.identity(lim.apex)


def test_simplicial_kernel_examples():
    k = simplicial_kernel([red])
    assert k.apex == kernel_pair(red).apex
    m, n = FpModule(4, (2,)), FpModule(4, (4,))
    k = simplicial_kernel([ModuleMap.zero(m, n)] * 3)
    assert k.apex == FpModule.from_orders(4, (2,) * 4)
    z2 = FpModule(2, (2,))
    ident = ModuleMap.identity(z2)
    k = simplicial_kernel([ident, ident])
    triples = {
        (a, b, c)
        for a in range(2)
        for b in range(2)
        for c in range(2)
        # f_i k_j = f_{j-1} k_i for i < j
        if b == a and c == a and c == b
    }
    got = {sum((brute.apply(p, x) for p in k.projections), ()) for x in brute.elements(k.apex)}
    assert got == triples


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_simplicial_kernel_brute_force(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.choice([2, 4, 6]))
    x = random_module(rng, m, max_rank=1, min_rank=1)
    y = random_module(rng, m, max_rank=2)
    n = int(rng.integers(0, 3))
    fs = [random_map(rng, x, y) for _ in range(n + 1)]
    k = simplicial_kernel(fs)
    import itertools

    expect = set()
    for tup in itertools.product(brute.elements(x), repeat=n + 2):
        if all(
            brute.apply(fs[i], tup[j]) == brute.apply(fs[j - 1], tup[i])
            for j in range(n + 2)
            for i in range(j)
        ):
            expect.add(sum(tup, ()))
    got = {sum((brute.apply(p, v) for p in k.projections), ()) for v in brute.elements(k.apex)}
    assert got == expect
    assert len(got) == k.apex.size


# -- regular pushouts -------------------------------------------------------------


def test_regular_pushout_examples():
    ident = ModuleMap.identity(Z4)
    assert regular_pushout_check(CospanSquare(ident, ident, ident, ident))
    # X' is the pullback itself
    lim = pullback(red, red)
    p0, p1 = lim.projections
    assert regular_pushout_check(CospanSquare(top=p1, left=p0, right=red, bottom=red))


def test_regular_pushout_failing_example():
    incl = ModuleMap(Z2_4, Z4, [[2]])
    top = ModuleMap.zero(Z2_4, Z2_4)
    sq = CospanSquare(top=top, left=incl, right=ModuleMap.identity(Z2_4), bottom=red)
    with pytest.raises(NotEpi):
        regular_pushout_check(sq)
    assert pullback(red, ModuleMap.identity(Z2_4)).apex.size == 4
    assert regular_pushout_check(sq, require_epi=False) is False


def test_square_must_commute():
    with pytest.raises(InvalidStructure):
        CospanSquare(top=red, left=ModuleMap.identity(Z4), right=ModuleMap.zero(Z2_4, Z2_4), bottom=red)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_regular_pushout_implies_cokernel_iso(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.choice([2, 4]))
    x = random_module(rng, m, max_rank=2, min_rank=1)
    y = random_module(rng, m, max_rank=2)
    f = random_map(rng, x, y)
    if not is_surjective(f):
        return
    xp = random_module(rng, m, max_rank=2)
    left = random_map(rng, xp, x)
    # Y' = image of f o left, with top the corestriction
    e, sub = image_factorization(f @ left)
    sq = CospanSquare(top=e, left=left, right=sub.embedding, bottom=f)
    if regular_pushout_check(sq):
        # induced map on the kernels is then onto: K[top] -> K[bottom] surjective
        kt, kb = kernel(sq.top), kernel(sq.bottom)
        induced = kb.factor(sq.left @ kt.embedding)
        assert is_surjective(induced)


# -- tensor products --------------------------------------------------------------------


def test_tensor_examples():
    b = FpModule(4, (2, 4))
    assert tensor(b, FpModule.free(4, 1)) == b
    assert tensor(Z2_4, Z2_4) == Z2_4
    assert tensor(b, FpModule.zero(4)).is_zero
    assert brute.tensor_size(Z2_4, Z2_4, 4) == 2


@pytest.mark.parametrize(
    "m,b,x",
    [(4, (2,), (4,)), (4, (4,), (2,)), (6, (2,), (3,)), (6, (6,), (2,)), (4, (2,), (2, 2))],
)
def test_tensor_size_brute_force(m, b, x):
    bm, xm = FpModule.from_orders(m, b), FpModule.from_orders(m, x)
    assert tensor(bm, xm).size == brute.bilinear_count(bm, xm, m)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_tensor_functorial_and_right_exact(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.choice([4, 6, 12]))
    b = random_module(rng, m, max_rank=2)
    x, y, z = (random_module(rng, m, max_rank=3) for _ in range(3))
    f, g = random_map(rng, x, y), random_map(rng, y, z)
    t = lambda v: tensor(b, v)  # noqa: E731
    assert t(g @ f) == t(g) @ t(f)
    assert t(ModuleMap.identity(x)) == ModuleMap.identity(t(x))
    if is_surjective(f):
        assert is_surjective(t(f))
    proj, q = cokernel(f)
    # B (x) coker f == coker(B (x) f)
    assert cokernel(t(f)).q == t(q)
    assert is_exact_at(t(f), t(proj))


# -- enumeration and JSON ------------------------------------------------------------------


def test_enumeration():
    assert enumerate_elements(FpModule.zero(4)).tolist() == [[]]
    assert enumerate_elements(FpModule(2, (2,))).tolist() == [[0], [1]]
    els = enumerate_elements(FpModule(4, (2, 4)))
    assert [tuple(e) for e in els] == brute.elements(FpModule(4, (2, 4)))
    assert np.array_equal(element_index(FpModule(4, (2, 4)), els), np.arange(8))


def test_enumeration_guard(monkeypatch):
    big = FpModule.free(4, 11)
    with pytest.raises(EnumerationTooLarge):
        enumerate_elements(big)
    with max_enumeration(8):
        with pytest.raises(EnumerationTooLarge):
            enumerate_elements(FpModule(4, (4, 4)))
    monkeypatch.setenv("RESOLVENT_MAX_ENUM", "4")
    with pytest.raises(EnumerationTooLarge):
        enumerate_elements(FpModule(4, (2, 4)))
    with max_enumeration(64):
        assert len(enumerate_elements(FpModule(4, (2, 4)))) == 8


def test_direct_sum():
    s = direct_sum([FpModule(4, (4,)), FpModule(4, (2,))])
    assert s.module == FpModule(4, (2, 4))
    for i, p in zip(s.injections, s.projections):
        assert p @ i == ModuleMap.identity(i.dom)
    total = s.injections[0] @ s.projections[0] + s.injections[1] @ s.projections[1]
    assert total == ModuleMap.identity(s.module)


def test_json_roundtrip():
    f = ModuleMap(FpModule(4, (2, 4)), FpModule(4, (4,)), [[2, 3]])
    obj = json.loads(json.dumps(f.to_json()))
    assert obj == {"dom": {"modulus": 4, "factors": [2, 4]}, "cod": {"modulus": 4, "factors": [4]}, "matrix": [[2, 3]]}
    assert ModuleMap.from_json(obj) == f
    assert FpModule.from_json({"modulus": 4, "factors": [4, 2]}) == FpModule(4, (2, 4))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_tensor_of_two_maps_is_bifunctorial(seed):
    from resolvent.modules import tensor_maps

    rng = np.random.default_rng(seed)
    m = int(rng.choice([4, 6]))
    b, b2, x, y = (random_module(rng, m, max_rank=2) for _ in range(4))
    alpha, f = random_map(rng, b, b2), random_map(rng, x, y)
    # alpha (x) f == (alpha (x) 1) o (1 (x) f) == (1 (x) f) o (alpha (x) 1)
    left = tensor_maps(alpha, ModuleMap.identity(y)) @ tensor_maps(ModuleMap.identity(b), f)
    right = tensor_maps(ModuleMap.identity(b2), f) @ tensor_maps(alpha, ModuleMap.identity(x))
    assert tensor_maps(alpha, f) == left == right
