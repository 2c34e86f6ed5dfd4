import numpy as np
import pytest

from brute import apply, comparison_is_onto, elements
from resolvent.comonad import POINTED_FREE, SET_FREE, canonical_contraction, comonadic_resolution
from resolvent.comparison import (
    ResolutionPair,
    build_homotopy,
    default_contraction,
    extend_map,
    lift_map,
    lift_through_faces,
    p_exactness_check,
    p_exactness_report,
    resolution,
    self_homotopy_fast,
    solving_contraction,
    tv_resolution,
)
from resolvent.errors import IncompatibleFamily, InvalidStructure, TruncationTooShallow
from resolvent.modules import FpModule, ModuleMap
from resolvent.sampling import random_map
from resolvent.simplicial import (
    GroupView,
    SemiSimplicialMap,
    constant_object,
    homology_of_simplicial,
    homotopy_to_cocylinder,
    cocylinder,
    verify_contraction,
    verify_homotopy,
)
from resolvent.workbench import comparison_suite

Z2_F2 = FpModule.free(2, 1)
Z2_Z4 = FpModule.from_orders(4, [2])


# --- lifting -----------------------------------------------------------------


def test_lift_of_zero_family_has_zero_faces():
    a = tv_resolution(Z2_Z4, "minimal", 3)
    h = solving_contraction(a)
    zero = np.zeros((a.level(0).rank, 2), dtype=np.int64)
    w = lift_through_faces(a, h, [zero, zero])
    v = GroupView(a, 2)
    assert not v.face(1, 0, w).any() and not v.face(1, 1, w).any()


def test_lift_through_augmentation():
    a = comonadic_resolution(POINTED_FREE, FpModule.from_orders(4, [2, 4]), 1)
    p = FpModule.free(4, 2)
    f = random_map(np.random.default_rng(1), p, a.level(-1))
    lifted = lift_map(a, canonical_contraction(a), [f])
    assert a.face(0, 0) @ lifted == f


@pytest.mark.parametrize("seed", range(10))
def test_lift_of_faces_of_known_map(seed):
    rng = np.random.default_rng(seed)
    a = tv_resolution(FpModule.from_orders(4, [2]), "minimal", 4)
    h = solving_contraction(a)
    n = int(rng.integers(0, 3))
    cols = int(rng.integers(1, 3))
    v = GroupView(a, cols)
    x = rng.integers(0, 4, size=(a.level(n).rank, cols)) % a.level(n).orders[:, None]
    fam = [v.face(n, i, x) for i in range(n + 1)]
    w = lift_through_faces(a, h, fam)
    for i in range(n + 1):
        assert v.equal(n - 1, v.face(n, i, w), fam[i])


def test_lift_rejects_incompatible_family():
    a = tv_resolution(Z2_Z4, "minimal", 3)
    one = np.array([[1]])
    with pytest.raises(IncompatibleFamily):
        lift_through_faces(a, solving_contraction(a), [one, np.array([[2]])])


# --- extensions ----------------------------------------------------------------


def test_extension_of_identity_with_own_contraction():
    a = comonadic_resolution(POINTED_FREE, Z2_Z4, 2)
    ext = extend_map(ResolutionPair(a, a, canonical_contraction(a)), ModuleMap.identity(Z2_Z4), 1)
    assert ext.face_failures() == []


def test_set_free_to_pointed_free_extension():
    p = comonadic_resolution(SET_FREE, Z2_F2, 3)
    a = comonadic_resolution(POINTED_FREE, Z2_F2, 3)
    ext = extend_map(ResolutionPair(p, a, canonical_contraction(a)), ModuleMap.identity(Z2_F2), 2)
    assert ext.face_failures() == []
    assert ext[-1] == ModuleMap.identity(Z2_F2)


def test_extension_of_zero_map():
    p = tv_resolution(Z2_Z4, "minimal", 2)
    a = tv_resolution(FpModule.from_orders(4, [4]), "minimal", 3)
    ext = extend_map(ResolutionPair(p, a, solving_contraction(a)), ModuleMap.zero(p.level(-1), a.level(-1)), 2)
    assert ext.face_failures() == []


def test_extension_needs_depth():
    p = tv_resolution(Z2_Z4, "minimal", 2)
    a = tv_resolution(Z2_Z4, "minimal", 2)
    with pytest.raises(TruncationTooShallow):
        extend_map(ResolutionPair(p, a, solving_contraction(a)), ModuleMap.identity(Z2_Z4), 2)


def test_pair_needs_free_source():
    a = constant_object(Z2_Z4, 2, augmented=True)
    with pytest.raises(InvalidStructure):
        ResolutionPair(a, a, solving_contraction(tv_resolution(Z2_Z4, "minimal", 2)))


# --- homotopies ----------------------------------------------------------------


def test_homotopy_between_equal_maps():
    p = tv_resolution(Z2_Z4, "minimal", 2)
    a = tv_resolution(Z2_Z4, "minimal", 4)
    pair = ResolutionPair(p, a, solving_contraction(a))
    f = extend_map(pair, ModuleMap.identity(Z2_Z4), 2)
    assert verify_homotopy(build_homotopy(pair, f, f, 2))


def test_depth_zero_homotopy():
    p = tv_resolution(Z2_Z4, "minimal", 1)
    a = tv_resolution(Z2_Z4, "minimal", 3)
    pair = ResolutionPair(p, a, solving_contraction(a))
    f = extend_map(pair, ModuleMap.identity(Z2_Z4), 0)
    g = extend_map(ResolutionPair(p, a, solving_contraction(a, seed=5)), ModuleMap.identity(Z2_Z4), 0)
    h = build_homotopy(pair, f, g, 0)
    assert a.face(1, 0) @ h[(0, 0)] == f[0]
    assert a.face(1, 1) @ h[(0, 0)] == g[0]


def test_two_comonads_are_homotopy_equivalent():
    x = Z2_F2
    gs = comonadic_resolution(SET_FREE, x, 3)
    kp = comonadic_resolution(POINTED_FREE, x, 4)
    gs4 = comonadic_resolution(SET_FREE, x, 3)
    ident = ModuleMap.identity(x)
    f = extend_map(ResolutionPair(gs, kp, canonical_contraction(kp)), ident, 2)
    g = extend_map(ResolutionPair(kp, gs4, canonical_contraction(gs4)), ident, 2)
    gf = g.restricted(-1, 2) @ f.restricted(-1, 2)
    assert verify_homotopy(self_homotopy_fast(gs, gf, 2))
    fg = f.restricted(-1, 2) @ g.restricted(-1, 2)
    ident_k = SemiSimplicialMap.identity(kp).restricted(-1, 2)
    h = build_homotopy(ResolutionPair(kp, kp, canonical_contraction(kp)), fg, ident_k, 2)
    assert verify_homotopy(h)


def test_self_homotopy_of_identity():
    res = comonadic_resolution(POINTED_FREE, Z2_Z4, 2)
    ident = SemiSimplicialMap.identity(res).restricted(-1, 1)
    assert verify_homotopy(self_homotopy_fast(res, ident, 1))


def test_self_homotopy_on_rank_one_tower():
    res = comonadic_resolution(POINTED_FREE, Z2_F2, 4)
    ext = extend_map(ResolutionPair(res, res, canonical_contraction(res)), ModuleMap.identity(Z2_F2), 3)
    h = self_homotopy_fast(res, ext, 3)
    assert all(m.matrix.to_array().shape == (1, 1) for m in h.maps.values())
    assert verify_homotopy(h)


def test_homotopy_feeds_the_cocylinder():
    p = tv_resolution(Z2_Z4, "minimal", 2)
    a = tv_resolution(Z2_Z4, "minimal", 4)
    f = extend_map(ResolutionPair(p, a, solving_contraction(a)), ModuleMap.identity(Z2_Z4), 2)
    g = extend_map(ResolutionPair(p, a, solving_contraction(a, seed=3)), ModuleMap.identity(Z2_Z4), 2)
    h = build_homotopy(ResolutionPair(p, a, solving_contraction(a)), f, g, 1)
    coc = cocylinder(a, 1)
    H = homotopy_to_cocylinder(h, coc)
    for n in range(2):
        assert coc.eps0[n] @ H[n] == f[n]
        assert coc.eps1[n] @ H[n] == g[n]


def test_comparison_suite_small():
    rep = comparison_suite(seed=1, count=6, depth=1)
    assert rep["faces"] == rep["homotopies"] == 6


# --- simplicial-kernel resolutions -----------------------------------------------


def test_tv_minimal_first_levels():
    res = tv_resolution(Z2_Z4, "minimal", 3)
    assert res.level(0) == FpModule.free(4, 1)
    assert res.level(1) == FpModule.free(4, 2)
    kernel_pair = {(x, y) for x in elements(res.level(0)) for y in elements(res.level(0))
                   if apply(res.face(0, 0), x) == apply(res.face(0, 0), y)}
    assert len(kernel_pair) == 8
    columns = {tuple(int(res.face(1, i).matrix.to_array()[0, j]) for i in range(2)) for j in range(2)}
    assert columns == {(1, 1), (0, 2)}
    assert comparison_is_onto(res, 0)


def test_tv_of_zero_module():
    res = tv_resolution(FpModule.zero(4), "minimal", 3)
    assert all(res.level(n).is_zero for n in range(-1, 4))


def test_tv_of_free_module():
    x = FpModule.free(4, 2)
    res = tv_resolution(x, "minimal", 4)
    assert res.level(0) == x
    assert homology_of_simplicial(res, 0) == x
    assert all(homology_of_simplicial(res, n).is_zero for n in (1, 2, 3))


@pytest.mark.parametrize("strategy", ["minimal", "set", "pointed"])
def test_tv_strategies_are_exact(strategy):
    # set covers outgrow the level cap beyond depth 1
    res = tv_resolution(Z2_F2, strategy, 1 if strategy == "set" else 2)
    assert p_exactness_check(res)
    assert verify_contraction(solving_contraction(res))


def test_p_exactness_of_resolutions():
    assert p_exactness_check(comonadic_resolution(POINTED_FREE, Z2_Z4, 2))
    assert p_exactness_check(comonadic_resolution(SET_FREE, Z2_F2, 2))
    res = tv_resolution(FpModule.from_orders(4, [2, 4]), "minimal", 3)
    assert p_exactness_check(res)


@pytest.mark.parametrize("orders", [[2], [4]])
def test_p_exactness_of_constant_object_matches_enumeration(orders):
    a = constant_object(FpModule.from_orders(4, orders), 2, augmented=True)
    report = p_exactness_report(a)
    assert report[0] is True
    assert report[1:] == [comparison_is_onto(a, n) for n in range(0, 2)]


def test_default_contraction_choice():
    com = comonadic_resolution(POINTED_FREE, Z2_Z4, 1)
    assert default_contraction(com).name.startswith("canonical")
    assert default_contraction(tv_resolution(Z2_Z4, "minimal", 1)).name == "solving"


def test_resolution_by_name():
    assert resolution("tv-min", Z2_Z4, 2).name == "tv-minimal"
    assert resolution("pointed-free", Z2_Z4, 1).comonad is POINTED_FREE
    with pytest.raises(ValueError):
        resolution("bar", Z2_Z4, 1)
