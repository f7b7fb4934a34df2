import pytest

from morse_tower import msw
from morse_tower.homotopy import Atomic
from morse_tower.z2algebra import (
    GradedMap,
    check_boundary_square,
    homology_ranks,
    induced_homology_map,
    verify_chain_map,
    verify_homotopy,
)


def blocks(m):
    return [b.tolist() for b in m.blocks]


@pytest.mark.parametrize("name,end,dims,ranks", [
    ("sphere", "alpha", [1, 0, 1], [1, 0, 1]),
    ("deformed_sphere", "alpha", [1, 1, 2], [1, 0, 1]),
    ("sphere_pair", "beta", [2, 1, 1], [1, 0, 1]),
    ("tilted_torus", "alpha", [1, 2, 1], [1, 2, 1]),
])
def test_complex_has_surface_homology(stock, name, end, dims, ranks):
    sc = stock(name)
    cx = msw.build_msw(sc.pair(end), sc.tol)
    assert check_boundary_square(cx).ok
    assert list(cx.dims) == dims
    assert homology_ranks(cx) == ranks


def test_deformed_sphere_saddle_feeds_both_maxima(stock):
    sc = stock("deformed_sphere")
    cx = msw.build_msw(sc.alpha, sc.tol)
    assert cx.to_json()["boundary"][2] == [[1, 1]]
    assert cx.to_json()["boundary"][1] == [[0]]


def test_two_minima_sphere_saddle_feeds_both_minima(stock):
    sc = stock("sphere_pair")
    assert msw.build_msw(sc.beta, sc.tol).to_json()["boundary"][1] == [[1], [1]]


def test_witnesses_are_collected(stock):
    sc = stock("deformed_sphere")
    wit = {}
    msw.build_msw(sc.alpha, sc.tol, witnesses=wit)
    assert list(wit) == ["a1.0"]
    assert sorted(tr.end_label for tr in wit["a1.0"]["stable"]) == ["a2.0", "a2.1"]


# ---------------------------------------------------------------------------
# continuation maps


def test_constant_homotopy_gives_identity(stock):
    sc = stock("tilted_torus")
    u = msw.continuation_map(sc.family("constant"), sc.tol)
    assert blocks(u) == [[[1]], [[1, 0], [0, 1]], [[1]]]


def test_rotation_gives_identity(stock):
    sc = stock("sphere")
    u = msw.continuation_map(sc.family("rotate"), sc.tol)
    assert blocks(u) == [[[1]], [], [[1]]]
    assert induced_homology_map(u).iso


def test_deformed_to_tilted_sphere_is_a_quasi_isomorphism(stock):
    sc = stock("deformed_sphere")
    u = msw.continuation_map(sc.family("flatten"), sc.tol)
    assert verify_chain_map(u).ok
    # only one of the two maxima of the ridge is reached from the top
    assert blocks(u) == [[[1]], [], [[0, 1]]]
    assert induced_homology_map(u).iso


def test_continuation_into_two_minima(stock):
    sc = stock("sphere_pair")
    u = msw.continuation_map(sc.family("direct"), sc.tol)
    assert verify_chain_map(u).ok
    assert induced_homology_map(u).iso


def test_non_generic_continuation_raises(stock):
    sc = stock("sphere_pair")
    # by symmetry the minimum flows straight onto the saddle
    with pytest.raises(msw.MSWError, match="not generic"):
        msw.continuation_map(Atomic(sc.alpha, sc.beta, "0"), sc.tol)


def test_frozen_parameters_must_match_level(stock):
    sc = stock("sphere_pair")
    with pytest.raises(ValueError):
        msw.continuation_map(sc.family("designed"), sc.tol, s=(0.1, 0.2))


# ---------------------------------------------------------------------------
# homotopies


def test_designed_family_has_one_homotopy_entry(stock):
    sc = stock("sphere_pair")
    u0, u1, e = msw.chain_homotopy(sc.family("designed"), sc.tol)
    assert blocks(e)[0] == [[1]]
    assert sum(sum(map(sum, b)) for b in blocks(e) if b and b[0]) == 1
    assert verify_homotopy(e, u0, u1).ok
    # the minimum jumps basins across the root
    assert blocks(u0)[0] != blocks(u1)[0]
    assert induced_homology_map(u0) == induced_homology_map(u1)


def test_flat_family_has_zero_homotopy(stock):
    sc = stock("sphere")
    u0, u1, e = msw.chain_homotopy(sc.family("flat"), sc.tol)
    assert all(b.is_zero() for b in e.blocks)
    assert u0 == u1


def test_chain_homotopy_needs_level_one(stock):
    sc = stock("sphere")
    with pytest.raises(ValueError):
        msw.chain_homotopy(sc.family("rotate"), sc.tol)


def test_level_two_family_has_one_entry_and_satisfies_facet_relation(stock):
    sc = stock("sphere_level2")
    h = sc.family("sheet")
    phi = msw.higher_homotopy(h, sc.tol)
    assert blocks(phi)[0] == [[1]]
    e0 = msw.chain_homotopy(h.facet(0.0), sc.tol)[2]
    e1 = msw.chain_homotopy(h.facet(1.0), sc.tol)[2]
    assert verify_homotopy(GradedMap(phi.domain, phi.codomain, 2, phi.blocks), e0, e1).ok


def test_higher_homotopy_rejects_level_zero(stock):
    sc = stock("sphere")
    with pytest.raises(ValueError):
        msw.higher_homotopy(sc.family("rotate"), sc.tol)
