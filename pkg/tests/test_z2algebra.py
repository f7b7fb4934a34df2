import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from morse_tower import category
from morse_tower.z2algebra import (
    ChainComplex,
    Gf2Matrix,
    GradedMap,
    brute_force_rank,
    check_boundary_square,
    homology_ranks,
    induced_homology_map,
    mat_mul,
    nullspace,
    rank,
    solve,
    verify_chain_map,
    verify_homotopy,
    zero_complex,
)


def bit_matrices(max_rows=6, max_cols=6):
    shapes = st.tuples(st.integers(0, max_rows), st.integers(0, max_cols))
    return shapes.flatmap(lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


def complexes():
    return st.integers(0, 2**31 - 1).map(lambda seed: category.random_complex(np.random.default_rng(seed)))


# ---------------------------------------------------------------------------
# matrices


def test_identity_times_m_is_m():
    m = Gf2Matrix([[1, 0, 1], [1, 1, 0]])
    assert mat_mul(Gf2Matrix.identity(2), m) == m


def test_two_by_two_product_by_hand():
    a = Gf2Matrix([[1, 1], [0, 1]])
    b = Gf2Matrix([[1, 0], [1, 1]])
    assert (a @ b).tolist() == [[0, 1], [1, 1]]


@given(st.integers(0, 2**31 - 1))
def test_product_matches_integer_product_mod_2(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 2, (8, 8)), rng.integers(0, 2, (8, 8))
    assert mat_mul(Gf2Matrix(a), Gf2Matrix(b)).tolist() == ((a @ b) % 2).tolist()


def test_float_entries_rejected():
    with pytest.raises(TypeError):
        Gf2Matrix(np.array([[0.5]]))


def test_integer_entries_reduced_mod_2():
    assert Gf2Matrix([[2, 3], [-1, 4]]).tolist() == [[0, 1], [1, 0]]


def test_addition_is_xor_and_self_inverse():
    a = Gf2Matrix([[1, 0], [1, 1]])
    assert (a + a).is_zero()


@given(bit_matrices())
def test_rank_matches_brute_force(bits):
    m = Gf2Matrix(bits, shape=bits.shape)
    assert rank(m) == brute_force_rank(m)


@given(bit_matrices())
def test_nullspace_is_kernel_of_full_dimension(bits):
    m = Gf2Matrix(bits, shape=bits.shape)
    ns = nullspace(m)
    assert ns.shape == (m.cols, m.cols - rank(m))
    if ns.size and m.rows:
        assert not ((bits.astype(int) @ ns.astype(int)) % 2).any()


@given(bit_matrices(5, 5), st.integers(0, 2**31 - 1))
def test_solve_recovers_a_consistent_right_hand_side(bits, seed):
    if bits.shape[1] == 0:
        return
    x = np.random.default_rng(seed).integers(0, 2, bits.shape[1])
    b = (bits.astype(int) @ x) % 2
    y = solve(bits, b)
    assert y is not None
    assert (((bits.astype(int) @ y) % 2) == b).all()


def test_solve_reports_inconsistent_system():
    assert solve(np.array([[1, 1], [1, 1]], dtype=np.uint8), np.array([1, 0])) is None


# ---------------------------------------------------------------------------
# complexes


def test_zero_complex_passes_square_check():
    assert check_boundary_square(zero_complex([2, 3, 1])).ok


def test_injected_nonzero_square_fails_at_degree_2():
    c = ChainComplex([["m"], ["s"], ["M"]], [[[1]], [[1]]], check=False)
    rep = check_boundary_square(c)
    assert not rep.ok
    assert rep.location[0] == 2


def test_construction_rejects_nonzero_square():
    with pytest.raises(ValueError):
        ChainComplex([["m"], ["s"], ["M"]], [[[1]], [[1]]])


def test_homology_of_sphere_shaped_complex():
    assert homology_ranks(zero_complex([1, 0, 1])) == [1, 0, 1]


def test_homology_of_zero_complex_with_two_degrees():
    assert homology_ranks(zero_complex([2, 2])) == [2, 2]


def test_homology_of_deformed_sphere_shaped_complex():
    c = ChainComplex([["m"], ["s"], ["M1", "M2"]], [[[0]], [[1, 1]]])
    assert homology_ranks(c) == [1, 0, 1]


@given(complexes())
def test_euler_characteristic_of_homology(c):
    ranks = homology_ranks(c)
    assert sum((-1) ** k * b for k, b in enumerate(ranks)) == sum((-1) ** k * n for k, n in enumerate(c.dims))
    assert all(b >= 0 for b in ranks)


@given(complexes())
def test_json_round_trip(c):
    assert ChainComplex.from_json(c.to_json()) == c


@given(complexes(), st.data())
def test_basis_permutation_preserves_homology(c, data):
    k = data.draw(st.integers(0, c.top_degree))
    perm = data.draw(st.permutations(list(range(c.dim(k)))))
    assert homology_ranks(c.permuted(k, perm)) == homology_ranks(c)


# ---------------------------------------------------------------------------
# maps


def test_identity_is_chain_map():
    c = ChainComplex([["m"], ["s"], ["M1", "M2"]], [[[0]], [[1, 1]]])
    assert verify_chain_map(GradedMap.identity(c)).ok


def test_flipped_bit_breaks_chain_map():
    c = ChainComplex([["m"], ["s"], ["M1", "M2"]], [[[0]], [[1, 1]]])
    bad = GradedMap.identity(c).with_bit_flipped(2, 0, 0)
    assert not verify_chain_map(bad).ok


def test_zero_homotopy_between_equal_maps_passes():
    c = zero_complex([1, 2, 1])
    u = GradedMap.identity(c)
    assert verify_homotopy(GradedMap.zero(c, c, 1), u, u).ok


def test_zero_homotopy_between_different_maps_fails():
    c = zero_complex([1, 2, 1])
    u = GradedMap.identity(c)
    assert not verify_homotopy(GradedMap.zero(c, c, 1), u, GradedMap.zero(c, c, 0)).ok


@given(st.integers(0, 2**31 - 1))
def test_differential_of_any_map_is_null_homotopic(seed):
    rng = np.random.default_rng(seed)
    c, cp = category.random_complex(rng), category.random_complex(rng)
    u0 = category.random_chain_map(rng, c, cp)
    e = category.random_graded_map(rng, c, cp, 1)
    u1 = u0 + category.differential(e)
    assert verify_chain_map(u1).ok
    assert verify_homotopy(e, u0, u1).ok
    assert induced_homology_map(u0) == induced_homology_map(u1)


def test_identity_induces_identity_iso():
    c = ChainComplex([["m"], ["s"], ["M1", "M2"]], [[[0]], [[1, 1]]])
    ind = induced_homology_map(GradedMap.identity(c))
    assert ind.iso
    assert [b.tolist() for b in ind.blocks] == [[[1]], [], [[1]]]


def test_zero_map_is_not_iso():
    c = zero_complex([1, 0, 1])
    assert not induced_homology_map(GradedMap.zero(c, c, 0)).iso


def _two_maxima_maps():
    c = ChainComplex([["m"], ["s"], ["M1", "M2"]], [[[0]], [[1, 1]]])
    cp = zero_complex([1, 0, 1])
    empty = np.zeros((0, 1), dtype=np.uint8)
    return c, cp, lambda top: GradedMap(c, cp, 0, [[[1]], empty, [top]])


def test_both_maxima_to_one_maximum_kills_top_class():
    # H_2 is spanned by M1 + M2, which [1 1] sends to 2M = 0
    _, _, make = _two_maxima_maps()
    u = make([1, 1])
    assert verify_chain_map(u).ok
    ind = induced_homology_map(u)
    assert not ind.iso
    assert ind.blocks[2].tolist() == [[0]]


def test_one_maximum_to_the_maximum_is_iso():
    _, _, make = _two_maxima_maps()
    for top in ([0, 1], [1, 0]):
        assert induced_homology_map(make(top)).iso


@settings(max_examples=25)
@given(st.integers(0, 2**31 - 1))
def test_homology_map_composes(seed):
    rng = np.random.default_rng(seed)
    c = category.random_complex(rng, top_degree=2)
    cp = category.random_complex(rng, top_degree=2)
    cpp = category.random_complex(rng, top_degree=2)
    f, g = category.random_chain_map(rng, c, cp), category.random_chain_map(rng, cp, cpp)
    gf = GradedMap(c, cpp, 0, [g.block(k) @ f.block(k) for k in range(3)])
    fh, gh, gfh = induced_homology_map(f), induced_homology_map(g), induced_homology_map(gf)
    for k in range(3):
        assert (gh.blocks[k] @ fh.blocks[k]) == gfh.blocks[k]
