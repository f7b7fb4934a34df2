import numpy as np
import pytest

from morse_tower import category
from morse_tower.category import (
    CELL_TOL,
    ACell,
    ACellFactory,
    BCell,
    Functor,
    GluingError,
    compose_A,
    compose_B,
    identity_A,
    identity_B,
    smooth_step_inverse,
    witness_assoc,
    witness_identity_law,
)
from morse_tower.homotopy import Atomic, max_difference, ramp
from morse_tower.z2algebra import GradedMap, zero_complex


# ---------------------------------------------------------------------------
# category B


def test_b_axioms_hold_on_fifty_samples():
    rep = category.check_axioms("B", samples=50, seed=0)
    assert rep["ok"], rep["axioms"]
    assert all(t["checked"] == t["passed"] > 0 for t in rep["axioms"].values())


def test_b_broken_composite_fails_source_axiom():
    rep = category.check_axioms("B", samples=10, seed=0, broken=True)
    assert not rep["ok"]
    assert rep["axioms"]["a"]["passed"] < rep["axioms"]["a"]["checked"]


def test_b_composite_along_top_column_adds():
    rng = np.random.default_rng(3)
    c, cp = category.random_complex(rng, 3, 2), category.random_complex(rng, 3, 2, prefix="f")
    base = category.random_zero_cell(rng, c, cp)
    b1 = category.random_cell_over(rng, base)
    b2 = category.random_cell_over(rng, b1.target)
    comp = compose_B(b2, b1, 0)
    assert comp.phi == b1.phi + b2.phi
    assert comp.source == b1.source and comp.target == b2.target
    assert comp.validate().ok


def test_b_gluing_mismatch_is_rejected():
    rng = np.random.default_rng(4)
    c, cp = category.random_complex(rng, 3, 2), category.random_complex(rng, 3, 2, prefix="f")
    b1 = category.random_cell_over(rng, category.random_zero_cell(rng, c, cp))
    # a chain map homotopic to, but different from, the target of b1
    other = b1.target.phi + category.differential(category.random_graded_map(rng, c, cp, 1))
    while other == b1.target.phi:
        other = b1.target.phi + category.differential(category.random_graded_map(rng, c, cp, 1))
    b2 = category.random_cell_over(rng, BCell(other))
    with pytest.raises(GluingError):
        compose_B(b2, b1, 0)


def test_b_identity_is_zero_map():
    c = zero_complex([1, 2, 1])
    one = identity_B(BCell(GradedMap.identity(c)))
    assert one.phi.is_zero() and one.level == 1


# ---------------------------------------------------------------------------
# category A


@pytest.fixture(scope="module")
def factory():
    return ACellFactory(np.random.default_rng(11))


def test_a_composite_boundaries_match_evaluated_facets(factory):
    c3, c2, c1 = factory.triple(1, 0)
    comp = compose_A(c2, c1, 0)
    assert max(comp.facet_gaps()) <= CELL_TOL
    assert comp.source.same_as(c1.source) and comp.target.same_as(c2.target)


def test_a_gluing_mismatch_is_rejected(factory):
    a = factory.one(factory.poly(), factory.poly())
    b = factory.one(factory.poly(), factory.poly())
    with pytest.raises(GluingError, match="gluing mismatch"):
        compose_A(b, a, 0)


def test_a_composite_needs_valid_column(factory):
    c3, c2, c1 = factory.triple(1, 0)
    with pytest.raises(GluingError):
        compose_A(c2, c1, 1)


@pytest.mark.parametrize("s", [0.0, 0.37, 1.0])
def test_a_identity_evaluates_to_its_inner_cell(factory, s):
    c = factory.one(factory.poly(), factory.poly())
    one = identity_A(c)
    assert one.level == 2
    sphere = c.payload.alpha.surface
    charts, u = sphere.spot_points(20)
    for t in (0.0, 0.5, 1.0):
        got = one.payload.evaluate(np.array([[0.8, s]]), t, charts, u)
        want = c.payload.evaluate(np.array([[s]]), t, charts, u)
        for g, w in zip(got, want):
            assert np.allclose(g, w, atol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_a_witness_endpoints_are_exact(seed):
    rng = np.random.default_rng(seed)
    fac = ACellFactory(rng)
    ell = int(rng.integers(1, 3))
    p = int(rng.integers(0, ell))
    c3, c2, c1 = fac.triple(ell, p)
    for res in (witness_assoc(c3, c2, c1, p).check(),
                witness_identity_law(c1, p, "left").check(),
                witness_identity_law(c1, p, "right").check()):
        assert res["ok"], res
        assert res["gap_r0"] <= 1e-12 and res["gap_r1"] <= 1e-12


def test_a_bracketings_genuinely_differ(factory):
    # associativity holds only up to the witness, not on the nose
    c3, c2, c1 = factory.triple(1, 0)
    left = compose_A(compose_A(c3, c2, 0), c1, 0)
    right = compose_A(c3, compose_A(c2, c1, 0), 0)
    assert left.gap(right) > 1e-6


def test_a_witness_as_cell_has_expected_ends(factory):
    c3, c2, c1 = factory.triple(1, 0)
    w = witness_assoc(c3, c2, c1, 0).as_cell()
    assert w.level == 2
    assert max(w.facet_gaps()) <= CELL_TOL


def test_a_interchange_is_exact(factory):
    d, c, b, a = factory.interchange()
    lhs = compose_A(compose_A(d, c, 1), compose_A(b, a, 1), 0)
    rhs = compose_A(compose_A(d, b, 0), compose_A(c, a, 0), 1)
    assert lhs.gap(rhs) <= CELL_TOL


def test_a_axiom_suite_and_broken_variant():
    assert category.check_axioms("A", samples=2, seed=5)["ok"]
    assert not category.check_axioms("A", samples=2, seed=5, broken=True)["ok"]


def test_smooth_step_inverse_round_trips():
    for y in (0.0, 0.1, 0.4, 0.5, 0.93, 1.0):
        assert abs(float(ramp(np.array([smooth_step_inverse(y)]))[0]) - y) < 1e-12


# ---------------------------------------------------------------------------
# the functor


@pytest.fixture(scope="module")
def pair_cells(stock):
    sc = stock("sphere_pair")
    c1 = ACell(sc.family("designed"), name="designed")
    # from the target push 0.6x back down to -0.4x, crossing the separatrix at s1 = 0.6
    c2 = ACell(Atomic(sc.alpha, sc.beta, "(0.6-s1)*x", level=1), name="back")
    return sc, c1, c2


def test_functor_on_a_composite_agrees_on_both_paths(pair_cells):
    sc, c1, c2 = pair_cells
    comp = compose_A(c2, c1, 0)
    fp, fs = Functor(sc.tol, "provenance"), Functor(sc.tol, "scan")
    a, b = fp(comp), fs(comp)
    assert a == b == compose_B(fp(c2), fp(c1), 0)
    # two crossings cancel mod 2
    assert a.phi.is_zero()


def test_composite_locus_sits_at_rescaled_positions(pair_cells):
    sc, c1, c2 = pair_cells
    comp = compose_A(c2, c1, 0)
    expected = [smooth_step_inverse(0.4) / 2, (1 + smooth_step_inverse(0.6)) / 2]
    scanned = Functor(sc.tol, "scan").loci(comp)[("a0.0", "b1.0")]
    glued = Functor(sc.tol, "provenance").loci(comp)[("a0.0", "b1.0")]
    assert np.allclose(scanned, expected, atol=1e-6)
    assert np.allclose(glued, expected, atol=1e-6)


@pytest.mark.parametrize("path", ["provenance", "scan"])
def test_functor_sends_identities_to_zero(pair_cells, path):
    sc, c1, _ = pair_cells
    f = Functor(sc.tol, path)
    for cell in (c1.source, c1):
        assert f(identity_A(cell)).phi.is_zero()


def test_functor_preserves_boundaries(pair_cells):
    sc, c1, _ = pair_cells
    f = Functor(sc.tol)
    img = f(c1)
    assert img.source == f(c1.source) and img.target == f(c1.target)
    assert img.validate().ok


def test_functor_rejects_unknown_path():
    with pytest.raises(ValueError):
        Functor(path="shortcut")


def test_constant_identity_payload_matches_cell(pair_cells):
    _, c1, _ = pair_cells
    one = identity_A(c1.source)
    assert max_difference(one.source.payload, c1.source.payload) == 0.0
