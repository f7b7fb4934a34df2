"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test records one ``criterion N: PASS/FAIL`` line, printed in the
"acceptance criteria" section at the end of the pytest run. Scenarios are
loaded fresh inside each criterion so that timings include all geometry.
"""
import contextlib
import filecmp
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from morse_tower import category, cli, moduli, msw, scenario
from morse_tower.z2algebra import check_boundary_square, homology_ranks, induced_homology_map, verify_chain_map, \
    verify_homotopy


@contextlib.contextmanager
def criterion(key: str, title: str, budget: float = None):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f} s, budget {budget:.0f} s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        limit = f" / budget {budget:.0f} s" if budget is not None else ""
        ACCEPTANCE_LINES[key] = f"criterion {key}: {status}  {title}  ({elapsed:.1f} s{limit})"


COMPLEXES = [("sphere", "alpha", [1, 0, 1]), ("tilted_torus", "alpha", [1, 2, 1]),
             ("deformed_sphere", "alpha", [1, 0, 1])]


def square_zero(scale: float):
    for name, end, _ in COMPLEXES:
        start = time.perf_counter()
        sc = scenario.load(name, scale)
        cx = msw.build_msw(sc.pair(end), sc.tol)
        rep = check_boundary_square(cx)
        assert rep.ok, f"{name}: {rep.detail}"
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"{name} complex took {elapsed:.1f} s"


def homology(scale: float):
    for name, end, ranks in COMPLEXES:
        sc = scenario.load(name, scale)
        assert homology_ranks(msw.build_msw(sc.pair(end), sc.tol)) == ranks, name


def continuation(scale: float):
    sc = scenario.load("deformed_sphere", scale)
    u = msw.continuation_map(sc.family("flatten"), sc.tol, check=False)
    assert verify_chain_map(u).ok
    assert induced_homology_map(u).iso


def designed_family(scale: float):
    """Criterion 4; returns (U0, U1) for criterion 5."""
    sc = scenario.load("sphere_pair", scale)
    h = sc.family("designed")
    odd = []
    for p in h.alpha.critical_points:
        for cp in h.beta.points_of_index(p.index + 1):
            loc = moduli.scan_nongeneric(h, p, cp, sc.tol)
            if len(loc.roots) % 2:
                odd.append((p.id, cp.id, loc))
    assert [(a, b) for a, b, _ in odd] == [("a0.0", "b1.0")]
    for p in h.alpha.critical_points:
        for q in h.beta.points_of_index(p.index):
            rep = moduli.boundary_strata(h, p, q, sc.tol)
            assert rep.to_json()["total_parity"] == 0, (p.id, q.id)
    u0, u1, e = msw.chain_homotopy(h, sc.tol)
    assert verify_homotopy(e, u0, u1).ok
    loc = odd[0][2]
    doubled = moduli.scan_nongeneric(h, sc.point("a0.0"), sc.point("b1.0"), sc.tol, grid=2 * loc.grid)
    assert len(doubled.roots) == len(loc.roots)
    assert np.max(np.abs(np.array(doubled.roots) - np.array(loc.roots))) < 1e-6
    return u0, u1


def induced_equal(u0, u1):
    assert induced_homology_map(u0) == induced_homology_map(u1)


def test_criterion_01_square_zero():
    with criterion("01", "d^2 = 0 on the sphere, tilted torus and deformed sphere complexes", 90):
        square_zero(1.0)


def test_criterion_02_homology():
    with criterion("02", "GF(2) homology (1,0,1), (1,2,1), (1,0,1)"):
        homology(1.0)


def test_criterion_03_continuation():
    with criterion("03", "deformed sphere continuation is a chain map and a homology iso", 60):
        continuation(1.0)


@pytest.fixture(scope="module")
def designed_maps():
    return {}


def test_criterion_04_designed_family(designed_maps):
    with criterion("04", "designed family: one odd locus, even strata, homotopy relation, stable root", 120):
        designed_maps["u"] = designed_family(1.0)


def test_criterion_05_induced_maps_agree(designed_maps):
    with criterion("05", "induced maps of U0 and U1 agree on homology"):
        assert "u" in designed_maps, "criterion 4 did not pass"
        induced_equal(*designed_maps["u"])


def test_criterion_06_strict_category():
    with criterion("06", "50 seeded B configurations satisfy axioms (a)-(f) exactly", 10):
        rep = category.check_axioms("B", samples=50, seed=0)
        assert rep["ok"], rep["axioms"]


def test_criterion_07_weak_category_witnesses():
    with criterion("07", "witness endpoints within 1e-12 for 10 seeded A triples", 30):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            factory = category.ACellFactory(rng)
            ell = int(rng.integers(1, 3))
            p = int(rng.integers(0, ell))
            c3, c2, c1 = factory.triple(ell, p)
            for w in (category.witness_assoc(c3, c2, c1, p), category.witness_identity_law(c1, p, "left"),
                      category.witness_identity_law(c1, p, "right")):
                g0, g1 = w.endpoint_gaps()
                assert g0 <= 1e-12 and g1 <= 1e-12, (seed, w.label, g0, g1)


def test_criterion_08_functoriality():
    with criterion("08", "F(c2 o c1) = F(c2) + F(c1) on both paths, F(identity) = 0", 180):
        sc = scenario.load("sphere_pair")
        c1 = category.ACell(sc.family("designed"), name="designed")
        c2 = category.identity_A(c1.target)
        comp = category.compose_A(c2, c1, 0)
        fp, fs = category.Functor(sc.tol, "provenance"), category.Functor(sc.tol, "scan")
        glued = category.compose_B(fp(c2), fp(c1), 0)
        assert fp(comp) == glued
        assert fs(comp) == glued
        assert fs(comp) == category.compose_B(fs(c2), fs(c1), 0)
        for cell in (c1.source, c1):
            ident = category.identity_A(cell)
            assert fp(ident).phi.is_zero() and fs(ident).phi.is_zero()


def test_criterion_09_determinism(tmp_path):
    with criterion("09", "verify all twice gives byte-identical artifacts"):
        for name in scenario.stock_names():
            dirs = []
            for k in range(2):
                d = tmp_path / name / f"run{k}"
                code = cli.run(["verify", "all", "--scenario", name, "--seed", "3", "--out", str(d / "verify.json"),
                                "--dump-trajectories", str(d / "traj")])
                assert code == 0, f"{name} verify all exited {code}"
                dirs.append(d)
            cmp = filecmp.dircmp(dirs[0], dirs[1])
            assert not (cmp.left_only or cmp.right_only or cmp.diff_files), name
            files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
            assert files
            for rel in files:
                assert (dirs[0] / rel).read_bytes() == (dirs[1] / rel).read_bytes(), (name, str(rel))


def test_criterion_10_tighter_tolerances():
    with criterion("10", "criteria 1-5 pass with --tol-scale 0.5"):
        square_zero(0.5)
        homology(0.5)
        continuation(0.5)
        induced_equal(*designed_family(0.5))
