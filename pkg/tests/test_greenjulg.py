import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivhp import QMat, corpus
from equivhp.galgebras import ayd_algebra, kg_algebra, trivial_algebra, trivial_ayd
from equivhp.gmodules import is_equivariant, regular_module, trivial_module
from equivhp.greenjulg import (
    GammaMap,
    UnknownOrbit,
    discrete_decomposition,
    gamma_map,
    green_julg_verify,
    kappa_average,
    kappa_report,
    local_to_global,
    localisation_exactness,
    localise,
    orbit_indicator,
    random_short_exact_sequence,
    restrict_to_isotropy,
)
from equivhp.groupoid import orbits
from oracles import EXPECTED


def test_localisation_dimensions():
    G = corpus.groupoid("z2z3")
    assert localise(trivial_module(G), "x").dim == 1
    assert localise(regular_module(G), "x").dim == 2
    assert localise(regular_module(G), "y").dim == 3
    with pytest.raises(UnknownOrbit):
        localise(trivial_module(G), "nowhere")


@settings(max_examples=15)
@given(st.sampled_from(corpus.CORPUS), st.integers(0, 10 ** 6))
def test_localised_sequences_stay_exact(gname, seed):
    G = corpus.groupoid(gname)
    Mp, M, Mpp, f, g = random_short_exact_sequence(G, seed)
    report = localisation_exactness(Mp, M, Mpp, f, g)
    assert report["passed"]
    for o in orbits(G):
        assert localise(M, o.rep).dim == localise(Mp, o.rep).dim + localise(Mpp, o.rep).dim


def test_identity_and_killed_orbits(G):
    M = regular_module(G)
    I = QMat.identity(M.total_dim)
    verdict = local_to_global(I, M, M)
    assert verdict["isomorphism"] and verdict["agree"] and not verdict["failed_orbits"]
    for o in orbits(G):
        killed = local_to_global(I - orbit_indicator(G, M, o.rep), M, M)
        assert killed["failed_orbits"] == [o.rep] and killed["agree"]


def test_random_block_isomorphism(G):
    _, M, _, _, _ = random_short_exact_sequence(G, 11)
    import random

    from equivhp.gmodules import random_invertible
    from equivhp.exact import block_diag

    rng = random.Random(5)
    phi = block_diag([random_invertible(M.fiber_dim(x), rng) for x in G.units])
    verdict = local_to_global(phi, M, M)
    assert verdict["isomorphism"] and verdict["agree"] and verdict["orbit_linear"]


def test_kappa_on_trivial_group_is_multiplication():
    G = corpus.groupoid("trivial")
    F = QMat.from_dense([[3]])
    assert kappa_average(G, F) == F


def test_kappa_on_z2_sums_translates():
    G = corpus.groupoid("z2")
    AG = ayd_algebra(G)
    # basis: (loop e: delta_e, delta_g), (loop g: delta_e, delta_g)
    F = QMat.from_dense([[1], [2], [5], [7]])
    expected = QMat.from_dense([[3, 0], [3, 0], [0, 12], [0, 12]])
    assert kappa_average(G, F) == expected
    assert is_equivariant(trivial_ayd(G), AG, expected)


def test_kappa_report_on_pair2():
    G = corpus.groupoid("pair2")
    F = QMat.from_dense([[1], [-2], [3], [4]])
    assert kappa_report(G, F)["passed"]


def test_gamma_degree_zero_on_loops():
    G = corpus.groupoid("pair2")
    g = GammaMap(trivial_algebra(G))
    # crossed-product basis is (1,2), (2,1), 1, 2; only the loops survive
    assert g.raw(0) == QMat.from_dense([[0, 0, 1, 0], [0, 0, 0, 1]])


def test_gamma_is_reindexing_for_trivial_group():
    G = corpus.groupoid("trivial")
    g = GammaMap(trivial_algebra(G))
    for n in range(3):
        assert g.raw(n) == QMat.identity(g.raw(n).shape[0])
        assert gamma_map(trivial_algebra(G), n) == g.raw(n)


def test_raw_gamma_fails_and_averaged_gamma_passes_on_z2():
    ids = GammaMap(kg_algebra(corpus.groupoid("z2"))).identities(2)
    assert not all(ids["raw"].values())
    assert all(ids["averaged"].values()) and ids["invariant_image"]


def test_averaged_gamma_identities(G):
    ids = GammaMap(kg_algebra(G)).identities(2)
    assert all(ids["averaged"].values()) and ids["invariant_image"]


def test_restriction_to_isotropy():
    G = corpus.groupoid("z2z3")
    assert len(restrict_to_isotropy(kg_algebra(G), "y").groupoid.arrows) == 3


@pytest.mark.parametrize("aname", ["trivial", "K_G"])
def test_discrete_decomposition(corpus_name, G, aname):
    A = corpus.algebra(aname, G)
    report = discrete_decomposition(A, A)
    assert report["equal"]
    if aname == "trivial":
        assert report["global"] == [EXPECTED[corpus_name]["adjoint"], 0]


def test_decomposition_of_disjoint_union_adds():
    report = discrete_decomposition(*(2 * [trivial_algebra(corpus.groupoid("z2z3"))]))
    assert sorted(r[0] for r in report["orbits"].values()) == [2, 3] and report["sum"] == [5, 0]


def test_green_julg_trivial(corpus_name, G):
    report = green_julg_verify(trivial_algebra(G))
    assert report["passed"]
    assert tuple(report["lhs"]) == tuple(report["rhs"]) == EXPECTED[corpus_name]["greenjulg"]


def test_green_julg_at_a_level():
    report = green_julg_verify(trivial_algebra(corpus.groupoid("z2")), level=2)
    assert report["passed"] and report["lhs"] == [2, 0]
