from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivhp import QMat, corpus
from equivhp.exact import kron
from equivhp.galgebras import Pairing, kg_algebra, regular_pairing, smoothing_algebra, standard_pairing, trivial_algebra
from equivhp.gmodules import GModule, equivariant_homs, is_equivariant, random_module, regular_module, trivial_module
from equivhp.groupoid import loop_space
from equivhp.stability import (
    InadmissiblePairing,
    blocks_to_total,
    embedding_vector,
    equivariant_average,
    random_grade_map,
    stability_check,
    trace_chain_map,
    twisted_trace,
)
from oracles import EXPECTED


def test_untwisted_trace_on_q2():
    pt = corpus.groupoid("trivial")
    E = GModule(pt, {"pt": ["e1", "e2"]}, {"pt": QMat.identity(2)})
    ttr = twisted_trace(standard_pairing(E))
    # e_i (x) e_j is a rank-one operator with trace h(e_j, e_i)
    assert ttr("pt") == QMat.from_dense([[1, 0, 0, 1]])


def test_regular_pairing_trace_on_z2_is_twisted():
    G = corpus.groupoid("z2")
    ttr = twisted_trace(regular_pairing(G))
    assert ttr("e") == QMat.from_dense([[1, 0, 0, 1]])
    assert ttr("g") == QMat.from_dense([[0, 1, 1, 0]])


def test_twisted_trace_identity(G):
    ttr = twisted_trace(regular_pairing(G))
    assert all(ttr.identity_holds(b) for b in loop_space(G)[0])


@settings(max_examples=15)
@given(st.sampled_from(corpus.CORPUS), st.data())
def test_twisted_trace_on_random_operators(gname, data):
    G = corpus.groupoid(gname)
    ttr = twisted_trace(regular_pairing(G))
    K = ttr.algebra
    b = data.draw(st.sampled_from(loop_space(G)[0]))
    x = G.src(b)
    D = K.dim(x)
    entries = st.lists(st.integers(-3, 3), min_size=D, max_size=D)
    L0 = QMat.from_dense([[v] for v in data.draw(entries)])
    L1 = QMat.from_dense([[v] for v in data.draw(entries)])
    moved = K.rho(G.inv(b)) @ L1
    assert ttr(b) @ K.product(x, L0, L1) == ttr(b) @ K.product(x, moved, L0)


def test_trace_chain_map_identities(G):
    data = trace_chain_map(trivial_algebra(G))
    assert all(data["checks"].values()), data["checks"]


@pytest.mark.parametrize("aname", ["trivial"])
def test_stability_ranks(corpus_name, G, aname):
    report = stability_check(corpus.algebra(aname, G))
    assert report["passed"], report
    if aname == "trivial":
        assert report["ranks"]["A,A"] == [EXPECTED[corpus_name]["adjoint"], 0]


def test_trivial_module_smoothing_is_function_algebra(G):
    E = trivial_module(G)
    K = smoothing_algebra(E, standard_pairing(E))
    assert all(K.dim(x) == 1 and K.mul[x] == QMat.identity(1) for x in G.units)
    assert stability_check(trivial_algebra(G), h=standard_pairing(E))["passed"]


def test_non_equivariant_pairing_rejected():
    G = corpus.groupoid("z2")
    M = regular_module(G)
    bad = Pairing(M, {"e": QMat.from_dense([[1, 0], [0, 2]])})
    with pytest.raises(InadmissiblePairing):
        stability_check(trivial_algebra(G), h=bad)


def test_embedding_vector_is_invariant_and_anisotropic(G):
    h = regular_pairing(G)
    u = embedding_vector(h.module, h)
    for a in G.arrows:
        assert h.module.rho[a] @ u[G.src(a)] == u[G.tgt(a)]
    assert all(h(x, u[x], u[x]) != 0 for x in G.units)


def test_average_fixes_equivariant_maps(G):
    M, N = regular_module(G), random_module(G, 7)
    for phi in equivariant_homs(M, N):
        blocks = {x: phi[N.offsets[x]:N.offsets[x] + N.fiber_dim(x), M.offsets[x]:M.offsets[x] + M.fiber_dim(x)] for x in G.units}
        assert blocks_to_total(M, N, equivariant_average(M, N, blocks)) == phi


@settings(max_examples=20)
@given(st.sampled_from(corpus.CORPUS), st.integers(0, 10 ** 6))
def test_average_is_equivariant(gname, seed):
    G = corpus.groupoid(gname)
    M, N = random_module(G, seed), random_module(G, seed + 1)
    phi = random_grade_map(M, N, seed)
    assert is_equivariant(M, N, blocks_to_total(M, N, equivariant_average(M, N, phi)))


@settings(max_examples=10)
@given(st.sampled_from(corpus.CORPUS), st.integers(0, 10 ** 6))
def test_average_is_right_linear_over_equivariant_maps(gname, seed):
    G = corpus.groupoid(gname)
    L, M, N = random_module(G, seed), random_module(G, seed + 1), random_module(G, seed + 2)
    psis = equivariant_homs(L, M)
    if not psis:
        return
    psi = psis[0]
    phi = random_grade_map(M, N, seed)
    psi_blocks = {x: psi[M.offsets[x]:M.offsets[x] + M.fiber_dim(x), L.offsets[x]:L.offsets[x] + L.fiber_dim(x)] for x in G.units}
    composite = {x: phi[x] @ psi_blocks[x] for x in G.units}
    lhs = equivariant_average(L, N, composite)
    avg = equivariant_average(M, N, phi)
    assert all(lhs[x] == avg[x] @ psi_blocks[x] for x in G.units)


def test_projection_average_on_z2():
    G = corpus.groupoid("z2")
    M = regular_module(G)
    proj = {"e": QMat.from_dense([[1, 0], [0, 0]])}
    avg = equivariant_average(M, M, proj)["e"]
    half = Fraction(1, 2)
    assert avg == QMat.from_dense([[half, 0], [0, half]])
