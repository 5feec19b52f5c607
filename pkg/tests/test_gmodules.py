import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from equivhp import QMat, corpus, validate_groupoid
from equivhp.gmodules import (
    GModule,
    comodule_to_module,
    direct_sum,
    equivariant_homs,
    is_equivariant,
    module_to_comodule,
    random_module,
    regular_module,
    regular_translation_matrix,
    tensor_diagonal,
    trivial_module,
)


def test_trivial_comodule_is_identity(G):
    C = module_to_comodule(trivial_module(G))
    assert C.matrix == QMat.identity(len(G.arrows))


def test_regular_comodule_on_z2_is_order_two_permutation():
    Z = corpus.groupoid("z2")
    T = module_to_comodule(regular_module(Z)).matrix
    assert T.shape == (4, 4)
    assert T != QMat.identity(4) and T @ T == QMat.identity(4)


def test_regular_comodule_is_translation(G):
    assert module_to_comodule(regular_module(G)).matrix == regular_translation_matrix(G)


@given(st.sampled_from(corpus.CORPUS), st.integers(0, 10 ** 6))
def test_round_trips(name, seed):
    G = corpus.groupoid(name)
    M = random_module(G, seed)
    C = module_to_comodule(M)
    assert C.coaction_holds()
    back = comodule_to_module(C)
    assert all(back.rho[a] == M.rho[a] for a in G.arrows)
    assert module_to_comodule(back).matrix == C.matrix


def test_broken_comodule_rejected():
    Z = corpus.groupoid("z2")
    C = module_to_comodule(regular_module(Z))
    C.matrix = C.matrix.scale(2)
    with pytest.raises(ValueError):
        comodule_to_module(C)


def test_tensor_dimensions_multiply():
    P = corpus.groupoid("pair2")
    M = direct_sum(trivial_module(P), GModule(P, {"1": [], "2": ["v"]}, {a: QMat.zeros(int(P.tgt(a) == "2"), int(P.src(a) == "2")) for a in P.arrows}))
    assert [M.fiber_dim(x) for x in P.units] == [1, 2]


def test_tensor_unit_and_associativity(G):
    M, R, U = random_module(G, 3), regular_module(G), trivial_module(G)
    MU = tensor_diagonal(M, U)
    assert all(MU.rho[a] == M.rho[a] for a in G.arrows)
    left = tensor_diagonal(tensor_diagonal(M, R), M)
    right = tensor_diagonal(M, tensor_diagonal(R, M))
    assert all(left.rho[a] == right.rho[a] for a in G.arrows)


def test_equivariant_hom_dimensions():
    P, Z = corpus.groupoid("pair2"), corpus.groupoid("z2")
    assert len(equivariant_homs(trivial_module(P), trivial_module(P))) == 1
    assert len(equivariant_homs(regular_module(Z), regular_module(Z))) == 2


def test_disjoint_supports_have_no_homs():
    G = corpus.groupoid("z2z3")
    on_x = GModule(G, {"x": ["u"], "y": []}, {a: QMat.identity(1) if G.src(a) == "x" else QMat.zeros(0, 0) for a in G.arrows})
    on_y = GModule(G, {"x": [], "y": ["v"]}, {a: QMat.identity(1) if G.src(a) == "y" else QMat.zeros(0, 0) for a in G.arrows})
    assert equivariant_homs(on_x, on_y) == []


@given(st.sampled_from(corpus.CORPUS), st.integers(0, 10 ** 6))
def test_hom_basis_is_equivariant_and_independent(name, seed):
    G = corpus.groupoid(name)
    M, N = random_module(G, seed), random_module(G, seed + 1)
    basis = equivariant_homs(M, N)
    assert all(is_equivariant(M, N, phi) for phi in basis)
    from equivhp.exact import rank
    vecs = [{k: v for k, v in enumerate(phi.to_fractions().flatten().tolist()) if v} for phi in basis]
    assert rank(vecs) == len(basis)


def test_invalid_module_rejected():
    Z = corpus.groupoid("z2")
    with pytest.raises(ValueError):
        GModule(Z, {"e": ["v"]}, {"e": QMat.identity(1), "g": QMat.from_dense([[2]])}).validate()
