from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from equivhp import QMat, corpus
from equivhp.exact import block_diag, kron
from equivhp.galgebras import (
    CovarianceError,
    CrossedProduct,
    Pairing,
    adjoint_space,
    ayd_algebra,
    ayd_canonical_T,
    ayd_from_module,
    function_algebra,
    integrate_covariant,
    isotropy_algebra,
    kg_algebra,
    matrix_units,
    og_algebra,
    regular_covariant_pair,
    representation_is_multiplicative,
    smoothing_algebra,
    standard_pairing,
    structure_from_table,
    tensor_product,
    trivial_algebra,
    trivial_ayd,
    unit_space,
    unitarise,
    zero_algebra,
)
from equivhp.gmodules import GModule, regular_module
from equivhp.groupoid import loop_space

ALGEBRAS = ("trivial", "K_G", "O_G", "dual", "T2", "zero")


@pytest.mark.parametrize("name", ALGEBRAS)
def test_corpus_algebras_are_valid(G, name):
    A = corpus.algebra(name, G).validate()
    assert A.associativity_holds() and A.equivariance_holds()


def test_function_algebras_from_spaces(G):
    T = function_algebra(G, unit_space(G))
    assert all(T.dim(x) == 1 for x in G.units)
    O = og_algebra(G)
    loops = loop_space(G)[0]
    assert sum(O.dim(x) for x in G.units) == len(loops)
    assert function_algebra(G, adjoint_space(G)).mul == O.mul


def test_product_space_dimension(G):
    T = tensor_product(og_algebra(G), og_algebra(G))
    loops = loop_space(G)[0]
    pairs = [(b, c) for b in loops for c in loops if G.src(b) == G.src(c)]
    assert sum(T.dim(x) for x in G.units) == len(pairs)
    assert T.associativity_holds() and T.equivariance_holds()


def test_unitisation():
    Z = corpus.groupoid("z2")
    plus = unitarise(zero_algebra(Z))
    assert plus.dim("e") == 1 and plus.mul["e"] == QMat.identity(1)
    Kp = unitarise(kg_algebra(Z)).validate()
    assert Kp.unit_vector("e") == QMat.from_columns(5, [{0: 1}])


def test_smoothing_algebra_of_q2_is_matrices():
    pt = corpus.groupoid("trivial")
    E = GModule(pt, {"pt": ["e1", "e2"]}, {"pt": QMat.identity(2)})
    K = smoothing_algebra(E, standard_pairing(E))
    assert K.mul["pt"] == structure_from_table(matrix_units(2), 4)


def test_kg_on_z2_is_matrices():
    K = kg_algebra(corpus.groupoid("z2"))
    assert K.dim("e") == 4
    assert K.mul["e"] == structure_from_table(matrix_units(2), 4)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_smoothing_idempotent_law(i, j, k, l):
    """(e (x) f)(e' (x) f') = h(f, e') e (x) f' on basis elements of K_G over Z/3."""
    G = corpus.groupoid("z3")
    K = kg_algebra(G)
    n = 3
    i, j, k, l = (v % n for v in (i, j, k, l))
    u = QMat.from_columns(9, [{i * n + j: 1}])
    v = QMat.from_columns(9, [{k * n + l: 1}])
    expected = QMat.from_columns(9, [{i * n + l: int(j == k)}])
    assert K.product("e", u, v) == expected


def test_crossed_product_of_trivial_on_pair2_is_matrices():
    P = corpus.groupoid("pair2")
    cp = CrossedProduct(trivial_algebra(P))
    assert cp.dim == 4 and cp.associativity_holds()
    name = {("1", 1, 1), ("(1,2)", 1, 2), ("(2,1)", 2, 1), ("2", 2, 2)}
    where = {a: (i, j) for a, i, j in name}
    for p in cp.basis:
        for q in cp.basis:
            (i, j), (k, l) = where[p[0]], where[q[0]]
            prod = cp.multiply_basis(p, q)
            if j == k:
                target = next(a for a, ij in where.items() if ij == (i, l))
                assert prod == {cp.index[(target, 0)]: 1}
            else:
                assert prod == {}


def test_crossed_product_of_trivial_on_z2_is_commutative_group_algebra():
    cp = CrossedProduct(trivial_algebra(corpus.groupoid("z2")))
    assert cp.dim == 2
    assert all(cp.multiply_basis(p, q) == cp.multiply_basis(q, p) for p in cp.basis for q in cp.basis)


def test_crossed_product_twisting_formula():
    """(e_i (x) d_a)(e_j (x) d_b) = e_i (a . e_j) (x) d_ab, on O_G over Z/2 x| ... via PAIR2."""
    P = corpus.groupoid("pair2")
    A = og_algebra(P)
    cp = CrossedProduct(A)
    assert cp.associativity_holds()
    assert cp.multiply_basis(("(1,2)", 0), ("(2,1)", 0)) == {cp.index[("1", 0)]: 1}
    assert cp.multiply_basis(("(1,2)", 0), ("(1,2)", 0)) == {}


def test_crossed_product_as_algebra_over_quotient(G):
    A = kg_algebra(G)
    CA = CrossedProduct(A).as_algebra().validate()
    assert sum(CA.dim(x) for x in CA.groupoid.units) == CrossedProduct(A).dim


def test_regular_covariant_pair_integrates():
    G = corpus.groupoid("z2")
    A, phi, pi = regular_covariant_pair(G)
    psi = integrate_covariant(A, phi, pi)
    assert all(m.shape == (2, 2) for m in psi.values())
    assert representation_is_multiplicative(CrossedProduct(A), psi)


def test_zero_covariant_pair():
    G = corpus.groupoid("z2")
    A = trivial_algebra(G)
    phi = {("e", 0): QMat.zeros(0, 0)}
    pi = {a: QMat.zeros(0, 0) for a in G.arrows}
    psi = integrate_covariant(A, phi, pi)
    assert all(m.shape == (0, 0) for m in psi.values())


def test_non_covariant_pair_rejected(G):
    A, phi, pi = regular_covariant_pair(G)
    bad = [a for a in G.arrows if not G.is_unit(a)][0]
    phi = dict(phi)
    x = G.tgt(bad)
    n = phi[(x, 0)].shape[0]
    first = next(i for i in range(n) if phi[(x, 0)].entry(i, i))
    phi[(x, 0)] = QMat.from_entries((n, n), [first], [first], [1])
    with pytest.raises(CovarianceError):
        integrate_covariant(A, phi, pi)


def test_twist_of_trivial_coefficients_is_identity(G):
    N = trivial_ayd(G)
    assert ayd_canonical_T(N) == QMat.identity(N.total_dim)


def test_twist_on_regular_z2():
    G = corpus.groupoid("z2")
    N = ayd_from_module(regular_module(G))
    assert N.twist("e") == QMat.identity(2)
    assert N.twist("g") != QMat.identity(2) and N.twist("g") @ N.twist("g") == QMat.identity(2)


def test_ayd_algebra_twist_is_translation(G):
    N = ayd_algebra(G).validate()
    for b in N.grades:
        fib = N.fibers[b]
        pos = {c: k for k, c in enumerate(fib)}
        expected = QMat.permutation([pos[G.mul(G.inv(b), c)] for c in fib], len(fib))
        assert N.twist(b) == expected


def test_isotropy_algebra_is_group_algebra_with_conjugation():
    G = corpus.groupoid("z3")
    D = isotropy_algebra(G).validate()
    assert D.dim("e") == 3
    assert all(D.rho(a) == QMat.identity(3) for a in G.arrows)


def test_invalid_algebra_rejected():
    G = corpus.groupoid("trivial")
    M = GModule(G, {"pt": ["a", "b"]}, {"pt": QMat.identity(2)})
    table = [[[1, 0], [1, 0]], [[0, 1], [0, 0]]]  # (a*b)*? mixes, not associative
    from equivhp.galgebras import GAlgebra
    with pytest.raises(ValueError):
        GAlgebra(M, {"pt": table}).validate()
