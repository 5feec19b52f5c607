import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivhp import QMat, corpus
from equivhp.exact import kron
from equivhp.forms import FiberForms
from equivhp.galgebras import dual_numbers, fiber_algebra, isotropy_algebra, matrix_units, trivial_algebra, upper_triangular
from equivhp.tensoralg import (
    FiberMap,
    InsufficientLevel,
    curvature,
    curvature_nilpotency,
    fedosov_is_associative,
    fedosov_mul,
    identity_map,
    lonilcur_extend,
    quasifree_certificate,
    splitting_homomorphism,
    trivial_algebra_phi,
    truncated_tensor_algebra,
)
from oracles import connection_system_consistent

DUAL_TABLE = [[[1, 0], [0, 1]], [[0, 1], [0, 0]]]


def test_level_one_is_the_algebra(G):
    A = corpus.algebra("K_G", G)
    TA = truncated_tensor_algebra(A, 1)
    assert TA.algebra.mul == A.mul
    assert all(TA.tau()[x] == QMat.identity(A.dim(x)) for x in G.units)


def test_level_two_carrier_dimension():
    G = corpus.groupoid("z2")
    TA = truncated_tensor_algebra(trivial_algebra(G), 2)
    assert TA.dim("e") == 1 + 2 * 1 * 1


def test_trivial_fedosov_product_formula():
    """chi o chi = chi - d chi d chi at level 2 for the trivial algebra."""
    G = corpus.groupoid("z2")
    TA = truncated_tensor_algebra(trivial_algebra(G), 2)
    one = QMat.from_columns(3, [{0: 1}])
    # Omega^2 basis: <1> df df at index 1, <f> df df at index 2
    assert fedosov_mul(TA, "e", one, one) == QMat.from_columns(3, [{0: 1, 1: -1}])


@settings(max_examples=10)
@given(st.sampled_from(corpus.CORPUS), st.sampled_from(("trivial", "dual", "T2", "O_G")), st.integers(1, 3))
def test_fedosov_is_associative(gname, aname, level):
    A = corpus.algebra(aname, corpus.groupoid(gname))
    TA = truncated_tensor_algebra(A, level)
    assert fedosov_is_associative(TA)
    assert TA.algebra.equivariance_holds()


def test_top_degree_products_are_plain(G):
    A = corpus.algebra("T2", G)
    TA = truncated_tensor_algebra(A, 2)
    x = G.units[0]
    top = TA.component(x, 1)
    FF = FiberForms(A.mul[x], A.dim(x))
    for j in top:
        for i in TA.component(x, 0):
            u = QMat.from_columns(TA.dim(x), [{i: 1}])
            v = QMat.from_columns(TA.dim(x), [{j: 1}])
            w = fedosov_mul(TA, x, u, v)
            plain = FF.product(0, 2) @ kron(QMat.from_columns(A.dim(x), [{i: 1}]), QMat.from_columns(FF.dim(2), [{j - top.start: 1}]))
            assert w.select_rows(list(top)) == plain


def test_tau_sigma_section(G):
    A = corpus.algebra("T2", G)
    TA = truncated_tensor_algebra(A, 3)
    tau, sigma = TA.tau(), TA.sigma()
    assert all(w is None for w in [tau.multiplicativity_witness()])
    assert all((tau.compose(sigma))[x] == QMat.identity(A.dim(x)) for x in G.units)
    assert TA.generated_by_sigma()


def test_curvature_of_homomorphism_vanishes(G):
    A = corpus.algebra("K_G", G)
    assert all(w.is_zero() for w in curvature(identity_map(A)).values())


def test_curvature_of_doubled_map():
    G = corpus.groupoid("z2")
    A = trivial_algebra(G)
    omega = curvature(identity_map(A).scale(2))
    # l(ab) - l(a) l(b) = 2 - 4 = -2 on the unit
    assert omega["e"] == QMat.from_dense([[-2]])


def test_sigma_curvature_is_nilpotent_at_the_level(G):
    A = corpus.algebra("dual", G)
    for n in (2, 3):
        TA = truncated_tensor_algebra(A, n)
        orders = curvature_nilpotency(TA.sigma())
        assert all(k is not None and k <= n for k in orders.values())


def test_lonilcur_extension_of_sigma_is_identity(G):
    A = corpus.algebra("T2", G)
    TA = truncated_tensor_algebra(A, 3)
    ext = lonilcur_extend(TA.sigma(), 3)
    assert all(ext[x] == QMat.identity(TA.dim(x)) for x in G.units)


def test_lonilcur_extension_of_homomorphism_factors_through_tau(G):
    A = corpus.algebra("T2", G)
    ext = lonilcur_extend(identity_map(A), 3)
    tau = truncated_tensor_algebra(A, 3).tau()
    assert all(ext[x] == tau[x] for x in G.units)


def test_insufficient_level_reported():
    G = corpus.groupoid("trivial")
    A = trivial_algebra(G)
    with pytest.raises(InsufficientLevel):
        lonilcur_extend(identity_map(A).scale(2), 2)


def test_trivial_algebra_certificate_and_explicit_phi(G):
    A = trivial_algebra(G)
    cert = quasifree_certificate(A)
    assert cert.feasible and cert.verify() and cert.is_equivariant()
    given_phi = trivial_algebra_phi(A)
    assert given_phi.verify()
    assert all(given_phi.connection_identities_hold(x) for x in G.units)


def test_group_algebra_certificate(G):
    D = isotropy_algebra(G)
    cert = quasifree_certificate(D)
    assert cert.feasible and cert.verify() and cert.is_equivariant()


@pytest.mark.parametrize("method", ["separable", "solve"])
def test_kg_certificate_by_both_methods(G, method):
    cert = quasifree_certificate(corpus.algebra("K_G", G), method=method)
    assert cert.feasible and cert.verify() and cert.is_equivariant()
    assert all(cert.connection_identities_hold(x) for x in G.units)


def test_dual_numbers_are_infeasible():
    A = dual_numbers(corpus.groupoid("trivial"))
    cert = quasifree_certificate(A)
    assert not cert.feasible
    info = cert.detail["pt"]
    assert info["augmented_rank"] == info["rank"] + 1
    assert not connection_system_consistent(DUAL_TABLE)


@pytest.mark.parametrize(
    "table",
    [[[[1]]], DUAL_TABLE, matrix_units(2), [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]],
    ids=["Q", "dual", "M2", "QxQ"],
)
def test_solver_agrees_with_sympy_oracle(table):
    A = fiber_algebra(corpus.groupoid("trivial"), table, name="t")
    assert quasifree_certificate(A, method="solve").feasible == connection_system_consistent(table)


def test_splitting_homomorphism(G):
    cert = quasifree_certificate(corpus.algebra("trivial", G))
    split, TA = splitting_homomorphism(cert)
    assert split.multiplicativity_witness() is None
    assert all(TA.tau().compose(split)[x] == QMat.identity(1) for x in G.units)


def test_certificate_serialises():
    cert = quasifree_certificate(trivial_algebra(corpus.groupoid("z2")))
    data = json.loads(json.dumps(cert.to_json()))
    assert data["feasible"] and set(data["phi"]) == {"e"}
