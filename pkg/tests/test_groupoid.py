from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from equivhp import GroupoidError, corpus, validate_groupoid
from equivhp.groupoid import (
    adjoint_orbits,
    bisection,
    bisection_inverse,
    bisection_product,
    centralizer,
    conjugator,
    cutoff,
    cutoff_identity_holds,
    is_bisection,
    loop_space,
    orbits,
    quotient_groupoid,
    restrict,
    units_bisection,
)
from oracles import cutoff_sums, isotropy_orders, unit_orbits


def test_z2_and_pair2_validate():
    assert len(corpus.groupoid("z2").arrows) == 2
    assert len(corpus.groupoid("pair2").arrows) == 4


def test_non_composable_product_rejected():
    raw = {
        "units": ["x", "y"],
        "arrows": [{"id": "g", "src": "x", "tgt": "y"}, {"id": "h", "src": "y", "tgt": "x"}],
        "mul": [["g", "g", "g"]],
    }
    with pytest.raises(GroupoidError, match="non-composable"):
        validate_groupoid(raw)


@pytest.mark.parametrize(
    "raw",
    [
        None,
        {"units": ["e", "e"], "arrows": [], "mul": []},
        {"units": ["e"], "arrows": [{"id": "g", "src": "e", "tgt": "e"}], "mul": []},
        {"units": ["e"], "arrows": [{"id": "g", "src": "e", "tgt": "e"}], "mul": [["g", "g", "g"]]},
        {"units": ["e"], "arrows": [{"id": "g", "src": "e", "tgt": "q"}], "mul": [["g", "g", "e"]]},
    ],
)
def test_invalid_descriptions(raw):
    with pytest.raises(GroupoidError):
        validate_groupoid(raw)


def test_json_round_trip(G):
    assert validate_groupoid(G.to_json()) == G


def test_bisection_products():
    P = corpus.groupoid("pair2")
    assert bisection_product(P, {"(1,2)"}, {"(2,1)"}) == {"1"}
    Z = corpus.groupoid("z2")
    assert bisection_product(Z, {"g"}, {"g"}) == {"e"}
    assert not is_bisection(P, {"1", "(2,1)"})
    with pytest.raises(GroupoidError):
        bisection(P, {"1", "(2,1)"})


def test_units_bisection_is_neutral(G):
    for a in G.arrows:
        V = bisection(G, {a})
        assert bisection_product(G, units_bisection(G), V) == V
        assert bisection_product(G, V, bisection_inverse(G, V)) == {G.tgt(a)}


def test_loops_and_adjoint_action():
    P = corpus.groupoid("pair2")
    loops, action = loop_space(P)
    assert set(loops) == {"1", "2"}
    assert action[("(2,1)", "1")] == "2"
    Z = corpus.groupoid("z2")
    assert all(c == b for (a, b), c in loop_space(Z)[1].items())
    assert len(loop_space(corpus.groupoid("z2z3"))[0]) == 5


def test_orbits_match_oracle(corpus_name, G):
    raw = corpus.GROUPOIDS[corpus_name]
    assert {frozenset(o.units) for o in orbits(G)} == unit_orbits(raw)
    orders = isotropy_orders(raw)
    for o in orbits(G):
        assert len(o.isotropy) == orders[o.rep]


def test_isotropy_orders():
    assert sorted(len(o.isotropy) for o in orbits(corpus.groupoid("z2z3"))) == [2, 3]
    assert [len(o.isotropy) for o in orbits(corpus.groupoid("flip"))] == [1]


def test_cutoff_values():
    assert cutoff(corpus.groupoid("z2"))("e") == Fraction(1, 2)
    c = cutoff(corpus.groupoid("pair2"))
    assert (c("1"), c("2")) == (1, 0)


def test_cutoff_identity_against_oracle(corpus_name, G):
    c = cutoff(G)
    assert cutoff_identity_holds(G, c)
    sums = cutoff_sums(corpus.GROUPOIDS[corpus_name], {x: c(x) for x in G.units})
    assert set(sums.values()) == {1}


def test_cutoff_is_local_on_disjoint_union():
    c = cutoff(corpus.groupoid("z2z3"))
    assert (c("x"), c("y")) == (Fraction(1, 2), Fraction(1, 3))


def test_conjugator_and_centralizer(G):
    for orbit in adjoint_orbits(G):
        for b in orbit:
            for t in orbit:
                a = conjugator(G, b, t)
                assert G.conj(a, b) == t
            assert b in centralizer(G, b) or G.is_unit(b)


def test_quotient_and_restriction():
    Q = quotient_groupoid(corpus.groupoid("z2z3"))
    assert sorted(Q.units) == ["x", "y"] and not [a for a in Q.arrows if not Q.is_unit(a)]
    R = restrict(corpus.groupoid("z2z3"), ["y"])
    assert len(R.arrows) == 3


@given(st.data())
def test_associativity_of_composition(data):
    G = corpus.groupoid(data.draw(st.sampled_from(corpus.CORPUS)))
    a = data.draw(st.sampled_from(G.arrows))
    b = data.draw(st.sampled_from([c for c in G.arrows if G.tgt(c) == G.src(a)]))
    c = data.draw(st.sampled_from([d for d in G.arrows if G.tgt(d) == G.src(b)]))
    assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))
    assert G.mul(a, G.inv(a)) == G.tgt(a)
