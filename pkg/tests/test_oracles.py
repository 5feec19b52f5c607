"""The brute-force oracles agree with the frozen expectations and with the package."""

from equivhp import corpus
from equivhp.groupoid import adjoint_orbits, loop_space
from oracles import EXPECTED, adjoint_class_count, loop_count


def test_frozen_values_match_oracle(corpus_name):
    raw = corpus.GROUPOIDS[corpus_name]
    assert loop_count(raw) == EXPECTED[corpus_name]["loops"]
    assert adjoint_class_count(raw) == EXPECTED[corpus_name]["adjoint"]


def test_package_matches_oracle(corpus_name, G):
    raw = corpus.GROUPOIDS[corpus_name]
    assert len(loop_space(G)[0]) == loop_count(raw)
    assert len(adjoint_orbits(G)) == adjoint_class_count(raw)
