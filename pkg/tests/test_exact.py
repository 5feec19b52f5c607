"""Exact rational linear algebra, checked against sympy as an independent oracle."""

from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from equivhp.exact import ExactnessError, QMat, Quotient, frac, frac_str, inverse, kron, matrix_rank, nullspace, trace

small = st.integers(-4, 4)
rationals = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


def matrices(rows=st.integers(1, 5), cols=st.integers(1, 5), entries=rationals):
    return st.tuples(rows, cols).flatmap(
        lambda s: st.lists(st.lists(entries, min_size=s[1], max_size=s[1]), min_size=s[0], max_size=s[0])
    )


def as_sympy(m):
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in m.to_fractions().tolist()])


def test_frac_parsing():
    assert frac("3/4") == Fraction(3, 4)
    assert frac(2.0) == 2
    assert frac_str(Fraction(6, 3)) == "2"
    with pytest.raises(ValueError):
        frac(0.5)
    with pytest.raises(TypeError):
        frac(None)


@given(matrices())
def test_dense_round_trip(rows):
    m = QMat.from_dense(rows)
    assert m.to_fractions().tolist() == rows


@given(matrices(rows=st.just(3), cols=st.just(4)), matrices(rows=st.just(4), cols=st.just(2)))
def test_product_agrees_with_sympy(a, b):
    A, B = QMat.from_dense(a), QMat.from_dense(b)
    assert as_sympy(A @ B) == as_sympy(A) * as_sympy(B)


@given(matrices(rows=st.just(3), cols=st.just(3)), matrices(rows=st.just(3), cols=st.just(3)))
def test_sum_and_difference(a, b):
    A, B = QMat.from_dense(a), QMat.from_dense(b)
    assert (A + B) - B == A
    assert as_sympy(A - B) == as_sympy(A) - as_sympy(B)


@given(matrices(entries=small))
def test_rank_and_nullspace(rows):
    m = QMat.from_dense(rows)
    S = as_sympy(m)
    assert matrix_rank(m) == S.rank()
    K = nullspace(m)
    assert K.shape[1] == m.shape[1] - S.rank()
    assert (m @ K).is_zero()


@given(matrices(rows=st.just(3), cols=st.just(3), entries=small))
def test_inverse(rows):
    m = QMat.from_dense(rows)
    if as_sympy(m).det() == 0:
        with pytest.raises(ValueError):
            inverse(m)
    else:
        assert m @ inverse(m) == QMat.identity(3)


@given(matrices(rows=st.just(2), cols=st.just(2)), matrices(rows=st.just(2), cols=st.just(3)))
def test_kron_mixed_product(a, b):
    A, B = QMat.from_dense(a), QMat.from_dense(b)
    I2, I3 = QMat.identity(2), QMat.identity(3)
    assert kron(A, B) == kron(A, I2) @ kron(QMat.identity(2), B)
    assert kron(I2, I3) == QMat.identity(6)


def test_trace_and_equality_across_denominators():
    m = QMat.from_dense([["1/2", 0], [0, "1/3"]])
    assert trace(m) == Fraction(5, 6)
    assert m.scale(6) == QMat.from_dense([[3, 0], [0, 2]])


@given(st.lists(st.dictionaries(st.integers(0, 5), small, max_size=3), max_size=6))
def test_quotient_dimension(gens):
    q = Quotient(6, gens)
    rows = [[g.get(i, 0) for i in range(6)] for g in gens] or [[0] * 6]
    assert q.dim == 6 - sympy.Matrix(rows).rank()
    P = q.projection()
    for g in gens:
        v = QMat.from_columns(6, [g])
        assert (P @ v).is_zero()
    assert P @ q.lift() == QMat.identity(q.dim)


def test_overflow_is_detected_not_wrapped():
    big = QMat.from_dense([[2 ** 40]])
    try:
        prod = big @ big @ big
    except ExactnessError:
        return
    assert prod.entry(0, 0) == 2 ** 120
