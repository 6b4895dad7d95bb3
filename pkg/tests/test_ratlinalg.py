from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmconn.ratlinalg import (Poly, annihilator, in_rowspace,
                              intersect_rowspaces, kernel, kron_vec,
                              numeric_membership_residual, numeric_rank, rank,
                              rref, solve_right)

F = Fraction


def test_poly_basic_identity():
    x, y = Poly.gen(0), Poly.gen(1)
    lhs = (x + y) * (x + y)
    rhs = x * x + (x * y).scale(2) + y * y
    assert lhs == rhs
    assert (lhs - rhs).is_zero()


def test_poly_partial_and_eval():
    x, y = Poly.gen(0), Poly.gen(1)
    p = x ** 3 * y + y ** 2 - Poly.const(F(7, 2))
    assert p.partial(0) == (x ** 2 * y).scale(3)
    assert p.partial(1) == x ** 3 + y.scale(2)
    v = p.eval([mp.mpf(2), mp.mpf(3)])
    assert v == mp.mpf(24) + 9 - mp.mpf(7) / 2


def test_poly_growing_generator_list():
    # monomial keys are (index, exponent) pairs, so polynomials survive
    # later adjoins untouched
    p = Poly.gen(1) ** 2
    assert p.eval([mp.mpf(100), mp.mpf(5), mp.mpf(-1)]) == 25


def test_rref_and_rank():
    rows = [[F(1), F(2), F(3)], [F(2), F(4), F(6)], [F(0), F(1), F(1)]]
    red, pivots = rref(rows)
    assert pivots == [0, 1]
    assert rank(rows) == 2
    assert in_rowspace([F(1), F(3), F(4)], rows)
    assert not in_rowspace([F(0), F(0), F(1)], rows)


def test_solve_right_and_kernel():
    A = [[F(1), F(0), F(1)], [F(0), F(1), F(1)]]
    x = solve_right(A, [F(3), F(5)])
    assert x is not None
    for i, row in enumerate(A):
        assert sum(row[j] * x[j] for j in range(3)) == [F(3), F(5)][i]
    ker = kernel(A)
    assert len(ker) == 1
    for row in A:
        assert sum(row[j] * ker[0][j] for j in range(3)) == 0


def test_annihilator_pairs_to_zero():
    rows = [[F(1), F(2), F(0)], [F(0), F(0), F(1)]]
    ann = annihilator(rows, 3)
    assert len(ann) == 1
    for r in rows:
        assert sum(a * b for a, b in zip(r, ann[0])) == 0


def test_intersect_rowspaces():
    A = [[F(1), F(0), F(0)], [F(0), F(1), F(0)]]
    B = [[F(0), F(1), F(0)], [F(0), F(0), F(1)]]
    C = intersect_rowspaces(A, B)
    assert rank(C) == 1
    assert in_rowspace(C[0], A) and in_rowspace(C[0], B)


def test_kron_vec():
    assert kron_vec([F(1), F(2)], [F(3), F(4)]) == [F(3), F(4), F(6), F(8)]


def test_numeric_membership():
    cols = [[mp.mpf(1), mp.mpf(0)], [mp.mpf(1), mp.mpf(1)]]
    resid, coeff = numeric_membership_residual(cols, [mp.mpf(3), mp.mpf(2)])
    assert resid < mp.mpf("1e-20")
    assert abs(coeff[0] - 1) < mp.mpf("1e-20")
    assert abs(coeff[1] - 2) < mp.mpf("1e-20")


def test_numeric_rank():
    with mp.workdps(80):
        rows = [[mp.mpf(1), mp.mpf(2)],
                [mp.mpf(2), mp.mpf(4) + mp.mpf("1e-40")]]
        assert numeric_rank(rows, mp.mpf("1e-20")) == 1
        assert numeric_rank(rows, mp.mpf("1e-60")) == 2


small_frac = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(small_frac, min_size=4, max_size=4),
                min_size=1, max_size=5))
def test_kernel_vectors_annihilate(rows):
    for v in kernel(rows):
        for r in rows:
            assert sum(a * b for a, b in zip(r, v)) == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(small_frac, min_size=3, max_size=3),
                min_size=1, max_size=4))
def test_rank_plus_nullity(rows):
    assert rank(rows) + len(kernel(rows)) == 3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(small_frac, min_size=3, max_size=3),
                min_size=1, max_size=3),
       st.lists(small_frac, min_size=3, max_size=3))
def test_rowspace_membership_of_combinations(rows, coeffs):
    v = [sum(c * r[j] for c, r in zip(coeffs, rows)) for j in range(3)]
    assert in_rowspace(v, rows) or all(x == 0 for x in v)
