import itertools
from fractions import Fraction

import pytest
from sympy import Rational
from sympy.physics.wigner import wigner_6j as sympy_6j

from qndsim import HalfInt, wigner_6j
from qndsim.wigner import triangle, wigner_6j_squared

HALF = [Fraction(k, 2) for k in range(0, 10)]


def _rat(x):
    return Rational(x.numerator, x.denominator)


def _cases():
    out = []
    for j1, j2, j4, j5 in itertools.product([Fraction(1, 2), Fraction(3, 2)], HALF[1:9], [Fraction(1)], HALF[4:10]):
        for j3 in HALF:
            for j6 in HALF:
                triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
                if all(sum(t).denominator == 1 for t in triads):
                    out.append((j1, j2, j3, j4, j5, j6))
    return out[::11]


@pytest.mark.parametrize("args", _cases())
def test_matches_sympy(args):
    ref = sympy_6j(*map(_rat, args))
    assert wigner_6j_squared(*args) == Fraction(str(ref**2))
    assert wigner_6j(*args) == pytest.approx(float(ref), abs=1e-14)


def test_cycling_line_symbol():
    assert wigner_6j_squared("1/2", 4, "7/2", 5, "3/2", 1) == Fraction(1, 36)


def test_column_permutations_and_row_swaps():
    args = ("1/2", 3, "7/2", 4, "3/2", 1)
    base = wigner_6j(*args)
    a, b, c, d, e, f = args
    assert wigner_6j(b, a, c, e, d, f) == pytest.approx(base, abs=1e-15)
    assert wigner_6j(a, c, b, d, f, e) == pytest.approx(base, abs=1e-15)
    assert wigner_6j(d, e, c, a, b, f) == pytest.approx(base, abs=1e-15)


def test_triangle_failure_gives_zero():
    # F=4 cannot reach F'=2 through a rank-1 operator
    assert wigner_6j_squared("1/2", 4, "7/2", 2, "3/2", 1) == 0
    assert wigner_6j(1, 1, 5, 1, 1, 1) == 0.0


@pytest.mark.parametrize("f", [3, 4])
def test_sum_rule(f):
    total = sum(2 * HalfInt.of(fp).multiplicity * wigner_6j_squared("1/2", f, "7/2", fp, "3/2", 1)
                for fp in range(2, 6))
    assert total == 1


def test_halfint_parsing():
    assert HalfInt.of("7/2") == HalfInt(7)
    assert HalfInt.of(3.5) == HalfInt(7)
    assert HalfInt.of(Fraction(3, 2)).multiplicity == 4
    assert str(HalfInt(7)) == "7/2" and str(HalfInt(8)) == "4"
    with pytest.raises(ValueError):
        HalfInt.of("1/3")
    with pytest.raises(ValueError):
        HalfInt(-1)


def test_triangle_helper():
    h = HalfInt.of
    assert triangle(h(1), h(1), h(2))
    assert not triangle(h(1), h(1), h(3))
    assert not triangle(h("1/2"), h(1), h(1))
