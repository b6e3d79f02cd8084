import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hopf_renorm.errors import DomainError, PoleError
from hopf_renorm.laurent import LaurentSeries, eval_at_zero, scale_factor, split

Z = LaurentSeries.monomial(1)
ONE = LaurentSeries.one()

coeff = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@st.composite
def series(draw, max_pole=3, order=8):
    low = -draw(st.integers(0, max_pole))
    cs = draw(st.lists(coeff, min_size=1, max_size=order - low + 1))
    return LaurentSeries(low, cs, order)


def test_examples():
    assert LaurentSeries.monomial(-1) * Z == ONE
    inv = (ONE + Z).invert()
    assert inv == LaurentSeries(0, [(-1) ** k for k in range(9)])
    assert LaurentSeries.monomial(-1) + (2 - LaurentSeries.monomial(-1)) == LaurentSeries.constant(2)
    with pytest.raises(ZeroDivisionError):
        LaurentSeries.zero().invert()


def test_split_examples():
    a = LaurentSeries(-2, [3, 5, 7, 11])
    m, p = split(a)
    assert m == LaurentSeries(-2, [3, 5]) and p == LaurentSeries(0, [7, 11])
    assert split(p) == (LaurentSeries.zero(), p)
    assert split(m) == (m, LaurentSeries.zero())


def test_scale_factor_examples():
    assert scale_factor(1.0, 3) == ONE
    assert scale_factor(7.0, 0) == ONE
    e = scale_factor(math.e, 1)
    assert e.max_difference(LaurentSeries(0, [1 / math.factorial(k) for k in range(9)])) < 1e-15
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            scale_factor(bad, 1)


def test_eval_at_zero():
    assert eval_at_zero(LaurentSeries(0, [2, 3])) == 2
    with pytest.raises(PoleError) as info:
        eval_at_zero(LaurentSeries(-2, [1]))
    assert info.value.pole_order == 2


def test_precision_is_tracked():
    a = LaurentSeries(-1, [1, 2, 3], order=4)
    b = LaurentSeries(0, [1, 1], order=4)
    assert (a * b).order == 3
    assert a.invert().order == 6
    with pytest.raises(DomainError):
        a.coeff(9)


def test_json_roundtrip():
    a = LaurentSeries(-2, [1 + 2j, 0, 3], order=5)
    assert LaurentSeries.from_dict(a.to_dict()) == a
    assert a.to_dict()["lowest"] == -2


@settings(max_examples=150, deadline=None)
@given(series(), series())
def test_product_matches_convolution(a, b):
    assume(not a.is_zero() and not b.is_zero())
    prod = a * b
    full = np.convolve(a.coeffs, b.coeffs)
    for k in range(prod.low, prod.order + 1):
        idx = k - a.low - b.low
        want = full[idx] if 0 <= idx < full.size else 0
        assert abs(prod.coeff(k) - want) <= 1e-9 * (1 + abs(want))
    assert prod.pole_order <= a.pole_order + b.pole_order


@settings(max_examples=150, deadline=None)
@given(st.integers(-2, 0), st.lists(st.complex_numbers(max_magnitude=1), min_size=0, max_size=10),
       st.complex_numbers(min_magnitude=0.5, max_magnitude=1))
def test_inverse(low, rest, lead):
    # well-conditioned: |leading| >= 1/2 and all others at most 1
    a = LaurentSeries(low, [lead] + rest)
    assert (a * a.invert()).almost_equal(ONE, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(series(), series(), series())
def test_ring_laws(a, b, c):
    assert ((a * b) * c).almost_equal(a * (b * c), atol=1e-8, rtol=1e-12)
    assert (a * b).almost_equal(b * a, atol=1e-12)
    assert (a * (b + c)).almost_equal(a * b + a * c, atol=1e-8, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(series())
def test_split_is_projection(a):
    m, p = a.split()
    assert m + p == a
    assert p.split()[0].is_zero()
    assert m.split() == (m, LaurentSeries.zero(a.order))
    p.eval_at_zero()


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.integers(0, 4))
def test_scale_factor_is_multiplicative(t1, t2, loops):
    lhs = scale_factor(t1, loops) * scale_factor(t2, loops)
    assert lhs.almost_equal(scale_factor(t1 * t2, loops), atol=1e-10, rtol=1e-12)
