import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbdp.data_types import BDParams, QuadResult
from cbdp.exceptions import DomainError, QuadratureError
from cbdp.numerics import (
    compensated_sum,
    integrate,
    integrate_to_infinity,
    invert_monotone_cdf,
    tail_decay_rate,
)


def test_integrate_polynomial():
    result = integrate(lambda s: 2 * s, 0, 1)
    assert result.value == pytest.approx(1.0, rel=1e-14)
    assert result.evaluations > 0


def test_integrate_empty_interval():
    assert integrate(math.exp, 2.0, 2.0) == QuadResult(value=0.0, error_estimate=0.0, evaluations=0)


@pytest.mark.parametrize("a, b, tol", [(1.0, 0.0, 1e-10), (0.0, math.inf, 1e-10), (0.0, 1.0, 0.0)])
def test_integrate_rejects_bad_input(a, b, tol):
    with pytest.raises(DomainError):
        integrate(math.exp, a, b, tol)


def test_integrate_failure_carries_best_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda s: math.nan, 0, 1)

    assert isinstance(info.value.best, QuadResult)
    assert info.value.best.error_estimate == math.inf


@pytest.mark.parametrize("decay_rate", [None, 1.0, 0.5])
def test_integrate_to_infinity(decay_rate):
    result = integrate_to_infinity(lambda x: math.exp(-x), 0, 1e-10, decay_rate)
    assert result.value == pytest.approx(1.0, rel=1e-9)


def test_integrate_to_infinity_shifted():
    result = integrate_to_infinity(lambda x: 2 * math.exp(-2 * x), 1.0, 1e-10, 2.0)
    assert result.value == pytest.approx(math.exp(-2), rel=1e-9)


def test_integrate_to_infinity_algebraic_tail():
    result = integrate_to_infinity(lambda x: 1 / (1 + x) ** 2, 0)
    assert result.value == pytest.approx(1.0, rel=1e-9)


def test_tail_decay_rate():
    assert tail_decay_rate(BDParams(lam=2.0)) == 2.0
    assert tail_decay_rate(BDParams(lam=1.0, mu=0.5)) == 0.5
    assert tail_decay_rate(BDParams(lam=1.0, mu=0.99)) is None
    assert tail_decay_rate(BDParams(lam=1.0, mu=1.0)) is None


def test_invert_monotone_cdf():
    assert invert_monotone_cdf(lambda x: x, 0.25, 0, 1) == pytest.approx(0.25, abs=1e-15)
    assert invert_monotone_cdf(lambda x: x, 0.0, 0, 1) == 0
    assert invert_monotone_cdf(lambda x: x, 1.0, 0, 1) == 1

    exponential = invert_monotone_cdf(lambda x: -math.expm1(-x), 0.5, 0, 10)
    assert exponential == pytest.approx(math.log(2), rel=1e-14)


def test_invert_monotone_cdf_bracket():
    with pytest.raises(DomainError):
        invert_monotone_cdf(lambda x: x, 0.75, 0, 0.5)

    with pytest.raises(DomainError):
        invert_monotone_cdf(lambda x: x, 0.5, 1, 0)


def test_compensated_sum():
    assert compensated_sum([1, -1, 2]) == (2.0, 2.0)
    assert compensated_sum([]) == (0.0, math.inf)
    assert compensated_sum([1e16, 1.0, -1e16]) == (1.0, 2e16 + 1)


@settings(max_examples=100)
@given(
    big=st.floats(1e10, 1e20),
    small=st.floats(-1.0, 1.0).filter(lambda x: x != 0),
)
def test_compensated_sum_recovers_small_term(big, small):
    value, index = compensated_sum([big, small, -big])
    assert value == small
    assert index >= 2 * big / abs(small)
