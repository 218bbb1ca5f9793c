import math
from fractions import Fraction

import pytest
from pydantic import ValidationError

from cbdp.data_types import AgeCondition, BDParams, MomentMethod, MomentResult
from cbdp.exceptions import DomainError
from cbdp.moments import (
    SpecialModel,
    closed_form_special_moments,
    expected_gap,
    expected_kth,
    expected_kth_given_age,
    expected_kth_table,
    expected_kth_uniform_prior,
    numeric_moment,
)

PARAMS = [
    BDParams(lam=1.0),
    BDParams(lam=2.0, mu=0.5),
    BDParams(lam=1.0, mu=0.5),
    BDParams(lam=0.5, mu=0.45),
    BDParams(lam=1.0, mu=1.0),
]


def _ids(params: BDParams) -> str:
    return f"lam={params.lam:g},mu={params.mu:g}"


def test_anchor_values(yule, critical):
    assert expected_kth_uniform_prior(critical, 10, 5).value == 1.0
    assert expected_kth_uniform_prior(yule, 3, 1).value == pytest.approx(5 / 6, abs=1e-12)

    harmonic = float(sum(Fraction(1, i) for i in range(6, 11)))
    assert expected_kth_uniform_prior(yule, 10, 5).value == pytest.approx(harmonic, abs=1e-12)
    assert expected_kth_uniform_prior(BDParams(lam=2.0), 10, 5).value == pytest.approx(harmonic / 2, abs=1e-12)


@pytest.mark.parametrize("params", PARAMS, ids=_ids)
@pytest.mark.parametrize("n", [2, 5, 10])
def test_uniform_prior_matches_quadrature(params, n, prior):
    for k in range(1, n):
        closed = expected_kth_uniform_prior(params, n, k).value
        numeric = numeric_moment(params, n, k, 1, prior).value
        assert closed == pytest.approx(numeric, rel=1e-6)


@pytest.mark.parametrize("params", PARAMS, ids=_ids)
@pytest.mark.parametrize("n", [2, 5, 10])
@pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
def test_given_age_matches_quadrature(params, n, t):
    cond = AgeCondition.origin(t)
    for k in range(1, n):
        result = expected_kth_given_age(params, n, k, t)
        assert 0 < result.value < t
        assert result.value == pytest.approx(numeric_moment(params, n, k, 1, cond).value, rel=1e-6)


@pytest.mark.parametrize("mu", [0.0, 0.5, 1.0])
def test_given_age_scales_with_rate(mu):
    slow = expected_kth_given_age(BDParams(lam=1.0, mu=mu), 6, 2, 3.0).value
    fast = expected_kth_given_age(BDParams(lam=2.0, mu=2 * mu), 6, 2, 1.5).value
    assert fast == pytest.approx(slow / 2, rel=1e-9)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_continuity_near_critical(k):
    near = expected_kth_uniform_prior(BDParams(lam=1.0, mu=1 - 1e-6), 5, k).value
    assert near == pytest.approx((5 - k) / k, rel=1e-3)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_continuity_near_yule(k):
    near = expected_kth_uniform_prior(BDParams(lam=1.0, mu=1e-6), 5, k).value
    assert near == pytest.approx(expected_kth_uniform_prior(BDParams(lam=1.0), 5, k).value, rel=1e-5)


def test_closed_form_special_moments():
    assert closed_form_special_moments(SpecialModel.CCBP, 4, 2, 2) == 3.0
    assert closed_form_special_moments(SpecialModel.CCBP, 3, 1, 1) == 2.0
    assert math.isinf(closed_form_special_moments(SpecialModel.CCBP, 4, 1, 2))

    assert closed_form_special_moments(SpecialModel.YULE, 3, 1, 1) == pytest.approx(5 / 6)
    assert closed_form_special_moments(SpecialModel.YULE, 2, 1, 2) == pytest.approx(0.5)

    with pytest.raises(DomainError):
        closed_form_special_moments(SpecialModel.YULE, 5, 1, 3)


@pytest.mark.parametrize("n", [3, 5, 8])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_ccbp_moment_table(critical, prior, n, m):
    for k in range(1, n):
        result = numeric_moment(critical, n, k, m, prior)

        if k < m:
            assert result.infinite
            continue

        expected = closed_form_special_moments(SpecialModel.CCBP, n, k, m)
        assert result.value == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("n, k", [(2, 1), (5, 2), (6, 5)])
def test_yule_second_moment(yule, prior, n, k):
    numeric = numeric_moment(yule, n, k, 2, prior).value
    assert numeric == pytest.approx(closed_form_special_moments(SpecialModel.YULE, n, k, 2), rel=1e-8)


def test_mrca_condition(birth_death):
    mrca = AgeCondition.mrca(2.0)

    assert expected_kth(birth_death, 5, 1, mrca).value == 2.0
    assert expected_kth(birth_death, 5, 3, mrca).value == expected_kth_given_age(birth_death, 4, 2, 2.0).value
    assert numeric_moment(birth_death, 5, 1, 2, mrca).value == 4.0


def test_table_is_decreasing(birth_death, prior):
    table = expected_kth_table(birth_death, 8, prior)

    assert len(table) == 7
    values = [result.value for result in table]
    assert values == sorted(values, reverse=True)


def test_expected_gap(critical, prior):
    assert expected_gap(critical, 10, 5, 9, prior) == pytest.approx(8 / 9)

    with pytest.raises(DomainError):
        expected_gap(critical, 10, 5, 5, prior)


def test_cancellation_flag_needs_quadrature():
    with pytest.raises(ValidationError):
        MomentResult(value=1.0, method=MomentMethod.CLOSED_FORM, cancellation_flag=True)


def test_fallback_results_are_flagged(birth_death, prior):
    for k in (1, 2):
        result = expected_kth_uniform_prior(birth_death, 60, k)

        assert result.method == MomentMethod.QUADRATURE
        assert result.cancellation_flag
        assert result.value == pytest.approx(numeric_moment(birth_death, 60, k, 1, prior).value, rel=1e-8)

    closed = expected_kth_uniform_prior(birth_death, 3, 1)
    assert closed.method == MomentMethod.CLOSED_FORM
    assert not closed.cancellation_flag
