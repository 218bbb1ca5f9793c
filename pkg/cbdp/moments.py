"""Ожидаемые времена видообразования и высшие моменты"""

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self):
            return str(self.value)

        def __format__(self, format_spec):
            return str(self.value).__format__(format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()
from typing import Callable

from . import config
from .bd_core import decay_complement, decay_denominator
from .data_types import AgeCondition, BDParams, ConditionKind, MomentMethod, MomentResult, Regime
from .densities import check_gap_indices, check_indices, kth_pdf_given_age, kth_pdf_uniform_prior
from .exceptions import DomainError
from .metrics import prom_cancellation_fallbacks_count
from .numerics import compensated_sum, integrate, integrate_to_infinity, tail_decay_rate
from .utils import print

DEFAULT_TOL = float(config['DEFAULT_TOL'])
CANCELLATION_THRESHOLD = float(config['CANCELLATION_THRESHOLD'])

ClosedForm = tuple[float, float]  # значение, индекс сокращения

_first_fallback = True


class SpecialModel(StrEnum):
    YULE = "yule"
    CCBP = "ccbp"


def _with_fallback(
    closed: Callable[[], ClosedForm],
    quadrature: Callable[[], float],
    upper: float = math.inf,
) -> MomentResult:
    """Замкнутая формула, а при потере точности - квадратура с флагом"""
    global _first_fallback

    try:
        value, index = closed()
    except (OverflowError, ZeroDivisionError, ValueError):
        value, index = math.nan, math.inf

    if math.isfinite(value) and 0 < value < upper and index <= CANCELLATION_THRESHOLD:
        return MomentResult(value=value, method=MomentMethod.CLOSED_FORM, cancellation_index=index)

    prom_cancellation_fallbacks_count.inc()
    if _first_fallback:
        _first_fallback = False
        print(f"⚠️ Замкнутая формула теряет точность (индекс сокращения {index:.3g}), используется квадратура")

    return MomentResult(
        value=quadrature(),
        method=MomentMethod.QUADRATURE,
        cancellation_flag=True,
        cancellation_index=index,
    )


def _combine(terms: list[float], magnitudes: list[float]) -> ClosedForm:
    """Сумма слагаемых и индекс сокращения с учётом сокращений во вложенных суммах

    magnitudes[i] >= |terms[i]| - сумма модулей, из которых собрано слагаемое.
    """
    value, _ = compensated_sum(terms)
    if value == 0:
        return value, math.inf
    return value, math.fsum(magnitudes) / abs(value)


# Известный возраст
# ------------------
def _given_age_general(params: BDParams, n: int, k: int, t: float) -> ClosedForm:
    lam, mu, r = params.lam, params.mu, params.net_rate
    den_t = decay_denominator(params, t)
    log_c = math.log(den_t) - math.log(decay_complement(params, t))
    # ln((lambda e^{rt} - mu) / r)
    log_growth = r * t + math.log(den_t / r)

    def g(p: int) -> ClosedForm:
        scale = 1 / (r * lam ** p)
        terms = [log_growth]
        for m in range(1, p):
            terms.append(
                -math.comb(p - 1, m) * mu ** m / m
                * (math.exp(-m * (r * t + math.log(den_t))) - r ** -m)
            )
        value, _ = compensated_sum(terms)
        return scale * value, scale * math.fsum(abs(term) for term in terms)

    def h(p: int, m: int) -> float:
        power = m - p + 1
        if power == 0:
            return math.log(den_t / r)
        return (den_t ** power - r ** power) / power

    outer_terms, outer_magnitudes = [t], [t]

    for j in range(k):
        p = n - j - 1
        g_value, g_magnitude = g(p)
        inner_terms, inner_magnitudes = [g_value], [g_magnitude]

        for l in range(1, p + 1):
            for m in range(l):
                term = (
                    math.comb(p, l) * math.comb(l - 1, m) * (-1) ** (l + m)
                    * lam ** (l - 1 - m) / (r * mu ** l) * h(p, m)
                )
                inner_terms.append(term)
                inner_magnitudes.append(abs(term))

        inner, _ = compensated_sum(inner_terms)
        inner_magnitude = math.fsum(inner_magnitudes)
        power = math.exp(p * log_c)

        for i in range(j, k):
            coefficient = math.comb(n - 1, i) * math.comb(i, j) * (-1) ** (i + j) * power
            outer_terms.append(-coefficient * inner)
            outer_magnitudes.append(abs(coefficient) * inner_magnitude)

    return _combine(outer_terms, outer_magnitudes)


def _given_age_yule(params: BDParams, n: int, k: int, t: float) -> ClosedForm:
    lam_t = params.lam * t
    log_norm = (1 - n) * math.log(-math.expm1(-lam_t))
    base = k * math.comb(n - 1, k)
    terms = []

    for i in range(n - k):
        for j in range(k):
            q = k + i - j
            coefficient = base * math.comb(n - k - 1, i) * math.comb(k - 1, j) * (-1) ** (i + j) / (params.lam * q * q)
            bracket = math.exp(-j * lam_t + log_norm) - (q * lam_t + 1) * math.exp(-(k + i) * lam_t + log_norm)
            terms.append(coefficient * bracket)

    return compensated_sum(terms)


def _given_age_critical(params: BDParams, n: int, k: int, t: float) -> ClosedForm:
    lam = params.lam
    lam_t = lam * t
    log_ratio = math.log1p(lam_t) - math.log(lam_t)

    outer_terms, outer_magnitudes = [t], [t]

    for j in range(k):
        p = n - j - 1
        inner_terms = [lam_t, -p * math.log1p(lam_t)]
        for l in range(2, p + 1):
            inner_terms.append(
                math.comb(p, l) * (-1) ** l * math.expm1((1 - l) * math.log1p(lam_t)) / (1 - l)
            )
        inner, _ = compensated_sum(inner_terms)
        inner_magnitude = math.fsum(abs(term) for term in inner_terms)
        power = math.exp(p * log_ratio) / lam

        for i in range(j, k):
            coefficient = math.comb(n - 1, i) * math.comb(i, j) * (-1) ** (i + j) * power
            outer_terms.append(-coefficient * inner)
            outer_magnitudes.append(abs(coefficient) * inner_magnitude)

    return _combine(outer_terms, outer_magnitudes)


def expected_kth_given_age(
    params: BDParams,
    n: int,
    k: int,
    t: float,
    tol: float = DEFAULT_TOL,
) -> MomentResult:
    """E[A_{n,t}^k] - ожидаемое время k-го видообразования в дереве возраста t

    Пример:
    expected_kth_given_age(BDParams(lam=2), n, k, t).value
        == expected_kth_given_age(BDParams(lam=1), n, k, 2 * t).value / 2
    """
    check_indices(n, k)

    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"Возраст должен быть конечным и положительным: {t}")

    match params.regime:
        case Regime.YULE:
            closed = _given_age_yule
        case Regime.CRITICAL:
            closed = _given_age_critical
        case _:
            closed = _given_age_general

    return _with_fallback(
        lambda: closed(params, n, k, t),
        lambda: integrate(lambda s: s * kth_pdf_given_age(params, n, k, s, t), 0, t, tol).value,
        upper=t,
    )


# Равномерный априор
# ------------------
def _uniform_prior_general(params: BDParams, n: int, k: int) -> ClosedForm:
    rho = params.rho
    log_a = -math.log1p(-rho)
    scale = (k + 1) / params.lam * math.comb(n, k + 1) * (-1) ** k

    terms, magnitudes = [], []

    for i in range(n - k):
        q = k + i
        inner_terms = [log_a]
        inner_terms.extend(
            -math.comb(q, j) * (-1) ** j / j * -math.expm1(j * log_a)
            for j in range(1, q + 1)
        )
        inner, _ = compensated_sum(inner_terms)
        inner_magnitude = math.fsum(abs(term) for term in inner_terms)

        coefficient = scale * math.comb(n - k - 1, i) / ((q + 1) * rho) * (1 / rho - 1) ** q
        terms.append(coefficient * inner)
        magnitudes.append(abs(coefficient) * inner_magnitude)

    return _combine(terms, magnitudes)


def expected_kth_uniform_prior(
    params: BDParams,
    n: int,
    k: int,
    tol: float = DEFAULT_TOL,
) -> MomentResult:
    """E[A_n^k] при равномерном априоре на время происхождения

    Пример:
    expected_kth_uniform_prior(BDParams(lam=1, mu=1), 10, 5).value == 1.0
    expected_kth_uniform_prior(BDParams(lam=1), 3, 1).value == 5 / 6
    """
    check_indices(n, k)
    lam = params.lam

    match params.regime:
        case Regime.YULE:
            value = math.fsum(1 / (lam * i) for i in range(k + 1, n + 1))
            return MomentResult(value=value, method=MomentMethod.CLOSED_FORM)
        case Regime.CRITICAL:
            return MomentResult(value=(n - k) / (lam * k), method=MomentMethod.CLOSED_FORM)

    return _with_fallback(
        lambda: _uniform_prior_general(params, n, k),
        lambda: integrate_to_infinity(
            lambda s: s * kth_pdf_uniform_prior(params, n, k, s), 0, tol, tail_decay_rate(params),
        ).value,
    )


def closed_form_special_moments(model: SpecialModel, n: int, k: int, m: int) -> float:
    """Моменты при lambda = 1: модель Юла (m = 1, 2) и cCBP (любой m)

    Для cCBP при k < m момент бесконечен (возвращается inf).

    Пример:
    closed_form_special_moments(SpecialModel.CCBP, 4, 2, 2) == 3.0
    closed_form_special_moments(SpecialModel.CCBP, 4, 1, 2) == inf
    """
    check_indices(n, k)

    if m < 1:
        raise DomainError(f"Порядок момента должен быть >= 1: {m}")

    if model == SpecialModel.CCBP:
        if k < m:
            return math.inf
        return math.comb(n - k + m - 1, m) / math.comb(k, m)

    harmonic = math.fsum(1 / i for i in range(k + 1, n + 1))

    match m:
        case 1:
            return harmonic
        case 2:
            return math.fsum(1 / i ** 2 for i in range(k + 1, n + 1)) + harmonic ** 2

    raise DomainError(f"Для модели Юла известны только первые два момента, запрошен {m}")


def numeric_moment(
    params: BDParams,
    n: int,
    k: int,
    m: int,
    cond: AgeCondition,
    tol: float = DEFAULT_TOL,
) -> MomentResult:
    """E[(A^k)^m] квадратурой; бесконечные моменты cCBP распознаются заранее"""
    check_indices(n, k)

    if m < 1:
        raise DomainError(f"Порядок момента должен быть >= 1: {m}")

    match cond.kind:
        case ConditionKind.UNIFORM:
            if params.regime == Regime.CRITICAL and k < m:
                return MomentResult(value=math.inf, method=MomentMethod.CLOSED_FORM)

            value = integrate_to_infinity(
                lambda s: s ** m * kth_pdf_uniform_prior(params, n, k, s), 0, tol, tail_decay_rate(params),
            ).value

        case ConditionKind.ORIGIN:
            value = integrate(lambda s: s ** m * kth_pdf_given_age(params, n, k, s, cond.age), 0, cond.age, tol).value

        case _:
            if k == 1:
                return MomentResult(value=cond.age ** m, method=MomentMethod.CLOSED_FORM)

            return numeric_moment(params, n - 1, k - 1, m, AgeCondition.origin(cond.age), tol)

    return MomentResult(value=value, method=MomentMethod.QUADRATURE)


def expected_kth(
    params: BDParams,
    n: int,
    k: int,
    cond: AgeCondition,
    tol: float = DEFAULT_TOL,
) -> MomentResult:
    """E[A^k] при любом условии на возраст

    При известном mrca первое событие вырождено: E[A^1] = t, E[A^k] = E[A_{n-1,t}^{k-1}].
    """
    check_indices(n, k)

    match cond.kind:
        case ConditionKind.UNIFORM:
            return expected_kth_uniform_prior(params, n, k, tol)
        case ConditionKind.ORIGIN:
            return expected_kth_given_age(params, n, k, cond.age, tol)

    if k == 1:
        return MomentResult(value=cond.age, method=MomentMethod.CLOSED_FORM)

    return expected_kth_given_age(params, n - 1, k - 1, cond.age, tol)


def expected_kth_table(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    tol: float = DEFAULT_TOL,
) -> list[MomentResult]:
    return [expected_kth(params, n, k, cond, tol) for k in range(1, n)]


def expected_gap(
    params: BDParams,
    n: int,
    k: int,
    l: int,
    cond: AgeCondition,
    tol: float = DEFAULT_TOL,
) -> float:
    """E[A^k - A^l] = E[A^k] - E[A^l], k < l

    Пример:
    expected_gap(BDParams(lam=1, mu=1), 10, 5, 9, AgeCondition.uniform_prior()) == 8 / 9
    """
    check_gap_indices(n, k, l)

    return expected_kth(params, n, k, cond, tol).value - expected_kth(params, n, l, cond, tol).value
