"""Плотности, функции распределения и их обращения для реконструированного процесса

Соглашение об индексах: k = 1 - самое старое событие (mrca), k = n-1 - самое
молодое. Время отсчитывается от настоящего (0 - сегодня).
"""

import math
from typing import Sequence

from pydantic import ValidationError
from scipy.special import betainc, betaincinv, gammaln

from . import config
from .bd_core import decay_complement, decay_denominator, transition_probability
from .data_types import AgeCondition, BDParams, ConditionKind, Regime
from .exceptions import DomainError, RegimeError
from .numerics import compensated_sum, integrate, integrate_to_infinity, tail_decay_rate

GAP_TOL = float(config['GAP_TOL'])


# Проверки аргументов
# ------------------
def check_indices(n: int, k: int) -> None:
    if n < 2 or not 1 <= k <= n - 1:
        raise DomainError(f"Нужно n >= 2 и 1 <= k <= n-1, получено n={n}, k={k}")


def check_gap_indices(n: int, k: int, l: int) -> None:
    if n < 3 or not 1 <= k < l <= n - 1:
        raise DomainError(f"Нужно n >= 3 и 1 <= k < l <= n-1, получено n={n}, k={k}, l={l}")


def _check_probability(u: float) -> None:
    if not 0 <= u <= 1:
        raise DomainError(f"Вероятность вне [0, 1]: {u}")


def _check_time(s: float) -> None:
    if math.isnan(s):
        raise DomainError("Время не может быть NaN")


def _known_age(cond: AgeCondition) -> float:
    if not cond.is_known_age:
        raise DomainError("Нужен известный возраст дерева (origin или mrca)")
    return cond.age


def _origin(t: float) -> AgeCondition:
    try:
        return AgeCondition.origin(t)
    except ValidationError as e:
        raise DomainError(f"Недопустимый возраст дерева: {t}") from e


def _reject_critical(params: BDParams) -> None:
    if params.regime == Regime.CRITICAL:
        raise RegimeError("При mu = lambda апостериорное распределение возраста не определено")


def _log_power(base: float, exponent: int) -> float:
    if exponent == 0:
        return 0.0
    if base <= 0:
        return -math.inf
    return exponent * math.log(base)


def _log_beta_coefficient(a: int, b: int) -> float:
    return gammaln(a + b) - gammaln(a) - gammaln(b)


def _order_statistic_pdf(x: float, one_minus_x: float, dx: float, a: int, b: int) -> float:
    """Плотность Beta(a, b) в точке x(s), умноженная на x'(s)"""
    if dx <= 0:
        return 0.0

    log_value = (
        _log_beta_coefficient(a, b)
        + _log_power(x, a - 1)
        + _log_power(one_minus_x, b - 1)
        + math.log(dx)
    )
    return math.exp(log_value)


# Время видообразования при известном возрасте
# ------------------
def spec_time_pdf(params: BDParams, s: float, cond: AgeCondition) -> float:
    """f(s|t) - плотность одного времени видообразования в дереве возраста t

    Условия OriginAge и MrcaAge дают одну и ту же плотность.

    Пример:
    spec_time_pdf(BDParams(lam=1, mu=1), 0, AgeCondition.origin(2)) == 1.5
    """
    t = _known_age(cond)
    _check_time(s)

    if s < 0 or s > t:
        return 0.0

    lam = params.lam

    match params.regime:
        case Regime.YULE:
            return lam * math.exp(-lam * s) / -math.expm1(-lam * t)
        case Regime.CRITICAL:
            return (1 + lam * t) / (t * (1 + lam * s) ** 2)

    r = params.net_rate
    scale = decay_denominator(params, t) / decay_complement(params, t)
    return r * r * math.exp(-r * s) / decay_denominator(params, s) ** 2 * scale


def spec_time_cdf(params: BDParams, s: float, cond: AgeCondition) -> float:
    t = _known_age(cond)
    _check_time(s)

    if s <= 0:
        return 0.0

    if s >= t:
        return 1.0

    lam = params.lam

    match params.regime:
        case Regime.YULE:
            return math.expm1(-lam * s) / math.expm1(-lam * t)
        case Regime.CRITICAL:
            return s / (1 + lam * s) * (1 + lam * t) / t

    return (
        decay_complement(params, s) / decay_denominator(params, s)
        * decay_denominator(params, t) / decay_complement(params, t)
    )


def spec_time_inv_cdf(params: BDParams, u: float, cond: AgeCondition) -> float:
    """Аналитическое обращение F(s|t)

    Пример:
    spec_time_inv_cdf(params, 0, cond) == 0
    spec_time_inv_cdf(params, 1, cond) == cond.age
    """
    t = _known_age(cond)
    _check_probability(u)

    if u == 0:
        return 0.0

    if u == 1:
        return t

    lam = params.lam

    match params.regime:
        case Regime.YULE:
            s = -math.log1p(u * math.expm1(-lam * t)) / lam
        case Regime.CRITICAL:
            y = u * t / (1 + lam * t)
            s = y / (1 - lam * y)
        case _:
            r = params.net_rate
            y = u * decay_complement(params, t) / decay_denominator(params, t)
            s = -math.log1p(-y * r / (1 - y * params.mu)) / r

    return min(s, t)


# Время происхождения при равномерном априоре
# ------------------
def origin_pdf(params: BDParams, t: float, n: int) -> float:
    """q_or(t|n) = n lambda P[n | t_or = t]

    Пример:
    origin_pdf(BDParams(lam=1, mu=0), t, 1) == exp(-t)
    """
    _reject_critical(params)
    _check_time(t)

    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")

    if t < 0:
        return 0.0

    return n * params.lam * transition_probability(params, n, t)


def origin_cdf(params: BDParams, t: float, n: int) -> float:
    """Q_or(t|n) = (lambda (1 - e^{-rt}) / (lambda - mu e^{-rt}))^n"""
    _reject_critical(params)
    _check_time(t)

    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")

    if t <= 0:
        return 0.0

    if params.regime == Regime.YULE:
        base = -math.expm1(-params.lam * t)
    else:
        base = params.lam * decay_complement(params, t) / decay_denominator(params, t)

    return math.exp(n * math.log(base))


def origin_inv_cdf(params: BDParams, u: float, n: int) -> float:
    """Квантиль времени происхождения; u = 1 (бесконечность) не принимается"""
    _reject_critical(params)

    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")

    if not 0 <= u < 1:
        raise DomainError(f"Нужно 0 <= u < 1, получено {u}")

    if u == 0:
        return 0.0

    log_w = math.log(u) / n
    w = math.exp(log_w)
    one_minus_w = -math.expm1(log_w)

    if params.regime == Regime.YULE:
        return -math.log(one_minus_w) / params.lam

    lam, mu = params.lam, params.mu
    return (math.log(lam - mu * w) - math.log(lam) - math.log(one_minus_w)) / params.net_rate


# k-е событие при известном возрасте
# ------------------
def kth_pdf_given_age(params: BDParams, n: int, k: int, s: float, t: float) -> float:
    """Плотность времени k-го видообразования в дереве возраста t (t - время происхождения)

    Это (n-k)-я порядковая статистика n-1 независимых времён с плотностью f(s|t).
    В точке s = t возвращается предел слева.
    """
    check_indices(n, k)
    _check_time(s)

    cond = _origin(t)

    if s < 0 or s > t:
        return 0.0

    cdf = spec_time_cdf(params, s, cond)
    return _order_statistic_pdf(cdf, 1 - cdf, spec_time_pdf(params, s, cond), n - k, k)


def kth_cdf_given_age(params: BDParams, n: int, k: int, s: float, t: float) -> float:
    check_indices(n, k)
    _check_time(s)

    if s >= t:
        return 1.0

    return float(betainc(n - k, k, spec_time_cdf(params, s, _origin(t))))


def kth_inv_cdf_given_age(params: BDParams, n: int, k: int, u: float, t: float) -> float:
    check_indices(n, k)
    _check_probability(u)

    return spec_time_inv_cdf(params, float(betaincinv(n - k, k, u)), _origin(t))


# k-е событие при равномерном априоре на время происхождения
# ------------------
def _prior_transform(params: BDParams, s: float) -> tuple[float, float, float]:
    """y(s), 1 - y(s), y'(s): время события переводится в Beta(n-k, k+1)"""
    lam = params.lam

    match params.regime:
        case Regime.YULE:
            decay = math.exp(-lam * s)
            return -math.expm1(-lam * s), decay, lam * decay
        case Regime.CRITICAL:
            return lam * s / (1 + lam * s), 1 / (1 + lam * s), lam / (1 + lam * s) ** 2

    r = params.net_rate
    decay = math.exp(-r * s)
    den = decay_denominator(params, s)

    return lam * decay_complement(params, s) / den, r * decay / den, lam * r * r * decay / den ** 2


def kth_pdf_uniform_prior(params: BDParams, n: int, k: int, s: float) -> float:
    """Плотность времени k-го видообразования при равномерном априоре на время происхождения

    При mu = lambda используется предельная форма
    (k+1) C(n, k+1) lambda^(n-k) s^(n-k-1) / (1 + lambda s)^(n+1).

    Пример:
    kth_pdf_uniform_prior(BDParams(lam=lam), n, n - 1, s) == n * lam * exp(-n * lam * s)
    """
    check_indices(n, k)
    _check_time(s)

    if s < 0 or math.isinf(s):
        return 0.0

    y, one_minus_y, dy = _prior_transform(params, s)
    return _order_statistic_pdf(y, one_minus_y, dy, n - k, k + 1)


def kth_cdf_uniform_prior(params: BDParams, n: int, k: int, s: float) -> float:
    check_indices(n, k)
    _check_time(s)

    if s <= 0:
        return 0.0

    if math.isinf(s):
        return 1.0

    y, _, _ = _prior_transform(params, s)
    return float(betainc(n - k, k + 1, y))


def kth_inv_cdf_uniform_prior(params: BDParams, n: int, k: int, u: float) -> float:
    check_indices(n, k)

    if not 0 <= u < 1:
        raise DomainError(f"Нужно 0 <= u < 1, получено {u}")

    y = float(betaincinv(n - k, k + 1, u))
    lam = params.lam

    match params.regime:
        case Regime.YULE:
            return -math.log1p(-y) / lam
        case Regime.CRITICAL:
            return y / (lam * (1 - y))

    r = params.net_rate
    z = y / lam
    return -math.log1p(-z * r / (1 - z * params.mu)) / r


def mrca_pdf_uniform_prior(params: BDParams, n: int, s: float) -> float:
    return kth_pdf_uniform_prior(params, n, 1, s)


def kth_pdf(params: BDParams, n: int, k: int, s: float, cond: AgeCondition) -> float:
    """Плотность k-го события при любом условии на возраст

    При известном mrca возраст первого события вырожден (равен t), а остальные
    n-2 точки независимы с плотностью f(s|t): A_n^k = A_{n-1,t}^{k-1}.
    """
    match cond.kind:
        case ConditionKind.UNIFORM:
            return kth_pdf_uniform_prior(params, n, k, s)
        case ConditionKind.ORIGIN:
            return kth_pdf_given_age(params, n, k, s, cond.age)

    check_indices(n, k)
    if k == 1:
        raise DomainError("При известном mrca время первого события вырождено")

    return kth_pdf_given_age(params, n - 1, k - 1, s, cond.age)


def kth_cdf(params: BDParams, n: int, k: int, s: float, cond: AgeCondition) -> float:
    match cond.kind:
        case ConditionKind.UNIFORM:
            return kth_cdf_uniform_prior(params, n, k, s)
        case ConditionKind.ORIGIN:
            return kth_cdf_given_age(params, n, k, s, cond.age)

    check_indices(n, k)
    if k == 1:
        return 0.0 if s < cond.age else 1.0

    return kth_cdf_given_age(params, n - 1, k - 1, s, cond.age)


def kth_inv_cdf(params: BDParams, n: int, k: int, u: float, cond: AgeCondition) -> float:
    match cond.kind:
        case ConditionKind.UNIFORM:
            return kth_inv_cdf_uniform_prior(params, n, k, u)
        case ConditionKind.ORIGIN:
            return kth_inv_cdf_given_age(params, n, k, u, cond.age)

    check_indices(n, k)
    if k == 1:
        return cond.age

    return kth_inv_cdf_given_age(params, n - 1, k - 1, u, cond.age)


# Совместные плотности
# ------------------
def _check_decreasing(x: Sequence[float], size: int) -> None:
    if len(x) != size:
        raise DomainError(f"Нужно {size} времён, получено {len(x)}")

    if any(not (value > 0 and math.isfinite(value)) for value in x):
        raise DomainError("Времена должны быть конечными и положительными")

    if any(a <= b for a, b in zip(x, x[1:])):
        raise DomainError("Времена должны строго убывать")


def joint_log_density_ordered(params: BDParams, x: Sequence[float], n: int) -> float:
    """log f(x_1, ..., x_{n-1} | n) при равномерном априоре, x_1 > ... > x_{n-1}

    f(x|n) = n! (1 - y(x_1)) prod y'(x_i), где y - то же преобразование,
    что и у плотности k-го события.
    """
    if n < 2:
        raise DomainError(f"Нужно n >= 2, получено {n}")
    _check_decreasing(x, n - 1)

    _, tail, _ = _prior_transform(params, x[0])
    log_terms = [gammaln(n + 1), _log_power(tail, 1)]
    log_terms.extend(_log_power(_prior_transform(params, value)[2], 1) for value in x)

    return math.fsum(log_terms)


def joint_log_density_with_origin(params: BDParams, x: Sequence[float], n: int) -> float:
    """log f(x_0, x_1, ..., x_{n-1} | n), x_0 - время происхождения

    Это плотность порядковых статистик n независимых величин с плотностью y'(x).
    """
    _reject_critical(params)

    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")
    _check_decreasing(x, n)

    log_terms = [gammaln(n + 1)]
    log_terms.extend(_log_power(_prior_transform(params, value)[2], 1) for value in x)

    return math.fsum(log_terms)


def joint_log_density_unordered(params: BDParams, s: Sequence[float], n: int) -> float:
    """Симметричная форма: упорядоченная плотность, делённая на (n-1)!"""
    return joint_log_density_ordered(params, sorted(s, reverse=True), n) - gammaln(n)


# Промежутки между событиями
# ------------------
def gap_pdf_given_age(
    params: BDParams,
    n: int,
    k: int,
    l: int,
    s: float,
    t: float,
    tol: float = GAP_TOL,
) -> float:
    """Плотность A_{n,t}^k - A_{n,t}^l: интеграл по времени tau k-го события

    Для l = k + 1 средний множитель (F(tau) - F(tau - s))^(l-k-1) пропадает.
    """
    check_gap_indices(n, k, l)
    _check_time(s)

    if s < 0 or s >= t:
        return 0.0

    cond = _origin(t)
    log_coefficient = (
        gammaln(n) - gammaln(k) - gammaln(l - k) - gammaln(n - l)
    )

    def integrand(tau: float) -> float:
        upper, lower = spec_time_cdf(params, tau, cond), spec_time_cdf(params, tau - s, cond)
        density = spec_time_pdf(params, tau, cond) * spec_time_pdf(params, tau - s, cond)

        if density <= 0:
            return 0.0

        return math.exp(
            log_coefficient
            + _log_power(1 - upper, k - 1)
            + _log_power(upper - lower, l - k - 1)
            + _log_power(lower, n - l - 1)
            + math.log(density)
        )

    return integrate(integrand, s, t, tol).value


def gap_pdf_yule_given_age(
    params: BDParams,
    n: int,
    k: int,
    l: int,
    s: float,
    t: float,
) -> float:
    """Замкнутая форма плотности A_{n,t}^k - A_{n,t}^l для модели Юла

    Двойная сумма с коэффициентами
    B_ij = k (k+1) C(l, k+1) C(n-1, l) C(k-1, i) C(n-l-1, j) (-1)^(n+k-l-i-j) / (n-k+i-j);
    экспоненты сгруппированы так, что все показатели неположительны.
    """
    if params.regime != Regime.YULE:
        raise RegimeError("Замкнутая форма промежутка существует только для mu = 0")
    check_gap_indices(n, k, l)
    _check_time(s)

    if s < 0 or s >= t:
        return 0.0

    lam = params.lam
    scale = (
        _log_power(-math.expm1(-lam * s), l - k - 1)
        - (n - 1) * math.log(-math.expm1(-lam * t))
    )
    base = k * (k + 1) * math.comb(l, k + 1) * math.comb(n - 1, l)

    terms = []
    for i in range(k):
        for j in range(n - l):
            sign = -1 if (n + k - l - i - j) % 2 else 1
            coefficient = sign * base * math.comb(k - 1, i) * math.comb(n - l - 1, j) / (n - k + i - j)

            first = math.exp(lam * ((i + 1) * (t - s) - k * t) + scale)
            second = math.exp(lam * ((n - k - 1 - j) * s - (n - 1 - j) * t) + scale)
            terms.append(coefficient * (first - second))

    value, _ = compensated_sum(terms)
    return max(lam * value, 0.0)


def gap_pdf_yule_uniform_prior(params: BDParams, n: int, k: int, l: int, s: float) -> float:
    """lambda (k+1) C(l, k+1) e^{-(k+1) lambda s} (1 - e^{-lambda s})^(l-k-1); от n не зависит

    Пример:
    gap_pdf_yule_uniform_prior(BDParams(lam=2), 3, 1, 2, 0.5) == 4 * exp(-2)
    """
    if params.regime != Regime.YULE:
        raise RegimeError("Замкнутая форма промежутка существует только для mu = 0")
    check_gap_indices(n, k, l)
    _check_time(s)

    if s < 0 or math.isinf(s):
        return 0.0

    lam = params.lam
    return lam * (k + 1) * math.comb(l, k + 1) * math.exp(
        -(k + 1) * lam * s + _log_power(-math.expm1(-lam * s), l - k - 1)
    )


def gap_pdf_uniform_prior(
    params: BDParams,
    n: int,
    k: int,
    l: int,
    s: float,
    tol: float = GAP_TOL,
) -> float:
    """Плотность A_n^k - A_n^l при равномерном априоре

    Для mu = 0 - замкнутая форма, иначе интеграл плотности при известном
    возрасте по q_or(t|n).
    """
    if params.regime == Regime.YULE:
        return gap_pdf_yule_uniform_prior(params, n, k, l, s)

    _reject_critical(params)
    check_gap_indices(n, k, l)
    _check_time(s)

    if s < 0 or math.isinf(s):
        return 0.0

    def integrand(t: float) -> float:
        return gap_pdf_given_age(params, n, k, l, s, t, tol / 100) * origin_pdf(params, t, n)

    return integrate_to_infinity(integrand, s, tol, tail_decay_rate(params)).value
