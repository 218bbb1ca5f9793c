"""Вероятности перехода процесса рождения-гибели"""

import math

from .data_types import BDParams, Regime
from .exceptions import DomainError, RegimeError


def decay_complement(params: BDParams, x: float) -> float:
    """1 - exp(-(lambda - mu) x) без потери точности при малых x"""
    return -math.expm1(-params.net_rate * x)


def decay_denominator(params: BDParams, x: float) -> float:
    """lambda - mu exp(-(lambda - mu) x), записанное как r + mu (1 - exp(-r x))"""
    return params.net_rate + params.mu * decay_complement(params, x)


def _check_time(t: float) -> None:
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"Время должно быть конечным и неотрицательным: {t}")


def _yule(params: BDParams, n: int, t: float) -> float:
    if n == 0:
        return 0.0

    lam_t = params.lam * t
    if n == 1:
        return math.exp(-lam_t)

    return math.exp(-lam_t + (n - 1) * math.log(-math.expm1(-lam_t)))


def _critical(params: BDParams, n: int, t: float) -> float:
    lam_t = params.lam * t

    if n == 0:
        return lam_t / (1 + lam_t)

    if n == 1:
        return 1 / (1 + lam_t) ** 2

    return math.exp((n - 1) * math.log(lam_t) - (n + 1) * math.log1p(lam_t))


def _general(params: BDParams, n: int, t: float) -> float:
    r = params.net_rate
    em = decay_complement(params, t)
    den = decay_denominator(params, t)

    if n == 0:
        return params.mu * em / den

    log_p1 = 2 * math.log(r) - r * t - 2 * math.log(den)
    if n == 1:
        return math.exp(log_p1)

    if em == 0:
        return 0.0

    # p_n = (lambda/mu)^(n-1) p_1 p_0^(n-1), mu сокращается
    return math.exp(log_p1 + (n - 1) * (math.log(params.lam) + math.log(em) - math.log(den)))


def transition_probability(params: BDParams, n: int, t: float) -> float:
    """P[N(t) = n | N(0) = 1] - вероятность оставить n потомков за время t

    Параметры:
    params: Интенсивности процесса
    n     : Число потомков (>= 0)
    t     : Время (конечное, >= 0)

    Пример:
    transition_probability(BDParams(lam=1, mu=0.5), 1, 0) == 1.0
    transition_probability(BDParams(lam=1, mu=0.5), 0, 0) == 0.0
    """
    if n < 0:
        raise DomainError(f"Число потомков не может быть отрицательным: {n}")
    _check_time(t)

    if t == 0:
        return 1.0 if n == 1 else 0.0

    match params.regime:
        case Regime.YULE:
            return _yule(params, n, t)
        case Regime.CRITICAL:
            return _critical(params, n, t)
        case _:
            return _general(params, n, t)


def integral_pn_over_origin(params: BDParams, n: int) -> float:
    """Интеграл P[n | t_or = t] по t от 0 до бесконечности, равен 1/(n lambda)

    При mu = lambda интеграл расходится.
    """
    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")

    if params.regime == Regime.CRITICAL:
        raise RegimeError("При mu = lambda интеграл по времени происхождения расходится")

    return 1 / (n * params.lam)
