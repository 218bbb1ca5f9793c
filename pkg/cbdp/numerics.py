"""Квадратура, обращение монотонных функций распределения и суммирование со знаком"""

import math
from typing import Callable, Iterable

import numpy as np
from scipy import integrate as sp_integrate
from scipy.optimize import brentq

from . import config
from .data_types import BDParams, QuadResult, Regime
from .exceptions import DomainError, QuadratureError
from .metrics import prom_quadrature_calls_count, prom_quadrature_failures_count

DEFAULT_TOL = float(config['DEFAULT_TOL'])
QUAD_LIMIT = config['QUAD_LIMIT']
DECAY_MIN_RATIO = float(config['DECAY_MIN_RATIO'])

RealFunction = Callable[[float], float]


def _quad(f: RealFunction, a: float, b: float, tol: float) -> QuadResult:
    prom_quadrature_calls_count.inc()

    value, abserr, info, *message = sp_integrate.quad(
        f, a, b, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, full_output=1,
    )
    converged = math.isfinite(value) and math.isfinite(abserr)
    result = QuadResult(
        value=value,
        error_estimate=abs(abserr) if converged else math.inf,
        evaluations=info['neval'],
    )

    if not converged or result.error_estimate > max(tol, tol * abs(value)):
        prom_quadrature_failures_count.inc()
        reason = message[0] if message else "оценка ошибки выше допуска"
        raise QuadratureError(
            f"Квадратура на [{a}, {b}] не сошлась: {reason}; "
            f"значение {value}, ошибка {abserr}",
            best=result,
        )

    return result


def integrate(f: RealFunction, a: float, b: float, tol: float = DEFAULT_TOL) -> QuadResult:
    """Адаптивная квадратура Гаусса-Кронрода (QUADPACK) на [a, b]

    Параметры:
    f  : Подынтегральная функция, конечная на [a, b]
    a,b: Границы, a <= b
    tol: Допуск, абсолютный или относительный (берётся больший)

    Пример:
    integrate(lambda s: 2 * s, 0, 1).value == 1.0
    """
    if tol <= 0:
        raise DomainError(f"Допуск должен быть положительным: {tol}")

    if not (math.isfinite(a) and math.isfinite(b)) or a > b:
        raise DomainError(f"Нужны конечные границы a <= b, получено [{a}, {b}]")

    if a == b:
        return QuadResult(value=0.0, error_estimate=0.0, evaluations=0)

    return _quad(f, a, b, tol)


def integrate_to_infinity(
    f: RealFunction,
    a: float,
    tol: float = DEFAULT_TOL,
    decay_rate: float | None = None,
) -> QuadResult:
    """Интеграл f по [a, бесконечность)

    При известной скорости экспоненциального убывания d делается замена
    u = exp(-d (t - a)), и интеграл берётся по (0, 1]. Без неё (алгебраический
    хвост, критический режим) используется бесконечное правило QUADPACK.
    """
    if not math.isfinite(a):
        raise DomainError(f"Левая граница должна быть конечной: {a}")

    if tol <= 0:
        raise DomainError(f"Допуск должен быть положительным: {tol}")

    if decay_rate is None:
        return _quad(f, a, np.inf, tol)

    if decay_rate <= 0:
        raise DomainError(f"Скорость убывания должна быть положительной: {decay_rate}")

    def mapped(u: float) -> float:
        if u <= 0:
            return 0.0
        return f(a - math.log(u) / decay_rate) / (decay_rate * u)

    return _quad(mapped, 0.0, 1.0, tol)


def tail_decay_rate(params: BDParams) -> float | None:
    """Скорость экспоненциального хвоста плотностей процесса; None, если хвост алгебраический"""
    if params.regime == Regime.YULE:
        return params.lam

    if params.net_rate < DECAY_MIN_RATIO * params.lam:
        return None

    return params.net_rate


def invert_monotone_cdf(
    cdf: RealFunction,
    target: float,
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """x на [lo, hi], для которого cdf(x) = target (метод Брента: бисекция и секущие)

    Пример:
    invert_monotone_cdf(lambda x: x, 0.25, 0, 1) == 0.25
    """
    if lo > hi:
        raise DomainError(f"Пустой интервал [{lo}, {hi}]")

    f_lo, f_hi = cdf(lo), cdf(hi)

    if not f_lo - tol <= target <= f_hi + tol:
        raise DomainError(
            f"Значение {target} вне [{f_lo}, {f_hi}] - значений функции на [{lo}, {hi}]"
        )

    if target <= f_lo:
        return lo

    if target >= f_hi:
        return hi

    return brentq(lambda x: cdf(x) - target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def compensated_sum(terms: Iterable[float]) -> tuple[float, float]:
    """Точная сумма (math.fsum) и индекс сокращения sum|t_i| / |sum t_i|

    Пример:
    compensated_sum([1, -1, 2]) == (2.0, 2.0)
    compensated_sum([]) == (0.0, inf)
    """
    terms = list(terms)
    value = math.fsum(terms)

    if value == 0:
        return value, math.inf

    return value, math.fsum(abs(term) for term in terms) / abs(value)
