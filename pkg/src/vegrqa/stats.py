"""
Two-sample t-tests with a self-contained Student-t tail.

The two-sided p-value is ``I_{df/(df+t^2)}(df/2, 1/2)``, with the regularized
incomplete beta function evaluated by the modified Lentz continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ParameterError

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10000


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``, ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ParameterError("betainc requires a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"betainc requires 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the continued fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t."""
    if not df > 0:
        raise ParameterError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, betainc_regularized(0.5 * df, 0.5, x)))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float
    degenerate_variance: bool = False


def _mean_var(xs: Sequence[float]):
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return n, mean, var


def _check(a, b):
    a, b = [float(v) for v in a], [float(v) for v in b]
    if len(a) < 2 or len(b) < 2:
        raise ParameterError("each sample needs at least 2 values")
    if not all(math.isfinite(v) for v in a + b):
        raise ParameterError("samples must be finite")
    return a, b


def _degenerate(ma, mb, df) -> TTestResult:
    if ma == mb:
        return TTestResult(0.0, df, 1.0, True)
    return TTestResult(math.copysign(math.inf, ma - mb), df, 0.0, True)


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance t-test, two-sided.

    ``df`` follows Welch-Satterthwaite. When both samples have zero
    variance the statistic is 0 (equal means, ``p = 1``) or infinite
    (``p = 0``), flagged by ``degenerate_variance``.
    """
    a, b = _check(a, b)
    na, ma, va = _mean_var(a)
    nb, mb, vb = _mean_var(b)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        return _degenerate(ma, mb, float(na + nb - 2))
    t = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    return TTestResult(t, df, student_t_sf2(t, df))


def pooled_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Classical Student two-sample t-test with pooled variance."""
    a, b = _check(a, b)
    na, ma, va = _mean_var(a)
    nb, mb, vb = _mean_var(b)
    df = float(na + nb - 2)
    sp2 = ((na - 1) * va + (nb - 1) * vb) / df
    se2 = sp2 * (1.0 / na + 1.0 / nb)
    if se2 == 0.0:
        return _degenerate(ma, mb, df)
    t = (ma - mb) / math.sqrt(se2)
    return TTestResult(t, df, student_t_sf2(t, df))
