"""Paired Student t-test with a self-contained t distribution.

The two-tailed tail probability of Student's t with ``df`` degrees of
freedom is ``I_x(df/2, 1/2)`` with ``x = df / (df + t**2)``, where ``I`` is
the regularised incomplete beta function, evaluated here with the modified
Lentz continued fraction.
"""

import math

import numpy as np

from .metrics import ParameterError

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 500


def _betacf(a, b, x):
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
    """``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ParameterError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    # the fraction converges fast only on the side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ParameterError("df must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    half = 0.5 * t_two_tailed_p(t, df)
    return 1.0 - half if t > 0 else half


def paired_t_statistic(a, b):
    """Return ``(t, df)`` for the paired differences ``a - b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ParameterError(f"paired samples need equal 1-D shapes, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ParameterError("paired t-test needs at least 2 pairs")
    diff = a - b
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0.0:
        return (0.0 if mean == 0.0 else math.copysign(math.inf, mean)), n - 1
    return float(mean / (sd / math.sqrt(n))), n - 1


def paired_t_test(a, b) -> float:
    """Two-tailed p-value of the paired t-test.

    Identical samples give 1.0; a constant non-zero difference has zero
    spread and gives 0.0.
    """
    t, df = paired_t_statistic(a, b)
    return t_two_tailed_p(t, df)
