"""Integer-order Bessel functions of the first kind.

``bessel_j`` uses Miller's downward recurrence normalized with
J_0 + 2 sum_k J_2k = 1, and the ascending series below x = 1. ``log_bessel_j_series`` covers high orders at small
argument, where J_n underflows long before the rates built from it stop
mattering.
"""
from __future__ import annotations

import math

MAX_ORDER = 50
MAX_ARG = 1e3
_BIG = 1e200


def bessel_j(n: int, x: float) -> float:
    if not (isinstance(n, int) or float(n).is_integer()) or not 0 <= n <= MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {n!r}")
    if not 0.0 <= x <= MAX_ARG:
        raise ValueError(f"argument must be in [0, {MAX_ARG:g}], got {x!r}")
    n = int(n)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x < 1.0:
        # 2/x would overflow the recurrence for tiny x; the series converges fast here
        return _series(n, x)

    m = 2 * ((max(n, int(x)) + 20 + int(math.sqrt(40.0 * max(n, x)))) // 2)
    j_next, j = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    two_over_x = 2.0 / x
    for order in range(m, 0, -1):
        j_prev = order * two_over_x * j - j_next
        j_next, j = j, j_prev
        # j now holds the (order-1) value
        if abs(j) > _BIG:
            j /= _BIG
            j_next /= _BIG
            norm /= _BIG
            result /= _BIG
        if order - 1 == n:
            result = j
        if (order - 1) % 2 == 0 and order - 1 > 0:
            norm += 2.0 * j
    norm += j
    return result / norm


def _series(n: int, x: float) -> float:
    q = -0.25 * x * x
    term = total = 1.0
    for m in range(1, 60):
        term *= q / (m * (n + m))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    if n == 0:
        return total
    # log(x) - log 2 rather than log(x/2): x/2 underflows for subnormal x
    lead = n * (math.log(x) - math.log(2.0)) - math.lgamma(n + 1)
    return math.exp(lead) * total


def log_bessel_j_series(n: int, x: float) -> float:
    """ln |J_n(x)| from the ascending series, for x^2 << 4(n+1).

    The series terms alternate; at x < sqrt(n+1) the sum is within a factor
    (1 - x^2/(4(n+1))) of its first term, so no cancellation occurs.
    """
    if n < 0 or x <= 0:
        raise ValueError("need n >= 0 and x > 0")
    if x * x >= n + 1:
        raise ValueError("series form is only used for x^2 < n + 1")
    term, total = 1.0, 1.0
    q = -0.25 * x * x
    for m in range(1, 200):
        term *= q / (m * (n + m))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return n * (math.log(x) - math.log(2.0)) - math.lgamma(n + 1) + math.log(total)
