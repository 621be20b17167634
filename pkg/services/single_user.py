"""
Axis intercepts of the capacity region.

With one user frozen at a deterministic symbol the MAC reduces to a binary
single-user channel, whose capacity is found by bisection on the derivative
of the (concave) mutual information.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from services.info_theory import Channel, check_probability, entropy_array

logger = logging.getLogger(__name__)

BISECTION_WIDTH = 1e-12


@dataclass(frozen=True)
class SingleUserResult:
    capacity: float
    p_opt: float
    fixed_other: Optional[int] = None


def _mutual_information(t1: float, t2: float, p: float) -> float:
    q = t2 + p * (t1 - t2)
    value = float(entropy_array(q) - p * entropy_array(t1) - (1.0 - p) * entropy_array(t2))
    return max(value, 0.0)


def _slope(t1: float, t2: float, p: float) -> float:
    q = t2 + p * (t1 - t2)
    return (t1 - t2) * math.log((1.0 - q) / q) - float(entropy_array(t1)) + float(entropy_array(t2))


@lru_cache(maxsize=1024)
def binary_capacity(t1: float, t2: float) -> SingleUserResult:
    """Capacity of X -> Y with Pr[Y=1|X=1] = t1 and Pr[Y=1|X=2] = t2.

    I(X;Y) is concave in p = Pr[X=1] and vanishes at p in {0, 1}, so its
    maximiser is the root of the strictly decreasing derivative on (0, 1).
    """
    t1, t2 = float(t1), float(t2)
    check_probability('t1', t1)
    check_probability('t2', t2)
    if t1 == t2:
        return SingleUserResult(capacity=0.0, p_opt=0.5)

    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_WIDTH:
        mid = 0.5 * (lo + hi)
        if _slope(t1, t2, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    p_opt = 0.5 * (lo + hi)
    return SingleUserResult(capacity=_mutual_information(t1, t2, p_opt), p_opt=p_opt)


def _best_edge(first: SingleUserResult, second: SingleUserResult) -> SingleUserResult:
    if second.capacity > first.capacity:
        return SingleUserResult(second.capacity, second.p_opt, fixed_other=1)
    return SingleUserResult(first.capacity, first.p_opt, fixed_other=0)


def e1(ch: Channel) -> SingleUserResult:
    """Largest rate of user 1 alone; fixed_other is the frozen p2."""
    result = _best_edge(binary_capacity(ch.b, ch.d), binary_capacity(ch.a, ch.c))
    logger.debug("e1", extra={'channel': str(ch), 'capacity': result.capacity})
    return result


def e2(ch: Channel) -> SingleUserResult:
    """Largest rate of user 2 alone; fixed_other is the frozen p1."""
    result = _best_edge(binary_capacity(ch.c, ch.d), binary_capacity(ch.a, ch.b))
    logger.debug("e2", extra={'channel': str(ch), 'capacity': result.capacity})
    return result
