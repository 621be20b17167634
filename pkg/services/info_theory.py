"""
Information-theoretic primitives for the two-user binary multiple-access channel.

Conventions: symbol 1 of each user is the event X_u = 1 with probability p_u,
the channel is given by a, b, c, d = Pr[Y=1 | x1, x2] for
(x1, x2) = (1,1), (1,2), (2,1), (2,2), and every quantity is in nats.
Entropies use 0 ln 0 = 0 (``scipy.special.entr``), so channel parameters in
{0, 1} are valid inputs here.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Tuple, Union

import numpy as np
from scipy.special import entr, rel_entr

from services.errors import ConsistencyError, DomainError, ParseError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

LN2 = math.log(2.0)
# Entropy differences of size ln 2 lose a few ulps; anything below this is a bug.
NEGATIVE_MI_TOL = 1e-13


def check_probability(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} is not a probability in [0, 1]")


def probability_array(name: str, values: ArrayLike) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise DomainError(f"{name} must lie in [0, 1], got {values!r}")
    return arr


def scalar_or_array(x: np.ndarray) -> ArrayLike:
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class Channel:
    """Transition probabilities Pr[Y=1 | x1, x2] of the (2,2;2)-MAC."""
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        for name in ('a', 'b', 'c', 'd'):
            value = float(getattr(self, name))
            check_probability(name, value)
            object.__setattr__(self, name, value)

    @property
    def delta1(self) -> float:
        return self.a - self.b

    @property
    def delta2(self) -> float:
        return self.c - self.d

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __str__(self) -> str:
        return f"({self.a:.6g}, {self.b:.6g}, {self.c:.6g}, {self.d:.6g})"


@dataclass(frozen=True)
class InputDist:
    """Per-user probabilities of sending symbol 1; q_u = (p_u, 1 - p_u)."""
    p1: float
    p2: float

    def __post_init__(self) -> None:
        for name in ('p1', 'p2'):
            value = float(getattr(self, name))
            check_probability(name, value)
            object.__setattr__(self, name, value)

    def swapped(self) -> 'InputDist':
        return InputDist(self.p2, self.p1)


@dataclass(frozen=True)
class Weights:
    w1: float
    w2: float

    def __post_init__(self) -> None:
        for name in ('w1', 'w2'):
            value = float(getattr(self, name))
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"weight {name}={value!r} must be positive")
            object.__setattr__(self, name, value)

    @property
    def ratio(self) -> float:
        """w2 / w1"""
        return self.w2 / self.w1

    def swapped(self) -> 'Weights':
        return Weights(self.w2, self.w1)


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self) -> None:
        for name in ('r1', 'r2'):
            value = float(getattr(self, name))
            if not (0.0 <= value <= LN2 + 1e-12):
                raise DomainError(f"rate {name}={value!r} outside [0, ln 2]")
            object.__setattr__(self, name, value)

    def weighted(self, w: Weights) -> float:
        return w.w1 * self.r1 + w.w2 * self.r2

    def swapped(self) -> 'RatePair':
        return RatePair(self.r2, self.r1)

    @property
    def total(self) -> float:
        return self.r1 + self.r2


def binary_entropy(p: ArrayLike) -> ArrayLike:
    """H(p) = -p ln p - (1-p) ln(1-p) in nats."""
    arr = probability_array('p', p)
    return scalar_or_array(entr(arr) + entr(1.0 - arr))


def kl_divergence(p: ArrayLike, q: ArrayLike) -> ArrayLike:
    """D(p||q) between Bernoulli(p) and Bernoulli(q); +inf when q in {0,1} and p != q."""
    p_arr = probability_array('p', p)
    q_arr = probability_array('q', q)
    value = rel_entr(p_arr, q_arr) + rel_entr(1.0 - p_arr, 1.0 - q_arr)
    return scalar_or_array(np.maximum(value, 0.0))


def entropy_array(x: ArrayLike) -> np.ndarray:
    # Unvalidated kernel; callers guarantee x in [0, 1].
    x = np.asarray(x, dtype=float)
    return entr(x) + entr(1.0 - x)


def output_probability(ch: Channel, p1: ArrayLike, p2: ArrayLike) -> ArrayLike:
    """Pr[Y=1] as a bilinear form in (p1, p2); accepts arrays."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    value = (p1 * p2 * ch.a + p1 * (1.0 - p2) * ch.b
             + (1.0 - p1) * p2 * ch.c + (1.0 - p1) * (1.0 - p2) * ch.d)
    return scalar_or_array(value)


def prob_y1(ch: Channel, inp: InputDist) -> float:
    return output_probability(ch, inp.p1, inp.p2)


class EntropyTerms(NamedTuple):
    h_y: np.ndarray
    h_y_given_x1: np.ndarray
    h_y_given_x2: np.ndarray
    h_y_given_x1x2: np.ndarray


def entropy_terms(ch: Channel, p1: ArrayLike, p2: ArrayLike) -> EntropyTerms:
    """H(Y), H(Y|X1), H(Y|X2), H(Y|X1,X2) on binary alphabets; accepts arrays."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    alpha = ch.b + p2 * ch.delta1            # Pr[Y=1 | X1=1]
    beta = ch.d + p2 * ch.delta2             # Pr[Y=1 | X1=2]
    gamma = ch.c + p1 * (ch.a - ch.c)        # Pr[Y=1 | X2=1]
    eta = ch.d + p1 * (ch.b - ch.d)          # Pr[Y=1 | X2=2]
    q = p1 * alpha + (1.0 - p1) * beta
    h_abcd = [entropy_array(t) for t in ch.as_tuple()]
    h_y_x1x2 = (p1 * p2 * h_abcd[0] + p1 * (1.0 - p2) * h_abcd[1]
                + (1.0 - p1) * p2 * h_abcd[2] + (1.0 - p1) * (1.0 - p2) * h_abcd[3])
    return EntropyTerms(
        h_y=entropy_array(q),
        h_y_given_x1=p1 * entropy_array(alpha) + (1.0 - p1) * entropy_array(beta),
        h_y_given_x2=p2 * entropy_array(gamma) + (1.0 - p2) * entropy_array(eta),
        h_y_given_x1x2=h_y_x1x2,
    )


def _clamp_mi(value: np.ndarray, label: str) -> ArrayLike:
    value = np.asarray(value, dtype=float)
    if np.any(value < -NEGATIVE_MI_TOL):
        raise ConsistencyError(f"{label} evaluated to {np.min(value)!r} < 0")
    return scalar_or_array(np.maximum(value, 0.0))


def mi_y_x1(ch: Channel, inp: InputDist) -> float:
    t = entropy_terms(ch, inp.p1, inp.p2)
    return _clamp_mi(t.h_y - t.h_y_given_x1, 'I(Y;X1)')


def mi_y_x2(ch: Channel, inp: InputDist) -> float:
    t = entropy_terms(ch, inp.p1, inp.p2)
    return _clamp_mi(t.h_y - t.h_y_given_x2, 'I(Y;X2)')


def mi_y_x2_given_x1(ch: Channel, inp: InputDist) -> float:
    t = entropy_terms(ch, inp.p1, inp.p2)
    return _clamp_mi(t.h_y_given_x1 - t.h_y_given_x1x2, 'I(Y;X2|X1)')


def mi_y_x1_given_x2(ch: Channel, inp: InputDist) -> float:
    t = entropy_terms(ch, inp.p1, inp.p2)
    return _clamp_mi(t.h_y_given_x2 - t.h_y_given_x1x2, 'I(Y;X1|X2)')


def mi_joint(ch: Channel, inp: InputDist) -> float:
    t = entropy_terms(ch, inp.p1, inp.p2)
    return _clamp_mi(t.h_y - t.h_y_given_x1x2, 'I(X1,X2;Y)')


def corner_c1(ch: Channel, inp: InputDist) -> RatePair:
    """C1 = (I(Y;X1), I(Y;X2|X1)): user 1 decoded first."""
    return RatePair(mi_y_x1(ch, inp), mi_y_x2_given_x1(ch, inp))


def corner_c2(ch: Channel, inp: InputDist) -> RatePair:
    """C2 = (I(Y;X1|X2), I(Y;X2)): user 2 decoded first."""
    return RatePair(mi_y_x1_given_x2(ch, inp), mi_y_x2(ch, inp))


def corner_c1_values(ch: Channel, p1: ArrayLike, p2: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """Vectorised C1 map over input grids."""
    t = entropy_terms(ch, p1, p2)
    return (_clamp_mi(t.h_y - t.h_y_given_x1, 'I(Y;X1)'),
            _clamp_mi(t.h_y_given_x1 - t.h_y_given_x1x2, 'I(Y;X2|X1)'))


def swap_users(ch: Channel) -> Channel:
    """Exchange the roles of the users: (a, b, c, d) -> (a, c, b, d)."""
    return Channel(ch.a, ch.c, ch.b, ch.d)


def to_bits(value: ArrayLike) -> ArrayLike:
    return value / LN2


def parse_probability(text: str) -> float:
    """Decimal literal or exact rational 'n/m', checked against [0, 1] before rounding."""
    raw = str(text).strip()
    try:
        exact = Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"cannot parse probability {raw!r}") from exc
    if not (0 <= exact <= 1):
        raise ParseError(f"probability {raw!r} outside [0, 1]")
    return float(exact)


def parse_channel(text: str) -> Channel:
    """'a,b,c,d' with each field a decimal or 'n/m'."""
    fields = [f for f in str(text).split(',')]
    if len(fields) != 4:
        raise ParseError(f"channel needs four fields a,b,c,d, got {text!r}")
    return Channel(*(parse_probability(f) for f in fields))


def parse_weights(text: str) -> Weights:
    fields = str(text).split(',')
    if len(fields) != 2:
        raise ParseError(f"weights need two fields w1,w2, got {text!r}")
    values = []
    for field in fields:
        try:
            exact = Fraction(field.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse weight {field!r}") from exc
        if exact <= 0:
            raise ParseError(f"weight {field!r} must be positive")
        values.append(float(exact))
    return Weights(*values)
