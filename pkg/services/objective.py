"""
Weighted-sum objective Psi(p1, p2) = w1 I(Y;X1) + w2 I(Y;X2|X1), its gradient,
and the auxiliary functions of the reduction to one dimension.

Notation along the p2 axis (p denotes p2 when only p2 varies):
    alpha(p) = b + p (a - b)    Pr[Y=1 | X1=1]
    beta(p)  = d + p (c - d)    Pr[Y=1 | X1=2]
    h1 = H(beta) - H(alpha),  h2 = beta - alpha,  h3 = 1 - beta
so that Pr[Y=2] = h3 + p1 h2 and dI(Y;X1)/dp1 = h1 + h2 ln(1 / (h3 + p1 h2) - 1).

Functions accept floats or numpy arrays. Public scalar entry points raise on
excluded or degenerate points; the ``*_array`` / ``*_values`` variants return
NaN instead so that scans can mask them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from django.conf import settings
from scipy.special import expit

from services.errors import (
    DomainError,
    EvaluationError,
    ExcludedPointError,
    NotThreeParamError,
)
from services.info_theory import (
    ArrayLike,
    Channel,
    InputDist,
    Weights,
    corner_c1,
    entropy_array,
    kl_divergence,
    probability_array,
    scalar_or_array,
)

logger = logging.getLogger(__name__)

TOL_H2: float = float(getattr(settings, 'TOL_H2', 1e-12))


@dataclass(frozen=True)
class ReducedPoint:
    """p2 together with the p1-stationary point f(p2) of Psi."""
    p2: float
    p1_star: float
    in_p2bar: bool


def _alpha(ch: Channel, p: ArrayLike) -> np.ndarray:
    return ch.b + np.asarray(p, dtype=float) * ch.delta1


def _beta(ch: Channel, p: ArrayLike) -> np.ndarray:
    return ch.d + np.asarray(p, dtype=float) * ch.delta2


def _logit(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.log(x) - np.log1p(-x)


def _entropy_slope(x: np.ndarray) -> np.ndarray:
    """H'(x) = ln((1 - x) / x)"""
    return -_logit(x)


def _times(coef: ArrayLike, value: np.ndarray) -> np.ndarray:
    """coef * value with 0 * inf = 0."""
    coef = np.asarray(coef, dtype=float)
    with np.errstate(invalid='ignore'):
        return np.where(coef == 0.0, 0.0, coef * value)


def _require_three_param(ch: Channel) -> None:
    if ch.a != ch.b:
        raise NotThreeParamError(f"channel {ch} has a != b")


def h1(ch: Channel, p2: ArrayLike) -> ArrayLike:
    p2 = probability_array('p2', p2)
    return scalar_or_array(entropy_array(_beta(ch, p2)) - entropy_array(_alpha(ch, p2)))


def h2(ch: Channel, p2: ArrayLike) -> ArrayLike:
    p2 = np.asarray(p2, dtype=float)
    return scalar_or_array(-ch.b + ch.d + p2 * (-ch.a + ch.b + ch.c - ch.d))


def h3(ch: Channel, p2: ArrayLike) -> ArrayLike:
    p2 = np.asarray(p2, dtype=float)
    return scalar_or_array(1.0 - ch.d + p2 * (ch.d - ch.c))


def h4(ch: Channel, p2: ArrayLike) -> ArrayLike:
    """dI(Y;X2|X1)/dp1, which does not depend on p1."""
    p2 = probability_array('p2', p2)
    ha, hb, hc, hd = (entropy_array(t) for t in ch.as_tuple())
    value = (-p2 * ha + (p2 - 1.0) * hb + p2 * hc - (p2 - 1.0) * hd
             + entropy_array(_alpha(ch, p2)) - entropy_array(_beta(ch, p2)))
    return scalar_or_array(value)


def psi(ch: Channel, w: Weights, inp: InputDist) -> float:
    return corner_c1(ch, inp).weighted(w)


def psi_value(ch: Channel, w: Weights, p1: ArrayLike, p2: ArrayLike) -> ArrayLike:
    """Psi by its entropy-difference closed form, without validation.

    p1 may leave [0, 1] (analytic continuation used by phi_hat) as long as
    Pr[Y=1] stays inside [0, 1].
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    alpha, beta = _alpha(ch, p2), _beta(ch, p2)
    h_alpha, h_beta = entropy_array(alpha), entropy_array(beta)
    ha, hb, hc, hd = (entropy_array(t) for t in ch.as_tuple())
    q = p1 * alpha + (1.0 - p1) * beta
    with np.errstate(invalid='ignore'):
        i_y_x1 = entropy_array(q) - p1 * h_alpha - (1.0 - p1) * h_beta
    i_y_x2_x1 = (p1 * (h_alpha - p2 * ha - (1.0 - p2) * hb)
                 + (1.0 - p1) * (h_beta - p2 * hc - (1.0 - p2) * hd))
    return scalar_or_array(w.w1 * i_y_x1 + w.w2 * i_y_x2_x1)


def _dpsi_dp1_values(ch: Channel, w: Weights, p1: ArrayLike, p2: ArrayLike) -> np.ndarray:
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    h2v = np.asarray(h2(ch, p2))
    q = p1 * _alpha(ch, p2) + (1.0 - p1) * _beta(ch, p2)
    log_term = _times(h2v, _logit(q))
    value = w.w1 * (np.asarray(h1(ch, p2)) + log_term) + w.w2 * np.asarray(h4(ch, p2))
    return np.where(np.isfinite(value), value, np.nan)


def _dpsi_dp2_values(ch: Channel, w: Weights, p1: ArrayLike, p2: ArrayLike) -> np.ndarray:
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    alpha, beta = _alpha(ch, p2), _beta(ch, p2)
    q = p1 * alpha + (1.0 - p1) * beta
    dq = p1 * ch.delta1 + (1.0 - p1) * ch.delta2
    slope_alpha = _times(ch.delta1, _entropy_slope(alpha))
    slope_beta = _times(ch.delta2, _entropy_slope(beta))
    ha, hb, hc, hd = (entropy_array(t) for t in ch.as_tuple())
    d_i_y_x1 = _times(dq, _entropy_slope(q)) - p1 * slope_alpha - (1.0 - p1) * slope_beta
    d_i_y_x2_x1 = p1 * (slope_alpha - ha + hb) + (1.0 - p1) * (slope_beta - hc + hd)
    value = w.w1 * d_i_y_x1 + w.w2 * d_i_y_x2_x1
    return np.where(np.isfinite(value), value, np.nan)


def dpsi_dp1(ch: Channel, w: Weights, inp: InputDist) -> float:
    value = float(_dpsi_dp1_values(ch, w, inp.p1, inp.p2))
    if np.isnan(value):
        q = 1.0 - (h3(ch, inp.p2) + inp.p1 * h2(ch, inp.p2))
        raise EvaluationError(
            f"ln(1/(h3 + p1 h2) - 1) undefined: Pr[Y=1]={q!r} at {inp} for channel {ch}")
    return value


def dpsi_dp2(ch: Channel, w: Weights, inp: InputDist) -> float:
    value = float(_dpsi_dp2_values(ch, w, inp.p1, inp.p2))
    if np.isnan(value):
        raise EvaluationError(
            f"H' undefined at a degenerate conditional output at {inp} for channel {ch}")
    return value


def grad_psi(ch: Channel, w: Weights, inp: InputDist) -> Tuple[float, float]:
    return dpsi_dp1(ch, w, inp), dpsi_dp2(ch, w, inp)


def grad_psi_array(ch: Channel, w: Weights, p1: ArrayLike, p2: ArrayLike) -> np.ndarray:
    """Gradient stacked on a leading axis of length 2; NaN where undefined."""
    return np.stack([_dpsi_dp1_values(ch, w, p1, p2), _dpsi_dp2_values(ch, w, p1, p2)])


def _in_p2(ch: Channel, p: np.ndarray) -> np.ndarray:
    return (p > 0.0) & (p < 1.0) & (np.abs(np.asarray(h2(ch, p))) > TOL_H2)


def _require_p2(ch: Channel, p: ArrayLike) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not np.all(_in_p2(ch, p)):
        raise ExcludedPointError(f"p={p!r} is outside P2 for channel {ch}")
    return p


def _reduced_values(ch: Channel, w: Weights, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(inside P2, h, f) with h and f NaN outside P2."""
    p = np.asarray(p, dtype=float)
    inside = _in_p2(ch, p)
    p_safe = np.where(inside, p, 0.5)
    h2v = np.where(inside, h2(ch, p_safe), 1.0)
    h = (-w.ratio * np.asarray(h4(ch, p_safe)) - np.asarray(h1(ch, p_safe))) / h2v
    f = (expit(-h) - np.asarray(h3(ch, p_safe))) / h2v
    return inside, np.where(inside, h, np.nan), np.where(inside, f, np.nan)


def h_fun(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """h(p) = (-(w2/w1) h4(p) - h1(p)) / h2(p)"""
    p = _require_p2(ch, p)
    return scalar_or_array(_reduced_values(ch, w, p)[1])


def f_value(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """f(p) = 1 / ((e^h + 1) h2) - h3 / h2; NaN outside P2."""
    return scalar_or_array(_reduced_values(ch, w, p)[2])


def f_map(ch: Channel, w: Weights, p: float) -> ReducedPoint:
    _require_p2(ch, p)
    p1_star = float(_reduced_values(ch, w, p)[2])
    return ReducedPoint(p2=float(p), p1_star=p1_star, in_p2bar=0.0 < p1_star < 1.0)


def phi_hat_array(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """phi_hat(p) = Psi(f(p), p) on P2, NaN elsewhere."""
    p = np.asarray(p, dtype=float)
    inside, _, f = _reduced_values(ch, w, p)
    value = psi_value(ch, w, np.where(inside, f, 0.5), np.where(inside, p, 0.5))
    return scalar_or_array(np.where(inside, value, np.nan))


def phi_hat(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    p = _require_p2(ch, p)
    return phi_hat_array(ch, w, p)


def delta_fn(a: ArrayLike, c: ArrayLike, d: ArrayLike) -> ArrayLike:
    """delta(a,c,d) = (c-d)(H(d)-H(a)) - (H(c)-H(d))(d-a)"""
    a = probability_array('a', a)
    c = probability_array('c', c)
    d = probability_array('d', d)
    ha, hc, hd = entropy_array(a), entropy_array(c), entropy_array(d)
    return scalar_or_array((c - d) * (hd - ha) - (hc - hd) * (d - a))


def delta_second_a(a: ArrayLike, c: float, d: float) -> ArrayLike:
    a = np.asarray(a, dtype=float)
    if np.any((a <= 0.0) | (a >= 1.0)):
        raise DomainError("the second a-derivative of delta needs a in (0, 1)")
    return scalar_or_array((c - d) * (1.0 / a + 1.0 / (1.0 - a)))


def h_prime(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """First derivative of h for a 3-parameter channel, in its KL-divergence form.

    h'(p) = [D2 (w1 - w2)/w1 D(a || d + p D2) + (w2/w1) delta(a,c,d)] / h2(p)^2
    """
    _require_three_param(ch)
    p = _require_p2(ch, p)
    divergence = np.asarray(kl_divergence(ch.a, np.clip(_beta(ch, p), 0.0, 1.0)))
    numerator = (_times(ch.delta2 * (w.w1 - w.w2) / w.w1, divergence)
                 + w.ratio * delta_fn(ch.a, ch.c, ch.d))
    return scalar_or_array(numerator / np.asarray(h2(ch, p)) ** 2)


def h_double_prime(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """h''(p) = ((w2 - w1)/w1 h1''(p) - 2 D2 h'(p)) / h2(p), 3-parameter channels."""
    _require_three_param(ch)
    p = _require_p2(ch, p)
    beta = _beta(ch, p)
    h1_second = -ch.delta2 ** 2 / (beta * (1.0 - beta))
    value = ((w.w2 - w.w1) / w.w1 * h1_second
             - 2.0 * ch.delta2 * np.asarray(h_prime(ch, w, p))) / np.asarray(h2(ch, p))
    return scalar_or_array(value)


def h4_double_prime(ch: Channel, p: ArrayLike) -> ArrayLike:
    """Second p2-derivative of h4; equals D2^2 / (beta (1 - beta)) when a = b."""
    p = np.asarray(p, dtype=float)
    alpha, beta = _alpha(ch, p), _beta(ch, p)
    with np.errstate(divide='ignore', invalid='ignore'):
        first = _times(ch.delta1 ** 2, -1.0 / (alpha * (1.0 - alpha)))
        second = _times(ch.delta2 ** 2, 1.0 / (beta * (1.0 - beta)))
    return scalar_or_array(first + second)


def phi_hat_prime(ch: Channel, w: Weights, p: ArrayLike) -> ArrayLike:
    """phi_hat'(p) = w1 (1 - f(p)) h2(p) h'(p)"""
    _require_three_param(ch)
    p = _require_p2(ch, p)
    f = np.asarray(f_value(ch, w, p))
    value = w.w1 * (1.0 - f) * np.asarray(h2(ch, p)) * np.asarray(h_prime(ch, w, p))
    return scalar_or_array(value)


def v_fn(ch: Channel, p: ArrayLike) -> ArrayLike:
    """dI(Y;X1)(p1, p)/dp1 at p1 = 1."""
    _require_three_param(ch)
    if not 0.0 < ch.a < 1.0:
        raise DomainError(f"v(p) needs a in (0, 1), channel {ch}")
    p = probability_array('p', p)
    h2v = np.asarray(h2(ch, p))
    log_term = np.log(1.0 / (np.asarray(h3(ch, p)) + h2v) - 1.0)
    return scalar_or_array(np.asarray(h1(ch, p)) + h2v * log_term)


def v_prime(ch: Channel, p: ArrayLike) -> ArrayLike:
    """v'(p) = ln(1/(1-a) - 1) h2'(p) + h1'(p)"""
    _require_three_param(ch)
    if not 0.0 < ch.a < 1.0:
        raise DomainError(f"v'(p) needs a in (0, 1), channel {ch}")
    p = probability_array('p', p)
    h1_slope = _times(ch.delta2, _entropy_slope(_beta(ch, p)))
    return scalar_or_array(np.log(ch.a / (1.0 - ch.a)) * ch.delta2 + h1_slope)
