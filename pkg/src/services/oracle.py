#!/usr/bin/env python3
"""Reference values used to check the solvers.

E_alpha(-x) for x >= 0 is evaluated by the power series near the origin, by
the asymptotic expansion once its smallest term is negligible, and by a
real-axis integral representation in between.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Literal, Union

import numpy as np
from scipy import integrate

from ..domain.cq import validate_order
from ..domain.errors import InvalidConfigurationError

MlMethod = Literal["special-case", "series", "asymptotic", "integral"]

SERIES_LIMIT = 1.0
ASYMPTOTIC_TOL = 1e-13
MAX_TERMS = 2000

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_parts(z: float):
    z -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return z, acc, t


def _is_pole(z: float) -> bool:
    return z <= 0.0 and z == math.floor(z)


def gamma(z: float) -> float:
    """Gamma function by the g=7 Lanczos approximation with reflection."""
    z = float(z)
    if _is_pole(z) or z > 171.6:
        return math.inf
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * gamma(1.0 - z))
    z, acc, t = _lanczos_parts(z)
    half = t ** (0.5 * (z + 0.5))  # t^(z+1/2) alone overflows near z = 143
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * acc


def log_gamma(z: float) -> float:
    """log|Gamma(z)|, valid where gamma(z) would overflow."""
    z = float(z)
    if _is_pole(z):
        return math.inf
    if z < 0.5:
        return math.log(math.pi / abs(math.sin(math.pi * z))) - log_gamma(1.0 - z)
    z, acc, t = _lanczos_parts(z)
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def rgamma(z: float) -> float:
    """1/Gamma(z); zero at the poles."""
    z = float(z)
    if _is_pole(z):
        return 0.0
    if z < 0.5:
        return math.sin(math.pi * z) * gamma(1.0 - z) / math.pi
    return 1.0 / gamma(z)


def _check_args(alpha: float, x: float):
    a = validate_order(alpha)
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise InvalidConfigurationError(f"argument must be finite and >= 0 (evaluates E_alpha(-x)), got {x!r}")
    return a, x


def ml_series(alpha: float, x: float) -> float:
    """sum_k (-x)^k / Gamma(alpha k + 1), summed with math.fsum."""
    alpha, x = _check_args(alpha, x)
    if x == 0.0:
        return 1.0
    log_x = math.log(x)
    terms = [1.0]
    previous = 0.0
    for k in range(1, MAX_TERMS):
        log_mag = k * log_x - log_gamma(alpha * k + 1.0)
        if log_mag < -46.0 and log_mag < previous:
            break
        terms.append((-1.0) ** k * math.exp(log_mag))
        previous = log_mag
    return math.fsum(terms)


def _log_rgamma(z: float):
    """(log|1/Gamma(z)|, sign) for non-pole z."""
    if z < 0.5:
        s = math.sin(math.pi * z)
        return math.log(abs(s)) + log_gamma(1.0 - z) - math.log(math.pi), math.copysign(1.0, s)
    return -log_gamma(z), 1.0


def _asymptotic_terms(alpha: float, x: float):
    """Terms (-1)^{k+1} x^-k / Gamma(1 - alpha k), truncated where the bound x^-k Gamma(alpha k)/pi is smallest.

    The bound is log-convex in k, so the first increase marks its minimum.
    """
    terms = []
    best = math.inf
    log_x = math.log(x)
    for k in range(1, MAX_TERMS):
        ak = alpha * k
        bound = math.exp((0.0 if ak <= 0.5 else log_gamma(ak) - math.log(math.pi)) - k * log_x)
        if bound > best:
            break
        best = bound
        z = 1.0 - ak
        if abs(z - round(z)) < 1e-12 and z < 0.5:
            continue
        log_r, sign = _log_rgamma(z)
        terms.append(sign * math.exp(log_r - k * log_x) * (1.0 if k % 2 else -1.0))
    return terms, best


def ml_asymptotic(alpha: float, x: float) -> float:
    """-sum_k (-x)^-k / Gamma(1 - alpha k), truncated at the smallest term."""
    alpha, x = _check_args(alpha, x)
    if x == 0.0:
        raise InvalidConfigurationError("the asymptotic expansion needs x > 0")
    terms, _ = _asymptotic_terms(alpha, x)
    return math.fsum(terms)


def ml_integral(alpha: float, x: float) -> float:
    """sin(a pi)/(a pi) int_0^inf exp(-(x s)^(1/a)) / (s^2 + 2 s cos(a pi) + 1) ds, for 0 < a < 1."""
    alpha, x = _check_args(alpha, x)
    if alpha == 1.0:
        return math.exp(-x)
    if x == 0.0:
        return 1.0
    c = math.cos(alpha * math.pi)
    inv = 1.0 / alpha

    def _kernel(s: float) -> float:
        return math.exp(-((x * s) ** inv)) / (s * s + 2.0 * s * c + 1.0)

    breaks = sorted({min(1.0 / x, 1.0), 1.0})
    head, _ = integrate.quad(_kernel, 0.0, 2.0, points=breaks, epsabs=1e-14, epsrel=1e-12, limit=400)
    tail, _ = integrate.quad(_kernel, 2.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return math.sin(alpha * math.pi) / (alpha * math.pi) * (head + tail)


@dataclass(frozen=True)
class MlEval:
    alpha: float
    x: float
    value: float
    method: MlMethod


def ml_eval(alpha: float, x: float) -> MlEval:
    alpha, x = _check_args(alpha, x)
    if x == 0.0:
        return MlEval(alpha, x, 1.0, "special-case")
    if alpha == 1.0:
        return MlEval(alpha, x, math.exp(-x), "special-case")
    if x <= SERIES_LIMIT:
        return MlEval(alpha, x, ml_series(alpha, x), "series")
    terms, smallest = _asymptotic_terms(alpha, x)
    if smallest <= ASYMPTOTIC_TOL:
        return MlEval(alpha, x, math.fsum(terms), "asymptotic")
    return MlEval(alpha, x, ml_integral(alpha, x), "integral")


def mittag_leffler_neg(alpha: float, x: float) -> float:
    """E_alpha(-x) for 0 < alpha <= 1 and x >= 0, absolute accuracy about 1e-10."""
    return ml_eval(alpha, x).value


def exact_single_mode(alpha: float, k: int, l: int, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Amplitude E_alpha(-pi^2 (k^2 + l^2) t^alpha) of the mode sin(k pi x) sin(l pi y) with f = 0."""
    if int(k) != k or int(l) != l or k < 1 or l < 1:
        raise InvalidConfigurationError(f"mode indices must be positive integers, got ({k}, {l})")
    lam = math.pi ** 2 * (k * k + l * l)
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0.0):
        raise InvalidConfigurationError("time must be nonnegative")
    values = np.array([mittag_leffler_neg(alpha, lam * s ** alpha) for s in ts.ravel()]).reshape(ts.shape)
    return float(values) if values.ndim == 0 else values


def scalar_mode_exact(alpha: float, lam: float, u0: float, t: float) -> float:
    """u(t) = u0 E_alpha(-lam t^alpha) for d^alpha u + lam u = 0."""
    return float(u0) * mittag_leffler_neg(alpha, lam * float(t) ** alpha)


def closed_form_norms() -> Dict[str, float]:
    return {
        "case_a_l2": 1.0 / 30.0,
        "quarter_disk_area": math.pi / 4.0,
        "ref_triangle_area": 0.5,
        "ref_triangle_x": 1.0 / 6.0,
        "ref_triangle_y": 1.0 / 6.0,
        "ref_triangle_xx": 1.0 / 12.0,
        "ref_triangle_xy": 1.0 / 24.0,
        "ref_triangle_yy": 1.0 / 12.0,
    }
