#!/usr/bin/env python3
"""Backward Euler convolution quadrature for fractional powers.

The discrete fractional derivative of a history v^0..v^n is
tau^-alpha * sum_j b_{n-j} v^j with b_j the coefficients of (1 - xi)^alpha.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidConfigurationError


@dataclass(frozen=True, eq=False)
class CqWeights:
    alpha: float
    tau: float
    b: np.ndarray  # b_0..b_N
    partial_sums: np.ndarray  # s_n = b_0 + ... + b_n

    @property
    def N(self) -> int:
        return int(self.b.shape[0]) - 1

    @property
    def scale(self) -> float:
        """tau^-alpha"""
        return float(self.tau ** (-self.alpha))


def validate_order(alpha: float) -> float:
    a = float(alpha)
    if not np.isfinite(a) or a <= 0.0 or a > 1.0:
        raise InvalidConfigurationError(f"fractional order must lie in (0, 1], got {alpha!r}")
    return a


def binomial_weights(exponent: float, N: int) -> np.ndarray:
    """Coefficients of (1 - xi)^exponent up to xi^N via the multiplicative recurrence."""
    if N < 0:
        raise InvalidConfigurationError(f"history length must be nonnegative, got {N}")
    out = np.empty(N + 1)
    out[0] = 1.0
    for j in range(1, N + 1):
        out[j] = out[j - 1] * ((j - 1 - exponent) / j)
    return out


def weights(alpha: float, N: int, tau: float) -> CqWeights:
    a = validate_order(alpha)
    t = float(tau)
    if not np.isfinite(t) or t <= 0.0:
        raise InvalidConfigurationError(f"time step must be positive, got {tau!r}")
    b = binomial_weights(a, int(N))
    sums = np.cumsum(b)
    b.setflags(write=False)
    sums.setflags(write=False)
    return CqWeights(alpha=a, tau=t, b=b, partial_sums=sums)


def dual_weights(alpha: float, N: int) -> np.ndarray:
    """Weights q_j of (1 - xi)^-alpha, the discrete fractional integral."""
    return binomial_weights(-validate_order(alpha), N)


def _stack_history(history: Sequence[np.ndarray]) -> np.ndarray:
    if len(history) == 0:
        raise DimensionMismatchError("history must contain at least v^0")
    rows = [np.atleast_1d(np.asarray(v, dtype=float)) for v in history]
    shape = rows[0].shape
    for j, r in enumerate(rows):
        if r.shape != shape:
            raise DimensionMismatchError(f"history entry {j} has shape {r.shape}, expected {shape}")
    return np.stack(rows)


def caputo_apply(w: CqWeights, history: Sequence[np.ndarray]) -> np.ndarray:
    """tau^-alpha * sum_{j=0}^n b_{n-j} (v^j - v^0) for the last index n of history."""
    H = _stack_history(history)
    n = H.shape[0] - 1
    if n > w.N:
        raise DimensionMismatchError(f"history index {n} exceeds weight length N={w.N}")
    coeff = w.b[n::-1]
    return w.scale * (coeff @ (H - H[0]))


def history_term(w: CqWeights, u0: np.ndarray, past: np.ndarray, n: int) -> np.ndarray:
    """Known part of the step-n equation: s_{n-1} U^0 - sum_{j=1}^{n-1} b_{n-j} U^j.

    ``past`` holds U^1..U^{n-1} as rows (it may be longer; extra rows are ignored).
    """
    acc = w.partial_sums[n - 1] * u0
    if n > 1:
        acc = acc - w.b[n - 1:0:-1] @ past[: n - 1]
    return acc


def scalar_fode_solve(alpha: float, lam: float, u0: float, T: float, N: int) -> np.ndarray:
    """Backward Euler CQ for d^alpha u + lam*u = 0 (Caputo); returns u^0..u^N."""
    if not lam > 0.0:
        raise InvalidConfigurationError(f"decay rate must be positive, got {lam!r}")
    if int(N) < 1:
        raise InvalidConfigurationError(f"number of steps must be >= 1, got {N!r}")
    if not T > 0.0:
        raise InvalidConfigurationError(f"final time must be positive, got {T!r}")
    w = weights(alpha, int(N), T / int(N))
    scale = w.scale
    u = np.empty(w.N + 1)
    u[0] = float(u0)
    denom = scale * w.b[0] + lam
    for n in range(1, w.N + 1):
        rhs = w.partial_sums[n - 1] * u[0]
        if n > 1:
            rhs -= w.b[n - 1:0:-1] @ u[1:n]
        u[n] = scale * rhs / denom
    return u


def inspect_rows(alpha: float, K: int) -> List[tuple]:
    """(j, b_j, s_j) rows for the first K+1 weights."""
    b = binomial_weights(validate_order(alpha), int(K))
    s = np.cumsum(b)
    return [(j, float(b[j]), float(s[j])) for j in range(b.shape[0])]
