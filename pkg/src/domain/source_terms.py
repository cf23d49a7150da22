#!/usr/bin/env python3
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .errors import InvalidConfigurationError


@dataclass(frozen=True)
class SourceTerm:
    """Semilinear right-hand side f(u) with a declared Lipschitz bound."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    is_zero: bool = False

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.func(u)


def _sqrt1pu2(u: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.square(u))


def _zero(u: np.ndarray) -> np.ndarray:
    return np.zeros_like(u, dtype=float)


def _identity(u: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=float).copy()


SOURCES: Dict[str, SourceTerm] = {
    "sqrt1pu2": SourceTerm("sqrt1pu2", _sqrt1pu2, lipschitz=1.0),
    "zero": SourceTerm("zero", _zero, lipschitz=0.0, is_zero=True),
    "identity": SourceTerm("identity", _identity, lipschitz=1.0),
}


def get_source(name: str) -> SourceTerm:
    try:
        return SOURCES[name]
    except KeyError:
        raise InvalidConfigurationError(f"unknown source term {name!r}; known: {sorted(SOURCES)}") from None
