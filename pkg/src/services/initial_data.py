#!/usr/bin/env python3
"""Initial values u0 and their L2 projections onto the discrete spaces."""
from __future__ import annotations

import logging
from typing import Callable, Tuple, Union

import numpy as np

from ..domain.config import ProblemCase, RunConfig
from ..domain.errors import InvalidConfigurationError
from .cut_cell import indicator_moments
from .fespace import FemSystem, load_vector, moment_load, project_l2

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
InitialSpec = Union[str, ProblemCase, ScalarField]


def case_a(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x * y * (1.0 - x) * (1.0 - y)


def quarter_disk(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x * x + y * y <= 1.0).astype(float)


def sine_mode(k: int, l: int) -> ScalarField:
    def _mode(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sin(k * np.pi * x) * np.sin(l * np.pi * y)

    _mode.__name__ = f"sine_mode_{k}_{l}"
    return _mode


def initial_load(system: FemSystem, u0: InitialSpec, mode: Tuple[int, int] = (1, 1)) -> np.ndarray:
    """Full-numbering vector int u0 phi_i.

    Smooth data use the degree-6 rule; the quarter-disk indicator goes through
    the cut-cell moments so the arc is resolved below element level.
    """
    if callable(u0):
        return load_vector(system, u0)
    try:
        case = ProblemCase(u0)
    except ValueError:
        raise InvalidConfigurationError(f"unknown initial data {u0!r}") from None
    if case is ProblemCase.B:
        return moment_load(system, indicator_moments(system.mesh.corners))
    if case is ProblemCase.MANUFACTURED:
        return load_vector(system, sine_mode(*mode))
    return load_vector(system, case_a)


def project_initial(system: FemSystem, config: RunConfig) -> np.ndarray:
    """U^0 = P_h u0 in the reduced (free dof) numbering."""
    load = initial_load(system, config.case, config.mode)
    coeffs = project_l2(system, load)
    logger.debug("projected initial data %s onto %s (M=%d)", config.case.value, system.kind.value, system.mesh.M)
    return coeffs
