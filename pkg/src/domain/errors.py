#!/usr/bin/env python3
from __future__ import annotations

from typing import Optional


class FracSubError(Exception):
    """Base class for every error raised by the solver package."""


class InvalidConfigurationError(FracSubError, ValueError):
    pass


class DimensionMismatchError(FracSubError, ValueError):
    pass


class NonNestedMeshError(FracSubError, ValueError):
    pass


class QuadratureError(FracSubError, RuntimeError):
    pass


class SingularSystemError(FracSubError, RuntimeError):
    pass


class LinearSolverError(FracSubError, RuntimeError):
    pass


class NonFiniteValueError(FracSubError, FloatingPointError):
    pass


class ReportWriteError(FracSubError, OSError):
    pass


class FixedPointDivergenceError(FracSubError, RuntimeError):
    def __init__(self, message: str, step: int, iteration: int, contraction_guard: Optional[float] = None) -> None:
        self.step = step
        self.iteration = iteration
        self.contraction_guard = contraction_guard
        detail = f"step n={step}, iteration k={iteration}"
        if contraction_guard is not None:
            detail += f", tau^alpha*L={contraction_guard:.3e}"
        super().__init__(f"{message} ({detail})")


class OutsideDomainError(FracSubError, ValueError):
    pass
