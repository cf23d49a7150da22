#!/usr/bin/env python3
from __future__ import annotations

from enum import Enum
from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import InvalidConfigurationError
from .source_terms import SourceTerm, get_source


class FemKind(str, Enum):
    P1 = "p1"
    P1NC = "p1nc"
    RT0P0 = "rt0"

    @property
    def is_mixed(self) -> bool:
        return self is FemKind.RT0P0

    @property
    def gamma(self) -> int:
        """Expected spatial L2 order for u."""
        return 1 if self is FemKind.RT0P0 else 2


class ProblemCase(str, Enum):
    A = "a"  # u0 = xy(1-x)(1-y)
    B = "b"  # u0 = indicator of the quarter disk
    MANUFACTURED = "manufactured"  # u0 = sin(k pi x) sin(l pi y), f = 0
    LINEAR = "linear"  # case (a) data, f = 0

    @property
    def default_source(self) -> str:
        return "sqrt1pu2" if self in (ProblemCase.A, ProblemCase.B) else "zero"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = 0.5
    final_time: float = 0.1
    steps: int = Field(default=512, ge=0)
    mesh: int = Field(default=8, ge=1)
    fem: FemKind = FemKind.P1
    case: ProblemCase = ProblemCase.A
    source: Optional[str] = None
    mode: Tuple[int, int] = (1, 1)
    fp_tol: float = Field(default=1e-10, gt=0.0)
    fp_max_iters: int = Field(default=50, ge=1)
    linearized: bool = False
    linear_solver: Literal["cg", "direct"] = "cg"
    cg_rtol: float = Field(default=1e-12, gt=0.0)
    keep_flux_history: bool = False

    @field_validator("alpha")
    @classmethod
    def _alpha_in_range(cls, v: float) -> float:
        if not (0.0 < v <= 1.0):
            raise ValueError("order must lie in (0,1]")
        return v

    @field_validator("final_time")
    @classmethod
    def _positive_time(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError("final time must be positive")
        return v

    @field_validator("mode")
    @classmethod
    def _mode_positive(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError("mode indices must be >= 1")
        return v

    @field_validator("source")
    @classmethod
    def _known_source(cls, v: Optional[str]) -> Optional[str]:
        if v is not None:
            get_source(v)
        return v

    @property
    def tau(self) -> float:
        return self.final_time / self.steps if self.steps else self.final_time

    @property
    def source_term(self) -> SourceTerm:
        return get_source(self.source or self.case.default_source)

    @property
    def contraction_guard(self) -> float:
        """tau^alpha * L, the computable stand-in for the solvability restriction."""
        return self.tau ** self.alpha * self.source_term.lipschitz


class StudyPlan(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    base: RunConfig = RunConfig()
    ladder: Tuple[int, ...] = (8, 16, 32, 64)
    ref_mesh: Optional[int] = None
    ref_steps: Optional[int] = None
    reference: Literal["refined", "exact"] = "refined"
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_ladder(self) -> "StudyPlan":
        ladder = self.ladder
        if any(m < 1 for m in ladder):
            raise ValueError("mesh ladder entries must be positive")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("mesh ladder must be strictly increasing")
        if self.reference == "exact" and self.base.case is not ProblemCase.MANUFACTURED:
            raise ValueError("an exact reference is only available for the manufactured case")
        if ladder and self.reference == "refined":
            ref = self.resolved_ref_mesh
            bad = [m for m in ladder if ref % m]
            if bad:
                raise ValueError(f"reference mesh {ref} is not a refinement of {bad}")
        return self

    @property
    def resolved_ref_mesh(self) -> int:
        return self.ref_mesh if self.ref_mesh is not None else 2 * max(self.ladder, default=1)

    @property
    def resolved_ref_steps(self) -> int:
        return self.ref_steps if self.ref_steps is not None else 2 * self.base.steps

    def run_config(self, M: int) -> RunConfig:
        return self.base.model_copy(update={"mesh": M})

    def reference_config(self) -> RunConfig:
        return self.base.model_copy(update={"mesh": self.resolved_ref_mesh, "steps": self.resolved_ref_steps})


def build_model(model: Any, data: Dict[str, Any]):
    """Validate ``data`` into ``model``, converting pydantic errors to the package error type."""
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise InvalidConfigurationError(str(exc)) from exc


class TemporalPlan(BaseModel):
    """Time-step ladder for the scalar single-mode problem."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alphas: Tuple[float, ...] = (0.5,)
    ladder: Tuple[int, ...] = (64, 128, 256, 512)
    lam: Optional[float] = 1.0
    mode: Optional[Tuple[int, int]] = None
    final_time: float = Field(default=1.0, gt=0.0)
    u0: float = 1.0

    @field_validator("alphas")
    @classmethod
    def _orders(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("at least one order is required")
        for a in v:
            if not (0.0 < a <= 1.0):
                raise ValueError("order must lie in (0,1]")
        return v

    @model_validator(mode="after")
    def _check(self) -> "TemporalPlan":
        if any(n < 1 for n in self.ladder):
            raise ValueError("time-step ladder entries must be positive")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("time-step ladder must be strictly increasing")
        if self.lam is not None and not self.lam > 0.0:
            raise ValueError("decay rate must be positive")
        if self.lam is None and self.mode is None:
            raise ValueError("give a decay rate or a mode")
        return self
