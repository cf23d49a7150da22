#!/usr/bin/env python3
from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

CSV_COLUMNS = (
    "fem",
    "case",
    "alpha",
    "M",
    "N",
    "err_u_l2",
    "rate_u",
    "err_flux_l2",
    "rate_flux",
    "err_u_linf",
    "fp_iters_max",
    "wall_s",
)


class ReportRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fem: str
    case: str
    alpha: float
    M: Optional[int] = None
    N: int
    err_u_l2: Optional[float] = None
    rate_u: Optional[float] = None
    err_flux_l2: Optional[float] = None
    rate_flux: Optional[float] = None
    err_u_linf: Optional[float] = None
    fp_iters_max: Optional[int] = None
    wall_s: Optional[float] = None
    failed: bool = False
    message: Optional[str] = None


class ConvergenceReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    study: Literal["spatial", "temporal"] = "spatial"
    metadata: Dict[str, Any] = Field(default_factory=dict)
    rows: List[ReportRow] = Field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not any(r.failed for r in self.rows) and not self.metadata.get("reference_failed", False)

    @property
    def failures(self) -> List[ReportRow]:
        return [r for r in self.rows if r.failed]
