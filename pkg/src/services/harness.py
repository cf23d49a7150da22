#!/usr/bin/env python3
"""Convergence studies over mesh and time-step ladders."""
from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .. import __version__
from ..domain import cq
from ..domain.config import RunConfig, StudyPlan, TemporalPlan
from ..domain.errors import FracSubError, InvalidConfigurationError
from ..domain.report import ConvergenceReport, ReportRow
from ..utils.rates import observed_rates
from ..utils.timing import Stopwatch
from . import oracle
from .fespace import FeFunction, flux_l2_error, l2_error
from .stepper import RunResult, solve

logger = logging.getLogger(__name__)

Reference = Union[FeFunction, Tuple[Callable, Callable]]


@dataclass
class RunOutcome:
    config: RunConfig
    result: Optional[RunResult] = None
    error: Optional[str] = None


def _safe_solve(config: RunConfig) -> RunOutcome:
    try:
        return RunOutcome(config=config, result=solve(config))
    except FracSubError as exc:
        logger.error("run M=%d N=%d failed: %s", config.mesh, config.steps, exc)
        return RunOutcome(config=config, error=f"{type(exc).__name__}: {exc}")


def exact_reference(config: RunConfig) -> Tuple[Callable, Callable]:
    """Exact u and grad u at the final time for the single-mode problem."""
    k, l = config.mode
    amp = oracle.exact_single_mode(config.alpha, k, l, config.final_time)

    def u(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return amp * np.sin(k * np.pi * x) * np.sin(l * np.pi * y)

    def grad(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        gx = amp * k * np.pi * np.cos(k * np.pi * x) * np.sin(l * np.pi * y)
        gy = amp * l * np.pi * np.sin(k * np.pi * x) * np.cos(l * np.pi * y)
        return np.stack([gx, gy], axis=-1)

    return u, grad


def _metadata(plan: StudyPlan) -> Dict[str, object]:
    base = plan.base
    meta: Dict[str, object] = {
        "alpha": base.alpha,
        "final_time": base.final_time,
        "case": base.case.value,
        "fem": base.fem.value,
        "source": base.source_term.name,
        "steps": base.steps,
        "ladder": list(plan.ladder),
        "reference": plan.reference,
        "linearized": base.linearized,
        "artifact_version": __version__,
    }
    if plan.reference == "refined":
        meta["ref_mesh"] = plan.resolved_ref_mesh
        meta["ref_steps"] = plan.resolved_ref_steps
    return meta


def _row(outcome: RunOutcome, reference: Optional[Reference], reference_error: Optional[str]) -> ReportRow:
    config = outcome.config
    row = ReportRow(fem=config.fem.value, case=config.case.value, alpha=config.alpha, M=config.mesh, N=config.steps)
    if outcome.result is None:
        row.failed, row.message = True, outcome.error
        return row
    result = outcome.result
    row.fp_iters_max = result.fp_iters_max
    row.wall_s = result.wall_s
    if reference is None:
        row.failed, row.message = True, f"reference unavailable: {reference_error}"
        return row
    approx = result.solution
    try:
        if isinstance(reference, FeFunction):
            u_err = l2_error(approx, reference)
            flux_err = flux_l2_error(approx, reference) if config.fem.is_mixed else None
        else:
            u_err = l2_error(approx, reference[0])
            flux_err = flux_l2_error(approx, reference[1]) if config.fem.is_mixed else None
    except FracSubError as exc:
        row.failed, row.message = True, f"{type(exc).__name__}: {exc}"
        return row
    row.err_u_l2 = u_err.l2
    row.err_u_linf = u_err.linf
    if flux_err is not None:
        row.err_flux_l2 = flux_err.l2
    return row


def _assemble_report(plan: StudyPlan, outcomes: Sequence[RunOutcome], reference: Optional[Reference], reference_error: Optional[str]) -> ConvergenceReport:
    rows = [_row(o, reference, reference_error) for o in outcomes]
    ladder = [r.M for r in rows]
    for rate, row in zip(observed_rates(ladder, [r.err_u_l2 for r in rows]), rows):
        row.rate_u = rate
    if plan.base.fem.is_mixed:
        for rate, row in zip(observed_rates(ladder, [r.err_flux_l2 for r in rows]), rows):
            row.rate_flux = rate
    meta = _metadata(plan)
    if reference_error is not None:
        meta["reference_failed"] = True
        meta["reference_error"] = reference_error
    report = ConvergenceReport(study="spatial", metadata=meta, rows=rows)
    if not report.complete:
        logger.warning("study incomplete: %d of %d rows failed", len(report.failures), len(rows))
    return report


def _reference_from(plan: StudyPlan, outcome: Optional[RunOutcome]) -> Tuple[Optional[Reference], Optional[str]]:
    if plan.reference == "exact":
        return exact_reference(plan.base), None
    if outcome.result is None:
        return None, outcome.error
    return outcome.result.solution, None


def run_study(plan: StudyPlan) -> ConvergenceReport:
    """Solve the reference once and every ladder run, then reduce in ladder order."""
    if plan.workers > 1:
        return asyncio.run(run_study_async(plan))
    logger.info("study %s case=%s ladder=%s", plan.base.fem.value, plan.base.case.value, list(plan.ladder))
    ref_outcome = _safe_solve(plan.reference_config()) if plan.reference == "refined" and plan.ladder else None
    reference, ref_error = _reference_from(plan, ref_outcome) if plan.ladder else (None, None)
    outcomes = [_safe_solve(plan.run_config(M)) for M in plan.ladder]
    return _assemble_report(plan, outcomes, reference, ref_error)


async def run_study_async(plan: StudyPlan) -> ConvergenceReport:
    """Same as run_study with runs on a bounded thread pool."""
    logger.info(
        "study %s case=%s ladder=%s (%d workers)", plan.base.fem.value, plan.base.case.value, list(plan.ladder), plan.workers
    )
    semaphore = asyncio.Semaphore(plan.workers)

    async def _guarded(config: RunConfig) -> RunOutcome:
        async with semaphore:
            return await asyncio.to_thread(_safe_solve, config)

    configs: List[RunConfig] = [plan.run_config(M) for M in plan.ladder]
    if plan.reference == "refined" and plan.ladder:
        configs.insert(0, plan.reference_config())
    outcomes = list(await asyncio.gather(*(_guarded(c) for c in configs)))
    ref_outcome = outcomes.pop(0) if plan.reference == "refined" and plan.ladder else None
    reference, ref_error = _reference_from(plan, ref_outcome) if plan.ladder else (None, None)
    return _assemble_report(plan, outcomes, reference, ref_error)


def run_temporal_study(
    alphas: Union[float, Sequence[float]],
    ladder: Sequence[int] = (64, 128, 256, 512),
    lam: Optional[float] = None,
    mode: Optional[Tuple[int, int]] = None,
    final_time: float = 1.0,
    u0: float = 1.0,
) -> ConvergenceReport:
    """Scalar single-mode problem against the Mittag-Leffler solution at the final time.

    The decay rate is ``lam`` or, for a mode (k, l), pi^2 (k^2 + l^2).
    """
    alpha_list = [alphas] if isinstance(alphas, (int, float)) else list(alphas)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise InvalidConfigurationError("time-step ladder must be strictly increasing")
    if lam is None:
        k, l = mode or (1, 1)
        lam = math.pi ** 2 * (k * k + l * l)
    rows: List[ReportRow] = []
    for alpha in alpha_list:
        exact = oracle.scalar_mode_exact(alpha, lam, u0, final_time)
        group: List[ReportRow] = []
        for N in ladder:
            row = ReportRow(fem="scalar", case="mode", alpha=alpha, N=N)
            try:
                with Stopwatch() as clock:
                    u = cq.scalar_fode_solve(alpha, lam, u0, final_time, N)
                row.err_u_l2 = abs(float(u[-1]) - exact)
                row.wall_s = clock.elapsed
                logger.debug("alpha=%g N=%d: history cost %.3fs", alpha, N, clock.elapsed)
            except FracSubError as exc:
                row.failed, row.message = True, f"{type(exc).__name__}: {exc}"
            group.append(row)
        for rate, row in zip(observed_rates(list(ladder), [r.err_u_l2 for r in group]), group):
            row.rate_u = rate
        rows.extend(group)
    meta = {
        "alphas": alpha_list,
        "lambda": lam,
        "final_time": final_time,
        "u0": u0,
        "ladder": list(ladder),
        "reference": "mittag-leffler",
        "artifact_version": __version__,
    }
    return ConvergenceReport(study="temporal", metadata=meta, rows=rows)


def run_temporal_plan(plan: TemporalPlan) -> ConvergenceReport:
    return run_temporal_study(plan.alphas, plan.ladder, lam=plan.lam, mode=plan.mode, final_time=plan.final_time, u0=plan.u0)
