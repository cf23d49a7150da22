#!/usr/bin/env python3
from __future__ import annotations

import numpy as np
import pytest

from src.domain.config import RunConfig, StudyPlan, TemporalPlan
from src.domain.errors import FixedPointDivergenceError, InvalidConfigurationError
from src.services import harness, oracle


def _plan(**overrides) -> StudyPlan:
    base = RunConfig(case="a", steps=8, final_time=0.05)
    data = {"base": base, "ladder": (4, 8), "ref_mesh": 16, "ref_steps": 8}
    data.update(overrides)
    return StudyPlan(**data)


@pytest.mark.parametrize("alpha,tol", [(0.3, 0.15), (0.5, 0.15), (0.7, 0.15), (1.0, 0.1)])
def test_temporal_rates_are_first_order(alpha: float, tol: float) -> None:
    report = harness.run_temporal_study(alpha, ladder=(64, 128, 256, 512), lam=1.0)
    assert report.study == "temporal"
    assert report.complete
    assert [r.N for r in report.rows] == [64, 128, 256, 512]
    assert report.rows[0].rate_u is None
    for row in report.rows[1:]:
        assert abs(row.rate_u - 1.0) <= tol
    errors = [r.err_u_l2 for r in report.rows]
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_temporal_rates_are_grouped_by_order() -> None:
    report = harness.run_temporal_plan(TemporalPlan(alphas=(0.4, 0.8), ladder=(32, 64), lam=2.0))
    assert [(r.alpha, r.N) for r in report.rows] == [(0.4, 32), (0.4, 64), (0.8, 32), (0.8, 64)]
    assert report.rows[0].rate_u is None and report.rows[2].rate_u is None
    assert report.metadata["lambda"] == 2.0


def test_temporal_mode_uses_laplacian_eigenvalue() -> None:
    report = harness.run_temporal_study(0.5, ladder=(16, 32), lam=None, mode=(1, 2))
    assert report.metadata["lambda"] == pytest.approx(5.0 * np.pi**2)


def test_temporal_ladder_must_increase() -> None:
    with pytest.raises(InvalidConfigurationError):
        harness.run_temporal_study(0.5, ladder=(64, 32))


def test_reference_mesh_defaults_and_overrides() -> None:
    ladder = (8, 16, 32, 64)
    assert StudyPlan(ladder=ladder).resolved_ref_mesh == 128
    assert StudyPlan(ladder=ladder, ref_mesh=256).reference_config().mesh == 256
    with pytest.raises(ValueError, match="not a refinement"):
        StudyPlan(ladder=ladder, ref_mesh=96)


def test_spatial_study_rows_in_ladder_order() -> None:
    report = harness.run_study(_plan())
    assert report.complete
    assert [r.M for r in report.rows] == [4, 8]
    assert report.rows[0].rate_u is None
    assert report.rows[1].rate_u is not None
    assert all(r.err_u_l2 > 0.0 and r.fp_iters_max >= 1 for r in report.rows)
    assert report.rows[0].err_flux_l2 is None
    assert report.metadata["ref_mesh"] == 16
    assert report.metadata["case"] == "a"


def test_mixed_study_reports_flux_error() -> None:
    report = harness.run_study(_plan(base=RunConfig(fem="rt0", case="a", steps=8, final_time=0.05)))
    assert report.complete
    assert all(r.err_flux_l2 is not None for r in report.rows)
    assert report.rows[1].rate_flux is not None


def test_study_is_deterministic() -> None:
    first = harness.run_study(_plan())
    second = harness.run_study(_plan())
    assert [r.err_u_l2 for r in first.rows] == [r.err_u_l2 for r in second.rows]


def test_parallel_study_matches_sequential() -> None:
    sequential = harness.run_study(_plan())
    parallel = harness.run_study(_plan(workers=3))
    assert [r.err_u_l2 for r in parallel.rows] == [r.err_u_l2 for r in sequential.rows]
    assert [r.M for r in parallel.rows] == [4, 8]


@pytest.mark.asyncio
async def test_async_study() -> None:
    report = await harness.run_study_async(_plan(workers=2))
    assert report.complete
    assert [r.M for r in report.rows] == [4, 8]


def test_reference_against_itself_has_zero_error() -> None:
    plan = _plan(ladder=(16,), ref_mesh=16)
    report = harness.run_study(plan)
    assert report.rows[0].err_u_l2 == pytest.approx(0.0, abs=1e-14)


def test_exact_reference_matches_oracle() -> None:
    config = RunConfig(case="manufactured", alpha=0.5, final_time=0.1)
    u, grad = harness.exact_reference(config)
    amp = oracle.exact_single_mode(0.5, 1, 1, 0.1)
    assert u(np.array([0.5]), np.array([0.5]))[0] == pytest.approx(amp)
    g = grad(np.array([0.0]), np.array([0.5]))
    assert g.shape == (1, 2)
    assert g[0, 0] == pytest.approx(np.pi * amp)
    assert g[0, 1] == pytest.approx(0.0, abs=1e-15)


def test_exact_reference_study() -> None:
    base = RunConfig(case="manufactured", steps=64, final_time=0.1)
    report = harness.run_study(StudyPlan(base=base, ladder=(4, 8), reference="exact"))
    assert report.complete
    assert report.rows[1].err_u_l2 < report.rows[0].err_u_l2
    assert "ref_mesh" not in report.metadata


def test_failed_run_is_flagged_and_study_continues(monkeypatch) -> None:
    real_solve = harness.solve

    def flaky(config: RunConfig):
        if config.mesh == 4:
            raise FixedPointDivergenceError("synthetic", step=3, iteration=7)
        return real_solve(config)

    monkeypatch.setattr(harness, "solve", flaky)
    report = harness.run_study(_plan())
    assert not report.complete
    failed, ok = report.rows
    assert failed.failed and "FixedPointDivergenceError" in failed.message
    assert failed.err_u_l2 is None
    assert not ok.failed and ok.err_u_l2 > 0.0
    assert ok.rate_u is None


def test_failed_reference_marks_report(monkeypatch) -> None:
    real_solve = harness.solve

    def flaky(config: RunConfig):
        if config.mesh == 16:
            raise FixedPointDivergenceError("synthetic", step=1, iteration=2)
        return real_solve(config)

    monkeypatch.setattr(harness, "solve", flaky)
    report = harness.run_study(_plan())
    assert report.metadata["reference_failed"] is True
    assert not report.complete
    assert all(r.failed and "reference unavailable" in r.message for r in report.rows)
