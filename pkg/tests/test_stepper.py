#!/usr/bin/env python3
from __future__ import annotations

import dataclasses
import logging

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.domain import cq, source_terms
from src.domain.config import RunConfig
from src.domain.errors import FixedPointDivergenceError
from src.domain.meshkit import build_uniform_mesh
from src.domain.source_terms import SourceTerm
from src.services.fespace import assemble, nonlinear_load
from src.services.initial_data import project_initial
from src.services.stepper import advance, solve


def _system(kind: str, M: int):
    return assemble(build_uniform_mesh(M), kind)


def _l2(system, u: np.ndarray) -> float:
    return float(np.sqrt(u @ (system.mass @ u)))


def test_constant_preserved_without_stiffness() -> None:
    system = _system("p1", 4)
    frozen = dataclasses.replace(system, stiffness=system.stiffness * 0.0)
    config = RunConfig(case="linear", mesh=4, steps=20, alpha=0.4, linear_solver="direct")
    u0 = np.random.default_rng(0).standard_normal(frozen.descriptor.dof_count_u)
    state = advance(frozen, config, u0)
    assert state.n == 20
    assert np.abs(state.trajectory - u0).max() <= 1e-12 * np.abs(u0).max()


def _classical_be(system, config: RunConfig, u0: np.ndarray) -> np.ndarray:
    """Plain backward Euler with the same Picard loop."""
    tau = config.tau
    source = config.source_term
    out = [u0]
    if system.kind.is_mixed:
        matrix = sp.bmat([[system.flux_mass, system.div_block.T], [system.div_block, -system.mass / tau]], format="csc")
        lu = splu(matrix)
        nf = system.descriptor.dof_count_flux

        def lin(rhs):
            return lu.solve(np.concatenate([np.zeros(nf), -rhs]))[nf:]
    else:
        lu = splu(sp.csc_matrix(system.mass / tau + system.stiffness))

        def lin(rhs):
            return lu.solve(rhs)

    for _ in range(config.steps):
        prev = out[-1]
        known = (1.0 / tau) * (system.mass @ prev)
        if source.is_zero:
            out.append(lin(known))
            continue
        u = prev
        for _ in range(config.fp_max_iters):
            new = lin(known + nonlinear_load(system, u, source))
            delta = np.linalg.norm(new - u)
            u = new
            if delta <= config.fp_tol * np.linalg.norm(new) or delta == 0.0:
                break
        out.append(u)
    return np.array(out)


@pytest.mark.parametrize("kind", ["p1", "rt0"])
@pytest.mark.parametrize("case", ["linear", "a"])
def test_alpha_one_is_backward_euler(kind: str, case: str) -> None:
    system = _system(kind, 8)
    config = RunConfig(alpha=1.0, case=case, fem=kind, mesh=8, steps=12, linear_solver="direct")
    u0 = project_initial(system, config)
    state = advance(system, config, u0)
    reference = _classical_be(system, config, u0)
    assert np.abs(state.trajectory - reference).max() <= 1e-12


def test_single_mode_tracks_scalar_problem() -> None:
    system = _system("p1", 8)
    lam_all, vecs = scipy.linalg.eigh(system.stiffness.toarray(), system.mass.toarray())
    lam, v = lam_all[0], vecs[:, 0]
    config = RunConfig(case="linear", mesh=8, steps=64, alpha=0.5, final_time=0.1, linear_solver="direct")
    state = advance(system, config, v)
    amplitudes = state.trajectory @ (system.mass @ v)
    expected = cq.scalar_fode_solve(0.5, lam, 1.0, 0.1, 64)
    assert np.abs(amplitudes - expected).max() <= 1e-8
    assert _l2(system, state.current) <= _l2(system, v)
    assert lam == pytest.approx(2.0 * np.pi**2, rel=0.1)


def test_mixed_constraint_residual_every_step() -> None:
    system = _system("rt0", 8)
    config = RunConfig(fem="rt0", case="a", mesh=8, steps=16)
    state = advance(system, config, project_initial(system, config))
    assert len(state.constraint_residuals) == 16
    assert max(state.constraint_residuals) <= 1e-10


def test_mixed_linear_scheme_dissipates() -> None:
    system = _system("rt0", 8)
    config = RunConfig(fem="rt0", case="linear", mesh=8, steps=32)
    state = advance(system, config, project_initial(system, config))
    norms = [_l2(system, u) for u in state.trajectory]
    assert all(b <= a + 1e-10 for a, b in zip(norms, norms[1:]))


def test_zero_steps_returns_projection() -> None:
    config = RunConfig(mesh=4, steps=0)
    result = solve(config)
    assert result.state.n == 0
    assert np.array_equal(result.state.current, project_initial(result.system, config))
    assert result.fp_iters_max == 0
    assert result.state.step_seconds == []


def test_step_cost_is_timed_and_logged(caplog) -> None:
    with caplog.at_level(logging.DEBUG, logger="src.services.stepper"):
        result = solve(RunConfig(fem="rt0", case="linear", mesh=2, steps=5))
    assert len(result.state.step_seconds) == 5
    assert all(t >= 0.0 for t in result.state.step_seconds)
    assert sum(result.state.step_seconds) <= result.wall_s + 1e-9
    assert "step 5/5: 1 fixed-point iterations in" in caplog.text


@pytest.mark.parametrize("kind", ["p1", "p1nc", "rt0"])
def test_nonlinear_run_stays_bounded(kind: str) -> None:
    result = solve(RunConfig(fem=kind, case="a", mesh=8, steps=32))
    traj = result.state.trajectory
    assert np.all(np.isfinite(traj))
    norms = [_l2(result.system, u) for u in traj]
    # ||U^0|| + ||f(0)|| with f(0) = 1 on the unit square
    assert max(norms) <= 10.0 * (norms[0] + 1.0)
    assert result.wall_s > 0.0
    fe = result.solution
    assert fe(np.array([0.5]), np.array([0.5]))[0] > 0.0


def test_fixed_point_contracts_under_guard() -> None:
    config = RunConfig(case="a", mesh=8, steps=64, linear_solver="direct")
    assert config.contraction_guard <= 0.5
    result = solve(config)
    ratios = [r for r in result.state.update_ratios if r > 0.0]
    assert ratios and max(ratios) < 1.0
    assert result.fp_iters_max <= 25


def test_linearized_variant_single_solve_per_step() -> None:
    result = solve(RunConfig(case="a", mesh=4, steps=8, linearized=True))
    assert result.state.fp_iterations == [1] * 8


def test_divergence_is_detected(monkeypatch, caplog) -> None:
    steep = SourceTerm("steep", lambda u: 1e3 * u + 1.0, lipschitz=1e3)
    monkeypatch.setitem(source_terms.SOURCES, "steep", steep)
    config = RunConfig(case="a", source="steep", mesh=4, steps=4, linear_solver="direct")
    with caplog.at_level(logging.WARNING):
        with pytest.raises(FixedPointDivergenceError) as info:
            solve(config)
    assert "tau^alpha*L" in str(info.value)
    assert info.value.step == 1
    assert "may fail to contract" in caplog.text


def test_cg_and_direct_agree() -> None:
    a = solve(RunConfig(case="a", mesh=8, steps=16, linear_solver="cg"))
    b = solve(RunConfig(case="a", mesh=8, steps=16, linear_solver="direct"))
    assert np.abs(a.state.current - b.state.current).max() <= 1e-9
