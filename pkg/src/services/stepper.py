#!/usr/bin/env python3
"""Backward Euler CQ time stepping for the primal and mixed schemes.

Step n solves, with s_n the partial sums of the CQ weights,

    (tau^-alpha b_0 M + A) U^n = tau^-alpha M (s_{n-1} U^0 - sum_{j=1}^{n-1} b_{n-j} U^j) + F(U^n)

where A is the stiffness matrix (primal) or the Schur complement of the flux
block (mixed). The implicit F(U^n) is resolved by Picard iteration started at
U^{n-1}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..adapters.linear_solver import SaddlePointSolver, SpdSolver
from ..domain import cq
from ..domain.config import RunConfig
from ..domain.errors import FixedPointDivergenceError, NonFiniteValueError
from ..domain.meshkit import build_uniform_mesh
from ..domain.source_terms import SourceTerm
from ..utils.timing import Stopwatch
from .fespace import FemSystem, FeFunction, assemble, nonlinear_load
from .initial_data import project_initial

logger = logging.getLogger(__name__)

GROWTH_LIMIT = 3

LinearSolve = Callable[[np.ndarray, Optional[np.ndarray]], Tuple[np.ndarray, Optional[np.ndarray]]]


@dataclass
class RunState:
    config: RunConfig
    weights: cq.CqWeights
    history: np.ndarray  # rows U^0..U^N, filled up to row n
    solve_linear: LinearSolve
    n: int = 0
    flux: Optional[np.ndarray] = None
    flux_history: List[np.ndarray] = field(default_factory=list)
    fp_iterations: List[int] = field(default_factory=list)
    update_ratios: List[float] = field(default_factory=list)  # max ||d^{k+1}||/||d^k|| per step
    constraint_residuals: List[float] = field(default_factory=list)
    step_seconds: List[float] = field(default_factory=list)

    @property
    def current(self) -> np.ndarray:
        return self.history[self.n]

    @property
    def trajectory(self) -> np.ndarray:
        return self.history[: self.n + 1]

    @property
    def fp_iters_max(self) -> int:
        return max(self.fp_iterations, default=0)


@dataclass
class RunResult:
    config: RunConfig
    system: FemSystem
    state: RunState
    wall_s: float

    @property
    def solution(self) -> FeFunction:
        return FeFunction.from_reduced(self.system, self.state.current, flux=self.state.flux)

    @property
    def fp_iters_max(self) -> int:
        return self.state.fp_iters_max


def _primal_solver(system: FemSystem, config: RunConfig, w: cq.CqWeights) -> LinearSolve:
    matrix = w.scale * w.b[0] * system.mass + system.stiffness
    solver = SpdSolver(matrix, method=config.linear_solver, rtol=config.cg_rtol)

    def _solve(rhs: np.ndarray, guess: Optional[np.ndarray]):
        return solver.solve(rhs, x0=guess), None

    return _solve


def _mixed_solver(system: FemSystem, w: cq.CqWeights) -> LinearSolve:
    solver = SaddlePointSolver(system.flux_mass, system.div_block, w.scale * w.b[0] * system.mass)
    zero_flux = np.zeros(system.descriptor.dof_count_flux)

    def _solve(rhs: np.ndarray, guess: Optional[np.ndarray]):
        flux, u = solver.solve(zero_flux, -rhs)
        return u, flux

    return _solve


def init_state(system: FemSystem, config: RunConfig, u0: np.ndarray) -> RunState:
    w = cq.weights(config.alpha, config.steps, config.tau)
    u0 = np.asarray(u0, dtype=float)
    if not np.all(np.isfinite(u0)):
        raise NonFiniteValueError("initial coefficients are not finite")
    history = np.zeros((config.steps + 1, u0.shape[0]))
    history[0] = u0
    solve_linear = _mixed_solver(system, w) if system.kind.is_mixed else _primal_solver(system, config, w)
    return RunState(config=config, weights=w, history=history, solve_linear=solve_linear)


def _known_rhs(state: RunState, system: FemSystem, n: int) -> np.ndarray:
    w = state.weights
    combo = cq.history_term(w, state.history[0], state.history[1:], n)
    return w.scale * (system.mass @ combo)


def _picard(state: RunState, system: FemSystem, n: int, known: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray], int, float]:
    config = state.config
    source: SourceTerm = config.source_term
    previous = state.history[n - 1]
    if source.is_zero:
        u, flux = state.solve_linear(known, previous)
        return u, flux, 1, 0.0
    if config.linearized:
        u, flux = state.solve_linear(known + nonlinear_load(system, previous, source), previous)
        return u, flux, 1, 0.0

    u = previous
    last_delta: Optional[float] = None
    growth = 0
    worst_ratio = 0.0
    for k in range(1, config.fp_max_iters + 1):
        new, flux = state.solve_linear(known + nonlinear_load(system, u, source), u)
        delta = float(np.linalg.norm(new - u))
        if last_delta is not None and last_delta > 0.0:
            ratio = delta / last_delta
            worst_ratio = max(worst_ratio, ratio)
            growth = growth + 1 if ratio > 1.0 else 0
        u = new
        if delta <= config.fp_tol * float(np.linalg.norm(new)) or delta == 0.0:
            return u, flux, k, worst_ratio
        if growth >= GROWTH_LIMIT:
            raise FixedPointDivergenceError(
                f"fixed-point update grew for {GROWTH_LIMIT} consecutive iterations",
                step=n,
                iteration=k,
                contraction_guard=config.contraction_guard,
            )
        last_delta = delta
    raise FixedPointDivergenceError(
        f"fixed-point iteration did not reach tolerance {config.fp_tol:.1e} in {config.fp_max_iters} iterations",
        step=n,
        iteration=config.fp_max_iters,
        contraction_guard=config.contraction_guard,
    )


def _record(state: RunState, n: int, u: np.ndarray, flux: Optional[np.ndarray], iters: int, ratio: float) -> RunState:
    if not np.all(np.isfinite(u)) or (flux is not None and not np.all(np.isfinite(flux))):
        raise NonFiniteValueError(f"non-finite coefficients at step n={n}")
    state.history[n] = u
    state.n = n
    state.fp_iterations.append(iters)
    state.update_ratios.append(ratio)
    if flux is not None:
        state.flux = flux
        if state.config.keep_flux_history:
            state.flux_history.append(flux)
    return state


def _check_step(state: RunState, n: int) -> None:
    if n < 1 or n > state.weights.N:
        raise ValueError(f"step index {n} outside 1..{state.weights.N}")
    if state.n != n - 1:
        raise ValueError(f"step {n} requested but the state holds U^0..U^{state.n}")


def step_primal(state: RunState, system: FemSystem, n: int) -> RunState:
    _check_step(state, n)
    u, _, iters, ratio = _picard(state, system, n, _known_rhs(state, system, n))
    return _record(state, n, u, None, iters, ratio)


def step_mixed(state: RunState, system: FemSystem, n: int) -> RunState:
    _check_step(state, n)
    u, flux, iters, ratio = _picard(state, system, n, _known_rhs(state, system, n))
    residual = float(np.linalg.norm(system.flux_mass @ flux + system.div_block.T @ u))
    state.constraint_residuals.append(residual)
    return _record(state, n, u, flux, iters, ratio)


def advance(system: FemSystem, config: RunConfig, u0: np.ndarray) -> RunState:
    """Run steps 1..N from the given U^0 on an assembled system."""
    if config.contraction_guard >= 1.0:
        logger.warning(
            "tau^alpha*L = %.3e >= 1; the fixed-point iteration may fail to contract", config.contraction_guard
        )
    state = init_state(system, config, u0)
    step = step_mixed if system.kind.is_mixed else step_primal
    with Stopwatch() as clock:
        for n in range(1, config.steps + 1):
            step(state, system, n)
            state.step_seconds.append(clock.lap())
            logger.debug(
                "step %d/%d: %d fixed-point iterations in %.4fs", n, config.steps, state.fp_iterations[-1], state.step_seconds[-1]
            )
    return state


def solve(config: RunConfig) -> RunResult:
    """Assemble, project the initial data and advance to the final time."""
    logger.info(
        "run %s case=%s alpha=%g M=%d N=%d", config.fem.value, config.case.value, config.alpha, config.mesh, config.steps
    )
    with Stopwatch() as clock:
        system = assemble(build_uniform_mesh(config.mesh), config.fem)
        u0 = project_initial(system, config)
        state = advance(system, config, u0)
    logger.info("finished M=%d N=%d in %.2fs (max %d fixed-point iterations)", config.mesh, config.steps, clock.elapsed, state.fp_iters_max)
    return RunResult(config=config, system=system, state=state, wall_s=clock.elapsed)
