#!/usr/bin/env python3
from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from src.adapters.linear_solver import SaddlePointSolver, SpdSolver
from src.domain.errors import LinearSolverError, SingularSystemError
from src.domain.meshkit import build_uniform_mesh
from src.services.fespace import assemble


@pytest.fixture(scope="module")
def stiffness() -> sp.csr_matrix:
    return assemble(build_uniform_mesh(8), "p1").stiffness


def test_cg_and_direct_agree(stiffness) -> None:
    rhs = np.random.default_rng(0).standard_normal(stiffness.shape[0])
    cg = SpdSolver(stiffness, method="cg")
    x = cg.solve(rhs)
    assert cg.iterations > 0
    assert np.allclose(x, SpdSolver(stiffness, method="direct").solve(rhs), rtol=1e-9, atol=1e-12)


def test_cg_iteration_cap_raises(stiffness) -> None:
    rhs = np.random.default_rng(1).standard_normal(stiffness.shape[0])
    solver = SpdSolver(stiffness, method="cg", rtol=1e-14, maxiter=1)
    with pytest.raises(LinearSolverError, match="did not converge"):
        solver.solve(rhs)
    assert solver.iterations <= 1


def test_cg_rejects_nonpositive_diagonal() -> None:
    with pytest.raises(SingularSystemError):
        SpdSolver(-sp.identity(4, format="csr"), method="cg")


def test_direct_rejects_singular_matrix() -> None:
    with pytest.raises(SingularSystemError):
        SpdSolver(sp.csr_matrix((4, 4)), method="direct")


def test_unknown_method() -> None:
    with pytest.raises(ValueError):
        SpdSolver(sp.identity(2, format="csr"), method="gmres")


def test_zero_flux_mass_block_is_singular() -> None:
    ne, nt = 5, 2
    with pytest.raises(SingularSystemError, match="factorization failed"):
        SaddlePointSolver(sp.csr_matrix((ne, ne)), sp.csr_matrix((nt, ne)), sp.csr_matrix((nt, nt)))


def test_saddle_point_solution_satisfies_both_rows() -> None:
    system = assemble(build_uniform_mesh(4), "rt0")
    C = 3.0 * system.mass
    solver = SaddlePointSolver(system.flux_mass, system.div_block, C)
    rng = np.random.default_rng(2)
    f, g = rng.standard_normal(system.flux_mass.shape[0]), rng.standard_normal(C.shape[0])
    sigma, u = solver.solve(f, g)
    assert np.allclose(system.flux_mass @ sigma + system.div_block.T @ u, f, atol=1e-10)
    assert np.allclose(system.div_block @ sigma - C @ u, g, atol=1e-10)
