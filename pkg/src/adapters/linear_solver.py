#!/usr/bin/env python3
from __future__ import annotations

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from ..domain.errors import LinearSolverError, SingularSystemError

logger = logging.getLogger(__name__)


class SpdSolver:
    """Solver for a fixed SPD matrix: Jacobi-preconditioned CG or a cached sparse LU."""

    def __init__(self, matrix: sp.spmatrix, method: str = "cg", rtol: float = 1e-12, maxiter: Optional[int] = None) -> None:
        self.matrix = sp.csr_matrix(matrix)
        self.method = method
        self.rtol = rtol
        n = self.matrix.shape[0]
        self.maxiter = maxiter or max(10 * n, 1000)
        self.iterations = 0
        self._lu = None
        self._precond: Optional[LinearOperator] = None
        if n == 0:
            return
        if method == "direct":
            self._lu = _factorize(self.matrix)
        elif method == "cg":
            diag = self.matrix.diagonal()
            if np.any(diag <= 0.0):
                raise SingularSystemError("matrix has a nonpositive diagonal entry; not SPD")
            inv = 1.0 / diag
            self._precond = LinearOperator((n, n), matvec=lambda x: inv * x, dtype=float)
        else:
            raise ValueError(f"unknown linear solver {method!r}")

    def solve(self, rhs: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
        if rhs.shape[0] == 0:
            return np.zeros(0)
        if self._lu is not None:
            return self._lu.solve(rhs)
        count = [0]

        def _tick(_: np.ndarray) -> None:
            count[0] += 1

        x, info = cg(self.matrix, rhs, x0=x0, rtol=self.rtol, atol=0.0, maxiter=self.maxiter, M=self._precond, callback=_tick)
        self.iterations = count[0]
        if info != 0:
            raise LinearSolverError(f"conjugate gradients did not converge (info={info}, iterations={count[0]})")
        return x


class SaddlePointSolver:
    """Sparse LU of the symmetric indefinite block matrix [[A, B^T], [B, -C]], factorized once."""

    def __init__(self, A: sp.spmatrix, B: sp.spmatrix, C: sp.spmatrix) -> None:
        self.n_flux = A.shape[0]
        self.n_scalar = C.shape[0]
        self.matrix = sp.bmat([[A, B.T], [B, -C]], format="csc")
        self._lu = _factorize(self.matrix)

    def solve(self, flux_rhs: np.ndarray, scalar_rhs: np.ndarray):
        x = self._lu.solve(np.concatenate([flux_rhs, scalar_rhs]))
        return x[: self.n_flux], x[self.n_flux:]


def _factorize(matrix: sp.spmatrix):
    try:
        return splu(sp.csc_matrix(matrix))
    except RuntimeError as exc:  # scipy reports "Factor is exactly singular"
        raise SingularSystemError(f"sparse factorization failed: {exc}") from exc
