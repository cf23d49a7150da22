#!/usr/bin/env python3
"""Finite element spaces on uniform triangulations.

P1 (conforming, vertex dofs), P1NC (Crouzeix-Raviart, edge-midpoint dofs) and
the mixed pair RT0 x P0. Element matrices come from closed-form affine maps;
assembly is a COO scatter reduced to CSR, so results do not depend on
element ordering beyond floating-point summation order, which is fixed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from ..adapters.linear_solver import SaddlePointSolver, SpdSolver
from ..domain.config import FemKind
from ..domain.errors import DimensionMismatchError, NonFiniteValueError, NonNestedMeshError
from ..domain.meshkit import Mesh, is_nested, locate_triangles
from ..domain.quadrature import quadrature
from ..domain.source_terms import SourceTerm

logger = logging.getLogger(__name__)

LOAD_DEGREE = 2
PROJECTION_DEGREE = 6
ERROR_DEGREE = 4

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SpaceDescriptor:
    kind: FemKind
    dof_count_u: int
    dof_count_flux: int
    gamma: int
    anchors: np.ndarray  # coordinates of the free u dofs
    flux_anchors: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class FemSystem:
    mesh: Mesh
    descriptor: SpaceDescriptor
    element_dofs: np.ndarray  # (n_tri, n_local) into the full u numbering
    basis_affine: np.ndarray  # (n_tri, n_local, 3) affine coefficients of local basis functions
    mass_full: sp.csr_matrix
    mass: sp.csr_matrix
    free: np.ndarray
    n_full: int
    stiffness_full: Optional[sp.csr_matrix] = None
    stiffness: Optional[sp.csr_matrix] = None
    div_block: Optional[sp.csr_matrix] = None  # (n_tri, n_edges), entries int_K div w_e
    flux_mass: Optional[sp.csr_matrix] = None

    @property
    def kind(self) -> FemKind:
        return self.descriptor.kind

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        reduced = np.asarray(reduced, dtype=float)
        if reduced.shape != (self.descriptor.dof_count_u,):
            raise DimensionMismatchError(
                f"expected {self.descriptor.dof_count_u} coefficients, got shape {reduced.shape}"
            )
        full = np.zeros(self.n_full)
        full[self.free] = reduced
        return full

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.free]

    def basis_at(self, barycentric_points: np.ndarray) -> np.ndarray:
        """Local basis values at reference points, shape (n_local, n_points)."""
        if self.kind is FemKind.P1:
            return barycentric_points.T.copy()
        if self.kind is FemKind.P1NC:
            return 1.0 - 2.0 * barycentric_points.T
        return np.ones((1, barycentric_points.shape[0]))


def _scatter_matrix(dofs_r: np.ndarray, dofs_c: np.ndarray, local: np.ndarray, shape) -> sp.csr_matrix:
    n_r, n_c = dofs_r.shape[1], dofs_c.shape[1]
    rows = np.repeat(dofs_r, n_c, axis=1).ravel()
    cols = np.tile(dofs_c, (1, n_r)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()


def _scatter_vector(dofs: np.ndarray, local: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def _local_mass(mesh: Mesh, table: np.ndarray, weights: np.ndarray) -> np.ndarray:
    ref = np.einsum("iq,jq,q->ij", table, table, weights)
    return mesh.areas[:, None, None] * ref[None, :, :]


def _local_stiffness(mesh: Mesh, basis_affine: np.ndarray) -> np.ndarray:
    grads = basis_affine[..., 1:]
    return mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)


def _primal_system(mesh: Mesh, kind: FemKind) -> FemSystem:
    bary = mesh.barycentric
    if kind is FemKind.P1:
        element_dofs = mesh.triangles
        basis_affine = bary
        n_full = mesh.n_vertices
        on_boundary = mesh.vertex_on_boundary
        anchors = mesh.vertices
    else:
        element_dofs = mesh.triangle_edges
        unit = np.array([1.0, 0.0, 0.0])
        basis_affine = unit[None, None, :] - 2.0 * bary
        n_full = mesh.n_edges
        on_boundary = mesh.edge_on_boundary
        anchors = mesh.edge_midpoints

    rule = quadrature(LOAD_DEGREE)
    table = rule.points.T if kind is FemKind.P1 else 1.0 - 2.0 * rule.points.T
    mass_full = _scatter_matrix(element_dofs, element_dofs, _local_mass(mesh, table, rule.weights), (n_full, n_full))
    stiff_full = _scatter_matrix(element_dofs, element_dofs, _local_stiffness(mesh, basis_affine), (n_full, n_full))

    free = np.flatnonzero(~on_boundary)
    mass = mass_full[free][:, free].tocsr()
    stiffness = stiff_full[free][:, free].tocsr()
    descriptor = SpaceDescriptor(
        kind=kind,
        dof_count_u=int(free.size),
        dof_count_flux=0,
        gamma=kind.gamma,
        anchors=anchors[free],
    )
    return FemSystem(
        mesh=mesh,
        descriptor=descriptor,
        element_dofs=element_dofs,
        basis_affine=basis_affine,
        mass_full=mass_full,
        mass=mass,
        free=free,
        n_full=n_full,
        stiffness_full=stiff_full,
        stiffness=stiffness,
    )


def _rt0_local(mesh: Mesh):
    """Flux mass blocks and div entries for w_e = s_e/(2|K|) (x - P_e), unit flux across e."""
    rule = quadrature(LOAD_DEGREE)
    corners = mesh.corners
    signs = mesh.triangle_edge_signs
    area = mesh.areas
    q = rule.physical_points(corners)  # (t, q, 2)
    d = q[:, :, None, :] - corners[:, None, :, :]  # (t, q, i, 2)
    gram = area[:, None, None] * np.einsum("q,tqid,tqjd->tij", rule.weights, d, d)
    scale = signs / (2.0 * area[:, None])
    local_mass = scale[:, :, None] * scale[:, None, :] * gram
    return local_mass, signs


def _mixed_system(mesh: Mesh) -> FemSystem:
    nt, ne = mesh.n_triangles, mesh.n_edges
    local_mass, signs = _rt0_local(mesh)
    flux_mass = _scatter_matrix(mesh.triangle_edges, mesh.triangle_edges, local_mass, (ne, ne))
    rows = np.repeat(np.arange(nt), 3)
    div_block = sp.coo_matrix((signs.ravel(), (rows, mesh.triangle_edges.ravel())), shape=(nt, ne)).tocsr()
    mass = sp.diags(mesh.areas).tocsr()
    element_dofs = np.arange(nt)[:, None]
    basis_affine = np.tile(np.array([1.0, 0.0, 0.0]), (nt, 1, 1))
    descriptor = SpaceDescriptor(
        kind=FemKind.RT0P0,
        dof_count_u=nt,
        dof_count_flux=ne,
        gamma=FemKind.RT0P0.gamma,
        anchors=mesh.centroids,
        flux_anchors=mesh.edge_midpoints,
    )
    return FemSystem(
        mesh=mesh,
        descriptor=descriptor,
        element_dofs=element_dofs,
        basis_affine=basis_affine,
        mass_full=mass,
        mass=mass,
        free=np.arange(nt),
        n_full=nt,
        div_block=div_block,
        flux_mass=flux_mass,
    )


def assemble(mesh: Mesh, kind: Union[FemKind, str]) -> FemSystem:
    kind = FemKind(kind)
    system = _mixed_system(mesh) if kind.is_mixed else _primal_system(mesh, kind)
    logger.debug(
        "assembled %s on M=%d: %d u-dofs, %d flux dofs",
        kind.value,
        mesh.M,
        system.descriptor.dof_count_u,
        system.descriptor.dof_count_flux,
    )
    return system


# ---------------------------------------------------------------------------
# finite element functions


@dataclass(frozen=True, eq=False)
class FeFunction:
    system: FemSystem
    coeffs: np.ndarray  # full u numbering
    flux: Optional[np.ndarray] = None  # RT0 edge coefficients

    @classmethod
    def from_reduced(cls, system: FemSystem, reduced: np.ndarray, flux: Optional[np.ndarray] = None) -> "FeFunction":
        return cls(system=system, coeffs=system.expand(reduced), flux=None if flux is None else np.asarray(flux, dtype=float))

    @property
    def mesh(self) -> Mesh:
        return self.system.mesh

    def affine(self) -> np.ndarray:
        """Per-triangle coefficients (c0, cx, cy), shape (n_tri, 3)."""
        local = self.coeffs[self.system.element_dofs]
        return np.einsum("tl,tlc->tc", local, self.system.basis_affine)

    def flux_affine(self) -> np.ndarray:
        """Per-triangle RT0 field as (n_tri, 2, 3): component k = c0 + cx*x + cy*y."""
        if self.flux is None:
            raise DimensionMismatchError("function carries no flux coefficients")
        mesh = self.mesh
        a = self.flux[mesh.triangle_edges] * mesh.triangle_edge_signs / (2.0 * mesh.areas[:, None])
        s = a.sum(axis=1)
        out = np.zeros((mesh.n_triangles, 2, 3))
        out[:, 0, 0] = -np.einsum("ti,ti->t", a, mesh.corners[:, :, 0])
        out[:, 1, 0] = -np.einsum("ti,ti->t", a, mesh.corners[:, :, 1])
        out[:, 0, 1] = s
        out[:, 1, 2] = s
        return out

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pts = np.stack([x.ravel(), y.ravel()], axis=1)
        tri = locate_triangles(self.mesh, pts)
        c = self.affine()[tri]
        return (c[:, 0] + c[:, 1] * pts[:, 0] + c[:, 2] * pts[:, 1]).reshape(x.shape)


# ---------------------------------------------------------------------------
# loads and projections


def load_vector(system: FemSystem, func: ScalarField, degree: int = PROJECTION_DEGREE) -> np.ndarray:
    """Full-numbering vector of int func * phi_i by quadrature."""
    mesh = system.mesh
    rule = quadrature(degree)
    pts = rule.physical_points(mesh.corners)
    values = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float)
    table = system.basis_at(rule.points)
    local = mesh.areas[:, None] * ((values * rule.weights) @ table.T)
    return _scatter_vector(system.element_dofs, local, system.n_full)


def moment_load(system: FemSystem, moments: np.ndarray) -> np.ndarray:
    """Loads int g phi_i from per-triangle moments (int g, int g x, int g y) of some g."""
    local = np.einsum("tlc,tc->tl", system.basis_affine, moments)
    return _scatter_vector(system.element_dofs, local, system.n_full)


def solve_mass(system: FemSystem, load_full: np.ndarray, constrained: bool = True) -> np.ndarray:
    if constrained:
        matrix, rhs = system.mass, system.restrict(load_full)
    else:
        matrix, rhs = system.mass_full, load_full
    if system.kind is FemKind.P1:
        return SpdSolver(matrix, method="direct").solve(rhs)
    return rhs / matrix.diagonal()


def project_l2(system: FemSystem, load_full: np.ndarray, constrained: bool = True) -> np.ndarray:
    """L2 projection given the load vector; see services.initial_data for u0 loads."""
    coeffs = solve_mass(system, load_full, constrained=constrained)
    if not np.all(np.isfinite(coeffs)):
        raise NonFiniteValueError("projection produced non-finite coefficients")
    return coeffs


def nonlinear_load(system: FemSystem, u_coeffs: np.ndarray, source: SourceTerm) -> np.ndarray:
    """Reduced vector of int f(u_h) phi_i, 3-point edge-midpoint rule."""
    full = system.expand(u_coeffs)
    mesh = system.mesh
    rule = quadrature(LOAD_DEGREE)
    table = system.basis_at(rule.points)
    u_q = full[system.element_dofs] @ table
    f_q = source(u_q)
    if not np.all(np.isfinite(f_q)):
        raise NonFiniteValueError(f"source term {source.name} produced non-finite values")
    local = mesh.areas[:, None] * ((f_q * rule.weights) @ table.T)
    return system.restrict(_scatter_vector(system.element_dofs, local, system.n_full))


# ---------------------------------------------------------------------------
# elliptic solves


def elliptic_solve(system: FemSystem, load_full: np.ndarray, method: str = "cg", rtol: float = 1e-12) -> FeFunction:
    """Discrete solution of -Delta u = g, u = 0 on the boundary, given loads int g phi_i."""
    if system.kind.is_mixed:
        zero = sp.csr_matrix(system.mass.shape)
        solver = SaddlePointSolver(system.flux_mass, system.div_block, zero)
        flux, u = solver.solve(np.zeros(system.descriptor.dof_count_flux), -load_full)
        return FeFunction.from_reduced(system, u, flux=flux)
    u = SpdSolver(system.stiffness, method=method, rtol=rtol).solve(system.restrict(load_full))
    return FeFunction.from_reduced(system, u)


# ---------------------------------------------------------------------------
# error norms


@dataclass(frozen=True)
class ErrorNorms:
    l2: float
    linf: float


def _fine_points(mesh: Mesh):
    rule = quadrature(ERROR_DEGREE)
    pts = rule.physical_points(mesh.corners)
    return rule, pts


def _norms(diff: np.ndarray, mesh: Mesh, weights: np.ndarray) -> ErrorNorms:
    sq = diff ** 2 if diff.ndim == 2 else np.sum(diff ** 2, axis=-1)
    l2 = float(np.sqrt(np.sum(mesh.areas[:, None] * sq * weights)))
    linf = float(np.max(np.abs(diff))) if diff.size else 0.0
    return ErrorNorms(l2=l2, linf=linf)


def _eval_affine(coeffs: np.ndarray, tri: np.ndarray, pts: np.ndarray) -> np.ndarray:
    c = coeffs[tri]
    return c[..., 0] + c[..., 1] * pts[..., 0] + c[..., 2] * pts[..., 1]


def _check_nested(coarse: Mesh, fine: Mesh) -> None:
    if not is_nested(coarse, fine):
        raise NonNestedMeshError(f"mesh M={fine.M} is not a nested refinement of M={coarse.M}")


def l2_error(coarse: FeFunction, reference: Union[FeFunction, ScalarField]) -> ErrorNorms:
    """||u_h - u_ref||_L2 on the finer mesh with the degree-4 rule, plus max error at its points."""
    if isinstance(reference, FeFunction):
        _check_nested(coarse.mesh, reference.mesh)
        fine = reference.mesh
        rule, pts = _fine_points(fine)
        own = np.repeat(np.arange(fine.n_triangles)[:, None], rule.size, axis=1)
        ref_vals = _eval_affine(reference.affine(), own, pts)
    else:
        fine = coarse.mesh
        rule, pts = _fine_points(fine)
        ref_vals = np.asarray(reference(pts[..., 0], pts[..., 1]), dtype=float)
    tri = locate_triangles(coarse.mesh, pts.reshape(-1, 2)).reshape(pts.shape[:2])
    u_vals = _eval_affine(coarse.affine(), tri, pts)
    return _norms(u_vals - ref_vals, fine, rule.weights)


def flux_l2_error(coarse: FeFunction, reference: Union[FeFunction, Callable[[np.ndarray, np.ndarray], np.ndarray]]) -> ErrorNorms:
    """Same as l2_error for RT0 fields; an exact reference returns (..., 2) arrays."""
    if isinstance(reference, FeFunction):
        _check_nested(coarse.mesh, reference.mesh)
        fine = reference.mesh
        rule, pts = _fine_points(fine)
        own = np.repeat(np.arange(fine.n_triangles)[:, None], rule.size, axis=1)
        ref_aff = reference.flux_affine()
        ref_vals = np.stack([_eval_affine(ref_aff[:, k], own, pts) for k in range(2)], axis=-1)
    else:
        fine = coarse.mesh
        rule, pts = _fine_points(fine)
        ref_vals = np.asarray(reference(pts[..., 0], pts[..., 1]), dtype=float)
    tri = locate_triangles(coarse.mesh, pts.reshape(-1, 2)).reshape(pts.shape[:2])
    aff = coarse.flux_affine()
    u_vals = np.stack([_eval_affine(aff[:, k], tri, pts) for k in range(2)], axis=-1)
    return _norms(u_vals - ref_vals, fine, rule.weights)


def export_coo(matrix: sp.spmatrix, path: Union[str, Path]) -> Path:
    """Write a matrix as 'row col value' lines."""
    coo = sp.coo_matrix(matrix)
    target = Path(path)
    with target.open("w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
    return target
