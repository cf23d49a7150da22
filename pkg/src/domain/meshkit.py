#!/usr/bin/env python3
"""Uniform right-triangle meshes of the unit square.

Each cell [i/M,(i+1)/M] x [j/M,(j+1)/M] is split along the diagonal from
(i/M, j/M) to ((i+1)/M, (j+1)/M). Cell c = j*M + i owns triangles 2c (below the
diagonal) and 2c+1 (above it). Local edge i of a triangle is the edge opposite
its local vertex i.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InvalidConfigurationError, OutsideDomainError


@dataclass(frozen=True, eq=False)
class Mesh:
    M: int
    vertices: np.ndarray  # (n_vertices, 2)
    triangles: np.ndarray  # (n_triangles, 3), counterclockwise
    edges: np.ndarray  # (n_edges, 2), sorted vertex pairs
    edge_triangles: np.ndarray  # (n_edges, 2), second entry -1 on the boundary
    edge_normals: np.ndarray  # (n_edges, 2), unit, outward from edge_triangles[:, 0]
    triangle_edges: np.ndarray  # (n_triangles, 3)
    triangle_edge_signs: np.ndarray  # (n_triangles, 3), +1 where the global normal is outward
    vertex_on_boundary: np.ndarray
    edge_on_boundary: np.ndarray
    level: int = 0
    root_M: Optional[int] = None
    parent: Optional[np.ndarray] = None  # triangle index in the mesh this one was refined from

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        c = self.corners
        return 0.5 * (
            (c[:, 1, 0] - c[:, 0, 0]) * (c[:, 2, 1] - c[:, 0, 1])
            - (c[:, 2, 0] - c[:, 0, 0]) * (c[:, 1, 1] - c[:, 0, 1])
        )

    @cached_property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def barycentric(self) -> np.ndarray:
        """Affine coefficients (a, gx, gy) of lambda_i = a + gx*x + gy*y, shape (n_tri, 3, 3)."""
        c = self.corners
        two_area = 2.0 * self.signed_areas
        out = np.empty((self.n_triangles, 3, 3))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            xj, yj = c[:, j, 0], c[:, j, 1]
            xk, yk = c[:, k, 0], c[:, k, 1]
            out[:, i, 0] = (xj * yk - xk * yj) / two_area
            out[:, i, 1] = (yj - yk) / two_area
            out[:, i, 2] = (xk - xj) / two_area
        return out

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    def children(self) -> np.ndarray:
        """For a refined mesh, the (n_parent, 4) fine triangles making up each parent."""
        if self.parent is None:
            raise InvalidConfigurationError("mesh was not produced by refine()")
        order = np.argsort(self.parent, kind="stable")
        return order.reshape(-1, 4)


def _validate_M(M: int) -> int:
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
        raise InvalidConfigurationError(f"mesh parameter M must be a positive integer, got {M!r}")
    return int(M)


def _edge_topology(triangles: np.ndarray, vertices: np.ndarray):
    nt = triangles.shape[0]
    local = np.stack([triangles[:, [(i + 1) % 3, (i + 2) % 3]] for i in range(3)], axis=1)
    flat = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(flat, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    triangle_edges = inverse.reshape(nt, 3)

    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=edges.shape[0])
    if np.any((counts < 1) | (counts > 2)):
        raise InvalidConfigurationError("triangulation is not a manifold")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    first = order[starts]
    second = np.where(counts == 2, order[np.minimum(starts + 1, order.size - 1)], -1)
    edge_triangles = np.stack([first // 3, np.where(second >= 0, second // 3, -1)], axis=1)

    a = vertices[edges[:, 0]]
    d = vertices[edges[:, 1]] - a
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / np.hypot(d[:, 0], d[:, 1])[:, None]
    opposite = vertices[triangles[first // 3, first % 3]]
    flip = np.einsum("ij,ij->i", normals, opposite - a) > 0.0
    normals[flip] *= -1.0

    owner = edge_triangles[triangle_edges, 0]
    signs = np.where(owner == np.arange(nt)[:, None], 1.0, -1.0)
    return edges, edge_triangles, normals, triangle_edges, signs, counts == 1


def build_uniform_mesh(M: int) -> Mesh:
    M = _validate_M(M)
    coords = np.arange(M + 1) / M
    X, Y = np.meshgrid(coords, coords)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    I, J = np.meshgrid(np.arange(M), np.arange(M))
    i, j = I.ravel(), J.ravel()
    v00 = j * (M + 1) + i
    v10, v11, v01 = v00 + 1, v00 + M + 2, v00 + M + 1
    triangles = np.empty((2 * M * M, 3), dtype=np.int64)
    triangles[0::2] = np.stack([v00, v10, v11], axis=1)
    triangles[1::2] = np.stack([v00, v11, v01], axis=1)

    edges, edge_tris, normals, tri_edges, signs, edge_bnd = _edge_topology(triangles, vertices)
    vi = np.arange(M + 1)
    VI, VJ = np.meshgrid(vi, vi)
    vertex_bnd = ((VI == 0) | (VI == M) | (VJ == 0) | (VJ == M)).ravel()

    arrays = (vertices, triangles, edges, edge_tris, normals, tri_edges, signs, vertex_bnd, edge_bnd)
    for arr in arrays:
        arr.setflags(write=False)
    return Mesh(
        M=M,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_triangles=edge_tris,
        edge_normals=normals,
        triangle_edges=tri_edges,
        triangle_edge_signs=signs,
        vertex_on_boundary=vertex_bnd,
        edge_on_boundary=edge_bnd,
        level=0,
        root_M=M,
    )


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement; coincides with build_uniform_mesh(2M) plus parent links."""
    fine = build_uniform_mesh(2 * mesh.M)
    parent = locate_triangles(mesh, fine.centroids)
    parent.setflags(write=False)
    return dataclasses.replace(fine, level=mesh.level + 1, root_M=mesh.root_M or mesh.M, parent=parent)


def is_nested(coarse: Mesh, fine: Mesh) -> bool:
    return fine.M >= coarse.M and fine.M % coarse.M == 0


def locate_triangles(mesh: Mesh, points: np.ndarray) -> np.ndarray:
    """Containing triangle of each point by index arithmetic.

    Points on shared edges or vertices resolve to the lowest-index triangle.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts < 0.0) or np.any(pts > 1.0) or not np.all(np.isfinite(pts)):
        raise OutsideDomainError("point outside the closed unit square")
    M = mesh.M
    s = pts * M
    i = np.clip(np.ceil(s[:, 0]).astype(np.int64) - 1, 0, M - 1)
    j = np.clip(np.ceil(s[:, 1]).astype(np.int64) - 1, 0, M - 1)
    upper = (s[:, 1] - j) > (s[:, 0] - i)
    return 2 * (j * M + i) + upper.astype(np.int64)


def evaluate_piecewise_affine(mesh: Mesh, points: np.ndarray, coeffs: np.ndarray, triangles: Optional[np.ndarray] = None) -> np.ndarray:
    """Evaluate elementwise data c0 + cx*x + cy*y at points.

    ``coeffs`` is (n_tri, 3) for scalars, (n_tri,) for piecewise constants, or
    (n_tri, k, 3) for k-component fields.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tri = locate_triangles(mesh, pts) if triangles is None else triangles
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim == 1:
        return coeffs[tri]
    c = coeffs[tri]
    if coeffs.ndim == 2:
        return c[:, 0] + c[:, 1] * pts[:, 0] + c[:, 2] * pts[:, 1]
    return c[..., 0] + c[..., 1] * pts[:, 0, None] + c[..., 2] * pts[:, 1, None]


def locate_and_evaluate(mesh: Mesh, point, local_data: np.ndarray) -> float:
    value = evaluate_piecewise_affine(mesh, np.asarray(point, dtype=float).reshape(1, 2), local_data)
    return float(value[0])


def dump_mesh(mesh: Mesh) -> str:
    lines = [f"M {mesh.M}"]
    lines += [f"v {float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines += [f"t {a} {b} {c}" for a, b, c in mesh.triangles]
    for (a, b), (t1, t2), bnd in zip(mesh.edges, mesh.edge_triangles, mesh.edge_on_boundary):
        lines.append(f"e {a} {b} {t1} {t2} {int(bnd)}")
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.write_text(dump_mesh(mesh))
    return target
