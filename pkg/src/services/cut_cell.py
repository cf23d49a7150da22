#!/usr/bin/env python3
"""Moments of the quarter-disk indicator over triangles.

The intersection of a triangle with the unit disk is integrated in closed
form. Each directed edge (a, b) contributes the signed moments of
triangle(O, a, b) intersected with the disk, which is a union of straight
triangles (edge pieces inside the circle) and circular sectors (edge pieces
outside it). Summing over the three edges of a counterclockwise triangle gives
the moments of the triangle intersected with the disk.
"""
from __future__ import annotations

import numpy as np

from ..domain.errors import QuadratureError

# moments may exceed the triangle's own area only by rounding
_SLACK = 1e-12


def _cross(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]


def _wedge_moments(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Signed moments of triangle(O, p, q), p and q inside the disk."""
    area = 0.5 * _cross(p, q)
    return np.column_stack([area, area * (p[:, 0] + q[:, 0]) / 3.0, area * (p[:, 1] + q[:, 1]) / 3.0])


def _sector_moments(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Signed moments of the unit-disk sector swept from direction p to direction q."""
    theta = np.arctan2(_cross(p, q), np.einsum("ij,ij->i", p, q))
    phi = np.arctan2(p[:, 1], p[:, 0])
    end = phi + theta
    return np.column_stack([0.5 * theta, (np.sin(end) - np.sin(phi)) / 3.0, (np.cos(phi) - np.cos(end)) / 3.0])


def _edge_moments(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed moments of triangle(O, a, b) intersected with the unit disk, one row per edge."""
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    ad = np.einsum("ij,ij->i", a, d)
    aa = np.einsum("ij,ij->i", a, a)
    disc = ad * ad - dd * (aa - 1.0)
    root = np.sqrt(np.maximum(disc, 0.0))
    safe = np.where(dd > 0.0, dd, 1.0)
    t_in = np.clip((-ad - root) / safe, 0.0, 1.0)
    t_out = np.clip((-ad + root) / safe, 0.0, 1.0)
    # a line that misses the circle leaves no chord: the whole edge is outside
    missing = (disc <= 0.0) | (dd == 0.0)
    t_in = np.where(missing, 0.0, t_in)
    t_out = np.where(missing, 0.0, t_out)
    p = a + t_in[:, None] * d
    q = a + t_out[:, None] * d
    return _sector_moments(a, p) + _wedge_moments(p, q) + _sector_moments(q, b)


def _triangle_moments(corners: np.ndarray) -> np.ndarray:
    P0, P1, P2 = corners[:, 0], corners[:, 1], corners[:, 2]
    area = 0.5 * _cross(P1 - P0, P2 - P0)
    c = corners.mean(axis=1)
    return area[:, None] * np.column_stack([np.ones(c.shape[0]), c])


def _clipped_moments(corners: np.ndarray) -> np.ndarray:
    out = np.zeros((corners.shape[0], 3))
    for i in range(3):
        out += _edge_moments(corners[:, i], corners[:, (i + 1) % 3])
    return out


def indicator_moments(corners: np.ndarray) -> np.ndarray:
    """(area, int x, int y) of each triangle intersected with the unit disk; corners (n_tri, 3, 2) counterclockwise."""
    corners = np.asarray(corners, dtype=float)
    out = np.zeros((corners.shape[0], 3))
    r2 = np.einsum("tid,tid->ti", corners, corners)
    inside = np.all(r2 <= 1.0, axis=1)
    out[inside] = _triangle_moments(corners[inside])
    rest = np.flatnonzero(~inside)
    if rest.size:
        out[rest] = _clipped_moments(corners[rest])
        full = _triangle_moments(corners[rest])[:, 0]
        area = out[rest, 0]
        bad = ~np.isfinite(out[rest]).all(axis=1) | (area < -_SLACK) | (area > full + _SLACK)
        if np.any(bad):
            raise QuadratureError(f"disk clipping failed on {int(bad.sum())} triangle(s), first index {int(rest[bad][0])}")
        out[rest, 0] = np.clip(area, 0.0, full)
    return out


def disk_moments(P: np.ndarray) -> np.ndarray:
    """(area, int x, int y) of a single triangle P (3, 2) intersected with the unit disk."""
    return indicator_moments(np.asarray(P, dtype=float)[None])[0]
