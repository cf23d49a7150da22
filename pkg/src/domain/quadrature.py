#!/usr/bin/env python3
"""Symmetric quadrature rules on triangles, in barycentric form.

Weights are normalized to sum to one; callers scale them by the triangle
area. Rules up to degree 6 (Strang-Fix / Dunavant / Radon families).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .errors import InvalidConfigurationError

MAX_DEGREE = 6


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # (n_points, 3) barycentric coordinates
    weights: np.ndarray  # (n_points,), sum to 1
    degree: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def physical_points(self, corners: np.ndarray) -> np.ndarray:
        """Map the rule onto triangles given by corners of shape (n_tri, 3, 2)."""
        return np.einsum("qi,tid->tqd", self.points, corners)


def _orbit_s21(a: float) -> List[Tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit_s111(a: float, b: float) -> List[Tuple[float, float, float]]:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _build(groups: List[Tuple[float, List[Tuple[float, float, float]]]], degree: int) -> QuadratureRule:
    pts: List[Tuple[float, float, float]] = []
    wts: List[float] = []
    for weight, orbit in groups:
        pts.extend(orbit)
        wts.extend([weight] * len(orbit))
    points = np.array(pts, dtype=float)
    weights = np.array(wts, dtype=float)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, degree=degree)


def _rule_table() -> Dict[int, QuadratureRule]:
    centroid = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
    one = _build([(1.0, centroid)], degree=1)
    # edge midpoints
    two = _build([(1.0 / 3.0, [(0.5, 0.5, 0.0), (0.5, 0.0, 0.5), (0.0, 0.5, 0.5)])], degree=2)
    four = _build(
        [
            (0.22338158967801146569500700843312, _orbit_s21(0.44594849091596488631832925388305)),
            (0.10995174365532186763832632490021, _orbit_s21(0.091576213509770743459571463402202)),
        ],
        degree=4,
    )
    r15 = math.sqrt(15.0)
    five = _build(
        [
            (9.0 / 40.0, centroid),
            ((155.0 - r15) / 1200.0, _orbit_s21((6.0 - r15) / 21.0)),
            ((155.0 + r15) / 1200.0, _orbit_s21((6.0 + r15) / 21.0)),
        ],
        degree=5,
    )
    six = _build(
        [
            (0.11678627572637936602528961138558, _orbit_s21(0.24928674517091042129163855310702)),
            (0.050844906370206816920936809106869, _orbit_s21(0.063089014491502228340331602870819)),
            (
                0.082851075618373575193553456420442,
                _orbit_s111(0.053145049844816947353249671631398, 0.31035245103378440541660773395655),
            ),
        ],
        degree=6,
    )
    # degree 3 shares the degree-4 rule
    return {1: one, 2: two, 3: four, 4: four, 5: five, 6: six}


_RULES = _rule_table()


def quadrature(degree: int) -> QuadratureRule:
    """Return a rule exact for polynomials of total degree <= ``degree``."""
    if isinstance(degree, bool) or not isinstance(degree, (int, np.integer)):
        raise InvalidConfigurationError(f"quadrature degree must be an integer, got {degree!r}")
    if degree < 1 or degree > MAX_DEGREE:
        raise InvalidConfigurationError(f"unsupported quadrature degree {degree}; supported 1..{MAX_DEGREE}")
    return _RULES[int(degree)]
