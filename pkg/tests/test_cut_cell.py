#!/usr/bin/env python3
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from src.domain.config import RunConfig
from src.domain.meshkit import build_uniform_mesh
from src.services.cut_cell import disk_moments, indicator_moments
from src.services.stepper import solve


def test_triangle_inside_and_outside() -> None:
    inside = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]])
    assert np.allclose(disk_moments(inside), [0.125, 0.125 / 6.0, 0.125 / 6.0], atol=1e-15)
    outside = np.array([[1.0, 1.0], [1.5, 1.0], [1.0, 1.5]])
    assert np.allclose(disk_moments(outside), 0.0, atol=1e-15)


def test_triangle_covering_the_quarter_disk() -> None:
    big = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    area, mx, my = disk_moments(big)
    assert area == pytest.approx(math.pi / 4.0, abs=1e-14)
    assert mx == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert my == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_cut_triangle_against_adaptive_integration() -> None:
    cut = np.array([[0.5, 0.5], [1.0, 0.5], [1.0, 1.0]])

    def upper(x: float) -> float:
        return max(0.5, min(x, math.sqrt(max(0.0, 1.0 - x * x))))

    expected = [
        integrate.dblquad(g, 0.5, 1.0, lambda x: 0.5, upper, epsabs=1e-13, epsrel=1e-12)[0]
        for g in (lambda y, x: 1.0, lambda y, x: x, lambda y, x: y)
    ]
    assert np.allclose(disk_moments(cut), expected, rtol=0.0, atol=1e-10)


@pytest.mark.parametrize("M", [1, 2, 3, 4, 8, 16, 32])
def test_quarter_disk_moments(M: int) -> None:
    mesh = build_uniform_mesh(M)
    moments = indicator_moments(mesh.corners)
    area, mx, my = moments.sum(axis=0)
    assert area == pytest.approx(math.pi / 4.0, abs=1e-6)
    assert mx == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert my == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert np.all(moments[:, 0] >= 0.0)
    assert np.all(moments[:, 0] <= mesh.areas + 1e-12)


@pytest.mark.parametrize("fem,M", [("rt0", 1), ("rt0", 2), ("p1", 2), ("p1nc", 3)])
def test_quarter_disk_runs_on_coarse_meshes(fem: str, M: int) -> None:
    result = solve(RunConfig(fem=fem, case="b", mesh=M, steps=2))
    assert np.all(np.isfinite(result.state.trajectory))
