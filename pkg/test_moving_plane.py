#!/usr/bin/env python3
"""
Test script for MovingPlane
Critical planes, symmetry sweeps and the halfspace radial test
"""

import numpy as np

from ClosedForm import BallTorsion
from DirichletSolver import SolveConfig, solve_dirichlet
from FracConstants import FracParams
from FracOperator import Field
from Geometry import Ball, Domain, Ellipse, Grid, Interval
from MovingPlane import (INTERNAL_TOUCH, ORTHOGONAL_CONTACT, MovingPlaneAnalyzer, analyze_union_1d,
                         connected_components, find_critical_plane, moving_plane_analyze,
                         radial_monotone_test)

E1 = np.array([1.0, 0.0])
DIAG = np.array([1.0, 1.0]) / np.sqrt(2.0)


def test_critical_planes():
    print("Testing critical planes...")
    plane = find_critical_plane(Ball([0.0, 0.0], 1.0), E1)
    assert abs(plane.lambda0) < 1e-5
    assert plane.situation == ORTHOGONAL_CONTACT

    ell = Ellipse([0.0, 0.0], [1.0, 0.5])
    plane = find_critical_plane(ell, E1)
    assert abs(plane.lambda0) < 1e-5
    assert plane.situation == ORTHOGONAL_CONTACT and plane.both_flag
    plane = find_critical_plane(ell, DIAG)
    # first contact where the boundary normal (x, 4y) is orthogonal to (1, 1): x = -4y
    assert plane.situation == ORTHOGONAL_CONTACT
    assert abs(plane.lambda0 - 3.0 / np.sqrt(40.0)) < 1e-3
    assert plane.lambda0 < plane.support_value

    plane = find_critical_plane(Interval(-1.0, 1.0), np.array([1.0]))
    assert abs(plane.lambda0) < 1e-5
    assert plane.situation == INTERNAL_TOUCH

    balls = Domain.union([Ball([-0.6, 0.0], 0.3), Ball([0.5, 0.0], 0.2)])
    plane = find_critical_plane(balls, E1)
    assert abs(plane.lambda0 - 0.5) < 1e-4
    print("✓ Ball, ellipse, interval and two-ball planes")


def test_solved_disc_is_symmetric():
    print("Testing symmetry of the solved disc...")
    p = FracParams(2, 0.5)
    d = Ball([0.0, 0.0], 1.0)
    cfg = SolveConfig(h=1.0 / 32, half_width=1.1)
    u = solve_dirichlet(d, 1.0, p, cfg)
    report = moving_plane_analyze(u, d)
    assert len(report.directions) == 8
    assert report.verdict == "symmetric"
    assert all(r.aligned for r in report.directions)
    assert np.linalg.norm(report.center) <= 2.0 * cfg.h
    # S_lambda holds for every swept plane past lambda0
    for r in report.directions:
        assert len(r.sweep) == 8
        assert r.sweep_first_failure is None, r.as_dict()
        assert all(mn >= -report.tolerance for _, mn in r.sweep if np.isfinite(mn))
    print(f"✓ Symmetric in 8 directions, sweeps clean, center {np.round(report.center, 6).tolist()}")


def test_solved_ellipse():
    print("Testing symmetry of the solved ellipse...")
    p = FracParams(2, 0.5)
    d = Ellipse([0.0, 0.0], [1.0, 0.5])
    u = solve_dirichlet(d, 1.0, p, SolveConfig(h=1.0 / 32, half_width=1.1))
    analyzer = MovingPlaneAnalyzer()
    axes = analyzer.analyze(u, d, [E1, np.array([0.0, 1.0])])
    assert axes.verdict == "symmetric"
    diagonal = analyzer.analyze(u, d, [DIAG])
    assert diagonal.verdict != "symmetric"
    print(f"✓ Symmetric about the axes, {diagonal.verdict} along the diagonal")


def test_radial_test():
    print("Testing halfspace radial test...")
    p = FracParams(2, 0.5)
    grid = Grid.symmetric(1.5, 0.03, 2)
    psi = Field.from_function(grid, BallTorsion(p, [0.0, 0.0], 1.0))
    result = radial_monotone_test(psi)
    assert result["radial"]
    assert np.linalg.norm(result["center"]) <= grid.h

    moved = Field.from_function(grid, BallTorsion(p, [0.3, 0.0], 1.0))
    result = radial_monotone_test(moved)
    assert result["radial"]
    assert np.linalg.norm(np.asarray(result["center"]) - [0.3, 0.0]) <= grid.h

    left = BallTorsion(p, [-0.5, 0.0], 0.3)
    right = BallTorsion(p, [0.5, 0.0], 0.15)
    bumps = Field.from_function(grid, lambda x: left(x) + 3.0 * right(x))
    result = radial_monotone_test(bumps)
    assert not result["radial"]
    assert result["witness"] is not None
    assert result["witness"]["min_v"] < 0.0 < result["witness"]["max_v"]

    assert not radial_monotone_test(Field.zeros(grid))["radial"]
    print("✓ Radial fields recognised with their centers; two bumps rejected with a witness")


def test_union_1d():
    print("Testing one-dimensional unions...")
    p = FracParams(1, 0.5)
    d = Domain.union([Interval(-2.05, -0.05), Interval(0.05, 2.05)])
    u = solve_dirichlet(d, 1.0, p, SolveConfig(h=1.0 / 128))
    result = analyze_union_1d(u, d)
    assert result["components"] == 2
    assert not result["single_interval_consistent"]
    assert abs(result["lambda0"] - 1.05) < 1e-4
    assert abs(result["lambda0_left"] + 1.05) < 1e-4
    assert not result["symmetric_about_leftmost"]

    single = Interval(-1.0, 1.0)
    w = solve_dirichlet(single, 1.0, p, SolveConfig(h=1.0 / 64))
    one = analyze_union_1d(w, single)
    assert one["components"] == 1
    assert abs(one["lambda0"]) < 1e-4 and abs(one["lambda0_left"]) < 1e-4
    assert one["single_interval_consistent"]

    count, _ = connected_components(d)
    assert count == 2
    count, labels = connected_components(u)
    assert count == 2
    try:
        analyze_union_1d(u, Ball([0.0, 0.0], 1.0))
        raise AssertionError("two-dimensional domain accepted")
    except ValueError:
        pass
    print("✓ Two components detected, not consistent with a single interval")


if __name__ == "__main__":
    print("=" * 60)
    print("MovingPlane Test Suite")
    print("=" * 60)
    test_critical_planes()
    test_solved_disc_is_symmetric()
    test_solved_ellipse()
    test_radial_test()
    test_union_1d()
    print("\n" + "=" * 60)
    print("Test suite completed.")
    print("=" * 60)
