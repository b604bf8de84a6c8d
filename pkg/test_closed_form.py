#!/usr/bin/env python3
"""
Test script for ClosedForm
Ball torsion function, Hopf barrier and corner barrier
"""

import numpy as np

from ClosedForm import BallTorsion, CornerBarrier, HopfBarrier, indicator, plane_gap
from FracConstants import FracParams
from Geometry import Ball, Box, HalfSpace


def test_ball_torsion():
    print("Testing ball torsion function...")
    p = FracParams(1, 0.5)
    bt = BallTorsion(p, [0.0], 1.0)
    assert abs(bt(np.array([0.0])) - 1.0) < 1e-15
    assert bt(np.array([[1.5]]))[0] == 0.0
    assert abs(bt.sup() - 1.0) < 1e-15
    assert abs(bt.frac_normal_derivative() + np.sqrt(2.0)) < 1e-14

    p2 = FracParams(2, 0.25)
    bt2 = BallTorsion(p2, [1.0, -1.0], 2.0)
    x = np.array([[1.0, -1.0], [2.0, -1.0], [4.0, 0.0]])
    expected = p2.gamma_ns * np.clip(4.0 - np.sum((x - [1.0, -1.0]) ** 2, axis=1), 0.0, None) ** 0.25
    assert np.allclose(bt2(x), expected)
    assert abs(bt2.frac_normal_derivative() + p2.gamma_ns * 4.0 ** 0.25) < 1e-14
    try:
        BallTorsion(p, [0.0, 0.0], 1.0)
        raise AssertionError("center of wrong dimension accepted")
    except ValueError:
        pass
    print("✓ Torsion values and fractional normal derivative")


def test_hopf_barrier_is_odd():
    print("Testing Hopf barrier antisymmetry...")
    p = FracParams(2, 0.5)
    hs = HalfSpace([1.0, 0.0], 0.0)
    B1 = Ball([0.45, 0.0], 0.15)
    K = Box([0.7, -0.1], [0.9, 0.1])
    hb = HopfBarrier(p, B1, K, hs, 3.0)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.0, 1.0, (200, 2))
    assert np.allclose(hb(hs.reflect(x)), -hb(x))
    assert abs(hb(np.array([0.8, 0.0])) - 3.0) < 1e-15
    assert abs(plane_gap(B1, hs) - 0.3) < 1e-15
    assert indicator(K, np.array([0.8, 0.0])) == 1.0

    entire = HopfBarrier(p, B1, Ball([0.8, 0.0], 0.1), None, 2.0)
    assert entire(np.array([-0.45, 0.0])) == 0.0
    try:
        HopfBarrier(p, B1, Ball([0.65, 0.0], 0.1), hs, 1.0)
        raise AssertionError("K touching B1 accepted")
    except ValueError:
        pass
    try:
        HopfBarrier(p, B1, K, HalfSpace([1.0, 0.0], 0.35), 1.0)
        raise AssertionError("B1 crossing the plane accepted")
    except ValueError:
        pass
    print("✓ Barrier is odd across the plane; invalid configurations rejected")


def test_corner_barrier_diagonal():
    print("Testing corner barrier along the diagonal...")
    p = FracParams(2, 0.5)
    R = 0.5
    cb = CornerBarrier(p, R, 1.0)
    t = np.linspace(0.01, 0.4, 20)
    pts = t[:, None] * cb.eta_bar
    assert np.allclose(cb(pts), cb.along_diagonal(t))
    assert abs(cb.leading_coefficient() - 1.0) < 1e-15
    ratio = cb.along_diagonal(1e-6) / 1e-6 ** 1.5
    assert abs(ratio - cb.leading_coefficient()) < 1e-5

    rng = np.random.default_rng(2)
    x = rng.uniform(-3.0, 3.0, (300, 2))
    mirrored = x * np.array([-1.0, 1.0])
    assert np.allclose(cb(mirrored), -cb(x))
    assert cb(cb.B_left.center) > 0.0
    try:
        CornerBarrier(FracParams(1, 0.5), R, 1.0)
        raise AssertionError("one-dimensional corner barrier accepted")
    except ValueError:
        pass
    print("✓ h(t eta_bar) = t^(1+s) (2R - 2t)^s and h is odd in x1")


if __name__ == "__main__":
    print("=" * 60)
    print("ClosedForm Test Suite")
    print("=" * 60)
    test_ball_torsion()
    test_hopf_barrier_is_odd()
    test_corner_barrier_diagonal()
    print("\n" + "=" * 60)
    print("Test suite completed.")
    print("=" * 60)
