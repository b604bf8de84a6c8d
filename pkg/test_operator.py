#!/usr/bin/env python3
"""
Test script for FracOperator
Stencil structure, tail integrals and the ball oracle
"""

import numpy as np

from ClosedForm import BallTorsion
from DirichletSolver import ball_operator_residual
from FracConstants import FracParams
from FracOperator import (Field, KernelStencil, QuadratureScheme, bilinear_form, frac_laplacian_at,
                          interior_indices, rayleigh_quotient)
from Geometry import Ball, Grid, Interval


def test_field_and_quadrature():
    print("Testing fields and quadrature settings...")
    grid = Grid.symmetric(1.5, 0.25, 1)
    f = Field(grid, np.ones(grid.shape), Interval(-1.0, 1.0))
    nodes = grid.nodes()[:, 0]
    assert np.all(f.values[np.abs(nodes) >= 1.0] == 0.0)
    assert np.all(f.values[np.abs(nodes) < 1.0] == 1.0)
    try:
        Field(grid, np.full(grid.shape, np.nan))
        raise AssertionError("non-finite field accepted")
    except ValueError:
        pass
    for bad in ({"near": "midpoint"}, {"rho": -1.0}, {"h": 0.0}, {"tail": "numeric"}):
        try:
            QuadratureScheme(**bad)
        except ValueError:
            continue
        raise AssertionError(f"QuadratureScheme({bad}) should be rejected")
    assert QuadratureScheme(near="split").near_cells == 1
    print("✓ Field zero outside its support; bad quadrature settings rejected")


def test_matrix_structure():
    """Off-diagonals <= 0 and strictly positive row sums (M-matrix)"""
    print("Testing stiffness matrix structure...")
    for N, h in ((1, 1.0 / 32), (2, 1.0 / 8)):
        for near in ("taylor", "split"):
            p = FracParams(N, 0.4)
            ball = Ball(np.zeros(N), 1.0)
            grid = Grid.covering(ball, h)
            multi, _ = interior_indices(grid, ball)
            A = KernelStencil.for_grid(p, grid, near).matrix(multi)
            off = A - np.diag(np.diag(A))
            assert np.all(off <= 0.0)
            assert np.all(np.sum(A, axis=1) > 0.0)
            assert np.allclose(A, A.T)
    print("✓ Matrix is symmetric with nonpositive off-diagonals and positive row sums")


def test_apply_matches_matrix():
    print("Testing FFT application against the dense matrix...")
    p = FracParams(2, 0.6)
    ball = Ball([0.0, 0.0], 1.0)
    grid = Grid.covering(ball, 1.0 / 8)
    multi, flat = interior_indices(grid, ball)
    stencil = KernelStencil.for_grid(p, grid)
    rng = np.random.default_rng(3)
    u = np.zeros(grid.size)
    u[flat] = rng.uniform(0.0, 1.0, len(flat))
    via_fft = stencil.apply(u.reshape(grid.shape)).ravel()[flat]
    via_matrix = stencil.matrix(multi) @ u[flat]
    scale = np.max(np.abs(via_matrix))
    assert np.allclose(via_fft, via_matrix, rtol=0.0, atol=1e-9 * scale)
    print("✓ apply() agrees with A @ u at interior nodes")


def test_tail_integrals():
    print("Testing kernel tail integrals...")
    p1 = FracParams(1, 0.3)
    st1 = KernelStencil(p1, 0.05, 40)
    L = (40 + 0.5) * 0.05
    assert abs(st1.tail() - st1.spherical_tail(L)) < 1e-10 * st1.tail()
    assert abs(st1.tail_from_weights() - st1.tail()) < 1e-10 * st1.tail()

    p2 = FracParams(2, 0.5)
    st2 = KernelStencil(p2, 0.05, 24)
    L = (24 + 0.5) * 0.05
    assert st2.spherical_tail(L) > st2.tail() > st2.spherical_tail(np.sqrt(2.0) * L)
    assert abs(st2.tail_from_weights() - st2.tail()) < 1e-2 * st2.tail()
    print("✓ Cube tail lies between inscribed and circumscribed ball tails")


def test_ball_oracle_1d():
    """(-Delta)^s of the ball torsion function is 1 away from the boundary"""
    print("Testing the 1D ball oracle...")
    hs = [1.0 / 64, 1.0 / 128, 1.0 / 256]
    for s in (0.25, 0.5, 0.75):
        p = FracParams(1, s)
        residuals = [ball_operator_residual(p, h) for h in hs]
        print(f"  s={s}: residuals {[f'{r:.2e}' for r in residuals]}")
        assert residuals[-1] <= 0.05
        assert residuals[0] > residuals[1] > residuals[2]
    print("✓ Residual <= 5% at h = 1/256 and decreasing in h")


def test_bilinear_form():
    print("Testing bilinear form and Rayleigh quotient...")
    p = FracParams(2, 0.5)
    ball = Ball([0.0, 0.0], 1.0)
    grid = Grid.covering(ball, 1.0 / 8)
    rng = np.random.default_rng(4)
    u = Field(grid, rng.uniform(0.0, 1.0, grid.shape), ball)
    v = Field(grid, rng.uniform(-1.0, 1.0, grid.shape), ball)
    assert abs(bilinear_form(u, v, p) - bilinear_form(v, u, p)) < 1e-12 * abs(bilinear_form(u, u, p))
    assert bilinear_form(u, u, p) > 0.0
    assert rayleigh_quotient(u.scaled(3.0), p) > 0.0
    assert abs(rayleigh_quotient(u.scaled(3.0), p) - rayleigh_quotient(u, p)) < 1e-10 * rayleigh_quotient(u, p)
    try:
        rayleigh_quotient(Field.zeros(grid, ball), p)
        raise AssertionError("zero field accepted")
    except ValueError:
        pass
    print("✓ E(u, v) symmetric, positive, Rayleigh quotient scale invariant")


def test_bilinearity_and_torsion_energy():
    print("Testing bilinearity and the torsion energy...")
    p = FracParams(2, 0.5)
    ball = Ball([0.0, 0.0], 1.0)
    grid = Grid.covering(ball, 1.0 / 8)
    rng = np.random.default_rng(7)
    u, w, v = (Field(grid, rng.uniform(-1.0, 1.0, grid.shape), ball) for _ in range(3))
    combo = u.with_values(2.0 * u.values - 3.0 * w.values)
    lhs = bilinear_form(combo, v, p)
    rhs = 2.0 * bilinear_form(u, v, p) - 3.0 * bilinear_form(w, v, p)
    assert abs(lhs - rhs) < 1e-10 * (abs(bilinear_form(u, v, p)) + abs(bilinear_form(w, v, p)))

    # E(psi, psi) = integral of psi, since (-Delta)^s psi = 1 on the ball
    p1 = FracParams(1, 0.5)
    d = Interval(-1.0, 1.0)
    fine = Grid.covering(d, 1.0 / 512)
    psi = Field.from_function(fine, BallTorsion(p1, [0.0], 1.0), d)
    energy = bilinear_form(psi, psi, p1)
    exact = np.pi / 2.0
    print(f"  E(psi, psi) = {energy:.6f}, integral {exact:.6f}")
    assert abs(energy - exact) <= 0.03 * exact
    print("✓ E bilinear; torsion energy equals its integral within 3%")


def test_callable_matches_field():
    print("Testing callable input against a field input...")
    p = FracParams(1, 0.5)
    bt = BallTorsion(p, [0.0], 1.0)
    ball = Ball([0.0], 1.0)
    h = 1.0 / 64
    grid = Grid.symmetric(1.5, h, 1)
    field_value, low = frac_laplacian_at(Field.from_function(grid, bt, ball), [0.25], p)
    assert not low
    q = QuadratureScheme(rho=1.5, h=h)
    callable_value, low = frac_laplacian_at(bt, [0.25], p, q, support=ball)
    assert not low
    assert abs(field_value - callable_value) < 1e-3
    assert abs(callable_value - 1.0) < 0.1
    wide = QuadratureScheme(rho=2.0 + h, h=h)
    _, low = frac_laplacian_at(bt, [0.99], p, wide, support=ball)
    assert low
    try:
        frac_laplacian_at(bt, [0.25], p, QuadratureScheme(rho=0.5, h=h), support=ball)
        raise AssertionError("short cutoff accepted")
    except ValueError:
        pass
    print("✓ Callable and field evaluations agree; boundary points flagged")


if __name__ == "__main__":
    print("=" * 60)
    print("FracOperator Test Suite")
    print("=" * 60)
    test_field_and_quadrature()
    test_matrix_structure()
    test_apply_matches_matrix()
    test_tail_integrals()
    test_ball_oracle_1d()
    test_bilinear_form()
    test_bilinearity_and_torsion_energy()
    test_callable_matches_field()
    print("\n" + "=" * 60)
    print("Test suite completed.")
    print("=" * 60)
