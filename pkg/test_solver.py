#!/usr/bin/env python3
"""
Test script for DirichletSolver
Linear and semilinear solves, first eigenvalue and lattice invariances
"""

import numpy as np

from ClosedForm import BallTorsion
from DirichletSolver import (ConvergenceError, DirichletSolver, FAffine, FConstant, SolveConfig, estimate_lambda1,
                             make_nonlinearity, scaling_defect, solve_dirichlet, translation_defect)
from FracConstants import FracParams, lambda1_lower_bound
from FracOperator import SizeCapError, rayleigh_quotient
from Geometry import Ball, Interval


def _torsion_error(u, params, radius=1.0, min_delta=0.2):
    bt = BallTorsion(params, np.zeros(params.N), radius)
    mask = u.delta() >= min_delta * radius
    exact = bt(u.grid.nodes()).reshape(u.grid.shape)
    return float(np.max(np.abs(u.values[mask] - exact[mask])) / bt.sup())


def test_torsion_solve_1d():
    print("Testing 1D torsion solve...")
    for s in (0.3, 0.5, 0.7):
        p = FracParams(1, s)
        u = solve_dirichlet(Interval(-1.0, 1.0), 1.0, p, SolveConfig(h=1.0 / 256))
        err = _torsion_error(u, p)
        print(f"  s={s}: relative error {err:.3e}, residual {u.meta['residual']:.2e}")
        assert err <= 0.05
        assert u.meta["residual"] < 1e-8
        assert np.all(u.values >= 0.0)
    print("✓ 1D solves within 5% of the closed form")


def test_torsion_solve_2d():
    print("Testing 2D torsion solve...")
    p = FracParams(2, 0.5)
    u = solve_dirichlet(Ball([0.0, 0.0], 1.0), 1.0, p, SolveConfig(h=1.0 / 32, half_width=1.1))
    err = _torsion_error(u, p)
    print(f"  relative error {err:.3e}")
    assert err <= 0.05
    print("✓ 2D solve within 5% of the closed form")


def test_first_eigenvalue():
    print("Testing first eigenvalue of the interval...")
    p = FracParams(1, 0.5)
    d = Interval(-1.0, 1.0)
    lam_coarse, _, _ = DirichletSolver(d, p, SolveConfig(h=1.0 / 128)).lambda1()
    lam, phi, res = DirichletSolver(d, p, SolveConfig(h=1.0 / 256)).lambda1()
    print(f"  lambda_1 = {lam:.6f} (h=1/128: {lam_coarse:.6f})")
    assert lam >= lambda1_lower_bound(p, d.volume())
    assert abs(lam - lam_coarse) <= 5e-3 * lam
    assert res <= 1e-8
    assert np.all(phi.values >= 0.0)
    assert abs(rayleigh_quotient(phi, p) - lam) <= 0.03 * lam
    print("✓ lambda_1 above the volume bound, stable in h, matches the Rayleigh quotient")


def test_first_eigenvalue_disc():
    print("Testing first eigenvalue of the unit disc...")
    p = FracParams(2, 0.5)
    d = Ball([0.0, 0.0], 1.0)
    bound = lambda1_lower_bound(p, d.volume())
    coarse, raw_coarse, _ = DirichletSolver(d, p, SolveConfig(h=1.0 / 16)).lambda1_estimate()
    lam, raw, offset = DirichletSolver(d, p, SolveConfig(h=1.0 / 32)).lambda1_estimate()
    print(f"  lambda_1 = {lam:.6f} (h=1/16: {coarse:.6f}; raw {raw:.6f}, {raw_coarse:.6f}), bound {bound:.6f}")
    assert lam >= bound and raw >= bound
    assert abs(lam - coarse) <= 5e-3 * lam
    assert abs(offset) <= 1.0 / 32
    assert abs(estimate_lambda1(d, p, SolveConfig(h=1.0 / 16)) - coarse) < 1e-9 * coarse
    print("✓ Disc eigenvalue above sqrt(pi) |B|^(-1/2) = 1 and stable to three digits")


def test_linearity_and_comparison():
    print("Testing linearity and comparison in the right-hand side...")
    p = FracParams(2, 0.5)
    solver = DirichletSolver(Ball([0.0, 0.0], 1.0), p, SolveConfig(h=1.0 / 16))
    g1 = lambda x: 1.0 + 0.0 * x[:, 0]
    g2 = lambda x: 1.0 + x[:, 0] ** 2 + 0.5 * x[:, 1]
    u1 = solver.solve(g1)
    u2 = solver.solve(g2)
    combo = solver.solve(lambda x: 2.0 * g1(x) - 3.0 * g2(x))
    assert np.max(np.abs(combo.values - (2.0 * u1.values - 3.0 * u2.values))) <= 1e-10 * u2.max_abs()
    assert np.allclose(solver.solve(1.0).values, u1.values, rtol=0.0, atol=1e-14)

    # g3 >= g1 pointwise, so the solutions are ordered
    u3 = solver.solve(lambda x: 1.0 + x[:, 0] ** 2)
    assert np.all(u3.values >= u1.values - 1e-12)
    assert np.max(u3.values - u1.values) > 0.0
    print("✓ Solution map linear and order preserving")


def test_semilinear_constant_matches_linear():
    print("Testing fixed-point iteration with constant f...")
    p = FracParams(1, 0.5)
    cfg = SolveConfig(h=1.0 / 64, nonlinear="fixed-point")
    solver = DirichletSolver(Interval(-1.0, 1.0), p, cfg)
    linear = solver.solve(1.0)
    fixed = solver.solve_semilinear(FConstant(1.0))
    assert fixed.meta["iterations"] == 1
    assert np.allclose(fixed.values, linear.values, rtol=0.0, atol=1e-12)
    assert fixed.meta["lipschitz"] == 0.0
    print("✓ Constant right-hand side converges in one step to the linear solution")


def test_semilinear_affine():
    print("Testing fixed-point iteration with affine f...")
    p = FracParams(1, 0.5)
    cfg = SolveConfig(h=1.0 / 64, nonlinear="fixed-point")
    solver = DirichletSolver(Interval(-1.0, 1.0), p, cfg)
    u = solver.solve_semilinear(FAffine(1.0, 0.5))
    assert u.meta["nonnegative"]
    assert u.meta["residual"] < 1e-6
    assert u.meta["lipschitz"] == 0.5
    assert np.max(u.values) > np.max(solver.solve(1.0).values)
    try:
        solver_linear = DirichletSolver(Interval(-1.0, 1.0), p, SolveConfig(h=1.0 / 64))
        solver_linear.solve_semilinear(FAffine(1.0, 0.5))
        raise AssertionError("semilinear solve ran with solve.nonlinear = 'off'")
    except ValueError:
        pass
    print("✓ Affine f converges to a nonnegative solution above the torsion function")


def test_nonlinearity_factory():
    assert isinstance(make_nonlinearity({"kind": "constant", "value": 2.0}), FConstant)
    f = make_nonlinearity({"kind": "truncated-power", "a": 2.0, "p": 2.0, "cap": 1.0})
    assert np.allclose(f(np.array([-1.0, 0.5, 3.0])), [0.0, 0.5, 2.0])
    for options in ({"kind": "exp"}, {"kind": "truncated-power", "p": 0.5}):
        try:
            make_nonlinearity(options)
        except ValueError:
            continue
        raise AssertionError(f"{options} should be rejected")
    print("✓ Whitelisted nonlinearities built, others rejected")


def test_failures():
    print("Testing size cap and stalled iteration...")
    p = FracParams(1, 0.5)
    try:
        DirichletSolver(Interval(-1.0, 1.0), p, SolveConfig(h=1.0 / 64, cap=10))
        raise AssertionError("size cap ignored")
    except SizeCapError as e:
        assert e.cap == 10 and e.count > 10
    cfg = SolveConfig(h=1.0 / 32, nonlinear="fixed-point", max_iterations=2, nonlinear_tol=1e-14)
    try:
        DirichletSolver(Interval(-1.0, 1.0), p, cfg).solve_semilinear(FAffine(1.0, 0.5))
        raise AssertionError("iteration cap ignored")
    except ConvergenceError as e:
        assert len(e.history) == 2
        assert e.last_iterate is not None
    for bad in ({"h": 0.0}, {"nonlinear": "newton"}, {"damping": 1.5}, {"max_iterations": 0}):
        try:
            SolveConfig(**bad)
        except ValueError:
            continue
        raise AssertionError(f"SolveConfig({bad}) should be rejected")
    print("✓ SizeCapError and ConvergenceError raised")


def test_lattice_invariances():
    print("Testing translation and scaling invariance...")
    p = FracParams(1, 0.4)
    defect = translation_defect(p, 1.0 / 64, [0.25])
    print(f"  translation defect {defect:.2e}")
    assert defect <= 1e-8
    defect = scaling_defect(p, 1.0 / 64, 2.0)
    print(f"  scaling defect {defect:.2e}")
    assert defect <= 1e-8
    try:
        translation_defect(p, 1.0 / 64, [0.01])
        raise AssertionError("off-lattice shift accepted")
    except ValueError:
        pass
    print("✓ Discrete solutions translate and scale exactly")


if __name__ == "__main__":
    print("=" * 60)
    print("DirichletSolver Test Suite")
    print("=" * 60)
    test_torsion_solve_1d()
    test_torsion_solve_2d()
    test_first_eigenvalue()
    test_first_eigenvalue_disc()
    test_linearity_and_comparison()
    test_semilinear_constant_matches_linear()
    test_semilinear_affine()
    test_nonlinearity_factory()
    test_failures()
    test_lattice_invariances()
    print("\n" + "=" * 60)
    print("Test suite completed.")
    print("=" * 60)
