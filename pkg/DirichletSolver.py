import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from BoundaryDerivative import BoundarySampler
from ClosedForm import BallTorsion
from FracOperator import Field, KernelStencil, QuadratureScheme, assemble_stiffness
from Geometry import Ball, Grid


class ConvergenceError(Exception):
    """Iteration cap reached; carries the last iterate and the residual history"""

    def __init__(self, message, last_iterate=None, history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = list(history or [])


@dataclass
class SolveConfig:
    h: float = 1.0 / 64
    quad: QuadratureScheme = field(default_factory=QuadratureScheme)
    linear_tol: float = 1e-10
    nonlinear: str = "off"  # 'off' or 'fixed-point'
    damping: float = 0.5
    max_iterations: int = 200
    nonlinear_tol: float = 1e-10
    half_width: float = None  # symmetric grid [-w, w]^N instead of a covering grid
    cap: int = 20000
    eig_tol: float = 1e-8
    eig_max_iterations: int = 500

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"solve.h must be > 0, got {self.h}")
        if self.nonlinear not in ("off", "fixed-point"):
            raise ValueError(f"solve.nonlinear must be 'off' or 'fixed-point', got {self.nonlinear!r}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"solve.damping must lie in (0, 1], got {self.damping}")
        if self.max_iterations < 1 or self.eig_max_iterations < 1:
            raise ValueError("iteration caps must be >= 1")

    def grid_for(self, domain):
        if self.half_width is not None:
            return Grid.symmetric(self.half_width, self.h, domain.dim)
        return Grid.covering(domain, self.h)


# Whitelisted nonlinearities for the semilinear path

class FConstant:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)

    def lipschitz(self, bound):
        return 0.0

    def describe(self):
        return {"kind": "constant", "value": self.value}


class FAffine:
    """f(u) = a + b u"""

    def __init__(self, a, b):
        self.a = float(a)
        self.b = float(b)

    def __call__(self, u):
        return self.a + self.b * np.asarray(u, dtype=float)

    def lipschitz(self, bound):
        return abs(self.b)

    def describe(self):
        return {"kind": "affine", "a": self.a, "b": self.b}


class FTruncatedPower:
    """f(u) = a min(u_+, cap)^p with p >= 1"""

    def __init__(self, a, p, cap):
        if p < 1:
            raise ValueError(f"truncated power needs p >= 1, got {p}")
        if not cap > 0:
            raise ValueError(f"truncated power needs cap > 0, got {cap}")
        self.a = float(a)
        self.p = float(p)
        self.cap = float(cap)

    def __call__(self, u):
        return self.a * np.clip(np.asarray(u, dtype=float), 0.0, self.cap) ** self.p

    def lipschitz(self, bound):
        top = min(bound, self.cap)
        return abs(self.a) * self.p * max(top, 0.0) ** (self.p - 1.0)

    def describe(self):
        return {"kind": "truncated-power", "a": self.a, "p": self.p, "cap": self.cap}


def make_nonlinearity(options):
    """Build a whitelisted f from {'kind': ..., params}"""
    kind = options.get("kind")
    if kind == "constant":
        return FConstant(options.get("value", 1.0))
    if kind == "affine":
        return FAffine(options.get("a", 1.0), options.get("b", 0.0))
    if kind == "truncated-power":
        return FTruncatedPower(options.get("a", 1.0), options.get("p", 2.0), options.get("cap", 1.0))
    raise ValueError(f"unknown nonlinearity {kind!r}; expected constant, affine or truncated-power")


class DirichletSolver:
    """
    Dense collocation solver for (-Delta)^s u = g in a domain, u = 0 outside
    The matrix is assembled and factorized once per (domain, params, config)
    """

    def __init__(self, domain, params, cfg=None):
        self.domain = domain
        self.params = params
        self.cfg = cfg or SolveConfig()
        self.grid = self.cfg.grid_for(domain)
        self.A, self.flat = assemble_stiffness(self.grid, domain, params, self.cfg.quad, self.cfg.cap)
        self.nodes = self.grid.nodes()[self.flat]
        self._lu = None
        self.logger = logging.getLogger('DirichletSolver')

    def factorization(self):
        if self._lu is None:
            try:
                self._lu = lu_factor(self.A, check_finite=False)
            except LinAlgError as e:
                raise RuntimeError(f"internal error: stiffness factorization failed ({e})")
        return self._lu

    def to_field(self, interior_values):
        vals = np.zeros(self.grid.size)
        vals[self.flat] = interior_values
        return Field(self.grid, vals, self.domain)

    def rhs_values(self, g):
        if callable(g):
            return np.asarray(g(self.nodes), dtype=float).reshape(len(self.flat))
        return np.full(len(self.flat), float(g))

    def solve(self, g):
        """Solve A u = g at interior nodes"""
        b = self.rhs_values(g)
        u = lu_solve(self.factorization(), b, check_finite=False)
        residual = float(np.max(np.abs(self.A @ u - b))) if len(b) else 0.0
        field_u = self.to_field(u)
        field_u.meta.update({"residual": residual, "interior_nodes": len(b)})
        self.logger.info(f"✓ Dirichlet solve: {len(b)} nodes, residual {residual:.3e}")
        return field_u

    def solve_semilinear(self, f, initial=None, lipschitz=None):
        """Damped Picard iteration u <- u + theta (A^-1 f(u) - u); the first step from zero is undamped"""
        cfg = self.cfg
        if cfg.nonlinear != "fixed-point":
            raise ValueError("semilinear solve needs solve.nonlinear = 'fixed-point'")
        u = np.zeros(len(self.flat)) if initial is None else np.asarray(initial, dtype=float).copy()
        lu = self.factorization()
        history = []
        for k in range(1, cfg.max_iterations + 1):
            target = lu_solve(lu, f(u), check_finite=False)
            step = float(np.max(np.abs(target - u))) if len(u) else 0.0
            history.append(step)
            if step <= cfg.nonlinear_tol:
                result = self.to_field(u)
                bound = float(np.max(np.abs(u))) if len(u) else 0.0
                L = lipschitz if lipschitz is not None else (f.lipschitz(bound) if hasattr(f, "lipschitz") else None)
                nonneg = bool(np.all(u >= -cfg.linear_tol))
                result.meta.update({
                    "iterations": k - 1,
                    "history": history,
                    "residual": float(np.max(np.abs(self.A @ u - f(u)))) if len(u) else 0.0,
                    "lipschitz": L,
                    "nonnegative": nonneg,
                })
                if not nonneg:
                    self.logger.warning(f"⚠ Semilinear solution has negative values (min {np.min(u):.3e})")
                self.logger.info(f"✓ Picard iteration converged in {k - 1} steps")
                return result
            theta = 1.0 if (k == 1 and not np.any(u)) else cfg.damping
            u = u + theta * (target - u)
        self.logger.error(f"✗ Picard iteration stalled after {cfg.max_iterations} steps (last step {history[-1]:.3e})")
        raise ConvergenceError("fixed-point iteration did not converge", self.to_field(u), history)

    def lambda1(self):
        """(lambda_1, eigenfunction Field, relative residual) by inverse power iteration on (h^N A, h^N I)"""
        h_N = self.grid.h ** self.params.N
        K = h_N * self.A
        lu = self.factorization()
        x = np.ones(len(self.flat))
        x /= np.linalg.norm(x)
        lam, res = np.nan, np.inf
        for k in range(self.cfg.eig_max_iterations):
            # K^-1 M x = A^-1 x since both carry the factor h^N
            y = lu_solve(lu, x, check_finite=False)
            x = y / np.linalg.norm(y)
            Kx = K @ x
            lam = float(x @ Kx) / h_N
            res = float(np.linalg.norm(Kx - lam * h_N * x) / (lam * h_N))
            if res <= self.cfg.eig_tol:
                self.logger.info(f"✓ lambda_1 = {lam:.10f} after {k + 1} inverse iterations")
                phi = self.to_field(np.abs(x))
                phi.meta.update({"eigen_residual": res, "iterations": k + 1})
                return lam, phi, res
        raise ConvergenceError(f"inverse power iteration stalled (residual {res:.3e})", self.to_field(x), [res])

    def lambda1_estimate(self, samples=32):
        """
        (volume-matched lambda_1, raw lambda_1, mean boundary offset)
        The discrete eigenfunction vanishes a mean distance theta inside the boundary; lambda_1 is
        rescaled from the effective volume |Omega| - theta |dOmega| with the ball exponent 2s/N
        """
        lam, phi, _ = self.lambda1()
        report = BoundarySampler(self.params).report(phi, self.domain, samples)
        offsets = [smp["offset"] for smp in report["samples"] if smp["ok"]]
        theta = float(np.mean(offsets)) if offsets else 0.0
        volume = self.domain.volume()
        effective = volume - theta * self.domain.boundary_measure()
        if not effective > 0.0:
            return lam, lam, theta
        matched = lam * (effective / volume) ** (2.0 * self.params.s / self.params.N)
        self.logger.info(f"lambda_1 = {matched:.8f} (raw {lam:.8f}, boundary offset {theta:.3e})")
        return matched, lam, theta


def solve_dirichlet(d, g, p, cfg=None):
    return DirichletSolver(d, p, cfg).solve(g)


def solve_semilinear(d, f, p, cfg=None, lipschitz=None):
    return DirichletSolver(d, p, cfg).solve_semilinear(f, lipschitz=lipschitz)


def estimate_lambda1(d, p, cfg=None):
    """Volume-matched first eigenvalue, see DirichletSolver.lambda1_estimate"""
    return DirichletSolver(d, p, cfg).lambda1_estimate()[0]


def ball_operator_residual(params, h, radius=1.0, min_delta=0.2, near="taylor"):
    """Max |(-Delta)^s psi_B - 1| over nodes with distance >= min_delta * R to the sphere"""
    center = np.zeros(params.N)
    bt = BallTorsion(params, center, radius)
    ball = Ball(center, radius)
    grid = Grid.covering(ball, h)
    psi = Field.from_function(grid, bt, ball)
    Lu = KernelStencil.for_grid(params, grid, near).apply(psi.values)
    mask = psi.delta() >= min_delta * radius
    return float(np.max(np.abs(Lu[mask] - 1.0)))


def residual_convergence(params, hs, radius=1.0, min_delta=0.2):
    """Residuals per h and observed orders between consecutive spacings"""
    residuals = [ball_operator_residual(params, h, radius, min_delta) for h in hs]
    orders = []
    for k in range(1, len(hs)):
        if residuals[k] > 0 and residuals[k - 1] > 0:
            orders.append(float(np.log(residuals[k - 1] / residuals[k]) / np.log(hs[k - 1] / hs[k])))
        else:
            orders.append(float("nan"))
    return {"h": list(hs), "residual": residuals, "order": orders}


def _node_keys(nodes, h, shift=None):
    shifted = nodes if shift is None else nodes - shift
    return [tuple(k) for k in np.rint(shifted / h).astype(int)]


def translation_defect(params, h, shift, radius=1.0, cfg=None):
    """Relative max difference between the torsion solves on B_R(0) and B_R(shift); shift must be a lattice vector"""
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if np.max(np.abs(shift / h - np.rint(shift / h))) > 1e-9:
        raise ValueError(f"shift {shift.tolist()} is not a multiple of h = {h}")
    cfg = cfg or SolveConfig(h=h)
    base = DirichletSolver(Ball(np.zeros(params.N), radius), params, cfg)
    moved = DirichletSolver(Ball(shift, radius), params, cfg)
    u0 = base.solve(1.0).values.ravel()[base.flat]
    u1 = moved.solve(1.0).values.ravel()[moved.flat]
    lookup = dict(zip(_node_keys(base.nodes, h), u0))
    keys = _node_keys(moved.nodes, h, shift)
    if set(keys) != set(lookup):
        raise RuntimeError("internal error: translated interiors do not match")
    diff = max(abs(lookup[k] - v) for k, v in zip(keys, u1))
    return diff / float(np.max(np.abs(u0)))


def scaling_defect(params, h, factor, cfg=None):
    """Relative max of |u_R(R x) - R^2s u_1(x)| between solves on B_1 at spacing h and B_R at spacing R h"""
    cfg = cfg or SolveConfig(h=h)
    unit = DirichletSolver(Ball(np.zeros(params.N), 1.0), params, cfg)
    big_cfg = SolveConfig(**{**cfg.__dict__, "h": factor * h,
                             "half_width": None if cfg.half_width is None else factor * cfg.half_width})
    big = DirichletSolver(Ball(np.zeros(params.N), factor), params, big_cfg)
    u1 = unit.solve(1.0).values.ravel()[unit.flat]
    uR = big.solve(1.0).values.ravel()[big.flat]
    lookup = dict(zip(_node_keys(unit.nodes, h), u1))
    keys = _node_keys(big.nodes / factor, h)
    diff = max(abs(factor ** (2.0 * params.s) * lookup[k] - v) for k, v in zip(keys, uR))
    return diff / float(np.max(np.abs(uR)))
