import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.signal import fftconvolve

from FracConstants import c_ns
from Geometry import Grid, unit_sphere_area


class SizeCapError(Exception):
    """Raised when an assembly would exceed the interior node cap"""

    def __init__(self, count, cap):
        super().__init__(f"{count} interior nodes exceed the cap of {cap}")
        self.count = count
        self.cap = cap


def worker_count():
    """Worker cap from FRACLAP_THREADS, defaulting to the CPU count"""
    env = os.environ.get("FRACLAP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


class Field:
    """
    Scalar field on a grid, identically zero outside its support
    support may be None for fields (such as antisymmetric differences) without a single domain
    """

    def __init__(self, grid, values, support=None):
        values = np.asarray(values, dtype=float).reshape(grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.support = support
        self.values = values.copy()
        self.meta = {}  # solver diagnostics (residual, iterations, ...)
        if support is not None:
            self.values[self.delta() <= 0.0] = 0.0

    @classmethod
    def from_function(cls, grid, fn, support=None):
        vals = np.asarray(fn(grid.nodes()), dtype=float)
        return cls(grid, vals, support)

    @classmethod
    def zeros(cls, grid, support=None):
        return cls(grid, np.zeros(grid.shape), support)

    def with_values(self, values, support="same"):
        return Field(self.grid, values, self.support if support == "same" else support)

    def scaled(self, factor):
        return Field(self.grid, factor * self.values, self.support)

    def delta(self):
        """Signed distance of every node to the support boundary"""
        if self.support is None:
            return np.full(self.grid.shape, np.inf)
        return np.asarray(self.support.signed_distance(self.grid.nodes())).reshape(self.grid.shape)

    def interior_mask(self, min_delta=0.0):
        if self.support is None:
            return np.ones(self.grid.shape, dtype=bool)
        return self.delta() > min_delta

    def interpolate(self, points):
        return self.grid.interpolate(self.values, points)

    def at_node(self, x):
        idx = tuple(self.grid.index_of(x))
        return float(self.values[idx])

    def max_abs(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class QuadratureScheme:
    """
    Quadrature settings for the singular integral
    near: 'taylor' skips the origin cell and corrects with its second moment,
          'split' does the same on the 3^N block of cells around the origin
    """
    rho: float = None  # far-field cutoff radius (callable inputs)
    near: str = "taylor"
    tail: str = "analytic"
    h: float = None  # lattice spacing for callable inputs

    def __post_init__(self):
        if self.near not in ("taylor", "split"):
            raise ValueError(f"quad.near must be 'taylor' or 'split', got {self.near!r}")
        if self.tail != "analytic":
            raise ValueError(f"quad.tail must be 'analytic', got {self.tail!r}")
        if self.rho is not None and not self.rho > 0:
            raise ValueError(f"quad.rho must be > 0, got {self.rho}")
        if self.h is not None and not self.h > 0:
            raise ValueError(f"quad.h must be > 0, got {self.h}")

    @property
    def near_cells(self):
        return 0 if self.near == "taylor" else 1


def face_integral(dim, L, power):
    """Integral of (L^2 + |w|^2)^(power/2) over the cube face [-L, L]^(dim-1)"""
    if dim == 1:
        return L ** power
    if dim == 2:
        val, _ = integrate.quad(lambda w: (L * L + w * w) ** (power / 2.0), -L, L, epsabs=0.0, epsrel=1e-13)
        return val
    val, _ = integrate.dblquad(lambda w1, w2: (L * L + w1 * w1 + w2 * w2) ** (power / 2.0),
                               -L, L, -L, L, epsabs=0.0, epsrel=1e-12)
    return val


def cube_exterior_mass(dim, s, L):
    """Integral of |z|^(-N-2s) outside the cube of half-width L"""
    return L * 2.0 * dim * face_integral(dim, L, -dim - 2.0 * s) / (2.0 * s)


def cube_second_moment(dim, s, L):
    """Integral of |z|^2 |z|^(-N-2s) over the cube of half-width L"""
    return L * 2.0 * dim * face_integral(dim, L, 2.0 - dim - 2.0 * s) / (2.0 - 2.0 * s)


def spherical_tail(dim, s, rho):
    """Integral of |z|^(-N-2s) outside the ball of radius rho"""
    return unit_sphere_area(dim) * rho ** (-2.0 * s) / (2.0 * s)


def _gauss_cells(dim, s, cells, sub, order=10):
    """Tensor Gauss-Legendre integrals of |z|^(-N-2s) over unit cells centred at integer offsets"""
    x1, w1 = leggauss(order)
    centers = -0.5 + (np.arange(sub) + 0.5) / sub
    pts1 = (centers[:, None] + x1[None, :] / (2.0 * sub)).ravel()
    wts1 = np.tile(w1 / (2.0 * sub), sub)
    mesh = np.meshgrid(*([pts1] * dim), indexing="ij")
    P = np.column_stack([m.ravel() for m in mesh])
    W = np.prod(np.meshgrid(*([wts1] * dim), indexing="ij"), axis=0).ravel()
    out = np.empty(len(cells))
    chunk = max(1, 2_000_000 // len(P))
    for start in range(0, len(cells), chunk):
        block = cells[start:start + chunk]
        r = np.linalg.norm(block[:, None, :] + P[None, :, :], axis=2)
        out[start:start + chunk] = (r ** (-dim - 2.0 * s)) @ W
    return out


@lru_cache(maxsize=32)
def _unit_table(dim, s, extent, near_cells, near_box=6):
    """Cell weights of |z|^(-N-2s) on the unit lattice for offsets |j|_inf <= extent"""
    ax = np.arange(-extent, extent + 1)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    J = np.stack(mesh, axis=-1).reshape(-1, dim).astype(float)
    cheb = np.max(np.abs(J), axis=1)
    w = np.zeros(len(J))
    active = cheb > near_cells

    if dim == 1:
        r = np.abs(J[active, 0])
        w[active] = ((r - 0.5) ** (-2.0 * s) - (r + 0.5) ** (-2.0 * s)) / (2.0 * s)
    else:
        adjacent = active & (cheb == near_cells + 1)
        near = active & (cheb <= near_box) & ~adjacent
        far = active & (cheb > near_box)
        if np.any(adjacent):
            w[adjacent] = _gauss_cells(dim, s, J[adjacent], sub=4)
        if np.any(near):
            w[near] = _gauss_cells(dim, s, J[near], sub=1)
        if np.any(far):
            r2 = np.sum(J[far] ** 2, axis=1)
            p = dim + 2.0 * s
            w[far] = r2 ** (-p / 2.0) * (1.0 + p * (2.0 + 2.0 * s) / (24.0 * r2))
    w = w.reshape((2 * extent + 1,) * dim)
    w.setflags(write=False)
    return w


class KernelStencil:
    """
    Discrete fractional Laplacian on a uniform lattice of spacing h

    (-Delta)^s u(x) ~ c [u(x) E - sum_j W_j u(x + z_j)] - (c/2)(M0/N) lap_h u(x)
    E is the kernel mass outside the origin block, W_j the exact cell masses,
    M0 the second moment of the origin block. Off-diagonal entries are <= 0 and
    every row is strictly diagonally dominant.
    """

    def __init__(self, params, h, extent, near="taylor"):
        if not h > 0:
            raise ValueError(f"h must be > 0, got {h}")
        self.params = params
        self.h = float(h)
        self.extent = int(max(extent, 1))
        self.near = near
        self.near_cells = 0 if near == "taylor" else 1
        N, s = params.N, params.s
        self.c = c_ns(params)
        self.scale = self.c * self.h ** (-2.0 * s)

        # Unit-lattice quantities; physical values carry the factor c h^(-2s)
        L0 = self.near_cells + 0.5
        self.table = _unit_table(N, s, self.extent, self.near_cells)
        self.exterior_unit = cube_exterior_mass(N, s, L0)
        self.moment_unit = cube_second_moment(N, s, L0)
        self.tail_unit = cube_exterior_mass(N, s, self.extent + 0.5)

        self.logger = logging.getLogger('KernelStencil')

    @classmethod
    def for_grid(cls, params, grid, near="taylor"):
        return cls(params, grid.h, int(np.max(grid.counts)) - 1, near)

    def exterior_total(self):
        """Kernel mass outside the origin block, in physical units"""
        return self.h ** (-2.0 * self.params.s) * self.exterior_unit

    def tail(self):
        """Kernel mass outside the stencil cube, from the closed-form face integral"""
        return self.h ** (-2.0 * self.params.s) * self.tail_unit

    def tail_from_weights(self):
        """Same tail obtained as exterior mass minus the tabulated cell weights"""
        return self.h ** (-2.0 * self.params.s) * (self.exterior_unit - float(np.sum(self.table)))

    def spherical_tail(self, rho):
        return spherical_tail(self.params.N, self.params.s, rho)

    def origin_moment(self):
        return self.h ** (2.0 - 2.0 * self.params.s) * self.moment_unit

    def self_weight(self):
        """Diagonal entry c (E + M0 / h^2)"""
        return self.scale * (self.exterior_unit + self.moment_unit)

    def neighbour_weight(self):
        return self.scale * self.moment_unit / (2.0 * self.params.N)

    def _unit_laplacian(self, u):
        N = u.ndim
        padded = np.pad(u, 1)
        lap = -2.0 * N * u
        for a in range(N):
            lo = [slice(1, -1)] * N
            hi = [slice(1, -1)] * N
            lo[a] = slice(0, -2)
            hi[a] = slice(2, None)
            lap = lap + padded[tuple(lo)] + padded[tuple(hi)]
        return lap

    def apply(self, values):
        """Operator at every node of a grid array (values vanish beyond the array)"""
        u = np.asarray(values, dtype=float)
        if np.any(np.asarray(u.shape) - 1 > self.extent):
            raise ValueError(f"stencil extent {self.extent} does not cover array shape {u.shape}")
        if not np.any(u):
            return np.zeros_like(u)
        conv = fftconvolve(u, self.table, mode="same")
        lap = self._unit_laplacian(u)
        return self.scale * (self.exterior_unit * u - conv - self.moment_unit / (2.0 * self.params.N) * lap)

    def matrix(self, indices, rows_per_block=128):
        """Dense operator matrix between the given node multi-indices"""
        I = np.asarray(indices, dtype=int)
        M = len(I)
        A = np.empty((M, M))
        shape = self.table.shape
        flat_table = self.table.ravel()
        neighbour = self.neighbour_weight()

        def fill(start):
            stop = min(start + rows_per_block, M)
            diff = I[None, :, :] - I[start:stop, None, :]
            idx = np.ravel_multi_index(tuple(np.moveaxis(diff + self.extent, -1, 0)), shape)
            block = -self.scale * flat_table[idx]
            block[np.sum(np.abs(diff), axis=2) == 1] -= neighbour
            rows = np.arange(stop - start)
            block[rows, rows + start] = self.self_weight()
            A[start:stop] = block

        starts = range(0, M, rows_per_block)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            list(pool.map(fill, starts))
        return A


def frac_laplacian_at(u, x, p, q=None, support=None):
    """
    (value, low_confidence) of (-Delta)^s u at x
    u is a Field (x must be a node) or a callable on (M, N) point arrays sampled on a lattice centred at x
    """
    q = q or QuadratureScheme()
    x = np.atleast_1d(np.asarray(x, dtype=float))

    if isinstance(u, Field):
        grid = u.grid
        if not grid.is_node(x):
            raise ValueError(f"evaluation point {x.tolist()} is not a grid node")
        stencil = KernelStencil.for_grid(p, grid, q.near)
        value = stencil.apply(u.values)[tuple(grid.index_of(x))]
        support = u.support if support is None else support
        h = grid.h
    else:
        if q.h is None or q.rho is None:
            raise ValueError("callable input needs quad.h and quad.rho")
        h = q.h
        extent = int(np.ceil(q.rho / h))
        if support is not None:
            lo, hi = support.bounding_box()
            reach = (extent + 0.5) * h
            if np.any(lo < x - reach) or np.any(hi > x + reach):
                raise ValueError(f"quad.rho = {q.rho} does not cover the support from {x.tolist()}")
        local = Grid(x - extent * h, h, np.full(p.N, 2 * extent + 1))
        vals = np.asarray(u(local.nodes()), dtype=float).reshape(local.shape)
        stencil = KernelStencil(p, h, 2 * extent, q.near)
        value = stencil.apply(vals)[(extent,) * p.N]

    low_confidence = False
    if support is not None:
        low_confidence = bool(support.signed_distance(x) < 2.0 * h)
    return float(value), low_confidence


def apply_operator(field, p, near="taylor"):
    """Operator values at every node of the field's grid"""
    return KernelStencil.for_grid(p, field.grid, near).apply(field.values)


def bilinear_form(u, v, p, near="taylor"):
    """E(u, v) = h^N sum_i v_i (L u)_i, symmetric in u and v"""
    if not u.grid.same_as(v.grid):
        raise ValueError("bilinear_form needs both fields on the same grid")
    Lu = apply_operator(u, p, near)
    Lv = apply_operator(v, p, near)
    h_N = u.grid.h ** p.N
    # average of the two orderings keeps E(u, v) == E(v, u) in floating point
    return 0.5 * h_N * (float(np.sum(v.values * Lu)) + float(np.sum(u.values * Lv)))


def rayleigh_quotient(u, p, near="taylor"):
    h_N = u.grid.h ** p.N
    mass = h_N * float(np.sum(u.values ** 2))
    if mass == 0.0:
        raise ValueError("rayleigh quotient of the zero field")
    return bilinear_form(u, u, p, near) / mass


def interior_indices(grid, support):
    """Multi-indices and flat indices of grid nodes strictly inside the support"""
    delta = np.asarray(support.signed_distance(grid.nodes()))
    flat = np.flatnonzero(delta > 0.0)
    multi = np.column_stack(np.unravel_index(flat, grid.shape))
    return multi, flat


def assemble_stiffness(grid, support, p, q=None, cap=20000):
    """Dense collocation matrix over interior nodes; returns (A, flat interior indices)"""
    q = q or QuadratureScheme()
    multi, flat = interior_indices(grid, support)
    if len(flat) > cap:
        raise SizeCapError(len(flat), cap)
    stencil = KernelStencil.for_grid(p, grid, q.near)
    stencil.logger.info(f"Assembling {len(flat)} x {len(flat)} stiffness matrix (N={p.N}, s={p.s}, h={grid.h})")
    return stencil.matrix(multi), flat
