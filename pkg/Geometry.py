import numpy as np
from scipy import integrate, special
from scipy.interpolate import RegularGridInterpolator


def _as_points(x, dim):
    """Return (points array of shape (M, dim), was_single_point)"""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr) if single else arr.reshape(-1, arr.shape[-1])
    if pts.shape[1] != dim:
        raise ValueError(f"point dimension {pts.shape[1]} does not match domain dimension {dim}")
    return pts, single


def _finish(values, single):
    return float(values[0]) if single else values


def unit_ball_volume(dim):
    """Volume of the unit ball in R^dim"""
    return np.pi ** (dim / 2.0) / special.gamma(dim / 2.0 + 1.0)


def unit_sphere_area(dim):
    """Surface measure of the unit sphere S^(dim-1); counting measure (2) in one dimension"""
    return 2.0 * np.pi ** (dim / 2.0) / special.gamma(dim / 2.0)


def fibonacci_sphere(count):
    """Quasi-uniform unit vectors on S^2"""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (1.0 + 5.0 ** 0.5) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


class Domain:
    """
    Bounded analytic domain in R^N (N = 1, 2, 3)
    Signed distance is positive inside, negative outside and exact for every primitive
    """

    kind = "domain"

    def __init__(self, dim):
        if dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
        self.dim = dim

    # Factories used by the config layer
    @staticmethod
    def ball(center, radius):
        return Ball(center, radius)

    @staticmethod
    def ellipse(center, semi_axes):
        return Ellipse(center, semi_axes)

    @staticmethod
    def interval(a, b):
        return Interval(a, b)

    @staticmethod
    def box(lower, upper):
        return Box(lower, upper)

    @staticmethod
    def union(members):
        return Union(members)

    def signed_distance(self, x):
        pts, single = _as_points(x, self.dim)
        return _finish(self._sd(pts), single)

    def contains(self, x):
        """True where x lies in the open domain"""
        return np.asarray(self.signed_distance(x)) > 0.0

    def normal(self, x):
        """Outward unit normal at (or near) boundary points"""
        pts, single = _as_points(x, self.dim)
        n = self._normal(pts)
        n = n / np.linalg.norm(n, axis=1, keepdims=True)
        return n[0] if single else n

    def boundary_samples(self, count):
        """Quasi-uniform boundary points with exact outward normals, as (points, normals)"""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        return self._samples(int(count))

    def bounding_box(self):
        raise NotImplementedError

    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def support_value(self, e):
        """max of x.e over the closure of the domain"""
        raise NotImplementedError

    def volume(self):
        raise NotImplementedError

    def boundary_measure(self):
        raise NotImplementedError

    def members(self):
        return [self]

    def describe(self):
        raise NotImplementedError


class Ball(Domain):
    kind = "ball"

    def __init__(self, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        super().__init__(center.size)
        if not radius > 0:
            raise ValueError(f"ball radius must be > 0, got {radius}")
        self.center = center
        self.radius = float(radius)

    def _sd(self, pts):
        return self.radius - np.linalg.norm(pts - self.center, axis=1)

    def _normal(self, pts):
        d = pts - self.center
        if self.dim == 1:
            return np.where(d >= 0.0, 1.0, -1.0)
        return d

    def _samples(self, count):
        c, r = self.center, self.radius
        if self.dim == 1:
            normals = np.array([[-1.0], [1.0]])
        elif self.dim == 2:
            theta = 2.0 * np.pi * np.arange(count) / count
            normals = np.column_stack([np.cos(theta), np.sin(theta)])
        else:
            normals = fibonacci_sphere(count)
        return c + r * normals, normals

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def support_value(self, e):
        return float(np.dot(self.center, e) + self.radius)

    def volume(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def boundary_measure(self):
        return unit_sphere_area(self.dim) * self.radius ** (self.dim - 1)

    def describe(self):
        return {"shape": "ball", "center": self.center.tolist(), "radius": self.radius}


class Interval(Ball):
    """The interval (a, b) of the real line"""

    kind = "interval"

    def __init__(self, a, b):
        if not a < b:
            raise ValueError(f"interval needs a < b, got ({a}, {b})")
        self.a = float(a)
        self.b = float(b)
        super().__init__([(a + b) / 2.0], (b - a) / 2.0)

    def describe(self):
        return {"shape": "interval", "a": self.a, "b": self.b}


class Ellipse(Domain):
    """Axis-aligned ellipse (N=2) or ellipsoid (N=3)"""

    kind = "ellipse"
    bisection_steps = 200

    def __init__(self, center, semi_axes):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        axes = np.atleast_1d(np.asarray(semi_axes, dtype=float))
        super().__init__(center.size)
        if axes.shape != center.shape:
            raise ValueError("ellipse center and semi-axes must have the same length")
        if np.any(axes <= 0):
            raise ValueError(f"semi-axes must be > 0, got {axes.tolist()}")
        self.center = center
        self.semi_axes = axes

    def closest_points(self, pts):
        """Exact nearest boundary points, solved in the first orthant by bisection on the Lagrange parameter"""
        a = self.semi_axes
        rel = pts - self.center
        sgn = np.where(rel < 0.0, -1.0, 1.0)
        y = np.abs(rel)
        a2 = a * a
        amin = a.min()
        on_min = np.isclose(a, amin, rtol=0.0, atol=1e-14 * amin)
        x = np.empty_like(y)

        tiny = 1e-300
        has_min = np.any(y[:, on_min] > 0.0, axis=1)
        other = ~on_min
        if np.any(other):
            S = np.sum((a[other] * y[:, other] / (a2[other] - amin ** 2)) ** 2, axis=1)
        else:
            S = np.zeros(len(y))
        degenerate = (~has_min) & (S <= 1.0)

        # Interior points on the minor-axis hyperplane: closest point leaves the root bracket
        if np.any(degenerate):
            yd = y[degenerate]
            xd = np.zeros_like(yd)
            xd[:, other] = a2[other] * yd[:, other] / (a2[other] - amin ** 2)
            first_min = int(np.flatnonzero(on_min)[0])
            xd[:, first_min] = amin * np.sqrt(np.clip(1.0 - S[degenerate], 0.0, None))
            x[degenerate] = xd

        regular = ~degenerate
        if np.any(regular):
            yr = y[regular]
            lo = np.full(len(yr), -amin ** 2)
            hi = np.maximum(np.linalg.norm(a * yr, axis=1), tiny)
            for _ in range(self.bisection_steps):
                mid = 0.5 * (lo + hi)
                denom = np.maximum(mid[:, None] + a2, tiny)
                g = np.sum((a * yr / denom) ** 2, axis=1) - 1.0
                lo = np.where(g > 0.0, mid, lo)
                hi = np.where(g > 0.0, hi, mid)
            t = 0.5 * (lo + hi)
            x[regular] = a2 * yr / np.maximum(t[:, None] + a2, tiny)

        return self.center + sgn * x

    def _sd(self, pts):
        closest = self.closest_points(pts)
        dist = np.linalg.norm(pts - closest, axis=1)
        level = np.sum(((pts - self.center) / self.semi_axes) ** 2, axis=1)
        return np.where(level < 1.0, dist, -dist)

    def _normal(self, pts):
        return (pts - self.center) / self.semi_axes ** 2

    def _samples(self, count):
        a = self.semi_axes
        if self.dim == 1:
            normals = np.array([[-1.0], [1.0]])
            return self.center + a * normals, normals
        if self.dim == 2:
            # Arc-length quasi-uniform parametrization starting at the +x axis point
            theta = np.linspace(0.0, 2.0 * np.pi, 8193)
            speed = np.hypot(a[0] * np.sin(theta), a[1] * np.cos(theta))
            arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(theta))])
            targets = arc[-1] * np.arange(count) / count
            th = np.interp(targets, arc, theta)
            unit = np.column_stack([np.cos(th), np.sin(th)])
        else:
            unit = fibonacci_sphere(count)
        pts = self.center + a * unit
        normals = unit / a
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        return pts, normals

    def bounding_box(self):
        return self.center - self.semi_axes, self.center + self.semi_axes

    def support_value(self, e):
        e = np.asarray(e, dtype=float)
        return float(np.dot(self.center, e) + np.sqrt(np.sum((self.semi_axes * e) ** 2)))

    def volume(self):
        return unit_ball_volume(self.dim) * float(np.prod(self.semi_axes))

    def boundary_measure(self):
        a = self.semi_axes
        if self.dim == 1:
            return 2.0
        if self.dim == 2:
            val, _ = integrate.quad(lambda t: np.hypot(a[0] * np.sin(t), a[1] * np.cos(t)), 0.0, 2.0 * np.pi)
            return val

        def area_element(phi, theta):
            st, ct = np.sin(theta), np.cos(theta)
            sp, cp = np.sin(phi), np.cos(phi)
            n = np.array([a[1] * a[2] * st * st * cp, a[0] * a[2] * st * st * sp, a[0] * a[1] * st * ct])
            return np.linalg.norm(n)

        val, _ = integrate.dblquad(area_element, 0.0, np.pi, 0.0, 2.0 * np.pi)
        return val

    def describe(self):
        return {"shape": "ellipse", "center": self.center.tolist(), "semi_axes": self.semi_axes.tolist()}


class Box(Domain):
    """Axis-aligned open box"""

    kind = "box"

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        super().__init__(lower.size)
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise ValueError(f"box needs lower < upper componentwise, got {lower.tolist()} / {upper.tolist()}")
        self.lower = lower
        self.upper = upper
        self.center = 0.5 * (lower + upper)
        self.half = 0.5 * (upper - lower)

    def _sd(self, pts):
        q = np.abs(pts - self.center) - self.half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return -(outside + inside)

    def _normal(self, pts):
        rel = pts - self.center
        q = np.abs(rel) - self.half
        face = np.argmax(q, axis=1)
        n = np.zeros_like(pts)
        n[np.arange(len(pts)), face] = np.sign(rel[np.arange(len(pts)), face])
        return n

    def _samples(self, count):
        faces = []
        for axis in range(self.dim):
            other = [k for k in range(self.dim) if k != axis]
            area = float(np.prod(self.upper[other] - self.lower[other])) if other else 1.0
            faces.append((axis, -1.0, area))
            faces.append((axis, 1.0, area))
        areas = np.array([f[2] for f in faces])
        share = _apportion(count, areas)
        pts, normals = [], []
        for (axis, side, _), m in zip(faces, share):
            if m == 0:
                continue
            other = [k for k in range(self.dim) if k != axis]
            if self.dim == 1:
                grid = np.zeros((1, 0))
            elif self.dim == 2:
                u = (np.arange(m) + 0.5) / m
                grid = u[:, None]
            else:
                side_n = int(np.ceil(np.sqrt(m)))
                u = (np.arange(side_n) + 0.5) / side_n
                g0, g1 = np.meshgrid(u, u, indexing="ij")
                grid = np.column_stack([g0.ravel(), g1.ravel()])[:m]
            p = np.empty((len(grid), self.dim))
            p[:, axis] = self.upper[axis] if side > 0 else self.lower[axis]
            for j, k in enumerate(other):
                p[:, k] = self.lower[k] + grid[:, j] * (self.upper[k] - self.lower[k])
            n = np.zeros_like(p)
            n[:, axis] = side
            pts.append(p)
            normals.append(n)
        return np.vstack(pts), np.vstack(normals)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def support_value(self, e):
        e = np.asarray(e, dtype=float)
        return float(np.sum(np.maximum(self.lower * e, self.upper * e)))

    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def boundary_measure(self):
        if self.dim == 1:
            return 2.0
        total = 0.0
        for axis in range(self.dim):
            other = [k for k in range(self.dim) if k != axis]
            total += 2.0 * float(np.prod(self.upper[other] - self.lower[other]))
        return total

    def describe(self):
        return {"shape": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def _apportion(count, weights):
    """Split count proportionally to weights (largest remainder, at least one each when possible)"""
    weights = np.asarray(weights, dtype=float)
    raw = count * weights / weights.sum()
    share = np.floor(raw).astype(int)
    if count >= len(weights):
        share = np.maximum(share, 1)
    while share.sum() < count:
        share[np.argmax(raw - share)] += 1
    while share.sum() > count:
        share[np.argmax(share)] -= 1
    return share


class Union(Domain):
    """Union of pairwise disjoint domains with positive mutual distance"""

    kind = "union"
    separation_samples = 512

    def __init__(self, members):
        members = list(members)
        if len(members) < 1:
            raise ValueError("union needs at least one member")
        flat = []
        for m in members:
            flat.extend(m.members())
        dims = {m.dim for m in flat}
        if len(dims) != 1:
            raise ValueError("union members must share one dimension")
        super().__init__(dims.pop())
        self.parts = flat
        for i in range(len(flat)):
            for j in range(i + 1, len(flat)):
                gap = member_gap(flat[i], flat[j], self.separation_samples)
                if gap <= 0.0:
                    raise ValueError(f"union members {i} and {j} overlap or touch (gap {gap:.3e})")

    def members(self):
        return list(self.parts)

    def _sd(self, pts):
        return np.max(np.stack([m._sd(pts) for m in self.parts]), axis=0)

    def member_index(self, x):
        """Index of the member with largest signed distance at each point"""
        pts, single = _as_points(x, self.dim)
        idx = np.argmax(np.stack([m._sd(pts) for m in self.parts]), axis=0)
        return int(idx[0]) if single else idx

    def _normal(self, pts):
        idx = np.argmax(np.stack([m._sd(pts) for m in self.parts]), axis=0)
        out = np.empty_like(pts)
        for k, m in enumerate(self.parts):
            sel = idx == k
            if np.any(sel):
                n = m._normal(pts[sel])
                out[sel] = np.asarray(n, dtype=float).reshape(-1, self.dim)
        return out

    def _samples(self, count):
        if self.dim == 1:
            pts, normals = zip(*[m._samples(2) for m in self.parts])
            return np.vstack(pts), np.vstack(normals)
        share = _apportion(count, [m.boundary_measure() for m in self.parts])
        pts, normals = [], []
        for m, k in zip(self.parts, share):
            if k > 0:
                p, n = m._samples(int(k))
                pts.append(p)
                normals.append(n)
        return np.vstack(pts), np.vstack(normals)

    def bounding_box(self):
        boxes = [m.bounding_box() for m in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def support_value(self, e):
        return max(m.support_value(e) for m in self.parts)

    def volume(self):
        return sum(m.volume() for m in self.parts)

    def boundary_measure(self):
        return sum(m.boundary_measure() for m in self.parts)

    def describe(self):
        return {"shape": "union", "members": [m.describe() for m in self.parts]}


def member_gap(d1, d2, samples=512):
    """Distance between two primitives; exact for two balls, boundary-sampled otherwise"""
    if isinstance(d1, Ball) and isinstance(d2, Ball):
        return float(np.linalg.norm(d1.center - d2.center) - d1.radius - d2.radius)
    p1, _ = d1.boundary_samples(samples)
    p2, _ = d2.boundary_samples(samples)
    return float(min(np.min(-d2.signed_distance(p1)), np.min(-d1.signed_distance(p2))))


def signed_distance(d, x):
    """Signed distance to the complement: > 0 inside, < 0 outside, 0 on the boundary"""
    return d.signed_distance(x)


def boundary_samples(d, count):
    return d.boundary_samples(count)


class HalfSpace:
    """
    H = {x : x.e > lam} with boundary plane T = {x.e = lam} and reflection Q across T
    """

    unit_tolerance = 1e-12

    def __init__(self, e, lam):
        e = np.atleast_1d(np.asarray(e, dtype=float))
        if abs(np.linalg.norm(e) - 1.0) > self.unit_tolerance:
            raise ValueError(f"halfspace direction must be a unit vector, |e| = {np.linalg.norm(e):.15f}")
        self.e = e
        self.lam = float(lam)
        self.dim = e.size

    @classmethod
    def from_direction(cls, direction, lam):
        """Normalize an arbitrary nonzero direction first"""
        direction = np.atleast_1d(np.asarray(direction, dtype=float))
        return cls(direction / np.linalg.norm(direction), lam)

    def level(self, x):
        """x.e - lam; positive inside H"""
        return np.asarray(x, dtype=float) @ self.e - self.lam

    def contains(self, x):
        return self.level(x) > 0.0

    def reflect(self, x):
        x = np.asarray(x, dtype=float)
        return x - 2.0 * (x @ self.e)[..., None] * self.e + 2.0 * self.lam * self.e

    def shifted(self, lam):
        return HalfSpace(self.e, lam)

    def reflection_matrix(self):
        return np.eye(self.dim) - 2.0 * np.outer(self.e, self.e)

    def maps_lattice(self, tol=1e-12):
        """True when I - 2ee^T permutes coordinate axes up to sign"""
        P = self.reflection_matrix()
        r = np.round(P)
        if np.max(np.abs(P - r)) > tol:
            return False
        return bool(np.all(np.sum(np.abs(r), axis=0) == 1) and np.all(np.sum(np.abs(r), axis=1) == 1))

    def describe(self):
        return {"e": self.e.tolist(), "lambda": self.lam}


def reflect(hs, x):
    """x - 2(x.e)e + 2 lam e"""
    return hs.reflect(x)


class ReflectedCap:
    """
    The reflected cap Q(D ∩ R) of a domain D, where R is a restricting halfspace (usually H itself)
    Inclusion in D is decided from signed distances of reflected boundary samples
    """

    inclusion_samples = {1: 2, 2: 2048, 3: 4096}

    def __init__(self, hs, domain, restricted_to=None):
        self.hs = hs
        self.domain = domain
        self.restricted_to = restricted_to if restricted_to is not None else hs

    def signed_distance(self, x):
        """Sign-correct distance surrogate: min of the domain distance at Qx and the plane distance"""
        x = np.asarray(x, dtype=float)
        qx = self.hs.reflect(x)
        return np.minimum(self.domain.signed_distance(qx), self.restricted_to.level(qx))

    def contains(self, x):
        return np.asarray(self.signed_distance(x)) > 0.0

    def boundary_pieces(self, count=None):
        """Boundary samples of D lying in the closure of R, and their reflections"""
        count = count or self.inclusion_samples[self.domain.dim]
        pts, _ = self.domain.boundary_samples(count)
        keep = self.restricted_to.level(pts) >= 0.0
        return pts[keep], self.hs.reflect(pts[keep])

    def inclusion(self, count=None, tol=0.0):
        """(included, margin): margin = min signed distance of reflected samples inside D"""
        _, reflected = self.boundary_pieces(count)
        if len(reflected) == 0:
            return True, np.inf
        margin = float(np.min(self.domain.signed_distance(reflected)))
        return margin >= -tol, margin


def reflect_domain(hs, d, restricted_to=None):
    return ReflectedCap(hs, d, restricted_to)


class Grid:
    """
    Uniform Cartesian node grid: node(i) = origin + i*h, counts >= 2 per axis
    """

    def __init__(self, origin, h, counts):
        origin = np.atleast_1d(np.asarray(origin, dtype=float))
        counts = np.atleast_1d(np.asarray(counts, dtype=int))
        if not h > 0:
            raise ValueError(f"grid spacing must be > 0, got {h}")
        if counts.shape != origin.shape or np.any(counts < 2):
            raise ValueError(f"grid needs >= 2 nodes per axis, got {counts.tolist()}")
        self.origin = origin
        self.h = float(h)
        self.counts = counts
        self.dim = origin.size

    @classmethod
    def covering(cls, domain, h, margin=None):
        """Grid of integer multiples of h covering the bounding box plus margin"""
        margin = 2.0 * h if margin is None else margin
        lo, hi = domain.bounding_box()
        k_lo = np.ceil((lo - margin) / h - 1e-9).astype(int)
        k_hi = np.floor((hi + margin) / h + 1e-9).astype(int)
        return cls(k_lo * h, h, np.maximum(k_hi - k_lo + 1, 2))

    @classmethod
    def symmetric(cls, half_width, h, dim):
        """Nodes k*h with |k*h| <= half_width on every axis"""
        k = int(np.floor(half_width / h + 1e-9))
        return cls(np.full(dim, -k * h), h, np.full(dim, 2 * k + 1))

    @property
    def shape(self):
        return tuple(int(c) for c in self.counts)

    @property
    def size(self):
        return int(np.prod(self.counts))

    def axes(self):
        return [self.origin[k] + self.h * np.arange(self.counts[k]) for k in range(self.dim)]

    def node(self, index):
        return self.origin + self.h * np.asarray(index, dtype=float)

    def nodes(self):
        """All node coordinates, shape (size, N), C order"""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def index_of(self, x):
        """Nearest node multi-index (may fall outside the grid)"""
        return np.rint((np.asarray(x, dtype=float) - self.origin) / self.h).astype(int)

    def is_node(self, x, tol=1e-9):
        idx = self.index_of(x)
        inside = np.all((idx >= 0) & (idx < self.counts), axis=-1)
        return inside & np.all(np.abs(self.node(idx) - x) <= tol * self.h, axis=-1)

    def same_as(self, other):
        return (self.dim == other.dim and abs(self.h - other.h) <= 1e-14 * self.h
                and np.allclose(self.origin, other.origin, atol=1e-12 * self.h)
                and np.array_equal(self.counts, other.counts))

    def interpolator(self, values):
        """Multilinear interpolant with zero fill outside the grid"""
        return RegularGridInterpolator(self.axes(), np.asarray(values).reshape(self.shape),
                                       method="linear", bounds_error=False, fill_value=0.0)

    def interpolate(self, values, points):
        pts, single = _as_points(points, self.dim)
        out = self.interpolator(values)(pts)
        return _finish(out, single)

    def aligned_lambda(self, e, lam):
        """Nearest offset for which the reflection maps grid nodes onto grid nodes, or None"""
        hs = HalfSpace(e, lam)
        if not hs.maps_lattice():
            return None
        step = self.h / (2.0 * np.max(np.abs(hs.e)))
        base = float(self.origin @ hs.e)
        return base + step * np.rint((lam - base) / step)

    def reflection_index_map(self, hs, tol=1e-9):
        """Flat index of the reflected node for every node (-1 where it leaves the grid), or None if not aligned"""
        if not hs.maps_lattice():
            return None
        nodes = self.nodes()
        ref = hs.reflect(nodes)
        idx = (ref - self.origin) / self.h
        ridx = np.rint(idx)
        if np.max(np.abs(idx - ridx)) > tol:
            return None
        ridx = ridx.astype(int)
        inside = np.all((ridx >= 0) & (ridx < self.counts), axis=1)
        flat = np.full(len(nodes), -1, dtype=int)
        flat[inside] = np.ravel_multi_index(tuple(ridx[inside].T), self.shape)
        return flat

    def describe(self):
        return {"origin": self.origin.tolist(), "h": self.h, "counts": self.counts.tolist()}
