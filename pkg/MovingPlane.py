import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from FracOperator import Field, worker_count
from Geometry import Domain, HalfSpace, ReflectedCap, Union

INTERNAL_TOUCH = "InternalTouch"
ORTHOGONAL_CONTACT = "OrthogonalContact"


@dataclass
class CriticalPlane:
    """First position where the reflected cap stops being inside the domain"""
    direction: np.ndarray
    lambda0: float
    situation: str
    point: np.ndarray
    both_flag: bool = False
    support_value: float = 0.0  # l = max x.e over the domain
    margin_history: list = field(default_factory=list)  # (lambda, inclusion margin)

    def halfspace(self, lam=None):
        return HalfSpace(self.direction, self.lambda0 if lam is None else lam)

    def as_dict(self):
        return {
            "direction": np.asarray(self.direction).tolist(),
            "lambda0": self.lambda0,
            "situation": self.situation,
            "point": np.asarray(self.point).tolist(),
            "both_flag": self.both_flag,
            "support_value": self.support_value,
            "margin_history": [[float(a), float(b)] for a, b in self.margin_history],
        }


@dataclass
class DirectionResult:
    plane: CriticalPlane
    lambda_used: float
    aligned: bool
    cap_nodes: int
    collar_share: float
    min_v: float
    max_abs_v: float
    verdict: str
    sweep: list = field(default_factory=list)  # (lambda, min of u - u o Q on the reflected cap)
    sweep_first_failure: float = None

    def as_dict(self):
        return {
            "plane": self.plane.as_dict(),
            "lambda_used": self.lambda_used,
            "aligned": self.aligned,
            "cap_nodes": self.cap_nodes,
            "collar_share": self.collar_share,
            "min_v": self.min_v,
            "max_abs_v": self.max_abs_v,
            "verdict": self.verdict,
            "sweep": [[float(a), float(b)] for a, b in self.sweep],
            "sweep_first_failure": self.sweep_first_failure,
        }


@dataclass
class MovingPlaneReport:
    directions: list
    verdict: str
    tolerance: float
    center: np.ndarray = None

    def as_dict(self):
        return {
            "directions": [d.as_dict() for d in self.directions],
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "center": None if self.center is None else np.asarray(self.center).tolist(),
        }


def default_directions(dim):
    """Coordinate axes and diagonals, both orientations (8 in the plane)"""
    if dim == 1:
        return [np.array([1.0]), np.array([-1.0])]
    dirs = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        dirs.extend([e, -e])
    for i in range(dim):
        for j in range(i + 1, dim):
            for si, sj in ((1, 1), (1, -1)):
                e = np.zeros(dim)
                e[i], e[j] = si, sj
                e /= np.linalg.norm(e)
                dirs.extend([e, -e])
    return dirs


class MovingPlaneAnalyzer:
    """
    Moving-plane sweep on analytic domains and sampled fields
    """

    def __init__(self, resolution=1e-6, scan_steps=200, inclusion_samples=None,
                 angle_tolerance=0.05, touch_tolerance=1e-4, far_from_plane=0.05,
                 sweep_steps=8, collar_limit=0.5, residual_factor=10.0, relative_tol=1e-8):
        self.resolution = resolution  # lambda0 accuracy, relative to the diameter
        self.scan_steps = scan_steps  # coarse downward scan steps per diameter
        self.inclusion_samples = inclusion_samples or {1: 2, 2: 2048, 3: 4096}
        self.angle_tolerance = angle_tolerance  # |eta.e| accepted as orthogonal
        self.touch_tolerance = touch_tolerance  # reflected sample counted as touching, relative to diameter
        self.far_from_plane = far_from_plane  # touching points must be this far from T, relative to diameter
        self.sweep_steps = sweep_steps
        self.collar_limit = collar_limit  # inconclusive when the collar holds more of the cap than this
        self.residual_factor = residual_factor
        self.relative_tol = relative_tol
        self.logger = logging.getLogger('MovingPlaneAnalyzer')

    # Geometry

    def inclusion_margin(self, d, e, lam):
        cap = ReflectedCap(HalfSpace(e, lam), d)
        _, margin = cap.inclusion(self.inclusion_samples[d.dim])
        return margin

    def find_critical_plane(self, d, e):
        e = np.atleast_1d(np.asarray(e, dtype=float))
        hs_check = HalfSpace(e, 0.0)  # rejects non-unit directions
        diam = d.diameter()
        tol = 1e-10 * diam
        l = d.support_value(hs_check.e)
        history = []

        step = diam / self.scan_steps
        good = l
        lam = l - step
        bad = None
        while lam >= l - diam - step:
            margin = self.inclusion_margin(d, e, lam)
            history.append((lam, margin))
            if margin < -tol:
                bad = lam
                break
            good = lam
            lam -= step
        if bad is None:
            bad = l - diam - step

        while good - bad > self.resolution * diam:
            mid = 0.5 * (good + bad)
            margin = self.inclusion_margin(d, e, mid)
            history.append((mid, margin))
            if margin < -tol:
                bad = mid
            else:
                good = mid

        situation, point, both = self.classify(d, e, good)
        plane = CriticalPlane(e, good, situation, point, both, l, history)
        self.logger.info(f"Critical plane e={np.round(e, 4).tolist()}: lambda0 = {good:.8f} ({situation}"
                         f"{', both' if both else ''})")
        return plane

    def classify(self, d, e, lam0):
        """Situation at lambda0: orthogonal contact on T, or internal touch away from T"""
        diam = d.diameter()
        count = self.inclusion_samples[d.dim]
        pts, normals = d.boundary_samples(count)
        level = pts @ e - lam0

        # Reflected cap touching the boundary away from T
        cap = level >= 0.0
        far = cap & (level > self.far_from_plane * diam)
        touch = False
        touch_point = None
        if np.any(far):
            reflected = pts[far] - 2.0 * level[far, None] * e
            depth = np.asarray(d.signed_distance(reflected))
            k = int(np.argmin(depth))
            touch = bool(depth[k] <= self.touch_tolerance * diam)
            touch_point = reflected[k]

        if d.dim == 1:
            return INTERNAL_TOUCH, touch_point if touch_point is not None else np.array([lam0]), False

        spacing = (d.boundary_measure() / count) ** (1.0 / (d.dim - 1))
        band = np.abs(level) <= 3.0 * spacing
        orth = False
        orth_point = None
        if np.any(band):
            cosines = np.abs(normals[band] @ e)
            k = int(np.argmin(cosines))
            orth = bool(cosines[k] <= self.angle_tolerance)
            orth_point = pts[band][k]

        if orth:
            return ORTHOGONAL_CONTACT, orth_point, touch
        if touch_point is None:
            touch_point = orth_point if orth_point is not None else lam0 * e
        return INTERNAL_TOUCH, touch_point, False

    # Fields

    def aligned_lambda(self, grid, e, lam, diam):
        """Snap lambda onto the reflection lattice when it is within the geometric resolution"""
        snapped = grid.aligned_lambda(e, lam)
        if snapped is not None and abs(snapped - lam) <= 2.0 * self.resolution * diam:
            return snapped, True
        return lam, False

    def cap_statistics(self, u, d, v, hs, tol):
        """min v, max |v|, node count and collar share over the reflected cap Q(Omega ∩ H) ⊂ H'"""
        nodes = u.grid.nodes()
        cap = ReflectedCap(hs, d)
        inside = np.asarray(cap.signed_distance(nodes)) > 0.0
        if not np.any(inside):
            return 0.0, 0.0, 0, 1.0
        vals = v.values.ravel()[inside]
        delta = np.asarray(d.signed_distance(nodes[inside]))
        collar = float(np.mean(delta < 2.0 * u.grid.h))
        return float(np.min(vals)), float(np.max(np.abs(vals))), int(np.sum(inside)), collar

    def sweep(self, u, d, plane, lam0, tol):
        """Sweep check: u - u o Q_lambda >= -tol on the reflected cap for lambda in (lambda0, l)"""
        grid = u.grid
        l = plane.support_value
        out = []
        first_failure = None
        for lam in np.linspace(lam0, l, self.sweep_steps + 2)[1:-1]:
            snapped = grid.aligned_lambda(plane.direction, lam)
            if snapped is not None and lam0 < snapped < l:
                lam = snapped
            hs = HalfSpace(plane.direction, lam)
            v = antisymmetric_difference(u, hs)
            mn, _, count, _ = self.cap_statistics(u, d, v, hs, tol)
            out.append((float(lam), mn))
            if count and mn < -tol and first_failure is None:
                first_failure = float(lam)
        return out, first_failure

    def analyze_direction(self, u, d, e, tol):
        plane = self.find_critical_plane(d, e)
        lam, aligned = self.aligned_lambda(u.grid, plane.direction, plane.lambda0, d.diameter())
        hs = HalfSpace(plane.direction, lam)
        v = antisymmetric_difference(u, hs)
        mn, mx, count, collar = self.cap_statistics(u, d, v, hs, tol)
        if count == 0 or collar > self.collar_limit:
            verdict = "inconclusive"
        elif mx <= tol:
            verdict = "symmetric"
        else:
            verdict = "asymmetric"
        sweep, failure = self.sweep(u, d, plane, lam, tol)
        mark = {"symmetric": "✓", "asymmetric": "✗"}.get(verdict, "⚠")
        self.logger.info(f"{mark} e={np.round(plane.direction, 4).tolist()}: max|v| = {mx:.3e} (tol {tol:.1e}), {verdict}")
        return DirectionResult(plane, lam, aligned, count, collar, mn, mx, verdict, sweep, failure)

    def analyze(self, u, d, directions=None, solver_residual=None):
        directions = [np.asarray(e, dtype=float) for e in (directions or default_directions(d.dim))]
        tol = symmetry_tolerance(u, solver_residual, self.residual_factor, self.relative_tol)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            results = list(pool.map(lambda e: self.analyze_direction(u, d, e, tol), directions))
        verdicts = {r.verdict for r in results}
        if verdicts == {"symmetric"}:
            verdict = "symmetric"
        elif "asymmetric" in verdicts:
            verdict = "asymmetric"
        else:
            verdict = "inconclusive"
        center = None
        if verdict == "symmetric":
            E = np.array([r.plane.direction for r in results])
            lam = np.array([r.lambda_used for r in results])
            center, *_ = np.linalg.lstsq(E, lam, rcond=None)
            self.logger.info(f"✓ Detected center {np.round(center, 8).tolist()}")
        return MovingPlaneReport(results, verdict, tol, center)


def symmetry_tolerance(u, solver_residual=None, residual_factor=10.0, relative=1e-8):
    """max(10 x solver residual, 1e-8 x max |u|)"""
    residual = solver_residual if solver_residual is not None else u.meta.get("residual", 0.0)
    return max(residual_factor * residual, relative * u.max_abs())


def find_critical_plane(d, e, analyzer=None):
    return (analyzer or MovingPlaneAnalyzer()).find_critical_plane(d, e)


def antisymmetric_difference(u, hs):
    """v(x) = u(x) - u(Qx); exact node lookup on reflection-aligned grids, multilinear otherwise"""
    grid = u.grid
    flat = u.values.ravel()
    ref = grid.reflection_index_map(hs)
    if ref is not None:
        mirrored = np.where(ref >= 0, flat[np.maximum(ref, 0)], 0.0)
        aligned = True
    else:
        mirrored = np.asarray(u.interpolate(hs.reflect(grid.nodes())))
        aligned = False
    v = Field(grid, (flat - mirrored).reshape(grid.shape), None)
    v.meta["aligned"] = aligned
    return v


def moving_plane_analyze(u, d, directions=None, analyzer=None, solver_residual=None):
    return (analyzer or MovingPlaneAnalyzer()).analyze(u, d, directions, solver_residual)


def radial_monotone_test(u, directions=None, offsets=None, tol=None, scan_points=16):
    """
    Halfspace test for radial symmetry and decrease
    Every tested halfspace must be dominant (u >= u o Q on H) or subordinate (u <= u o Q on H).
    The center is then the maximal dominant offset along each axis, confirmed along rays.
    """
    grid = u.grid
    dim = grid.dim
    tol = 1e-8 * u.max_abs() if tol is None else tol
    nodes = grid.nodes()
    nonzero = np.abs(u.values.ravel()) > tol
    if not np.any(nonzero):
        return {"radial": False, "reason": "zero field", "witness": None, "center": None}
    lo = nodes[nonzero].min(axis=0)
    hi = nodes[nonzero].max(axis=0)
    directions = [np.asarray(e, dtype=float) for e in (directions or default_directions(dim))]

    checked = 0
    for e in directions:
        if offsets is None:
            proj = nodes[nonzero] @ e
            lams = np.linspace(proj.min(), proj.max(), scan_points)
        else:
            lams = np.asarray(offsets, dtype=float)
        for lam in lams:
            snapped = grid.aligned_lambda(e, lam)
            lam = snapped if snapped is not None else lam
            hs = HalfSpace(e, lam)
            v = antisymmetric_difference(u, hs).values.ravel()
            side = hs.contains(nodes)
            if not np.any(side):
                continue
            checked += 1
            mn, mx = float(np.min(v[side])), float(np.max(v[side]))
            if mn < -tol and mx > tol:
                return {
                    "radial": False,
                    "witness": {"direction": e.tolist(), "lambda": float(lam), "min_v": mn, "max_v": mx},
                    "center": None,
                    "halfspaces_checked": checked,
                }

    # maximal dominant offset per axis: {x_i < lam} stays subordinate up to lam = center_i
    center = np.zeros(dim)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = -1.0
        best = None
        k_start = max(0, int(np.floor(2.0 * (lo[i] - grid.origin[i]) / grid.h)))
        k_stop = int(np.ceil(2.0 * (hi[i] - grid.origin[i]) / grid.h)) + 1
        for k in range(k_start, k_stop):
            lam_pos = grid.origin[i] + 0.5 * k * grid.h
            hs = HalfSpace(e, -lam_pos)  # H = {x_i < lam_pos}
            v = antisymmetric_difference(u, hs).values.ravel()
            side = hs.contains(nodes)
            if np.any(side) and float(np.max(v[side])) > tol:
                break
            best = lam_pos
        center[i] = best if best is not None else lo[i]

    ok, profile = radial_decrease(u, center, tol)
    result = {
        "radial": bool(ok),
        "center": center.tolist(),
        "witness": None,
        "halfspaces_checked": checked,
        "ray_profile_ok": bool(ok),
    }
    if not ok:
        result["reason"] = profile
    return result


def radial_decrease(u, center, tol, rays=None):
    """Values along rays from the center must not increase"""
    grid = u.grid
    lo = grid.origin
    hi = grid.origin + grid.h * (grid.counts - 1)
    reach = float(np.max(np.maximum(hi - center, center - lo)))
    radii = np.arange(0.0, reach, 0.5 * grid.h)
    for d in rays or default_directions(grid.dim):
        vals = np.asarray(u.interpolate(center + radii[:, None] * d))
        if np.any(np.diff(vals) > tol):
            k = int(np.argmax(np.diff(vals)))
            return False, {"ray": np.asarray(d).tolist(), "radius": float(radii[k]), "increase": float(np.diff(vals)[k])}
    return True, None


def connected_components(target, threshold=0.0):
    """(count, labels): members of an analytic union, or flood-fill labels of a field's support"""
    if isinstance(target, Domain):
        members = target.members() if isinstance(target, Union) else [target]
        return len(members), list(range(len(members)))
    labels, count = ndimage.label(np.abs(target.values) > threshold)
    return int(count), labels


def analyze_union_1d(u, d, analyzer=None):
    """
    One-dimensional unions of intervals: move the plane in from both ends and report
    whether the field is symmetric about the outermost components' midpoints
    Plane positions are x coordinates; lambda0 is the sweep from the right
    """
    if d.dim != 1:
        raise ValueError("analyze_union_1d needs a one-dimensional domain")
    analyzer = analyzer or MovingPlaneAnalyzer()
    count, _ = connected_components(d)
    tol = symmetry_tolerance(u, None, analyzer.residual_factor, analyzer.relative_tol)
    right = analyzer.analyze_direction(u, d, np.array([1.0]), tol)
    left = analyzer.analyze_direction(u, d, np.array([-1.0]), tol)
    position_left = -left.plane.lambda0
    same_plane = abs(right.plane.lambda0 - position_left) <= u.grid.h
    both = right.verdict == "symmetric" and left.verdict == "symmetric"
    return {
        "components": count,
        "lambda0": right.plane.lambda0,
        "lambda0_left": position_left,
        "max_abs_v": right.max_abs_v,
        "min_v": right.min_v,
        "symmetric_about_rightmost": right.verdict == "symmetric",
        "symmetric_about_leftmost": left.verdict == "symmetric",
        "single_interval_consistent": count == 1 and both and same_plane,
        "sweep_first_failure": right.sweep_first_failure,
        "sweep_first_failure_left": left.sweep_first_failure,
    }
