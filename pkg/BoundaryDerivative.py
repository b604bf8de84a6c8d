import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from FracOperator import Field


@dataclass
class BoundaryDerivSample:
    """Extrapolated fractional normal derivative at one boundary point"""
    point: np.ndarray
    normal: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    quotients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    value: float = float("nan")  # estimate of (d_eta)_s u = -lim u(x0 - t eta) / t^s
    fit_residual: float = 0.0
    offset: float = 0.0  # effective boundary shift along the normal
    flagged: bool = False
    ok: bool = True
    message: str = ""

    def as_dict(self):
        return {
            "point": np.asarray(self.point).tolist(),
            "normal": np.asarray(self.normal).tolist(),
            "t": np.asarray(self.t).tolist(),
            "quotients": np.asarray(self.quotients).tolist(),
            "value": self.value,
            "fit_residual": self.fit_residual,
            "offset": self.offset,
            "flagged": self.flagged,
            "ok": self.ok,
            "message": self.message,
        }


class BoundarySampler:
    """
    Measures u / t^s along inward normals and extrapolates to t = 0
    Ladder: t_k = 2^-k * ladder_fraction * R for k = 0..ladder_steps-1, floored at 2h
    """

    def __init__(self, params, ladder_fraction=0.2, ladder_steps=5, min_points=3,
                 residual_threshold=0.02, flagged_share=0.2, constancy_tol=0.05, max_offset=1.0):
        self.params = params
        self.ladder_fraction = ladder_fraction
        self.ladder_steps = ladder_steps
        self.min_points = min_points
        self.residual_threshold = residual_threshold  # relative to |fitted limit|
        self.flagged_share = flagged_share  # inconclusive above this fraction of flagged samples
        self.constancy_tol = constancy_tol  # relative spread accepted as constant
        self.max_offset = max_offset  # in units of h
        self.newton_steps = 3
        self.logger = logging.getLogger('BoundarySampler')

    def ladder(self, h, length_scale):
        """Decreasing ladder above 2h; on coarse grids it is rebuilt upward from 2h"""
        t = self.ladder_fraction * length_scale * 2.0 ** (-np.arange(self.ladder_steps, dtype=float))
        t = t[t >= 2.0 * h]
        if len(t) < self.min_points:
            t = 2.0 * h * 2.0 ** np.arange(self.min_points - 1, -1, -1, dtype=float)
            t = t[t < length_scale]
        return t

    def sample(self, u, x0, normal, length_scale):
        s = self.params.s
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        normal = np.atleast_1d(np.asarray(normal, dtype=float))
        t = self.ladder(u.grid.h, length_scale)
        if len(t) < self.min_points:
            return BoundaryDerivSample(x0, normal, t, ok=False,
                                       message=f"only {len(t)} ladder points above 2h")
        # u^(1/s) is smooth across the boundary layer, so it is the profile we interpolate
        w = np.asarray(u.grid.interpolate(root_profile(u.values, s), x0 - t[:, None] * normal), dtype=float)
        if not np.all(np.isfinite(w)):
            return BoundaryDerivSample(x0, normal, t, ok=False, message="non-finite samples along the normal")
        vals = np.sign(w) * np.abs(w) ** s
        q = vals / t ** s
        if not np.any(q):
            return BoundaryDerivSample(x0, normal, t, q, value=0.0)
        theta = self.boundary_offset(t, w, u.grid.h)
        shifted = t - theta
        q_shift = vals / shifted ** s
        coeffs, res, *_ = np.polyfit(shifted, q_shift, 1, full=True)
        a = float(coeffs[1])
        rms = float(np.sqrt(res[0] / len(t))) if len(res) else 0.0
        rel = rms / abs(a) if a != 0.0 else np.inf
        return BoundaryDerivSample(x0, normal, t, q, value=-a, fit_residual=rms, offset=theta,
                                   flagged=bool(rel > self.residual_threshold))

    def boundary_offset(self, t, w, h):
        """
        Distance at which the discrete profile vanishes, from a quadratic fit of u^(1/s) in t
        The discrete support ends up to h/2 away from the analytic boundary; offsets beyond h are discarded
        """
        c2, c1, c0 = np.polyfit(t, w, 2)
        if c1 == 0.0 or not np.isfinite(c1):
            return 0.0
        theta = -c0 / c1
        for _ in range(self.newton_steps):
            slope = c1 + 2.0 * c2 * theta
            if slope == 0.0:
                return 0.0
            theta -= (c0 + c1 * theta + c2 * theta * theta) / slope
        if not np.isfinite(theta) or abs(theta) > self.max_offset * h:
            self.logger.debug(f"Discarding boundary offset {theta:.3e} (h={h})")
            return 0.0
        return float(theta)

    def report(self, u, d, n_samples):
        points, normals = d.boundary_samples(n_samples)
        scale = length_scale(d)
        samples = [self.sample(u, x, n, scale) for x, n in zip(points, normals)]
        return summarize_samples(samples, d, self.flagged_share, self.constancy_tol, self.logger)


def root_profile(values, s):
    """Signed u^(1/s); linear in the distance to the boundary for ball and ellipsoid solutions"""
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.abs(values) ** (1.0 / s)


def length_scale(d):
    """Inradius-like scale used for the ladder (smallest member half-extent)"""
    scales = []
    for m in d.members():
        lo, hi = m.bounding_box()
        scales.append(0.5 * float(np.min(hi - lo)))
    return min(scales)


def summarize_samples(samples, d, flagged_share, constancy_tol, logger=None):
    usable = [smp for smp in samples if smp.ok]
    values = np.array([smp.value for smp in usable])
    flagged = sum(1 for smp in samples if smp.flagged or not smp.ok)
    report = {
        "n_samples": len(samples),
        "n_flagged": flagged,
        "samples": [smp.as_dict() for smp in samples],
    }
    if len(values) == 0:
        report.update({"mean": None, "max_deviation": None, "relative_spread": None, "verdict": "inconclusive"})
        return report

    mean = float(np.mean(values))
    max_dev = float(np.max(np.abs(values - mean)))
    trivial = bool(np.all(values == 0.0))
    spread = 0.0 if trivial else max_dev / abs(mean) if mean != 0.0 else np.inf
    if flagged > flagged_share * len(samples):
        verdict = "inconclusive"
    elif spread <= constancy_tol:
        verdict = "constant"
    else:
        verdict = "not-constant"
    report.update({
        "mean": mean,
        "max_deviation": max_dev,
        "relative_spread": float(spread),
        "trivial": trivial,
        "verdict": verdict,
    })
    if len(d.members()) > 1 and d.dim == 1:
        # one value per endpoint of every interval
        report["per_point"] = [{"point": smp.point.tolist(), "value": smp.value} for smp in usable]
    if logger is not None:
        mark = "✓" if verdict == "constant" else "⚠" if verdict == "inconclusive" else "✗"
        logger.info(f"{mark} Fractional Neumann data: mean {mean:.6f}, spread {spread:.3%}, verdict {verdict}")
    return report


def frac_normal_derivative(u, d, x0, p, normal=None, sampler=None):
    """Estimate (d_eta)_s u at a boundary point from the affine fit of u(x0 - t eta) / t^s"""
    sampler = sampler or BoundarySampler(p)
    if normal is None:
        normal = d.normal(x0)
    return sampler.sample(u, x0, normal, length_scale(d))


def delta_s_quotient(u, d, p):
    """
    u / delta^s at interior nodes with delta >= h, extended to the collar by the nearest such node
    Nodes outside the domain keep the nearest interior value as well
    """
    grid = u.grid
    delta = np.asarray(d.signed_distance(grid.nodes())).reshape(grid.shape)
    resolved = delta >= grid.h
    q = np.zeros(grid.shape)
    q[resolved] = u.values[resolved] / delta[resolved] ** p.s
    if not np.any(resolved):
        return Field(grid, q, None)
    _, nearest = ndimage.distance_transform_edt(~resolved, return_indices=True)
    q = q[tuple(nearest)]
    return Field(grid, q, None)


def overdetermined_report(u, d, p, n_samples, sampler=None):
    sampler = sampler or BoundarySampler(p)
    return sampler.report(u, d, n_samples)
