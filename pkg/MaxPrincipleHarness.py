import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ClosedForm import BallTorsion, CornerBarrier, HopfBarrier, plane_gap
from DirichletSolver import DirichletSolver, SolveConfig
from FracConstants import c_ns, gamma_ns, lambda1_lower_bound
from FracOperator import Field, KernelStencil
from Geometry import Ball, Box, Domain, Grid, HalfSpace, member_gap, unit_sphere_area
from MovingPlane import antisymmetric_difference

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"
INCONCLUSIVE = "inconclusive"


@dataclass
class MPCertificate:
    """Outcome of one maximum-principle check with every measured quantity"""
    principle: str  # weak-mp | strong-mp | hopf | corner | decay
    status: str
    inputs_digest: str
    measured: dict = field(default_factory=dict)
    bound_satisfied: bool = False
    margins: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.status == PASS

    def as_dict(self):
        return {
            "principle": self.principle,
            "status": self.status,
            "inputs_digest": self.inputs_digest,
            "measured": {k: _plain(v) for k, v in self.measured.items()},
            "bound_satisfied": self.bound_satisfied,
            "margins": {k: _plain(v) for k, v in self.margins.items()},
            "notes": list(self.notes),
        }


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _describe(obj):
    if obj is None:
        return None
    if hasattr(obj, "describe"):
        return obj.describe()
    return repr(obj)


def inputs_digest(fields, **params):
    """sha256 over field values, grids and the JSON form of the scalar inputs"""
    h = hashlib.sha256()
    for f in fields:
        if f is None:
            continue
        h.update(np.ascontiguousarray(f.values, dtype=np.float64).tobytes())
        h.update(json.dumps(f.grid.describe(), sort_keys=True).encode())
    h.update(json.dumps({k: _plain(_describe(v) if hasattr(v, "describe") else v)
                         for k, v in params.items()}, sort_keys=True, default=str).encode())
    return h.hexdigest()


def antisymmetry_defect(v, hs):
    """max |v + v o Q| over nodes whose reflection stays on the grid"""
    grid = v.grid
    lo = grid.origin
    hi = grid.origin + grid.h * (grid.counts - 1)
    ref = hs.reflect(grid.nodes())
    keep = np.all((ref >= lo - 1e-9 * grid.h) & (ref <= hi + 1e-9 * grid.h), axis=1)
    flat = v.values.ravel()
    mirrored = flat - antisymmetric_difference(v, hs).values.ravel()
    return float(np.max(np.abs(flat + mirrored)[keep])) if np.any(keep) else 0.0


def region_volume(omega, grid):
    if isinstance(omega, Domain):
        return omega.volume()
    inside = np.asarray(omega.signed_distance(grid.nodes())) > 0.0
    return float(np.sum(inside)) * grid.h ** grid.dim


def geometric_ladder(t0, h, ratio=np.sqrt(2.0)):
    """t0, t0/ratio, ... down to 2h"""
    t = []
    cur = t0
    while cur >= 2.0 * h * (1.0 - 1e-12):
        t.append(cur)
        cur /= ratio
    return np.array(t)


def semilinear_coefficient(u, ubar, f):
    """c_f = (f(u) - f(ubar)) / (u - ubar), zero where u = ubar; returns (Field, sup |c_f|)"""
    a = u.values
    b = ubar.values if isinstance(ubar, Field) else np.asarray(ubar)
    diff = a - b
    cf = np.zeros_like(a)
    nz = diff != 0.0
    cf[nz] = (f(a[nz]) - f(b[nz])) / diff[nz]
    return Field(u.grid, cf, None), float(np.max(np.abs(cf))) if cf.size else 0.0


def admissible_alpha(p, B1, K, hs, c0=0.0, samples=256):
    """
    Barrier constants for the Hopf construction:
    kappa = 1 + sup psi_B1 * sup |x - y|^(-N-2s) over x in B1, y outside H,
    C1 = c |K| inf (|x - y|^(-N-2s) - |x - ybar|^(-N-2s)) over x in B1, y in K,
    alpha with kappa - alpha C1 <= -c0 sup psi_B1.
    With hs=None the entire barrier psi_B1 + alpha psi_K is used instead.
    """
    N, s = p.N, p.s
    power = -N - 2.0 * s
    c = c_ns(p)
    sup_psi = BallTorsion(p, B1.center, B1.radius).sup()
    xs = _closure_samples(B1, samples)
    ys = _closure_samples(K, samples)
    dist = np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=2)

    if hs is None:
        if not isinstance(K, Ball):
            raise ValueError("the entire barrier needs K to be a ball")
        mass_K = gamma_ns(p) * K.radius ** (N + 2.0 * s) * unit_sphere_area(N) * special.beta(N / 2.0, s + 1.0) / 2.0
        C1 = c * mass_K * float(np.min(dist ** power))
        kappa = 1.0
    else:
        gap = plane_gap(B1, hs)
        kappa_printed = 1.0 + sup_psi * gap ** power
        kappa_integral = 1.0 + c * B1.volume() * sup_psi * (2.0 * gap) ** power
        kappa = max(kappa_printed, kappa_integral)
        ybar = hs.reflect(ys)
        dist_bar = np.linalg.norm(xs[:, None, :] - ybar[None, :, :], axis=2)
        C1 = c * K.volume() * float(np.min(dist ** power - dist_bar ** power))
    if not C1 > 0:
        raise ValueError(f"barrier constant C1 = {C1} is not positive")
    alpha = (kappa + c0 * sup_psi) / C1
    return {"kappa": kappa, "C1": C1, "alpha": alpha, "sup_psi": sup_psi}


def _closure_samples(domain, count):
    """Boundary samples plus a coarse interior lattice of a ball or box"""
    pts, _ = domain.boundary_samples(count)
    lo, hi = domain.bounding_box()
    k = 7 if domain.dim <= 2 else 5
    axes = [np.linspace(lo[i], hi[i], k) for i in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.column_stack([m.ravel() for m in mesh])
    grid_pts = grid_pts[np.asarray(domain.signed_distance(grid_pts)) >= 0.0]
    return np.vstack([pts, grid_pts, domain.center[None, :]])


class MaxPrincipleHarness:
    """
    Discrete certification of the antisymmetric maximum principles and the boundary lemmas
    'Almost everywhere' means every grid node outside the collar delta < 2h
    """

    def __init__(self, params, relative_tol=1e-8, absolute_tol=1e-12, collar=2.0,
                 min_ladder_points=5, exponent_slack=0.1, lambda1=None):
        self.params = params
        self.relative_tol = relative_tol
        self.absolute_tol = absolute_tol
        self.collar = collar  # in units of h
        self.min_ladder_points = min_ladder_points
        self.exponent_slack = exponent_slack
        self.lambda1 = lambda1  # known first eigenvalue of the test region, if any
        self.logger = logging.getLogger('MaxPrincipleHarness')

    def tol_for(self, values):
        return max(self.absolute_tol, self.relative_tol * float(np.max(np.abs(values))) if np.size(values) else 0.0)

    def operator(self, f):
        return KernelStencil.for_grid(self.params, f.grid).apply(f.values).ravel()

    def _log(self, cert):
        mark = {PASS: "✓", FAIL: "✗"}.get(cert.status, "⚠")
        self.logger.info(f"{mark} {cert.principle}: {cert.status} {cert.notes[-1] if cert.notes else ''}")
        return cert

    def _lambda1(self, omega, grid):
        """(lambda_1, source); a lower bound is a valid stand-in for both the precondition and the bound"""
        if self.lambda1 is not None:
            return self.lambda1, "given"
        if isinstance(omega, Domain):
            try:
                lam, _, _ = DirichletSolver(omega, self.params, SolveConfig(h=grid.h)).lambda1()
                return lam, "estimated"
            except Exception as e:
                self.logger.warning(f"⚠ lambda_1 estimate failed ({e}); using the lower bound")
            return lambda1_lower_bound(self.params, omega.volume()), "lower-bound"
        return lambda1_lower_bound(self.params, region_volume(omega, grid)), "lower-bound"

    def check_weak_mp(self, v, hs, omega, c=0.0, kappa=0.0):
        """
        Antisymmetric weak maximum principle (hs=None: plain entire supersolution)
        ||v_-||_L2(omega) <= kappa |omega|^(1/2) / (lambda_1 - c_inf)
        """
        p = self.params
        grid = v.grid
        nodes = grid.nodes()
        vals = v.values.ravel()
        tol = self.tol_for(vals)
        c_vals = np.asarray(c(nodes) if callable(c) else np.full(len(nodes), float(c)), dtype=float)
        delta = np.asarray(omega.signed_distance(nodes))
        in_omega = delta > 0.0
        c_inf = float(np.max(np.abs(c_vals[in_omega]))) if np.any(in_omega) else 0.0
        digest = inputs_digest([v], hs=hs.describe() if hs else None, omega=_describe(omega), c_inf=c_inf, kappa=kappa,
                               N=p.N, s=p.s)
        cert = MPCertificate("weak-mp", NOT_APPLICABLE, digest)
        cert.measured.update({"c_inf": c_inf, "kappa": kappa})

        if not np.any(in_omega):
            cert.notes.append("omega contains no grid nodes")
            return self._log(cert)
        if hs is not None:
            if np.any(hs.level(nodes[in_omega]) < -1e-12):
                cert.notes.append("omega is not contained in the halfspace")
                return self._log(cert)
            asym = antisymmetry_defect(v, hs)
            cert.measured["antisymmetry_defect"] = asym
            if asym > max(tol, 1e-10):
                cert.notes.append(f"field is not antisymmetric (defect {asym:.3e})")
                return self._log(cert)
            outside = hs.contains(nodes) & ~in_omega
        else:
            outside = ~in_omega
        min_outside = float(np.min(vals[outside])) if np.any(outside) else 0.0
        cert.measured["min_outside_omega"] = min_outside
        if min_outside < -tol:
            cert.notes.append("field is negative outside omega")
            return self._log(cert)

        vol = region_volume(omega, grid)
        if kappa > 0.0 or c_inf > 0.0:
            lam1, source = self._lambda1(omega, grid)
        else:
            lam1, source = lambda1_lower_bound(p, vol), "lower-bound"
        cert.measured.update({"lambda1": lam1, "lambda1_source": source, "volume": vol})
        threshold = (lam1 - c_inf) / np.sqrt(vol)
        cert.measured["kappa_threshold"] = threshold
        if not (c_inf < lam1 and kappa < threshold):
            cert.notes.append("kappa or c_inf too large for the eigenvalue")
            return self._log(cert)

        Lv = self.operator(v)
        unflagged = delta >= self.collar * grid.h
        super_defect = Lv - c_vals * vals + kappa
        super_tol = self.tol_for(Lv)
        worst = float(np.min(super_defect[unflagged])) if np.any(unflagged) else 0.0
        cert.measured["supersolution_min_defect"] = worst
        cert.measured["collar_nodes"] = int(np.sum(in_omega & ~unflagged))
        if worst < -super_tol:
            cert.notes.append(f"supersolution inequality fails (min defect {worst:.3e})")
            return self._log(cert)

        neg = np.minimum(vals[in_omega], 0.0)
        norm_neg = float(np.sqrt(grid.h ** grid.dim * np.sum(neg ** 2)))
        bound = kappa * np.sqrt(vol) / (lam1 - c_inf)
        cert.measured.update({"norm_v_minus": norm_neg, "bound": bound, "min_v": float(np.min(vals[in_omega]))})
        if kappa == 0.0:
            ok = cert.measured["min_v"] >= -tol
            cert.margins["min_v"] = cert.measured["min_v"] + tol
        else:
            ok = norm_neg <= bound + tol
            cert.margins["bound_minus_norm"] = bound - norm_neg
        cert.bound_satisfied = bool(ok)
        cert.status = PASS if ok else FAIL
        cert.notes.append(f"||v_-|| = {norm_neg:.3e}, bound {bound:.3e}")
        return self._log(cert)

    def check_strong_mp(self, v, hs, omega, c=0.0):
        """Either v == 0 on H or v > 0 at every unflagged node of omega"""
        weak = self.check_weak_mp(v, hs, omega, c, 0.0)
        cert = MPCertificate("strong-mp", NOT_APPLICABLE, weak.inputs_digest, dict(weak.measured))
        if not weak.passed:
            cert.notes.append(f"weak maximum principle precondition: {weak.status}")
            return self._log(cert)
        grid = v.grid
        nodes = grid.nodes()
        vals = v.values.ravel()
        tol = self.tol_for(vals)
        side = hs.contains(nodes) if hs is not None else np.ones(len(nodes), dtype=bool)
        delta = np.asarray(omega.signed_distance(nodes))
        max_abs_h = float(np.max(np.abs(vals[side]))) if np.any(side) else 0.0
        cert.measured["max_abs_on_H"] = max_abs_h
        if max_abs_h <= max(tol, self.absolute_tol):
            cert.status = PASS
            cert.bound_satisfied = True
            cert.measured["branch"] = "zero"
            cert.notes.append("v vanishes identically on H")
            return self._log(cert)
        interior = delta >= self.collar * grid.h
        collar = (delta > 0.0) & ~interior
        if not np.any(interior):
            cert.status = INCONCLUSIVE
            cert.notes.append("only collar nodes available")
            return self._log(cert)
        min_int = float(np.min(vals[interior]))
        cert.measured["min_interior"] = min_int
        cert.measured["branch"] = "positive"
        cert.margins["min_interior"] = min_int
        if min_int > 0.0:
            cert.status = PASS
            cert.bound_satisfied = True
            cert.notes.append(f"v > 0 in omega (min {min_int:.3e})")
        elif np.any(collar) and float(np.min(vals[collar])) > 0.0 and min_int <= 0.0:
            cert.status = FAIL
            cert.notes.append("v not strictly positive away from the collar")
        else:
            cert.status = FAIL
            cert.notes.append(f"neither branch holds (min {min_int:.3e})")
        return self._log(cert)

    def check_hopf(self, v, B1, K, hs, c_bound=0.0):
        """Largest d with v >= d delta_B1^s on B1, plus the barrier route constants and their certification"""
        p = self.params
        grid = v.grid
        nodes = grid.nodes()
        vals = v.values.ravel()
        digest = inputs_digest([v], B1=_describe(B1), K=_describe(K), hs=hs.describe() if hs else None,
                               c_bound=c_bound, N=p.N, s=p.s)
        cert = MPCertificate("hopf", NOT_APPLICABLE, digest)

        if not isinstance(B1, Ball) or not isinstance(K, (Ball, Box)):
            cert.notes.append("B1 must be a ball and K a ball or box")
            return self._log(cert)
        if member_gap(B1, K) <= 0.0:
            cert.notes.append("K touches B1")
            return self._log(cert)
        if hs is not None and (plane_gap(B1, hs) <= 0.0 or plane_gap(K, hs) <= 0.0):
            cert.notes.append("B1 and K must stay away from the plane")
            return self._log(cert)
        in_K = np.asarray(K.signed_distance(nodes)) >= 0.0
        if not np.any(in_K):
            cert.notes.append("K contains no grid nodes")
            return self._log(cert)
        essinf_K = float(np.min(vals[in_K]))
        cert.measured["essinf_K"] = essinf_K
        if not essinf_K > 0.0:
            cert.notes.append("essinf over K is not positive")
            return self._log(cert)
        lam1 = lambda1_lower_bound(p, B1.volume())
        source = "lower-bound"
        if not c_bound < lam1:
            lam1, source = DirichletSolver(B1, p, SolveConfig(h=grid.h)).lambda1()[0], "estimated"
        cert.measured.update({"lambda1_B1": lam1, "lambda1_source": source, "c_bound": c_bound})
        if not c_bound < lam1:
            cert.notes.append("c_bound exceeds lambda_1(B1)")
            return self._log(cert)

        delta = np.asarray(B1.signed_distance(nodes))
        in_B1 = delta > 0.0
        ratios = vals[in_B1] / delta[in_B1] ** p.s
        d = float(np.min(ratios))
        cert.measured["d"] = d

        consts = admissible_alpha(p, B1, K, hs, c_bound)
        alpha = consts["alpha"]
        barrier = HopfBarrier(p, B1, K, hs, alpha)
        w = Field.from_function(grid, barrier)
        Lw = self.operator(w)
        unflagged = delta >= self.collar * grid.h
        defect = Lw + c_bound * w.values.ravel()
        barrier_tol = self.tol_for(Lw)
        barrier_max = float(np.max(defect[unflagged])) if np.any(unflagged) else 0.0
        sup_K = 1.0 if hs is not None else BallTorsion(p, K.center, K.radius).sup()
        epsilon = essinf_K / (alpha * sup_K)
        proof_floor = epsilon * gamma_ns(p) * B1.radius ** p.s
        cert.measured.update({
            "kappa": consts["kappa"],
            "C1": consts["C1"],
            "alpha": alpha,
            "epsilon": epsilon,
            "proof_route_d": proof_floor,
            "barrier_max_defect": barrier_max,
        })
        cert.margins["d"] = d
        cert.margins["d_over_proof_route"] = d / proof_floor if proof_floor > 0 else np.inf
        cert.margins["barrier"] = -barrier_max
        barrier_ok = barrier_max <= barrier_tol
        if not barrier_ok:
            cert.notes.append(f"barrier inequality off by {barrier_max:.3e} at some node")
        cert.bound_satisfied = bool(d > 0.0)
        cert.status = PASS if d > 0.0 else FAIL
        cert.notes.append(f"d = {d:.6e}, epsilon = {epsilon:.3e}, alpha = {alpha:.3e}")
        return self._log(cert)

    def check_corner_lemma(self, w, d, R, c=0.0, t0=None, alpha=None):
        """
        Growth w(t eta_bar) >= C t^(1+s) at an orthogonal contact point at the origin
        (plane x1 = 0, eta_bar = e2 - e1); w may be a Field or a callable
        """
        p = self.params
        s = p.s
        N = p.N
        is_field = isinstance(w, Field)
        h = w.grid.h if is_field else R / 256.0
        digest = inputs_digest([w] if is_field else [], domain=_describe(d), R=R, c=c, N=N, s=s)
        cert = MPCertificate("corner", NOT_APPLICABLE, digest)
        if N < 2:
            cert.notes.append("corner lemma needs N >= 2")
            return self._log(cert)

        origin = np.zeros(N)
        e1 = np.zeros(N)
        e1[0] = 1.0
        e2 = np.zeros(N)
        e2[1] = 1.0
        if d is not None:
            if abs(float(d.signed_distance(origin))) > h:
                cert.notes.append("origin is not on the boundary")
                return self._log(cert)
            if abs(float(np.dot(d.normal(origin), e1))) > 0.05:
                cert.notes.append("plane x1 = 0 is not orthogonal to the boundary at the origin")
                return self._log(cert)

        evaluate = w.interpolate if is_field else w
        if is_field:
            hs = HalfSpace(e1, 0.0)
            v = w.values.ravel()
            defect = antisymmetry_defect(w, hs)
            left = w.grid.nodes()[:, 0] < 0.0
            min_left = float(np.min(v[left]))
            tol = self.tol_for(v)
            cert.measured.update({"antisymmetry_defect": defect, "min_left": min_left})
            if defect > max(tol, 1e-10) or min_left < -tol:
                cert.notes.append("field is not antisymmetric or not nonnegative on {x1 < 0}")
                return self._log(cert)

        t0 = R / 8.0 if t0 is None else t0
        if t0 < 8.0 * h:
            cert.status = INCONCLUSIVE
            cert.notes.append(f"ladder too short: t0 = {t0:.3e} < 8h")
            return self._log(cert)
        t = geometric_ladder(t0, h)
        if len(t) < self.min_ladder_points:
            cert.status = INCONCLUSIVE
            cert.notes.append(f"only {len(t)} ladder points")
            return self._log(cert)
        eta_bar = e2 - e1
        vals = np.asarray(evaluate(t[:, None] * eta_bar), dtype=float)
        ratios = vals / t ** (1.0 + s)
        C_lower = float(np.min(ratios))
        cert.measured.update({"t": t, "values": vals, "C_lower": C_lower, "C_smallest_t": float(ratios[-1])})
        if not C_lower > 0.0:
            cert.status = FAIL
            cert.notes.append("no positive constant C along the diagonal")
            return self._log(cert)
        slope, intercept = np.polyfit(np.log(t), np.log(vals), 1)
        cert.measured.update({"exponent": float(slope), "C_fit": float(np.exp(intercept))})
        cert.margins["exponent"] = 1.0 + s + self.exponent_slack - float(slope)
        ok = slope <= 1.0 + s + self.exponent_slack
        cert.bound_satisfied = bool(ok)
        cert.status = PASS if ok else FAIL
        if is_field:
            cert.measured.update(self.corner_barrier_route(w, R, c, alpha))
        cert.notes.append(f"exponent {slope:.4f} (limit {1.0 + s:.2f}), C >= {C_lower:.4e}")
        return self._log(cert)

    def corner_barrier_route(self, w, R, c=0.0, alpha=None):
        """alpha with (-Delta)^s h - c h <= 0 on K = B ∩ {x1 < 0}, and M with w >= M h on the closure of B^1"""
        p = self.params
        grid = w.grid
        nodes = grid.nodes()
        unit = CornerBarrier(p, R, 1.0)
        x1 = nodes[:, 0]
        d1, d2 = unit.truncated_distances(nodes)
        main = Field(grid, -x1 * unit.phi(nodes), None)
        side = Field(grid, -x1 * (d1 + d2), None)
        L_main = self.operator(main)
        L_side = self.operator(side)
        in_K = (np.asarray(unit.B.signed_distance(nodes)) >= self.collar * grid.h) & (x1 < -self.collar * grid.h)
        if not np.any(in_K):
            return {"barrier_route": "no K nodes"}
        if alpha is None:
            num = L_main[in_K] - c * main.values.ravel()[in_K]
            den = -(L_side[in_K] - c * side.values.ravel()[in_K])
            if np.any(den <= 0.0):
                return {"barrier_route": "side balls do not push the operator down"}
            alpha = 1.05 * max(float(np.max(num / den)), 0.0) or 1.0
        barrier = CornerBarrier(p, R, alpha)
        hb = Field.from_function(grid, barrier)
        defect = self.operator(hb)[in_K] - c * hb.values.ravel()[in_K]
        in_left = (np.asarray(barrier.B_left.signed_distance(nodes)) >= 0.0) & (hb.values.ravel() > 0.0)
        M = float(np.min(w.values.ravel()[in_left] / hb.values.ravel()[in_left])) if np.any(in_left) else float("nan")
        return {
            "barrier_alpha": alpha,
            "barrier_max_defect": float(np.max(defect)),
            "barrier_ok": bool(np.max(defect) <= self.tol_for(defect)),
            "barrier_M": M,
        }

    def check_decay_lemma(self, u, d, plane, point=None, t0=None):
        """
        v(t eta_bar)/t^(1+s) along the diagonal at a contact point on T must fall
        (last value at most half the first); plane is the HalfSpace of the moving plane
        """
        p = self.params
        grid = u.grid
        h = grid.h
        digest = inputs_digest([u], domain=_describe(d), plane=plane.describe(), N=p.N, s=p.s)
        cert = MPCertificate("decay", NOT_APPLICABLE, digest)
        if p.N < 2:
            cert.notes.append("decay lemma needs N >= 2")
            return self._log(cert)
        if point is None:
            pts, _ = d.boundary_samples(4096 if p.N == 2 else 8192)
            level = np.abs(plane.level(pts))
            point = pts[int(np.argmin(level))]
        point = np.asarray(point, dtype=float)
        inward = -d.normal(point)
        eta_bar = inward - plane.e

        v = antisymmetric_difference(u, plane)
        lo, hi = d.bounding_box()
        t0 = 0.25 * float(np.min(hi - lo)) if t0 is None else t0
        if t0 < 8.0 * h:
            cert.status = INCONCLUSIVE
            cert.notes.append(f"ladder too short: t0 = {t0:.3e} < 8h")
            return self._log(cert)
        t = geometric_ladder(t0, h)
        if len(t) < self.min_ladder_points:
            cert.status = INCONCLUSIVE
            cert.notes.append(f"only {len(t)} ladder points")
            return self._log(cert)
        vals = np.asarray(v.interpolate(point + t[:, None] * eta_bar), dtype=float)
        ratios = np.abs(vals) / t ** (1.0 + p.s)
        cert.measured.update({"point": point, "t": t, "ratios": ratios, "aligned": v.meta.get("aligned", False)})
        first, last = float(ratios[0]), float(ratios[-1])
        ok = last <= 0.5 * first or float(np.max(ratios)) <= self.tol_for(u.values)
        cert.margins["half_first_minus_last"] = 0.5 * first - last
        cert.bound_satisfied = bool(ok)
        cert.status = PASS if ok else FAIL
        cert.notes.append(f"ratio {first:.3e} -> {last:.3e}")
        return self._log(cert)


def check_weak_mp(v, hs, omega, c, kappa, p, lambda1=None):
    return MaxPrincipleHarness(p, lambda1=lambda1).check_weak_mp(v, hs, omega, c, kappa)


def check_strong_mp(v, hs, omega, p, c=0.0):
    return MaxPrincipleHarness(p).check_strong_mp(v, hs, omega, c)


def check_hopf(v, B1, K, hs, c_bound, p):
    return MaxPrincipleHarness(p).check_hopf(v, B1, K, hs, c_bound)


def check_corner_lemma(w, d, R, p, c=0.0, t0=None):
    return MaxPrincipleHarness(p).check_corner_lemma(w, d, R, c, t0)


def check_decay_lemma(u, d, plane, p, point=None, t0=None):
    return MaxPrincipleHarness(p).check_decay_lemma(u, d, plane, point, t0)


SUITES = ("weak", "strong", "hopf", "corner", "decay")


def _axis(dim, k=0):
    e = np.zeros(dim)
    e[k] = 1.0
    return e


def _odd_torsion(p, grid, hs, balls, weights=None):
    """sum_i w_i (psi_B_i - psi_Q(B_i)) sampled on the grid"""
    nodes = grid.nodes()
    qnodes = hs.reflect(nodes)
    total = np.zeros(len(nodes))
    for k, ball in enumerate(balls):
        psi = BallTorsion(p, ball.center, ball.radius)
        total += (1.0 if weights is None else weights[k]) * (psi(nodes) - psi(qnodes))
    return Field(grid, total, None)


def certification_suite(p, h, suite="all", seed=0, constructions=20, kappa_constructions=5, half_width=1.1):
    """
    Standard constructions for every check: list of (name, MPCertificate)
    Antisymmetric fields live on a grid symmetric about the plane {x1 = 0}
    """
    wanted = SUITES if suite == "all" else (suite,)
    for name in wanted:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; expected one of {SUITES + ('all',)}")
    rng = np.random.default_rng(seed)
    N = p.N
    e1 = _axis(N)
    hs = HalfSpace(e1, 0.0)
    grid = Grid.symmetric(half_width, h, N)
    harness = MaxPrincipleHarness(p)
    logger = harness.logger
    out = []

    omega = Ball(0.5 * e1, 0.2)
    if "weak" in wanted or "strong" in wanted:
        harness.lambda1, _ = harness._lambda1(omega, grid)
    first_positive = None
    if "weak" in wanted or "strong" in wanted:
        for k in range(constructions):
            balls = []
            for _ in range(int(rng.integers(1, 4))):
                offset = rng.uniform(-0.05, 0.05, N)
                center = 0.5 * e1 + offset
                lo = float(np.linalg.norm(offset)) + 0.25
                hi = float(center[0]) - 0.02
                balls.append(Ball(center, float(rng.uniform(lo, hi))))
            weights = rng.uniform(0.5, 2.0, len(balls))
            v = _odd_torsion(p, grid, hs, balls, weights)
            c = float(rng.uniform(-1.0, 0.0))
            if first_positive is None:
                first_positive = (v, c)
            if "weak" in wanted:
                out.append((f"weak-mp-{k:02d}", harness.check_weak_mp(v, hs, omega, c, 0.0)))
        if "weak" in wanted:
            harness.lambda1 = None
            for k in range(kappa_constructions):
                a = float(rng.uniform(0.4, 0.6))
                r = float(rng.uniform(0.2, 0.3))
                region = Ball(a * e1, r)
                w = _odd_torsion(p, grid, hs, [region])
                delta = np.asarray(region.signed_distance(grid.nodes()))
                Lw = harness.operator(w)
                top = float(np.max(Lw[delta >= harness.collar * h]))
                kappa = float(rng.uniform(0.05, 0.5))
                v = w.scaled(-kappa / top)
                out.append((f"weak-mp-kappa-{k:02d}", harness.check_weak_mp(v, hs, region, 0.0, kappa)))
            entire = Field.from_function(grid, BallTorsion(p, 0.5 * e1, 0.3))
            out.append(("weak-mp-entire", harness.check_weak_mp(entire, None, omega, 0.0, 0.0)))

    if "strong" in wanted:
        harness.lambda1 = None
        v, c = first_positive
        out.append(("strong-mp-positive", harness.check_strong_mp(v, hs, omega, c)))
        out.append(("strong-mp-zero", harness.check_strong_mp(Field.zeros(grid), hs, omega, 0.0)))

    if "hopf" in wanted:
        v = _odd_torsion(p, grid, hs, [Ball(0.55 * e1, 0.5)])
        B1 = Ball(0.45 * e1, 0.15)
        K = Ball(0.75 * e1, 0.1)
        out.append(("hopf", harness.check_hopf(v, B1, K, hs, 0.0)))
        plain = Field.from_function(grid, BallTorsion(p, 0.55 * e1, 0.5))
        out.append(("hopf-entire", harness.check_hopf(plain, B1, K, None, 0.0)))

    if "corner" in wanted:
        if N < 2:
            out.append(("corner", harness.check_corner_lemma(None, None, 0.5)))
        else:
            R = 0.5
            out.append(("corner", harness.check_corner_lemma(CornerBarrier(p, R, 1.0), Ball(R * _axis(N, 1), R), R)))

    if "decay" in wanted:
        ball = Ball(np.zeros(N), 1.0)
        u = Field.from_function(grid, BallTorsion(p, np.zeros(N), 1.0), ball)
        out.append(("decay", harness.check_decay_lemma(u, ball, hs)))

    passed = sum(1 for _, cert in out if cert.passed)
    logger.info(f"Certification suite '{suite}': {passed}/{len(out)} passed")
    return out
