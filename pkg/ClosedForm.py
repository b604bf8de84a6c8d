import numpy as np

from FracConstants import gamma_ns
from Geometry import Ball, Box, HalfSpace, member_gap


class BallTorsion:
    """
    Torsion function of a ball: gamma_{N,s} (R^2 - |x - x0|^2)_+^s
    Solves (-Delta)^s u = 1 in B_R(x0) with zero exterior data
    """

    def __init__(self, params, center, radius):
        if not radius > 0:
            raise ValueError(f"radius must be > 0, got {radius}")
        self.params = params
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if self.center.size != params.N:
            raise ValueError(f"center has {self.center.size} components, N = {params.N}")
        self.gamma = gamma_ns(params)

    @property
    def ball(self):
        return Ball(self.center, self.radius)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        return self.gamma * np.clip(self.radius ** 2 - r2, 0.0, None) ** self.params.s

    def sup(self):
        return self.gamma * self.radius ** (2.0 * self.params.s)

    def frac_normal_derivative(self):
        """Constant value of the fractional normal derivative on the sphere: -gamma (2R)^s"""
        return -self.gamma * (2.0 * self.radius) ** self.params.s


def eval_ball_torsion(bt, x):
    return bt(x)


def ball_torsion_frac_normal_derivative(bt):
    return bt.frac_normal_derivative()


def indicator(domain, x):
    """1 on the closed set, 0 elsewhere"""
    return (np.asarray(domain.signed_distance(x)) >= 0.0).astype(float)


class HopfBarrier:
    """
    Antisymmetric barrier w = psi_B1 + alpha 1_K - psi_Q(B1) - alpha 1_Q(K)
    With hs=None the entire variant w = psi_B1 + alpha psi_K is used (K must then be a ball)
    """

    def __init__(self, params, B1, K, hs, alpha):
        if not alpha > 0:
            raise ValueError(f"alpha must be > 0, got {alpha}")
        if not isinstance(B1, Ball):
            raise ValueError("B1 must be a ball")
        if not isinstance(K, (Ball, Box)):
            raise ValueError("K must be a ball or a box")
        self.params = params
        self.B1 = B1
        self.K = K
        self.hs = hs
        self.alpha = float(alpha)
        self.psi_B1 = BallTorsion(params, B1.center, B1.radius)

        if member_gap(B1, K) <= 0.0:
            raise ValueError("K must have positive distance to B1")
        if hs is None:
            if not isinstance(K, Ball):
                raise ValueError("the entire barrier needs K to be a ball")
            self.psi_K = BallTorsion(params, K.center, K.radius)
        else:
            if plane_gap(B1, hs) <= 0.0:
                raise ValueError("B1 must be compactly contained in the halfspace")
            if plane_gap(K, hs) <= 0.0:
                raise ValueError("K must have positive distance to the plane")
            self.psi_K = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.hs is None:
            return self.psi_B1(x) + self.alpha * self.psi_K(x)
        qx = self.hs.reflect(x)
        return (self.psi_B1(x) + self.alpha * indicator(self.K, x)
                - self.psi_B1(qx) - self.alpha * indicator(self.K, qx))


def plane_gap(domain, hs):
    """min over the closure of x.e - lam"""
    return -domain.support_value(-hs.e) - hs.lam


def eval_hopf_barrier(hb, x):
    return hb(x)


class CornerBarrier:
    """
    Odd barrier at an orthogonal contact point at the origin:
    h(x) = -x1 [phi_R(x) + alpha (d1(x) + d2(x))]
    phi_R = (R^2 - |x - R e2|^2)_+^s and d_i = (R - |x - c_i|)_+ with c_1 = 4R(e2 - e1), c_2 = 4R(e2 + e1)
    """

    def __init__(self, params, R, alpha):
        if params.N < 2:
            raise ValueError("the corner barrier needs N >= 2")
        if not R > 0 or not alpha > 0:
            raise ValueError(f"R and alpha must be > 0, got R={R}, alpha={alpha}")
        self.params = params
        self.R = float(R)
        self.alpha = float(alpha)
        N = params.N
        e1 = np.zeros(N)
        e1[0] = 1.0
        e2 = np.zeros(N)
        e2[1] = 1.0
        self.e1, self.e2 = e1, e2
        self.eta_bar = e2 - e1
        self.eta = e2 + e1
        self.B = Ball(R * e2, R)
        self.B_left = Ball(4.0 * R * self.eta_bar, R)
        self.B_right = Ball(4.0 * R * self.eta, R)
        self.plane = HalfSpace(e1, 0.0)

    def phi(self, x):
        r2 = np.sum((np.asarray(x, dtype=float) - self.R * self.e2) ** 2, axis=-1)
        return np.clip(self.R ** 2 - r2, 0.0, None) ** self.params.s

    def truncated_distances(self, x):
        x = np.asarray(x, dtype=float)
        d1 = np.clip(self.R - np.linalg.norm(x - self.B_left.center, axis=-1), 0.0, None)
        d2 = np.clip(self.R - np.linalg.norm(x - self.B_right.center, axis=-1), 0.0, None)
        return d1, d2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d1, d2 = self.truncated_distances(x)
        return -x[..., 0] * (self.phi(x) + self.alpha * (d1 + d2))

    def along_diagonal(self, t):
        """h(t eta_bar) = t^(1+s) (2R - 2t)^s while t < R"""
        t = np.asarray(t, dtype=float)
        return t ** (1.0 + self.params.s) * np.clip(2.0 * self.R - 2.0 * t, 0.0, None) ** self.params.s

    def leading_coefficient(self):
        return (2.0 * self.R) ** self.params.s


def eval_corner_barrier(cb, x):
    return cb(x)
