from dataclasses import dataclass

import numpy as np
from scipy import special

from Geometry import unit_ball_volume


@dataclass(frozen=True)
class FracParams:
    """Dimension N in {1, 2, 3} and fractional order s in (0, 1)"""
    N: int
    s: float

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ValueError(f"N must be 1, 2 or 3, got {self.N}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie strictly between 0 and 1, got {self.s}")

    @property
    def c_ns(self):
        return c_ns(self)

    @property
    def gamma_ns(self):
        return gamma_ns(self)

    def as_dict(self):
        return {
            "N": self.N,
            "s": self.s,
            "c_ns": c_ns(self),
            "gamma_ns": gamma_ns(self),
            "C_ns": lambda1_constant(self),
            "unit_ball_volume": unit_ball_volume(self.N),
        }


def c_ns(p):
    """Normalization constant of the integral fractional Laplacian"""
    N, s = p.N, p.s
    return s * (1.0 - s) * 4.0 ** s * np.pi ** (-N / 2.0) * special.gamma(N / 2.0 + s) / special.gamma(2.0 - s)


def gamma_ns(p):
    """Coefficient of the ball torsion function gamma * (R^2 - |x|^2)_+^s"""
    N, s = p.N, p.s
    return 4.0 ** (-s) * special.gamma(N / 2.0) / (special.gamma(N / 2.0 + s) * special.gamma(1.0 + s))


def lambda1_constant(p):
    """C_{N,s} = N/(2s) |B_1|^(1+2s/N) c_{N,s}"""
    N, s = p.N, p.s
    return N / (2.0 * s) * unit_ball_volume(N) ** (1.0 + 2.0 * s / N) * c_ns(p)


def lambda1_lower_bound(p, volume):
    """Faber-Krahn type lower bound C_{N,s} |Omega|^(-2s/N) for the first Dirichlet eigenvalue"""
    if not volume > 0:
        raise ValueError(f"volume must be > 0, got {volume}")
    return lambda1_constant(p) * volume ** (-2.0 * p.s / p.N)


def dlog_c_ns_ds(p):
    """Analytic d/ds log c_{N,s}"""
    N, s = p.N, p.s
    return (1.0 / s - 1.0 / (1.0 - s) + np.log(4.0)
            + special.digamma(N / 2.0 + s) + special.digamma(2.0 - s))


def dlog_gamma_ns_ds(p):
    """Analytic d/ds log gamma_{N,s}"""
    N, s = p.N, p.s
    return -np.log(4.0) - special.digamma(N / 2.0 + s) - special.digamma(1.0 + s)
