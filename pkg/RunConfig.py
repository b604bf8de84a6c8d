import hashlib
import json
import logging
from dataclasses import dataclass, field, fields

import numpy as np

from BoundaryDerivative import BoundarySampler
from DirichletSolver import SolveConfig, make_nonlinearity
from FracConstants import FracParams
from FracOperator import QuadratureScheme
from Geometry import Domain
from MovingPlane import MovingPlaneAnalyzer


class ConfigError(Exception):
    """Unknown key, bad value or malformed config file"""

    def __init__(self, message, key=None, line=None):
        where = [f"key {key!r}"] if key else []
        if line:
            where.append(f"line {line}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))
        self.message = message
        self.key = key
        self.line = line


def setup_logging(level=logging.INFO, log_file='fraclap.log'):
    """Setup logging for runs"""
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _key(name):
    return field(default=None, metadata={"key": name})


def _opt(name, default):
    if isinstance(default, list):
        return field(default_factory=lambda: list(default), metadata={"key": name})
    return field(default=default, metadata={"key": name})


@dataclass
class RunConfig:
    # problem
    N: int = _opt("params.N", 1)
    s: float = _opt("params.s", 0.5)
    domain_kind: str = _opt("domain.kind", "ball")  # ball | interval | ellipse | box | union
    center: list = _opt("domain.center", [0.0])
    radius: float = _opt("domain.radius", 1.0)
    semi_axes: list = _opt("domain.semi_axes", [1.0, 0.5])
    lower: list = _opt("domain.lower", [-1.0])
    upper: list = _opt("domain.upper", [1.0])
    intervals: list = _opt("domain.intervals", [])  # union of intervals [[a, b], ...] or balls [[cx, cy, r], ...]
    rhs_kind: str = _opt("rhs.kind", "constant")  # constant | affine | truncated-power
    rhs_value: float = _opt("rhs.value", 1.0)
    rhs_a: float = _opt("rhs.a", 1.0)
    rhs_b: float = _opt("rhs.b", 0.0)
    rhs_p: float = _opt("rhs.p", 2.0)
    rhs_cap: float = _opt("rhs.cap", 1.0)

    # discretization
    h: float = _opt("solve.h", 1.0 / 64)
    half_width: float = _key("solve.half_width")
    linear_tol: float = _opt("solve.linear_tol", 1e-10)
    nonlinear: str = _opt("solve.nonlinear", "off")
    damping: float = _opt("solve.damping", 0.5)
    max_iterations: int = _opt("solve.max_iterations", 200)
    nonlinear_tol: float = _opt("solve.nonlinear_tol", 1e-10)
    node_cap: int = _opt("solve.cap", 20000)
    near: str = _opt("quad.near", "taylor")
    rho: float = _key("quad.rho")
    eig_tol: float = _opt("eig.tol", 1e-8)
    eig_max_iterations: int = _opt("eig.max_iterations", 500)

    # checks
    boundary_samples: int = _opt("boundary.samples", 16)
    ladder_fraction: float = _opt("boundary.ladder_fraction", 0.2)
    ladder_steps: int = _opt("boundary.ladder_steps", 5)
    residual_threshold: float = _opt("boundary.residual_threshold", 0.02)
    constancy_tol: float = _opt("boundary.constancy_tol", 0.05)
    symmetry_factor: float = _opt("tol.symmetry_factor", 10.0)
    symmetry_relative: float = _opt("tol.symmetry_relative", 1e-8)
    oracle_tol: float = _opt("tol.oracle", 0.05)
    plane_resolution: float = _opt("moving_plane.resolution", 1e-6)
    directions: int = _opt("moving_plane.directions", 8)
    random_constructions: int = _opt("mp.random_constructions", 20)

    # run
    out: str = _opt("output.path", "fraclap_out")
    seed: int = _opt("seed", 0)

    def __post_init__(self):
        self.validate()

    @classmethod
    def keys(cls):
        return {f.metadata["key"]: f for f in fields(cls)}

    def validate(self):
        if self.N not in (1, 2, 3):
            raise ConfigError(f"params.N must be 1, 2 or 3, got {self.N}", "params.N")
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"params.s must lie in (0, 1), got {self.s}", "params.s")
        if not self.h > 0:
            raise ConfigError(f"solve.h must be > 0, got {self.h}", "solve.h")
        if self.domain_kind not in ("ball", "interval", "ellipse", "box", "union"):
            raise ConfigError(f"unknown domain kind {self.domain_kind!r}", "domain.kind")
        if self.near not in ("taylor", "split"):
            raise ConfigError(f"quad.near must be 'taylor' or 'split', got {self.near!r}", "quad.near")
        if self.nonlinear not in ("off", "fixed-point"):
            raise ConfigError(f"solve.nonlinear must be 'off' or 'fixed-point', got {self.nonlinear!r}", "solve.nonlinear")
        if self.boundary_samples < 1:
            raise ConfigError("boundary.samples must be >= 1", "boundary.samples")

    # Loading

    @classmethod
    def from_dict(cls, data, text=None):
        keys = cls.keys()
        kwargs = {}
        for key, value in data.items():
            if key not in keys:
                raise ConfigError(f"unknown config key {key!r}", key, _line_of(text, key))
            f = keys[key]
            kwargs[f.name] = _coerce(key, f, value, _line_of(text, key))
        try:
            return cls(**kwargs)
        except ConfigError as e:
            if e.key and e.line is None:
                raise ConfigError(e.message, e.key, _line_of(text, e.key))
            raise

    def with_overrides(self, overrides):
        """Command-line flags on top of the file; None values are skipped"""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)

    def to_dict(self):
        return {f.metadata["key"]: getattr(self, f.name) for f in fields(self)}

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    # Builders

    def params(self):
        return FracParams(self.N, self.s)

    def domain(self):
        dim = self.N
        center = _vector(self.center, dim, "domain.center")
        if self.domain_kind == "ball":
            return Domain.ball(center, self.radius)
        if self.domain_kind == "interval":
            if dim != 1:
                raise ConfigError("domain.kind 'interval' needs params.N = 1", "domain.kind")
            return Domain.interval(self.lower[0], self.upper[0])
        if self.domain_kind == "ellipse":
            return Domain.ellipse(center, _vector(self.semi_axes, dim, "domain.semi_axes"))
        if self.domain_kind == "box":
            return Domain.box(_vector(self.lower, dim, "domain.lower"), _vector(self.upper, dim, "domain.upper"))
        if not self.intervals:
            raise ConfigError("domain.kind 'union' needs domain.intervals", "domain.intervals")
        members = []
        for item in self.intervals:
            if dim == 1 and len(item) == 2:
                members.append(Domain.interval(item[0], item[1]))
            elif len(item) == dim + 1:
                members.append(Domain.ball(item[:dim], item[dim]))
            else:
                raise ConfigError(f"bad union member {item}", "domain.intervals")
        try:
            return Domain.union(members)
        except ValueError as e:
            raise ConfigError(str(e), "domain.intervals")

    def nonlinearity(self):
        options = {"kind": self.rhs_kind, "value": self.rhs_value, "a": self.rhs_a, "b": self.rhs_b,
                "p": self.rhs_p, "cap": self.rhs_cap}
        try:
            return make_nonlinearity(options)
        except ValueError as e:
            raise ConfigError(str(e), "rhs.kind")

    def quadrature(self):
        return QuadratureScheme(rho=self.rho, near=self.near, h=self.h)

    def solve_config(self):
        try:
            return SolveConfig(h=self.h, quad=self.quadrature(), linear_tol=self.linear_tol,
                               nonlinear=self.nonlinear, damping=self.damping,
                               max_iterations=self.max_iterations, nonlinear_tol=self.nonlinear_tol,
                               half_width=self.half_width, cap=self.node_cap, eig_tol=self.eig_tol,
                               eig_max_iterations=self.eig_max_iterations)
        except ValueError as e:
            raise ConfigError(str(e))

    def boundary_sampler(self):
        return BoundarySampler(self.params(), ladder_fraction=self.ladder_fraction, ladder_steps=self.ladder_steps,
                             residual_threshold=self.residual_threshold, constancy_tol=self.constancy_tol)

    def analyzer(self):
        return MovingPlaneAnalyzer(resolution=self.plane_resolution, residual_factor=self.symmetry_factor,
                                   relative_tol=self.symmetry_relative)


def _line_of(text, key):
    if not text:
        return None
    for k, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line or line.strip().startswith(f"{key} ") or line.strip().startswith(f"{key}="):
            return k
    return None


def _coerce(key, f, value, line):
    kind = f.type if isinstance(f.type, type) else {"int": int, "float": float, "str": str, "list": list}.get(f.type, object)
    if value is None and f.default is None:
        return None
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is list and isinstance(value, list):
        return value
    if kind is list and isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    raise ConfigError(f"bad value {value!r} for {kind.__name__} key", key, line)


def _vector(values, dim, key):
    vec = np.atleast_1d(np.asarray(values, dtype=float))
    if vec.size == 1 and dim > 1:
        vec = np.full(dim, float(vec[0]))
    if vec.size != dim:
        raise ConfigError(f"{key} needs {dim} entries, got {vec.size}", key)
    return vec


def load_config(path):
    """Read a flat JSON config (or TOML where tomllib exists) into a RunConfig"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ImportError:
            raise ConfigError("TOML configs need Python 3.11 or newer; use JSON")
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"malformed TOML: {e}")
        data = _flatten(data)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON: {e.msg}", line=e.lineno)
    if not isinstance(data, dict):
        raise ConfigError("config must be a key/value object")
    return RunConfig.from_dict(data, text)


def _flatten(data, prefix=""):
    out = {}
    for k, v in data.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        else:
            out[name] = v
    return out


def dump_defaults():
    return json.dumps(RunConfig().to_dict(), indent=2, sort_keys=True)
