"""Dimensionless position-dependent mass M(x) and the coordinate u(x) = int_0^x sqrt(M) dt.

Three kinds of profile are supported:

* ``constant``: M = 1, u = x.
* ``rational``: M = (1 + q/(1 + x^2))^2 with q >= 0, u = x + q*arctan(x).
* ``custom``: M sampled on a uniform grid. Values are cubic-interpolated,
  derivatives come from centred differences of the samples and u from
  adaptive quadrature.

All functions accept scalars or numpy arrays and are vectorised.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from .errors import NonPositiveMass, OutOfDomain, QuadratureFailure

QUAD_TOL = 1e-10


class MassKind(str, enum.Enum):
    CONSTANT = "constant"
    RATIONAL = "rational"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the uniform grid x_i = x0 + i*h."""

    x0: float
    h: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise ValueError("GridFunction needs a 1-D array of at least 3 samples")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite sample at index {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.x0, self.h, values)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.x0 == other.x0 and self.h == other.h and self.n == other.n


@dataclass(frozen=True)
class MassProfile:
    kind: MassKind = MassKind.CONSTANT
    q: float = 0.0
    sample_x0: float = 0.0
    sample_h: float = 1.0
    samples: tuple = ()
    _custom: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def constant(cls) -> "MassProfile":
        return cls(MassKind.CONSTANT)

    @classmethod
    def rational(cls, q: float) -> "MassProfile":
        return cls(MassKind.RATIONAL, q=float(q))

    @classmethod
    def custom(cls, x0: float, h: float, values) -> "MassProfile":
        return cls(MassKind.CUSTOM, sample_x0=float(x0), sample_h=float(h),
                   samples=tuple(float(v) for v in values))

    def __post_init__(self):
        object.__setattr__(self, "kind", MassKind(self.kind))
        if self.kind is MassKind.RATIONAL and not (np.isfinite(self.q) and self.q >= 0):
            raise ValueError(f"deformation parameter q must be >= 0, got {self.q}")
        if self.kind is MassKind.CUSTOM:
            object.__setattr__(self, "_custom", _build_custom(self))

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind is MassKind.CUSTOM:
            return self._custom["lo"], self._custom["hi"]
        return -np.inf, np.inf

    @property
    def is_unit(self) -> bool:
        return self.kind is MassKind.CONSTANT or (self.kind is MassKind.RATIONAL and self.q == 0)


def _build_custom(profile: MassProfile) -> dict:
    m = np.asarray(profile.samples, dtype=float)
    if m.size < 5:
        raise ValueError("custom mass profile needs at least 5 samples")
    if not profile.sample_h > 0:
        raise ValueError("custom mass sample spacing must be positive")
    if np.any(m <= 0):
        i = int(np.flatnonzero(m <= 0)[0])
        raise NonPositiveMass(f"custom mass sample {i} is {m[i]}")
    h = profile.sample_h
    xs = profile.sample_x0 + h * np.arange(m.size)
    if not xs[0] <= 0.0 <= xs[-1]:
        raise OutOfDomain("custom mass samples must bracket x = 0 (lower limit of u)")
    mp = np.gradient(m, h, edge_order=2)
    mpp = np.empty_like(m)
    mpp[1:-1] = (m[2:] - 2 * m[1:-1] + m[:-2]) / h**2
    mpp[0] = 2 * mpp[1] - mpp[2]
    mpp[-1] = 2 * mpp[-2] - mpp[-3]
    spline = CubicSpline(xs, m)

    def root_mass(t):
        return np.sqrt(spline(t))

    # cumulative u at the sample nodes, anchored at x = 0
    i0 = int(np.searchsorted(xs, 0.0, side="right") - 1)
    steps = np.empty(m.size - 1)
    for i in range(m.size - 1):
        steps[i] = _quad(root_mass, xs[i], xs[i + 1])
    u_nodes = np.concatenate([[0.0], np.cumsum(steps)])
    u_nodes -= u_nodes[i0] + _quad(root_mass, xs[i0], 0.0)
    return {
        "xs": xs, "lo": xs[0], "hi": xs[-1],
        "M": spline, "Mp": CubicSpline(xs, mp), "Mpp": CubicSpline(xs, mpp),
        "root": root_mass, "u_nodes": u_nodes,
    }


def _quad(fn, a, b, tol=QUAD_TOL):
    if a == b:
        return 0.0
    val, err = integrate.quad(fn, a, b, epsabs=tol, epsrel=0.0, limit=200)
    if not err <= tol:
        raise QuadratureFailure(f"integral over [{a}, {b}] has error estimate {err:.3e} > {tol:.1e}")
    return val


def _check_custom_domain(profile, x):
    lo, hi = profile.domain
    x = np.asarray(x, dtype=float)
    # node positions x0 + i*h differ by a few ulps between grids
    slack = 1e-9 * profile.sample_h
    outside = (x < lo - slack) | (x > hi + slack)
    if np.any(outside):
        bad = np.atleast_1d(x)[np.atleast_1d(outside)][0]
        raise OutOfDomain(f"x = {bad} outside sampled mass domain [{lo}, {hi}]")


def _rational_parts(q, x):
    w = 1.0 + x * x
    s = 1.0 + q / w
    sp = -2.0 * q * x / w**2
    spp = q * (6.0 * x * x - 2.0) / w**3
    return s, sp, spp


def mass_at(profile: MassProfile, x):
    """Return ``(M, M', M'')`` at ``x``.

    Raises NonPositiveMass if M <= 0 anywhere in ``x``.
    """
    x = np.asarray(x, dtype=float)
    if profile.is_unit:
        one = np.ones_like(x)
        return one, np.zeros_like(x), np.zeros_like(x)
    if profile.kind is MassKind.RATIONAL:
        s, sp, spp = _rational_parts(profile.q, x)
        M, Mp, Mpp = s * s, 2.0 * s * sp, 2.0 * (sp * sp + s * spp)
    else:
        _check_custom_domain(profile, x)
        c = profile._custom
        M, Mp, Mpp = c["M"](x), c["Mp"](x), c["Mpp"](x)
    if np.any(M <= 0):
        bad = np.atleast_1d(x)[np.atleast_1d(M <= 0)][0]
        raise NonPositiveMass(f"M({bad}) <= 0")
    return M, Mp, Mpp


def sqrt_mass(profile: MassProfile, x):
    """sqrt(M(x)), exact for the rational profile (no square root taken)."""
    x = np.asarray(x, dtype=float)
    if profile.is_unit:
        return np.ones_like(x)
    if profile.kind is MassKind.RATIONAL:
        return 1.0 + profile.q / (1.0 + x * x)
    return np.sqrt(mass_at(profile, x)[0])


def coordinate_map(profile: MassProfile, x):
    """u(x) = int_0^x sqrt(M(t)) dt."""
    x = np.asarray(x, dtype=float)
    if profile.is_unit:
        return x.copy() if x.ndim else x + 0.0
    if profile.kind is MassKind.RATIONAL:
        return x + profile.q * np.arctan(x)
    _check_custom_domain(profile, x)
    c = profile._custom
    flat = np.atleast_1d(x).ravel()
    idx = np.clip(np.searchsorted(c["xs"], flat, side="right") - 1, 0, c["xs"].size - 1)
    out = np.array([c["u_nodes"][i] + _quad(c["root"], c["xs"][i], xi)
                    for i, xi in zip(idx, flat)])
    return out.reshape(x.shape) if x.ndim else out[0]


def inverse_coordinate(profile: MassProfile, u: float, xtol: float = 1e-13) -> float:
    """Solve u(x) = u for x. u(x) is strictly increasing, so a bracketed root search suffices."""
    if profile.is_unit:
        return float(u)
    if profile.kind is MassKind.RATIONAL:
        # |u - x| <= q*pi/2 bounds the root
        span = profile.q * np.pi / 2 + 1.0
        lo, hi = u - span, u + span
    else:
        lo, hi = profile.domain
    fn = lambda t: float(coordinate_map(profile, t)) - u  # noqa: E731
    if fn(lo) > 0 or fn(hi) < 0:
        raise OutOfDomain(f"u = {u} not attained on [{lo}, {hi}]")
    return optimize.brentq(fn, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


def sample_on_grid(profile: MassProfile, x0: float, h: float, n: int):
    """Sample M, M', M'' and u on x_i = x0 + i*h, i < n.

    Returns four GridFunctions sharing ``(x0, h, n)``.
    """
    if n < 3:
        raise ValueError(f"need n >= 3 grid points, got {n}")
    if not h > 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    x = x0 + h * np.arange(n)
    try:
        M, Mp, Mpp = mass_at(profile, x)
        u = coordinate_map(profile, x)
    except (NonPositiveMass, OutOfDomain, QuadratureFailure) as exc:
        idx = _first_bad_index(profile, x)
        raise type(exc)(f"grid index {idx}: {exc}") from exc
    if np.any(np.diff(u) <= 0):
        raise ValueError("coordinate map is not strictly increasing on this grid")
    mk = lambda v: GridFunction(x0, h, v)  # noqa: E731
    return mk(M), mk(Mp), mk(Mpp), mk(u)


def _first_bad_index(profile, x):
    for i, xi in enumerate(x):
        try:
            mass_at(profile, xi)
            coordinate_map(profile, xi)
        except Exception:
            return i
    return None


@dataclass(frozen=True)
class Grid:
    """Uniform grid metadata: n nodes x0, x0 + h, ..., x0 + (n-1)*h."""

    x0: float
    h: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"need n >= 3 grid points, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")

    @classmethod
    def spanning(cls, left: float, right: float, n: int) -> "Grid":
        return cls(float(left), (right - left) / (n - 1), int(n))

    @classmethod
    def of(cls, obj) -> "Grid":
        """Grid of anything carrying ``x0``, ``h`` and ``n``."""
        if isinstance(obj, Grid):
            return obj
        return cls(obj.x0, obj.h, obj.n)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    @property
    def right(self) -> float:
        return self.x0 + self.h * (self.n - 1)

    def refined(self) -> "Grid":
        """Same interval, half the spacing."""
        return Grid(self.x0, self.h / 2, 2 * self.n - 1)
