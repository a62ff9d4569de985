"""so(2,1) structure functions F, G and the potential layers built from them.

The generators act on functions chi(x) * exp(i*mu*phi).  Everything here is
written at fixed mu, i.e. with i d/dphi replaced by -mu, so no second
coordinate is ever represented.

Potential layers, all on the same x grid:

    V_mu   = (1/4 - mu^2)(1 - F^2) - 2 mu F G + G^2
    V_k    = [1 + delta (1/4 - k^2)] G^2 - 2 k F G
    V_eff  = M''/(4 M^2) - 7 M'^2/(16 M^3) + V_mu
    V      = [a(a+b+1) + b + 9/16] M'^2/M^3 - (2b+1)/4 M''/M^2 + V_mu

(a, b the ordering parameters alpha, beta).  V_mu uses F' = sqrt(M)(1-F^2)
and G' = -sqrt(M) F G, so the value path contains no numerical derivative.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularPoint
from .mass_profile import (
    Grid,
    GridFunction,
    MassProfile,
    coordinate_map,
    inverse_coordinate,
    mass_at,
    sqrt_mass,
)

EPS_SING = 1e-3
G_WALL = 50.0


class RealizationClass(str, enum.Enum):
    NEG_OMEGA = "NegOmega"    # Scarf II like: F = tanh, G = b sech
    ZERO_OMEGA = "ZeroOmega"  # Morse like: F = +-1, G = b exp(-+u)
    POS_OMEGA = "PosOmega"    # Poschl-Teller like: F = coth, G = b cosech


@dataclass(frozen=True)
class AlgebraRealization:
    cls: RealizationClass
    k: float
    b: float = 1.0
    c: float = 0.0
    sign: int = 1
    mass: MassProfile = field(default_factory=MassProfile.constant)
    eps_sing: float = EPS_SING
    unchecked: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cls", RealizationClass(self.cls))
        if not self.k > 0.5:
            raise ValueError(f"representation label k must exceed 1/2, got {self.k}")
        if self.b == 0 or not np.isfinite(self.b):
            raise ValueError("class constant b must be finite and nonzero")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not self.eps_sing > 0:
            raise ValueError("eps_sing must be positive")
        if self.b < 0:
            if not self.unchecked:
                raise ValueError("b < 0 requires unchecked=True")
            warnings.warn("b < 0: the lowest chain member may not be normalizable", stacklevel=2)
        if self.cls is RealizationClass.POS_OMEGA and self.b < self.k + 1 and not self.unchecked:
            # near the cut V_k ~ ((k - b)^2 - 1/4)/z^2 and chi_0 ~ z^(b - k + 1/2):
            # the regular solution only for b > k, limit point only for b >= k + 1
            warnings.warn(
                f"PosOmega with b = {self.b} < k + 1 = {self.k + 1}: the closed-form levels "
                "are the hard-wall spectrum only for b > k, and the cut is a limit point "
                "only for b >= k + 1",
                stacklevel=2,
            )

    @property
    def delta(self) -> float:
        if self.cls is RealizationClass.NEG_OMEGA:
            return 1.0 / self.b**2
        if self.cls is RealizationClass.POS_OMEGA:
            return -1.0 / self.b**2
        return 0.0

    @property
    def omega(self) -> float:
        return -self.delta

    def energy(self, n: int = 0) -> float:
        """E_n = -(k - n - 1/2)^2."""
        return -((self.k - n - 0.5) ** 2)

    @property
    def bound_count(self) -> int:
        """Number of n >= 0 with n < k - 1/2."""
        return int(np.ceil(self.k - 0.5))


@dataclass(frozen=True)
class AmbiguityParams:
    alpha: float = 0.0
    beta: float = -1.0

    @property
    def gamma(self) -> float:
        return -1.0 - self.alpha - self.beta

    @property
    def v_coeff(self) -> float:
        """alpha(alpha + beta + 1) + beta + 1, the M'^2/M^3 weight in the kinetic identity."""
        return self.alpha * (self.alpha + self.beta + 1.0) + self.beta + 1.0


def _shifted_u(r: AlgebraRealization, x):
    u = coordinate_map(r.mass, x)
    z = u - r.c
    if r.cls is RealizationClass.POS_OMEGA:
        near = z < r.eps_sing * (1 - 1e-9)
        if np.any(near):
            bad = np.atleast_1d(x)[np.atleast_1d(near)][0]
            raise SingularPoint(
                f"x = {bad}: u - c = {float(np.atleast_1d(z)[np.atleast_1d(near)][0]):.3e} "
                f"is inside the excluded layer eps_sing = {r.eps_sing}")
    return u, z


def fg_at(r: AlgebraRealization, x):
    """Return ``(F, G)`` at ``x``."""
    u, z = _shifted_u(r, x)
    if r.cls is RealizationClass.NEG_OMEGA:
        return np.tanh(z), r.b / np.cosh(z)
    if r.cls is RealizationClass.POS_OMEGA:
        return 1.0 / np.tanh(z), r.b / np.sinh(z)
    F = np.full_like(np.asarray(u, dtype=float), float(r.sign))
    return F, r.b * np.exp(-r.sign * u)


def fg_prime(r: AlgebraRealization, x):
    """Analytic x-derivatives of F and G from the so(2,1) constraints."""
    F, G = fg_at(r, x)
    root = sqrt_mass(r.mass, x)
    return root * (1.0 - F * F), -root * F * G


def away_from_wall(r: AlgebraRealization, x, margin: float = 0.0):
    """Boolean mask of points with u - c >= margin (all True unless PosOmega)."""
    x = np.asarray(x, dtype=float)
    if r.cls is not RealizationClass.POS_OMEGA or margin <= 0:
        return np.ones(x.shape, dtype=bool)
    return coordinate_map(r.mass, x) - r.c >= margin


def check_constraints(r: AlgebraRealization, grid, wall_margin: float = 0.0):
    """Max residuals ``(r1, r2, r3)`` of the F/G constraints on ``grid``.

    r1 = max|F' - sqrt(M)(1 - F^2)|, r2 = max|G' + sqrt(M) F G| with F', G'
    from second-order finite differences, r3 = max|F^2 + delta G^2 - 1|.
    For PosOmega, points closer than ``wall_margin`` (in u) to the cut are
    left out of all three maxima.
    """
    g = Grid.of(grid)
    x = g.x
    F, G = fg_at(r, x)
    root = sqrt_mass(r.mass, x)
    dF = np.gradient(F, g.h, edge_order=2)
    dG = np.gradient(G, g.h, edge_order=2)
    keep = away_from_wall(r, x, wall_margin)
    r1 = np.max(np.abs(dF - root * (1.0 - F * F))[keep])
    r2 = np.max(np.abs(dG + root * F * G)[keep])
    r3 = np.max(np.abs(F * F + r.delta * G * G - 1.0)[keep])
    return float(r1), float(r2), float(r3)


def potential_vmu(r: AlgebraRealization, mu: float, x):
    F, G = fg_at(r, x)
    return (0.25 - mu * mu) * (1.0 - F * F) - 2.0 * mu * F * G + G * G


def potential_vk(r: AlgebraRealization, x):
    F, G = fg_at(r, x)
    return (1.0 + r.delta * (0.25 - r.k**2)) * G * G - 2.0 * r.k * F * G


def potential_closed_form(r: AlgebraRealization, x):
    """Class-by-class explicit form of V_k in terms of u - c."""
    u, z = _shifted_u(r, x)
    k, b = r.k, r.b
    if r.cls is RealizationClass.NEG_OMEGA:
        sech = 1.0 / np.cosh(z)
        return (b * b - k * k + 0.25) * sech**2 - 2.0 * k * b * sech * np.tanh(z)
    if r.cls is RealizationClass.POS_OMEGA:
        csch = 1.0 / np.sinh(z)
        return (b * b + k * k - 0.25) * csch**2 - 2.0 * k * b * csch / np.tanh(z)
    s = r.sign
    return b * b * np.exp(-2.0 * s * u) - s * 2.0 * k * b * np.exp(-s * u)


def mass_terms(mass: MassProfile, x):
    """(M'^2/M^3, M''/M^2) at x."""
    M, Mp, Mpp = mass_at(mass, x)
    return Mp * Mp / M**3, Mpp / (M * M)


def potential_veff(r: AlgebraRealization, mu: float, x):
    if r.mass.is_unit:
        return potential_vmu(r, mu, x)
    sq, curv = mass_terms(r.mass, x)
    return 0.25 * curv - (7.0 / 16.0) * sq + potential_vmu(r, mu, x)


def potential_v(r: AlgebraRealization, a: AmbiguityParams, mu: float, x):
    """The bare potential which, placed in the mass environment, yields V_eff."""
    if r.mass.is_unit:
        return potential_vmu(r, mu, x)
    sq, curv = mass_terms(r.mass, x)
    w = a.alpha * (a.alpha + a.beta + 1.0) + a.beta + 9.0 / 16.0
    return w * sq - 0.25 * (2.0 * a.beta + 1.0) * curv + potential_vmu(r, mu, x)


def veff_from_v(V, a: AmbiguityParams, mass: MassProfile, x):
    """Fold the ordering-dependent kinetic terms of the von Roos operator into V."""
    if mass.is_unit:
        return np.asarray(V, dtype=float)
    sq, curv = mass_terms(mass, x)
    return V + 0.5 * (a.beta + 1.0) * curv - a.v_coeff * sq


@dataclass(frozen=True)
class PotentialModel:
    realization: AlgebraRealization
    ambiguity: AmbiguityParams
    grid: Grid
    mu: float
    layers: dict

    def __getitem__(self, name) -> GridFunction:
        return self.layers[name]


def build_model(r: AlgebraRealization, grid, ambiguity: AmbiguityParams | None = None,
                mu: float | None = None) -> PotentialModel:
    """Assemble V_mu, V_k, V_eff and V on ``grid``; ``mu`` defaults to k."""
    g = Grid.of(grid)
    a = ambiguity or AmbiguityParams()
    mu = r.k if mu is None else float(mu)
    x = g.x
    mk = lambda v: GridFunction(g.x0, g.h, v)  # noqa: E731
    layers = {
        "V_mu": mk(potential_vmu(r, mu, x)),
        "V_k": mk(potential_vk(r, x)),
        "V_eff": mk(potential_veff(r, mu, x)),
        "V": mk(potential_v(r, a, mu, x)),
    }
    return PotentialModel(r, a, g, mu, layers)


def class_domain(r: AlgebraRealization, L: float, g_wall: float = G_WALL) -> tuple[float, float]:
    """Truncated x interval on which bound states of V_k are resolved.

    L is the extent (in x) measured from the centre of the potential on each
    open side.  NegOmega is centred on u = c.  PosOmega starts at the cut
    u = c + eps_sing and extends L beyond x(c).  ZeroOmega is centred on the
    potential minimum; on the confining side it stops where |G| reaches
    ``g_wall`` (there chi_0 ~ exp(-|G|) is negligible).
    """
    if not L > 0:
        raise ValueError(f"domain extent L must be positive, got {L}")
    mass = r.mass
    lo_m, hi_m = mass.domain
    if r.cls is RealizationClass.NEG_OMEGA:
        xc = inverse_coordinate(mass, r.c)
        left, right = xc - L, xc + L
    elif r.cls is RealizationClass.POS_OMEGA:
        left = inverse_coordinate(mass, r.c + r.eps_sing)
        right = inverse_coordinate(mass, r.c) + L
    else:
        s, b = r.sign, abs(r.b)
        # V_k = b^2 e^{-2su} - 2skb e^{-su} is minimal at e^{-su} = k/b
        u_min = s * np.log(b / r.k)
        u_wall = s * np.log(b / g_wall)
        x_min = inverse_coordinate(mass, u_min)
        x_wall = inverse_coordinate(mass, u_wall)
        if s > 0:
            left, right = max(x_wall, x_min - L), x_min + L
        else:
            left, right = x_min - L, min(x_wall, x_min + L)
    return max(left, lo_m), min(right, hi_m)


def class_grid(r: AlgebraRealization, L: float, n: int) -> Grid:
    left, right = class_domain(r, L)
    return Grid.spanning(left, right, n)
