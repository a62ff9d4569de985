"""Closed-form eigenfunction chain, reduced ladder operators and chi -> psi.

For the potential V_k the first three bound states are

    chi_0 ~ |G|^(k-1/2) exp(I)
    chi_1 ~ [G - (k-1) F] |G|^(k-3/2) exp(I)
    chi_2 ~ {2 [G - (k-1) F][G - (k-2) F] - (k-2)} |G|^(k-5/2) exp(I)

with I(x) = int sqrt(M) G dx, energies E_n = -(k - n - 1/2)^2, and the
position-dependent-mass wavefunctions psi_n = M^(1/4) chi_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .algebra import AlgebraRealization, RealizationClass, away_from_wall, fg_at, potential_vk
from .errors import NonNormalizable, TooManyStates
from .mass_profile import Grid, GridFunction, coordinate_map, sqrt_mass

MAX_CLOSED_FORM = 2
TAIL_FRACTION = 0.10
SIGN_THRESHOLD = 1e-3


def l2_norm(values, h: float) -> float:
    return float(np.sqrt(simpson(np.asarray(values) ** 2, dx=h)))


def inner(a, b, h: float) -> float:
    return float(simpson(np.asarray(a) * np.asarray(b), dx=h))


def fix_sign(values):
    """Flip ``values`` so it is positive at its leftmost local extremum.

    Extrema below SIGN_THRESHOLD * max|values| are ignored so that rounding
    noise in the tails cannot decide the sign.
    """
    v = np.asarray(values, dtype=float)
    a = np.abs(v)
    floor = SIGN_THRESHOLD * a.max()
    peaks = np.flatnonzero((a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:]) & (a[1:-1] > floor)) + 1
    if peaks.size:
        i = peaks[0]
    else:
        i = int(np.argmax(a))
    return -v if v[i] < 0 else v


def count_nodes(values, rel_tol: float = 1e-8) -> int:
    """Sign changes among samples whose magnitude exceeds rel_tol * max."""
    v = np.asarray(values, dtype=float)
    v = v[np.abs(v) > rel_tol * np.abs(v).max()]
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def tail_grows(values, fraction: float = TAIL_FRACTION) -> str | None:
    """Name the side ('left'/'right') on which |values| does not decay outward."""
    a = np.abs(np.asarray(values, dtype=float))
    m = max(3, int(round(fraction * a.size)))
    for side, seg in (("left", a[:m][::-1]), ("right", a[-m:])):
        if seg[-1] > 0 and np.all(np.diff(seg) >= 0):
            return side
    return None


def _log_envelope(r: AlgebraRealization, g: Grid, G):
    """log(|G|^(k-1/2) exp(I)) with I by cumulative Simpson on the grid.

    PosOmega is the exception: sqrt(M) G ~ b/(u - c) at the cut, which grid
    Simpson cannot resolve, so I = b log tanh((u - c)/2) is used there.
    """
    if r.cls is RealizationClass.POS_OMEGA:
        z = coordinate_map(r.mass, g.x) - r.c
        I = r.b * np.log(np.tanh(0.5 * z))
    else:
        integrand = sqrt_mass(r.mass, g.x) * G
        I = cumulative_simpson(integrand, dx=g.h, initial=0.0)
    return (r.k - 0.5) * np.log(np.abs(G)) + I


def _scaled(logs):
    return np.exp(logs - logs.max())


def chi0(r: AlgebraRealization, grid) -> GridFunction:
    """Unnormalized chi_0 (scaled to max 1) on ``grid``."""
    g = Grid.of(grid)
    _, G = fg_at(r, g.x)
    chi = _scaled(_log_envelope(r, g, G))
    side = tail_grows(chi)
    if side:
        raise NonNormalizable(f"chi_0 does not decay toward the {side} end of the grid")
    return GridFunction(g.x0, g.h, chi)


def _closed_form_member(r: AlgebraRealization, n: int, F, G, log_env):
    k = r.k
    if n == 0:
        poly = np.ones_like(G)
    elif n == 1:
        poly = G - (k - 1) * F
    elif n == 2:
        poly = 2.0 * (G - (k - 1) * F) * (G - (k - 2) * F) - (k - 2)
    else:
        raise ValueError(f"no closed form for chain member {n}")
    logs = log_env - n * np.log(np.abs(G))
    return poly * _scaled(logs)


def raised_chi0(r: AlgebraRealization, grid) -> GridFunction:
    """mu = k + 1 member of the k tower, (G - k F) chi_0 (no k replacement)."""
    g = Grid.of(grid)
    F, G = fg_at(r, g.x)
    logs = _log_envelope(r, g, G)
    return GridFunction(g.x0, g.h, (G - r.k * F) * _scaled(logs))


@dataclass(frozen=True)
class EigenstateChain:
    realization: AlgebraRealization
    grid: Grid
    n_max: int
    chi: tuple
    psi: tuple
    energies: tuple


def chain(r: AlgebraRealization, n_max: int, grid) -> EigenstateChain:
    """Closed-form chain chi_0..chi_{n_max} with L2-normalized psi_n = M^(1/4) chi_n."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if not n_max < r.k - 0.5:
        raise TooManyStates(f"n_max = {n_max} must be < k - 1/2 = {r.k - 0.5}")
    if n_max > MAX_CLOSED_FORM:
        raise ValueError(f"closed forms exist only up to n = {MAX_CLOSED_FORM}")
    g = Grid.of(grid)
    x = g.x
    F, G = fg_at(r, x)
    log_env = _log_envelope(r, g, G)
    quarter = np.sqrt(sqrt_mass(r.mass, x))
    chis, psis = [], []
    for n in range(n_max + 1):
        chi = _closed_form_member(r, n, F, G, log_env)
        side = tail_grows(chi)
        if side:
            raise NonNormalizable(f"chi_{n} does not decay toward the {side} end of the grid")
        psi = quarter * chi
        nrm = l2_norm(psi, g.h)
        psi = fix_sign(psi / nrm)
        chi = np.sign(np.dot(psi, chi)) * chi / nrm
        chis.append(GridFunction(g.x0, g.h, chi))
        psis.append(GridFunction(g.x0, g.h, psi))
    energies = tuple(r.energy(n) for n in range(n_max + 1))
    return EigenstateChain(r, g, n_max, tuple(chis), tuple(psis), energies)


def ladder_apply(r: AlgebraRealization, direction: int, mu: float, chi: GridFunction) -> GridFunction:
    """Reduced generator J_+ (direction=+1) or J_- (direction=-1) at weight mu.

    J_{+-} chi = [+-(1/sqrt M) d/dx + F (-mu -+ 1/2) + G] chi; the result
    carries weight mu +- 1.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    x = chi.x
    F, G = fg_at(r, x)
    v = chi.values
    d = np.gradient(v, chi.h, edge_order=2) / sqrt_mass(r.mass, x)
    out = direction * d + F * (-mu - direction * 0.5) * v + G * v
    return chi.with_values(out)


def reduced_laplacian(r: AlgebraRealization, chi: GridFunction) -> np.ndarray:
    """-(1/sqrt M) d/dx (1/sqrt M) d/dx on interior nodes, sqrt(M) taken at half points."""
    x, h, v = chi.x, chi.h, chi.values
    root = sqrt_mass(r.mass, x[1:-1])
    half = sqrt_mass(r.mass, x[:-1] + 0.5 * h)
    flux = np.diff(v) / half
    return -np.diff(flux) / (h * h * root)


def casimir_residual(r: AlgebraRealization, n: int, ch: EigenstateChain,
                     wall_margin: float = 0.0) -> float:
    """max_interior |(L + V_k) chi_n - E_n chi_n| / max|chi_n|.

    L is the reduced Laplacian above, V_k the potential of the chain's own k
    and E_n = -(k - n - 1/2)^2.
    """
    chi = ch.chi[n]
    x = chi.x[1:-1]
    Vk = potential_vk(r, x)
    res = reduced_laplacian(r, chi) + (Vk - ch.energies[n]) * chi.values[1:-1]
    keep = away_from_wall(r, x, wall_margin)
    return float(np.max(np.abs(res[keep])) / np.max(np.abs(chi.values)))
