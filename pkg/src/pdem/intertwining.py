"""First-order intertwiner eta = A d/dx + B with eta H = H_1 eta.

With A = M^(-1/2) and B = -M'/(4 M^(3/2)) + f, the effective potential of H
is V_eff = lambda + B^2 - (A B)' provided

    f^2 - f'/sqrt(M) = V_k - lambda.

The ansatz f = zeta F + sigma G gives two branches,

    plus:  f = (k - 1/2) F - G,   lambda = -(k - 1/2)^2
    minus: f = -(k + 1/2) F + G,  lambda = -(k + 1/2)^2

and the partner potential is V_1,eff = V_eff + 2 A B' - A A''.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraRealization, fg_at, potential_veff, potential_vk
from .mass_profile import Grid, GridFunction, mass_at, sqrt_mass
from .spectral import discretize, lowest_eigenpairs, richardson

GAUSS_CUTOFF = 1e-16


class Branch(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def s(self) -> int:
        return 1 if self is Branch.PLUS else -1


@dataclass(frozen=True)
class IntertwinerSolution:
    branch: Branch
    grid: Grid
    lam: float
    zeta: float
    sigma: float
    A: GridFunction
    Ap: GridFunction
    App: GridFunction
    B: GridFunction
    Bp: GridFunction
    f: GridFunction
    fp: GridFunction
    V_eff: GridFunction
    V1_eff: GridFunction


def branch_lambda(k: float, branch: Branch) -> float:
    return -((k - Branch(branch).s * 0.5) ** 2)


def build_intertwiner(r: AlgebraRealization, branch, grid) -> IntertwinerSolution:
    branch = Branch(branch)
    g = Grid.of(grid)
    x = g.x
    s = branch.s
    zeta, sigma = s * r.k - 0.5, -float(s)
    F, G = fg_at(r, x)
    root = sqrt_mass(r.mass, x)
    M, Mp, Mpp = mass_at(r.mass, x)

    f = zeta * F + sigma * G
    fp = root * (zeta * (1.0 - F * F) - sigma * F * G)
    A = 1.0 / root
    Ap = -0.5 * Mp / (M * root)
    App = -0.5 * Mpp / (M * root) + 0.75 * Mp * Mp / (M * M * root)
    B = -Mp / (4.0 * M * root) + f
    Bp = -Mpp / (4.0 * M * root) + 0.375 * Mp * Mp / (M * M * root) + fp

    veff = potential_veff(r, r.k, x)
    v1 = veff + 2.0 * A * Bp - A * App
    mk = lambda v: GridFunction(g.x0, g.h, v)  # noqa: E731
    return IntertwinerSolution(
        branch=branch, grid=g, lam=branch_lambda(r.k, branch), zeta=zeta, sigma=sigma,
        A=mk(A), Ap=mk(Ap), App=mk(App), B=mk(B), Bp=mk(Bp), f=mk(f), fp=mk(fp),
        V_eff=mk(veff), V1_eff=mk(v1),
    )


def factorized_veff(sol: IntertwinerSolution) -> np.ndarray:
    """lambda + B^2 - (A B)', the effective potential implied by the factorization."""
    A, B = sol.A.values, sol.B.values
    return sol.lam + B * B - sol.Ap.values * B - A * sol.Bp.values


def riccati_residual(sol: IntertwinerSolution, r: AlgebraRealization, grid=None,
                     scaled: bool = False) -> float:
    """max over the interior of |f^2 - f'/sqrt(M) - (V_k - lambda)|.

    With ``scaled`` each point is divided by max(1, |V_k|), which keeps the
    measure at rounding level next to the PosOmega wall.
    """
    g = Grid.of(grid if grid is not None else sol.grid)
    x = g.x[1:-1]
    sl = slice(1, -1)
    f, fp = sol.f.values[sl], sol.fp.values[sl]
    Vk = potential_vk(r, x)
    res = np.abs(f * f - fp / sqrt_mass(r.mass, x) - (Vk - sol.lam))
    if scaled:
        res = res / np.maximum(1.0, np.abs(Vk))
    return float(np.max(res))


def apply_eta(sol: IntertwinerSolution, v) -> np.ndarray:
    """eta v with a centred first derivative; v vanishes at both ends."""
    v = np.asarray(v, dtype=float)
    d = np.zeros_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * sol.grid.h)
    out = sol.A.values * d + sol.B.values * v
    out[0] = out[-1] = 0.0
    return out


def _apply_h(Hd, v):
    out = np.zeros_like(v)
    out[1:-1] = Hd.matvec(v[1:-1])
    return out


def gaussian_bumps(grid, n_test: int, seed: int, width=(0.5, 1.5)):
    """Compactly supported Gaussians (cut at GAUSS_CUTOFF) placed clear of both ends."""
    g = Grid.of(grid)
    x = g.x
    rng = np.random.default_rng(seed)
    reach = np.sqrt(2.0 * np.log(1.0 / GAUSS_CUTOFF))
    bumps = []
    for _ in range(n_test):
        w = rng.uniform(*width)
        w = min(w, (x[-1] - x[0]) / (4.0 * reach))
        lo, hi = x[0] + reach * w + 4 * g.h, x[-1] - reach * w - 4 * g.h
        c = rng.uniform(lo, hi)
        b = np.exp(-0.5 * ((x - c) / w) ** 2)
        b[b < GAUSS_CUTOFF] = 0.0
        bumps.append(b)
    return bumps


def verify_intertwining(sol: IntertwinerSolution, r: AlgebraRealization, grid=None,
                        n_test: int = 10, seed: int = 0) -> float:
    """max over test functions of sup|eta H g - H_1 eta g| / sup|g|."""
    g = Grid.of(grid if grid is not None else sol.grid)
    H = discretize(sol.V_eff, r.mass)
    H1 = discretize(sol.V1_eff, r.mass)
    worst = 0.0
    for b in gaussian_bumps(g, n_test, seed):
        lhs = apply_eta(sol, _apply_h(H, b))
        rhs = _apply_h(H1, apply_eta(sol, b))
        defect = np.max(np.abs(lhs[2:-2] - rhs[2:-2])) / np.max(np.abs(b))
        worst = max(worst, float(defect))
    return worst


def annihilation_defect(sol: IntertwinerSolution, psi0: GridFunction) -> float:
    """sup|eta psi_0| / sup|psi_0| over interior nodes."""
    out = apply_eta(sol, psi0.values)
    return float(np.max(np.abs(out[1:-1])) / np.max(np.abs(psi0.values)))


def partner_levels(r: AlgebraRealization, branch, grid, count: int, refine: bool = True):
    """Lowest ``count`` eigenvalues of H_1 (Richardson-extrapolated when ``refine``)."""
    g = Grid.of(grid)

    def solve(gg):
        sol = build_intertwiner(r, branch, gg)
        return [e for e, _ in lowest_eigenpairs(discretize(sol.V1_eff, r.mass), count)]

    coarse = solve(g)
    if not refine:
        return coarse
    return [float(v) for v in richardson(coarse, solve(g.refined()))]
