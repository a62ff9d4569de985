"""Finite-difference eigensolver for H = -d/dx (1/M) d/dx + V_eff.

The kinetic term uses the flux-conservative three-point stencil with the
mass taken at half points,

    (H psi)_i = -[(psi_{i+1} - psi_i)/M_{i+1/2} - (psi_i - psi_{i-1})/M_{i-1/2}] / h^2
                + V_i psi_i,

with Dirichlet conditions at both ends of the grid.  The resulting matrix is
symmetric tridiagonal with strictly negative off-diagonal entries.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .algebra import (
    AlgebraRealization,
    AmbiguityParams,
    potential_v,
    potential_veff,
    veff_from_v,
)
from .errors import ConvergenceFailure, NonNormalizable, NonPositiveMass, TooManyStates
from .mass_profile import Grid, GridFunction, MassProfile, mass_at
from .wavefunctions import chain, count_nodes, fix_sign, inner, l2_norm

OVERLAP_MAX_N = 2
# bisect to the floating-point limit rather than the default eps*||H||
BISECTION_ABSTOL = np.finfo(float).tiny


@dataclass(frozen=True)
class DiscretizedHamiltonian:
    x0: float
    h: float
    n: int
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, v):
        """H v for a vector on the interior nodes."""
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def discretize(veff: GridFunction, mass: MassProfile) -> DiscretizedHamiltonian:
    """Build the Dirichlet-reduced tridiagonal matrix on the interior nodes of ``veff``'s grid."""
    h, x = veff.h, veff.x
    try:
        Mh = mass_at(mass, x[:-1] + 0.5 * h)[0]
    except NonPositiveMass as exc:
        raise NonPositiveMass(f"half-point mass: {exc}") from exc
    inv = 1.0 / (h * h * Mh)  # inv[j] couples nodes j and j+1
    diag = inv[:-1] + inv[1:] + veff.values[1:-1]
    off = -inv[1:-1]
    diag.flags.writeable = False
    off.flags.writeable = False
    return DiscretizedHamiltonian(veff.x0, h, veff.n, diag, off)


def lowest_eigenpairs(Hd: DiscretizedHamiltonian, count: int):
    """The ``count`` lowest eigenpairs, ascending.

    Eigenvectors are padded with the Dirichlet zeros, L2-normalized with
    Simpson's rule and sign-fixed like the closed-form states.
    """
    if not 1 <= count <= Hd.size:
        raise ValueError(f"count must be in [1, {Hd.size}], got {count}")
    try:
        w, vecs = eigh_tridiagonal(Hd.diag, Hd.offdiag, select="i",
                                   select_range=(0, count - 1), lapack_driver="stebz",
                                   tol=BISECTION_ABSTOL)
    except LinAlgError as exc:
        idx = _failed_index(str(exc))
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}", index=idx) from exc
    pairs = []
    for j in range(count):
        full = np.zeros(Hd.n)
        full[1:-1] = vecs[:, j]
        full = fix_sign(full / l2_norm(full, Hd.h))
        pairs.append((float(w[j]), GridFunction(Hd.x0, Hd.h, full)))
    return pairs


def _failed_index(msg):
    digits = [int(t) for t in msg.replace(",", " ").split() if t.isdigit()]
    return digits[0] if digits else None


def count_below(Hd: DiscretizedHamiltonian, threshold: float = 0.0) -> int:
    """Number of eigenvalues strictly below ``threshold``, by Sturm sequence count."""
    # LDL^T pivots of H - threshold; negative pivots count eigenvalues below
    d = Hd.diag - threshold
    e2 = Hd.offdiag ** 2
    tiny = np.finfo(float).tiny
    neg = 0
    q = d[0]
    neg += q < 0
    for i in range(1, d.size):
        if q == 0:
            q = tiny
        q = d[i] - e2[i - 1] / q
        neg += q < 0
    return int(neg)


def hamiltonian(r: AlgebraRealization, grid, mu: float | None = None,
                ambiguity: AmbiguityParams | None = None) -> DiscretizedHamiltonian:
    """Discretized H for the realization; V_eff directly, or via the bare V when ``ambiguity`` is given."""
    g = Grid.of(grid)
    mu = r.k if mu is None else mu
    x = g.x
    if ambiguity is None:
        v = potential_veff(r, mu, x)
    else:
        v = veff_from_v(potential_v(r, ambiguity, mu, x), ambiguity, r.mass, x)
    return discretize(GridFunction(g.x0, g.h, v), r.mass)


def richardson(coarse, fine, order: int = 2):
    """Extrapolate results at h and h/2 assuming error ~ h**order."""
    coarse, fine = np.asarray(coarse, float), np.asarray(fine, float)
    f = 2.0 ** order
    return (f * fine - coarse) / (f - 1.0)


def convergence_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


@dataclass
class SpectrumReport:
    analytic_levels: list
    numeric_levels: list
    levels_h: list
    levels_h2: list | None
    abs_errors: list
    rel_errors: list
    grid: dict
    bound_count_analytic: int
    bound_count_numeric: int
    overlaps: list = field(default_factory=list)
    node_counts: list = field(default_factory=list)
    ambiguity_entry_diff: float | None = None
    chain_error: str | None = None

    @property
    def max_abs_error(self) -> float:
        return max(self.abs_errors)

    def to_dict(self) -> dict:
        return asdict(self)


def verify_spectrum(r: AlgebraRealization, a: AmbiguityParams | None, n_max: int, grid,
                    refine: bool = True) -> SpectrumReport:
    """Compare the numeric spectrum of H with E_n = -(k - n - 1/2)^2 for n <= n_max.

    Solves at h and, with ``refine``, at h/2 followed by Richardson
    extrapolation.  Numeric eigenvectors on the coarse grid are compared
    with the closed-form psi_n where those exist.
    """
    if not n_max < r.k - 0.5:
        raise TooManyStates(f"n_max = {n_max} must be < k - 1/2 = {r.k - 0.5}")
    g = Grid.of(grid)
    count = n_max + 1
    analytic = [r.energy(n) for n in range(count)]

    H = hamiltonian(r, g)
    pairs = lowest_eigenpairs(H, count)
    levels_h = [e for e, _ in pairs]
    levels_h2 = None
    numeric = levels_h
    if refine:
        levels_h2 = [e for e, _ in lowest_eigenpairs(hamiltonian(r, g.refined()), count)]
        numeric = [float(v) for v in richardson(levels_h, levels_h2)]
    abs_err = [abs(e - ea) for e, ea in zip(numeric, analytic)]
    rel_err = [d / abs(ea) for d, ea in zip(abs_err, analytic)]

    amb_diff = None
    if a is not None:
        Ha = hamiltonian(r, g, ambiguity=a)
        # entries are O(1/h^2); compare relative to max(1, |entry|)
        amb_diff = float(max(np.max(np.abs(Ha.diag - H.diag) / np.maximum(1.0, np.abs(H.diag))),
                             np.max(np.abs(Ha.offdiag - H.offdiag)))) if H.offdiag.size else 0.0

    overlaps, chain_error = [], None
    m = min(n_max, OVERLAP_MAX_N)
    try:
        ch = chain(r, m, g)
        for n in range(m + 1):
            overlaps.append(abs(inner(ch.psi[n].values, pairs[n][1].values, g.h)))
    except NonNormalizable as exc:
        chain_error = str(exc)

    return SpectrumReport(
        analytic_levels=analytic,
        numeric_levels=numeric,
        levels_h=levels_h,
        levels_h2=levels_h2,
        abs_errors=abs_err,
        rel_errors=rel_err,
        grid={"x0": g.x0, "h": g.h, "n": g.n, "refined": bool(refine)},
        bound_count_analytic=r.bound_count,
        bound_count_numeric=count_below(H, 0.0),
        overlaps=overlaps,
        node_counts=[count_nodes(v.values) for _, v in pairs],
        ambiguity_entry_diff=amb_diff,
        chain_error=chain_error,
    )
