import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdem.algebra import AlgebraRealization, class_grid
from pdem.intertwining import (
    Branch,
    annihilation_defect,
    branch_lambda,
    build_intertwiner,
    factorized_veff,
    gaussian_bumps,
    partner_levels,
    riccati_residual,
    verify_intertwining,
)
from pdem.mass_profile import Grid, MassProfile
from pdem.spectral import hamiltonian, lowest_eigenpairs
from pdem.wavefunctions import chain

CONST = MassProfile.constant()
Q1 = MassProfile.rational(1.0)


def scarf(mass=CONST, k=2.0):
    return AlgebraRealization("NegOmega", k, 1.0, 0.0, mass=mass)


def all_classes():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in (CONST, Q1):
            yield AlgebraRealization("NegOmega", 2.0, 1.0, mass=m)
            yield AlgebraRealization("ZeroOmega", 1.0, 1.0, mass=m)
            yield AlgebraRealization("ZeroOmega", 2.0, 1.5, sign=-1, mass=m)
            yield AlgebraRealization("PosOmega", 2.0, 1.0, mass=m)
            yield AlgebraRealization("PosOmega", 2.0, 3.0, mass=m)


def test_superpotential_at_origin():
    g = Grid.spanning(-1.0, 1.0, 3)
    plus = build_intertwiner(scarf(), Branch.PLUS, g)
    minus = build_intertwiner(scarf(), Branch.MINUS, g)
    assert plus.f.values[1] == -1.0 and plus.lam == -2.25
    assert minus.f.values[1] == 1.0 and minus.lam == -6.25


def test_lambda_plus_is_ground_energy_bitwise():
    for k in (0.75, 1.0, 2.0, 2.5, 3.7):
        assert branch_lambda(k, Branch.PLUS) == scarf(k=k).energy(0)


@pytest.mark.parametrize("r", list(all_classes()),
                         ids=lambda r: f"{r.cls.value}-k{r.k}-b{r.b}-s{r.sign}-q{r.mass.q}")
@pytest.mark.parametrize("branch", list(Branch), ids=lambda b: b.value)
def test_riccati_identity(r, branch):
    g = class_grid(r, 12.0, 2001)
    sol = build_intertwiner(r, branch, g)
    assert riccati_residual(sol, r, scaled=True) <= 1e-10
    veff = sol.V_eff.values
    assert np.max(np.abs(factorized_veff(sol) - veff) / np.maximum(1, np.abs(veff))) <= 1e-12


def test_riccati_absolute_constant_mass():
    g = Grid.spanning(-20, 20, 4001)
    sol = build_intertwiner(scarf(), Branch.PLUS, g)
    assert riccati_residual(sol, scarf()) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(eps=st.sampled_from([1e-6, -1e-6, 3e-6]), seed=st.integers(0, 1000))
def test_riccati_detects_perturbed_superpotential(eps, seed):
    r = scarf(Q1)
    g = Grid.spanning(-10, 10, 1001)
    sol = build_intertwiner(r, Branch.PLUS, g)
    bump = gaussian_bumps(g, 1, seed)[0]
    bad = replace(sol, f=sol.f.with_values(sol.f.values + eps * (1.0 + bump)))
    assert riccati_residual(bad, r) >= 1e-7


@pytest.mark.parametrize("mass", [CONST, Q1], ids=["const", "q1"])
def test_operator_defect(mass):
    r = scarf(mass)
    defects = []
    for n in (20001, 40001):  # h = 2e-3, 1e-3
        g = Grid.spanning(-20, 20, n)
        defects.append(verify_intertwining(build_intertwiner(r, Branch.PLUS, g), r, n_test=10, seed=3))
    assert defects[1] <= 1e-3
    # at least first order: halving h at least halves the defect
    assert defects[0] / defects[1] >= 2 ** 0.9


def test_eta_annihilates_ground_state():
    r = scarf(Q1)
    vals = []
    for n in (2001, 4001):
        g = Grid.spanning(-20, 20, n)
        sol = build_intertwiner(r, Branch.PLUS, g)
        vals.append(annihilation_defect(sol, chain(r, 0, g).psi[0]))
    assert vals[0] / vals[1] >= 2 ** 0.9


@pytest.mark.parametrize("r", [scarf(), scarf(Q1), scarf(MassProfile.rational(2.0), k=3.0),
                               AlgebraRealization("PosOmega", 3.0, 4.0, mass=Q1)],
                         ids=["scarf", "scarf-q1", "scarf3-q2", "pt3-q1"])
def test_partner_spectrum_drops_ground_level(r):
    g = class_grid(r, 20.0, 4001)
    count = r.bound_count - 1
    partner = partner_levels(r, Branch.PLUS, g, count)
    h_levels = [e for e, _ in lowest_eigenpairs(hamiltonian(r, g), count + 1)]
    h_fine = [e for e, _ in lowest_eigenpairs(hamiltonian(r, g.refined()), count + 1)]
    target = [(4 * b - a) / 3 for a, b in zip(h_levels, h_fine)][1:]
    assert np.max(np.abs(np.array(partner) - target)) <= 1e-4
    assert np.max(np.abs(np.array(partner) - [r.energy(n) for n in range(1, count + 1)])) <= 1e-4


def test_gaussian_bumps_are_reproducible_and_compact():
    g = Grid.spanning(-10, 10, 2001)
    a, b = gaussian_bumps(g, 5, seed=11), gaussian_bumps(g, 5, seed=11)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)
        assert u[0] == u[-1] == 0.0 and u.max() > 0.5
