"""Scenario execution and artifact serialization."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import (
    AmbiguityParams,
    away_from_wall,
    build_model,
    check_constraints,
    class_grid,
    fg_at,
    potential_closed_form,
    potential_v,
    potential_veff,
    potential_vk,
    veff_from_v,
)
from .errors import PDEMError
from .intertwining import (
    Branch,
    annihilation_defect,
    build_intertwiner,
    factorized_veff,
    partner_levels,
    riccati_residual,
    verify_intertwining,
)
from .mass_profile import GridFunction, coordinate_map, mass_at
from .scenario import Scenario
from .spectral import hamiltonian, lowest_eigenpairs, verify_spectrum
from .wavefunctions import (
    MAX_CLOSED_FORM,
    casimir_residual,
    chain,
    chi0,
    count_nodes,
    inner,
    ladder_apply,
    raised_chi0,
)

log = logging.getLogger(__name__)

REPORT_SCHEMA = "pdem-report"
REPORT_VERSION = 1
OUT_ENV = "PDEM_OUT_DIR"
# finite-difference tolerances are quoted at this step and scaled with h
REFERENCE_STEP = 1e-3
STAGES = ("constraints", "potentials", "chain", "spectrum", "ladder", "intertwine")


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    metrics: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    error: str | None = None

    def require(self, label: str, ok: bool):
        if not ok:
            self.passed = False
            self.failures.append(label)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "metrics": self.metrics,
                "failures": self.failures, "error": self.error}


@dataclass
class RunResult:
    scenario: Scenario
    checks: list
    model: object = None
    chain: object = None
    grid: object = None
    numeric_psi: list | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> str | None:
        for c in self.checks:
            if not c.passed:
                return c.name
        return None


def _ambiguity_samples(seed: int, count: int = 5):
    rng = np.random.default_rng(seed)
    return [AmbiguityParams(float(a), float(b)) for a, b in rng.uniform(-2.0, 2.0, size=(count, 2))]


def _rel_max(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def fd_tolerance(tol: float, h: float, order: int = 2) -> float:
    """Tolerance for an O(h**order) residual quoted at REFERENCE_STEP, applied at step h."""
    return tol * max(1.0, (h / REFERENCE_STEP) ** order)


def _order(coarse: float, fine: float):
    """Observed order from residuals at h and h/2; None when at rounding level."""
    if min(coarse, fine) < 1e-11:
        return None
    return float(np.log2(coarse / fine))


def _gaussian(x, center, width):
    return np.exp(-0.5 * ((x - center) / width) ** 2)


def _check_constraints(s: Scenario, grid, res: CheckResult):
    r, tol = s.realization, s.tolerances
    r1, r2, r3 = check_constraints(r, grid, wall_margin=s.wall_margin)
    r1b, r2b, _ = check_constraints(r, grid.refined(), wall_margin=s.wall_margin)
    # r2 is linear in G, which reaches O(b) or the Morse wall height; F is O(1)
    _, G = fg_at(r, grid.x)
    g_scale = max(1.0, float(np.max(np.abs(G[away_from_wall(r, grid.x, s.wall_margin)]))))
    res.metrics.update(r1=r1, r2=r2, r3=r3, r1_refined=r1b, r2_refined=r2b,
                       r2_relative=r2 / g_scale,
                       order_r1=_order(r1, r1b), order_r2=_order(r2, r2b))
    fd = fd_tolerance(tol["constraint_fd"], grid.h)
    res.metrics["tolerance_fd"] = fd
    res.require("r1", r1 <= fd)
    res.require("r2", r2 / g_scale <= fd)
    res.require("r3", r3 <= tol["constraint_algebraic"])


def _check_potentials(s: Scenario, grid, res: CheckResult):
    r, tol = s.realization, s.tolerances
    x = grid.x
    model = build_model(r, grid, s.ambiguity)
    vmu, vk = model["V_mu"].values, model["V_k"].values
    closed = potential_closed_form(r, x)
    veff = potential_veff(r, r.k, x)
    res.metrics["vmu_vs_vk"] = _rel_max(vmu, vk)
    res.metrics["vk_vs_closed_form"] = _rel_max(closed, vk)
    amb = [_rel_max(veff_from_v(potential_v(r, a, r.k, x), a, r.mass, x), veff)
           for a in (s.ambiguity, *_ambiguity_samples(s.seed))]
    res.metrics["ambiguity_max"] = max(amb)
    res.require("vmu_vs_vk", res.metrics["vmu_vs_vk"] <= tol["potential_equality"])
    res.require("vk_vs_closed_form", res.metrics["vk_vs_closed_form"] <= tol["potential_equality"])
    res.require("ambiguity", res.metrics["ambiguity_max"] <= tol["ambiguity"])
    return model


def _check_chain(s: Scenario, grid, res: CheckResult):
    r, tol = s.realization, s.tolerances
    n_max = min(s.levels, MAX_CLOSED_FORM)
    ch = chain(r, n_max, grid)
    norms = [inner(p.values, p.values, grid.h) for p in ch.psi]
    nodes = [count_nodes(p.values) for p in ch.psi]
    ortho = max([abs(inner(ch.psi[m].values, ch.psi[n].values, grid.h))
                 for m in range(n_max + 1) for n in range(m)], default=0.0)
    res.metrics.update(n_max=n_max, energies=list(ch.energies), norms=norms,
                       node_counts=nodes, orthogonality=ortho)
    res.require("norm", max(abs(v - 1.0) for v in norms) <= tol["norm"])
    res.require("node_counts", nodes == list(range(n_max + 1)))
    res.require("orthogonality", ortho <= tol["orthogonality"])
    if "casimir" in s.checks:
        cas = [casimir_residual(r, n, ch, wall_margin=s.wall_margin) for n in range(n_max + 1)]
        res.metrics["casimir"] = cas
        res.require("casimir", max(cas) <= fd_tolerance(tol["casimir"], grid.h))
    return ch


def _check_spectrum(s: Scenario, grid, res: CheckResult):
    r, tol = s.realization, s.tolerances
    rep = verify_spectrum(r, s.ambiguity, s.levels, grid, refine=True)
    res.metrics.update(rep.to_dict())
    res.require("levels", rep.max_abs_error <= tol["spectrum_abs"])
    res.require("bound_count", rep.bound_count_numeric == rep.bound_count_analytic)
    res.require("node_counts", rep.node_counts == list(range(s.levels + 1)))
    if rep.chain_error:
        res.require("overlap", False)
    else:
        res.require("overlap", min(rep.overlaps) >= 1.0 - tol["overlap"])
    res.require("ambiguity_matrix", rep.ambiguity_entry_diff <= tol["ambiguity"])
    return rep


def _check_ladder(s: Scenario, grid, res: CheckResult):
    r, tol = s.realization, s.tolerances
    c0 = chi0(r, grid)
    x = grid.x
    keep = away_from_wall(r, x, s.wall_margin)
    lowered = ladder_apply(r, -1, r.k, c0)
    annih = float(np.max(np.abs(lowered.values[keep])) / np.max(np.abs(c0.values)))
    # the raised member behaves like z^(b+k-3/2) at a PosOmega cut; compare away from it
    raised = ladder_apply(r, +1, r.k, c0).values[keep]
    target = raised_chi0(r, grid).values[keep]
    cos = abs(inner(raised, target, grid.h)) / np.sqrt(
        inner(raised, raised, grid.h) * inner(target, target, grid.h))
    # commutator on a Gaussian centred in the grid
    center = x[len(x) // 2]
    width = 0.05 * (x[-1] - x[0])
    g = GridFunction(grid.x0, grid.h, _gaussian(x, center, width))
    mu = r.k
    pm = ladder_apply(r, +1, mu - 1, ladder_apply(r, -1, mu, g))
    mp = ladder_apply(r, -1, mu + 1, ladder_apply(r, +1, mu, g))
    inner_pts = (np.abs(x - center) < 6 * width) & keep
    comm = float(np.max(np.abs(pm.values - mp.values + 2 * mu * g.values)[inner_pts]))
    res.metrics.update(annihilation=annih, raise_cosine=float(cos), commutator_defect=comm)
    fd = fd_tolerance(tol["ladder"], grid.h)
    res.metrics["tolerance_fd"] = fd
    res.require("annihilation", annih <= fd)
    res.require("raise_overlap", cos >= 1.0 - tol["overlap"])
    res.require("commutator_defect", comm <= fd)


def _check_intertwine(s: Scenario, grid, res: CheckResult, rep):
    r, tol = s.realization, s.tolerances
    for branch in Branch:
        sol = build_intertwiner(r, branch, grid)
        ric = riccati_residual(sol, r, grid, scaled=True)
        cons = _rel_max(factorized_veff(sol), sol.V_eff.values)
        res.metrics[f"riccati_{branch.value}"] = ric
        res.metrics[f"factorized_veff_{branch.value}"] = cons
        res.require(f"riccati_{branch.value}", ric <= tol["riccati"])
        res.require(f"factorized_veff_{branch.value}", cons <= tol["potential_equality"])
    plus = build_intertwiner(r, Branch.PLUS, grid)
    res.metrics["lambda_plus"] = plus.lam
    res.metrics["lambda_plus_is_E0"] = plus.lam == r.energy(0)
    res.require("lambda_plus_is_E0", plus.lam == r.energy(0))
    # the operator identity involves only smooth data away from the wall
    defect = verify_intertwining(plus, r, grid, n_test=s.n_test, seed=s.seed)
    res.metrics["operator_defect"] = defect
    res.require("operator_defect", defect <= fd_tolerance(tol["intertwine_defect"], grid.h, order=1))
    try:
        psi0 = chain(r, 0, grid).psi[0]
        res.metrics["eta_psi0"] = annihilation_defect(plus, psi0)
    except PDEMError as exc:
        res.metrics["eta_psi0"] = None
        res.metrics["eta_psi0_error"] = str(exc)
    if s.levels >= 1:
        count = s.levels
        partner = partner_levels(r, Branch.PLUS, grid, count)
        target = list(rep.numeric_levels[1:]) if rep is not None else [r.energy(n) for n in range(1, count + 1)]
        diff = max(abs(a - b) for a, b in zip(partner, target))
        res.metrics.update(partner_levels=partner, partner_target=target, partner_diff=diff)
        res.require("partner_spectrum", diff <= tol["partner_abs"])


def run_checks(s: Scenario) -> RunResult:
    """Execute the scenario's checks in fixed stage order; never raises on check failure."""
    grid = class_grid(s.realization, s.L, s.n_points)
    out = RunResult(s, [], grid=grid)
    rep = None
    for stage in STAGES:
        if stage in ("constraints", "spectrum", "ladder", "intertwine") and stage not in s.checks:
            continue
        res = CheckResult(stage)
        try:
            if stage == "constraints":
                _check_constraints(s, grid, res)
            elif stage == "potentials":
                out.model = _check_potentials(s, grid, res)
            elif stage == "chain":
                out.chain = _check_chain(s, grid, res)
            elif stage == "spectrum":
                rep = _check_spectrum(s, grid, res)
            elif stage == "ladder":
                _check_ladder(s, grid, res)
            else:
                _check_intertwine(s, grid, res, rep)
        except PDEMError as exc:
            res.passed = False
            res.error = f"{type(exc).__name__}: {exc}"
        log.info("%s: %s", stage, "pass" if res.passed else "FAIL")
        out.checks.append(res)
    if out.chain is None:
        pairs = lowest_eigenpairs(hamiltonian(s.realization, grid), s.levels + 1)
        out.numeric_psi = [p for _, p in pairs]
    return out


def fmt(v) -> str:
    """Shortest round-trip decimal; integral values without a trailing '.0'."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def grid_table(result: RunResult) -> str:
    r = result.scenario.realization
    grid = result.grid
    x = grid.x
    M = mass_at(r.mass, x)[0]
    u = coordinate_map(r.mass, x)
    F, G = fg_at(r, x)
    if result.model is not None:
        vk, veff = result.model["V_k"].values, result.model["V_eff"].values
    else:
        vk, veff = potential_vk(r, x), potential_veff(r, r.k, x)
    psis = [p.values for p in result.chain.psi] if result.chain is not None else [
        p.values for p in result.numeric_psi]
    cols = [x, M, u, F, G, vk, veff, *psis]
    header = ["x", "M", "u", "F", "G", "V_k", "V_eff"] + [f"psi_{n}" for n in range(len(psis))]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_grid_table(result: RunResult, path, overwrite: bool = False):
    _write(path, grid_table(result), overwrite)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def report_dict(result: RunResult) -> dict:
    s = result.scenario
    src = {sec: {k: (list(v) if isinstance(v, tuple) else v) for k, v in keys.items()}
           for sec, keys in s.source.items() if sec != "output"}
    return _jsonable({
        "schema": REPORT_SCHEMA,
        "version": REPORT_VERSION,
        "package_version": __version__,
        "scenario": src,
        "grid": {"x0": result.grid.x0, "h": result.grid.h, "n": result.grid.n},
        "passed": result.passed,
        "first_failure": result.first_failure,
        "checks": {c.name: c.to_dict() for c in result.checks},
    })


def report_json(result: RunResult) -> str:
    return json.dumps(report_dict(result), indent=2, sort_keys=True) + "\n"


def summary_text(result: RunResult) -> str:
    s = result.scenario
    r = s.realization
    lines = [
        f"scenario: {s.name}",
        f"class {r.cls.value}, k = {fmt(r.k)}, b = {fmt(r.b)}, c = {fmt(r.c)}, "
        f"mass = {r.mass.kind.value}" + (f" (q = {fmt(r.mass.q)})" if r.mass.kind.value == "rational" else ""),
        f"grid: x0 = {fmt(result.grid.x0)}, h = {result.grid.h:.6g}, n = {result.grid.n}",
        f"analytic levels: {', '.join(fmt(r.energy(n)) for n in range(s.levels + 1))}",
    ]
    for c in result.checks:
        line = f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}"
        if c.failures:
            line += f" (failed: {', '.join(c.failures)})"
        if c.error:
            line += f" error: {c.error}"
        lines.append(line)
        if c.name == "spectrum" and "numeric_levels" in c.metrics:
            lines.append("         numeric levels: " + ", ".join(f"{v:.10f}" for v in c.metrics["numeric_levels"]))
    if result.passed:
        lines.append("result: all checks passed")
    else:
        lines.append(f"result: FAILED, first failing check: {result.first_failure}")
    return "\n".join(lines) + "\n"


def _write(path, text: str, overwrite: bool):
    path = Path(path)
    mode = "w" if overwrite else "x"
    try:
        with open(path, mode, newline="\n") as fh:
            fh.write(text)
    except FileExistsError:
        raise FileExistsError(f"{path} exists; pass --overwrite to replace it") from None


def output_dir(s: Scenario, override=None) -> Path:
    base = override or s.out_dir or os.environ.get(OUT_ENV) or "pdem_out"
    return Path(base) / s.name


def run_scenario(s: Scenario, out=None, overwrite: bool = False):
    """Run all checks and write the requested artifacts. Returns (RunResult, written paths)."""
    result = run_checks(s)
    d = output_dir(s, out)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    writers = {
        "table": ("grid.csv", grid_table),
        "report": ("report.json", report_json),
        "summary": ("summary.txt", summary_text),
    }
    for fmt_name in s.formats:
        fname, render = writers[fmt_name]
        path = d / fname
        _write(path, render(result), overwrite)
        written.append(path)
    return result, written
