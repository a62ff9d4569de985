"""Scenario files: INI-style sections of ``key = value`` lines.

Every key is addressed as ``section.key`` in error messages.  Unknown
sections or keys are rejected.  See README for the full grammar and the
default tolerances.
"""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from .algebra import AlgebraRealization, AmbiguityParams, RealizationClass
from .errors import ConfigError
from .mass_profile import MassKind, MassProfile

CHECKS = ("constraints", "casimir", "spectrum", "ladder", "intertwine")

# Finite-difference tolerances (constraint_fd, casimir, ladder,
# intertwine_defect) are quoted at h = 1e-3 and scaled by (h/1e-3)^2, or
# (h/1e-3) for intertwine_defect, on coarser grids.
DEFAULT_TOLERANCES = {
    "constraint_fd": 1e-5,          # r1, r2
    "constraint_algebraic": 1e-12,  # r3
    "potential_equality": 1e-12,    # relative to max(1, |V_k|)
    "ambiguity": 1e-12,             # relative to max(1, |V_eff|)
    "casimir": 1e-4,
    "norm": 1e-8,
    "orthogonality": 1e-6,
    "spectrum_abs": 1e-4,
    "overlap": 1e-6,                # required overlap >= 1 - overlap
    "ladder": 1e-4,                 # J- annihilation and commutator defects
    "riccati": 1e-10,               # relative to max(1, |V_k|)
    "intertwine_defect": 1e-3,
    "partner_abs": 1e-4,
}

# section -> key -> (parser, default); default None means required
_SCHEMA = {
    "scenario": {"name": (str, None), "levels": (int, None)},
    "realization": {
        "class": (str, None), "k": (float, None), "b": (float, 1.0), "c": (float, 0.0),
        "sign": (int, 1), "eps_sing": (float, 1e-3), "unchecked": ("bool", False),
    },
    "mass": {"kind": (str, "constant"), "q": (float, 0.0)},
    "ambiguity": {"alpha": (float, 0.0), "beta": (float, -1.0)},
    "grid": {"L": (float, 20.0), "n_points": (int, 4001)},
    "checks": {
        "run": ("list", ",".join(CHECKS)), "seed": (int, 20240101), "n_test": (int, 10),
        "wall_margin": (float, 1.0),
    },
    "tolerances": {key: (float, val) for key, val in DEFAULT_TOLERANCES.items()},
    "output": {"dir": (str, ""), "formats": ("list", "table,report,summary")},
}

FORMATS = ("table", "report", "summary")


@dataclass(frozen=True)
class Scenario:
    name: str
    levels: int
    realization: AlgebraRealization
    ambiguity: AmbiguityParams
    L: float
    n_points: int
    checks: tuple
    seed: int
    n_test: int
    wall_margin: float
    tolerances: dict
    out_dir: str
    formats: tuple
    source: dict = field(default_factory=dict, compare=False)

    def scaled(self, factor: float) -> "Scenario":
        """Same scenario with (n_points - 1) multiplied by ``factor``, kept odd."""
        n = int(round((self.n_points - 1) * factor)) + 1
        if n % 2 == 0:
            n += 1
        if n < 201:
            raise ConfigError(f"grid scale {factor} leaves only {n} points", "grid.n_points")
        src = {s: dict(v) for s, v in self.source.items()}
        src["grid"]["n_points"] = n
        return replace(self, n_points=n, source=src)


def _convert(kind, raw: str, key: str):
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "list":
            return tuple(t.strip() for t in raw.split(",") if t.strip())
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        return kind(raw.strip())
    except ValueError:
        name = kind if isinstance(kind, str) else kind.__name__
        raise ConfigError(f"cannot parse {raw!r} as {name}", key) from None


def parse_text(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError("unknown section", section)
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
            kind = _SCHEMA[section][key][0]
            values.setdefault(section, {})[key] = _convert(kind, raw, f"{section}.{key}")
    for section, keys in _SCHEMA.items():
        for key, (kind, default) in keys.items():
            if key in values.get(section, {}):
                continue
            if default is None:
                raise ConfigError("required key missing", f"{section}.{key}")
            values.setdefault(section, {})[key] = (
                _convert(kind, default, f"{section}.{key}") if kind == "list" else default)
    return values


def build(values: dict) -> Scenario:
    """Validate parsed values and construct the Scenario (no computation)."""
    rz, ms, gr, ck = values["realization"], values["mass"], values["grid"], values["checks"]
    try:
        cls = RealizationClass(rz["class"])
    except ValueError:
        opts = ", ".join(c.value for c in RealizationClass)
        raise ConfigError(f"must be one of {opts}", "realization.class") from None
    try:
        kind = MassKind(ms["kind"].lower())
    except ValueError:
        raise ConfigError("must be 'constant' or 'rational'", "mass.kind") from None
    if kind is MassKind.CUSTOM:
        raise ConfigError("sampled mass profiles are available through the library only", "mass.kind")
    if ms["q"] < 0:
        raise ConfigError("must be >= 0", "mass.q")
    if kind is MassKind.CONSTANT and ms["q"] != 0:
        raise ConfigError("q is only meaningful for kind = rational", "mass.q")
    k = rz["k"]
    if not k > 0.5:
        raise ConfigError("must exceed 1/2", "realization.k")
    levels = values["scenario"]["levels"]
    if levels < 0 or not levels < k - 0.5:
        raise ConfigError(f"levels = {levels} must satisfy 0 <= levels < k - 1/2 = {k - 0.5}",
                          "scenario.levels")
    if rz["b"] == 0:
        raise ConfigError("must be nonzero", "realization.b")
    if rz["b"] < 0 and not rz["unchecked"]:
        raise ConfigError("b < 0 requires realization.unchecked = true", "realization.b")
    if rz["sign"] not in (1, -1):
        raise ConfigError("must be +1 or -1", "realization.sign")
    if not rz["eps_sing"] > 0:
        raise ConfigError("must be positive", "realization.eps_sing")
    if not gr["L"] > 0:
        raise ConfigError("must be positive", "grid.L")
    n = gr["n_points"]
    if n < 201 or n % 2 == 0:
        raise ConfigError(f"must be odd and >= 201, got {n}", "grid.n_points")
    for name in ck["run"]:
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}", "checks.run")
    if ck["n_test"] < 1:
        raise ConfigError("must be >= 1", "checks.n_test")
    for name in values["output"]["formats"]:
        if name not in FORMATS:
            raise ConfigError(f"unknown format {name!r}", "output.formats")
    for key, val in values["tolerances"].items():
        if not val > 0:
            raise ConfigError("must be positive", f"tolerances.{key}")

    mass = MassProfile.constant() if kind is MassKind.CONSTANT else MassProfile.rational(ms["q"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        realization = AlgebraRealization(cls, k, rz["b"], rz["c"], rz["sign"], mass,
                                         rz["eps_sing"], rz["unchecked"])
    return Scenario(
        name=values["scenario"]["name"],
        levels=levels,
        realization=realization,
        ambiguity=AmbiguityParams(values["ambiguity"]["alpha"], values["ambiguity"]["beta"]),
        L=gr["L"],
        n_points=n,
        checks=tuple(c for c in CHECKS if c in ck["run"]),
        seed=ck["seed"],
        n_test=ck["n_test"],
        wall_margin=ck["wall_margin"],
        tolerances=dict(values["tolerances"]),
        out_dir=values["output"]["dir"],
        formats=tuple(values["output"]["formats"]),
        source=values,
    )


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from None
    return build(parse_text(text))


def loads(text: str) -> Scenario:
    return build(parse_text(text))
