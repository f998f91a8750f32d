"""Flat dotted-key run configuration: parsing, validation, materialization.

The on-disk format is one ``key = value`` assignment per line, with
``#`` comments and blank lines allowed.  Keys are dotted paths
(``domain.n``, ``f.family``); values are JSON scalars, with bare words
falling back to strings.  Errors carry the 1-based line number they
came from.

Recognized keys::

    p                    real > 1
    domain.kind          interval | radial
    domain.n             interior node count (>= 3)
    domain.dim           spatial dimension (radial only, default 2)
    domain.radius        ball radius (radial only, default 1.0)
    f.family             a | b | c | d | e | f   (custom is API-only)
    f.params.alpha       family parameters as applicable
    f.params.beta
    f.params.q
    f.params.a_coef
    h.kind               zero | constant | nodal-file
    h.value              number (constant) or file path (nodal-file)
    lambda               scalar load parameter, or a grid:
    lambda.grid.min
    lambda.grid.max
    lambda.grid.count
    lambda.grid.spacing  linear | log
    solver.tol           fixed-point residual tolerance
    solver.max_iter      fixed-point iteration cap
    solver.damping       substitution damping in (0, 1]
    seeds                RNG seed for the randomized suites
    output               artifact directory

The threshold command reads its bracket from ``lambda.grid.min`` /
``lambda.grid.max``.  Relational checks that only individual commands
care about (grid ordering, bracket ordering, presence of a scalar
lambda) are left to those commands so they can fail as preconditions
rather than parse errors.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import Mesh, build_interval_mesh, build_radial_mesh, grid_function, zero_function
from .nonlin import FAMILY_NAMES, Nonlinearity, make_nonlinearity
from .problem import ProblemSpec


class ConfigError(ValueError):
    """Config problem with the offending 1-based line number (0 = global)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into {key: (value, line_number)}."""
    out: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError("empty key", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {out[key][1]})", lineno)
        if not val:
            raise ConfigError(f"empty value for {key!r}", lineno)
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            parsed = val  # bare word, keep as string
        out[key] = (parsed, lineno)
    return out


_PARAM_KEYS = ("alpha", "beta", "q", "a_coef")

_KNOWN_KEYS = {
    "p",
    "domain.kind",
    "domain.n",
    "domain.dim",
    "domain.radius",
    "f.family",
    "h.kind",
    "h.value",
    "lambda",
    "lambda.grid.min",
    "lambda.grid.max",
    "lambda.grid.count",
    "lambda.grid.spacing",
    "solver.tol",
    "solver.max_iter",
    "solver.damping",
    "seeds",
    "output",
} | {f"f.params.{name}" for name in _PARAM_KEYS}


@dataclass(frozen=True)
class LambdaGrid:
    """Symbolic lambda grid; ordering is validated by the commands."""

    lo: float
    hi: float
    count: int
    spacing: str  # linear | log

    def values(self) -> np.ndarray:
        if not (0.0 < self.lo < self.hi):
            raise ValueError("lambda grid needs 0 < min < max")
        if self.count < 2:
            raise ValueError("lambda grid needs count >= 2")
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass
class RunConfig:
    """Validated run parameters, still symbolic (mesh not yet built)."""

    p: float = 2.0
    domain_kind: str = "interval"
    domain_n: int = 256
    domain_dim: int = 2
    domain_radius: float = 1.0
    family: str | None = None
    params: dict = field(default_factory=dict)
    h_kind: str = "zero"
    h_value: object = None
    lam: float | None = None
    grid: LambdaGrid | None = None
    solver_tol: float = 1e-7
    solver_max_iter: int = 90
    solver_damping: float = 0.5
    seeds: int = 0
    output: str | None = None

    source: dict = field(default_factory=dict)


def _want(table, key, kind):
    if key not in table:
        return None, 0
    value, line = table[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}", line)
        return float(value), line
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}", line)
        return int(value), line
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}", line)
        return value, line
    raise AssertionError(kind)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text (no file system access)."""
    table = parse_config_text(text)
    for key, (_, line) in table.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", line)

    cfg = RunConfig()
    cfg.source = {k: v for k, (v, _) in table.items()}

    val, line = _want(table, "p", float)
    if val is not None:
        if val <= 1.0:
            raise ConfigError(f"p must be > 1, got {val}", line)
        cfg.p = val

    val, line = _want(table, "domain.kind", str)
    if val is not None:
        if val not in ("interval", "radial"):
            raise ConfigError(f"domain.kind must be 'interval' or 'radial', got {val!r}", line)
        cfg.domain_kind = val
    val, line = _want(table, "domain.n", int)
    if val is not None:
        if val < 3:
            raise ConfigError("domain.n must be at least 3", line)
        cfg.domain_n = val
    val, line = _want(table, "domain.dim", int)
    if val is not None:
        if val < 1:
            raise ConfigError("domain.dim must be a positive integer", line)
        cfg.domain_dim = val
    val, line = _want(table, "domain.radius", float)
    if val is not None:
        if val <= 0:
            raise ConfigError("domain.radius must be positive", line)
        cfg.domain_radius = val

    val, line = _want(table, "f.family", str)
    if val is not None:
        if val == "custom":
            raise ConfigError("custom family is API-only; configs take a..f", line)
        if val not in FAMILY_NAMES:
            raise ConfigError(
                f"unknown family {val!r}; choose one of a, b, c, d, e, f", line
            )
        cfg.family = val
    for name in _PARAM_KEYS:
        val, line = _want(table, f"f.params.{name}", float)
        if val is not None:
            cfg.params[name] = val

    val, line = _want(table, "h.kind", str)
    if val is not None:
        if val not in ("zero", "constant", "nodal-file"):
            raise ConfigError(
                f"h.kind must be 'zero', 'constant', or 'nodal-file', got {val!r}", line
            )
        cfg.h_kind = val
    if "h.value" in table:
        value, line = table["h.value"]
        if cfg.h_kind == "constant":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"h.value must be a number, got {value!r}", line)
            if value < 0:
                raise ConfigError("h.value must be nonnegative", line)
            cfg.h_value = float(value)
        elif cfg.h_kind == "nodal-file":
            if not isinstance(value, str):
                raise ConfigError(f"h.value must be a file path, got {value!r}", line)
            cfg.h_value = value
        else:
            raise ConfigError("h.value is only meaningful for constant or nodal-file", line)
    if cfg.h_kind in ("constant", "nodal-file") and cfg.h_value is None:
        _, line = table["h.kind"]
        raise ConfigError(f"h.kind = {cfg.h_kind} requires h.value", line)

    has_scalar = "lambda" in table
    grid_keys = [k for k in table if k.startswith("lambda.grid.")]
    if has_scalar and grid_keys:
        _, line = table["lambda"]
        raise ConfigError("give either a scalar lambda or a lambda.grid, not both", line)
    if has_scalar:
        val, line = _want(table, "lambda", float)
        if val <= 0:
            raise ConfigError("lambda must be positive", line)
        cfg.lam = val
    elif grid_keys:
        lo, line_lo = _want(table, "lambda.grid.min", float)
        hi, line_hi = _want(table, "lambda.grid.max", float)
        count, _ = _want(table, "lambda.grid.count", int)
        spacing, line_sp = _want(table, "lambda.grid.spacing", str)
        if lo is None or hi is None:
            _, line = table[grid_keys[0]]
            raise ConfigError("lambda.grid needs both min and max", line)
        if lo <= 0:
            raise ConfigError("lambda.grid.min must be positive", line_lo)
        if hi <= 0:
            raise ConfigError("lambda.grid.max must be positive", line_hi)
        if spacing is None:
            spacing = "log"
        elif spacing not in ("linear", "log"):
            raise ConfigError(
                f"lambda.grid.spacing must be 'linear' or 'log', got {spacing!r}", line_sp
            )
        cfg.grid = LambdaGrid(lo=lo, hi=hi, count=count if count is not None else 16,
                              spacing=spacing)

    val, line = _want(table, "solver.tol", float)
    if val is not None:
        if val <= 0:
            raise ConfigError("solver.tol must be positive", line)
        cfg.solver_tol = val
    val, line = _want(table, "solver.max_iter", int)
    if val is not None:
        if val < 1:
            raise ConfigError("solver.max_iter must be positive", line)
        cfg.solver_max_iter = val
    val, line = _want(table, "solver.damping", float)
    if val is not None:
        if not (0 < val <= 1):
            raise ConfigError("solver.damping must lie in (0, 1]", line)
        cfg.solver_damping = val

    val, line = _want(table, "seeds", int)
    if val is not None:
        if val < 0:
            raise ConfigError("seeds must be nonnegative", line)
        cfg.seeds = val
    val, line = _want(table, "output", str)
    if val is not None:
        cfg.output = val

    return cfg


def load_config(path: str) -> RunConfig:
    """Read, parse, and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def build_mesh(cfg: RunConfig) -> Mesh:
    if cfg.domain_kind == "interval":
        return build_interval_mesh(cfg.domain_n)
    return build_radial_mesh(cfg.domain_n, dim=cfg.domain_dim, radius=cfg.domain_radius)


def build_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    if cfg.family is None:
        raise ConfigError("f.family is required for this command")
    try:
        return make_nonlinearity(cfg.family, **cfg.params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for family {cfg.family!r}: {exc}") from exc


def load_nodal_file(path: str, mesh: Mesh) -> np.ndarray:
    """Read one float per line; the count must match the mesh node count."""
    if not os.path.exists(path):
        raise ConfigError(f"nodal file {path!r} does not exist")
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise ConfigError(f"bad nodal value {line!r} in {path}", lineno) from exc
            if values[-1] < 0:
                raise ConfigError(f"negative nodal value in {path}", lineno)
    arr = np.asarray(values, dtype=float)
    if arr.size != mesh.n_nodes:
        raise ConfigError(
            f"nodal file {path} has {arr.size} values; mesh has {mesh.n_nodes} nodes"
        )
    return arr


def build_h(cfg: RunConfig, mesh: Mesh):
    if cfg.h_kind == "zero":
        return zero_function(mesh)
    if cfg.h_kind == "constant":
        vals = np.full(mesh.n_nodes, float(cfg.h_value))
        vals[mesh.is_dirichlet] = 0.0
        return grid_function(mesh, vals, dirichlet=True)
    vals = load_nodal_file(str(cfg.h_value), mesh).copy()
    vals[mesh.is_dirichlet] = 0.0
    return grid_function(mesh, vals, dirichlet=True)


def build_problem(cfg: RunConfig) -> ProblemSpec:
    mesh = build_mesh(cfg)
    f = build_nonlinearity(cfg)
    h = build_h(cfg, mesh)
    return ProblemSpec(p=cfg.p, mesh=mesh, f=f, h=h)
