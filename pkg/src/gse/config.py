"""Experiment configuration files.

INI-style text read with :mod:`configparser`::

    [potential]
    name = almost_mathieu
    lambda = 1

    [sweep]
    thetas = (sqrt(5)-1)/2, 1/sqrt(2), pi-3
    # or: theta_range = 0.01, 0.1, 4, log
    qs = 5/6
    irrational = true
    eta_grid = 0

    [solver]
    tol = 1e-9

    [suites]
    thm31 = true
    thm41 = true

    [output]
    dir = results
    stem = mathieu_sweep

Several potentials may be given as sections ``[potential]``,
``[potential:b]``, ... Numbers accept the arithmetic expressions
``+ - * / **``, parentheses, ``pi`` and ``sqrt``. ``GSE_OUTPUT_DIR``
overrides ``[output] dir``.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .potential import POTENTIALS, potential_from_name


class ConfigError(ValueError):
    """Malformed configuration; the message names the file and line."""


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def parse_number(text):
    """Evaluate a small arithmetic expression such as ``(sqrt(5)-1)/2``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot evaluate {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _split_list(text):
    return [t for t in (s.strip() for s in text.split(",")) if t]


@dataclass(frozen=True)
class PotentialSelector:
    """A picklable potential description: factory name plus parameters."""

    name: str
    params: tuple = ()

    def build(self):
        return potential_from_name(self.name, **dict(self.params))

    def label(self):
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.name}{{{inner}}}" if inner else self.name


@dataclass
class ExperimentConfig:
    path: str
    potentials: list
    thetas: list
    qs: list = field(default_factory=list)
    irrational: bool = False
    eta_grid: int = 0
    union_period: int | None = None
    tol: float = 1e-9
    eig_tol: float = 1e-10
    max_radius: int | None = None
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    thm41_tol: float = 1e-8
    run_thm31: bool = True
    run_thm41: bool = True
    slope_margin: float = 0.1
    seed: int = 0
    output_dir: str = "."
    stem: str = "gse"

    def output_path(self, suffix):
        return Path(self.output_dir) / f"{self.stem}{suffix}"


_PARAM_KINDS = {
    "almost_mathieu": {"lambda": float, "dim": int},
    "separable_power": {"dim": int, "p": int, "H": float},
    "zero": {"dim": int},
    "constant": {"value": float, "dim": int},
}


def _line_index(text):
    """Map (section, key) to the 1-based line where the key is set."""
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            out[(section, m.group(1).strip().lower())] = i
    return out


def load_config(path):
    """Read and validate a configuration file; raises :class:`ConfigError`."""
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, path)


def parse_config(text, path="<config>"):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = _line_index(text)

    def fail(section, key, msg):
        line = lines.get((section, key.lower()))
        where = f"{path}:{line}" if line else f"{path} [{section}]"
        raise ConfigError(f"{where}: {key}: {msg}")

    def get(section, key, kind, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            if kind is bool:
                return parser.getboolean(section, key)
            if kind is int:
                v = parse_number(raw)
                if v != int(v):
                    raise ValueError("expected an integer")
                return int(v)
            if kind is float:
                return parse_number(raw)
            return raw.strip()
        except ValueError as exc:
            fail(section, key, str(exc))

    known = {"sweep", "solver", "suites", "output", "slopes"}
    potentials = []
    for section in parser.sections():
        if section == "potential" or section.startswith("potential:"):
            name = get(section, "name", str)
            if name is None:
                fail(section, "name", "missing potential name")
            if name not in POTENTIALS:
                fail(section, "name", f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}")
            kinds = _PARAM_KINDS[name]
            params = []
            for key in parser.options(section):
                if key == "name":
                    continue
                if key not in kinds:
                    fail(section, key, f"not a parameter of {name}")
                params.append((key, get(section, key, kinds[key])))
            sel = PotentialSelector(name, tuple(params))
            try:
                sel.build()
            except (ValueError, KeyError) as exc:
                fail(section, "name", str(exc))
            potentials.append(sel)
        elif section not in known:
            fail(section, section, "unknown section")
    if not potentials:
        raise ConfigError(f"{path}: no [potential] section")

    sweep = "sweep"
    if not parser.has_section(sweep):
        raise ConfigError(f"{path}: missing [sweep] section")
    thetas = []
    if parser.has_option(sweep, "thetas"):
        try:
            thetas = [parse_number(t) for t in _split_list(parser.get(sweep, "thetas"))]
        except ValueError as exc:
            fail(sweep, "thetas", str(exc))
    if parser.has_option(sweep, "theta_range"):
        parts = _split_list(parser.get(sweep, "theta_range"))
        try:
            lo, hi, n = parse_number(parts[0]), parse_number(parts[1]), int(parse_number(parts[2]))
            mode = parts[3] if len(parts) > 3 else "linear"
            if mode not in ("linear", "log") or n < 1:
                raise ValueError("expected lo, hi, count[, linear|log]")
        except (ValueError, IndexError) as exc:
            fail(sweep, "theta_range", str(exc) or "expected lo, hi, count[, linear|log]")
        grid = np.geomspace(lo, hi, n) if mode == "log" else np.linspace(lo, hi, n)
        thetas += [float(t) for t in grid]
    if not thetas:
        fail(sweep, "thetas", "no theta values given")
    for t in thetas:
        if not 0.0 < t <= 1.0:
            fail(sweep, "thetas", f"theta={t!r} outside (0, 1]")
    thetas = sorted(set(thetas))
    qs = []
    if parser.has_option(sweep, "qs"):
        try:
            qs = [parse_number(q) for q in _split_list(parser.get(sweep, "qs"))]
        except ValueError as exc:
            fail(sweep, "qs", str(exc))
        if any(not 0.0 < q < 1.0 for q in qs):
            fail(sweep, "qs", "every q must lie in (0, 1)")

    cfg = ExperimentConfig(path=path, potentials=potentials, thetas=thetas, qs=qs)
    cfg.irrational = get(sweep, "irrational", bool, False)
    cfg.eta_grid = get(sweep, "eta_grid", int, 0)
    if cfg.eta_grid == 1 or cfg.eta_grid < 0:
        fail(sweep, "eta_grid", "must be 0 (off) or at least 2")
    cfg.union_period = get(sweep, "union_period", int, None)

    for key in ("tol", "eig_tol", "rel_tol", "abs_tol", "thm41_tol"):
        value = get("solver", key, float, getattr(cfg, key)) if parser.has_section("solver") else getattr(cfg, key)
        if value <= 0:
            fail("solver", key, "tolerances must be positive")
        setattr(cfg, key, value)
    if parser.has_section("solver"):
        cfg.max_radius = get("solver", "max_radius", int, None)
        cfg.seed = get("solver", "seed", int, 0)
        if cfg.max_radius is not None and cfg.max_radius < 2:
            fail("solver", "max_radius", "must be at least 2")
    if parser.has_section("suites"):
        cfg.run_thm31 = get("suites", "thm31", bool, True)
        cfg.run_thm41 = get("suites", "thm41", bool, True)
    if parser.has_section("slopes"):
        cfg.slope_margin = get("slopes", "margin", float, 0.1)
    if parser.has_section("output"):
        cfg.output_dir = get("output", "dir", str, ".")
        cfg.stem = get("output", "stem", str, Path(path).stem)
    else:
        cfg.stem = Path(path).stem
    cfg.output_dir = os.environ.get("GSE_OUTPUT_DIR", cfg.output_dir)
    return cfg
