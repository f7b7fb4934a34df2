"""Scenario files: one JSON document drives every CLI subcommand.

A scenario names a surface, two Morse functions (the ends ``alpha`` and
``beta``), any number of homotopy families between them, and tolerance
overrides. Everything is validated before numeric work starts and unknown
keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import expressions
from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry import Metric, MorseSmalePair, ScalarField, Surface, make_surface
from .homotopy import Atomic, Homotopy

TOP_KEYS = {"name", "description", "surface", "alpha", "beta", "families", "tolerances", "output_dir"}
PAIR_KEYS = {"function", "metric", "prefix", "seeds_per_chart"}
METRIC_KEYS = {"mode", "scale", "matrix"}
FAMILY_KEYS = {"name", "description", "level", "push", "cutoff"}
SURFACE_KEYS = {"sphere": set(), "torus": {"R", "r"}, "plane": {"half_width"}}


class ScenarioError(ValueError):
    """A scenario file that does not parse or validate."""


def _require(cond: bool, where: str, msg: str):
    if not cond:
        raise ScenarioError(f"{where}: {msg}")


def _check_keys(obj, allowed: set, where: str, required: tuple = ()):
    _require(isinstance(obj, dict), where, "expected an object")
    unknown = sorted(set(obj) - allowed)
    _require(not unknown, where, f"unknown keys {unknown}")
    missing = [k for k in required if k not in obj]
    _require(not missing, where, f"missing keys {missing}")


def _check_expr(text, variables, where):
    _require(isinstance(text, str), where, "expression must be a string")
    try:
        expressions.parse(text, variables)
    except expressions.ExpressionError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def validate(obj: dict) -> None:
    """Raise ScenarioError with a located diagnostic on the first problem."""
    _check_keys(obj, TOP_KEYS, "scenario", ("name", "surface", "alpha", "beta"))
    _require(isinstance(obj["name"], str) and obj["name"], "name", "must be a non-empty string")
    surf = obj["surface"]
    _check_keys(surf, {"name"} | set().union(*SURFACE_KEYS.values()), "surface", ("name",))
    _require(surf["name"] in SURFACE_KEYS, "surface.name", f"one of {sorted(SURFACE_KEYS)}")
    extra = sorted(set(surf) - {"name"} - SURFACE_KEYS[surf["name"]])
    _require(not extra, "surface", f"parameters {extra} do not apply to a {surf['name']}")
    for k in set(surf) - {"name"}:
        _require(isinstance(surf[k], (int, float)) and not isinstance(surf[k], bool), f"surface.{k}", "must be a number")
    prefixes = []
    for end in ("alpha", "beta"):
        pair = obj[end]
        _check_keys(pair, PAIR_KEYS, end, ("function",))
        _check_expr(pair["function"], ["x", "y", "z"], f"{end}.function")
        prefix = pair.get("prefix", "a" if end == "alpha" else "b")
        _require(isinstance(prefix, str) and prefix.isalpha(), f"{end}.prefix", "must be letters")
        prefixes.append(prefix)
        if "seeds_per_chart" in pair:
            n = pair["seeds_per_chart"]
            _require(isinstance(n, int) and not isinstance(n, bool) and n >= 2, f"{end}.seeds_per_chart",
                     "must be an integer >= 2")
        metric = pair.get("metric", "induced")
        if isinstance(metric, str):
            _require(metric == "induced", f"{end}.metric", "the only named metric is 'induced'")
        else:
            _check_keys(metric, METRIC_KEYS, f"{end}.metric", ("mode",))
            _require(metric["mode"] in ("induced", "matrix"), f"{end}.metric.mode", "'induced' or 'matrix'")
            if "scale" in metric:
                _require(isinstance(metric["scale"], (int, float)) and metric["scale"] > 0,
                         f"{end}.metric.scale", "must be a positive number")
            if metric["mode"] == "matrix":
                m = metric.get("matrix")
                _require(isinstance(m, list) and len(m) == 2 and all(isinstance(r, list) and len(r) == 2 for r in m),
                         f"{end}.metric.matrix", "must be a 2x2 list of expressions")
                for i, row in enumerate(m):
                    for j, e in enumerate(row):
                        _check_expr(e, ["u1", "u2"], f"{end}.metric.matrix[{i}][{j}]")
    _require(prefixes[0] != prefixes[1], "prefix", "alpha and beta need different label prefixes")
    names = set()
    for i, fam in enumerate(obj.get("families", [])):
        where = f"families[{i}]"
        _check_keys(fam, FAMILY_KEYS, where, ("name", "level"))
        _require(isinstance(fam["name"], str) and fam["name"] not in names, f"{where}.name", "must be a unique string")
        names.add(fam["name"])
        level = fam["level"]
        _require(isinstance(level, int) and not isinstance(level, bool) and 0 <= level <= 2, f"{where}.level",
                 "must be 0, 1 or 2")
        _check_expr(fam.get("push", "0"), ["x", "y", "z"] + [f"s{k}" for k in range(1, level + 1)], f"{where}.push")
        if "cutoff" in fam:
            _require(isinstance(fam["cutoff"], (int, float)) and fam["cutoff"] > 0, f"{where}.cutoff",
                     "must be a positive number")
    tols = obj.get("tolerances", {})
    _require(isinstance(tols, dict), "tolerances", "expected an object")
    try:
        DEFAULT_TOLERANCES.with_overrides(tols)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"tolerances: {exc}") from None
    if "output_dir" in obj:
        _require(isinstance(obj["output_dir"], str), "output_dir", "must be a string")


@dataclass
class Scenario:
    name: str
    surface: Surface
    alpha: MorseSmalePair
    beta: MorseSmalePair
    families: dict = field(default_factory=dict)
    tol: Tolerances = DEFAULT_TOLERANCES
    output_dir: Optional[str] = None
    raw: dict = field(default_factory=dict)

    def family(self, name: Optional[str] = None, level: Optional[int] = None) -> Homotopy:
        """A family by name, or the first one of the given level."""
        if name is not None:
            if name not in self.families:
                raise ScenarioError(f"scenario {self.name!r} has no family {name!r}; "
                                    f"known: {sorted(self.families)}")
            return self.families[name]
        for h in self.families.values():
            if level is None or h.level == level:
                return h
        raise ScenarioError(f"scenario {self.name!r} has no level-{level} family")

    def family_names(self, level: Optional[int] = None) -> list:
        return [n for n, h in self.families.items() if level is None or h.level == level]

    def pair(self, which: str) -> MorseSmalePair:
        if which not in ("alpha", "beta"):
            raise ScenarioError("pair is 'alpha' or 'beta'")
        return getattr(self, which)

    def point(self, label: str):
        for pair in (self.alpha, self.beta):
            for p in pair.critical_points:
                if p.id == label:
                    return p
        raise ScenarioError(f"no critical point labelled {label!r}")


def _metric(surface, spec) -> Metric:
    if spec is None or spec == "induced":
        return Metric(surface)
    return Metric(surface, spec["mode"], spec.get("scale", 1.0), spec.get("matrix"))


def build(obj: dict, tol_scale: float = 1.0) -> Scenario:
    validate(obj)
    tol = DEFAULT_TOLERANCES.with_overrides(obj.get("tolerances", {}))
    if tol_scale != 1.0:
        tol = tol.scaled(tol_scale)
    try:
        surface = make_surface(obj["surface"])
        pairs = {}
        for end, default in (("alpha", "a"), ("beta", "b")):
            spec = obj[end]
            pairs[end] = MorseSmalePair(surface, ScalarField(surface, spec["function"]),
                                        _metric(surface, spec.get("metric")), prefix=spec.get("prefix", default),
                                        tol=tol, seeds_per_chart=spec.get("seeds_per_chart", 12))
        families = {}
        for fam in obj.get("families", []):
            families[fam["name"]] = Atomic(pairs["alpha"], pairs["beta"], fam.get("push", "0"), level=fam["level"],
                                           cutoff=fam.get("cutoff", tol.cutoff))
    except (ValueError, expressions.ExpressionError) as exc:
        raise ScenarioError(str(exc)) from None
    return Scenario(obj["name"], surface, pairs["alpha"], pairs["beta"], families, tol, obj.get("output_dir"), obj)


def stock_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("morse_tower.scenarios").iterdir() if p.name.endswith(".json"))


def read(path_or_name: str) -> dict:
    """Parse a scenario file, or a stock scenario by name."""
    path = Path(path_or_name)
    if not path.exists():
        stem = path.name[:-5] if path.name.endswith(".json") else path.name
        stock = resources.files("morse_tower.scenarios") / f"{stem}.json"
        if str(path.parent) in ("", ".") and stock.is_file():
            text = stock.read_text()
        else:
            raise ScenarioError(f"no scenario file {path_or_name!r} (stock scenarios: {', '.join(stock_names())})")
    else:
        text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path_or_name}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return obj


def load(path_or_name: str, tol_scale: float = 1.0) -> Scenario:
    return build(read(path_or_name), tol_scale)
