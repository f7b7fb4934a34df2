import copy
import json
from pathlib import Path

import pytest

from morse_tower import scenario
from morse_tower.config import DEFAULT_TOLERANCES

DOCS = Path(__file__).resolve().parents[1] / "docs"

BASE = {
    "name": "t",
    "surface": {"name": "sphere"},
    "alpha": {"function": "z"},
    "beta": {"function": "z + 0.1*x"},
    "families": [{"name": "f", "level": 1, "push": "s1*x"}],
}


def variant(**changes):
    obj = copy.deepcopy(BASE)
    for path, value in changes.items():
        node = obj
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[int(k)] if k.isdigit() else node[k]
        node[keys[-1]] = value
    return obj


def test_base_scenario_is_valid():
    scenario.validate(BASE)


@pytest.mark.parametrize("obj,where", [
    (variant(colour="blue"), "unknown keys"),
    (variant(surface={"name": "klein"}), "surface.name"),
    (variant(surface={"name": "sphere", "R": 2}), "do not apply"),
    (variant(alpha={"function": "z +"}), "alpha.function"),
    (variant(alpha={"function": "w"}), "alpha.function"),
    (variant(beta={"function": "z", "prefix": "a"}), "prefix"),
    (variant(families__0__level=3), "families[0].level"),
    (variant(families__0__push="s2*x"), "families[0].push"),
    (variant(families=[{"name": "f", "level": 0}, {"name": "f", "level": 1}]), "families[1].name"),
    (variant(tolerances={"no_such_tol": 1}), "tolerances"),
    (variant(alpha={"function": "z", "metric": {"mode": "matrix", "matrix": [["1"]]}}), "alpha.metric.matrix"),
    (variant(alpha={"function": "z", "seeds_per_chart": 1}), "seeds_per_chart"),
])
def test_invalid_scenarios_are_located(obj, where):
    with pytest.raises(scenario.ScenarioError, match=where.replace("[", r"\[").replace("]", r"\]")):
        scenario.validate(obj)


def test_missing_required_key():
    obj = copy.deepcopy(BASE)
    del obj["beta"]
    with pytest.raises(scenario.ScenarioError, match="missing keys"):
        scenario.validate(obj)


def test_bad_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"name": "x",\n  "surface": }')
    with pytest.raises(scenario.ScenarioError, match="line 2"):
        scenario.read(str(path))


def test_unknown_scenario_name_lists_stock():
    with pytest.raises(scenario.ScenarioError, match="sphere_pair"):
        scenario.read("no_such_scenario")


def test_stock_scenarios_load():
    names = scenario.stock_names()
    assert names == ["deformed_sphere", "sphere", "sphere_level2", "sphere_pair", "tilted_torus"]
    for name in names:
        sc = scenario.load(name)
        assert sc.name == name
        assert sc.families


def test_file_and_stock_name_agree(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario.read("sphere")))
    assert scenario.read(str(path)) == scenario.read("sphere")


def test_tolerance_overrides_and_scaling():
    sc = scenario.build(variant(tolerances={"cross_tol": 1e-8}), tol_scale=0.5)
    assert sc.tol.cross_tol == pytest.approx(0.5e-8)
    assert sc.tol.root_tol == pytest.approx(0.5 * DEFAULT_TOLERANCES.root_tol)


def test_family_lookup():
    sc = scenario.build(BASE)
    assert sc.family("f").level == 1
    assert sc.family(level=1) is sc.family("f")
    with pytest.raises(scenario.ScenarioError, match="no family"):
        sc.family("g")
    with pytest.raises(scenario.ScenarioError, match="no level-2"):
        sc.family(level=2)


def test_point_lookup():
    sc = scenario.build(BASE)
    assert sc.point("a0.0").index == 0
    with pytest.raises(scenario.ScenarioError):
        sc.point("z9.9")


def test_schema_matches_validator_keys():
    schema = json.loads((DOCS / "scenario.schema.json").read_text())
    assert set(schema["properties"]) == scenario.TOP_KEYS
    assert set(schema["required"]) == {"name", "surface", "alpha", "beta"}
    assert schema.get("additionalProperties") is False


@pytest.mark.parametrize("name", scenario.stock_names())
def test_stock_scenarios_use_only_schema_keys(name):
    schema = json.loads((DOCS / "scenario.schema.json").read_text())
    assert set(scenario.read(name)) <= set(schema["properties"])
