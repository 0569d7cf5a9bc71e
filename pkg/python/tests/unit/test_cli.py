"""Unit tests for scenario parsing, tables and the exit-code mapping."""

import json

import click
import numpy as np
import pytest

from nsdual.cli.main import parse_tolerances
from nsdual.cli.runner import dumps_report, exit_code_for, write_atomic
from nsdual.cli.scenario import Scenario, Task, load_scenario, parse_scenario
from nsdual.cli.tables import LADDER_COLUMNS, emit_plot_data, is_discretely_convex
from nsdual.convex import Exponential, Truncated
from nsdual.exceptions import (
    ArbitrageError,
    BracketError,
    ErrorCode,
    InadmissibleError,
    ScenarioParseError,
    ValidationError,
    VerificationError,
)

pytestmark = pytest.mark.unit


def _scenario(**overrides):
    base = {
        "schema_version": 1,
        "name": "demo",
        "market": {"kind": "one_period", "s0": 1.0, "outcomes": [0.5, 1.0, 2.0]},
        "utility": {"family": "exponential", "eta": 1.0},
        "capital": 0.0,
    }
    base.update(overrides)
    return base


class TestScenarioSchema:
    """Validation of scenario documents."""

    def test_minimal_scenario(self):
        """Defaults fill in the task, seed and ladder levels."""
        scenario = parse_scenario(_scenario())
        assert scenario.task == Task.DUALITY
        assert scenario.seed == 0
        assert scenario.capitals == [0.0]
        assert scenario.ladder_levels == [2.0, 4.0, 8.0, 16.0, 32.0]

    def test_builds_market_and_claim(self):
        """The market spec turns into a tree and a missing claim is zero."""
        scenario = parse_scenario(_scenario(capital=[0.0, 1.0]))
        tree = scenario.market.build()
        assert tree.n_atoms == 3
        assert scenario.build_claim(tree).norm == 0.0
        assert scenario.capitals == [0.0, 1.0]

    def test_nested_utility(self):
        """Truncated specs wrap another utility spec."""
        scenario = parse_scenario(
            _scenario(utility={"family": "truncated", "n": 4.0, "base": {"family": "exponential", "eta": 2.0}})
        )
        utility = scenario.utility.build()
        assert isinstance(utility, Truncated)
        assert isinstance(utility.base, Exponential)

    def test_unknown_field_is_rejected(self):
        """Extra keys are schema errors."""
        with pytest.raises(ValidationError, match="does not match the schema") as info:
            parse_scenario(_scenario(colour="blue"))
        assert info.value.error_code == ErrorCode.INVALID_SCENARIO
        assert info.value.details["errors"]

    def test_wrong_schema_version(self):
        """Only version 1 is understood."""
        with pytest.raises(ValidationError):
            parse_scenario(_scenario(schema_version=2))

    def test_shortfall_needs_loss(self):
        """The shortfall task requires a loss."""
        with pytest.raises(ValidationError):
            parse_scenario(_scenario(task="shortfall"))

    def test_tolerances_must_be_positive(self):
        """Scenario tolerances are positive numbers."""
        with pytest.raises(ValidationError):
            parse_scenario(_scenario(tolerances={"solve": -1.0}))

    def test_with_task(self):
        """The task can be overridden after loading."""
        scenario = parse_scenario(_scenario())
        assert scenario.with_task("ladder").task == Task.LADDER
        assert scenario.with_task(None) is scenario

    def test_missing_file(self, tmp_path):
        """A missing file is a parse error with its own code."""
        with pytest.raises(ScenarioParseError, match="not found") as info:
            load_scenario(tmp_path / "absent.json")
        assert info.value.error_code == ErrorCode.MISSING_FILE

    def test_invalid_json(self, tmp_path):
        """Broken JSON is a parse error."""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ScenarioParseError, match="not valid JSON"):
            load_scenario(path)

    def test_loads_from_disk(self, tmp_path):
        """A valid file loads into a frozen scenario."""
        path = tmp_path / "ok.json"
        path.write_text(json.dumps(_scenario()), encoding="utf-8")
        assert isinstance(load_scenario(path), Scenario)


class TestExitCodes:
    """Error categories map onto process exit codes."""

    @pytest.mark.parametrize(
        "error, code",
        [
            (ScenarioParseError("bad"), 2),
            (ValidationError("bad"), 3),
            (InadmissibleError("bad"), 3),
            (ArbitrageError("bad"), 3),
            (BracketError("bad"), 4),
            (VerificationError("bad"), 1),
            (RuntimeError("bad"), 4),
        ],
    )
    def test_mapping(self, error, code):
        """Each category has one exit code."""
        assert exit_code_for(error) == code


class TestTolerancePairs:
    """--tol NAME=VALUE parsing."""

    def test_pairs(self):
        """Pairs become a float mapping."""
        assert parse_tolerances(("solve=1e-8", " prox = 1e-12")) == {"solve": 1e-8, "prox": 1e-12}

    def test_missing_equals(self):
        """A bare name is rejected."""
        with pytest.raises(click.BadParameter):
            parse_tolerances(("solve",))

    def test_non_numeric(self):
        """Values must parse as floats."""
        with pytest.raises(click.BadParameter):
            parse_tolerances(("solve=tiny",))


class TestReports:
    """Report serialisation and plot tables."""

    def test_non_finite_values_become_strings(self):
        """inf and nan survive as strings and keys are sorted."""
        text = dumps_report({"b": float("inf"), "a": [float("nan"), -float("inf"), 1.5]})
        assert json.loads(text) == {"a": ["nan", "-inf", 1.5], "b": "inf"}
        assert text.index('"a"') < text.index('"b"')

    def test_write_atomic(self, tmp_path):
        """The file appears with its content and no temporary is left."""
        path = write_atomic(tmp_path / "sub" / "out.json", "{}\n")
        assert path.read_text() == "{}\n"
        assert [p.name for p in path.parent.iterdir()] == ["out.json"]

    def test_empty_plot_data_has_headers(self, tmp_path):
        """Without inputs every table is written with its header only."""
        paths = emit_plot_data(tmp_path)
        assert set(paths) == {"ladder", "dual_curve", "scatter"}
        assert paths["ladder"].read_text() == ",".join(LADDER_COLUMNS) + "\n"
        assert paths["dual_curve"].read_text() == "y,value\n"

    def test_discrete_convexity(self):
        """Convex samples pass and a concave kink fails."""
        ys = np.linspace(0.5, 2.0, 7)
        assert is_discretely_convex(ys, ys**2)
        assert not is_discretely_convex(ys, -(ys**2))
        assert is_discretely_convex([1.0, 2.0], [5.0, -3.0])
