"""Scenario runs through the runner and the click command line."""

import json

import pytest
from click.testing import CliRunner

from nsdual.cli import batch, run_scenario
from nsdual.cli.main import bundled_scenarios, cli
from nsdual.logging import configure_logging

pytestmark = pytest.mark.integration

FAST_SCENARIOS = [
    "trinomial-exponential",
    "binomial-call-indifference",
    "trinomial-quadratic-shortfall",
    "trinomial-ladder",
]


def _by_name(name):
    return next(p for p in bundled_scenarios() if p.stem == name)


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestRunScenario:
    """Reports, status files and exit codes."""

    @pytest.mark.parametrize("name", FAST_SCENARIOS)
    def test_bundled_scenario_passes(self, name, tmp_path, settings):
        """Bundled scenarios pass and write every file."""
        outcome = run_scenario(_by_name(name), out_dir=tmp_path, settings=settings)
        assert outcome.exit_code == 0, outcome.reason
        target = tmp_path / name
        for filename in ("report.json", "atoms.csv", "ladder.csv", "dual_curve.csv", "scatter.csv", "status.json"):
            assert (target / filename).exists()
        status = json.loads((target / "status.json").read_text())
        assert status["passed"] is True

    @pytest.mark.slow
    def test_audit_scenario(self, tmp_path, settings):
        """The two-period audit scenario runs both capitals."""
        outcome = run_scenario(_by_name("two-period-audit"), out_dir=tmp_path, settings=settings)
        report = json.loads((tmp_path / "two-period-audit" / "report.json").read_text())
        assert [run["x"] for run in report["runs"]] == [0.0, 1.0]
        assert outcome.exit_code in (0, 1)

    def test_reruns_are_byte_identical(self, tmp_path, settings):
        """Same scenario, same seed, same bytes."""
        path = _by_name("trinomial-exponential")
        run_scenario(path, out_dir=tmp_path / "a", settings=settings)
        run_scenario(path, out_dir=tmp_path / "b", settings=settings)
        for filename in ("report.json", "atoms.csv", "dual_curve.csv"):
            first = (tmp_path / "a" / "trinomial-exponential" / filename).read_bytes()
            second = (tmp_path / "b" / "trinomial-exponential" / filename).read_bytes()
            assert first == second

    def test_exponential_report_values(self, tmp_path, settings):
        """The report carries V, W and the per-atom table."""
        run_scenario(_by_name("trinomial-exponential"), out_dir=tmp_path, settings=settings)
        report = json.loads((tmp_path / "trinomial-exponential" / "report.json").read_text())
        run = report["runs"][0]
        assert report["atoms"] == ["w0", "w1", "w2"]
        assert run["duality"]["V"] == pytest.approx(-(2 ** (1 / 3) + 1 + 2 ** (-2 / 3)) / 3, abs=1e-6)
        lines = (tmp_path / "trinomial-exponential" / "atoms.csv").read_text().splitlines()
        assert lines[0] == "x,atom,p,X,Y,B,utility,conjugate"
        assert len(lines) == 4

    def test_arbitrage_market(self, tmp_path, settings):
        """A market without a martingale measure exits with 3."""
        path = _write(
            tmp_path / "arb.json",
            {
                "schema_version": 1,
                "name": "arb",
                "market": {"kind": "one_period", "s0": 1.0, "outcomes": [1.5, 2.0]},
                "utility": {"family": "exponential"},
                "capital": 0.0,
            },
        )
        outcome = run_scenario(path, out_dir=tmp_path / "out", settings=settings)
        assert outcome.exit_code == 3
        assert "M^e(S) = ∅" in outcome.reason["message"]
        status = json.loads((tmp_path / "out" / "arb" / "status.json").read_text())
        assert status["reason"]["category"] == "MARKET"

    def test_inadmissible_utility(self, tmp_path, settings):
        """U(x) = -x⁻ is refused with exit code 3."""
        path = _write(
            tmp_path / "linear.json",
            {
                "schema_version": 1,
                "name": "linear",
                "market": {"kind": "one_period", "s0": 1.0, "outcomes": [0.5, 1.0, 2.0]},
                "utility": {"family": "piecewise_linear", "breakpoints": [[0.0, 1.0]]},
                "capital": 1.0,
            },
        )
        assert run_scenario(path, out_dir=tmp_path / "out", settings=settings).exit_code == 3

    def test_broken_json(self, tmp_path, settings):
        """Unparseable files exit with 2 and still get a status file."""
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        outcome = run_scenario(path, out_dir=tmp_path / "out", settings=settings)
        assert outcome.exit_code == 2
        assert (tmp_path / "out" / "broken" / "status.json").exists()

    def test_bad_tolerance_override(self, tmp_path, settings):
        """Unknown tolerance names exit with 3."""
        outcome = run_scenario(
            _by_name("trinomial-exponential"), out_dir=tmp_path, tol_overrides={"bogus": 1.0}, settings=settings
        )
        assert outcome.exit_code == 3


class TestBatch:
    """Directory runs."""

    def test_outcomes_in_file_order(self, tmp_path, settings):
        """Outcomes follow sorted file names."""
        source = tmp_path / "in"
        source.mkdir()
        for name in ("trinomial-exponential", "binomial-call-indifference"):
            (source / f"{name}.json").write_bytes(_by_name(name).read_bytes())
        (source / "zz-broken.json").write_text("[", encoding="utf-8")
        outcomes = batch(source, out_dir=tmp_path / "out", settings=settings, workers=2)
        assert [o.name for o in outcomes] == ["binomial-call-indifference", "trinomial-exponential", "zz-broken"]
        assert [o.exit_code for o in outcomes] == [0, 0, 2]

    def test_empty_directory(self, tmp_path, settings):
        """No files, no outcomes."""
        assert batch(tmp_path, settings=settings) == []


class TestCommandLine:
    """The click entry point."""

    def setup_method(self):
        """Set up test fixtures."""
        self.runner = CliRunner()

    def teardown_method(self):
        """Rebind the log sink to the real stderr after CliRunner swaps it."""
        configure_logging("INFO", json_output=False)

    def test_run_command(self, tmp_path):
        """nsdual run exits with the scenario's code."""
        result = self.runner.invoke(
            cli,
            ["--console-logs", "run", "--scenario", str(_by_name("trinomial-exponential")), "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "trinomial-exponential" / "report.json").exists()

    def test_bad_tolerance_pair(self, tmp_path):
        """Malformed --tol exits with 3."""
        result = self.runner.invoke(
            cli,
            ["run", "--scenario", str(_by_name("trinomial-exponential")), "--out", str(tmp_path), "--tol", "solve"],
        )
        assert result.exit_code == 3

    def test_missing_scenario_file(self, tmp_path):
        """A missing scenario exits with 2."""
        result = self.runner.invoke(cli, ["run", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_batch_on_missing_directory(self, tmp_path):
        """batch needs an existing directory."""
        result = self.runner.invoke(cli, ["batch", str(tmp_path / "missing")])
        assert result.exit_code == 2

    def test_scenarios_lists_bundled_files(self):
        """Every bundled scenario is listed."""
        result = self.runner.invoke(cli, ["scenarios"])
        assert result.exit_code == 0
        assert "trinomial-exponential.json" in result.output
