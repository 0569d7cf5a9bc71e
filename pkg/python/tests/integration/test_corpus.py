"""Seeded random corpus: strong duality, the optimality system and the admissible classes."""

import numpy as np
import pytest

from nsdual.cli.scenario import parse_scenario
from nsdual.convex import Exponential, PiecewiseLinearConcave, QuadraticShortfall, Truncated
from nsdual.market import Claim, random_tree
from nsdual.solvers import solve_duality
from scripts.build_corpus import build_scenario

pytestmark = [pytest.mark.integration, pytest.mark.slow]

SEEDS = list(range(20))

UTILITIES = {
    "exponential": lambda: Exponential(1.0),
    "quadratic_shortfall": QuadraticShortfall,
    "piecewise_linear": lambda: Truncated(PiecewiseLinearConcave([(0.0, 2.0), (1.0, 1.0)], tail_slope=0.5), 4.0),
}


def corpus_shape(seed):
    """1-2 periods, 2-4 branches, a second asset on some three- and four-branch trees."""
    periods = 1 + seed % 2
    branches = 2 + seed % 3
    assets = 2 if branches >= 3 and seed % 4 == 3 else 1
    return periods, branches, assets


def corpus_instance(seed):
    """Tree, claim in [0, 1] and capital in [0.5, 2] for one seed."""
    rng = np.random.default_rng(seed)
    periods, branches, assets = corpus_shape(seed)
    tree = random_tree(rng, periods=periods, branches=branches, assets=assets)
    claim = Claim.for_tree(tree, rng.uniform(0.0, 1.0, size=tree.n_atoms).tolist())
    return tree, claim, float(rng.uniform(0.5, 2.0))


def sequential_draws(count):
    """Two-period trinomial trees and claims drawn one after another from seed 0."""
    rng = np.random.default_rng(0)
    draws = []
    for _ in range(count):
        tree = random_tree(rng, periods=2, branches=3, assets=1)
        claim = Claim.for_tree(tree, rng.uniform(0.0, 1.0, size=tree.n_atoms).tolist())
        draws.append((tree, claim))
    return draws


class TestCorpusDuality:
    """Strong duality and the optimality system across the corpus."""

    @pytest.mark.parametrize("family", sorted(UTILITIES))
    @pytest.mark.parametrize("seed", SEEDS)
    def test_verified(self, seed, family, settings):
        """Gap, inclusions and budget stay within tolerance on every instance."""
        tree, claim, x = corpus_instance(seed)
        report = solve_duality(tree, UTILITIES[family](), claim, x, settings=settings)
        diagnostics = report.diagnostics
        assert report.passed, diagnostics.failures
        assert diagnostics.gap_rel <= 10.0 * settings.tol_solve
        assert diagnostics.inclusion_max <= settings.tol_inclusion
        assert diagnostics.budget_residual <= 10.0 * settings.tol_solve * (1.0 + abs(x * report.dual.y))
        assert report.flags["oracle_agrees"]

    @pytest.mark.parametrize("draw", range(8))
    def test_sequential_exponential_draws(self, draw, settings):
        """Atoms whose optimal dual weight underflows still verify."""
        tree, claim = sequential_draws(draw + 1)[draw]
        report = solve_duality(tree, Exponential(1.0), claim, 1.0, settings=settings)
        assert report.passed, report.diagnostics.failures
        assert report.diagnostics.positivity_ok


class TestCorpusAdmissibleClasses:
    """The optimal wealth process and the growth of the dual value function."""

    @pytest.mark.parametrize("seed", SEEDS)
    def test_exponential_audit(self, seed, settings):
        """Martingale under Q*, supermartingale at every vertex, finite growth constant."""
        tree, claim, x = corpus_instance(seed)
        report = solve_duality(tree, Exponential(1.0), claim, x, settings=settings, audit=True)
        audit = report.audit
        if audit.skipped:
            pytest.skip(audit.reason)
        assert audit.growth_ok
        assert audit.martingale_residual <= settings.tol_replication * (1.0 + max(abs(v) for v in report.X))
        assert audit.passed


class TestCorpusBuilder:
    """Scenario files written by the corpus script."""

    @pytest.mark.parametrize("index", range(4))
    def test_scenarios_parse_and_build(self, index):
        """Every generated scenario validates and rebuilds its tree."""
        rng = np.random.default_rng(index)
        scenario = parse_scenario(build_scenario(rng, index, periods=2, branches=3, assets=1))
        tree = scenario.market.build()
        assert tree.n_atoms == 9
        assert scenario.build_claim(tree).norm <= 1.0
        assert scenario.utility.build().family == scenario.utility.family
