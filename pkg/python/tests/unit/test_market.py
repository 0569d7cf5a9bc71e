"""Unit tests for trees, claims, martingale densities and replication."""

import numpy as np
import pytest

from nsdual.config import NsDualSettings
from nsdual.exceptions import ArbitrageError, PreconditionError, ValidationError
from nsdual.market import (
    Claim,
    MarketTree,
    MartingaleDensity,
    Strategy,
    conditional_expectation,
    dual_cone_bound,
    martingale_polytope,
    martingale_residuals,
    membership_residual,
    one_period,
    polytope_contains,
    price_bounds,
    random_tree,
    replicate,
    superreplication_price,
    terminal_wealth,
    wealth_process,
)

pytestmark = pytest.mark.unit


class TestMarketTree:
    """Tree construction and validation."""

    def test_trinomial_layout(self, trinomial):
        """One root, three atoms, uniform probabilities."""
        assert trinomial.n_atoms == 3
        assert trinomial.n_assets == 1
        assert trinomial.horizon == 1
        assert trinomial.atom_ids() == ["w0", "w1", "w2"]
        np.testing.assert_allclose(trinomial.p, [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(trinomial.increments[:, 0], [-0.5, 0.0, 1.0])

    def test_binomial_ids_spell_paths(self, two_period):
        """Atoms of the two-period lattice are uu, ud, du, dd."""
        assert two_period.atom_ids() == ["uu", "ud", "du", "dd"]
        np.testing.assert_allclose(two_period.p, [0.25] * 4)
        assert two_period.n_holdings == 3

    def test_probabilities_must_sum_to_one(self):
        """Branch probabilities are checked per node."""
        specs = [
            {"id": "r", "parent": None, "prices": [1.0]},
            {"id": "a", "parent": "r", "probability": 0.5, "prices": [2.0]},
            {"id": "b", "parent": "r", "probability": 0.4, "prices": [0.5]},
        ]
        with pytest.raises(ValidationError, match="sum to"):
            MarketTree.from_nodes(specs)

    def test_parent_must_come_first(self):
        """Parents are listed before their children."""
        specs = [
            {"id": "r", "parent": None, "prices": [1.0]},
            {"id": "a", "parent": "x", "probability": 1.0, "prices": [2.0]},
        ]
        with pytest.raises(ValidationError, match="must be listed before"):
            MarketTree.from_nodes(specs)

    def test_prices_must_be_positive(self):
        """Nonpositive prices are rejected."""
        with pytest.raises(ValidationError, match="strictly positive"):
            one_period(1.0, [0.0, 2.0])

    def test_frame_export(self, trinomial, tmp_path):
        """One row per node with the price columns."""
        frame = trinomial.to_frame()
        assert list(frame.columns) == ["node", "t", "parent", "probability", "price_0"]
        assert len(frame) == 4
        path = trinomial.to_csv(tmp_path / "tree.csv")
        assert path.read_text().splitlines()[0] == "node,t,parent,probability,price_0"


class TestClaimsAndStrategies:
    """Payoffs, holdings and wealth."""

    def test_claim_length_is_checked(self, trinomial):
        """A claim needs one value per atom."""
        with pytest.raises(ValidationError, match="atoms"):
            Claim.for_tree(trinomial, [1.0, 2.0])

    def test_claim_arithmetic(self, trinomial):
        """Shifts, negation and the sup norm."""
        claim = Claim.for_tree(trinomial, [0.0, -2.0, 1.0])
        assert claim.norm == 2.0
        np.testing.assert_allclose((claim + 1.0).payoff, [1.0, -1.0, 2.0])
        np.testing.assert_allclose((-claim).payoff, [0.0, 2.0, -1.0])
        np.testing.assert_allclose(claim.scaled(2.0).payoff, [0.0, -4.0, 2.0])

    def test_terminal_wealth_matches_wealth_process(self, two_period):
        """The node wealth process ends in the terminal wealth."""
        theta = Strategy.from_flat(two_period, np.array([0.5, -1.0, 2.0]))
        terminal = terminal_wealth(two_period, 1.0, theta)
        process = wealth_process(two_period, 1.0, theta)
        np.testing.assert_allclose(process[two_period.atoms], terminal)
        assert process[0] == 1.0


class TestMartingalePolytope:
    """Densities, vertices and superreplication."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = NsDualSettings()

    def test_trinomial_vertices(self, trinomial):
        """The extreme densities are (0, 3, 0) and (2, 0, 1)."""
        polytope = martingale_polytope(trinomial, self.settings)
        found = {tuple(np.round(v, 9)) for v in polytope.vertices}
        assert found == {(0.0, 3.0, 0.0), (2.0, 0.0, 1.0)}
        assert polytope.interior.equivalent
        assert polytope_contains(trinomial, polytope.interior.weights, self.settings)

    def test_binomial_polytope_is_a_singleton(self, binomial):
        """The complete binomial market has the unique density (2/3, 4/3)."""
        polytope = martingale_polytope(binomial, self.settings)
        assert polytope.is_singleton
        np.testing.assert_allclose(polytope.vertices[0], [2 / 3, 4 / 3])

    def test_arbitrage_is_detected(self):
        """A market whose prices only rise has no martingale measure."""
        tree = one_period(1.0, [1.5, 2.0])
        with pytest.raises(ArbitrageError, match=r"M\^e\(S\) = ∅"):
            martingale_polytope(tree, self.settings)

    def test_weak_arbitrage_is_detected(self):
        """A zero-probability-loss trade with positive gain also rules out M^e."""
        tree = one_period(1.0, [1.0, 2.0])
        with pytest.raises(ArbitrageError):
            martingale_polytope(tree, self.settings)

    def test_superreplication_of_digital(self, trinomial):
        """sup_Q E_Q[1_up] = 1/3 and inf_Q E_Q[1_up] = 0."""
        payoff = np.array([0.0, 0.0, 1.0])
        assert superreplication_price(trinomial, payoff) == pytest.approx(1 / 3)
        lo, hi = price_bounds(trinomial, payoff)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(1 / 3)

    def test_membership_residual(self, trinomial):
        """Martingale densities have zero residual; P itself does not."""
        assert membership_residual(trinomial, np.array([2.0, 0.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
        assert membership_residual(trinomial, np.ones(3)) > 0.1

    def test_dual_cone_bound(self, trinomial):
        """The polar bound is 1 on the polytope and exceeds 1 off it."""
        assert dual_cone_bound(trinomial, np.array([2.0, 0.0, 1.0])) == pytest.approx(1.0)
        assert dual_cone_bound(trinomial, np.ones(3)) > 1.0

    def test_random_tree_is_arbitrage_free(self):
        """Generated trees always admit an equivalent martingale measure."""
        rng = np.random.default_rng(7)
        for _ in range(5):
            tree = random_tree(rng, periods=2, branches=3, assets=1)
            polytope = martingale_polytope(tree, self.settings)
            assert polytope.interior.equivalent


class TestReplication:
    """Backward recursion under an equivalent density."""

    def test_binomial_call_replicates(self, binomial):
        """The digital (1, 0) costs 1/3 with θ = 2/3."""
        density = MartingaleDensity.checked(binomial, np.array([2 / 3, 4 / 3]))
        result = replicate(binomial, density, np.array([1.0, 0.0]))
        assert result.replicable
        assert result.cost == pytest.approx(1 / 3)
        assert result.strategy.holdings[0, 0] == pytest.approx(2 / 3)
        assert result.max_residual == pytest.approx(0.0, abs=1e-12)

    def test_digital_is_not_replicable_in_trinomial(self, trinomial):
        """The incomplete market leaves a residual."""
        density = martingale_polytope(trinomial).interior
        result = replicate(trinomial, density, np.array([0.0, 0.0, 1.0]))
        assert not result.replicable

    def test_replication_needs_positive_density(self, trinomial):
        """Vertices with zero weights are not admissible pricing densities."""
        with pytest.raises(PreconditionError, match="strictly positive density"):
            replicate(trinomial, MartingaleDensity(np.array([2.0, 0.0, 1.0])), np.zeros(3))

    def test_wealth_is_a_martingale(self, two_period):
        """Self-financing wealth is a Q-martingale node by node."""
        polytope = martingale_polytope(two_period)
        z = polytope.interior.weights
        theta = Strategy.from_flat(two_period, np.array([1.0, -0.5, 0.25]))
        process = wealth_process(two_period, 2.0, theta)
        assert np.nanmax(martingale_residuals(two_period, z, process)) == pytest.approx(0.0, abs=1e-10)
        values = conditional_expectation(two_period, z, process[two_period.atoms])
        assert values[0] == pytest.approx(2.0)


class TestSuperreplicationFunctional:
    """Sublinearity of the superreplication price and the polar cone of the polytope."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = NsDualSettings()
        self.rng = np.random.default_rng(11)

    def random_market(self, index):
        periods = 1 + index % 2
        branches = 2 + index % 2
        return random_tree(self.rng, periods=periods, branches=branches, assets=1)

    @pytest.mark.parametrize("index", range(6))
    def test_sublinear_and_cash_additive(self, index):
        """π(X + X') <= π(X) + π(X'), π(λX) = λπ(X) and π(X + c) = π(X) + c."""
        tree = self.random_market(index)
        polytope = martingale_polytope(tree, self.settings)
        first = self.rng.normal(size=tree.n_atoms)
        second = self.rng.normal(size=tree.n_atoms)

        def price(payoff):
            return superreplication_price(tree, payoff, polytope)

        assert price(first + second) <= price(first) + price(second) + 1e-9
        assert price(2.5 * first) == pytest.approx(2.5 * price(first), abs=1e-9)
        assert price(first + 0.75) == pytest.approx(price(first) + 0.75, abs=1e-9)
        lo, hi = price_bounds(tree, first, polytope)
        assert lo <= hi + 1e-12

    @pytest.mark.parametrize("index", range(6))
    def test_vertices_lie_on_the_polar_boundary(self, index):
        """Every extreme density attains sup E[XY] = 1 over X₊(1)."""
        tree = self.random_market(index)
        assert tree.n_atoms <= 12
        polytope = martingale_polytope(tree, self.settings)
        for vertex in polytope.vertices:
            assert dual_cone_bound(tree, vertex) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("index", range(6))
    def test_densities_off_the_polytope_exceed_one(self, index):
        """A normalised density with a drift is outside the polar cone."""
        tree = self.random_market(index)
        polytope = martingale_polytope(tree, self.settings)
        vertex = polytope.vertices[0]
        tilt = 1.0 + 0.5 * np.sign(tree.increments[:, 0])
        off = vertex * tilt + 0.1
        off = off / float(tree.p @ off)
        assert not polytope_contains(tree, off, self.settings)
        assert dual_cone_bound(tree, off) > 1.0 + 1e-6
