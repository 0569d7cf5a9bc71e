"""Unit tests for loss functions and the application preconditions."""

import numpy as np
import pytest

from nsdual.applications import PiecewiseLinearLoss, PowerLoss, indifference_price, shortfall_risk
from nsdual.convex import Exponential, PiecewiseLinearConcave, PowerShortfall, QuadraticShortfall, Truncated
from nsdual.exceptions import InadmissibleError, PreconditionError, ValidationError
from nsdual.market import Claim

pytestmark = pytest.mark.unit


class TestPowerLoss:
    """ℓ(s) = c·s^p."""

    def test_values_and_subgradient(self):
        """Negative shortfalls are clipped to zero."""
        loss = PowerLoss(2.0, scale=3.0)
        assert loss.value(2.0) == pytest.approx(12.0)
        assert loss.value(-1.0) == 0.0
        assert loss.subgradient(2.0) == pytest.approx(12.0)
        assert loss.at_zero == 0.0
        assert loss.shape_ok()

    def test_utility_is_power_shortfall(self):
        """p > 1 maps onto the power shortfall family."""
        u = PowerLoss(2.0).utility()
        assert isinstance(u, PowerShortfall)
        assert u.value(-0.5) == pytest.approx(-0.25)

    def test_linear_loss_is_flagged(self):
        """p = 1 is linear near infinity and maps to -x⁻."""
        loss = PowerLoss(1.0)
        assert loss.linear_near_infinity
        assert isinstance(loss.utility(), PiecewiseLinearConcave)

    def test_rejects_small_exponent(self):
        """p < 1 is not convex."""
        with pytest.raises(ValidationError, match="p >= 1"):
            PowerLoss(0.5)


class TestPiecewiseLinearLoss:
    """Convex piecewise-linear losses."""

    def test_values(self):
        """Slope 1 up to 1, slope 3 beyond."""
        loss = PiecewiseLinearLoss([(0.0, 1.0), (1.0, 3.0)], level=0.5)
        np.testing.assert_allclose(loss.value(np.array([0.0, 1.0, 2.0])), [0.5, 1.5, 4.5])
        assert loss.subgradient(1.5) == pytest.approx(3.0)
        assert loss.linear_near_infinity
        assert loss.shape_ok()

    def test_utility_mirrors_loss(self):
        """U(x) = -ℓ(x⁻)."""
        loss = PiecewiseLinearLoss([(0.0, 1.0), (1.0, 3.0)], level=0.5)
        u = loss.utility()
        xs = np.array([-2.0, -1.0, -0.5, 0.0, 1.0])
        np.testing.assert_allclose(u.value(xs), -loss.value(np.maximum(-xs, 0.0)))

    def test_kinks_must_start_at_zero(self):
        """The first kink sits at s = 0."""
        with pytest.raises(ValidationError, match="start at 0"):
            PiecewiseLinearLoss([(1.0, 1.0)])

    def test_slopes_must_increase(self):
        """Convexity needs increasing slopes."""
        with pytest.raises(ValidationError, match="strictly increasing"):
            PiecewiseLinearLoss([(0.0, 2.0), (1.0, 1.0)])

    def test_describe(self):
        """The description round-trips the kinks."""
        loss = PiecewiseLinearLoss([(0.0, 1.0), (2.0, 4.0)])
        assert loss.describe() == {"family": "piecewise_linear", "kinks": [[0.0, 1.0], [2.0, 4.0]], "level": 0.0}


class TestPreconditions:
    """Applications refuse inputs outside their scope."""

    def test_shortfall_rejects_linear_loss(self, trinomial, digital_up):
        """Losses linear near infinity are not covered."""
        with pytest.raises(InadmissibleError, match="linear near infinity"):
            shortfall_risk(trinomial, PowerLoss(1.0), digital_up, 0.2)

    def test_indifference_needs_unbounded_route(self, binomial):
        """Truncated utilities take the bounded-below route and are refused."""
        claim = Claim.for_tree(binomial, [1.0, 0.0])
        with pytest.raises(PreconditionError, match="all of R"):
            indifference_price(binomial, Truncated(Exponential(1.0), 4.0), claim, 1.0)

    def test_quadratic_shortfall_is_its_own_loss(self):
        """The quadratic loss and the quadratic shortfall utility coincide."""
        xs = np.linspace(-2.0, 2.0, 9)
        np.testing.assert_allclose(PowerLoss(2.0).utility().value(xs), QuadraticShortfall().value(xs))
