"""Unit tests for utilities, conjugates, elasticity and admissibility."""

import math

import numpy as np
import pytest

from nsdual.config import NsDualSettings
from nsdual.convex import (
    ElasticityEnd,
    Exponential,
    PiecewiseAffineConjugate,
    PiecewiseLinearConcave,
    PowerShortfall,
    QuadraticShortfall,
    Route,
    Shifted,
    Truncated,
    conjugate,
    estimate_asymptotic_elasticity,
    normalize,
    shift,
    truncate,
    validate_admissibility,
)
from nsdual.exceptions import DomainError, ShiftRequiredError, ValidationError

pytestmark = pytest.mark.unit


class TestUtilityFamilies:
    """Values and superdifferentials of the built-in families."""

    def test_exponential_value_and_slope(self):
        """U(x) = -exp(-ηx) with slope η·exp(-ηx)."""
        u = Exponential(2.0)
        assert u.value(0.0) == pytest.approx(-1.0)
        assert u.slope(0.5) == pytest.approx(2.0 * math.exp(-1.0))
        assert u.superdiff(1.0).is_point

    def test_exponential_rejects_nonpositive_eta(self):
        """η must be positive."""
        with pytest.raises(ValidationError, match="eta > 0"):
            Exponential(0.0)

    def test_power_shortfall_is_flat_on_positive_wealth(self):
        """-c(x⁻)^p vanishes for x >= 0 and has slope c·p·|x|^(p-1) below."""
        u = PowerShortfall(3.0, scale=2.0)
        assert u.value(1.5) == 0.0
        assert u.value(-1.0) == pytest.approx(-2.0)
        assert u.slope(-1.0) == pytest.approx(6.0)
        assert u.satiation == 0.0

    def test_piecewise_linear_kink_superdifferential(self):
        """At a kink the superdifferential is the interval between the slopes."""
        u = PiecewiseLinearConcave([(0.0, 2.0), (1.0, 1.0)], tail_slope=0.5, level=3.0)
        interval = u.superdiff(1.0)
        assert interval.lo == pytest.approx(0.5)
        assert interval.hi == pytest.approx(1.0)
        assert u.value(1.0) == pytest.approx(3.0)
        assert u.value(0.0) == pytest.approx(2.0)
        assert u.value(-1.0) == pytest.approx(0.0)

    def test_piecewise_linear_rejects_increasing_slopes(self):
        """Slopes must decrease strictly."""
        with pytest.raises(ValidationError, match="strictly decreasing"):
            PiecewiseLinearConcave([(0.0, 1.0), (1.0, 2.0)])

    def test_shift_moves_argument_and_value(self):
        """Uᵏ(x) = U(x - k1) + k2."""
        base = Exponential(1.0)
        shifted = shift(base, 1.0, 3.0)
        assert isinstance(shifted, Shifted)
        assert shifted.value(1.0) == pytest.approx(2.0)
        assert shift(base, 0.0, 0.0) is base

    def test_truncation_is_minus_infinity_below_level(self):
        """U_n = -inf left of -n and vacuous when the domain is already bounded."""
        u = truncate(Exponential(1.0), 2.0)
        assert isinstance(u, Truncated)
        assert u.value(-3.0) == -math.inf
        assert u.value(-1.0) == pytest.approx(-math.e)
        assert truncate(u, 5.0) is u


class TestConjugates:
    """Closed-form conjugates and their subdifferentials."""

    def test_exponential_conjugate_values(self):
        """Ũ(y) = y ln y - y for η = 1."""
        conj = Exponential(1.0).conjugate()
        assert conj.value(1.0) == pytest.approx(-1.0)
        assert conj.value(math.e) == pytest.approx(0.0, abs=1e-12)
        assert conj.value(0.0) == 0.0
        assert conj.value(-1.0) == math.inf

    def test_exponential_conjugate_subdifferential(self):
        """∂Ũ(y) = {ln y} inside the domain."""
        interval = Exponential(1.0).conjugate().subdiff(2.0)
        assert interval.lo == pytest.approx(math.log(2.0))
        assert interval.is_point

    def test_subdifferential_outside_domain_raises(self):
        """Negative arguments are outside [0, r)."""
        with pytest.raises(DomainError, match="outside the conjugate domain"):
            Exponential(1.0).conjugate().subdiff(-0.5)

    def test_quadratic_conjugate(self):
        """The conjugate of -(x⁻)² is y²/4."""
        conj = QuadraticShortfall().conjugate()
        ys = np.array([0.0, 0.5, 2.0, 4.0])
        np.testing.assert_allclose(conj.value(ys), ys ** 2 / 4.0)

    def test_fenchel_young_inequality(self):
        """Ũ(y) >= U(x) - xy on a grid for every family."""
        xs = np.linspace(-3.0, 3.0, 25)
        ys = np.linspace(0.1, 4.0, 25)
        utilities = [
            Exponential(0.7),
            PowerShortfall(1.5),
            PiecewiseLinearConcave([(-1.0, 3.0), (0.0, 1.0)], tail_slope=0.2),
        ]
        for u in utilities:
            conj = u.conjugate()
            for y in ys:
                bound = np.max(u.value(xs) - xs * y)
                assert conj.value(y) >= bound - 1e-10

    def test_piecewise_linear_conjugate_is_piecewise_affine(self):
        """U(x) = -x⁻ has conjugate 0 on [0, 1] and +inf elsewhere."""
        conj = PiecewiseLinearConcave([(0.0, 1.0)]).conjugate()
        assert isinstance(conj, PiecewiseAffineConjugate)
        assert conj.domain == (0.0, 1.0)
        assert conj.value(0.5) == pytest.approx(0.0)
        assert conj.value(2.0) == math.inf

    def test_truncated_conjugate_becomes_affine(self):
        """Beyond the knee U'(-n) the truncated conjugate is U(-n) + n·y."""
        conj = Truncated(Exponential(1.0), 2.0).conjugate()
        knee = math.exp(2.0)
        assert conj.value(1.0) == pytest.approx(-1.0)
        assert conj.value(10.0) == pytest.approx(-knee + 20.0)
        assert conj.value(knee) == pytest.approx(knee * (2.0 - 1.0))

    def test_shifted_conjugate(self):
        """The conjugate of U(x - k1) + k2 is Ũ(y) - k1·y + k2."""
        base = Exponential(1.0)
        conj = Shifted(base, 0.5, 2.0).conjugate()
        for y in (0.3, 1.0, 2.5):
            assert conj.value(y) == pytest.approx(base.conjugate().value(y) - 0.5 * y + 2.0)

    def test_numeric_conjugate_agrees_with_closed_form(self):
        """The bisection evaluator reproduces y²/4 for the quadratic shortfall."""
        conj = conjugate(QuadraticShortfall(), numeric=True)
        for y in (0.5, 1.0, 3.0):
            assert conj.value(y) == pytest.approx(y * y / 4.0, rel=1e-5, abs=1e-8)

    def test_numeric_slope_limit_uses_smallest_slope(self):
        """A kink on the sampling grid does not end the search for r early."""
        utility = PiecewiseLinearConcave([(-2.0, 3.0), (0.0, 2.0)], tail_slope=1.0)
        lo, hi = utility.superdiff_bounds(np.array([-2.0]))
        assert (lo[0], hi[0]) == (2.0, 3.0)
        conj = conjugate(utility, numeric=True)
        assert conj.r == pytest.approx(3.0)
        assert conj.domain[0] == pytest.approx(1.0)


class TestNormalization:
    """Value shifts making U(0) positive."""

    def test_negative_utility_is_shifted_to_one(self):
        """Exponential utility has U(0) = -1 and needs k2 = 2."""
        normalized, k2 = normalize(Exponential(1.0))
        assert k2 == pytest.approx(2.0)
        assert normalized.value(0.0) == pytest.approx(1.0)

    def test_positive_utility_is_unchanged(self):
        """Nothing to do when U(0) > 0."""
        u = PiecewiseLinearConcave([(0.0, 1.0)], level=2.0)
        normalized, k2 = normalize(u)
        assert k2 == 0.0
        assert normalized is u


class TestElasticity:
    """Grid estimates of the asymptotic elasticity."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = NsDualSettings()

    def test_quadratic_ratio_tends_to_two(self):
        """For y²/4 + 1 the ratio y·Ũ'(y)/Ũ(y) approaches 2."""
        conj = QuadraticShortfall().conjugate().shifted(0.0, 1.0)
        est = estimate_asymptotic_elasticity(conj, ElasticityEnd.INFINITY, self.settings)
        assert est.finite
        assert est.tail_ratio == pytest.approx(2.0, abs=1e-9)
        assert est.sup_ratio <= 2.0 + 1e-9

    def test_unshifted_conjugate_requires_shift(self):
        """y ln y - y is negative on part of the grid."""
        with pytest.raises(ShiftRequiredError, match="shift the utility first"):
            estimate_asymptotic_elasticity(Exponential(1.0).conjugate(), ElasticityEnd.INFINITY, self.settings)

    def test_finite_right_end_is_divergent(self):
        """A finite r rules out a finite elasticity at infinity."""
        conj = PiecewiseLinearConcave([(0.0, 1.0)], level=1.0).conjugate()
        est = estimate_asymptotic_elasticity(conj, ElasticityEnd.INFINITY, self.settings)
        assert est.divergent
        assert not est.finite


class TestAdmissibility:
    """Route selection for the duality results."""

    def test_exponential_takes_unbounded_route(self):
        """Exponential utility qualifies on all of R."""
        report = validate_admissibility(Exponential(1.0))
        assert report.passed
        assert report.route == Route.UNBOUNDED
        assert report.normalization_shift == pytest.approx(2.0)

    def test_quadratic_shortfall_is_admissible(self):
        """Satiated utilities with growing slopes still qualify."""
        report = validate_admissibility(QuadraticShortfall())
        assert report.route == Route.UNBOUNDED
        assert report.satiation == 0.0

    def test_truncated_utility_takes_bounded_route(self):
        """Truncation moves the utility onto the bounded-below route."""
        report = validate_admissibility(Truncated(Exponential(1.0), 4.0))
        assert report.route == Route.BOUNDED_BELOW

    def test_negative_part_utility_is_rejected(self):
        """U(x) = -x⁻ attains its largest slope r = 1."""
        report = validate_admissibility(PiecewiseLinearConcave([(0.0, 1.0)]))
        assert not report.passed
        assert report.r_attained
        assert any("attained" in reason for reason in report.reasons)
