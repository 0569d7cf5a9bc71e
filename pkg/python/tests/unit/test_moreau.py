"""Unit tests for the quadratic inf-convolution."""

import numpy as np
import pytest

from nsdual.convex import Exponential, PiecewiseLinearConcave, PowerShortfall, QuadraticShortfall, Truncated
from nsdual.exceptions import ValidationError
from nsdual.moreau import InfConvolution, elasticity_transfer_check, infconv_deriv, infconv_value, prox_point

pytestmark = pytest.mark.unit


class TestQuadraticSmoothing:
    """Closed forms for Ũ(y) = y²/4."""

    def setup_method(self):
        """Set up test fixtures."""
        self.conj = QuadraticShortfall().conjugate()

    def test_prox_point_at_level_one(self):
        """z₁(1) = 2/3."""
        ic = InfConvolution(self.conj, 1.0)
        assert prox_point(ic, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-8)

    @pytest.mark.parametrize("n", [1.0, 10.0, 100.0])
    def test_value_and_derivative_closed_form(self, n):
        """Ũₙ(y) = ny²/(2(2n+1)) and DŨₙ(y) = ny/(2n+1) for y >= 0."""
        ic = InfConvolution(self.conj, n)
        ys = np.array([0.25, 1.0, 3.0])
        np.testing.assert_allclose(infconv_value(ic, ys), n * ys ** 2 / (2 * (2 * n + 1)), rtol=1e-7)
        np.testing.assert_allclose(infconv_deriv(ic, ys), n * ys / (2 * n + 1), rtol=1e-7)

    def test_negative_arguments_project_to_zero(self):
        """For y < 0 the proximal point is 0 and Ũₙ(y) = ny²/2."""
        ic = InfConvolution(self.conj, 4.0)
        value, deriv, z = ic.evaluate(np.array([-1.0, -0.5]))
        np.testing.assert_allclose(z, 0.0)
        np.testing.assert_allclose(value, [2.0, 0.5])
        np.testing.assert_allclose(deriv, [-4.0, -2.0])

    def test_values_increase_to_conjugate(self):
        """Ũₙ <= Ũ on [0, inf) and increases with n."""
        ys = np.linspace(0.0, 3.0, 7)
        previous = None
        for n in (1.0, 10.0, 100.0, 1000.0):
            values = InfConvolution(self.conj, n).value(ys)
            assert np.all(values <= self.conj.value(ys) + 1e-12)
            if previous is not None:
                assert np.all(values >= previous - 1e-12)
            previous = values


class TestPiecewiseAffineSmoothing:
    """Exact proximal points for piecewise-affine conjugates."""

    def setup_method(self):
        """Set up test fixtures."""
        self.conj = PiecewiseLinearConcave([(0.0, 1.0)]).conjugate()

    def test_prox_clips_to_domain(self):
        """The conjugate of -x⁻ is the indicator of [0, 1]; the prox is a clip."""
        ic = InfConvolution(self.conj, 2.0)
        value, deriv, z = ic.evaluate(np.array([-1.0, 0.5, 3.0]))
        np.testing.assert_allclose(z, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(value, [1.0, 0.0, 4.0])
        np.testing.assert_allclose(deriv, [-2.0, 0.0, 4.0])


class TestInfConvolutionChecks:
    """Validation and growth diagnostics."""

    def test_rejects_nonpositive_level(self):
        """n must be positive."""
        with pytest.raises(ValidationError, match="Smoothing level must be positive"):
            InfConvolution(QuadraticShortfall().conjugate(), 0.0)

    def test_rejects_negative_offset(self):
        """β must be nonnegative."""
        with pytest.raises(ValidationError, match="beta must be nonnegative"):
            InfConvolution(QuadraticShortfall().conjugate(), 1.0, beta=-1.0)

    def test_at_level_keeps_offset(self):
        """Changing the level keeps the conjugate and β."""
        ic = InfConvolution(QuadraticShortfall().conjugate(), 1.0, beta=0.5)
        other = ic.at_level(10.0)
        assert other.n == 10.0
        assert other.beta == 0.5
        assert other.conj is ic.conj

    def test_quadratic_base_growth(self):
        """y²/4 satisfies Ũ(μy) <= μ^(-γ)Ũ(y) for μ <= 1 once γ >= -2."""
        ic = InfConvolution(QuadraticShortfall().conjugate(), 1.0)
        assert ic.base_growth_check(2.0, 1.0).passed
        assert ic.nonnegativity_near_zero(1.0)

    def test_transfer_certificate_for_shifted_exponential(self):
        """A uniform witness exists for the normalised exponential conjugate."""
        conj = Exponential(1.0).conjugate().shifted(0.0, 2.0)
        cert = elasticity_transfer_check(InfConvolution(conj, 1.0), y0=1.0)
        assert cert.passed
        assert cert.constant is not None and cert.constant >= 0.0
        assert cert.gamma in cert.tried_gammas


class TestClosedFormProximalPoints:
    """Closed-form proximal points agree with bisection on the subgradient equation."""

    CASES = {
        "exponential": lambda: Exponential(1.0).conjugate(),
        "exponential_eta": lambda: Exponential(0.25).conjugate(),
        "quadratic": lambda: QuadraticShortfall().conjugate(),
        "power_1_5": lambda: PowerShortfall(1.5, 2.0).conjugate(),
        "shifted_exponential": lambda: Exponential(1.0).conjugate().shifted(0.5, 2.0),
        "truncated_exponential": lambda: Truncated(Exponential(1.0), 2.0).conjugate(),
        "truncated_quadratic": lambda: Truncated(QuadraticShortfall(), 1.0).conjugate(),
    }

    @pytest.mark.parametrize("beta", [0.0, 0.75])
    @pytest.mark.parametrize("n", [1.0, 10.0, 1e3, 1e6])
    @pytest.mark.parametrize("name", sorted(CASES))
    def test_matches_bisection(self, name, n, beta):
        """Both routes land on the same zₙ(y)."""
        conj = self.CASES[name]()
        ic = InfConvolution(conj, n, beta)
        ys = np.array([-1.0, 0.0, 0.05, 0.5, 1.0, 3.0, 20.0])
        closed = conj.prox(ys, n, beta)
        assert closed is not None
        np.testing.assert_allclose(ic.prox_point(ys), closed)
        np.testing.assert_allclose(closed, ic._prox_bisect(ys), rtol=1e-8, atol=1e-10)

    def test_power_without_closed_form_uses_bisection(self):
        """p = 3 has no closed form and still solves the subgradient equation."""
        conj = PowerShortfall(3.0).conjugate()
        ys = np.array([0.5, 1.0, 2.0])
        assert conj.prox(ys, 10.0, 0.0) is None
        z = InfConvolution(conj, 10.0).prox_point(ys)
        lo, _ = conj.subdiff_bounds(z)
        np.testing.assert_allclose(lo + 10.0 * (z - ys), 0.0, atol=1e-8)


class TestSmoothingProperties:
    """Convergence, smoothness and the proximity bound of the smoothed family."""

    FAMILIES = {
        "exponential": lambda: Exponential(1.0).conjugate().shifted(0.0, 2.0),
        "quadratic": lambda: QuadraticShortfall().conjugate(),
    }

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_prox_point_converges_to_argument(self, name):
        """|zₙ(y) - y| shrinks along n and is below 10⁻² at n = 10⁶."""
        conj = self.FAMILIES[name]()
        ys = np.array([0.25, 0.5, 1.0, 2.0])
        previous = None
        for n in (1.0, 10.0, 1e2, 1e3, 1e6):
            distance = np.abs(InfConvolution(conj, n).prox_point(ys) - ys)
            if previous is not None:
                assert np.all(distance <= previous + 1e-12)
            previous = distance
        assert np.all(previous <= 1e-2)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_values_increase_to_conjugate(self, name):
        """Ũₙ(y) ↑ Ũ(y) for n up to 10⁶."""
        conj = self.FAMILIES[name]()
        ys = np.array([0.1, 0.5, 1.0, 2.0, 4.0])
        target = np.asarray(conj.value(ys))
        previous = None
        for n in (1.0, 10.0, 1e2, 1e3, 1e6):
            values = InfConvolution(conj, n).value(ys)
            assert np.all(values <= target + 1e-10)
            if previous is not None:
                assert np.all(values >= previous - 1e-10)
            previous = values
        np.testing.assert_allclose(previous, target, atol=1e-5)

    @pytest.mark.parametrize("n", [1.0, 10.0, 100.0])
    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_derivative_matches_finite_differences(self, name, n):
        """DŨₙ equals the central difference of Ũₙ on 41 grid points."""
        ic = InfConvolution(self.FAMILIES[name](), n)
        ys = np.linspace(-0.99, 4.01, 41)
        h = 1e-5
        central = (ic.value(ys + h) - ic.value(ys - h)) / (2.0 * h)
        np.testing.assert_allclose(ic.derivative(ys), central, atol=1e-5)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_derivative_lies_in_subdifferential(self, name):
        """DŨₙ(y) ∈ ∂Ũ(zₙ(y))."""
        conj = self.FAMILIES[name]()
        ic = InfConvolution(conj, 10.0)
        ys = np.linspace(0.1, 4.0, 41)
        _, deriv, z = ic.evaluate(ys)
        lo, hi = conj.subdiff_bounds(z)
        assert np.all(deriv >= lo - 1e-7)
        assert np.all(deriv <= hi + 1e-7)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_proximity_bound(self, name):
        """|zₙ(y) - y|² <= (4/n)[Ũₙ(y) - βy + y + C] with C calibrated at n = 1."""
        ic = InfConvolution(self.FAMILIES[name](), 1.0)
        check = ic.proximity_bound_check([0.25, 0.5, 1.0, 2.0], x=1.0)
        assert check.passed, check.worst_slack
        assert check.constant >= 0.0
        assert check.levels == (1.0, 10.0, 100.0, 1000.0)
