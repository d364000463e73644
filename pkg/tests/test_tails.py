import numpy as np
import pytest

from errors import (
    InsufficientDataError,
    InvalidArgumentError,
    NumericalConsistencyError,
    SingularPointError,
)
from numerics import oscillatory_ft
from spectral import min_tail
from tails import (
    TailCurve,
    convolution_bound_check,
    dirichlet_density_closed,
    fit_tail_rate,
    g0_ft,
    g0_ft_closed,
    g3_normalizer,
    g3_product_ft,
    g_family,
    g_ft,
    min_tail_curve,
    segment_exponent,
    tail_curve,
    tail_probability,
)


class TestTailProbability:
    def test_decreasing(self, phi1):
        curve = tail_curve(phi1, [1.0, 2.0, 5.0, 10.0])
        assert np.all(np.diff(curve.tail_probs) < 0)

    def test_prolate_is_minimal_at_its_band(self, grid512, psi4, phi1, g3):
        floor = min_tail(4.0)
        assert tail_probability(psi4, 4.0) == pytest.approx(floor, abs=1e-8)
        assert tail_probability(phi1, 4.0) > floor
        assert tail_probability(g3, 4.0) > floor

    def test_bump_beats_dirichlet_far_out(self, phi1, g3):
        assert tail_probability(g3, 20.0) < tail_probability(phi1, 20.0)

    def test_radius_positive(self, phi1):
        with pytest.raises(InvalidArgumentError):
            tail_probability(phi1, 0.0)

    def test_dirichlet_tail_is_cubic(self, phi1):
        ratio = tail_probability(phi1, 50.0) / tail_probability(phi1, 100.0)
        assert ratio == pytest.approx(8.0, rel=0.02)


class TestTailCurve:
    def test_increasing_tail_rejected(self):
        with pytest.raises(NumericalConsistencyError):
            TailCurve("bad", [1.0, 2.0], [0.1, 0.2])

    def test_flags_below_floor(self):
        curve = TailCurve("tiny", [1.0, 2.0, 3.0], [1e-3, 1e-10, 1e-15])
        assert curve.flagged.tolist() == [False, False, True]
        assert np.isnan(curve.log_tail[2])
        frame = curve.to_frame()
        assert list(frame.columns) == ["f_label", "y", "tail", "log_tail", "flagged"]

    def test_minimum_curve_label(self):
        curve = min_tail_curve([1.0, 2.0])
        assert curve.f_label == "minimum"
        assert curve.tail_probs[1] == pytest.approx(1 - 0.8805, abs=5e-4)

    def test_csv(self, phi1, tmp_path):
        path = tmp_path / "tails.csv"
        tail_curve(phi1, [1.0, 2.0]).save_csv(path)
        assert path.read_text().splitlines()[0] == "f_label,y,tail,log_tail,flagged"


class TestRateFits:
    def test_dirichlet_tail_is_not_exponential(self, phi1):
        fit = fit_tail_rate(tail_curve(phi1, 2.0 ** np.arange(1, 8)), "R")
        assert fit.r_squared < 0.9

    def test_minimum_tail_is_exponential(self):
        fit = fit_tail_rate(min_tail_curve(np.arange(2.0, 15.0, 2.0)), "R")
        assert fit.r_squared > 0.99
        assert 1.8 <= fit.slope <= 2.2

    def test_bump_rate_in_sqrt(self, g3):
        fit = fit_tail_rate(tail_curve(g3, np.linspace(10.0, 60.0, 11)), "sqrtR")
        assert fit.slope >= 2.0

    def test_needs_four_points(self, phi1):
        with pytest.raises(InsufficientDataError):
            fit_tail_rate(tail_curve(phi1, [1.0, 2.0, 3.0]))

    def test_unknown_abscissa(self, phi1):
        with pytest.raises(InvalidArgumentError):
            fit_tail_rate(tail_curve(phi1, [1.0, 2.0, 3.0, 4.0]), "logR")


class TestClosedForms:
    def test_dirichlet_density_peak(self):
        # at y = m pi / 2 the sinc factor is 1
        assert dirichlet_density_closed(2, np.pi) == pytest.approx(2 * np.pi / (2 * np.pi) ** 2)

    def test_dirichlet_needs_integer_mode(self):
        with pytest.raises(InvalidArgumentError):
            dirichlet_density_closed(1.5, 1.0)

    def test_g_family_supports(self):
        x = np.array([-1.0, 0.0, 1.0])
        assert g_family("g0", np.array([-0.5, 0.0]))[0] == 0
        assert g_family("g1", x)[0] == 0
        assert g_family("g2", x)[2] == 0
        assert g_family("g3_unnormalized", x)[1] == pytest.approx(4 * np.exp(-2.0))

    def test_unknown_g(self):
        with pytest.raises(InvalidArgumentError):
            g_family("g4", 0.0)

    def test_transform_scaling(self):
        y = np.array([-7.0, 0.5, 12.0])
        assert g0_ft(y) == pytest.approx(2 * g0_ft_closed(y))
        assert np.abs(g_ft("g1", y)) == pytest.approx(np.abs(g0_ft(y)))
        assert g_ft("g2", y) == pytest.approx(np.exp(1j * y) * g0_ft(-y))

    def test_singular_at_zero(self):
        with pytest.raises(SingularPointError):
            g0_ft(np.array([1.0, 0.0]))

    def test_product_transform_matches_grid(self, grid512):
        y = np.array([5.0, 20.0])
        on_grid = oscillatory_ft(g_family("g3_unnormalized", grid512.nodes), grid512, y)
        assert np.max(np.abs(g3_product_ft(y) - on_grid)) < 1e-10
        assert g3_normalizer(grid512) == pytest.approx(g3_normalizer(), rel=1e-10)


class TestConvolutionBound:
    def test_segment_exponent(self):
        assert segment_exponent(2) == pytest.approx(2.0)
        assert segment_exponent(8) == pytest.approx(2 * np.sqrt(2) * np.sqrt(7 / 8))
        assert segment_exponent(8) < 2 * np.sqrt(2)

    def test_truncation_must_be_admissible(self):
        with pytest.raises(InvalidArgumentError):
            convolution_bound_check([15.0], T=50.0)

    @pytest.mark.slow
    def test_bound_and_exponent(self):
        report = convolution_bound_check([15.0, 20.0, 30.0, 40.0, 60.0], T=800.0, N=8)
        assert report.bound_holds
        assert report.max_relative_gap <= 1e-6
        assert report.exponent_holds
        assert report.passed
        assert len(report.to_json()["rows"]) == 5
