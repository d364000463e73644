import json

import numpy as np
import pytest
from scipy import stats

from errors import DegenerateInputError, InvalidArgumentError, UnreachableAccuracyError
from numerics import composite_gauss
from protocol import (
    InputState,
    MultiplicityState,
    accuracy_radius,
    block_outcome_density,
    coefficients_from_wavefn,
    collapse_multiplicity,
    cramer_rao_report,
    fisher_limit_ratio,
    limiting_cdf,
    outcome_cdf_table,
    outcome_density,
    required_applications,
    save_report,
    rescaled_ks_distance,
    sample_outcomes,
    sample_points,
    sld_fisher,
    spawn_seeds,
    strip_measurement_phases,
    wrap_angle,
)
from spectral import min_tail
from tails import tail_probability
from wavefn import builtin, q_variance


@pytest.fixture
def random_state():
    rng = np.random.default_rng(7)
    return InputState.from_amplitudes(rng.normal(size=9) + 1j * rng.normal(size=9))


class TestStates:
    def test_sample_points(self):
        assert sample_points(3) == pytest.approx([-0.75, -0.25, 0.25, 0.75])

    def test_constant_samples_are_uniform(self, constant):
        state = coefficients_from_wavefn(constant, 4)
        assert state.probabilities == pytest.approx(np.full(5, 0.2))

    def test_norm_enforced(self):
        with pytest.raises(InvalidArgumentError):
            InputState(1, np.array([1.0, 1.0]))
        with pytest.raises(DegenerateInputError):
            InputState.from_amplitudes(np.zeros(3))

    def test_json_payload(self, random_state):
        restored = InputState.from_json(random_state.to_json())
        assert restored.n == 8

    def test_uniform_collapse(self):
        collapsed = collapse_multiplicity(MultiplicityState.uniform(2))
        assert collapsed.coeffs.real == pytest.approx([0.5, np.sqrt(2) / 2, 0.5])

    def test_block_sizes_checked(self):
        with pytest.raises(InvalidArgumentError):
            MultiplicityState.from_blocks(2, [np.ones(1), np.ones(1), np.ones(1)])


class TestOutcomeDensity:
    def test_integrates_to_one(self, random_state):
        x, w = composite_gauss(-np.pi, np.pi, 16)
        assert np.sum(w * outcome_density(random_state, 0.3, x)) == pytest.approx(1.0, abs=1e-12)

    def test_scalar_and_shape(self, random_state):
        assert isinstance(outcome_density(random_state, 0.0, 0.1), float)
        assert outcome_density(random_state, 0.0, np.zeros((2, 3))).shape == (2, 3)

    def test_covariance(self, random_state):
        theta_hat = np.linspace(0.0, 2 * np.pi, 13)
        shifted = outcome_density(random_state, 1.1, theta_hat + 1.1)
        assert shifted == pytest.approx(outcome_density(random_state, 0.0, theta_hat))

    def test_measurement_phases_fold_into_state(self, random_state):
        xi = np.linspace(0.0, 3.0, 9)
        theta_hat = np.linspace(0.0, 6.0, 25)
        with_phases = outcome_density(random_state, 0.4, theta_hat, measurement_phases=xi)
        stripped = outcome_density(strip_measurement_phases(random_state, xi), 0.4, theta_hat)
        assert with_phases == pytest.approx(stripped, abs=1e-14)

    def test_aligned_block_measurement_matches_collapse(self):
        rng = np.random.default_rng(3)
        blocks = [rng.normal(size=s) + 1j * rng.normal(size=s) for s in (1, 4, 6, 4, 1)]
        ms = MultiplicityState.from_blocks(4, blocks)
        theta_hat = rng.uniform(0, 2 * np.pi, 50)
        expected = outcome_density(collapse_multiplicity(ms), 0.2, theta_hat)
        assert block_outcome_density(ms, 0.2, theta_hat) == pytest.approx(expected, abs=1e-12)

    def test_misaligned_seeds_lose_density_mass(self):
        ms = MultiplicityState.uniform(2)
        seeds = [np.ones(1), np.array([1.0, 0.0]), np.ones(1)]
        x, w = composite_gauss(-np.pi, np.pi, 16)
        mass = np.sum(w * block_outcome_density(ms, 0.0, x, seed_blocks=seeds))
        assert mass < 1.0


class TestSampling:
    def test_cdf_table_ends_at_one(self, random_state):
        delta, cdf = outcome_cdf_table(random_state)
        assert delta[0] == pytest.approx(-np.pi) and cdf[-1] == pytest.approx(1.0)
        assert np.all(np.diff(cdf) >= 0)

    def test_seeded_and_on_torus(self, random_state):
        a = sample_outcomes(random_state, 6.0, 500, seed=11)
        b = sample_outcomes(random_state, 6.0, 500, seed=11)
        c = sample_outcomes(random_state, 6.0, 500, seed=12)
        assert np.array_equal(a.estimates, b.estimates)
        assert not np.array_equal(a.estimates, c.estimates)
        assert np.all((a.estimates >= 0) & (a.estimates < 2 * np.pi))
        assert list(a.to_frame().columns) == ["index", "theta_hat"]

    def test_wrap_angle(self):
        assert wrap_angle(np.array([np.pi, -np.pi, 1.5 * np.pi])) == pytest.approx([np.pi, np.pi, -0.5 * np.pi])

    def test_spawned_seeds_distinct(self):
        seeds = spawn_seeds(5, 4)
        assert len(set(seeds)) == 4
        assert seeds == spawn_seeds(5, 4)

    def test_limiting_cdf_shape(self, phi1):
        cdf = limiting_cdf(phi1)
        assert cdf(0.0) == pytest.approx(0.5, abs=1e-5)
        assert cdf(-1e3) < 1e-8 and cdf(1e3) > 1 - 1e-8
        assert np.all(np.diff(cdf(np.linspace(-50, 50, 101))) >= 0)

    @pytest.mark.slow
    @pytest.mark.parametrize("kind,kwargs", [("dirichlet", {"m": 1}), ("prolate", {"R": 4.0})])
    def test_rescaled_outcomes_converge(self, grid512, kind, kwargs):
        f = builtin(kind, grid512, **kwargs)
        cdf = limiting_cdf(f)
        distances = [
            rescaled_ks_distance(sample_outcomes(coefficients_from_wavefn(f, n), 0.7, 100_000, 20240101), f, cdf)
            for n in (25, 100, 400)
        ]
        assert distances[1] < 0.05
        assert distances[2] < 0.02
        assert distances[2] < distances[0]

    def test_single_peak_state_is_uniform(self):
        state = InputState.from_amplitudes(np.eye(7)[3])
        sample = sample_outcomes(state, 1.3, 20_000, seed=17)
        assert stats.kstest(sample.estimates, "uniform", args=(0.0, 2 * np.pi)).pvalue > 1e-3


class TestApplications:
    def test_radius_meets_error_probability(self, phi1):
        radius = accuracy_radius(phi1, 1e-3)
        assert tail_probability(phi1, radius) == pytest.approx(1e-3, rel=1e-5)

    def test_prolate_count(self, psi4):
        assert required_applications(psi4, 0.3, min_tail(4.0)) == 14

    def test_unreachable(self, constant):
        with pytest.raises(UnreachableAccuracyError):
            accuracy_radius(constant, 1e-6)

    def test_bad_probability(self, phi1):
        with pytest.raises(InvalidArgumentError):
            accuracy_radius(phi1, 1.5)

    @pytest.mark.parametrize("error_prob", [0.1, 0.01])
    def test_count_falls_with_width(self, phi1, error_prob):
        counts = [required_applications(phi1, width, error_prob) for width in (0.05, 0.1, 0.2, 0.4)]
        assert all(b <= a for a, b in zip(counts, counts[1:]))

    def test_count_grows_as_error_shrinks(self, phi1):
        counts = [required_applications(phi1, 0.1, eps) for eps in (1e-1, 1e-2, 1e-3)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] > counts[0]


class TestFisher:
    def test_uniform_state(self):
        assert sld_fisher(InputState.from_amplitudes(np.ones(4))) == pytest.approx(5.0)

    def test_limit_ratio(self, phi1):
        ratio = fisher_limit_ratio(coefficients_from_wavefn(phi1, 200))
        assert ratio == pytest.approx(q_variance(phi1), rel=0.02)

    def test_uncertainty_product(self, phi1, constant):
        report = cramer_rao_report(phi1)
        assert report.product == pytest.approx(np.pi ** 2 / 12 - 0.5, abs=1e-8)
        assert report.bounded and report.gap > 0
        assert not cramer_rao_report(constant).bounded

    def test_report_file(self, phi1, tmp_path):
        path = tmp_path / "cramer_rao.json"
        save_report(cramer_rao_report(phi1), path)
        assert json.loads(path.read_text())["label"] == "dirichlet_1"

    def test_bump_margin(self, g3):
        report = cramer_rao_report(g3)
        assert report.gap > 0.05
        assert report.product == pytest.approx(0.312, abs=2e-3)
