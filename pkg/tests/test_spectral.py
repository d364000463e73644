import json

import numpy as np
import pytest

from errors import InvalidArgumentError, ResolutionExceededError
from numerics import make_grid
from spectral import (
    complement_asymptotic,
    concentration_operator,
    dirichlet_minimum,
    dirichlet_spectrum,
    lambda_asymptotic,
    lambda_of_R,
    min_tail,
    min_tail_exponential_rate,
    solve_prolate,
)
from wavefn import builtin, window_probability


class TestDirichlet:
    def test_spectrum(self, grid512):
        expected = (np.pi * np.arange(1, 6) / 2) ** 2
        assert dirichlet_spectrum(grid512, 5) == pytest.approx(expected, rel=1e-8)

    def test_minimizer_is_first_mode(self, grid512, phi1):
        minimum = dirichlet_minimum(grid512)
        assert minimum.value == pytest.approx(minimum.closed_form, rel=1e-8)
        assert minimum.argmin.label == "dirichlet_min"
        assert np.max(np.abs(minimum.argmin.values - phi1.values)) < 1e-8

    def test_count_validated(self, grid512):
        with pytest.raises(InvalidArgumentError):
            dirichlet_spectrum(grid512, 0)


class TestConcentrationOperator:
    def test_trace_is_band_over_pi(self, grid512):
        # kernel diagonal R/pi integrated over [-1, 1]
        op = concentration_operator(3.0, grid512)
        assert op.trace == pytest.approx(6.0 / np.pi, rel=1e-12)

    def test_band_beyond_grid(self):
        with pytest.raises(ResolutionExceededError):
            concentration_operator(50.0, make_grid("gauss_legendre", 64))


class TestProlate:
    def test_known_eigenvalue(self, grid512):
        solution = solve_prolate(2.0, grid512)
        assert solution.eigenvalue == pytest.approx(0.8805, abs=5e-4)
        assert solution.second_eigenvalue < solution.eigenvalue

    def test_solution_fields(self, grid512):
        solution = solve_prolate(4.0, grid512)
        assert solution.psi.norm_sq == pytest.approx(1.0, abs=1e-12)
        assert solution.psi.is_real
        assert solution.ode_residual < 1e-5
        assert solution.complement == pytest.approx(1.0 - solution.eigenvalue, rel=1e-6)
        payload = solution.to_json()
        assert payload["lambda"] == solution.eigenvalue
        assert payload["grid_size"] == 512

    def test_psi_even_and_positive_at_centre(self, psi4):
        values = psi4.values.real
        assert values[np.argmin(np.abs(psi4.grid.nodes))] > 0
        assert np.max(np.abs(values - values[::-1])) < 1e-10

    def test_window_equals_eigenvalue(self, grid512, psi4):
        assert window_probability(psi4, -4.0, 4.0) == pytest.approx(lambda_of_R(4.0), abs=1e-8)

    def test_psi_maximizes_window(self, psi4, phi1, g3):
        best = window_probability(psi4, -4.0, 4.0)
        for other in (phi1, g3):
            assert window_probability(other, -4.0, 4.0) < best

    def test_grid_converged(self):
        coarse = solve_prolate(3.0, make_grid("gauss_legendre", 128))
        fine = solve_prolate(3.0, make_grid("gauss_legendre", 256))
        assert coarse.eigenvalue == pytest.approx(fine.eigenvalue, abs=1e-12)

    def test_psi_stable_across_grids(self):
        coarse = solve_prolate(3.0, make_grid("gauss_legendre", 256)).psi
        fine = solve_prolate(3.0, make_grid("gauss_legendre", 512)).psi
        x = np.linspace(-1.0, 1.0, 201)
        assert np.max(np.abs(coarse.evaluate(x) - fine.evaluate(x))) < 1e-8

    @pytest.mark.parametrize("kind,kwargs", [
        ("constant", {}),
        ("dirichlet", {"m": 2}),
        ("prolate", {"R": 2.0}),
        ("prolate", {"R": 8.0}),
    ])
    def test_psi_beats_other_functions(self, grid512, psi4, kind, kwargs):
        other = builtin(kind, grid512, **kwargs)
        assert window_probability(other, -4.0, 4.0) < window_probability(psi4, -4.0, 4.0)

    def test_shifted_window_maximizer(self, grid512):
        # [R1, R2] of width 6 is reached by modulating psi_3 with c = -(R1 + R2) / 2
        psi3 = solve_prolate(3.0, grid512).psi
        shifted = builtin("modulated", grid512, base=psi3, c=-(1.0 + 7.0) / 2)
        assert window_probability(shifted, 1.0, 7.0) == pytest.approx(lambda_of_R(3.0), abs=1e-9)
        wrong_sign = builtin("modulated", grid512, base=psi3, c=(1.0 + 7.0) / 2)
        assert window_probability(wrong_sign, 1.0, 7.0) < 0.01


class TestLambdaOfR:
    def test_increasing_in_R(self):
        values = [lambda_of_R(R) for R in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_complement_near_one(self):
        assert min_tail(10.0) == pytest.approx(4.58e-8, rel=0.05)
        assert lambda_of_R(12.0) > 1 - 1e-8

    def test_asymptotic_agreement(self):
        for R in (8.0, 10.0):
            assert min_tail(R) / complement_asymptotic(R) == pytest.approx(1.0, abs=0.15)
        assert 1.0 - lambda_asymptotic(10.0) == pytest.approx(1.0 - lambda_of_R(10.0), rel=0.15)

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidArgumentError):
            lambda_of_R(0.0)

    @pytest.mark.slow
    def test_exponential_rate(self):
        fit = min_tail_exponential_rate([4.0, 6.0, 8.0, 10.0])
        assert 1.85 <= fit.slope <= 2.0
        assert fit.r_squared > 0.999

    def test_asymptotic_rate(self):
        fit = min_tail_exponential_rate([4.0, 6.0, 8.0, 10.0], source="asymptotic")
        assert 1.85 <= fit.slope <= 2.0

    def test_small_band(self):
        assert lambda_of_R(0.1) < 0.2 / np.pi


class TestProlateExport:
    def test_save(self, grid512, tmp_path):
        path = tmp_path / "prolate.json"
        solve_prolate(2.0, grid512).save(path)
        payload = json.loads(path.read_text())
        assert payload["R"] == 2.0
        assert len(payload["psi"]["re"]) == 512
