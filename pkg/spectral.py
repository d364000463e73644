"""Eigenproblems behind the optimal designs: the Dirichlet problem that minimizes
the limiting variance and the band-concentration operator whose top
eigenfunction is the prolate spheroidal wave function."""
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import legendre as L
from scipy import linalg

from config import (
    DEFAULT_GRID_POINTS,
    DEFAULT_RULE,
    EIGEN_RESIDUAL_TOL,
    JSON_INDENT,
    MIN_TAIL_FLOOR,
    ODE_INNER_FRACTION,
    ODE_RESIDUAL_REJECT,
)
from errors import (
    ConvergenceError,
    InvalidArgumentError,
    NumericalConsistencyError,
    ResolutionExceededError,
    SolutionRejectedError,
)
from numerics import SymmetricOperator, eigh_top, integrate, log_linear_fit, make_grid
from wavefn import WaveFunction, normalize

logger = logging.getLogger(__name__)

GALERKIN_MAX_MODES = 96
DIRICHLET_AGREEMENT = 1e-6
ONE_MINUS_X2 = L.Legendre([2.0 / 3.0, 0.0, -2.0 / 3.0])


# =========================================================
# DIRICHLET PROBLEM
# =========================================================
class DirichletMinimum(NamedTuple):
    value: float
    argmin: WaveFunction

    @property
    def closed_form(self):
        return np.pi ** 2 / 4.0


def _shen_to_legendre(u):
    # sum_k u_k (P_k - P_{k+2}) as plain Legendre coefficients
    coef = np.zeros(u.size + 2, dtype=u.dtype)
    coef[:-2] += u
    coef[2:] -= u
    return coef


def _galerkin(grid, count):
    modes = max(count + 8, min(grid.size, GALERKIN_MAX_MODES))
    k = np.arange(modes)
    stiffness = np.diag(4.0 * k + 6.0)
    mass = np.diag(2.0 / (2 * k + 1) + 2.0 / (2 * k + 5))
    off = -2.0 / (2 * k[:-2] + 5)
    mass += np.diag(off, 2) + np.diag(off, -2)
    try:
        vals, vecs = linalg.eigh(stiffness, mass, subset_by_index=[0, count - 1])
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"Dirichlet Galerkin solve failed: {exc}") from exc
    return vals, vecs


def dirichlet_spectrum(grid, count=5):
    """Lowest eigenvalues of -d^2/dx^2 on [-1, 1] with zero boundary values."""
    if int(count) != count or count < 1:
        raise InvalidArgumentError(f"count must be a positive integer, got {count!r}")
    vals, _ = _galerkin(grid, int(count))
    return vals


def dirichlet_minimum(grid):
    """Minimum of the limiting variance and its minimizer, checked against (pi/2)^2."""
    vals, vecs = _galerkin(grid, 1)
    value = float(vals[0])
    closed = np.pi ** 2 / 4.0
    if abs(value - closed) > DIRICHLET_AGREEMENT * closed:
        raise NumericalConsistencyError(
            f"Galerkin minimum {value:.12g} disagrees with the closed form {closed:.12g}"
        )
    samples = L.legval(grid.nodes, _shen_to_legendre(vecs[:, 0]))
    centre = np.argmin(np.abs(grid.nodes))
    samples = samples * np.sign(samples[centre])
    return DirichletMinimum(value, normalize(samples, grid, "dirichlet_min"))


# =========================================================
# CONCENTRATION OPERATOR
# =========================================================
def concentration_operator(R, grid):
    if not R > 0:
        raise InvalidArgumentError(f"band half-width must be positive, got {R!r}")
    if R > grid.y_max:
        raise ResolutionExceededError(R, grid.y_max)
    diff = grid.nodes[:, None] - grid.nodes[None, :]
    kernel = (R / np.pi) * np.sinc(R * diff / np.pi)
    return SymmetricOperator.from_kernel(kernel, grid)


@dataclass(frozen=True, eq=False)
class ProlateSolution:
    R: float
    eigenvalue: float
    complement: float
    xi: float
    psi: WaveFunction
    ode_residual: float
    grid_size: int
    second_eigenvalue: Optional[float] = None
    second: Optional[WaveFunction] = None

    def to_json(self):
        return {
            "R": self.R,
            "lambda": self.eigenvalue,
            "one_minus_lambda": self.complement,
            "xi": self.xi,
            "ode_residual": self.ode_residual,
            "grid_size": self.grid_size,
            "psi": self.psi.to_json(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=JSON_INDENT, sort_keys=True)


def _unweight(vector, grid, label):
    psi = vector / np.sqrt(grid.weights)
    centre = np.argmin(np.abs(grid.nodes))
    pivot = psi[centre]
    if abs(pivot) < 1e-300:
        pivot = psi[np.argmax(np.abs(psi))]
    psi = psi * (abs(pivot) / pivot)
    return normalize(psi, grid, label)


def _sturm_liouville(psi, R):
    """Rayleigh quotient of -d/dx (1-x^2) d/dx + R^2 x^2 and the relative residual
    on the inner nodes."""
    grid = psi.grid
    x = grid.nodes
    series = psi.series
    d1 = series.deriv()
    xi = float(
        integrate((1 - x ** 2) * np.abs(d1(x)) ** 2, grid)
        + R * R * integrate(x ** 2 * np.abs(psi.values) ** 2, grid)
    )
    flux = (ONE_MINUS_X2 * d1).deriv()
    applied = -flux(x) + R * R * x ** 2 * series(x)
    inner = np.abs(x) <= ODE_INNER_FRACTION
    w = grid.weights[inner]
    r = applied[inner] - xi * series(x[inner])
    num = np.sqrt(np.sum(w * np.abs(r) ** 2))
    den = np.sqrt(np.sum(w * np.abs(xi * series(x[inner])) ** 2))
    return xi, float(num / den)


def solve_prolate(R, grid, tol=EIGEN_RESIDUAL_TOL):
    """Top eigenpair of the concentration operator at band half-width R."""
    op = concentration_operator(R, grid)
    k = 2 if op.dim >= 2 else 1
    pairs = eigh_top(op, k, tol)
    top = pairs[0]
    if not 0.0 < top.value < 1.0 or not top.complement > 0.0:
        raise NumericalConsistencyError(f"top eigenvalue {top.value!r} at R={R} is not in (0, 1)")
    psi = _unweight(top.vector, grid, f"prolate_{R:g}")
    xi, residual = _sturm_liouville(psi, R)
    logger.debug(
        "prolate R=%g n=%d lambda=%.15g 1-lambda=%.3e xi=%.10g residual=%.2e",
        R, grid.size, top.value, top.complement, xi, residual,
    )
    if residual > ODE_RESIDUAL_REJECT:
        raise SolutionRejectedError(
            f"prolate solution at R={R} fails the ODE check (residual {residual:.2e})",
            diagnostic={"R": R, "grid_size": grid.size, "ode_residual": residual, "xi": xi},
        )
    second_value, second = None, None
    if k == 2:
        second_value = pairs[1].value
        second = _unweight(pairs[1].vector, grid, f"prolate_{R:g}_second")
    return ProlateSolution(
        R=float(R),
        eigenvalue=top.value,
        complement=top.complement,
        xi=xi,
        psi=psi,
        ode_residual=residual,
        grid_size=grid.size,
        second_eigenvalue=second_value,
        second=second,
    )


# =========================================================
# LAMBDA(R)
# =========================================================
@lru_cache(maxsize=None)
def default_grid():
    return make_grid(DEFAULT_RULE, DEFAULT_GRID_POINTS)


@lru_cache(maxsize=None)
def _top_on_default_grid(R):
    op = concentration_operator(R, default_grid())
    pair = eigh_top(op, 1)[0]
    return pair.value, pair.complement


def lambda_of_R(R):
    """Top concentration eigenvalue on the default grid.

    Memoized through functools.lru_cache, whose lookups and insertions are
    thread-safe; two threads missing on the same R may both compute it.
    """
    if not R > 0:
        raise InvalidArgumentError(f"band half-width must be positive, got {R!r}")
    return _top_on_default_grid(float(R))[0]


def min_tail(R):
    """1 - lambda(R), taken from I - A once it drops below the complement switch."""
    if not R > 0:
        raise InvalidArgumentError(f"band half-width must be positive, got {R!r}")
    return _top_on_default_grid(float(R))[1]


def complement_asymptotic(R):
    if not R > 0:
        raise InvalidArgumentError(f"band half-width must be positive, got {R!r}")
    return 4.0 * np.sqrt(np.pi * R) * np.exp(-2.0 * R) * (1.0 - 3.0 / (32.0 * R))


def lambda_asymptotic(R):
    return 1.0 - complement_asymptotic(R)


def min_tail_exponential_rate(R_values, source="eigensolver"):
    """Fitted slope of -log(1 - lambda(R)) against R."""
    R_values = np.asarray(R_values, dtype=float)
    if R_values.ndim != 1 or np.any(R_values <= 0):
        raise InvalidArgumentError("R_values must be a 1-D array of positive numbers")
    if source == "eigensolver":
        tails = np.array([min_tail(R) for R in R_values])
    elif source == "asymptotic":
        tails = np.array([complement_asymptotic(R) for R in R_values])
    else:
        raise InvalidArgumentError(f"unknown source {source!r}")
    return log_linear_fit(R_values, tails, MIN_TAIL_FLOOR, what="minimum tails")
