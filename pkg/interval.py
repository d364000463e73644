"""Asymptotic interval estimation on the phase torus: R(beta), the prolate
design of half-width 2 R(beta) / n, centred intervals and Monte Carlo coverage."""
import json
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config import (
    BETA_MIN,
    COMPLEMENT_SWITCH,
    CSV_FLOAT_FORMAT,
    JSON_INDENT,
    NODES_PER_PERIOD,
    R_MAX,
)
from errors import InvalidArgumentError, OutOfRangeError, ResolutionExceededError
from numerics import find_root
from protocol import InputState, coefficients_from_wavefn, sample_outcomes, wrap_angle
from spectral import default_grid, lambda_of_R, min_tail, solve_prolate

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
BETA_TOL = 1e-8
MIN_COVERAGE_TRIALS = 10_000


# =========================================================
# TYPES
# =========================================================
@dataclass(frozen=True, eq=False)
class IntervalDesign:
    """Half-width is in theta units: |z| <= R with z = n (theta_hat - theta) / 2."""

    beta: float
    R_beta: float
    n: int
    state: InputState
    half_width: float

    def to_json(self):
        return {
            "beta": self.beta,
            "R_beta": self.R_beta,
            "n": self.n,
            "half_width": self.half_width,
            "state": self.state.to_json(),
        }


@dataclass(frozen=True)
class TorusInterval:
    L: float
    U: float
    degenerate: bool = False

    def __post_init__(self):
        for name in ("L", "U"):
            value = getattr(self, name)
            if not 0.0 <= value < TWO_PI:
                raise InvalidArgumentError(f"{name} = {value!r} is not in [0, 2pi)")

    @property
    def width(self):
        if self.degenerate:
            return TWO_PI
        if self.L < self.U:
            return self.U - self.L
        return self.U + TWO_PI - self.L

    def contains(self, theta):
        """Closed arc membership, angles taken mod 2 pi."""
        if self.degenerate:
            return np.ones(np.shape(theta), dtype=bool)[()] if np.ndim(theta) else True
        offset = np.mod(np.asarray(theta, dtype=float) - self.L, TWO_PI)
        inside = (offset <= self.width + 1e-12) | (offset >= TWO_PI - 1e-12)
        return inside[()] if inside.ndim == 0 else inside


@dataclass(frozen=True)
class CoverageReport:
    beta: float
    n: int
    trials: int
    coverage: float
    stderr: float
    half_width: float

    def to_frame(self):
        return pd.DataFrame([{
            "beta": self.beta,
            "n": self.n,
            "trials": self.trials,
            "coverage": self.coverage,
            "stderr": self.stderr,
        }])


# =========================================================
# R(BETA)
# =========================================================
def r_of_beta(beta, tol=BETA_TOL):
    """Root of lambda(R) = beta, bracket grown geometrically up to R_MAX."""
    if not BETA_MIN < beta < 1.0 - 1e-8:
        raise OutOfRangeError(f"beta = {beta!r} outside ({BETA_MIN}, 1 - 1e-8)")
    if lambda_of_R(R_MAX) < beta:
        raise OutOfRangeError(
            f"beta = {beta!r} exceeds lambda(R_max) = {lambda_of_R(R_MAX):.15g} at R_max = {R_MAX}"
        )
    lo, hi = 0.25, 0.5
    while lambda_of_R(lo) > beta:
        lo, hi = lo / 2.0, lo
    while lambda_of_R(hi) < beta:
        lo, hi = hi, min(2.0 * hi, R_MAX)
    complement = 1.0 - beta
    if complement < COMPLEMENT_SWITCH:
        # work on -log(1 - lambda) so the root keeps relative accuracy near 1
        root = find_root(lambda R: -np.log(min_tail(R)), -np.log(complement), (lo, hi),
                         tol=tol / complement)
    else:
        root = find_root(lambda_of_R, beta, (lo, hi), tol=tol)
    logger.debug("R(%.12g) = %.12g", beta, root)
    return float(root)


# =========================================================
# DESIGN
# =========================================================
def design(beta, n, grid=None):
    """Prolate design for confidence beta after n applications; psi is solved on grid
    (the default grid when omitted)."""
    R = r_of_beta(beta)
    if int(n) != n or n < NODES_PER_PERIOD * R:
        raise ResolutionExceededError(
            NODES_PER_PERIOD * R, n, what="required n", limit_name="requested n",
            remedy=f"use n >= {NODES_PER_PERIOD} R(beta)",
        )
    n = int(n)
    psi = solve_prolate(R, grid if grid is not None else default_grid()).psi
    state = coefficients_from_wavefn(psi, n)
    return IntervalDesign(float(beta), R, n, state, 2.0 * R / n)


def centred_interval(theta_hat, half_width):
    if not half_width > 0:
        raise InvalidArgumentError(f"half-width must be positive, got {half_width!r}")
    if 2.0 * half_width >= TWO_PI:
        logger.warning("interval of width %.4g covers the whole torus", 2.0 * half_width)
        return TorusInterval(0.0, 0.0, degenerate=True)
    lower = float(np.mod(theta_hat - half_width, TWO_PI))
    upper = float(np.mod(theta_hat + half_width, TWO_PI))
    return TorusInterval(lower, upper)


def confidence_interval(design_, theta_hat):
    """[theta_hat - 2R/n, theta_hat + 2R/n] on the torus."""
    return centred_interval(theta_hat, design_.half_width)


# =========================================================
# COVERAGE
# =========================================================
def coverage_stderr(coverage, trials):
    return float(np.sqrt(max(coverage * (1.0 - coverage), 0.0) / trials))


def coverage_for_state(state, half_width, theta, trials, seed):
    """Fraction of sampled centred intervals of the given half-width that contain theta."""
    if int(trials) != trials or trials < MIN_COVERAGE_TRIALS:
        raise InvalidArgumentError(f"at least {MIN_COVERAGE_TRIALS} trials required, got {trials!r}")
    sample = sample_outcomes(state, theta, int(trials), seed)
    if 2.0 * half_width >= TWO_PI:
        return 1.0
    distance = np.abs(wrap_angle(sample.estimates - sample.theta_true))
    return float(np.mean(distance <= half_width + 1e-15))


def coverage_mc(design_, theta, trials, seed):
    return coverage_for_state(design_.state, design_.half_width, theta, trials, seed)


def coverage_report(design_, theta, trials, seed):
    coverage = coverage_mc(design_, theta, trials, seed)
    return CoverageReport(design_.beta, design_.n, int(trials), coverage,
                          coverage_stderr(coverage, trials), design_.half_width)


def save_coverage_csv(reports, path):
    frame = pd.concat([r.to_frame() for r in reports], ignore_index=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def save_design(design_, path, coverage=None):
    payload = design_.to_json()
    if coverage is not None:
        payload["coverage"] = {"trials": coverage.trials, "coverage": coverage.coverage,
                               "stderr": coverage.stderr}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=JSON_INDENT, sort_keys=True)
