"""Finite-n estimation protocol: input states, the covariant measurement's
outcome density, seeded sampling, convergence to the limiting distribution,
application counts, multiplicity collapse and SLD Fisher information."""
import json
import logging
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
import pandas as pd
from scipy import integrate as sp_integrate
from scipy import special, stats

from config import (
    CELLS_PER_APPLICATION,
    CSV_FLOAT_FORMAT,
    FT_CHUNK,
    JSON_INDENT,
    KS_Z_LIMIT,
    KS_Z_STEP,
)
from errors import (
    DegenerateInputError,
    InvalidArgumentError,
    NumericalConsistencyError,
    UnreachableAccuracyError,
)
from numerics import find_root
from tails import tail_probability
from wavefn import (
    envelope_mass_beyond,
    limiting_distribution,
    q_variance,
    tail_constants,
    variance,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
STATE_NORM_TOL = 1e-12


# =========================================================
# TYPES
# =========================================================
def _normalized(coeffs, what):
    coeffs = np.asarray(coeffs, dtype=complex)
    norm = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateInputError(f"{what} has zero norm")
    return coeffs / norm


@dataclass(frozen=True, eq=False)
class InputState:
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex, copy=True)
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n!r}")
        if coeffs.shape != (self.n + 1,):
            raise InvalidArgumentError(f"expected {self.n + 1} coefficients, got {coeffs.shape}")
        norm_sq = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm_sq - 1.0) > STATE_NORM_TOL:
            raise InvalidArgumentError(f"input state has squared norm {norm_sq:.15g}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_amplitudes(cls, coeffs):
        coeffs = _normalized(coeffs, "coefficient vector")
        return cls(coeffs.size - 1, coeffs)

    @property
    def probabilities(self):
        return np.abs(self.coeffs) ** 2

    def to_json(self):
        return {"n": self.n, "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}

    @classmethod
    def from_json(cls, payload):
        return cls(payload["n"], np.asarray(payload["re"]) + 1j * np.asarray(payload["im"]))


@dataclass(frozen=True, eq=False)
class OutcomeSample:
    theta_true: float
    estimates: np.ndarray
    n: int
    seed: int

    def to_frame(self):
        return pd.DataFrame({"index": np.arange(self.estimates.size), "theta_hat": self.estimates})

    def save_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


@dataclass(frozen=True, eq=False)
class MultiplicityState:
    n: int
    blocks: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n!r}")
        blocks = tuple(np.array(b, dtype=complex, copy=True) for b in self.blocks)
        if len(blocks) != self.n + 1:
            raise InvalidArgumentError(f"expected {self.n + 1} blocks, got {len(blocks)}")
        for k, block in enumerate(blocks):
            size = int(special.comb(self.n, k, exact=True))
            if block.shape != (size,):
                raise InvalidArgumentError(f"block {k} must hold C({self.n},{k}) = {size} entries")
            block.setflags(write=False)
        total = sum(float(np.sum(np.abs(b) ** 2)) for b in blocks)
        if abs(total - 1.0) > STATE_NORM_TOL:
            raise InvalidArgumentError(f"multiplicity state has squared norm {total:.15g}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_blocks(cls, n, blocks):
        blocks = [np.asarray(b, dtype=complex) for b in blocks]
        total = np.sqrt(sum(np.sum(np.abs(b) ** 2) for b in blocks))
        if not np.isfinite(total) or total == 0.0:
            raise DegenerateInputError("multiplicity state has zero norm")
        return cls(n, tuple(b / total for b in blocks))

    @classmethod
    def uniform(cls, n):
        return cls.from_blocks(n, [np.ones(int(special.comb(n, k, exact=True))) for k in range(n + 1)])


# =========================================================
# STATES
# =========================================================
def collapse_multiplicity(ms):
    """a_k = sqrt(sum_j |a_kj|^2)."""
    amplitudes = np.array([np.sqrt(np.sum(np.abs(b) ** 2)) for b in ms.blocks])
    return InputState(ms.n, _normalized(amplitudes, "collapsed state"))


def sample_points(n):
    """x_k = (2k - n) / (n + 1)."""
    k = np.arange(n + 1)
    return (2.0 * k - n) / (n + 1.0)


def coefficients_from_wavefn(f, n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    values = np.asarray(f.evaluate(sample_points(int(n))), dtype=complex)
    if np.all(values == 0):
        raise DegenerateInputError(f"{f.label!r} vanishes at every sample point for n={n}")
    return InputState(int(n), _normalized(np.conj(values), f"samples of {f.label!r}"))


def strip_measurement_phases(state, measurement_phases):
    """a'_k = a_k e^{-i xi_k}: the state that performs like (a, |t>) under the plain |t0>."""
    xi = np.asarray(measurement_phases, dtype=float)
    if xi.shape != state.coeffs.shape:
        raise InvalidArgumentError("one measurement phase per coefficient is required")
    return InputState(state.n, state.coeffs * np.exp(-1j * xi))


# =========================================================
# OUTCOME DENSITY
# =========================================================
def _amplitude(weights, offsets, delta):
    """sum_k weights_k e^{i offsets_k delta}, chunked over delta."""
    flat = np.atleast_1d(np.asarray(delta, dtype=float)).ravel()
    out = np.empty(flat.size, dtype=complex)
    for start in range(0, flat.size, FT_CHUNK):
        block = flat[start:start + FT_CHUNK]
        out[start:start + FT_CHUNK] = np.exp(1j * np.outer(block, offsets)) @ weights
    return out


def _shape_like(values, template):
    if np.ndim(template) == 0:
        return float(values[0])
    return values.reshape(np.shape(template))


def outcome_density(state, theta, theta_hat, measurement_phases=None):
    """(1/2pi)|sum_k conj(a_k) e^{i(k - n/2)(theta_hat - theta)}|^2, or the same with the
    seed vector |t> = sum e^{i xi_k}|k> when measurement_phases is given."""
    offsets = np.arange(state.n + 1) - state.n / 2.0
    weights = np.conj(state.coeffs)
    if measurement_phases is not None:
        xi = np.asarray(measurement_phases, dtype=float)
        if xi.shape != state.coeffs.shape:
            raise InvalidArgumentError("one measurement phase per coefficient is required")
        weights = weights * np.exp(1j * xi)
    delta = np.asarray(theta_hat, dtype=float) - theta
    values = np.abs(_amplitude(weights, offsets, delta)) ** 2 / TWO_PI
    return _shape_like(values, delta)


def aligned_seed_blocks(ms):
    """Seed vectors t_k = a_k / |a_k| (first basis vector for empty blocks)."""
    seeds = []
    for block in ms.blocks:
        norm = np.sqrt(np.sum(np.abs(block) ** 2))
        if norm > 0:
            seeds.append(block / norm)
        else:
            seed = np.zeros(block.size, dtype=complex)
            seed[0] = 1.0
            seeds.append(seed)
    return seeds


def block_outcome_density(ms, theta, theta_hat, seed_blocks=None):
    """Covariant measurement on the multiplicity space with unit seed vectors t_k."""
    seeds = aligned_seed_blocks(ms) if seed_blocks is None else seed_blocks
    if len(seeds) != ms.n + 1:
        raise InvalidArgumentError(f"expected {ms.n + 1} seed blocks, got {len(seeds)}")
    overlaps = []
    for t, block in zip(seeds, ms.blocks):
        t = np.asarray(t, dtype=complex)
        if t.shape != block.shape or abs(np.linalg.norm(t) - 1.0) > 1e-12:
            raise InvalidArgumentError("each seed block must be a unit vector of its block's size")
        overlaps.append(np.vdot(t, block))
    offsets = np.arange(ms.n + 1) - ms.n / 2.0
    delta = np.asarray(theta_hat, dtype=float) - theta
    values = np.abs(_amplitude(np.conj(np.array(overlaps)), offsets, delta)) ** 2 / TWO_PI
    return _shape_like(values, delta)


# =========================================================
# SAMPLING
# =========================================================
def spawn_seeds(seed, count):
    """Independent child seeds for parallel sampling."""
    children = np.random.SeedSequence(seed).spawn(int(count))
    return [int(child.generate_state(1)[0]) for child in children]


def wrap_angle(delta):
    """Representative of delta in (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(delta, dtype=float), TWO_PI)


def outcome_cdf_table(state):
    cells = CELLS_PER_APPLICATION * (state.n + 1)
    delta = np.linspace(-np.pi, np.pi, cells + 1)
    density = outcome_density(state, 0.0, delta)
    cdf = sp_integrate.cumulative_trapezoid(density, delta, initial=0.0)
    total = cdf[-1]
    if abs(total - 1.0) > 1e-6:
        raise NumericalConsistencyError(f"outcome density integrates to {total:.9f} on the sampling grid")
    return delta, cdf / total


def sample_outcomes(state, theta, count, seed):
    """i.i.d. estimates by inverse-CDF sampling of the outcome density."""
    if int(count) != count or count < 1:
        raise InvalidArgumentError(f"count must be a positive integer, got {count!r}")
    delta, cdf = outcome_cdf_table(state)
    rng = np.random.default_rng(seed)
    draws = np.interp(rng.random(int(count)), cdf, delta)
    estimates = np.mod(theta + draws, TWO_PI)
    logger.debug("sampled %d outcomes for n=%d seed=%s", count, state.n, seed)
    return OutcomeSample(float(np.mod(theta, TWO_PI)), estimates, state.n, seed)


def rescaled_outcomes(sample):
    """z = n * wrap(theta_hat - theta) / 2."""
    return sample.n * wrap_angle(sample.estimates - sample.theta_true) / 2.0


# =========================================================
# CONVERGENCE
# =========================================================
class TabulatedCdf(NamedTuple):
    z: np.ndarray
    values: np.ndarray
    a: float
    b: float

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        inside = np.interp(points, self.z, self.values)
        far = np.maximum(np.abs(points), self.z[-1])
        beyond = envelope_mass_beyond(self.a, self.b, far)
        out = np.where(points < self.z[0], beyond,
                       np.where(points > self.z[-1], 1.0 - beyond, inside))
        return out[()] if out.ndim == 0 else out


def limiting_cdf(f, z_limit=KS_Z_LIMIT, step=KS_Z_STEP):
    """CDF of |F f|^2 tabulated on [-z_limit, z_limit], envelope mass outside."""
    z = np.linspace(-z_limit, z_limit, int(round(2 * z_limit / step)) + 1)
    density = limiting_distribution(f).density(z)
    a, b = tail_constants(f)
    left = envelope_mass_beyond(a, b, z_limit)
    values = left + sp_integrate.cumulative_trapezoid(density, z, initial=0.0)
    return TabulatedCdf(z, np.clip(values, 0.0, 1.0), a, b)


def rescaled_ks_distance(sample, f, cdf=None):
    cdf = cdf if cdf is not None else limiting_cdf(f)
    z = rescaled_outcomes(sample)
    return float(stats.kstest(z, cdf).statistic)


def accuracy_radius(f, error_prob):
    """A = min{a : P^f([-a, a]) >= 1 - error_prob}."""
    if not 0.0 < error_prob < 1.0:
        raise InvalidArgumentError(f"error probability must lie in (0, 1), got {error_prob!r}")
    a_max = f.grid.y_max
    floor = tail_probability(f, a_max)
    if floor > error_prob:
        raise UnreachableAccuracyError(
            f"{f.label!r} keeps tail {floor:.3e} > {error_prob:.3e} out to a = {a_max:.4g}"
        )
    lo = 1e-9
    return find_root(lambda a: tail_probability(f, a), error_prob, (lo, a_max),
                     tol=max(1e-14, 1e-6 * error_prob))


def required_applications(f, error_width, error_prob):
    """ceil(A / B) applications reach width B with error probability error_prob."""
    if not error_width > 0:
        raise InvalidArgumentError(f"error width must be positive, got {error_width!r}")
    a = accuracy_radius(f, error_prob)
    count = int(np.ceil(a / error_width - 1e-9))
    logger.debug("%s: A=%.10g for eps=%.3e -> %d applications at B=%g",
                 f.label, a, error_prob, count, error_width)
    return max(count, 1)


# =========================================================
# FISHER INFORMATION
# =========================================================
def sld_fisher(state):
    """J = 4 (sum k^2 |a_k|^2 - (sum k |a_k|^2)^2)."""
    p = state.probabilities
    k = np.arange(state.n + 1, dtype=float)
    mean = np.dot(k, p)
    return float(max(0.0, 4.0 * (np.dot(k * k, p) - mean * mean)))


def fisher_limit_ratio(state):
    """J / (n+1)^2, which tends to q_variance(f) for states sampled from f."""
    return sld_fisher(state) / (state.n + 1.0) ** 2


@dataclass(frozen=True)
class CramerRaoReport:
    label: str
    variance: float
    q_variance: float
    product: float
    gap: float
    bounded: bool

    def to_json(self):
        return {
            "label": self.label,
            "variance": self.variance,
            "q_variance": self.q_variance,
            "product": self.product,
            "gap": self.gap,
            "bounded": self.bounded,
        }


def cramer_rao_report(f):
    v = variance(f)
    q = q_variance(f)
    if not np.isfinite(v):
        return CramerRaoReport(f.label, v, q, float("inf"), float("inf"), False)
    product = v * q
    gap = product - 0.25
    if not gap > 0:
        raise NumericalConsistencyError(
            f"uncertainty product {product:.12g} of {f.label!r} does not exceed 1/4"
        )
    return CramerRaoReport(f.label, v, q, product, gap, True)


def save_report(report, path):
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, indent=JSON_INDENT, sort_keys=True)
