"""Quadrature grids, the oscillatory Fourier integral, the symmetric eigensolver
and the bracketed root finder everything else is built on."""
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import legendre as L
from scipy import linalg, optimize, special, stats

from config import (
    CHOP_NOISE_FACTOR,
    CHOP_PLATEAU,
    CHOP_TAIL_FRACTION,
    CHOP_TOL,
    COMPLEMENT_SWITCH,
    EIGEN_RESIDUAL_TOL,
    FT_CHUNK,
    GRID_RULES,
    NODES_PER_PERIOD,
    ROOT_TOL,
)
from errors import (
    BracketError,
    ConvergenceError,
    InsufficientDataError,
    InvalidArgumentError,
    ResolutionExceededError,
)

logger = logging.getLogger(__name__)

SQRT_2PI = np.sqrt(2.0 * np.pi)
UNIFORM_FIT_DEGREE = 48


# =========================================================
# TYPES
# =========================================================
def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        weights = _frozen(self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InvalidArgumentError("nodes and weights must be 1-D arrays of equal length")
        if self.rule not in GRID_RULES:
            raise InvalidArgumentError(f"unknown quadrature rule {self.rule!r}")
        if np.any(np.diff(nodes) <= 0) or nodes[0] < -1.0 or nodes[-1] > 1.0:
            raise InvalidArgumentError("nodes must be strictly increasing inside [-1, 1]")
        if np.any(weights <= 0):
            raise InvalidArgumentError("quadrature weights must be positive")

    def __len__(self):
        return self.nodes.size

    @property
    def size(self):
        return self.nodes.size

    @property
    def y_max(self):
        """Largest |y| the grid resolves with NODES_PER_PERIOD nodes per oscillation."""
        return np.pi * self.nodes.size / NODES_PER_PERIOD

    def describe(self):
        return {"rule": self.rule, "n_points": int(self.size), "y_max": float(self.y_max)}


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise InvalidArgumentError("operator must be a non-empty square matrix")
        if not np.array_equal(entries, entries.T):
            raise InvalidArgumentError("operator entries are not symmetric")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.entries))

    @classmethod
    def from_kernel(cls, kernel, grid):
        """Nystrom matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j), symmetrized exactly."""
        root_w = np.sqrt(grid.weights)
        a = root_w[:, None] * np.asarray(kernel, dtype=float) * root_w[None, :]
        return cls(0.5 * (a + a.T))


class EigenPair(NamedTuple):
    value: float
    vector: np.ndarray
    complement: float  # 1 - value, from I - A when value is close to 1


# =========================================================
# GRIDS
# =========================================================
def _gauss_legendre(n):
    nodes, weights = special.roots_legendre(n)
    return nodes, weights * (2.0 / weights.sum())


def _clenshaw_curtis(n):
    # Trefethen's clencurt with N + 1 = n points, returned in increasing order
    N = n - 1
    theta = np.pi * np.arange(N + 1) / N
    nodes = np.cos(theta)
    weights = np.zeros(N + 1)
    inner = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        weights[0] = weights[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N * N - 1)
    else:
        weights[0] = weights[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    weights[inner] = 2.0 * v / N
    nodes[0], nodes[N] = 1.0, -1.0
    return nodes[::-1].copy(), weights[::-1].copy()


def _uniform_midpoint(n):
    h = 2.0 / n
    return -1.0 + h * (np.arange(n) + 0.5), np.full(n, h)


_BUILDERS = {
    "gauss_legendre": _gauss_legendre,
    "clenshaw_curtis": _clenshaw_curtis,
    "uniform_midpoint": _uniform_midpoint,
}


def make_grid(rule, n_points):
    if rule not in _BUILDERS:
        raise InvalidArgumentError(f"unknown quadrature rule {rule!r}; choose from {GRID_RULES}")
    if int(n_points) != n_points or n_points < 2:
        raise InvalidArgumentError(f"n_points must be an integer >= 2, got {n_points!r}")
    nodes, weights = _BUILDERS[rule](int(n_points))
    return Grid(nodes, weights, rule)


def composite_gauss(a, b, panels, order=32):
    """Gauss-Legendre rule of the given order repeated on equal panels of [a, b]."""
    if panels < 1 or b <= a:
        raise InvalidArgumentError("composite_gauss needs b > a and at least one panel")
    x, w = special.roots_legendre(order)
    edges = np.linspace(a, b, int(panels) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# =========================================================
# INTEGRATION
# =========================================================
def _check_length(values, grid):
    values = np.asarray(values)
    if values.shape != grid.nodes.shape:
        raise InvalidArgumentError(
            f"values have shape {values.shape}, grid has {grid.nodes.shape}"
        )
    return values


def integrate(values, grid):
    values = _check_length(values, grid)
    return np.dot(grid.weights, values)[()]


def oscillatory_ft(f_values, grid, y):
    """(2 pi)^(-1/2) * integral of f(x) exp(+ixy) over [-1, 1], scalar or vector y."""
    f_values = _check_length(f_values, grid)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    worst = np.max(np.abs(y_arr)) if y_arr.size else 0.0
    if worst > grid.y_max * (1 + 1e-12):
        raise ResolutionExceededError(worst, grid.y_max)

    wf = grid.weights * f_values
    out = np.empty(y_arr.shape, dtype=complex)
    flat = y_arr.ravel()
    result = out.ravel()
    for start in range(0, flat.size, FT_CHUNK):
        block = flat[start:start + FT_CHUNK]
        result[start:start + FT_CHUNK] = np.exp(1j * np.outer(block, grid.nodes)) @ wf
    out = result.reshape(y_arr.shape) / SQRT_2PI
    if np.ndim(y) == 0:
        return complex(out[0])
    return out


# =========================================================
# SPECTRAL SERIES
# =========================================================
def legendre_series(values, grid):
    """Legendre expansion of grid data, trailing noise trimmed."""
    values = _check_length(values, grid)
    n = grid.size
    if grid.rule == "gauss_legendre":
        vander = L.legvander(grid.nodes, n - 1)
        scale = (2 * np.arange(n) + 1) / 2.0
        coef = (vander.T @ (grid.weights * values)) * scale
    else:
        degree = n - 1 if grid.rule == "clenshaw_curtis" else min(n - 1, UNIFORM_FIT_DEGREE)
        coef = L.legfit(grid.nodes, values, degree)
    return L.Legendre(chop(coef))


def chop(coef):
    """Drop the trailing coefficients that sit at or below the roundoff plateau.

    The plateau is read off the last quarter of the series; a series whose tail
    is still above CHOP_PLATEAU is unresolved and only the CHOP_TOL floor applies.
    """
    coef = np.asarray(coef)
    size = np.abs(coef)
    peak = np.max(size) if size.size else 0.0
    if peak == 0:
        return np.zeros(1, dtype=coef.dtype)
    floor = CHOP_TOL * peak
    tail = size[-max(1, int(CHOP_TAIL_FRACTION * size.size)):]
    noise = np.max(tail)
    if size.size >= 8 and noise < CHOP_PLATEAU * peak:
        floor = max(floor, CHOP_NOISE_FACTOR * noise)
    kept = np.nonzero(size > floor)[0]
    return coef[:kept[-1] + 1]


# =========================================================
# EIGENSOLVER
# =========================================================
def eigh_top(op, k=1, tol=EIGEN_RESIDUAL_TOL):
    """Top-k eigenpairs of a symmetric operator in decreasing order.

    When 1 - lambda falls below COMPLEMENT_SWITCH the complement is taken from
    the bottom of I - A instead of the subtraction.
    """
    if not isinstance(op, SymmetricOperator):
        op = SymmetricOperator(op)
    dim = op.dim
    if int(k) != k or not 1 <= k <= dim:
        raise InvalidArgumentError(f"k must be an integer in [1, {dim}], got {k!r}")
    a = op.entries
    try:
        vals, vecs = linalg.eigh(a, subset_by_index=[dim - k, dim - 1])
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    vals = vals[::-1]
    vecs = vecs[:, ::-1]

    scale = max(np.linalg.norm(a), 1e-300)
    worst = 0.0
    for i in range(k):
        res = np.linalg.norm(a @ vecs[:, i] - vals[i] * vecs[:, i])
        worst = max(worst, res)
    if worst > tol * scale:
        raise ConvergenceError("eigenpair residual above tolerance", residual=worst / scale)
    logger.debug("eigh_top dim=%d k=%d relative residual %.2e", dim, k, worst / scale)

    complements = 1.0 - vals
    if np.any(complements < COMPLEMENT_SWITCH):
        try:
            low = linalg.eigh(np.eye(dim) - a, eigvals_only=True, subset_by_index=[0, k - 1])
        except linalg.LinAlgError as exc:
            raise ConvergenceError(f"complement eigensolver failed: {exc}") from exc
        swap = complements < COMPLEMENT_SWITCH
        complements = np.where(swap, low, complements)

    return [EigenPair(float(vals[i]), vecs[:, i].copy(), float(complements[i])) for i in range(k)]


# =========================================================
# ROOT FINDING
# =========================================================
def find_root(fn, target, bracket, tol=ROOT_TOL):
    """x in bracket with |fn(x) - target| <= tol, for monotone fn."""
    lo, hi = bracket
    if not lo < hi:
        raise InvalidArgumentError(f"bracket must satisfy lo < hi, got {bracket!r}")
    f_lo = fn(lo) - target
    f_hi = fn(hi) - target
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)-target={f_lo:.3e}, f(hi)-target={f_hi:.3e}"
        )
    x, info = optimize.brentq(
        lambda t: fn(t) - target, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
        maxiter=200, full_output=True,
    )
    gap = abs(fn(x) - target)
    if not info.converged or gap > tol:
        raise ConvergenceError(f"root search stopped at x={x:.12g}", residual=gap)
    return x


# =========================================================
# RATE FITS
# =========================================================
class RateFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float
    used: int


def log_linear_fit(abscissa, values, floor, min_points=3, what="values"):
    """Least-squares slope of -log(values) against abscissa, dropping entries below floor."""
    abscissa = np.asarray(abscissa, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.isfinite(values) & (values >= floor)
    dropped = abscissa[~keep]
    if dropped.size:
        logger.warning(
            "excluded %d %s below the precision floor %.1e at %s",
            dropped.size, what, floor, np.array2string(dropped, precision=4),
        )
    if keep.sum() < min_points:
        raise InsufficientDataError(
            f"{int(keep.sum())} usable {what}, at least {min_points} needed for a rate fit"
        )
    fit = stats.linregress(abscissa[keep], -np.log(values[keep]))
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), int(keep.sum()))
