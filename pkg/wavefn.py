"""Wave functions on [-1, 1], their limiting distributions |F f|^2, window
probabilities and the two variance functionals."""
import json
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd

from config import (
    BOUNDARY_TOL,
    CSV_FLOAT_FORMAT,
    JSON_INDENT,
    MOMENT_Y_CAP,
    NORM_TOL,
    PROBABILITY_SLACK,
)
from errors import (
    DegenerateInputError,
    InvalidArgumentError,
    NumericalConsistencyError,
    ResolutionExceededError,
)
from numerics import Grid, composite_gauss, integrate, legendre_series, oscillatory_ft

logger = logging.getLogger(__name__)

BUILTIN_KINDS = ("constant", "dirichlet", "bump_g3", "prolate", "modulated")


# =========================================================
# TYPES
# =========================================================
@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    values: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        values = np.array(self.values, dtype=complex, copy=True)
        if values.shape != self.grid.nodes.shape:
            raise InvalidArgumentError(
                f"{values.size} samples for a grid of {self.grid.size} nodes"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        norm = self.norm_sq
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidArgumentError(f"wave function {self.label!r} has norm^2 {norm:.12g}")

    @property
    def norm_sq(self):
        return float(integrate(np.abs(self.values) ** 2, self.grid))

    @property
    def is_real(self):
        return bool(np.max(np.abs(self.values.imag)) <= 1e-12 * np.max(np.abs(self.values)))

    @cached_property
    def series(self):
        return legendre_series(self.values, self.grid)

    @cached_property
    def derivative_series(self):
        return self.series.deriv()

    def evaluate(self, x):
        """Spectral interpolation; zero outside [-1, 1]."""
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= 1.0
        out = np.where(inside, self.series(np.clip(x, -1.0, 1.0)), 0.0)
        return out[()] if out.ndim == 0 else out

    def derivative(self):
        return self.derivative_series(self.grid.nodes)

    def endpoint_values(self):
        return complex(self.series(-1.0)), complex(self.series(1.0))

    def endpoint_derivatives(self):
        return complex(self.derivative_series(-1.0)), complex(self.derivative_series(1.0))

    def vanishes_at_boundary(self, tol=BOUNDARY_TOL):
        scale = np.max(np.abs(self.values))
        left, right = self.endpoint_values()
        return max(abs(left), abs(right)) <= tol * scale

    def to_json(self):
        return {
            "label": self.label,
            "rule": self.grid.rule,
            "nodes": self.grid.nodes.tolist(),
            "weights": self.grid.weights.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_json(cls, payload):
        grid = Grid(np.asarray(payload["nodes"]), np.asarray(payload["weights"]), payload["rule"])
        values = np.asarray(payload["re"]) + 1j * np.asarray(payload["im"])
        return cls(grid, values, payload.get("label", "custom"))


@dataclass(frozen=True, eq=False)
class LimitingDistribution:
    source: WaveFunction

    def density(self, y):
        amp = oscillatory_ft(self.source.values, self.source.grid, y)
        return np.abs(amp) ** 2

    def __call__(self, y):
        return self.density(y)

    def mass_within(self, r1, r2):
        return window_probability(self.source, r1, r2)

    def cdf(self, y):
        return window_probability(self.source, -np.inf, y)


# =========================================================
# CONSTRUCTION
# =========================================================
def normalize(raw_values, grid, label="custom"):
    raw = np.asarray(raw_values, dtype=complex)
    if raw.shape != grid.nodes.shape:
        raise InvalidArgumentError(f"{raw.size} samples for a grid of {grid.size} nodes")
    norm_sq = float(integrate(np.abs(raw) ** 2, grid))
    if not np.isfinite(norm_sq) or norm_sq <= 0.0:
        raise DegenerateInputError(f"cannot normalize {label!r}: squared norm is {norm_sq}")
    return WaveFunction(grid, raw / np.sqrt(norm_sq), label)


def dirichlet_values(m, x):
    return np.sin(np.pi * m * (np.asarray(x) + 1.0) / 2.0)


def builtin(kind, grid, m=1, R=None, base=None, c=0.0):
    """Named wave functions: constant, dirichlet(m), bump_g3, prolate(R), modulated(base, c)."""
    x = grid.nodes
    if kind == "constant":
        return normalize(np.ones_like(x), grid, "constant")
    if kind == "dirichlet":
        if int(m) != m or m < 1:
            raise InvalidArgumentError(f"dirichlet needs an integer m >= 1, got {m!r}")
        return normalize(dirichlet_values(int(m), x), grid, f"dirichlet_{int(m)}")
    if kind == "bump_g3":
        from tails import g_family

        return normalize(g_family("g3_unnormalized", x), grid, "bump_g3")
    if kind == "prolate":
        if R is None or not R > 0:
            raise InvalidArgumentError(f"prolate needs R > 0, got {R!r}")
        from spectral import solve_prolate

        return solve_prolate(R, grid).psi
    if kind == "modulated":
        if not isinstance(base, WaveFunction):
            raise InvalidArgumentError("modulated needs a base WaveFunction")
        if not np.isfinite(c):
            raise InvalidArgumentError(f"modulation frequency must be finite, got {c!r}")
        values = np.exp(1j * c * base.grid.nodes) * base.values
        return normalize(values, base.grid, f"{base.label}@{c:g}")
    raise InvalidArgumentError(f"unknown builtin {kind!r}; choose from {BUILTIN_KINDS}")


def limiting_distribution(f):
    return LimitingDistribution(f)


# =========================================================
# WINDOWS
# =========================================================
def tail_constants(f):
    """A = |f(1)|^2 + |f(-1)|^2 and B = |f'(1)|^2 + |f'(-1)|^2."""
    left, right = f.endpoint_values()
    d_left, d_right = f.endpoint_derivatives()
    a = abs(left) ** 2 + abs(right) ** 2
    b = abs(d_left) ** 2 + abs(d_right) ** 2
    return a, b


def envelope_mass_beyond(a, b, u):
    """One-sided envelope mass of (A/y^2 + B/y^4)/(2 pi) over y > u > 0."""
    u = np.asarray(u, dtype=float)
    inv = np.where(np.isinf(u), 0.0, 1.0 / np.where(np.isinf(u), 1.0, u))
    out = (a * inv + b * inv ** 3 / 3.0) / (2.0 * np.pi)
    return out[()] if out.ndim == 0 else out


def asymptotic_tail_mass(f, lo, hi):
    """Mass of the averaged envelope (A/y^2 + B/y^4)/(2 pi) over [lo, hi].

    The interval must not contain 0; infinite ends are allowed.
    """
    if lo >= hi:
        return 0.0
    if lo < 0 < hi:
        raise InvalidArgumentError("asymptotic tail mass is defined away from y = 0")
    u, v = sorted((abs(lo), abs(hi)))
    a, b = tail_constants(f)
    return float(envelope_mass_beyond(a, b, u) - envelope_mass_beyond(a, b, v))


def _kernel_form(f, r1, r2):
    rho = 0.5 * (r2 - r1)
    c = 0.5 * (r1 + r2)
    x = f.grid.nodes
    diff = x[:, None] - x[None, :]
    kernel = (rho / np.pi) * np.sinc(rho * diff / np.pi) * np.exp(-1j * c * diff)
    g = f.grid.weights * f.values
    form = np.conj(g) @ kernel @ g
    return float(form.real)


def out_of_band_mass(f):
    """Mass of |F f|^2 beyond +-y_max, from Plancherel."""
    y_max = f.grid.y_max
    return max(0.0, 1.0 - _kernel_form(f, -y_max, y_max))


def _out_of_band_share(f, r1, r2):
    # fraction of the out-of-band mass the window takes, split by the envelope
    y_max = f.grid.y_max
    a, b = tail_constants(f)
    total = 2.0 * float(envelope_mass_beyond(a, b, y_max))
    if total > 0:
        share = 0.0
        if r1 < -y_max:
            share += asymptotic_tail_mass(f, r1, min(r2, -y_max))
        if r2 > y_max:
            share += asymptotic_tail_mass(f, max(r1, y_max), r2)
        return min(1.0, share / total)
    # no envelope: only whole tails carry a known share
    return 0.5 * ((r1 == -np.inf) + (r2 == np.inf))


def window_probability(f, r1, r2):
    """P^f([r1, r2]) as the quadratic form <f|K|f>.

    Beyond +-y_max the Plancherel remainder 1 - <f|K_{[-y_max, y_max]}|f> is
    split between the two tails in proportion to the averaged envelope.
    """
    if not r1 < r2:
        raise InvalidArgumentError(f"window needs r1 < r2, got ({r1}, {r2})")
    y_max = f.grid.y_max
    lo, hi = max(r1, -y_max), min(r2, y_max)
    value = 0.0
    if lo < hi:
        value += _kernel_form(f, lo, hi)
    if r1 < -y_max or r2 > y_max:
        value += out_of_band_mass(f) * _out_of_band_share(f, r1, r2)
    if value < -PROBABILITY_SLACK or value > 1.0 + PROBABILITY_SLACK:
        raise NumericalConsistencyError(
            f"window probability {value:.3e} of {f.label!r} on [{r1}, {r2}] is outside [0, 1]"
        )
    return min(max(value, 0.0), 1.0)


# =========================================================
# VARIANCES
# =========================================================
def variance(f):
    """<f|P^2|f> = integral |f'|^2, or +inf when f does not vanish at +-1."""
    if not f.vanishes_at_boundary():
        logger.debug("%s does not vanish at the endpoints; variance is infinite", f.label)
        return float("inf")
    return float(integrate(np.abs(f.derivative()) ** 2, f.grid))


def truncated_moment(f, Y, panel_width=1.0, order=16):
    """Integral of y^2 |F f(y)|^2 over |y| <= Y."""
    if not Y > 0:
        raise InvalidArgumentError(f"moment cutoff must be positive, got {Y!r}")
    if Y > f.grid.y_max:
        raise ResolutionExceededError(Y, f.grid.y_max)
    panels = max(1, int(np.ceil(2.0 * Y / panel_width)))
    y, w = composite_gauss(-Y, Y, panels, order)
    density = limiting_distribution(f).density(y)
    return float(np.sum(w * y ** 2 * density))


def moment_variance(f, Y=None):
    """Second route to the variance: truncated y^2 moment plus the y^-4 tail B/(pi Y)."""
    if not f.vanishes_at_boundary():
        return float("inf")
    if Y is None:
        Y = min(MOMENT_Y_CAP, 0.75 * f.grid.y_max)
    _, b = tail_constants(f)
    return truncated_moment(f, Y) + b / (np.pi * Y)


def q_variance(f):
    p = np.abs(f.values) ** 2
    x = f.grid.nodes
    mean = float(integrate(x * p, f.grid))
    return float(integrate(x * x * p, f.grid)) - mean * mean


# =========================================================
# EXPORT
# =========================================================
def density_frame(f, y_values):
    y_values = np.asarray(y_values, dtype=float)
    return pd.DataFrame({"y": y_values, "density": limiting_distribution(f).density(y_values)})


def save_density_csv(f, y_values, path):
    density_frame(f, y_values).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def save_json(f, path):
    with open(path, "w") as fh:
        json.dump(f.to_json(), fh, indent=JSON_INDENT, sort_keys=True)


def load_json(path):
    with open(path, "r") as fh:
        return WaveFunction.from_json(json.load(fh))
