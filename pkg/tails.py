"""Tail probabilities of limiting distributions: closed-form and numeric tails,
the g-family of compactly supported bumps, rate fits and the segment bound on
the convolution of the g1/g2 transforms."""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT, PRECISION_FLOOR, PROBABILITY_SLACK
from errors import (
    InsufficientDataError,
    InvalidArgumentError,
    NumericalConsistencyError,
    SingularPointError,
)
from numerics import SQRT_2PI, composite_gauss, integrate, log_linear_fit
from spectral import min_tail
from wavefn import window_probability

logger = logging.getLogger(__name__)

G_KINDS = ("g0", "g1", "g2", "g3_unnormalized")
RATE_ABSCISSAE = ("R", "sqrtR")
TWO_SQRT2 = 2.0 * np.sqrt(2.0)

# panels for transforms of g1*g2 taken directly in x
DIRECT_PANELS = 256
DIRECT_ORDER = 16
# panel width in the u = sqrt|y'| variable of the convolution integrals
U_PANEL = 0.25
U_ORDER = 32


# =========================================================
# TAIL CURVES
# =========================================================
@dataclass(frozen=True, eq=False)
class TailCurve:
    f_label: str
    y_values: np.ndarray
    tail_probs: np.ndarray
    flagged: np.ndarray = field(default=None)

    def __post_init__(self):
        y = np.asarray(self.y_values, dtype=float)
        tails = np.asarray(self.tail_probs, dtype=float)
        if y.ndim != 1 or y.shape != tails.shape:
            raise InvalidArgumentError("y_values and tail_probs must be 1-D and equally long")
        if np.any(y <= 0) or np.any(np.diff(y) <= 0):
            raise InvalidArgumentError("y_values must be positive and increasing")
        if np.any(np.diff(tails) > PROBABILITY_SLACK):
            raise NumericalConsistencyError(f"tail curve of {self.f_label!r} increases in y")
        object.__setattr__(self, "y_values", y)
        object.__setattr__(self, "tail_probs", tails)
        object.__setattr__(self, "flagged", tails < PRECISION_FLOOR)

    @property
    def log_tail(self):
        out = np.full(self.tail_probs.shape, np.nan)
        ok = ~self.flagged
        out[ok] = np.log(self.tail_probs[ok])
        return out

    def to_frame(self):
        return pd.DataFrame({
            "f_label": self.f_label,
            "y": self.y_values,
            "tail": self.tail_probs,
            "log_tail": self.log_tail,
            "flagged": self.flagged,
        })

    def save_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def tail_probability(f, R):
    """P^f([-R, R]^c)."""
    if not R > 0:
        raise InvalidArgumentError(f"tail radius must be positive, got {R!r}")
    return max(0.0, 1.0 - window_probability(f, -R, R))


def tail_curve(f, y_values):
    y_values = np.asarray(y_values, dtype=float)
    tails = np.array([tail_probability(f, y) for y in y_values])
    return TailCurve(f.label, y_values, tails)


def min_tail_curve(y_values):
    """1 - lambda(y): the smallest tail any design can have at each y."""
    y_values = np.asarray(y_values, dtype=float)
    return TailCurve("minimum", y_values, np.array([min_tail(y) for y in y_values]))


def fit_tail_rate(curve, abscissa="R"):
    if abscissa not in RATE_ABSCISSAE:
        raise InvalidArgumentError(f"abscissa must be one of {RATE_ABSCISSAE}, got {abscissa!r}")
    usable = int(np.sum(~curve.flagged))
    if usable < 4:
        raise InsufficientDataError(
            f"{usable} unflagged tail values on {curve.f_label!r}, at least 4 needed"
        )
    x = curve.y_values if abscissa == "R" else np.sqrt(curve.y_values)
    return log_linear_fit(x, curve.tail_probs, PRECISION_FLOOR, min_points=4, what="tails")


# =========================================================
# CLOSED FORMS
# =========================================================
def dirichlet_density_closed(m, y):
    """Density of the unit-norm sin(pi m (x+1)/2) written as
    (m^2 pi / 2) (sin d / d)^2 / (|y| + m pi/2)^2 with d = |y| - m pi/2."""
    if int(m) != m or m < 1:
        raise InvalidArgumentError(f"m must be a positive integer, got {m!r}")
    y = np.abs(np.asarray(y, dtype=float))
    half = m * np.pi / 2.0
    d = y - half
    out = (m * m * np.pi / 2.0) * np.sinc(d / np.pi) ** 2 / (y + half) ** 2
    return out[()] if out.ndim == 0 else out


def g_family(which, x):
    if which not in G_KINDS:
        raise InvalidArgumentError(f"unknown g function {which!r}; choose from {G_KINDS}")
    x = np.asarray(x, dtype=float)
    if which == "g0":
        pos = x > 0
        safe = np.where(pos, x, 1.0)
        out = np.where(pos, 2.0 * np.exp(-1.0 / safe) / np.sqrt(safe), 0.0)
    elif which == "g1":
        out = g_family("g0", x + 1.0)
    elif which == "g2":
        out = g_family("g0", 1.0 - x)
    else:
        out = g_family("g0", x + 1.0) * g_family("g0", 1.0 - x)
    return out[()] if out.ndim == 0 else out


def _nonzero(y):
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise SingularPointError("the g0 transform is singular at y = 0")
    return y


def g0_ft_closed(y):
    """Printed closed form (1/sqrt 2) e^{-sqrt(2|y|)}/sqrt|y| e^{i sgn(y)(sqrt(2|y|) + pi/4)}."""
    y = _nonzero(y)
    a = np.abs(y)
    root = np.sqrt(2.0 * a)
    out = np.exp(-root) / np.sqrt(2.0 * a) * np.exp(1j * np.sign(y) * (root + np.pi / 4.0))
    return out[()] if out.ndim == 0 else out


def g0_ft(y):
    """Transform of g0 under the e^{+ixy}, (2 pi)^{-1/2} convention."""
    return 2.0 * g0_ft_closed(y)


def g_ft(which, y):
    y = _nonzero(y)
    if which == "g0":
        return g0_ft(y)
    if which == "g1":
        return np.exp(-1j * y) * g0_ft(y)
    if which == "g2":
        return np.exp(1j * y) * g0_ft(-y)
    raise InvalidArgumentError(f"closed transform available for g0, g1, g2; got {which!r}")


def g3_normalizer(grid=None):
    """C = ||g1 g2||, on the given grid or on a fine composite rule."""
    if grid is not None:
        return float(np.sqrt(integrate(g_family("g3_unnormalized", grid.nodes) ** 2, grid)))
    x, w = composite_gauss(-1.0, 1.0, DIRECT_PANELS, DIRECT_ORDER)
    return float(np.sqrt(np.sum(w * g_family("g3_unnormalized", x) ** 2)))


def g3_product_ft(y):
    """F(g1 g2)(y) by composite quadrature in x."""
    x, w = composite_gauss(-1.0, 1.0, DIRECT_PANELS, DIRECT_ORDER)
    wg = w * g_family("g3_unnormalized", x)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.exp(1j * np.outer(y, x)) @ wg / SQRT_2PI


# =========================================================
# CONVOLUTION BOUND
# =========================================================
def _u_rule(u_max):
    panels = max(1, int(np.ceil(u_max / U_PANEL)))
    return composite_gauss(0.0, u_max, panels, U_ORDER)


def _half_line(y, y_start, direction, span, fn):
    """Integral of fn over y' = y_start + direction * u^2, u in [0, sqrt(span)]."""
    u, w = _u_rule(np.sqrt(span))
    yp = y_start + direction * u * u
    return np.sum(w * 2.0 * u * fn(yp))


def _pair_product(y):
    return lambda yp: g_ft("g1", yp) * g_ft("g2", y - yp)


def _pair_modulus(y):
    return lambda yp: np.abs(g0_ft(yp)) * np.abs(g0_ft(yp - y))


def _split_integral(y, T, fn):
    """Integral of fn over [-T, y + T] with the 1/sqrt singularities at 0 and y
    removed by y' = +-u^2 and y' = y -+ u^2."""
    left = _half_line(y, 0.0, -1.0, T, fn)
    inner_lo = _half_line(y, 0.0, 1.0, y / 2.0, fn)
    inner_hi = _half_line(y, y, -1.0, y / 2.0, fn)
    right = _half_line(y, y, 1.0, T, fn)
    return left, inner_lo + inner_hi, right


def _segment_pieces(y, N):
    """Segment maxima on [0, y] cut into N pieces; the two end segments hold the
    integrable singularities and are integrated instead."""
    modulus = _pair_modulus(y)
    edges = np.linspace(0.0, y, N + 1)
    width = y / N
    interior = 0.0
    for k in range(1, N - 1):
        a, b = edges[k], edges[k + 1]
        interior += width * max(modulus(np.array(a)), modulus(np.array(b)))
    first = _half_line(y, 0.0, 1.0, width, modulus)
    last = _half_line(y, y, -1.0, width, modulus)
    return float(interior), float(first + last)


def segment_exponent(N):
    """Exponent the N-segment bound guarantees for -log|conv|^2 / sqrt(y)."""
    k = np.arange(1, N + 1)
    return float(TWO_SQRT2 * np.min(np.sqrt((k - 1) / N) + np.sqrt(1.0 - k / N)))


@dataclass(frozen=True, eq=False)
class ConvolutionReport:
    frame: pd.DataFrame
    truncation: float
    segments: int
    dominant_exponent: float
    measured_exponent: float
    required_exponent: float
    max_relative_gap: float
    bound_holds: bool
    exponent_holds: bool

    @property
    def passed(self):
        return self.bound_holds and self.exponent_holds

    def to_json(self):
        return {
            "truncation": self.truncation,
            "segments": self.segments,
            "dominant_exponent": self.dominant_exponent,
            "measured_exponent": self.measured_exponent,
            "required_exponent": self.required_exponent,
            "max_relative_gap": self.max_relative_gap,
            "bound_holds": self.bound_holds,
            "exponent_holds": self.exponent_holds,
            "rows": self.frame.to_dict(orient="records"),
        }


def convolution_bound_check(y_values, T=800.0, N=8, fit_tolerance=0.1):
    """Reproduce the bound |F(g1 g2)(y)| <= (2 pi)^{-1/2} (segment maxima + remainders)
    on each y, cross-checking the convolution against the direct transform."""
    y_values = np.asarray(y_values, dtype=float)
    if y_values.ndim != 1 or y_values.size == 0 or np.any(y_values <= 0):
        raise InvalidArgumentError("y_values must be a non-empty array of positive numbers")
    if int(N) != N or N < 2:
        raise InvalidArgumentError(f"segment count must be an integer >= 2, got {N!r}")
    N = int(N)
    if not 2.0 * np.exp(-np.sqrt(2.0 * T)) < 1e-12:
        raise InvalidArgumentError(f"truncation T={T} leaves transform mass above 1e-12")

    direct = g3_product_ft(y_values)
    rows = []
    for y, d in zip(y_values, direct):
        left, inner, right = _split_integral(y, T, _pair_product(y))
        conv = (left + inner + right) / SQRT_2PI
        left_rem, _, right_rem = _split_integral(y, T, _pair_modulus(y))
        interior, ends = _segment_pieces(y, N)
        bound = (interior + ends + abs(left_rem) + abs(right_rem)) / SQRT_2PI
        conv_sq = abs(conv) ** 2
        rel_gap = abs(conv - d) / abs(d) if abs(d) ** 2 >= PRECISION_FLOOR else np.nan
        rows.append({
            "y": y,
            "conv_abs": abs(conv),
            "direct_abs": abs(d),
            "relative_gap": rel_gap,
            "segment_bound": interior / SQRT_2PI,
            "end_segments": ends / SQRT_2PI,
            "left_remainder": abs(left_rem) / SQRT_2PI,
            "right_remainder": abs(right_rem) / SQRT_2PI,
            "bound": bound,
            "bound_holds": abs(conv) <= bound * (1.0 + 1e-12),
            "exponent": -np.log(conv_sq) / np.sqrt(y) if conv_sq > 0 else np.inf,
        })
        logger.debug("convolution y=%g |conv|=%.4e bound=%.4e gap=%.2e", y, abs(conv), bound, rel_gap)

    frame = pd.DataFrame(rows)
    dominant = segment_exponent(N)
    required = dominant * (1.0 - fit_tolerance)
    measured = float(frame["exponent"].iloc[int(np.argmax(y_values))])
    gaps = frame["relative_gap"].dropna()
    return ConvolutionReport(
        frame=frame,
        truncation=float(T),
        segments=N,
        dominant_exponent=dominant,
        measured_exponent=measured,
        required_exponent=required,
        max_relative_gap=float(gaps.max()) if len(gaps) else float("nan"),
        bound_holds=bool(frame["bound_holds"].all()),
        exponent_holds=measured >= required,
    )
