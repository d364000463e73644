"""Tunables shared by every module of the phase-estimation toolkit."""
import logging

# =========================================================
# GRIDS
# =========================================================
DEFAULT_RULE = "gauss_legendre"
DEFAULT_GRID_POINTS = 512
GRID_RULES = ("gauss_legendre", "clenshaw_curtis", "uniform_midpoint")

# resolvable bandwidth: y_max = pi * n_points / NODES_PER_PERIOD
NODES_PER_PERIOD = 8

# rows of the Fourier kernel evaluated per block
FT_CHUNK = 1024

# Legendre coefficients below CHOP_TOL * max|c| are trimmed
CHOP_TOL = 1e-13
# a resolved series ends in a roundoff plateau; its last quarter sets the floor
CHOP_TAIL_FRACTION = 0.25
CHOP_PLATEAU = 1e-10
CHOP_NOISE_FACTOR = 2.0

# =========================================================
# TOLERANCES
# =========================================================
BOUNDARY_TOL = 1e-6
NORM_TOL = 1e-10
PRECISION_FLOOR = 1e-13
PROBABILITY_SLACK = 1e-9
COMPLEMENT_SWITCH = 1e-6
EIGEN_RESIDUAL_TOL = 1e-9
ROOT_TOL = 1e-10
ODE_RESIDUAL_REJECT = 1e-3
ODE_INNER_FRACTION = 0.9
MIN_TAIL_FLOOR = 1e-12

# =========================================================
# SEARCH RANGES
# =========================================================
R_MAX = 15.0
BETA_MIN = 0.05
MOMENT_Y_CAP = 150.0

# =========================================================
# SAMPLING
# =========================================================
CELLS_PER_APPLICATION = 64
KS_Z_LIMIT = 60.0
KS_Z_STEP = 0.02
DEFAULT_SEED = 20240101
CLI_COVERAGE_TRIALS = 10_000

# =========================================================
# OUTPUT
# =========================================================
CSV_FLOAT_FORMAT = "%.12g"
JSON_INDENT = 2
LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"
VERBOSITY_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def configure_logging(verbosity="warning"):
    level = VERBOSITY_LEVELS.get(str(verbosity).lower(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    return level
