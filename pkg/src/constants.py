"""Constants"""

from typing import Final

# Market and preference defaults
DEFAULT_MU0: Final = 0.06
DEFAULT_SIGMA0: Final = 0.3
DEFAULT_NU01: Final = 1.0
DEFAULT_NU10: Final = 12.0
DEFAULT_STRIKE: Final = 10.0
DEFAULT_HORIZON: Final = 1.0
DEFAULT_GAMMA: Final = 1.0

LIQUID: Final = 0
ILLIQUID: Final = 1

# Finite-difference grid
DEFAULT_STEPS_PER_YEAR: Final = 2000
DOMAIN_WIDTH_SD: Final = 6.0
MIN_SPACE_NODES: Final = 3
EXPONENT_CAP: Final = 700.0

# Intensity curves and quadrature
INTENSITY_SAMPLES: Final = 2001
INTENSITY_MARGIN: Final = 1.001
SIMPSON_PANELS_PER_YEAR: Final = 200
SHOCK_QUADRATURE_PANELS: Final = 400
SHOCK_QUADRATURE_TOL: Final = 1e-8
SHOCK_QUADRATURE_MAX_DOUBLINGS: Final = 4
RESONANCE_TOL: Final = 1e-12

# Black-Scholes helpers
IMPLIED_TTM_BRACKET: Final = 10.0
IMPLIED_TTM_XTOL: Final = 1e-14
LOW_TIME_VALUE: Final = 1e-12

# Monte Carlo
MC_BATCH_SIZE: Final = 65_536
MC_MIN_PATHS: Final = 100
MC_DEFAULT_PATHS: Final = 1_000_000
DEFAULT_SEED: Final = 20110506

# Reports
CSV_FLOAT_FORMAT: Final = "%.10g"
EXIT_OK: Final = 0
EXIT_CONFIG_ERROR: Final = 2
EXIT_NUMERICAL_ERROR: Final = 3
EXIT_ACCEPTANCE_FAILURE: Final = 4
