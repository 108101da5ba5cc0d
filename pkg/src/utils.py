import math

import numpy as np
import numpy.typing as npt
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(x: npt.ArrayLike) -> npt.NDArray | float:
    """Standard normal distribution function, via the complementary error function."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


def normal_pdf(x: npt.ArrayLike) -> npt.NDArray | float:
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def expm1_ratio(x: npt.ArrayLike) -> npt.NDArray | float:
    """Return (e^x - 1) / x, continued by 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 1.0, np.expm1(safe) / safe)


def as_float(value: npt.ArrayLike) -> npt.NDArray | float:
    """Collapse 0-d arrays to Python floats, leave arrays alone."""
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr
