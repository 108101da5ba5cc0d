import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import numpy.typing as npt
from scipy.interpolate import CubicSpline

from src.constants import DEFAULT_STEPS_PER_YEAR, DOMAIN_WIDTH_SD, MIN_SPACE_NODES
from src.errors import NumericalError, ValidationError
from src.model.model_types import ModelParams, Payoff, Regime, payoff_eval


@dataclass(frozen=True)
class GridSpec:
    """Uniform (t, z) mesh with z = log S.

    `n_time` and `n_space` count intervals, so there are `n_time + 1` time
    levels and `n_space + 1` space nodes. The space step is tied to the time
    step by `delta_z^2 = sigma0^2 delta_t + (sigma0^2 / 2)^2 delta_t^2`.
    """

    horizon: float
    sigma0: float
    n_time: int
    n_space: int
    z_min: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if self.sigma0 <= 0:
            raise ValidationError(f"sigma0 must be positive, got {self.sigma0}")
        if self.n_time < 1:
            raise ValidationError(f"n_time must be at least 1, got {self.n_time}")
        if self.n_space + 1 < MIN_SPACE_NODES:
            raise ValidationError(
                f"grid too coarse: {self.n_space + 1} space nodes, need at least {MIN_SPACE_NODES}"
            )
        if not math.isfinite(self.z_min):
            raise ValidationError("z_min must be finite")

    @property
    def delta_t(self) -> float:
        return self.horizon / self.n_time

    @property
    def delta_z(self) -> float:
        var = self.sigma0**2 * self.delta_t
        return math.sqrt(var + (0.5 * var) ** 2)

    @property
    def z_max(self) -> float:
        return self.z_min + self.n_space * self.delta_z

    @cached_property
    def times(self) -> npt.NDArray:
        return np.linspace(0.0, self.horizon, self.n_time + 1)

    @cached_property
    def nodes(self) -> npt.NDArray:
        return self.z_min + self.delta_z * np.arange(self.n_space + 1)

    @cached_property
    def spots(self) -> npt.NDArray:
        return np.exp(self.nodes)

    @property
    def shape(self):
        return self.n_time + 1, self.n_space + 1

    @classmethod
    def build(
        cls,
        params: ModelParams,
        strike: float,
        n_time: int | None = None,
        width_sd: float = DOMAIN_WIDTH_SD,
    ) -> "GridSpec":
        """Mesh covering ln K +/- `width_sd` standard deviations of log-price over T.

        The domain is widened by less than one step so that ln K falls halfway
        between two nodes.
        """
        if n_time is None:
            n_time = max(1, round(DEFAULT_STEPS_PER_YEAR * params.T))
        if width_sd <= 0:
            raise ValidationError(f"width_sd must be positive, got {width_sd}")
        if strike <= 0:
            raise ValidationError(f"strike must be positive, got {strike}")

        trial = cls(params.T, params.sigma0, n_time, MIN_SPACE_NODES, 0.0)
        half_width = width_sd * params.sigma0 * math.sqrt(params.T)
        below = max(0, math.ceil(half_width / trial.delta_z - 0.5))
        z_min = math.log(strike) - (below + 0.5) * trial.delta_z
        return cls(params.T, params.sigma0, n_time, 2 * below + 1, z_min)

    def index_of_time(self, t: float) -> float:
        if t < -1e-12 or t > self.horizon * (1.0 + 1e-12):
            raise ValidationError(f"t={t} is outside [0, {self.horizon}]")
        return min(max(t, 0.0), self.horizon) / self.delta_t

    def check_spot(self, S: npt.ArrayLike):
        z = np.log(np.asarray(S, dtype=float))
        if np.any(z < self.z_min - 1e-12) or np.any(z > self.z_max + 1e-12):
            raise ValidationError(
                f"spot outside the grid [{math.exp(self.z_min):.6g}, {math.exp(self.z_max):.6g}]"
            )


class PriceSurface:
    """Gridded prices of one regime, read-only once built.

    Row `i` holds the values at `t_i = i delta_t`, so the last row is the
    terminal payoff.
    """

    def __init__(self, values: npt.ArrayLike, grid: GridSpec, regime: Regime, payoff: Payoff):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise ValidationError(f"values have shape {values.shape}, grid needs {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalError("price surface holds non-finite values")
        values.setflags(write=False)

        self.values = values
        self.grid = grid
        self.regime = Regime(regime)
        self.payoff = payoff

    def __repr__(self) -> str:
        return (
            f"PriceSurface(regime={self.regime.name}, kind={self.payoff.kind.value}, "
            f"shape={self.values.shape})"
        )

    @property
    def terminal(self) -> npt.NDArray:
        return self.values[-1]

    @property
    def initial(self) -> npt.NDArray:
        return self.values[0]

    def row(self, t: float = 0.0) -> npt.NDArray:
        """Values at time `t`, linear in time between grid levels."""
        x = self.grid.index_of_time(t)
        lo = min(int(math.floor(x)), self.grid.n_time)
        hi = min(lo + 1, self.grid.n_time)
        w = x - lo
        if w == 0.0 or lo == hi:
            return self.values[lo]
        return (1.0 - w) * self.values[lo] + w * self.values[hi]

    def quote(self, S: npt.ArrayLike, t: float = 0.0) -> npt.NDArray | float:
        self.grid.check_spot(S)
        spline = CubicSpline(self.grid.nodes, self.row(t))
        value = spline(np.log(np.asarray(S, dtype=float)))
        return float(value) if np.ndim(value) == 0 else value

    def delta(self, S: npt.ArrayLike, t: float = 0.0) -> npt.NDArray | float:
        """dp/dS from centred differences in z, divided by S."""
        self.grid.check_spot(S)
        S = np.asarray(S, dtype=float)
        slope = np.gradient(self.row(t), self.grid.delta_z)
        value = CubicSpline(self.grid.nodes, slope)(np.log(S)) / S
        return float(value) if np.ndim(value) == 0 else value

    def payoff_gap(self) -> float:
        """Largest distance between the terminal row and the payoff on grid nodes."""
        target = np.asarray(payoff_eval(self.payoff, self.grid.spots))
        return float(np.max(np.abs(self.terminal - target)))
