import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy.integrate import simpson

from src.constants import INTENSITY_MARGIN, INTENSITY_SAMPLES, SIMPSON_PANELS_PER_YEAR
from src.errors import ValidationError
from src.model.factors import (
    MertonFactors,
    SingleShockFactors,
    merton_factors,
    single_shock_factors,
)
from src.model.model_types import Measure, ModelParams, Regime
from src.utils import as_float

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntensityCurve:
    """Transition intensities of the liquidity chain under one measure.

    `nu01(t)` is the shock arrival rate seen from the liquid regime and
    `nu10(t)` the recovery rate seen from the illiquid one, both in calendar
    time on [0, T]. Under the single-shock measure, recovery leads to an
    absorbing liquid state.
    """

    measure: Measure
    T: float
    base_nu01: float
    base_nu10: float
    factors: MertonFactors | SingleShockFactors | None = None
    bound: Tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def is_constant(self) -> bool:
        return self.factors is None

    @property
    def is_single_shock(self) -> bool:
        return self.measure == Measure.MEMM_SINGLE_SHOCK

    def nu01(self, t: npt.ArrayLike) -> npt.NDArray | float:
        t = np.asarray(t, dtype=float)
        if self.factors is None:
            return as_float(np.full_like(t, self.base_nu01))
        return as_float(self.base_nu01 * np.asarray(self.factors.F1(t)) / self.factors.F0(t))

    def nu10(self, t: npt.ArrayLike) -> npt.NDArray | float:
        t = np.asarray(t, dtype=float)
        if self.factors is None:
            return as_float(np.full_like(t, self.base_nu10))
        if isinstance(self.factors, SingleShockFactors):
            num = self.factors.F2(t)
        else:
            num = self.factors.F0(t)
        return as_float(self.base_nu10 * np.asarray(num) / self.factors.F1(t))

    def rate(self, regime: int, t: npt.ArrayLike) -> npt.NDArray | float:
        """Intensity of leaving `regime` at time `t`."""
        if Regime(regime) == Regime.LIQUID:
            return self.nu01(t)
        return self.nu10(t)

    def closed_form_survival(self, regime: int, s: float, t: float) -> float:
        """Survival factor from the Merton-factor identities, when available."""
        if self.factors is None:
            return math.exp(-(self.base_nu01 if regime == 0 else self.base_nu10) * (t - s))
        if Regime(regime) == Regime.LIQUID:
            return float(self.factors.survival01(s, t))
        return float(self.factors.survival10(s, t))


def intensity_curve(params: ModelParams, measure: Measure | str) -> IntensityCurve:
    """Intensities of the chain under `measure`.

    The physical measure and the minimal martingale measure keep the
    constant generator; the minimal entropy measure tilts the rates by
    ratios of Merton factors.
    """
    measure = Measure.parse(measure)

    if measure in (Measure.PHYSICAL, Measure.MMM):
        return IntensityCurve(
            measure, params.T, params.nu01, params.nu10, None, (params.nu01, params.nu10)
        )

    if measure == Measure.MEMM:
        factors = merton_factors(params)
    else:
        factors = single_shock_factors(params)

    curve = IntensityCurve(measure, params.T, params.nu01, params.nu10, factors)
    samples = np.linspace(0.0, params.T, INTENSITY_SAMPLES)
    rates01 = np.asarray(curve.nu01(samples))
    rates10 = np.asarray(curve.nu10(samples))
    if not (np.all(np.isfinite(rates01)) and np.all(np.isfinite(rates10))):
        raise ValidationError(f"{measure.value} intensities are not finite on [0, T]")
    if np.any(rates01 < 0) or np.any(rates10 < 0):
        raise ValidationError(f"{measure.value} intensities turned negative")

    bound = (
        float(rates01.max()) * INTENSITY_MARGIN,
        float(rates10.max()) * INTENSITY_MARGIN,
    )
    logger.debug(
        "%s intensity bounds: nu01 <= %.6g, nu10 <= %.6g", measure.value, *bound
    )
    return IntensityCurve(measure, params.T, params.nu01, params.nu10, factors, bound)


def survival_factor(curve: IntensityCurve, i: int, s: float, t: float) -> float:
    """exp(-int_s^t nu_{i,1-i}(u) du) by composite Simpson on a fixed panel density."""
    if s < 0 or t > curve.T * (1.0 + 1e-12):
        raise ValidationError(f"interval [{s}, {t}] is outside [0, {curve.T}]")
    if t < s:
        raise ValidationError(f"reversed interval: s={s} > t={t}")
    if t == s:
        return 1.0

    panels = max(2, math.ceil(SIMPSON_PANELS_PER_YEAR * (t - s)))
    panels += panels % 2
    grid = np.linspace(s, t, panels + 1)
    integral = simpson(np.asarray(curve.rate(i, grid)), x=grid)
    return math.exp(-integral)
