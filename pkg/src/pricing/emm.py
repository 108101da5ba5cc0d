"""Risk-neutral prices under the minimal martingale and minimal entropy measures."""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from src.constants import (
    DEFAULT_STEPS_PER_YEAR,
    DOMAIN_WIDTH_SD,
    SHOCK_QUADRATURE_MAX_DOUBLINGS,
    SHOCK_QUADRATURE_PANELS,
    SHOCK_QUADRATURE_TOL,
)
from src.errors import QuadratureError, ValidationError
from src.model.factors import single_shock_factors
from src.model.intensity import intensity_curve
from src.model.model_types import Measure, ModelParams, Payoff, Regime, payoff_eval
from src.pde.grid import GridSpec, PriceSurface
from src.pde.single_shock import march_single_shock
from src.pde.stepping import ImexStepper
from src.pricing.black_scholes import bs_price

logger = logging.getLogger(__name__)

LINEAR_MEASURES = (Measure.MMM, Measure.MEMM)


@dataclass(frozen=True)
class LinearPriceResult:
    surface_p: PriceSurface
    surface_q: PriceSurface
    measure: Measure
    grid: GridSpec

    def quote(self, spot: float, t: float = 0.0, regime: int = Regime.LIQUID) -> float:
        surface = self.surface_p if Regime(regime) == Regime.LIQUID else self.surface_q
        return surface.quote(spot, t)


def linear_price(
    params: ModelParams,
    payoff: Payoff,
    measure: Measure | str,
    grid: GridSpec | None = None,
) -> LinearPriceResult:
    """Price surfaces of one contract under the MMM or the MEMM.

    Solves `p_t + L p + nu01(t) (q - p) = 0`, `q_t + nu10(t) (p - q) = 0`
    with the same stepping as the indifference solvers.
    """
    measure = Measure.parse(measure)
    if measure not in LINEAR_MEASURES:
        raise ValidationError(f"linear_price supports MMM and MEMM, got {measure.value}")
    if grid is None:
        grid = GridSpec.build(params, payoff.strike)

    curve = intensity_curve(params, measure)
    terminal = np.asarray(payoff_eval(payoff, grid.spots))
    P, Q = ImexStepper(grid, curve.nu01, curve.nu10).march(terminal)
    logger.debug("%s linear price solved on %s grid", measure.value, grid.shape)

    return LinearPriceResult(
        PriceSurface(P, grid, Regime.LIQUID, payoff),
        PriceSurface(Q, grid, Regime.ILLIQUID, payoff),
        measure,
        grid,
    )


def memm_vs_mmm_spread(
    params: ModelParams, payoff: Payoff, spot: float, grid: GridSpec | None = None
) -> float:
    """p_MM - p_E at (0, spot)."""
    if grid is None:
        grid = GridSpec.build(params, payoff.strike)
    mmm = linear_price(params, payoff, Measure.MMM, grid).quote(spot)
    memm = linear_price(params, payoff, Measure.MEMM, grid).quote(spot)
    return mmm - memm


def richardson(fine: npt.ArrayLike, coarse: npt.ArrayLike, ratio: float) -> npt.NDArray:
    """Cancels the first-order error of two quotes whose time steps differ by `ratio`."""
    if ratio <= 1.0:
        raise ValidationError(f"step ratio must exceed 1, got {ratio}")
    fine, coarse = np.asarray(fine, dtype=float), np.asarray(coarse, dtype=float)
    return (ratio * fine - coarse) / (ratio - 1.0)


@dataclass(frozen=True)
class ExtrapolatedQuote:
    """Richardson-extrapolated linear prices at `spots`.

    `error` is the distance to the same extrapolation one halving coarser.
    """

    spots: Tuple[float, ...]
    values: npt.NDArray
    error: npt.NDArray
    n_time: int


def extrapolated_linear_price(
    params: ModelParams,
    payoff: Payoff,
    measure: Measure | str,
    spots: Sequence[float],
    n_time: int | None = None,
    width_sd: float = DOMAIN_WIDTH_SD,
) -> ExtrapolatedQuote:
    """Linear prices at t = 0 extrapolated from `n_time`, `n_time // 2` and `n_time // 4` steps."""
    if n_time is None:
        n_time = max(1, round(DEFAULT_STEPS_PER_YEAR * params.T))
    if n_time < 4:
        raise ValidationError(f"extrapolation needs at least 4 time steps, got {n_time}")

    levels = (n_time, n_time // 2, n_time // 4)
    quotes = []
    for steps in levels:
        grid = GridSpec.build(params, payoff.strike, steps, width_sd)
        result = linear_price(params, payoff, measure, grid)
        quotes.append(np.asarray(result.quote(np.asarray(spots, dtype=float)), dtype=float))

    fine = richardson(quotes[0], quotes[1], levels[0] / levels[1])
    coarse = richardson(quotes[1], quotes[2], levels[1] / levels[2])
    logger.debug("extrapolated %s quotes from %s steps", Measure.parse(measure).value, levels)
    return ExtrapolatedQuote(tuple(spots), fine, np.abs(fine - coarse), n_time)


def single_shock_memm_surface(
    params: ModelParams, payoff: Payoff, grid: GridSpec | None = None
) -> LinearPriceResult:
    """Single-shock MEMM surfaces from the finite-difference route."""
    if grid is None:
        grid = GridSpec.build(params, payoff.strike)
    P, Q = march_single_shock(params, payoff, grid, 1.0, 0.0)
    return LinearPriceResult(
        PriceSurface(P, grid, Regime.LIQUID, payoff),
        PriceSurface(Q, grid, Regime.ILLIQUID, payoff),
        Measure.MEMM_SINGLE_SHOCK,
        grid,
    )


def _simpson_weights(panels: int) -> np.ndarray:
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * panels)


def _shock_quadrature(params, payoff, factors, t: float, S: float, panels: int) -> float:
    T, H = params.T, params.T - t
    nu01, nu10 = params.nu01, params.nu10
    weights = _simpson_weights(panels)
    s = np.linspace(0.0, 1.0, panels + 1)
    # u = s^2 along the shock start and v = 1 - (1 - s)^2 along the recovery
    # keep P_BS smooth where the realized maturity vanishes
    u, v = s**2, 1.0 - (1.0 - s) ** 2
    du, dv = weights * 2.0 * s, weights * 2.0 * (1.0 - s)

    tau = t + H * u
    arrival = nu01 * factors.F1(tau) / factors.F0(tau) * factors.survival01(t, tau)
    # shock still running at T: the claim pays P_BS at the liquid time already elapsed
    stuck = factors.survival10(tau, T) * bs_price(payoff, H * u, S, params.sigma0)

    chunk = max(1, 2_000_000 // (panels + 1))
    ended = np.empty(panels + 1)
    for start in range(0, panels + 1, chunk):
        rows = tau[start : start + chunk, None]
        zeta = np.minimum(rows + (T - rows) * v[None, :], T)
        recovery = nu10 * factors.F2(zeta) / factors.F1(zeta) * factors.survival10(rows, zeta)
        ttm = np.maximum(H - (zeta - rows), 0.0)
        inner = recovery * bs_price(payoff, ttm, S, params.sigma0)
        ended[start : start + chunk] = (T - rows[:, 0]) * (inner @ dv)

    outer = H * float(du @ (arrival * (ended + stuck)))
    no_shock = float(factors.survival01(t, T)) * float(bs_price(payoff, H, S, params.sigma0))
    return no_shock + outer


def single_shock_memm_price(params: ModelParams, payoff: Payoff, t: float, S: float) -> float:
    """Single-shock MEMM price of one contract at (t, S), by nested quadrature.

    The claim pays `P_BS(realized TTM, S)`, so the price integrates
    Black-Scholes prices over the shock start time and the recovery time.
    The rectangle is refined by panel doubling until the value settles.
    """
    if not 0 <= t < params.T:
        raise ValidationError(f"t must lie in [0, T), got {t}")
    if S <= 0:
        raise ValidationError("spot must be positive")
    factors = single_shock_factors(params)

    panels = SHOCK_QUADRATURE_PANELS
    value = _shock_quadrature(params, payoff, factors, t, S, panels)
    for _ in range(SHOCK_QUADRATURE_MAX_DOUBLINGS):
        panels *= 2
        refined = _shock_quadrature(params, payoff, factors, t, S, panels)
        change = abs(refined - value)
        logger.debug("shock quadrature: %d panels, change %.3g", panels, change)
        value = refined
        if change <= SHOCK_QUADRATURE_TOL:
            return value

    raise QuadratureError(
        f"shock quadrature did not settle to {SHOCK_QUADRATURE_TOL:g} within the cap "
        f"of {SHOCK_QUADRATURE_MAX_DOUBLINGS} panel doublings, ending at {panels} panels per axis"
    )
