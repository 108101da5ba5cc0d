"""Exponential-utility indifference prices.

Buyer prices solve the semi-linear system stepped by `ImexStepper` with the
terminal payoff of all contracts bought. A writer of n contracts is a
buyer of -n, so both sides share one solver: the aggregate system is solved
for the signed quantity and divided by it, which gives per-contract prices
on either side.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.errors import ValidationError
from src.model.intensity import intensity_curve
from src.model.model_types import Measure, ModelParams, Payoff, Regime, payoff_eval
from src.pde.grid import GridSpec, PriceSurface
from src.pde.single_shock import march_single_shock
from src.pde.stepping import ImexStepper
from src.pricing.emm import linear_price

logger = logging.getLogger(__name__)


def _default_grid(params: ModelParams, payoff: Payoff, grid: GridSpec | None) -> GridSpec:
    return grid if grid is not None else GridSpec.build(params, payoff.strike)


def _solve_signed(
    params: ModelParams, payoff: Payoff, grid: GridSpec, signed_quantity: float
) -> Tuple[PriceSurface, PriceSurface]:
    curve = intensity_curve(params, Measure.MEMM)
    h = np.asarray(payoff_eval(payoff, grid.spots))
    stepper = ImexStepper(grid, curve.nu01, curve.nu10, params.gamma)
    P, Q = stepper.march(signed_quantity * h)

    P, Q = P / signed_quantity, Q / signed_quantity
    P[-1] = h
    Q[-1] = h
    logger.debug(
        "indifference solve: %s n=%g gamma=%g", payoff.kind.value, signed_quantity, params.gamma
    )
    return (
        PriceSurface(P, grid, Regime.LIQUID, payoff),
        PriceSurface(Q, grid, Regime.ILLIQUID, payoff),
    )


def solve_buyer(
    params: ModelParams, payoff: Payoff, grid: GridSpec | None = None
) -> Tuple[PriceSurface, PriceSurface]:
    """Per-contract buyer prices (p, q) for |quantity| contracts."""
    payoff.require_quantity()
    grid = _default_grid(params, payoff, grid)
    return _solve_signed(params, payoff, grid, abs(payoff.quantity))


def solve_writer(
    params: ModelParams, payoff: Payoff, grid: GridSpec | None = None
) -> Tuple[PriceSurface, PriceSurface]:
    """Per-contract writer prices (p^w, q^w) for |quantity| contracts written."""
    payoff.require_quantity()
    grid = _default_grid(params, payoff, grid)
    return _solve_signed(params, payoff, grid, -abs(payoff.quantity))


def indifference_price(
    params: ModelParams, payoff: Payoff, spot: float, grid: GridSpec | None = None, t: float = 0.0
) -> float:
    """Per-contract price at (t, spot): buyer side for quantity > 0, writer side below 0."""
    payoff.require_quantity()
    solver = solve_buyer if payoff.is_buyer else solve_writer
    surface_p, _ = solver(params, payoff, grid)
    return surface_p.quote(spot, t)


def solve_single_shock_buyer(
    params: ModelParams, payoff: Payoff, grid: GridSpec | None = None
) -> PriceSurface:
    """Liquid-regime per-contract price when at most one shock can occur.

    A negative quantity prices the writer side.
    """
    payoff.require_quantity()
    grid = _default_grid(params, payoff, grid)
    P, _ = march_single_shock(params, payoff, grid, payoff.quantity, params.gamma)
    return PriceSurface(P, grid, Regime.LIQUID, payoff)


@dataclass(frozen=True)
class AsymptoticBundle:
    """Zeroth and first order terms of the price in powers of gamma, per contract.

    `p0` and `q0` are the MEMM surfaces; `p1` and `q1` are their first-order
    corrections for one contract.
    """

    p0: PriceSurface
    q0: PriceSurface
    p1: PriceSurface
    q1: PriceSurface

    def first_order(self, gamma: float, quantity: float = 1.0) -> np.ndarray:
        """`p0 + quantity * gamma * p1` on the whole grid.

        Holding n contracts at risk aversion gamma prices like one contract at
        n * gamma, so the signed quantity scales the correction.
        """
        return self.p0.values + quantity * gamma * self.p1.values

    def quote(self, spot: float, gamma: float, quantity: float = 1.0, t: float = 0.0) -> float:
        return self.p0.quote(spot, t) + quantity * gamma * self.p1.quote(spot, t)


def asymptotic_expansion(
    params: ModelParams, payoff: Payoff, grid: GridSpec | None = None
) -> AsymptoticBundle:
    grid = _default_grid(params, payoff, grid)
    memm = linear_price(params, payoff, Measure.MEMM, grid)

    curve = intensity_curve(params, Measure.MEMM)
    stepper = ImexStepper(grid, curve.nu01, curve.nu10)
    P1, Q1 = stepper.march_first_order(memm.surface_p.values, memm.surface_q.values)

    return AsymptoticBundle(
        memm.surface_p,
        memm.surface_q,
        PriceSurface(P1, grid, Regime.LIQUID, payoff),
        PriceSurface(Q1, grid, Regime.ILLIQUID, payoff),
    )


def gamma_sweep(
    params: ModelParams,
    payoff: Payoff,
    gammas: Sequence[float],
    spot: float,
    grid: GridSpec | None = None,
) -> List[Tuple[float, float]]:
    """Per-contract indifference prices at `spot` for each risk aversion."""
    if len(gammas) == 0:
        raise ValidationError("gammas must not be empty")
    if any(g <= 0 for g in gammas):
        raise ValidationError("gammas must be positive")
    if list(gammas) != sorted(gammas):
        raise ValidationError("gammas must be sorted")

    grid = _default_grid(params, payoff, grid)
    sweep = [
        (float(g), indifference_price(params.replace(gamma=g), payoff, spot, grid))
        for g in gammas
    ]

    prices = [price for _, price in sweep]
    sign = 1.0 if payoff.is_buyer else -1.0
    if any(sign * (b - a) > 1e-12 for a, b in zip(prices, prices[1:])):
        logger.warning("indifference prices are not monotone in gamma: %s", sweep)
    return sweep


def extrapolate_to_zero(sweep: Sequence[Tuple[float, float]]) -> float:
    """Linear extrapolation of the two smallest risk aversions to gamma = 0."""
    if len(sweep) < 2:
        raise ValidationError("need at least two points to extrapolate")
    (g1, p1), (g2, p2) = sorted(sweep)[:2]
    if g1 == g2:
        raise ValidationError("extrapolation needs two distinct risk aversions")
    return p1 - g1 * (p2 - p1) / (g2 - g1)
