"""Report builders behind the command-line interface.

Each command turns a `RunConfig` into a `pandas.DataFrame`; writing it out
is left to the caller.
"""

import logging
import math
from typing import Dict, List

import numpy as np
import pandas as pd

from src.errors import NoRootError, UnsupportedPayoffError
from src.model.intensity import intensity_curve
from src.model.model_types import Measure, Regime
from src.montecarlo.oracle import mc_expected_ttm, mc_linear_price
from src.pde.hedging import hedge_report
from src.pde.indifference import (
    asymptotic_expansion,
    solve_buyer,
    solve_single_shock_buyer,
    solve_writer,
)
from src.pricing.black_scholes import (
    adjusted_ttm,
    adjusted_ttm_under,
    bs_delta,
    bs_price,
    implied_ttm,
)
from src.pricing.emm import linear_price, richardson
from src.cli.config import RunConfig

logger = logging.getLogger(__name__)

PRICE_COLUMNS = ["method", "kind", "t", "spot", "n", "gamma", "price"]


def _indifference_surface(config: RunConfig, quantity: float, grid):
    params = config.model_params()
    payoff = config.unit_payoff().with_quantity(quantity)
    solver = solve_buyer if quantity > 0 else solve_writer
    surface, _ = solver(params, payoff, grid)
    return surface


def cmd_price(config: RunConfig) -> pd.DataFrame:
    """Prices under every method at each configured quote time and spot."""
    params = config.model_params()
    payoff = config.unit_payoff()
    grid = config.grid()
    points = [(t, spot) for t in config.times for spot in config.spots]
    rows: List[Dict] = []

    def add(method, t, spot, price, n=math.nan, gamma=math.nan):
        rows.append(
            dict(
                method=method,
                kind=payoff.kind.value,
                t=t,
                spot=spot,
                n=n,
                gamma=gamma,
                price=price,
            )
        )

    for t, spot in points:
        remaining = params.T - t
        adjusted = adjusted_ttm(params, remaining, Regime.LIQUID)
        add("BS", t, spot, float(bs_price(payoff, remaining, spot, params.sigma0)))
        add("AdjBS", t, spot, float(bs_price(payoff, adjusted, spot, params.sigma0)))

    for measure in (Measure.MMM, Measure.MEMM):
        result = linear_price(params, payoff, measure, grid)
        for t, spot in points:
            add(measure.value, t, spot, result.quote(spot, t))
    logger.info("Linear prices done")

    bundle = asymptotic_expansion(params, payoff, grid)
    gamma = params.gamma
    for n in config.contracts:
        indifference = _indifference_surface(config, n, grid)
        single = solve_single_shock_buyer(params, payoff.with_quantity(n), grid)
        method = "IndiffBuyer" if n > 0 else "IndiffWriter"
        for t, spot in points:
            add(method, t, spot, indifference.quote(spot, t), n, gamma)
            add("SingleShock", t, spot, single.quote(spot, t), n, gamma)
            add("Asympt1", t, spot, bundle.quote(spot, gamma, n, t), n, gamma)
        logger.info("Indifference prices done for n=%g", n)

    return pd.DataFrame(rows, columns=PRICE_COLUMNS)


def _safe_implied(payoff, spot, price, sigma0, remaining) -> float:
    try:
        return implied_ttm(payoff, spot, price, sigma0, remaining)
    except NoRootError as exc:
        logger.warning("No implied TTM at S=%g: %s", spot, exc)
        return math.nan


def cmd_ttm(config: RunConfig) -> pd.DataFrame:
    """Adjusted and implied TTMs along a calendar-time sweep and a spot sweep."""
    params = config.model_params()
    payoff = config.unit_payoff()
    if payoff.is_digital:
        raise UnsupportedPayoffError(
            "implied TTM needs a price monotone in maturity; digital prices are not"
        )
    n = config.contracts[0]
    surface = _indifference_surface(config, n, config.grid())
    memm_curve = intensity_curve(params, Measure.MEMM)

    def row(sweep, t, spot):
        remaining = params.T - t
        price = surface.quote(spot, t)
        return dict(
            sweep=sweep,
            t=t,
            spot=spot,
            n=n,
            remaining=remaining,
            adjusted_ttm=adjusted_ttm(params, remaining, Regime.LIQUID),
            adjusted_ttm_memm=adjusted_ttm_under(memm_curve, remaining, Regime.LIQUID),
            implied_ttm=_safe_implied(payoff, spot, price, params.sigma0, remaining),
        )

    points = config.sweep_points
    times = params.T * np.arange(points) / points
    spots = np.linspace(0.5 * config.K, 1.5 * config.K, points)
    rows = [row("time", float(t), float(spot)) for spot in config.spots for t in times]
    rows += [row("spot", 0.0, float(spot)) for spot in spots]
    return pd.DataFrame(rows)


def cmd_hedge(config: RunConfig) -> pd.DataFrame:
    """Delta curves and the indifference hedge along a spot sweep at t = 0."""
    params = config.model_params()
    n = config.contracts[0]
    payoff = config.unit_payoff().with_quantity(n)
    surface = _indifference_surface(config, n, config.grid())

    rows = []
    for spot in np.linspace(0.5 * config.K, 1.5 * config.K, config.sweep_points):
        spot = float(spot)
        try:
            report = hedge_report(params, payoff, surface, 0.0, spot)
        except NoRootError as exc:
            logger.warning("No decomposition at S=%g: %s", spot, exc)
            report = hedge_report(params, payoff, surface, 0.0, spot, full=False)
        parts = report.decomposition
        rows.append(
            dict(
                spot=spot,
                n=n,
                bs_delta=float(bs_delta(payoff, params.T, spot, params.sigma0)),
                adjusted_delta=report.adjusted_delta,
                indiff_delta=report.indiff_delta,
                hedge_position=report.hedge_position,
                merton_position=report.merton_dollar_position,
                base=parts.base,
                adjusted_spread=parts.adjusted_spread if parts.full else math.nan,
                implied_spread=parts.implied_spread if parts.full else math.nan,
                smile_correction=parts.smile_correction if parts.full else math.nan,
                residual=parts.total() - parts.base,
            )
        )
    return pd.DataFrame(rows)


def _check(rows, check, value, reference, tolerance, **extra):
    error = abs(value - reference)
    rows.append(
        dict(
            check=check,
            **extra,
            value=value,
            reference=reference,
            error=error,
            tolerance=tolerance,
            passed=bool(error <= tolerance),
        )
    )


def cmd_converge(config: RunConfig) -> pd.DataFrame:
    """Grid-halving ladder and Monte Carlo cross-checks with pass/fail flags.

    The oracle check compares the Richardson extrapolation of the two finest
    rungs with Monte Carlo, allowing three standard errors plus the distance
    to the extrapolation one rung coarser.
    """
    params = config.model_params()
    payoff = config.unit_payoff()
    base_steps = config.nsteps or config.grid().n_time
    ladder = [max(1, base_steps // 4), max(1, base_steps // 2), base_steps, 2 * base_steps]
    rows: List[Dict] = []

    quotes = {}
    for measure in (Measure.MMM, Measure.MEMM):
        for steps in ladder:
            result = linear_price(params, payoff, measure, config.grid(steps))
            quotes[measure, steps] = [result.quote(spot) for spot in config.spots]
            logger.info("%s ladder: %d steps", measure.value, steps)

    for measure in (Measure.MMM, Measure.MEMM):
        for k, spot in enumerate(config.spots):
            # changes[j] is the move of the quote from ladder[j] to ladder[j + 1] steps
            changes = [
                abs(quotes[measure, b][k] - quotes[measure, a][k])
                for a, b in zip(ladder, ladder[1:])
            ]
            for j in range(1, len(changes)):
                _check(
                    rows,
                    "ladder",
                    changes[j],
                    0.0,
                    changes[j - 1] + 1e-12,
                    measure=measure.value,
                    spot=spot,
                    n_steps=ladder[j + 1],
                )

            estimate = mc_linear_price(
                params, payoff, measure, spot, config.paths, config.seed, config.antithetic
            )
            # Richardson value of the two finest rungs against the pair one rung down
            fine = richardson(quotes[measure, ladder[3]][k], quotes[measure, ladder[2]][k], 2.0)
            coarse = richardson(
                quotes[measure, ladder[2]][k],
                quotes[measure, ladder[1]][k],
                ladder[2] / ladder[1],
            )
            _check(
                rows,
                "oracle",
                float(fine),
                estimate.mean,
                3.0 * estimate.std_error + abs(float(fine - coarse)),
                measure=measure.value,
                spot=spot,
                n_steps=ladder[3],
            )

    for regime in (Regime.LIQUID, Regime.ILLIQUID):
        estimate = mc_expected_ttm(
            params, Measure.MMM, params.T, regime, config.paths, config.seed, config.antithetic
        )
        _check(
            rows,
            f"adjusted_ttm_{regime.name.lower()}",
            adjusted_ttm(params, params.T, regime),
            estimate.mean,
            3.0 * estimate.std_error,
            measure=Measure.MMM.value,
            spot=math.nan,
            n_steps=math.nan,
        )

    return pd.DataFrame(rows)
