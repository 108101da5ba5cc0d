"""Monte Carlo oracle for linear prices.

Under any of the martingale measures used here the Brownian motion and the
liquidity chain are independent, and the price moves only while the market
is liquid. A claim on h(S_T) is therefore worth E[P_BS(realized TTM, S)],
where the realized TTM is the time the chain spends in liquid states before
the horizon. Only the chain is simulated; time-dependent intensities are
sampled by thinning against the curve's upper bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Tuple

import numpy as np
import numpy.typing as npt

from src.constants import DEFAULT_SEED, MC_BATCH_SIZE, MC_DEFAULT_PATHS, MC_MIN_PATHS
from src.errors import ValidationError
from src.model.intensity import IntensityCurve, intensity_curve
from src.model.model_types import Measure, ModelParams, Payoff, Regime
from src.pricing.black_scholes import bs_price

logger = logging.getLogger(__name__)

ORACLE_MEASURES = (Measure.MMM, Measure.MEMM, Measure.MEMM_SINGLE_SHOCK)

# single-shock chain: liquid -> illiquid -> liquid and absorbed
RECOVERED = 2

UniformSource = Callable[[], Tuple[npt.NDArray, npt.NDArray]]


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int

    def within(self, value: float, n_se: float = 3.0, slack: float = 0.0) -> bool:
        """Whether `value` lies within `n_se` standard errors (plus `slack`) of the mean."""
        return abs(value - self.mean) <= n_se * self.std_error + slack


def _simulate(
    curve: IntensityCurve, horizon: float, start_regime: int, source: UniformSource, size: int
) -> npt.NDArray:
    """Liquid occupation time over [T - horizon, T] for `size` paths."""
    T = curve.T
    if horizon < 0 or horizon > T * (1.0 + 1e-12):
        raise ValidationError(f"horizon must lie in [0, {T}], got {horizon}")

    time = np.full(size, max(T - horizon, 0.0))
    state = np.full(size, int(Regime(start_regime)))
    occupied = np.zeros(size)
    active = np.ones(size, dtype=bool)
    bounds = np.array([curve.bound[0], curve.bound[1], 0.0])
    proposals = accepted = 0

    while active.any():
        u_wait, u_accept = source()
        bound = bounds[state]
        with np.errstate(divide="ignore"):
            wait = np.where(bound > 0, -np.log1p(-u_wait) / np.where(bound > 0, bound, 1.0), np.inf)
        liquid = state != Regime.ILLIQUID

        finished = active & (time + wait >= T)
        occupied[finished & liquid] += T - time[finished & liquid]
        active &= ~finished

        moving = np.flatnonzero(active)
        if moving.size == 0:
            break
        occupied[moving] += np.where(liquid[moving], wait[moving], 0.0)
        time[moving] += wait[moving]

        rates = np.where(
            state[moving] == Regime.LIQUID,
            np.asarray(curve.nu01(time[moving])),
            np.asarray(curve.nu10(time[moving])),
        )
        jump = moving[u_accept[moving] * bound[moving] < rates]
        proposals += moving.size
        accepted += jump.size

        if curve.is_single_shock:
            state[jump] = np.where(state[jump] == Regime.LIQUID, Regime.ILLIQUID, RECOVERED)
        else:
            state[jump] = 1 - state[jump]

    if proposals:
        logger.debug(
            "thinning: %d proposals, acceptance ratio %.4f", proposals, accepted / proposals
        )
    return np.minimum(occupied, horizon)


def _uniforms(rng: np.random.Generator, size: int, antithetic: bool) -> UniformSource:
    if not antithetic:
        return lambda: (rng.random(size), rng.random(size))

    half = size // 2

    def draw():
        u, v = rng.random(half), rng.random(half)
        return np.concatenate([u, 1.0 - u]), np.concatenate([v, 1.0 - v])

    return draw


def sample_realized_ttm(
    curve: IntensityCurve,
    horizon: float,
    start_regime: int,
    rng_stream: np.random.Generator,
    size: int | None = None,
) -> npt.NDArray | float:
    """Realized time-to-maturity over the last `horizon` years, one value per path."""
    n = 1 if size is None else size
    ttm = _simulate(curve, horizon, start_regime, _uniforms(rng_stream, n, False), n)
    return float(ttm[0]) if size is None else ttm


def single_shock_sampler(
    params: ModelParams,
    horizon: float,
    rng_stream: np.random.Generator,
    size: int | None = None,
) -> npt.NDArray | float:
    """Realized TTM when at most one shock can occur, starting liquid."""
    curve = intensity_curve(params, Measure.MEMM_SINGLE_SHOCK)
    return sample_realized_ttm(curve, horizon, Regime.LIQUID, rng_stream, size)


def _batches(seed: int, n_paths: int) -> Iterator[Tuple[np.random.Generator, int]]:
    n_batches = math.ceil(n_paths / MC_BATCH_SIZE)
    streams = np.random.SeedSequence(seed).spawn(n_batches)
    for k, stream in enumerate(streams):
        size = min(MC_BATCH_SIZE, n_paths - k * MC_BATCH_SIZE)
        yield np.random.Generator(np.random.Philox(stream)), size


def _estimate(
    values_of: Callable[[npt.NDArray], npt.NDArray],
    curve: IntensityCurve,
    horizon: float,
    start_regime: int,
    n_paths: int,
    seed: int,
    antithetic: bool,
) -> MCEstimate:
    if n_paths < MC_MIN_PATHS:
        raise ValidationError(f"n_paths must be at least {MC_MIN_PATHS}, got {n_paths}")
    if antithetic and n_paths % 2:
        raise ValidationError("antithetic sampling needs an even path count")

    samples = []
    for rng, size in _batches(seed, n_paths):
        ttm = _simulate(curve, horizon, start_regime, _uniforms(rng, size, antithetic), size)
        values = values_of(ttm)
        if antithetic:
            half = size // 2
            values = 0.5 * (values[:half] + values[half:])
        samples.append(values)

    samples = np.concatenate(samples)
    mean = float(np.mean(samples))
    std_error = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
    logger.debug("MC estimate %.8g +/- %.3g over %d paths", mean, std_error, n_paths)
    return MCEstimate(mean, std_error, n_paths, seed)


def mc_linear_price(
    params: ModelParams,
    payoff: Payoff,
    measure: Measure | str,
    spot: float,
    n_paths: int = MC_DEFAULT_PATHS,
    seed: int = DEFAULT_SEED,
    antithetic: bool = False,
    start_regime: int = Regime.LIQUID,
) -> MCEstimate:
    """E[P_BS(realized TTM, spot)] for one contract at t = 0."""
    measure = Measure.parse(measure)
    if measure not in ORACLE_MEASURES:
        raise ValidationError(f"no linear oracle for measure {measure.value}")
    curve = intensity_curve(params, measure)
    return _estimate(
        lambda ttm: np.asarray(bs_price(payoff, ttm, spot, params.sigma0)),
        curve,
        params.T,
        start_regime,
        n_paths,
        seed,
        antithetic,
    )


def mc_expected_ttm(
    params: ModelParams,
    measure: Measure | str = Measure.MMM,
    horizon: float | None = None,
    start_regime: int = Regime.LIQUID,
    n_paths: int = MC_DEFAULT_PATHS,
    seed: int = DEFAULT_SEED,
    antithetic: bool = False,
) -> MCEstimate:
    """Mean realized TTM over the last `horizon` years (default: the whole horizon)."""
    curve = intensity_curve(params, measure)
    horizon = params.T if horizon is None else horizon
    return _estimate(lambda ttm: ttm, curve, horizon, start_regime, n_paths, seed, antithetic)
