"""Zero-rate Black-Scholes prices and greeks in time-to-maturity form.

Also home of the two liquidity-adjusted maturities: the adjusted TTM (the
expected time the market stays liquid before the horizon) and the implied
TTM (the Black-Scholes maturity that reproduces a model price).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp
from scipy.optimize import bisect

from src.constants import (
    DEFAULT_SIGMA0,
    IMPLIED_TTM_BRACKET,
    IMPLIED_TTM_XTOL,
    LOW_TIME_VALUE,
)
from src.errors import NoRootError, UnsupportedPayoffError, ValidationError
from src.model.intensity import IntensityCurve
from src.model.model_types import ModelParams, Payoff, PayoffKind, Regime, payoff_eval
from src.utils import as_float, normal_cdf, normal_pdf

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BSQuote:
    price: float
    delta: float
    theta_ttm: float  # dP/dTTM
    charm_ttm: float  # dDelta/dTTM

    @property
    def delta_decay(self) -> float:
        """Change of delta as calendar time passes, -dDelta/dTTM."""
        return -self.charm_ttm


def _moneyness(payoff: Payoff, ttm: npt.NDArray, S: npt.NDArray, sigma0: float):
    sd = sigma0 * np.sqrt(ttm)
    d1 = (np.log(S / payoff.strike) + 0.5 * sd * sd) / sd
    return d1, d1 - sd, sd


def _prepare(ttm: npt.ArrayLike, S: npt.ArrayLike, sigma0: float):
    if sigma0 <= 0:
        raise ValidationError(f"sigma0 must be positive, got {sigma0}")
    ttm, S = np.broadcast_arrays(np.asarray(ttm, dtype=float), np.asarray(S, dtype=float))
    if np.any(ttm < 0):
        raise ValidationError("time-to-maturity must be nonnegative")
    if np.any(S <= 0):
        raise ValidationError("spot must be positive")
    return ttm, S


def bs_price(
    payoff: Payoff, ttm: npt.ArrayLike, S: npt.ArrayLike, sigma0: float = DEFAULT_SIGMA0
) -> npt.NDArray | float:
    """Price per unit contract. Broadcasts over `ttm` and `S`; ttm = 0 gives the payoff."""
    ttm, S = _prepare(ttm, S, sigma0)
    live = ttm > 0
    d1, d2, _ = _moneyness(payoff, np.where(live, ttm, 1.0), S, sigma0)
    K = payoff.strike

    match payoff.kind:
        case PayoffKind.VANILLA_CALL:
            value = S * normal_cdf(d1) - K * normal_cdf(d2)
        case PayoffKind.VANILLA_PUT:
            value = K * normal_cdf(-d2) - S * normal_cdf(-d1)
        case PayoffKind.DIGITAL_CALL:
            value = normal_cdf(d2)
        case PayoffKind.DIGITAL_PUT:
            value = normal_cdf(-d2)

    return as_float(np.where(live, value, np.asarray(payoff_eval(payoff, S))))


def bs_delta(
    payoff: Payoff, ttm: npt.ArrayLike, S: npt.ArrayLike, sigma0: float = DEFAULT_SIGMA0
) -> npt.NDArray | float:
    ttm, S = _prepare(ttm, S, sigma0)
    if np.any(ttm == 0):
        raise ValidationError("delta is singular at expiry")
    d1, d2, sd = _moneyness(payoff, ttm, S, sigma0)

    match payoff.kind:
        case PayoffKind.VANILLA_CALL:
            delta = normal_cdf(d1)
        case PayoffKind.VANILLA_PUT:
            delta = normal_cdf(d1) - 1.0
        case PayoffKind.DIGITAL_CALL:
            delta = normal_pdf(d2) / (S * sd)
        case PayoffKind.DIGITAL_PUT:
            delta = -normal_pdf(d2) / (S * sd)
    return as_float(delta)


def bs_greeks(
    payoff: Payoff, ttm: float, S: float, sigma0: float = DEFAULT_SIGMA0
) -> BSQuote:
    if ttm <= 0:
        raise ValidationError("greeks are singular at expiry")
    ttm_arr, S_arr = _prepare(ttm, S, sigma0)
    d1, d2, sd = (float(v) for v in _moneyness(payoff, ttm_arr, S_arr, sigma0))
    price = float(bs_price(payoff, ttm, S, sigma0))
    delta = float(bs_delta(payoff, ttm, S, sigma0))

    if payoff.is_digital:
        sign = 1.0 if payoff.kind.is_call else -1.0
        theta = -sign * float(normal_pdf(d2)) * d1 / (2.0 * ttm)
        charm = delta * (d1 * d2 - 1.0) / (2.0 * ttm)
    else:
        theta = S * float(normal_pdf(d1)) * sigma0 / (2.0 * math.sqrt(ttm))
        charm = -float(normal_pdf(d1)) * d2 / (2.0 * ttm)

    return BSQuote(price, delta, theta, charm)


def adjusted_ttm(params: ModelParams, horizon: float, regime: int = Regime.LIQUID) -> float:
    """Expected liquid time over `horizon` under the constant generator.

    Starting liquid this is
    `(nu01 + nu10 (nu01+nu10) T - nu01 e^{-(nu01+nu10) T}) / (nu01+nu10)^2`.
    """
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    if horizon == 0:
        return 0.0

    nu01, nu10 = params.nu01, params.nu10
    nu = nu01 + nu10
    decay = -math.expm1(-nu * horizon)
    if Regime(regime) == Regime.LIQUID:
        return (nu10 * nu * horizon + nu01 * decay) / nu**2
    return (nu10 * nu * horizon - nu10 * decay) / nu**2


def adjusted_ttm_under(
    curve: IntensityCurve, horizon: float, regime: int = Regime.LIQUID
) -> float:
    """Expected liquid time over the last `horizon` years before T under `curve`.

    Integrates the forward Kolmogorov equation of the chain together with the
    occupation time of its liquid states.
    """
    if horizon < 0 or horizon > curve.T * (1.0 + 1e-12):
        raise ValidationError(f"horizon must lie in [0, {curve.T}], got {horizon}")
    if horizon == 0:
        return 0.0
    start = max(curve.T - horizon, 0.0)
    y0 = [1.0, 0.0, 0.0, 0.0] if Regime(regime) == Regime.LIQUID else [0.0, 1.0, 0.0, 0.0]

    if curve.is_single_shock:

        def rhs(t, y):
            a, b = curve.nu01(t), curve.nu10(t)
            return [-a * y[0], a * y[0] - b * y[1], b * y[1], y[0] + y[2]]

    else:

        def rhs(t, y):
            a, b = curve.nu01(t), curve.nu10(t)
            return [-a * y[0] + b * y[1], a * y[0] - b * y[1], 0.0, y[0]]

    sol = solve_ivp(rhs, (start, curve.T), y0, method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise ValidationError(f"Kolmogorov integration failed: {sol.message}")
    return float(sol.y[3, -1])


def implied_ttm(
    payoff: Payoff,
    S: float,
    target_price: float,
    sigma0: float = DEFAULT_SIGMA0,
    horizon: float = 1.0,
) -> float:
    """Black-Scholes maturity whose price equals `target_price`, by bisection on [0, 10 horizon]."""
    if payoff.is_digital:
        raise UnsupportedPayoffError(
            "digital prices are not monotone in maturity, there is no unique implied TTM"
        )
    if S <= 0:
        raise ValidationError("spot must be positive")

    intrinsic = float(payoff_eval(payoff, S))
    time_value = target_price - intrinsic
    scale = max(1.0, abs(S))
    if time_value < -LOW_TIME_VALUE * scale:
        raise NoRootError(f"target {target_price} is below intrinsic value {intrinsic}")
    if time_value <= LOW_TIME_VALUE * scale:
        if time_value != 0:
            logger.warning(
                "Time value %.3g at S=%g is below resolution, implied TTM has low confidence",
                time_value,
                S,
            )
        return 0.0

    upper = IMPLIED_TTM_BRACKET * horizon
    ceiling = float(bs_price(payoff, upper, S, sigma0))
    if target_price > ceiling:
        raise NoRootError(
            f"target {target_price} exceeds the price {ceiling:.10g} at maturity {upper}"
        )

    return bisect(
        lambda ttm: float(bs_price(payoff, ttm, S, sigma0)) - target_price,
        0.0,
        upper,
        xtol=IMPLIED_TTM_XTOL,
        maxiter=500,
    )
