"""Single-shock approximation: at most one liquidity shock before maturity.

Once the shock ends the market stays liquid, so the illiquid-regime value
is a certainty equivalent of Black-Scholes prices taken at the random
recovery time, and only the liquid-regime equation needs marching.
"""

import logging
from typing import Tuple

import numpy as np
import numpy.typing as npt

from src.errors import NumericalError, ValidationError
from src.model.intensity import intensity_curve
from src.model.model_types import Measure, ModelParams, Payoff, payoff_eval
from src.pde.grid import GridSpec
from src.pde.stepping import ImexStepper
from src.pricing.black_scholes import bs_price

logger = logging.getLogger(__name__)


def recovery_certainty_equivalent(
    params: ModelParams, payoff: Payoff, grid: GridSpec, quantity: float, gamma: float
) -> npt.NDArray:
    """Illiquid-regime value of `quantity` contracts on every grid node.

    With `tau = T - t` and `X(v) = quantity * P_BS(v, S)` this is
    `-(1/gamma) log(g / W)` where

        g(tau) = int_0^tau nu10 e^{-nu10 (tau - v)} e^{-d0 v} e^{-gamma X(v)} dv
                 + e^{-nu10 tau} e^{-gamma X(0)}

    and `W` is the same expression with `X = 0`. At `gamma = 0` it is the
    weighted average of `X`. The integral is accumulated one time step at a
    time with a Simpson panel per step, after shifting the exponent by its
    minimum over maturities on each node.
    """
    if gamma < 0:
        raise ValidationError(f"gamma must be nonnegative, got {gamma}")
    n, dt = grid.n_time, grid.delta_t
    nu10, d0 = params.nu10, params.d0

    ttm = 0.5 * dt * np.arange(2 * n + 1)
    X = quantity * np.asarray(bs_price(payoff, ttm[:, None], grid.spots[None, :], grid.sigma0))
    decay = np.exp(-d0 * ttm)

    if gamma > 0:
        shift = np.min(gamma * X, axis=0)
        mapped = np.exp(-(gamma * X - shift))
    else:
        shift = None
        mapped = X

    full, half = np.exp(-nu10 * dt), np.exp(-nu10 * 0.5 * dt)
    G = np.empty(grid.shape)
    W = np.empty(n + 1)
    G[0] = mapped[0]
    W[0] = 1.0
    for k in range(n):
        lo, mid, hi = 2 * k, 2 * k + 1, 2 * k + 2
        f_lo, f_mid, f_hi = (nu10 * decay[j] * mapped[j] for j in (lo, mid, hi))
        G[k + 1] = full * G[k] + dt / 6.0 * (full * f_lo + 4.0 * half * f_mid + f_hi)
        w_lo, w_mid, w_hi = (nu10 * decay[j] for j in (lo, mid, hi))
        W[k + 1] = full * W[k] + dt / 6.0 * (full * w_lo + 4.0 * half * w_mid + w_hi)

    if gamma > 0:
        if np.any(G <= 0):
            raise NumericalError("certainty-equivalent integral underflowed")
        ce = (shift[None, :] - np.log(G) + np.log(W)[:, None]) / gamma
    else:
        ce = G / W[:, None]

    # G is indexed by time-to-maturity; flip to calendar time levels.
    return ce[::-1].copy()


def march_single_shock(
    params: ModelParams,
    payoff: Payoff,
    grid: GridSpec,
    quantity: float,
    gamma: float,
) -> Tuple[npt.NDArray, npt.NDArray]:
    """Per-contract (p, q) values of `quantity` contracts in the single-shock model."""
    if quantity == 0:
        raise ValidationError("quantity must be nonzero")
    curve = intensity_curve(params, Measure.MEMM_SINGLE_SHOCK)
    Q = recovery_certainty_equivalent(params, payoff, grid, quantity, gamma)

    h = np.asarray(payoff_eval(payoff, grid.spots))
    stepper = ImexStepper(grid, curve.nu01, curve.nu10, gamma)
    P = stepper.march_driven(quantity * h, Q)
    logger.debug("single-shock march: quantity=%g gamma=%g", quantity, gamma)

    P, Q = P / quantity, Q / quantity
    P[-1] = h
    Q[-1] = h
    return P, Q
