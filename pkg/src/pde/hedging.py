import logging
from dataclasses import dataclass

from src.errors import UnsupportedPayoffError, ValidationError
from src.model.model_types import ModelParams, Payoff, Regime
from src.pde.grid import PriceSurface
from src.pricing.black_scholes import adjusted_ttm, bs_delta, implied_ttm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeltaDecomposition:
    """Indifference delta split into Black-Scholes pieces.

    base + adjusted_spread + implied_spread + smile_correction equals the
    indifference delta. Digitals carry no implied maturity, so only the base
    and the residual (held in smile_correction) are filled.
    """

    base: float
    adjusted_spread: float
    implied_spread: float
    smile_correction: float
    full: bool = True

    def total(self) -> float:
        return self.base + self.adjusted_spread + self.implied_spread + self.smile_correction


@dataclass(frozen=True)
class HedgeReport:
    t: float
    spot: float
    indiff_delta: float
    merton_dollar_position: float
    hedge_position: float
    adjusted_delta: float
    decomposition: DeltaDecomposition


def _intrinsic_slope(payoff: Payoff, S: float) -> float:
    if payoff.kind.is_call:
        return 1.0 if S > payoff.strike else 0.0
    return -1.0 if S < payoff.strike else 0.0


def hedge_report(
    params: ModelParams,
    payoff: Payoff,
    surface: PriceSurface,
    t: float,
    S: float,
    full: bool | None = None,
) -> HedgeReport:
    """Optimal stock position and delta decomposition at (t, S).

    `surface` is the liquid-regime per-contract indifference price. The
    dollar amount held in stock is `mu0 / (sigma0^2 gamma) - n S dp/dS`.
    """
    if surface.regime != Regime.LIQUID:
        raise ValidationError("hedging needs the liquid-regime surface")
    if not 0 <= t < params.T:
        raise ValidationError(f"t must lie in [0, T), got {t}")
    if full is None:
        full = not payoff.is_digital
    if full and payoff.is_digital:
        raise UnsupportedPayoffError(
            "digitals have no implied TTM, only base + residual is defined"
        )

    remaining = params.T - t
    indiff_delta = surface.delta(S, t)
    merton = params.mu0 / (params.sigma0**2 * params.gamma)
    hedge_position = merton - payoff.quantity * S * indiff_delta

    base = float(bs_delta(payoff, remaining, S, params.sigma0))
    adjusted = adjusted_ttm(params, remaining, Regime.LIQUID)
    adjusted_delta = float(bs_delta(payoff, adjusted, S, params.sigma0))

    if full:
        implied = implied_ttm(payoff, S, surface.quote(S, t), params.sigma0, remaining)
        if implied == 0.0:
            logger.warning("implied TTM is zero at S=%g, using the payoff slope", S)
            implied_delta = _intrinsic_slope(payoff, S)
        else:
            implied_delta = float(bs_delta(payoff, implied, S, params.sigma0))
        decomposition = DeltaDecomposition(
            base,
            adjusted_delta - base,
            implied_delta - adjusted_delta,
            indiff_delta - implied_delta,
        )
    else:
        decomposition = DeltaDecomposition(base, 0.0, 0.0, indiff_delta - base, full=False)

    return HedgeReport(
        t, S, indiff_delta, merton, hedge_position, adjusted_delta, decomposition
    )
