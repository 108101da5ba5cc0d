import dataclasses
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np
import numpy.typing as npt

from src.constants import (
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_MU0,
    DEFAULT_NU01,
    DEFAULT_NU10,
    DEFAULT_SIGMA0,
    ILLIQUID,
    LIQUID,
)
from src.errors import ValidationError


class Regime(IntEnum):
    """State of the liquidity chain."""

    LIQUID = LIQUID
    ILLIQUID = ILLIQUID


class Measure(str, Enum):
    """Probability measure under which the chain's intensities are read."""

    PHYSICAL = "physical"
    MMM = "MMM"
    MEMM = "MEMM"
    MEMM_SINGLE_SHOCK = "MEMM_single_shock"

    @classmethod
    def parse(cls, tag: "str | Measure") -> "Measure":
        if isinstance(tag, cls):
            return tag
        for member in cls:
            if str(tag).lower() == member.value.lower():
                return member
        raise ValidationError(f"unknown measure tag {tag!r}")


class PayoffKind(str, Enum):
    VANILLA_CALL = "vanilla_call"
    VANILLA_PUT = "vanilla_put"
    DIGITAL_CALL = "digital_call"
    DIGITAL_PUT = "digital_put"

    @property
    def is_digital(self) -> bool:
        return self in (PayoffKind.DIGITAL_CALL, PayoffKind.DIGITAL_PUT)

    @property
    def is_call(self) -> bool:
        return self in (PayoffKind.VANILLA_CALL, PayoffKind.DIGITAL_CALL)

    @classmethod
    def parse(cls, tag: "str | PayoffKind") -> "PayoffKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise ValidationError(f"unknown payoff kind {tag!r}") from None


def _check_finite(**values: float):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Market and preference parameters of the two-regime model.

    The asset follows a geometric Brownian motion with drift `mu0` and
    volatility `sigma0` while the market is liquid; during a liquidity shock
    trading stops and the price is frozen. Shocks arrive at rate `nu01` and
    end at rate `nu10`.
    """

    mu0: float = DEFAULT_MU0
    sigma0: float = DEFAULT_SIGMA0
    nu01: float = DEFAULT_NU01
    nu10: float = DEFAULT_NU10
    gamma: float = DEFAULT_GAMMA
    T: float = DEFAULT_HORIZON

    def __post_init__(self):
        _check_finite(
            mu0=self.mu0,
            sigma0=self.sigma0,
            nu01=self.nu01,
            nu10=self.nu10,
            gamma=self.gamma,
            T=self.T,
        )
        if self.sigma0 <= 0:
            raise ValidationError(f"sigma0 must be positive, got {self.sigma0}")
        if self.nu01 < 0:
            raise ValidationError(f"nu01 must be nonnegative, got {self.nu01}")
        if self.nu10 <= 0:
            raise ValidationError(f"nu10 must be positive, got {self.nu10}")
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.T <= 0:
            raise ValidationError(f"T must be positive, got {self.T}")

    @property
    def d0(self) -> float:
        """Merton growth rate mu0^2 / (2 sigma0^2) of the liquid regime."""
        return self.mu0**2 / (2.0 * self.sigma0**2)

    def sharpe_ratio(self, regime: int = LIQUID) -> float:
        # The illiquid regime has no tradable risk.
        if Regime(regime) == Regime.ILLIQUID:
            return 0.0
        return self.mu0 / self.sigma0

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Payoff:
    """A European payoff on `quantity` contracts struck at `strike`.

    Positive quantities are bought, negative ones are written.
    """

    kind: PayoffKind
    strike: float
    quantity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind.parse(self.kind))
        _check_finite(strike=self.strike, quantity=self.quantity)
        if self.strike <= 0:
            raise ValidationError(f"strike must be positive, got {self.strike}")

    @property
    def is_digital(self) -> bool:
        return self.kind.is_digital

    @property
    def is_buyer(self) -> bool:
        return self.quantity > 0

    def require_quantity(self):
        if self.quantity == 0:
            raise ValidationError("quantity must be nonzero for indifference pricing")

    def with_quantity(self, quantity: float) -> "Payoff":
        return dataclasses.replace(self, quantity=quantity)

    def intrinsic(self, S: npt.ArrayLike) -> npt.NDArray | float:
        return payoff_eval(self, S)


def payoff_eval(payoff: Payoff, S: npt.ArrayLike) -> npt.NDArray | float:
    """Payoff per unit contract. Digitals pay on a strict inequality, so h(K) = 0."""
    S = np.asarray(S, dtype=float)
    if not np.all(S > 0):
        raise ValidationError("spot prices must be positive")
    K = payoff.strike
    match payoff.kind:
        case PayoffKind.VANILLA_CALL:
            value = np.maximum(S - K, 0.0)
        case PayoffKind.VANILLA_PUT:
            value = np.maximum(K - S, 0.0)
        case PayoffKind.DIGITAL_CALL:
            value = (S > K).astype(float)
        case PayoffKind.DIGITAL_PUT:
            value = (S < K).astype(float)
    return float(value) if value.ndim == 0 else value
