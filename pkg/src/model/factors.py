"""Closed-form Merton discount factors.

`F_i(t)` is the exponential-utility discount of an investor with no claim,
sitting in regime `i` at calendar time `t`. The triplet solves the linear
ODE `F' = (D - A) F` with `F(T) = 1`; the single-shock triplet solves the
same ODE for the three-state chain whose third state is liquid and
absorbing.

Every evaluator is written in time-to-maturity `tau = T - t` so that only
decaying exponentials appear.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from src.constants import RESONANCE_TOL
from src.errors import ResonanceError, ValidationError
from src.model.model_types import ModelParams
from src.utils import as_float, expm1_ratio

logger = logging.getLogger(__name__)


def _tau(T: float, t: npt.ArrayLike) -> npt.NDArray:
    t = np.asarray(t, dtype=float)
    if np.any(t > T * (1.0 + 1e-12)):
        raise ValidationError(f"time beyond the horizon T={T}")
    return np.maximum(T - t, 0.0)


@dataclass(frozen=True)
class MertonFactors:
    """Discount triplet (F0, F1, F2) of the two-regime model.

    `F0(t) = a1 e^{-lambda1 (T-t)} + a2 e^{-lambda2 (T-t)}` and
    `F1(t) = a1 m1 e^{-lambda1 (T-t)} + a2 m2 e^{-lambda2 (T-t)}`, where
    `m_k` is the second component of the eigenvector of `D - A` for
    `lambda_k`. `c_k = a_k e^{-lambda_k T}` are the coefficients in
    calendar time.
    """

    T: float
    d0: float
    nu01: float
    nu10: float
    lambda1: float
    lambda2: float
    a1: float
    a2: float
    m1: float
    m2: float

    @property
    def c1(self) -> float:
        return self.a1 * math.exp(-self.lambda1 * self.T)

    @property
    def c2(self) -> float:
        return self.a2 * math.exp(-self.lambda2 * self.T)

    def F0(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        if self.nu01 == 0.0:
            return as_float(np.exp(-self.d0 * tau))
        return as_float(
            self.a1 * np.exp(-self.lambda1 * tau) + self.a2 * np.exp(-self.lambda2 * tau)
        )

    def F1(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        if self.nu01 == 0.0:
            # The chain started illiquid recovers once and never leaves again.
            x = (self.d0 - self.nu10) * tau
            return as_float(np.exp(-self.d0 * tau) * (1.0 + self.d0 * tau * expm1_ratio(x)))
        return as_float(
            self.a1 * self.m1 * np.exp(-self.lambda1 * tau)
            + self.a2 * self.m2 * np.exp(-self.lambda2 * tau)
        )

    def F2(self, t: npt.ArrayLike) -> npt.NDArray | float:
        """Merton factor of a market that never freezes."""
        return as_float(np.exp(-self.d0 * _tau(self.T, t)))

    def dF0(self, t: npt.ArrayLike) -> npt.NDArray | float:
        """Time derivative of F0."""
        tau = _tau(self.T, t)
        if self.nu01 == 0.0:
            return as_float(self.d0 * np.exp(-self.d0 * tau))
        return as_float(
            self.a1 * self.lambda1 * np.exp(-self.lambda1 * tau)
            + self.a2 * self.lambda2 * np.exp(-self.lambda2 * tau)
        )

    def dF1(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        if self.nu01 == 0.0:
            x = (self.d0 - self.nu10) * tau
            return as_float(
                self.d0 * self.nu10 * tau * np.exp(-self.d0 * tau) * expm1_ratio(x)
            )
        return as_float(
            self.a1 * self.m1 * self.lambda1 * np.exp(-self.lambda1 * tau)
            + self.a2 * self.m2 * self.lambda2 * np.exp(-self.lambda2 * tau)
        )

    def survival01(self, s: npt.ArrayLike, t: npt.ArrayLike) -> npt.NDArray | float:
        """exp(-int_s^t nu_hat01) = e^{-(d0+nu01)(t-s)} F0(t) / F0(s)."""
        s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        return as_float(
            np.exp(-(self.d0 + self.nu01) * (t - s)) * np.asarray(self.F0(t)) / self.F0(s)
        )

    def survival10(self, s: npt.ArrayLike, t: npt.ArrayLike) -> npt.NDArray | float:
        """exp(-int_s^t nu_hat10) = e^{-nu10 (t-s)} F1(t) / F1(s)."""
        s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        return as_float(np.exp(-self.nu10 * (t - s)) * np.asarray(self.F1(t)) / self.F1(s))


def merton_factors(params: ModelParams) -> MertonFactors:
    d0, nu01, nu10 = params.d0, params.nu01, params.nu10

    s = d0 + nu01 + nu10
    # (d0 + nu01 - nu10)^2 + 4 nu01 nu10, never negative
    disc = (d0 + nu01 - nu10) ** 2 + 4.0 * nu01 * nu10
    lambda1 = 0.5 * (s + math.sqrt(disc))
    # product of the roots is d0 nu10; avoids cancellation in s - sqrt(disc)
    lambda2 = d0 * nu10 / lambda1

    if nu01 == 0.0:
        factors = MertonFactors(params.T, d0, nu01, nu10, lambda1, lambda2, 0.0, 1.0, 0.0, 1.0)
    else:
        a1 = (lambda2 - d0) / (lambda2 - lambda1)
        a2 = (lambda1 - d0) / (lambda1 - lambda2)
        factors = MertonFactors(
            params.T,
            d0,
            nu01,
            nu10,
            lambda1,
            lambda2,
            a1,
            a2,
            _eigen_ratio(d0, nu01, nu10, lambda1),
            _eigen_ratio(d0, nu01, nu10, lambda2),
        )

    logger.debug(
        "Merton factors: d0=%.6g lambda1=%.10g lambda2=%.10g", d0, lambda1, lambda2
    )
    return factors


def _eigen_ratio(d0: float, nu01: float, nu10: float, lam: float) -> float:
    # Both rows of (D - A - lam) v = 0 give v1 / v0; take the better conditioned one.
    if abs(nu10 - lam) > nu01:
        return nu10 / (nu10 - lam)
    return (d0 + nu01 - lam) / nu01


@dataclass(frozen=True)
class SingleShockFactors:
    """Discount triplet of the chain that allows at most one shock."""

    T: float
    d0: float
    nu01: float
    nu10: float

    @property
    def _k1(self) -> float:
        return self.d0 - self.nu10

    @property
    def _k0(self) -> float:
        return self.d0 + self.nu01 - self.nu10

    def F2(self, t: npt.ArrayLike) -> npt.NDArray | float:
        return as_float(np.exp(-self.d0 * _tau(self.T, t)))

    def F1(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        return as_float(
            (self.d0 * np.exp(-self.nu10 * tau) - self.nu10 * np.exp(-self.d0 * tau)) / self._k1
        )

    def F0(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        bump = (np.exp(-(self.d0 + self.nu01) * tau) - np.exp(-self.nu10 * tau)) / self._k0
        return as_float(np.asarray(self.F1(t)) + self.d0 * bump)

    def dF2(self, t: npt.ArrayLike) -> npt.NDArray | float:
        return as_float(self.d0 * np.asarray(self.F2(t)))

    def dF1(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        return as_float(
            self.d0 * self.nu10 * (np.exp(-self.nu10 * tau) - np.exp(-self.d0 * tau)) / self._k1
        )

    def dF0(self, t: npt.ArrayLike) -> npt.NDArray | float:
        tau = _tau(self.T, t)
        a = self.d0 + self.nu01
        bump = (a * np.exp(-a * tau) - self.nu10 * np.exp(-self.nu10 * tau)) / self._k0
        return as_float(np.asarray(self.dF1(t)) + self.d0 * bump)

    def survival01(self, s: npt.ArrayLike, t: npt.ArrayLike) -> npt.NDArray | float:
        s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        return as_float(
            np.exp(-(self.d0 + self.nu01) * (t - s)) * np.asarray(self.F0(t)) / self.F0(s)
        )

    def survival10(self, s: npt.ArrayLike, t: npt.ArrayLike) -> npt.NDArray | float:
        s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        return as_float(np.exp(-self.nu10 * (t - s)) * np.asarray(self.F1(t)) / self.F1(s))


def single_shock_factors(params: ModelParams) -> SingleShockFactors:
    d0, nu01, nu10 = params.d0, params.nu01, params.nu10
    scale = max(d0, nu01, nu10, 1.0)
    for name, gap in (("d0 - nu10", d0 - nu10), ("d0 + nu01 - nu10", d0 + nu01 - nu10)):
        if abs(gap) <= RESONANCE_TOL * scale:
            raise ResonanceError(f"single-shock factors are resonant: {name} = {gap:.3g}")
    return SingleShockFactors(params.T, d0, nu01, nu10)
