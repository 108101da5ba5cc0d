"""Backward time-marching for the coupled liquid/illiquid price system.

The liquid-regime price `p` diffuses in log-price and reacts to the
illiquid-regime price `q` through

    p_t + L p + (nu01(t) / gamma) (1 - e^{-gamma (q - p)}) = 0,
    q_t + (nu10(t) / gamma) (1 - e^{-gamma (p - q)}) = 0,

with `L = sigma0^2 / 2 (d_zz - d_z)`; `gamma = 0` is the linear limit. Each
step is implicit in the diffusion of `p`, with the reaction linearised
about the previous level, followed by an exact integrating-factor update of
`q` holding `p` at its new value.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import numpy.typing as npt
from scipy.linalg import solve_banded

from src.constants import EXPONENT_CAP
from src.errors import NumericalError, ValidationError
from src.pde.grid import GridSpec

logger = logging.getLogger(__name__)

Rate = Callable[[float], float]


def solve_tridiagonal(
    lower: npt.NDArray, diag: npt.NDArray, upper: npt.NDArray, rhs: npt.NDArray
) -> npt.NDArray:
    """Solve a tridiagonal system Ax = rhs.

    A has:
      - lower: subdiagonal (length n-1)  -> A[i, i-1]
      - diag:  main diagonal (length n)  -> A[i, i]
      - upper: superdiagonal (length n-1)-> A[i, i+1]

    The matrices built here are strictly diagonally dominant, so elimination
    without pivoting is stable; losing dominance is reported as a breakdown.
    """
    n = diag.size
    if rhs.size != n:
        raise ValidationError("rhs length must match diag length")
    if lower.size != n - 1 or upper.size != n - 1:
        raise ValidationError("lower/upper must have length n-1")

    off = np.zeros(n)
    off[1:] += np.abs(lower)
    off[:-1] += np.abs(upper)
    if np.any(np.abs(diag) <= off):
        raise NumericalError("tridiagonal pivot breakdown: diagonal dominance lost")

    bands = np.zeros((3, n))
    bands[0, 1:] = upper
    bands[1] = diag
    bands[2, :-1] = lower
    return solve_banded((1, 1), bands, rhs, overwrite_ab=True, check_finite=False)


@dataclass(frozen=True)
class LogPriceOperator:
    """Centred finite differences of `L` on the grid nodes.

    The far-field condition `S^2 p_SS = 0` makes `L` vanish at both ends,
    leaving only the reaction terms on the boundary rows.
    """

    grid: GridSpec

    @property
    def lower_coef(self) -> float:
        dz = self.grid.delta_z
        return 0.5 * self.grid.sigma0**2 * (1.0 / dz**2 + 0.5 / dz)

    @property
    def upper_coef(self) -> float:
        dz = self.grid.delta_z
        return 0.5 * self.grid.sigma0**2 * (1.0 / dz**2 - 0.5 / dz)

    def implicit_bands(self, reaction: npt.NDArray):
        """Bands of (1/dt + reaction - L)."""
        n = self.grid.n_space + 1
        diag = 1.0 / self.grid.delta_t + np.broadcast_to(reaction, (n,)).astype(float)
        diag[1:-1] += self.lower_coef + self.upper_coef
        lower = np.full(n - 1, -self.lower_coef)
        upper = np.full(n - 1, -self.upper_coef)
        lower[-1] = 0.0
        upper[0] = 0.0
        return lower, diag, upper

    def implicit_solve(
        self, p_next: npt.NDArray, reaction: npt.NDArray, source: npt.NDArray
    ) -> npt.NDArray:
        """Solve (1/dt + reaction - L) p = (1/dt + reaction) p_next + source."""
        lower, diag, upper = self.implicit_bands(reaction)
        rhs = (1.0 / self.grid.delta_t + reaction) * p_next + source
        return solve_tridiagonal(lower, diag, upper, rhs)

    def apply(self, values: npt.NDArray) -> npt.NDArray:
        """L applied to `values`, zero on the boundary nodes."""
        out = np.zeros_like(values)
        out[1:-1] = (
            self.lower_coef * values[:-2]
            - (self.lower_coef + self.upper_coef) * values[1:-1]
            + self.upper_coef * values[2:]
        )
        return out


def _check_exponent(x: npt.NDArray, gamma: float, step: int, what: str):
    if gamma == 0.0:
        return
    worst = gamma * float(np.max(np.abs(x)))
    if worst > EXPONENT_CAP:
        raise NumericalError(
            f"exponent gamma*|{what}| = {worst:.4g} exceeds {EXPONENT_CAP:g} at step {step}; "
            f"reduce the contract count or risk aversion"
        )


def _check_finite(values: npt.NDArray, step: int):
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values at time step {step}")


def reaction_terms(x: npt.NDArray, gamma: float) -> Tuple[npt.NDArray, npt.NDArray]:
    """Linearisation weights of (1 - e^{-gamma x}) / gamma: (e^{-gamma x}, value)."""
    if gamma == 0.0:
        return np.ones_like(x), x.copy()
    return np.exp(-gamma * x), -np.expm1(-gamma * x) / gamma


def recovery_update(
    p_new: npt.NDArray, q_next: npt.NDArray, nu10: float, dt: float, gamma: float
) -> npt.NDArray:
    """Exact step of the q-equation over dt with p frozen at `p_new`."""
    b = np.exp(-nu10 * dt)
    y = q_next - p_new
    if gamma == 0.0:
        return p_new + b * y
    return p_new - np.log1p(b * np.expm1(-gamma * y)) / gamma


class ImexStepper:
    """Marches the coupled (p, q) system backward from the terminal time."""

    def __init__(self, grid: GridSpec, nu01: Rate, nu10: Rate, gamma: float = 0.0):
        if gamma < 0:
            raise ValidationError(f"gamma must be nonnegative, got {gamma}")
        self.grid = grid
        self.operator = LogPriceOperator(grid)
        self.nu01 = nu01
        self.nu10 = nu10
        self.gamma = gamma

    def step(self, i: int, p_next: npt.NDArray, q_next: npt.NDArray):
        """Values at level i from the values at level i + 1."""
        t = self.grid.times[i]
        x = q_next - p_next
        _check_exponent(x, self.gamma, i, "q - p")

        nu0 = float(self.nu01(t))
        weight, value = reaction_terms(x, self.gamma)
        p = self.operator.implicit_solve(p_next, nu0 * weight, nu0 * value)
        _check_exponent(q_next - p, self.gamma, i, "q - p")
        q = recovery_update(p, q_next, float(self.nu10(t)), self.grid.delta_t, self.gamma)
        _check_finite(p, i)
        _check_finite(q, i)
        return p, q

    def march(self, terminal: npt.NDArray) -> Tuple[npt.NDArray, npt.NDArray]:
        terminal = np.asarray(terminal, dtype=float)
        P = np.empty(self.grid.shape)
        Q = np.empty(self.grid.shape)
        P[-1] = terminal
        Q[-1] = terminal
        for i in range(self.grid.n_time - 1, -1, -1):
            P[i], Q[i] = self.step(i, P[i + 1], Q[i + 1])

        logger.debug(
            "IMEX march done: %d steps, %d nodes, gamma=%g",
            self.grid.n_time,
            self.grid.n_space + 1,
            self.gamma,
        )
        return P, Q

    def march_first_order(
        self, P0: npt.NDArray, Q0: npt.NDArray
    ) -> Tuple[npt.NDArray, npt.NDArray]:
        """Derivative in gamma at gamma = 0 of the discrete march, given its gamma = 0 solution."""
        dt = self.grid.delta_t
        P1 = np.zeros(self.grid.shape)
        Q1 = np.zeros(self.grid.shape)
        for i in range(self.grid.n_time - 1, -1, -1):
            t = self.grid.times[i]
            nu0 = float(self.nu01(t))
            x0 = Q0[i + 1] - P0[i + 1]
            source = (Q1[i + 1] - P1[i + 1]) - 0.5 * x0**2 + x0 * (P0[i] - P0[i + 1])
            P1[i] = self.operator.implicit_solve(P1[i + 1], np.full_like(x0, nu0), nu0 * source)

            b = np.exp(-float(self.nu10(t)) * dt)
            y0 = Q0[i + 1] - P0[i]
            Q1[i] = P1[i] + b * (Q1[i + 1] - P1[i]) - 0.5 * b * (1.0 - b) * y0**2
            _check_finite(P1[i], i)
        return P1, Q1

    def march_driven(
        self, terminal: npt.NDArray, Q: npt.NDArray
    ) -> npt.NDArray:
        """March p alone against a prescribed illiquid-regime surface `Q`."""
        P = np.empty(self.grid.shape)
        P[-1] = terminal
        for i in range(self.grid.n_time - 1, -1, -1):
            t = self.grid.times[i]
            x = Q[i + 1] - P[i + 1]
            _check_exponent(x, self.gamma, i, "q - p")
            nu0 = float(self.nu01(t))
            weight, value = reaction_terms(x, self.gamma)
            P[i] = self.operator.implicit_solve(P[i + 1], nu0 * weight, nu0 * value)
            _check_finite(P[i], i)
        return P
