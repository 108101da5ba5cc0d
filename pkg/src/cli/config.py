"""Run configuration: flat `key = value` files plus command-line overrides."""

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Tuple

from src.constants import (
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_MU0,
    DEFAULT_NU01,
    DEFAULT_NU10,
    DEFAULT_SEED,
    DEFAULT_SIGMA0,
    DEFAULT_STRIKE,
    DOMAIN_WIDTH_SD,
    MC_DEFAULT_PATHS,
)
from src.errors import ConfigError, ValidationError
from src.model.model_types import ModelParams, Payoff, PayoffKind
from src.pde.grid import GridSpec

logger = logging.getLogger(__name__)

DEFAULT_SPOTS: Tuple[float, ...] = (8.0, 10.0, 12.0)
DEFAULT_CONTRACTS: Tuple[float, ...] = (10.0, 5.0, 1.0, -1.0, -5.0, -10.0)
DEFAULT_TIMES: Tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class RunConfig:
    mu0: float = DEFAULT_MU0
    sigma0: float = DEFAULT_SIGMA0
    nu01: float = DEFAULT_NU01
    nu10: float = DEFAULT_NU10
    gamma: float = DEFAULT_GAMMA
    T: float = DEFAULT_HORIZON
    K: float = DEFAULT_STRIKE
    payoff: PayoffKind = PayoffKind.VANILLA_CALL
    spots: Tuple[float, ...] = DEFAULT_SPOTS
    contracts: Tuple[float, ...] = DEFAULT_CONTRACTS
    times: Tuple[float, ...] = DEFAULT_TIMES
    nsteps: int | None = None
    width_sd: float = DOMAIN_WIDTH_SD
    paths: int = MC_DEFAULT_PATHS
    seed: int = DEFAULT_SEED
    antithetic: bool = False
    sweep_points: int = 21
    out: Path | None = field(default=None, compare=False)

    def override(self, **changes) -> "RunConfig":
        """Copy with every non-None change applied."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def model_params(self) -> ModelParams:
        return ModelParams(self.mu0, self.sigma0, self.nu01, self.nu10, self.gamma, self.T)

    def unit_payoff(self) -> Payoff:
        return Payoff(self.payoff, self.K, 1.0)

    def grid(self, n_time: int | None = None) -> GridSpec:
        return GridSpec.build(
            self.model_params(),
            self.K,
            n_time if n_time is not None else self.nsteps,
            self.width_sd,
        )

    def validate(self) -> "RunConfig":
        self.model_params()
        self.unit_payoff()
        if not self.spots:
            raise ConfigError("spots", "at least one spot is required")
        if any(s <= 0 for s in self.spots):
            raise ConfigError("spots", "spots must be positive")
        if not self.contracts or any(n == 0 for n in self.contracts):
            raise ConfigError("contracts", "contract counts must be nonzero")
        if not self.times or any(not 0 <= t < self.T for t in self.times):
            raise ConfigError("times", f"quote times must lie in [0, {self.T:g})")
        if self.nsteps is not None and self.nsteps < 1:
            raise ConfigError("nsteps", "must be a positive integer")
        if self.sweep_points < 2:
            raise ConfigError("sweep_points", "need at least two sweep points")
        return self


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.split(",") if item.strip())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


PARSERS: Dict[str, Callable[[str], object]] = {
    "mu0": float,
    "sigma0": float,
    "nu01": float,
    "nu10": float,
    "gamma": float,
    "T": float,
    "K": float,
    "payoff": PayoffKind.parse,
    "spots": _float_list,
    "contracts": _float_list,
    "times": _float_list,
    "nsteps": int,
    "width_sd": float,
    "paths": int,
    "seed": int,
    "antithetic": _bool,
    "sweep_points": int,
}


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = PARSERS[key](value)
        except (ValueError, ValidationError) as exc:
            raise ConfigError(key, str(exc)) from None
    return RunConfig(**values)


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; no file means the default parameter table."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    logger.info("Loaded configuration from %s", path)
    return parse_config(text)
