"""Scenario configuration and validation."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

RULES = ("dp", "gsp", "up")
ALGOS = ("ppo", "a2c", "dqn", "dpn", "ql", "vpg", "random")

# Bidder IDs used in tournament mode rosters.
TOURNAMENT_IDS = {"ppo": 1, "a2c": 2, "dqn": 3, "dpn": 4, "ql": 5, "vpg": 6}


class ConfigError(ValueError):
    """Raised when a scenario or experiment configuration is invalid."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one auction scenario.

    Invariant: total demand n_bidders * units_per_bidder strictly exceeds
    supply, so the auction is always competitive.
    """

    rule: str = "dp"
    n_bidders: int = 6
    units_per_bidder: int = 2
    supply: int = 4
    value_lo: float = 0.0
    value_hi: float = 10.0
    grid_levels: int = 21
    episodes: int = 100_000
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ConfigError(f"unknown auction rule {self.rule!r}; expected one of {RULES}")
        if self.n_bidders <= 1:
            raise ConfigError("n_bidders must be > 1")
        if self.units_per_bidder < 1:
            raise ConfigError("units_per_bidder must be >= 1")
        if self.supply <= 2:
            raise ConfigError("supply must be > 2")
        if self.n_bidders * self.units_per_bidder <= self.supply:
            raise ConfigError("total demand must exceed supply")
        if not self.value_lo < self.value_hi:
            raise ConfigError("value_lo must be < value_hi")
        if self.grid_levels < 2:
            raise ConfigError("grid_levels must be >= 2")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)
