"""Model parameters and argument validation helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Raised when a parameter violates a precondition."""


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_finite(value, name: str, *, positive: bool = False, nonnegative: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")
    if positive and value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Physical and truncation parameters (natural units, hbar = c = 1).

    ``a`` is the gauge zero mode used by the single-block operator builders;
    the full Hamiltonian replaces it by the grid values.
    """

    L: float = 2 * math.pi
    e: float = 1.0
    a: float = 0.0
    N_cut: int = 2
    max_particles: int = 2
    M_grid: int = 8

    def __post_init__(self):
        object.__setattr__(self, "L", check_finite(self.L, "L", positive=True))
        object.__setattr__(self, "e", check_finite(self.e, "e", nonnegative=True))
        object.__setattr__(self, "a", check_finite(self.a, "a"))
        object.__setattr__(self, "N_cut", check_positive_int(self.N_cut, "N_cut", 1))
        object.__setattr__(
            self, "max_particles", check_positive_int(self.max_particles, "max_particles", 0)
        )
        object.__setattr__(self, "M_grid", check_positive_int(self.M_grid, "M_grid", 1))

    @property
    def k_unit(self) -> float:
        """Momentum quantum 2*pi/L."""
        return 2 * math.pi / self.L

    def momentum(self, n: int) -> float:
        return 2 * math.pi * n / self.L

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)
