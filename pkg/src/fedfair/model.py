"""Core domain types for the mean-estimation federation game.

A problem instance is a pair of population constants plus a coalition of
players.  The constants are ``mu_e`` (expected sampling-noise variance) and
``sigma_sq`` (variance of the true means across players); every closed form
in this package depends on the population only through these two moments.

All types are immutable after construction and validate their invariants in
``__post_init__``, so a constructed value is always safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .exceptions import (
    DuplicatePlayerId,
    EmptyCoalition,
    NegativeVariance,
    NonPositiveSamples,
)

# Tolerance policy for closed-form cross-checks: relative 1e-9 with an
# absolute floor of 1e-12 (values can legitimately be zero).
REL_TOL = 1e-9
ABS_TOL = 1e-12


def close(a: float, b: float, rel: float = REL_TOL, abs_floor: float = ABS_TOL) -> bool:
    """True when a and b agree to the package-wide tolerance."""
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_floor)


class FederationMethod(str, Enum):
    """How a player's estimate is assembled from the coalition's local means."""

    LOCAL = "local"
    UNIFORM = "uniform"
    FINE_GRAINED = "fine_grained"


@dataclass(frozen=True)
class PopulationParams:
    """Population constants: noise level ``mu_e`` and mean-spread ``sigma_sq``.

    ``mu_e`` is the expected variance of a single sample around its player's
    true mean; ``sigma_sq`` is the variance of the true means themselves.
    Both are in squared target units.
    """

    mu_e: float
    sigma_sq: float

    def __post_init__(self) -> None:
        for name, value in (("mu_e", self.mu_e), ("sigma_sq", self.sigma_sq)):
            if not math.isfinite(value) or value < 0:
                raise NegativeVariance(
                    f"{name} must be finite and nonnegative, got {value!r}"
                )

    @property
    def noise_bias_ratio(self) -> float:
        """mu_e / sigma_sq; defined only for sigma_sq > 0."""
        if self.sigma_sq <= 0:
            raise ZeroDivisionError("noise/bias ratio needs sigma_sq > 0")
        return self.mu_e / self.sigma_sq


@dataclass(frozen=True)
class Player:
    """One agent, identified by ``id`` and contributing ``n`` samples.

    Sample counts are positive reals, not integers: every closed form and
    derivative-based check treats n continuously.  Only the simulation
    module insists on integer n, because it draws individual samples.
    """

    id: str
    n: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.n) or self.n <= 0:
            raise NonPositiveSamples(
                f"player {self.id!r}: n must be finite and > 0, got {self.n!r}"
            )


@dataclass(frozen=True)
class Coalition:
    """A nonempty group of players federating together, with distinct ids."""

    players: tuple[Player, ...]

    def __post_init__(self) -> None:
        if len(self.players) == 0:
            raise EmptyCoalition("a coalition needs at least one player")
        seen: set[str] = set()
        for p in self.players:
            if p.id in seen:
                raise DuplicatePlayerId(f"duplicate player id {p.id!r}")
            seen.add(p.id)

    @classmethod
    def from_sizes(cls, sizes: Iterable[float], prefix: str = "p") -> "Coalition":
        """Build a coalition from bare sample counts with generated ids."""
        return cls(tuple(Player(f"{prefix}{i + 1}", float(n)) for i, n in enumerate(sizes)))

    def ordered(self) -> tuple[Player, ...]:
        """Players in the fixed (sorted-by-id) accumulation order."""
        return tuple(sorted(self.players, key=lambda p: p.id))

    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.players)

    def player(self, player_id: str) -> Player:
        for p in self.players:
            if p.id == player_id:
                return p
        raise KeyError(player_id)

    def __contains__(self, player_id: str) -> bool:
        return any(p.id == player_id for p in self.players)

    def __len__(self) -> int:
        return len(self.players)

    @property
    def total(self) -> float:
        """Total sample count, accumulated in sorted-by-id order."""
        return sum(p.n for p in self.ordered())

    @property
    def sum_sq(self) -> float:
        """Sum of squared sample counts, accumulated in sorted-by-id order."""
        return sum(p.n * p.n for p in self.ordered())


@dataclass(frozen=True)
class Scenario:
    """A validated (params, coalition) pair."""

    params: PopulationParams
    coalition: Coalition


def validate_scenario(params: PopulationParams, coalition: Coalition) -> Scenario:
    """Check every type invariant and return the scenario.

    The dataclasses validate at construction, so this re-check matters for
    values produced by deserialization tricks or ``dataclasses.replace``;
    the first violated invariant is reported via its dedicated exception.
    """
    PopulationParams(params.mu_e, params.sigma_sq)
    for p in coalition.players:
        Player(p.id, p.n)
    Coalition(coalition.players)
    return Scenario(params, coalition)
