"""Closed-form expected mean-squared errors for each federation method.

Setting: player j owns n_j samples with noise variance averaging ``mu_e``,
and true means are spread with variance ``sigma_sq``.  Estimates are convex
combinations of the coalition's local sample means.  For combination
weights v_i (unit sum, target j) the expected squared error is

    mu_e * sum_i v_i^2 / n_i
      + sigma_sq * (sum_{i != j} v_i^2 + (sum_{i != j} v_i)^2)

Three weightings matter:

* local:        v_j = 1, everything else 0      ->  mu_e / n_j
* uniform:      v_i = n_i / T with T = sum n_i  ->  the pooled-average error
* fine-grained: the unit-sum weights minimizing player j's error, with the
  closed-form optimum expressed through V_i = sigma_sq + mu_e / n_i and
  T = sum_i 1 / V_i.

All sums over players run in sorted-by-id order so repeated evaluations are
bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .exceptions import (
    DegenerateParams,
    NonUnitSum,
    TargetNotInCoalition,
    WeightDomainMismatch,
)
from .model import Coalition, FederationMethod, Player, PopulationParams, REL_TOL


@dataclass(frozen=True)
class WeightVector:
    """Per-source combination weights for one target player.

    Weights must be finite and sum to one within relative tolerance 1e-9;
    individual weights may be negative (the general error formula is defined
    for any unit-sum vector, and optimality tests probe such points).
    """

    target: str
    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", dict(self.weights))
        total = 0.0
        for pid in sorted(self.weights):
            w = self.weights[pid]
            if not math.isfinite(w):
                raise NonUnitSum(f"weight for {pid!r} is not finite: {w!r}")
            total += w
        if not math.isclose(total, 1.0, rel_tol=REL_TOL, abs_tol=0.0):
            raise NonUnitSum(f"weights sum to {total!r}, expected 1")

    def aligned(self, coalition: Coalition) -> tuple[tuple[Player, float], ...]:
        """(player, weight) pairs in sorted-by-id order; domains must match."""
        if set(self.weights) != set(coalition.ids()):
            raise WeightDomainMismatch(
                f"weights cover {sorted(self.weights)}, "
                f"coalition is {sorted(coalition.ids())}"
            )
        return tuple((p, self.weights[p.id]) for p in coalition.ordered())


@dataclass(frozen=True)
class FineGrainedContext:
    """Per-player inverse-quality terms V_i = sigma_sq + mu_e/n_i and their
    harmonic aggregate T = sum_i 1/V_i, keyed by player id."""

    v_values: Mapping[str, float]
    t_sum: float

    @classmethod
    def build(cls, coalition: Coalition, params: PopulationParams) -> "FineGrainedContext":
        if params.mu_e == 0.0 and params.sigma_sq == 0.0:
            raise DegenerateParams(
                "mu_e = sigma_sq = 0: every unit-sum weighting is optimal"
            )
        v = {p.id: params.sigma_sq + params.mu_e / p.n for p in coalition.ordered()}
        t = sum(1.0 / v[p.id] for p in coalition.ordered())
        return cls(v, t)


def local_error(player: Player, params: PopulationParams) -> float:
    """Expected error when the player uses only its own samples: mu_e / n."""
    return params.mu_e / player.n


def uniform_error(coalition: Coalition, target: str, params: PopulationParams) -> float:
    """Expected error of the target under the sample-count-weighted average.

    With T the coalition's total sample count and the primed sums running
    over the other members:

        mu_e / T + sigma_sq * (sum' n_i^2 + (sum' n_i)^2) / T^2

    Reduces exactly to ``local_error`` on a singleton coalition.
    """
    if target not in coalition:
        raise TargetNotInCoalition(f"target {target!r} not in coalition")
    n_t = coalition.player(target).n
    total = coalition.total
    off_sq = sum(p.n * p.n for p in coalition.ordered() if p.id != target)
    off_sum = sum(p.n for p in coalition.ordered() if p.id != target)
    if off_sum == 0.0:
        return params.mu_e / n_t
    return params.mu_e / total + params.sigma_sq * (off_sq + off_sum * off_sum) / (
        total * total
    )


def weighted_error(
    coalition: Coalition, weights: WeightVector, params: PopulationParams
) -> float:
    """Expected error of the target under arbitrary unit-sum weights."""
    if weights.target not in coalition:
        raise TargetNotInCoalition(f"target {weights.target!r} not in coalition")
    pairs = weights.aligned(coalition)
    total = sum(w for _, w in pairs)
    if not math.isclose(total, 1.0, rel_tol=REL_TOL, abs_tol=0.0):
        raise NonUnitSum(f"weights sum to {total!r}, expected 1")
    noise = sum(w * w / p.n for p, w in pairs)
    off_sq = sum(w * w for p, w in pairs if p.id != weights.target)
    off_sum = sum(w for p, w in pairs if p.id != weights.target)
    return params.mu_e * noise + params.sigma_sq * (off_sq + off_sum * off_sum)


def fine_grained_weights(
    coalition: Coalition, target: str, params: PopulationParams
) -> WeightVector:
    """Unit-sum weights minimizing the target's expected error.

    With S = sum_{i != j} 1/V_i the optimum is

        v_jj = (1 + sigma_sq * S) / (1 + V_j * S)
        v_jk = (1/V_k) * (V_j - sigma_sq) / (1 + V_j * S)

    All weights are nonnegative because V_j - sigma_sq = mu_e / n_j >= 0.
    """
    if target not in coalition:
        raise TargetNotInCoalition(f"target {target!r} not in coalition")
    ctx = FineGrainedContext.build(coalition, params)
    n_t = coalition.player(target).n
    v_t = ctx.v_values[target]
    s_off = sum(
        1.0 / ctx.v_values[p.id] for p in coalition.ordered() if p.id != target
    )
    denom = 1.0 + v_t * s_off
    out: dict[str, float] = {}
    for p in coalition.ordered():
        if p.id == target:
            out[p.id] = (1.0 + params.sigma_sq * s_off) / denom
        else:
            out[p.id] = (params.mu_e / n_t) / (ctx.v_values[p.id] * denom)
        assert out[p.id] >= 0.0, f"optimal weight for {p.id!r} went negative"
    return WeightVector(target=target, weights=out)


def fine_grained_error(
    coalition: Coalition, target: str, params: PopulationParams
) -> float:
    """Expected error of the target at the optimal fine-grained weights:

        (mu_e / n_j) / (V_j * T) * (1 + sigma_sq * (T - 1/V_j))
    """
    if target not in coalition:
        raise TargetNotInCoalition(f"target {target!r} not in coalition")
    ctx = FineGrainedContext.build(coalition, params)
    n_t = coalition.player(target).n
    v_t = ctx.v_values[target]
    return (params.mu_e / n_t) / (v_t * ctx.t_sum) * (
        1.0 + params.sigma_sq * (ctx.t_sum - 1.0 / v_t)
    )


def expected_error(
    coalition: Coalition,
    target: str,
    method: FederationMethod,
    params: PopulationParams,
) -> float:
    """Dispatch to the closed form for the given federation method.

    LOCAL ignores the other coalition members entirely.
    """
    if target not in coalition:
        raise TargetNotInCoalition(f"target {target!r} not in coalition")
    if method is FederationMethod.LOCAL:
        return local_error(coalition.player(target), params)
    if method is FederationMethod.UNIFORM:
        return uniform_error(coalition, target, params)
    if method is FederationMethod.FINE_GRAINED:
        return fine_grained_error(coalition, target, params)
    raise ValueError(f"unknown federation method: {method!r}")
