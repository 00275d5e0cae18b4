"""Egalitarian fairness: pairwise error ratios and the 2c+1 bound.

Within a coalition the egalitarian question is how far apart two members'
expected errors can be.  Writing c = n_max * sigma_sq / mu_e for the
largest member, any "modular" federation method keeps every pairwise
ratio at most 2c + 1, and the bound is approached (never exceeded) as the
small player shrinks.  This module audits coalitions against that bound,
verifies the five structural properties that make a method modular, and
searches for near-tight configurations.

Methods are either a :class:`FederationMethod` or any callable
``(coalition, target_id, params) -> float``, so deliberately broken
weightings can be pushed through the same checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import WeightVector, expected_error, weighted_error
from .exceptions import UndefinedBound, ZeroDenominator
from .model import Coalition, FederationMethod, Player, PopulationParams, close
from .sampling import describe_instance, instance_rng, random_instance

ErrorFn = Callable[[Coalition, str, PopulationParams], float]

# Slack for finite-difference sign checks and the two-player comparison.
DERIVATIVE_SLACK = 1e-9
# Relative step for central differences.
DERIVATIVE_STEP = 1e-4
# Relative tolerance for the limiting-ratio check.
LIMIT_REL_TOL = 1e-3

# Default verification grid, fully crossed.
PAIR_SIZES = (1.0, 2.0, 5.0, 10.0, 50.0, 100.0)
THIRD_SIZES = (1.0, 10.0, 100.0)
PARAM_LEVELS = (0.1, 1.0, 10.0)


def _as_error_fn(method: FederationMethod | ErrorFn) -> tuple[ErrorFn, str]:
    if isinstance(method, FederationMethod):
        def fn(coalition: Coalition, target: str, params: PopulationParams) -> float:
            return expected_error(coalition, target, method, params)

        return fn, method.value
    return method, getattr(method, "__name__", "custom")


def error_ratio(
    coalition: Coalition,
    i: str,
    j: str,
    method: FederationMethod | ErrorFn,
    params: PopulationParams,
) -> float:
    """err_i / err_j for two members of the same coalition."""
    fn, _ = _as_error_fn(method)
    numer = fn(coalition, i, params)
    denom = fn(coalition, j, params)
    if denom == 0.0:
        raise ZeroDenominator(f"player {j!r} has zero error")
    return numer / denom


@dataclass(frozen=True)
class FairnessAudit:
    """Worst pairwise ratio of a coalition against its 2c+1 bound."""

    method: str
    max_ratio: float
    worst_pair: tuple[str, str]
    c_value: float
    bound: float
    satisfied: bool


def audit_egalitarian(
    coalition: Coalition,
    method: FederationMethod | ErrorFn,
    params: PopulationParams,
) -> FairnessAudit:
    """Audit every ordered pair of the coalition against the 2c+1 bound.

    c is reported as the exact real n_max * sigma_sq / mu_e (the smallest
    value covering the coalition); needs mu_e > 0 and sigma_sq > 0.
    """
    if params.mu_e <= 0.0 or params.sigma_sq <= 0.0:
        raise UndefinedBound("the 2c+1 bound needs mu_e > 0 and sigma_sq > 0")
    fn, name = _as_error_fn(method)
    players = coalition.ordered()
    errs = {p.id: fn(coalition, p.id, params) for p in players}
    if len(players) == 1:
        only = players[0].id
        max_ratio, worst = 1.0, (only, only)
    else:
        hi = max(players, key=lambda p: errs[p.id])
        lo = min(players, key=lambda p: errs[p.id])
        if errs[lo.id] == 0.0:
            raise ZeroDenominator(f"player {lo.id!r} has zero error")
        max_ratio, worst = errs[hi.id] / errs[lo.id], (hi.id, lo.id)
    n_max = max(p.n for p in players)
    c_value = n_max * params.sigma_sq / params.mu_e
    bound = 2.0 * c_value + 1.0
    return FairnessAudit(
        method=name,
        max_ratio=max_ratio,
        worst_pair=worst,
        c_value=c_value,
        bound=bound,
        satisfied=max_ratio <= bound,
    )


def inverse_size_error(
    coalition: Coalition, target: str, params: PopulationParams
) -> float:
    """Error of a deliberately mis-weighted estimator: v_i proportional to
    T - n_i, so smaller players get larger weight.  Breaks the usual
    large-player advantage; used to calibrate the modularity checker."""
    players = coalition.ordered()
    if len(players) == 1:
        weights = {target: 1.0}
    else:
        total = coalition.total
        scale = (len(players) - 1) * total
        weights = {p.id: (total - p.n) / scale for p in players}
    return weighted_error(coalition, WeightVector(target, weights), params)


def _pair_ratio(fn: ErrorFn, n_s: float, n_l: float, params: PopulationParams) -> float:
    pair = Coalition((Player("s", n_s), Player("l", n_l)))
    err_l = fn(pair, "l", params)
    if err_l == 0.0:
        raise ZeroDenominator("large player has zero error")
    return fn(pair, "s", params) / err_l


def _trio_ratio(
    fn: ErrorFn, n_s: float, n_l: float, n_k: float, params: PopulationParams
) -> float:
    trio = Coalition((Player("s", n_s), Player("l", n_l), Player("k", n_k)))
    err_l = fn(trio, "l", params)
    if err_l == 0.0:
        raise ZeroDenominator("large player has zero error")
    return fn(trio, "s", params) / err_l


@dataclass(frozen=True)
class PropertyResult:
    """Outcome of one structural property check over the grid."""

    prop: int
    passed: bool
    checks: int
    counterexample: dict | None


@dataclass(frozen=True)
class ModularityReport:
    method: str
    properties: tuple[PropertyResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def result(self, prop: int) -> PropertyResult:
        return self.properties[prop - 1]


def check_modularity(
    method: FederationMethod | ErrorFn,
    pair_sizes: Sequence[float] = PAIR_SIZES,
    third_sizes: Sequence[float] = THIRD_SIZES,
    param_levels: Sequence[float] = PARAM_LEVELS,
) -> ModularityReport:
    """Numerically verify the five structural properties on a grid.

    1. Within any coalition the larger player has the lower error (strict
       for strictly larger).
    2. The two-player coalition is the worst case for the pairwise ratio;
       additionally the ratio is non-increasing in a third player's size
       (central differences, relative step 1e-4).
    3. The two-player ratio is non-decreasing in the large player's size.
    4. The two-player ratio is non-increasing in the small player's size.
    5. As the small player vanishes the two-player ratio approaches
       (mu_e/n_l + 2 sigma_sq) / (mu_e/n_l).  The probe point sits at
       n_s = 1e-6 * n_l or deeper: the fine-grained ratio approaches its
       limit at scale n_s ~ mu_e/sigma_sq, so the probe is capped at
       5e-5 * mu_e/sigma_sq to stay inside the convergence regime at
       high noise/bias corners.

    Failures are data: each property reports its first counterexample.
    """
    fn, name = _as_error_fn(method)
    pairs = [(a, b) for a in pair_sizes for b in pair_sizes if a <= b]
    param_grid = [
        PopulationParams(mu_e, sigma_sq)
        for mu_e in param_levels
        for sigma_sq in param_levels
    ]

    def scenario(**values: float) -> dict:
        return dict(values)

    # Property 1: ordering on every grid instance (pairs and trios).
    p1_counter = None
    p1_checks = 0
    for params in param_grid:
        for n_s, n_l in pairs:
            members_list = [(n_s, n_l, None)] + [
                (n_s, n_l, n_k) for n_k in third_sizes
            ]
            for n_s_, n_l_, n_k in members_list:
                players = [Player("s", n_s_), Player("l", n_l_)]
                if n_k is not None:
                    players.append(Player("k", n_k))
                coalition = Coalition(tuple(players))
                errs = {p.id: fn(coalition, p.id, params) for p in players}
                ordered = sorted(players, key=lambda p: (p.n, p.id))
                for a_idx in range(len(ordered)):
                    for b_idx in range(a_idx + 1, len(ordered)):
                        small, large = ordered[a_idx], ordered[b_idx]
                        p1_checks += 1
                        e_s, e_l = errs[small.id], errs[large.id]
                        ok = e_s >= e_l - DERIVATIVE_SLACK * max(abs(e_s), abs(e_l))
                        if ok and small.n < large.n:
                            ok = e_s > e_l
                        if ok and small.n == large.n:
                            ok = close(e_s, e_l)
                        if not ok and p1_counter is None:
                            p1_counter = scenario(
                                mu_e=params.mu_e,
                                sigma_sq=params.sigma_sq,
                                n_small=small.n,
                                n_large=large.n,
                                **({"n_third": n_k} if n_k is not None else {}),
                                err_small=e_s,
                                err_large=e_l,
                            )

    # Property 2: two-player worst case, and ratio non-increasing in n_k.
    p2_counter = None
    p2_checks = 0
    for params in param_grid:
        for n_s, n_l in pairs:
            base = _pair_ratio(fn, n_s, n_l, params)
            for n_k in third_sizes:
                p2_checks += 1
                with_third = _trio_ratio(fn, n_s, n_l, n_k, params)
                h = DERIVATIVE_STEP * n_k
                deriv = (
                    _trio_ratio(fn, n_s, n_l, n_k + h, params)
                    - _trio_ratio(fn, n_s, n_l, n_k - h, params)
                ) / (2.0 * h)
                bad = with_third > base + DERIVATIVE_SLACK or deriv > DERIVATIVE_SLACK
                if bad and p2_counter is None:
                    p2_counter = scenario(
                        mu_e=params.mu_e,
                        sigma_sq=params.sigma_sq,
                        n_small=n_s,
                        n_large=n_l,
                        n_third=n_k,
                        ratio_with_third=with_third,
                        ratio_two_player=base,
                        derivative_in_third=deriv,
                    )

    # Properties 3 and 4: ratio monotone in each two-player size.
    p3_counter = None
    p4_counter = None
    p34_checks = 0
    for params in param_grid:
        for n_s, n_l in pairs:
            p34_checks += 1
            h_l = DERIVATIVE_STEP * n_l
            d_large = (
                _pair_ratio(fn, n_s, n_l + h_l, params)
                - _pair_ratio(fn, n_s, n_l - h_l, params)
            ) / (2.0 * h_l)
            if d_large < -DERIVATIVE_SLACK and p3_counter is None:
                p3_counter = scenario(
                    mu_e=params.mu_e,
                    sigma_sq=params.sigma_sq,
                    n_small=n_s,
                    n_large=n_l,
                    derivative_in_large=d_large,
                )
            h_s = DERIVATIVE_STEP * n_s
            d_small = (
                _pair_ratio(fn, n_s + h_s, n_l, params)
                - _pair_ratio(fn, n_s - h_s, n_l, params)
            ) / (2.0 * h_s)
            if d_small > DERIVATIVE_SLACK and p4_counter is None:
                p4_counter = scenario(
                    mu_e=params.mu_e,
                    sigma_sq=params.sigma_sq,
                    n_small=n_s,
                    n_large=n_l,
                    derivative_in_small=d_small,
                )

    # Property 5: limiting ratio as the small player vanishes.
    p5_counter = None
    p5_checks = 0
    for params in param_grid:
        for n_l in pair_sizes:
            p5_checks += 1
            probe = min(1e-6 * n_l, 5e-5 * params.mu_e / params.sigma_sq)
            ratio = _pair_ratio(fn, probe, n_l, params)
            limit = (params.mu_e / n_l + 2.0 * params.sigma_sq) / (params.mu_e / n_l)
            if abs(ratio - limit) > LIMIT_REL_TOL * limit and p5_counter is None:
                p5_counter = scenario(
                    mu_e=params.mu_e,
                    sigma_sq=params.sigma_sq,
                    n_small=probe,
                    n_large=n_l,
                    ratio=ratio,
                    limit=limit,
                )

    return ModularityReport(
        method=name,
        properties=(
            PropertyResult(1, p1_counter is None, p1_checks, p1_counter),
            PropertyResult(2, p2_counter is None, p2_checks, p2_counter),
            PropertyResult(3, p3_counter is None, p34_checks, p3_counter),
            PropertyResult(4, p4_counter is None, p34_checks, p4_counter),
            PropertyResult(5, p5_counter is None, p5_checks, p5_counter),
        ),
    )


@dataclass(frozen=True)
class TightnessResult:
    """A two-player configuration whose uniform ratio nearly meets 2c+1."""

    n_s: float
    n_l: float
    mu_e: float
    sigma_sq: float
    ratio: float
    c_value: float
    bound: float


def tightness_search(c: float, epsilon: float) -> TightnessResult:
    """Find a two-player scenario with uniform ratio >= 2c+1 - epsilon.

    Construction: n_s = 1, sigma_sq = 1, n_l = c * mu_e, doubling mu_e
    until the ratio clears the target.  The ratio is monotone increasing
    in mu_e under this construction, which is asserted at each step, and
    it approaches 2c+1 from below, so the search always terminates.
    """
    if c <= 0.0 or epsilon <= 0.0:
        raise ValueError("c and epsilon must be positive")
    target = 2.0 * c + 1.0 - epsilon
    mu_e = 1.0
    previous = -math.inf
    for _ in range(600):
        params = PopulationParams(mu_e, 1.0)
        n_l = c * mu_e
        ratio = _pair_ratio(
            lambda co, t, pa: expected_error(co, t, FederationMethod.UNIFORM, pa),
            1.0,
            n_l,
            params,
        )
        if not math.isfinite(ratio):
            raise ArithmeticError("ratio overflowed before reaching the target")
        if ratio < previous - 1e-12:
            raise ArithmeticError("ratio failed to increase while doubling mu_e")
        previous = ratio
        if ratio >= target:
            return TightnessResult(
                n_s=1.0,
                n_l=n_l,
                mu_e=mu_e,
                sigma_sq=1.0,
                ratio=ratio,
                c_value=c,
                bound=2.0 * c + 1.0,
            )
        mu_e *= 2.0
    raise ArithmeticError("target not reached within 600 doublings")


@dataclass(frozen=True)
class BoundSweepResult:
    """Outcome of a randomized egalitarian-bound sweep."""

    instances: int
    checks: int
    violations: tuple[dict, ...]
    max_quotient: float

    @property
    def passed(self) -> bool:
        return not self.violations


def bound_sweep(
    instance_count: int = 10_000,
    seed: int = 42,
    methods: Sequence[FederationMethod] = (
        FederationMethod.UNIFORM,
        FederationMethod.FINE_GRAINED,
    ),
) -> BoundSweepResult:
    """Check 1 - 1e-12 <= max ratio <= 2c+1 + 1e-9 on random instances."""
    violations: list[dict] = []
    max_quotient = 0.0
    checks = 0
    for index in range(instance_count):
        params, coalition = random_instance(instance_rng(seed, index))
        n_max = max(p.n for p in coalition.players)
        bound = 2.0 * n_max * params.sigma_sq / params.mu_e + 1.0
        for method in methods:
            checks += 1
            errs = [
                expected_error(coalition, p.id, method, params)
                for p in coalition.ordered()
            ]
            ratio = max(errs) / min(errs)
            max_quotient = max(max_quotient, ratio / bound)
            if ratio < 1.0 - 1e-12 or ratio > bound + 1e-9:
                violations.append(
                    {
                        "index": index,
                        "method": method.value,
                        "max_ratio": ratio,
                        "bound": bound,
                        **describe_instance(params, coalition),
                    }
                )
    return BoundSweepResult(
        instances=instance_count,
        checks=checks,
        violations=tuple(violations),
        max_quotient=max_quotient,
    )
