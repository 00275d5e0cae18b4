"""Simulation oracle for the closed-form expected errors.

Each trial draws a true mean per player (mean 0 without loss of
generality, variance sigma_sq), draws that player's individual samples
around it, averages them into local estimates, combines the estimates
with the weights implied by the federation method (or an explicit weight
vector), and records the squared error against the target's true mean.
The empirical mean squared error is then compared with the matching
closed form via a z-score.

Determinism: trials are processed in fixed chunks of 65536, each chunk
seeded by a deterministic child of the spec seed, and per-chunk partial
sums are reduced in chunk order.  Results are therefore bit-identical
for a given spec regardless of thread count or scheduling.

Draw order inside a chunk never depends on how the weights were
specified, so an explicit weight vector equal to the method's weights
reproduces the method's estimates exactly, draw for draw.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    WeightVector,
    expected_error,
    fine_grained_weights,
    weighted_error,
)
from .exceptions import InvalidNoiseList, NonIntegerSamples, TargetNotInCoalition
from .model import Coalition, FederationMethod, Player, PopulationParams, close

CHUNK_TRIALS = 1 << 16


class MeanDistribution(str, Enum):
    """Distribution of the players' true means (mean 0, variance sigma_sq)."""

    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SimulationSpec:
    """One simulation: who federates, how estimates combine, and the RNG seed.

    ``noise_variances`` is optional: when absent every sample has variance
    mu_e.  When present it lists candidate noise variances (one entry per
    coalition member, averaging mu_e within 1e-12) and each trial draws
    every player's variance independently and uniformly from the list, so
    the population noise expectation stays mu_e while individual draws
    vary.  The closed forms depend on the noise only through mu_e, which
    is exactly what this option exists to demonstrate.
    """

    coalition: Coalition
    target: str
    params: PopulationParams
    method: FederationMethod | None = None
    weights: WeightVector | None = None
    mean_distribution: MeanDistribution = MeanDistribution.GAUSSIAN
    noise_variances: tuple[float, ...] | None = None
    trials: int = 1_000_000
    seed: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        if self.target not in self.coalition:
            raise TargetNotInCoalition(f"target {self.target!r} not in coalition")
        if (self.method is None) == (self.weights is None):
            raise ValueError("specify exactly one of method or weights")
        for p in self.coalition.players:
            if not float(p.n).is_integer():
                raise NonIntegerSamples(
                    f"player {p.id!r} has n={p.n!r}; simulation draws individual "
                    "samples and needs integer counts"
                )
        if self.noise_variances is not None:
            object.__setattr__(self, "noise_variances", tuple(self.noise_variances))
            values = self.noise_variances
            if len(values) != len(self.coalition):
                raise InvalidNoiseList(
                    f"{len(values)} noise entries for a coalition of "
                    f"{len(self.coalition)}"
                )
            if any(not math.isfinite(v) or v < 0 for v in values):
                raise InvalidNoiseList("noise variances must be finite and >= 0")
            mean = sum(values) / len(values)
            if not math.isclose(mean, self.params.mu_e, rel_tol=1e-12, abs_tol=1e-12):
                raise InvalidNoiseList(
                    f"noise variances average {mean!r}, expected mu_e="
                    f"{self.params.mu_e!r}"
                )
        if self.trials < 2:
            raise ValueError("trials must be >= 2")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def resolved_weights(self) -> np.ndarray:
        """Combination weights aligned to the sorted-by-id player order."""
        ordered = self.coalition.ordered()
        if self.weights is not None:
            pairs = self.weights.aligned(self.coalition)
            return np.array([w for _, w in pairs], dtype=np.float64)
        if self.method is FederationMethod.LOCAL:
            return np.array(
                [1.0 if p.id == self.target else 0.0 for p in ordered],
                dtype=np.float64,
            )
        if self.method is FederationMethod.UNIFORM:
            total = self.coalition.total
            return np.array([p.n / total for p in ordered], dtype=np.float64)
        optimal = fine_grained_weights(self.coalition, self.target, self.params)
        return np.array([w for _, w in optimal.aligned(self.coalition)], np.float64)

    def analytic_error(self) -> float:
        """The closed form this simulation is expected to reproduce."""
        if self.weights is not None:
            return weighted_error(self.coalition, self.weights, self.params)
        assert self.method is not None
        return expected_error(self.coalition, self.target, self.method, self.params)


@dataclass(frozen=True)
class SimulationResult:
    empirical_mse: float
    standard_error: float
    trials: int
    closed_form: float
    z_score: float


def _chunk_sums(
    spec: SimulationSpec,
    seed_seq: np.random.SeedSequence,
    size: int,
    weights: np.ndarray,
) -> tuple[float, float]:
    """Sum and sum-of-squares of the squared errors for one trial chunk."""
    rng = np.random.default_rng(seed_seq)
    ordered = spec.coalition.ordered()
    counts = [int(p.n) for p in ordered]
    players = len(ordered)
    target_idx = next(i for i, p in enumerate(ordered) if p.id == spec.target)

    if spec.mean_distribution is MeanDistribution.GAUSSIAN:
        means = rng.standard_normal((size, players)) * math.sqrt(spec.params.sigma_sq)
    else:
        half = math.sqrt(3.0 * spec.params.sigma_sq)
        means = rng.uniform(-half, half, size=(size, players))

    if spec.noise_variances is None:
        noise_std = np.full(
            (1, players), math.sqrt(spec.params.mu_e), dtype=np.float64
        )
    else:
        candidates = np.array(spec.noise_variances, dtype=np.float64)
        noise_std = np.sqrt(rng.choice(candidates, size=(size, players)))

    estimate_noise = np.empty((size, players), dtype=np.float64)
    for idx, n in enumerate(counts):
        draws = rng.standard_normal((size, n))
        estimate_noise[:, idx] = draws.mean(axis=1)
    estimate_noise *= noise_std
    estimates = (means + estimate_noise) @ weights
    deviations = estimates - means[:, target_idx]
    squared = deviations * deviations
    return float(squared.sum()), float((squared * squared).sum())


def simulate_error(
    spec: SimulationSpec,
    *,
    threads: int = 1,
    closed_form: float | None = None,
) -> SimulationResult:
    """Estimate the target's expected squared error empirically.

    ``closed_form`` overrides the analytic reference (used to calibrate
    the z-test harness against deliberately wrong values).
    """
    weights = spec.resolved_weights()
    n_chunks = -(-spec.trials // CHUNK_TRIALS)
    children = np.random.SeedSequence(spec.seed).spawn(n_chunks)
    sizes = [
        min(CHUNK_TRIALS, spec.trials - k * CHUNK_TRIALS) for k in range(n_chunks)
    ]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(
                pool.map(
                    lambda args: _chunk_sums(spec, args[0], args[1], weights),
                    zip(children, sizes),
                )
            )
    else:
        partials = [
            _chunk_sums(spec, child, size, weights)
            for child, size in zip(children, sizes)
        ]

    total = 0.0
    total_sq = 0.0
    for part_sum, part_sq in partials:  # fixed chunk order
        total += part_sum
        total_sq += part_sq

    n = spec.trials
    mean = total / n
    variance = max(0.0, (total_sq - n * mean * mean) / (n - 1))
    std_error = math.sqrt(variance / n)
    reference = spec.analytic_error() if closed_form is None else closed_form
    if std_error > 0.0:
        z = (mean - reference) / std_error
    else:
        z = 0.0 if close(mean, reference) else math.copysign(math.inf, mean - reference)
    return SimulationResult(
        empirical_mse=mean,
        standard_error=std_error,
        trials=n,
        closed_form=reference,
        z_score=z,
    )


@dataclass(frozen=True)
class SuiteEntry:
    label: str
    result: SimulationResult
    passed: bool


@dataclass(frozen=True)
class SuiteResult:
    entries: tuple[SuiteEntry, ...]
    z_threshold: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_abs_z(self) -> float:
        return max(abs(e.result.z_score) for e in self.entries)


def simulate_suite(
    specs: Sequence[SimulationSpec],
    z_threshold: float = 4.0,
    *,
    threads: int = 1,
    closed_form_overrides: dict[int, float] | None = None,
) -> SuiteResult:
    """Run each spec and fail any whose |z| exceeds the threshold.

    The default threshold of 4 leaves the false-failure rate of a
    ~20-spec suite well under 1%.
    """
    overrides = closed_form_overrides or {}
    entries = []
    for index, spec in enumerate(specs):
        result = simulate_error(
            spec, threads=threads, closed_form=overrides.get(index)
        )
        label = spec.label or f"spec{index}"
        entries.append(
            SuiteEntry(label, result, abs(result.z_score) <= z_threshold)
        )
    return SuiteResult(entries=tuple(entries), z_threshold=z_threshold)


def default_suite(trials: int = 1_000_000, base_seed: int = 90_125) -> tuple[
    SimulationSpec, ...
]:
    """The standard validation suite: the motivating two-player configs
    under every method and both targets, zero-bias and zero-noise edge
    cases, and both mean distributions."""
    params = PopulationParams(mu_e=10.0, sigma_sq=1.0)
    specs: list[SimulationSpec] = []

    def add(**kwargs: object) -> None:
        kwargs.setdefault("trials", trials)
        kwargs.setdefault("seed", base_seed + len(specs))
        specs.append(SimulationSpec(**kwargs))  # type: ignore[arg-type]

    for n_l in (20, 30, 40):
        coalition = Coalition((Player("s", 6.0), Player("l", float(n_l))))
        for method in FederationMethod:
            for target in ("s", "l"):
                add(
                    coalition=coalition,
                    target=target,
                    params=params,
                    method=method,
                    label=f"nl{n_l}-{method.value}-{target}",
                )

    zero_bias = Coalition.from_sizes([4, 4])
    add(
        coalition=zero_bias,
        target="p1",
        params=PopulationParams(mu_e=8.0, sigma_sq=0.0),
        method=FederationMethod.UNIFORM,
        label="zero-bias-uniform",
    )
    zero_noise = Coalition.from_sizes([10, 10])
    add(
        coalition=zero_noise,
        target="p1",
        params=PopulationParams(mu_e=0.0, sigma_sq=1.0),
        method=FederationMethod.UNIFORM,
        label="zero-noise-uniform",
    )
    add(
        coalition=zero_noise,
        target="p1",
        params=PopulationParams(mu_e=0.0, sigma_sq=1.0),
        method=FederationMethod.LOCAL,
        label="zero-noise-local",
    )

    flat_means = Coalition((Player("s", 6.0), Player("l", 20.0)))
    add(
        coalition=flat_means,
        target="s",
        params=params,
        method=FederationMethod.UNIFORM,
        mean_distribution=MeanDistribution.UNIFORM,
        label="uniform-means-uniform-s",
    )
    add(
        coalition=flat_means,
        target="l",
        params=params,
        method=FederationMethod.FINE_GRAINED,
        mean_distribution=MeanDistribution.UNIFORM,
        label="uniform-means-fine-l",
    )
    return tuple(specs)
