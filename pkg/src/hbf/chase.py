"""Sequential pointer-resolution baseline: analytics and simulation.

Models an ell-hop lookup where each hop independently succeeds with
probability p and costs hop_time abstract time units. A failed walk is
retried from scratch (whole-walk retry), which is what makes the
expected repeat-until-success time ell * hop_time / p^ell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_MAX_ATTEMPTS = 1_000_000_000


@dataclass(frozen=True)
class ChaseModel:
    p: float
    ell: int
    hop_time: float

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise InvalidArgumentError("p must lie in (0, 1]")
        if self.ell < 1:
            raise InvalidArgumentError("ell must be at least 1")
        if not (math.isfinite(self.hop_time) and self.hop_time > 0.0):
            raise InvalidArgumentError("hop_time must be positive and finite")


def chase_success_prob(model: ChaseModel) -> float:
    """Single-walk success probability p^ell."""
    return model.p ** model.ell


def chase_expected_time(model: ChaseModel) -> float:
    """Single-walk expected time ell * hop_time."""
    return model.ell * model.hop_time


def chase_expected_time_repeat(model: ChaseModel) -> float:
    """Expected time under whole-walk retry: ell * hop_time / p^ell.

    Returns +inf when p^ell underflows to zero.
    """
    walk = chase_success_prob(model)
    if walk == 0.0:
        return math.inf
    return model.ell * model.hop_time / walk


@dataclass(frozen=True)
class ChaseStats:
    trials: int
    success_rate: float
    mean_attempts: float
    mean_total_time: float
    truncated_trials: int
    seed: int


def chase_simulate(
    model: ChaseModel,
    trials: int,
    seed: int,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> ChaseStats:
    """Hop-level Monte Carlo of the repeat-until-success walk.

    success_rate estimates the single-attempt success probability from
    each trial's first walk; mean_attempts and mean_total_time cover the
    retry loop, each attempt charged the full ell * hop_time. Trials
    still alive after max_attempts are counted in truncated_trials (and
    keep their capped attempt count), which bounds runtime for tiny
    p^ell; expected work grows like trials * ell / p^ell.
    """
    if trials < 1:
        raise InvalidArgumentError("trials must be at least 1")
    if max_attempts < 1:
        raise InvalidArgumentError("max_attempts must be at least 1")
    rng = np.random.default_rng(seed)
    attempts = np.zeros(trials, dtype=np.int64)
    alive = np.arange(trials)
    first_successes = 0
    attempt = 0
    while alive.size and attempt < max_attempts:
        attempt += 1
        walks = rng.random((alive.size, model.ell)) < model.p
        succeeded = walks.all(axis=1)
        attempts[alive] = attempt
        if attempt == 1:
            first_successes = int(succeeded.sum())
        alive = alive[~succeeded]

    truncated = int(alive.size)
    total_attempts = int(attempts.sum())
    mean_attempts = total_attempts / trials
    return ChaseStats(
        trials=trials,
        success_rate=first_successes / trials,
        mean_attempts=mean_attempts,
        mean_total_time=mean_attempts * model.ell * model.hop_time,
        truncated_trials=truncated,
        seed=seed,
    )


@dataclass(frozen=True)
class HbfQueryStats:
    """Measured one-shot retrieval stats for the comparison report."""

    accuracy: float
    trials: int
    seed: int
    rounds: int = 1


@dataclass(frozen=True)
class ComparisonRow:
    system: str
    p: float
    ell: int
    hop_time: float
    success_prob: float
    expected_time: float
    expected_time_repeat: float
    measured_success: float | None
    measured_time_mean: float | None
    trials: int
    seed: int


def hbf_comparison_row(hbf_stats: HbfQueryStats, model: ChaseModel) -> ComparisonRow:
    """One-shot retrieval charged the same per-round cost as one hop."""
    return ComparisonRow(
        system="hbf",
        p=hbf_stats.accuracy,
        ell=hbf_stats.rounds,
        hop_time=model.hop_time,
        success_prob=hbf_stats.accuracy,
        expected_time=hbf_stats.rounds * model.hop_time,
        expected_time_repeat=(
            math.inf if hbf_stats.accuracy == 0.0
            else hbf_stats.rounds * model.hop_time / hbf_stats.accuracy
        ),
        measured_success=hbf_stats.accuracy,
        measured_time_mean=hbf_stats.rounds * model.hop_time,
        trials=hbf_stats.trials,
        seed=hbf_stats.seed,
    )


def chase_comparison_row(model: ChaseModel, chase_stats: ChaseStats | None = None) -> ComparisonRow:
    return ComparisonRow(
        system="pointer-chase",
        p=model.p,
        ell=model.ell,
        hop_time=model.hop_time,
        success_prob=chase_success_prob(model),
        expected_time=chase_expected_time(model),
        expected_time_repeat=chase_expected_time_repeat(model),
        measured_success=None if chase_stats is None else chase_stats.success_rate,
        measured_time_mean=None if chase_stats is None else chase_stats.mean_total_time,
        trials=0 if chase_stats is None else chase_stats.trials,
        seed=0 if chase_stats is None else chase_stats.seed,
    )


def compare_report(
    hbf_stats: HbfQueryStats,
    model: ChaseModel,
    chase_stats: ChaseStats | None = None,
) -> list[ComparisonRow]:
    """One-shot retrieval vs the ell-hop baseline, one row per system."""
    return [hbf_comparison_row(hbf_stats, model), chase_comparison_row(model, chase_stats)]
