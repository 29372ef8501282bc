"""Monte Carlo experiment runners: false positives, false negatives,
capacity sweeps, multi-memory amplification, and the pointer-chase
baseline.

Every runner is a pure function of its config. All randomness flows
from the config's master seed through ``derive_seed``, one derived seed
per trial and one per noise channel inside a trial, so reruns produce
byte-identical CSV output and trials could execute in any order.

Score-unit conventions: raw decode scores scale like gain * d * signal,
so the expected match score for a member query is
``gain * d * signal_mean(d, H, p_e)``. Closed-form bounds from
``bounds`` are stated in units where one impostor score has variance d;
measured rates are compared against them after standardizing by the
calibrated sigma_hat.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bounds import fn_bound, fp_bound, signal_mean
from .calibrate import CalibrationResult, calibrate_decoder
from .chase import (
    ChaseModel,
    HbfQueryStats,
    chase_comparison_row,
    chase_expected_time,
    chase_expected_time_repeat,
    chase_simulate,
    chase_success_prob,
    hbf_comparison_row,
)
from .errors import InvalidArgumentError
from .index import (
    DecodeOutcome,
    DecoderConfig,
    HbfMemory,
    ValueScorer,
    build,
    correlate_query_vector,
    decode,
    decode_ranked,
    ranked_from_scores,
)
from .noise import KEY_HAMMING, MEM_FLIP, NoiseSpec, apply_noise
from .seeds import derive_seed
from .storage import csv_text

TRIAL_COLUMNS = (
    "experiment", "dim", "items", "labels", "rho", "tau", "delta", "top_k",
    "noise", "trial", "trial_seed", "kind", "outcome", "label", "s1", "s2",
)

CAPACITY_COLUMNS = (
    "experiment", "dim", "items", "labels", "rho", "trials", "seed",
    "tau", "delta", "top_k", "sigma_hat", "mu_hat",
    "accuracy", "wrong_rate", "reject_rate", "mean_match_score",
)

AMPLIFY_COLUMNS = (
    "experiment", "dim", "items", "labels", "rho", "replicas", "noise",
    "trial", "trial_seed", "true_label", "outcome_single", "outcome_voted",
)

BASELINE_COLUMNS = (
    "system", "p", "ell", "T", "success_prob", "expected_time",
    "expected_time_repeat", "measured_success", "measured_time_mean",
    "trials", "seed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters shared by the fp/fn/capacity/amplify runners."""

    dim: int
    items: int
    labels: int
    trials: int
    seed: int
    rho: float | None = None
    noise: tuple[NoiseSpec, ...] = ()
    decoder: DecoderConfig | None = None
    epsilon: float = 0.01
    probe_count: int = 200

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise InvalidArgumentError("dim must be at least 2")
        if self.items < 0:
            raise InvalidArgumentError("items must be non-negative")
        if self.labels < 2:
            raise InvalidArgumentError("labels must be at least 2")
        if self.trials < 1:
            raise InvalidArgumentError("trials must be at least 1")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidArgumentError("epsilon must lie in (0, 1)")
        object.__setattr__(self, "noise", tuple(self.noise))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    trial_seed: int
    kind: str
    noise: str
    outcome: str
    label: bytes | None
    s1: float
    s2: float
    runtime: float


@dataclass
class Store:
    records: list[tuple[bytes, bytes]]
    mem: HbfMemory
    scorer: ValueScorer
    label_pos: dict[bytes, int]


def synthetic_records(items: int, labels: int) -> list[tuple[bytes, bytes]]:
    """items unique keys, values assigned round-robin over the label set."""
    return [(b"key-%06d" % i, b"val-%06d" % (i % labels)) for i in range(items)]


def label_universe(labels: int) -> list[bytes]:
    return [b"val-%06d" % j for j in range(labels)]


def build_store(
    cfg: ExperimentConfig,
    key_seed: int | None = None,
    value_seed: int | None = None,
) -> Store:
    if key_seed is None:
        key_seed = derive_seed(cfg.seed, "codebook", "key")
    if value_seed is None:
        value_seed = derive_seed(cfg.seed, "codebook", "value")
    records = synthetic_records(cfg.items, cfg.labels)
    mem = build(records, cfg.dim, rho=cfg.rho, key_seed=key_seed, value_seed=value_seed)
    scorer = ValueScorer(mem.value_codebook(), label_universe(cfg.labels))
    label_pos = {label: i for i, label in enumerate(scorer.labels)}
    return Store(records=records, mem=mem, scorer=scorer, label_pos=label_pos)


def resolve_decoder(
    cfg: ExperimentConfig, store: Store
) -> tuple[DecoderConfig, CalibrationResult | None]:
    """Use the configured decoder, or calibrate one on this store."""
    if cfg.decoder is not None:
        return cfg.decoder, None
    members = _member_probe_sample(store.records)
    cal = calibrate_decoder(
        store.mem,
        store.scorer,
        cfg.probe_count,
        cfg.epsilon,
        derive_seed(cfg.seed, "calibrate"),
        member_probes=members or None,
    )
    return cal.decoder, cal


def _member_probe_sample(records: Sequence[tuple[bytes, bytes]], limit: int = 64):
    if not records:
        return []
    step = max(1, len(records) // limit)
    return list(records[::step][:limit])


def _noise_label(specs: Sequence[NoiseSpec]) -> str:
    return "+".join(str(s) for s in specs)


def _noise_totals(specs: Sequence[NoiseSpec]) -> tuple[int, float]:
    """Total key flips and the effective memory-flip rate."""
    hamming = sum(int(s.amount) for s in specs if s.kind == KEY_HAMMING)
    shrink = 1.0
    for s in specs:
        if s.kind == MEM_FLIP:
            shrink *= 1.0 - 2.0 * s.amount
    return hamming, (1.0 - shrink) / 2.0


def _fmt_label(label: bytes | None) -> str:
    return "" if label is None else label.decode("utf-8", "replace")


@dataclass(frozen=True)
class FpSummary:
    experiment: str
    dim: int
    items: int
    labels: int
    rho: float
    trials: int
    seed: int
    tau: float
    delta: float
    top_k: int
    epsilon: float
    sigma_hat: float | None
    mu_hat: float | None
    triggers: int
    fp_rate: float
    bound_value: float | None
    bound_satisfied: bool | None


@dataclass(frozen=True)
class ExperimentResult:
    summary: object
    csv: str
    records: tuple[TrialRecord, ...]


def run_fp_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Non-member queries only; a trigger (any Hit) is a false positive."""
    store = build_store(cfg)
    decoder, cal = resolve_decoder(cfg, store)

    rows = []
    records = []
    triggers = 0
    for t in range(cfg.trials):
        started = time.perf_counter()
        trial_seed = derive_seed(cfg.seed, "fp", t)
        key = b"absent:%016x" % trial_seed
        key_vec = store.mem.key_codebook().vector(key)
        mem_t, key_vec = apply_noise(store.mem, key_vec, cfg.noise, trial_seed)
        z = correlate_query_vector(mem_t, key_vec)
        outcome = decode_ranked(store.scorer.ranked(z), decoder)
        kind_label = "hit-wrong" if outcome.hit else "reject"
        triggers += int(outcome.hit)
        records.append(TrialRecord(
            trial=t, trial_seed=trial_seed, kind="non-member",
            noise=_noise_label(cfg.noise), outcome=kind_label,
            label=outcome.label, s1=outcome.best_score, s2=outcome.runner_up,
            runtime=time.perf_counter() - started,
        ))
        rows.append(_trial_row("fp", cfg, store, decoder, records[-1]))

    fp_rate = triggers / cfg.trials
    bound_value = None
    bound_satisfied = None
    if cal is not None and decoder.tau >= 0.0 and np.isfinite(decoder.tau):
        # standardize the calibrated threshold into variance-d units
        standardized = decoder.tau * np.sqrt(store.mem.dim) / cal.sigma_hat
        bound_value = fp_bound(cfg.labels, store.mem.dim, float(standardized))
        slack = 3.0 * np.sqrt(bound_value * (1.0 - bound_value) / cfg.trials)
        bound_satisfied = bool(fp_rate <= bound_value + slack)

    summary = FpSummary(
        experiment="fp", dim=cfg.dim, items=cfg.items, labels=cfg.labels,
        rho=store.mem.gain, trials=cfg.trials, seed=cfg.seed,
        tau=decoder.tau, delta=decoder.delta, top_k=decoder.top_k,
        epsilon=cfg.epsilon,
        sigma_hat=None if cal is None else cal.sigma_hat,
        mu_hat=None if cal is None else cal.mu_hat,
        triggers=triggers, fp_rate=fp_rate,
        bound_value=bound_value, bound_satisfied=bound_satisfied,
    )
    return ExperimentResult(summary, csv_text(TRIAL_COLUMNS, rows), tuple(records))


@dataclass(frozen=True)
class FnSummary:
    experiment: str
    dim: int
    items: int
    labels: int
    rho: float
    trials: int
    seed: int
    tau: float
    delta: float
    top_k: int
    epsilon: float
    sigma_hat: float | None
    mu_hat: float | None
    accuracy: float
    wrong_rate: float
    reject_rate: float
    mean_match_score: float
    predicted_match_score: float
    fn_bound_value: float | None
    bound_satisfied: bool | None


def run_fn_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Member queries under the configured noise channels."""
    if cfg.items < 1:
        raise InvalidArgumentError("fn experiment needs a non-empty store")
    store = build_store(cfg)
    decoder, cal = resolve_decoder(cfg, store)

    rows = []
    records = []
    correct = wrong = 0
    match_scores = []
    for t in range(cfg.trials):
        started = time.perf_counter()
        trial_seed = derive_seed(cfg.seed, "fn", t)
        key, true_label = store.records[t % cfg.items]
        key_vec = store.mem.key_codebook().vector(key)
        mem_t, key_vec = apply_noise(store.mem, key_vec, cfg.noise, trial_seed)
        z = correlate_query_vector(mem_t, key_vec)
        scores = store.scorer.scores(z)
        match_scores.append(float(scores[store.label_pos[true_label]]))
        outcome = decode_ranked(ranked_from_scores(store.scorer.labels, scores), decoder)
        if outcome.hit and outcome.label == true_label:
            status = "hit-correct"
            correct += 1
        elif outcome.hit:
            status = "hit-wrong"
            wrong += 1
        else:
            status = "reject"
        records.append(TrialRecord(
            trial=t, trial_seed=trial_seed, kind="member",
            noise=_noise_label(cfg.noise), outcome=status,
            label=outcome.label, s1=outcome.best_score, s2=outcome.runner_up,
            runtime=time.perf_counter() - started,
        ))
        rows.append(_trial_row("fn", cfg, store, decoder, records[-1]))

    hamming, p_eff = _noise_totals(cfg.noise)
    predicted = store.mem.gain * store.mem.dim * signal_mean(cfg.dim, hamming, p_eff)
    bound_value = None
    bound_satisfied = None
    if signal_mean(cfg.dim, hamming, p_eff) > 0.0:
        bound_value = fn_bound(cfg.dim, hamming, p_eff, cfg.items)
        failure = 1.0 - correct / cfg.trials
        slack = 3.0 * np.sqrt(max(bound_value * (1.0 - bound_value), 1e-12) / cfg.trials)
        bound_satisfied = bool(failure <= bound_value + slack)

    summary = FnSummary(
        experiment="fn", dim=cfg.dim, items=cfg.items, labels=cfg.labels,
        rho=store.mem.gain, trials=cfg.trials, seed=cfg.seed,
        tau=decoder.tau, delta=decoder.delta, top_k=decoder.top_k,
        epsilon=cfg.epsilon,
        sigma_hat=None if cal is None else cal.sigma_hat,
        mu_hat=None if cal is None else cal.mu_hat,
        accuracy=correct / cfg.trials,
        wrong_rate=wrong / cfg.trials,
        reject_rate=1.0 - (correct + wrong) / cfg.trials,
        mean_match_score=float(np.mean(match_scores)),
        predicted_match_score=predicted,
        fn_bound_value=bound_value,
        bound_satisfied=bound_satisfied,
    )
    return ExperimentResult(summary, csv_text(TRIAL_COLUMNS, rows), tuple(records))


def _trial_row(name, cfg, store, decoder, rec: TrialRecord):
    return (
        name, cfg.dim, cfg.items, cfg.labels, store.mem.gain,
        decoder.tau, decoder.delta, decoder.top_k,
        rec.noise, rec.trial, rec.trial_seed, rec.kind, rec.outcome,
        _fmt_label(rec.label), rec.s1, rec.s2,
    )


@dataclass(frozen=True)
class CapacityPoint:
    items: int
    tau: float
    delta: float
    sigma_hat: float
    mu_hat: float | None
    accuracy: float
    wrong_rate: float
    reject_rate: float
    mean_match_score: float


@dataclass(frozen=True)
class CapacitySummary:
    experiment: str
    dim: int
    labels: int
    trials: int
    seed: int
    points: tuple[CapacityPoint, ...]


def run_capacity_sweep(cfg: ExperimentConfig, items_grid: Sequence[int]) -> ExperimentResult:
    """Accuracy vs store size at fixed dimension, one calibration per point.

    The interference scale sigma_hat grows with the item count, which is
    the mechanism that caps how many records one memory can serve.
    """
    grid = [int(n) for n in items_grid]
    if not grid:
        raise InvalidArgumentError("items_grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("items_grid must be strictly ascending")
    if grid[0] < 1:
        raise InvalidArgumentError("items_grid entries must be positive")

    rows = []
    points = []
    for n in grid:
        sub = replace(cfg, items=n)
        store = build_store(sub)
        members = _member_probe_sample(store.records)
        cal = calibrate_decoder(
            store.mem, store.scorer, cfg.probe_count, cfg.epsilon,
            derive_seed(cfg.seed, "calibrate", n), member_probes=members or None,
        )
        decoder = cfg.decoder if cfg.decoder is not None else cal.decoder
        correct = wrong = 0
        match_scores = []
        for t in range(cfg.trials):
            trial_seed = derive_seed(cfg.seed, "capacity", n, t)
            key, true_label = store.records[t % n]
            key_vec = store.mem.key_codebook().vector(key)
            mem_t, key_vec = apply_noise(store.mem, key_vec, cfg.noise, trial_seed)
            z = correlate_query_vector(mem_t, key_vec)
            scores = store.scorer.scores(z)
            match_scores.append(float(scores[store.label_pos[true_label]]))
            outcome = decode_ranked(ranked_from_scores(store.scorer.labels, scores), decoder)
            if outcome.hit and outcome.label == true_label:
                correct += 1
            elif outcome.hit:
                wrong += 1
        point = CapacityPoint(
            items=n, tau=decoder.tau, delta=decoder.delta,
            sigma_hat=cal.sigma_hat, mu_hat=cal.mu_hat,
            accuracy=correct / cfg.trials,
            wrong_rate=wrong / cfg.trials,
            reject_rate=1.0 - (correct + wrong) / cfg.trials,
            mean_match_score=float(np.mean(match_scores)),
        )
        points.append(point)
        rows.append((
            "capacity", cfg.dim, n, cfg.labels, store.mem.gain, cfg.trials,
            cfg.seed, point.tau, point.delta, decoder.top_k, point.sigma_hat,
            point.mu_hat, point.accuracy, point.wrong_rate, point.reject_rate,
            point.mean_match_score,
        ))

    summary = CapacitySummary(
        experiment="capacity", dim=cfg.dim, labels=cfg.labels,
        trials=cfg.trials, seed=cfg.seed, points=tuple(points),
    )
    return ExperimentResult(summary, csv_text(CAPACITY_COLUMNS, rows), ())


def vote_outcomes(outcomes: Sequence[DecodeOutcome]) -> DecodeOutcome:
    """Plurality vote over per-memory Hit labels.

    A label wins with at least ceil(r/2) votes (vote ties broken by
    ascending label bytes); otherwise the composite outcome is a Reject.
    With one memory this is the identity. The winning composite reuses
    the outcome of the first memory that voted for the winner, so its
    score fields still satisfy the accept rule; a composite Reject
    mirrors the first memory's scores.
    """
    if not outcomes:
        raise InvalidArgumentError("need at least one outcome")
    if len(outcomes) == 1:
        return outcomes[0]
    votes = Counter(o.label for o in outcomes if o.hit)
    needed = (len(outcomes) + 1) // 2
    winners = sorted(label for label, count in votes.items() if count >= needed)
    if not winners:
        first = outcomes[0]
        return DecodeOutcome(
            label=None, best_score=first.best_score,
            runner_up=first.runner_up, top=first.top,
        )
    winner = winners[0]
    return next(o for o in outcomes if o.label == winner)


def amplified_decode(
    memories: Sequence[HbfMemory],
    key,
    cfg: DecoderConfig,
    labels: Sequence,
) -> DecodeOutcome:
    """Decode against r independent memories and vote on the label.

    Memories must share the label universe but may (and should) use
    independent codebook seeds.
    """
    if not memories:
        raise InvalidArgumentError("need at least one memory")
    outcomes = [
        decode(mem, key, cfg, ValueScorer(mem.value_codebook(), labels))
        for mem in memories
    ]
    return vote_outcomes(outcomes)


@dataclass(frozen=True)
class AmplifySummary:
    experiment: str
    dim: int
    items: int
    labels: int
    rho: float
    replicas: int
    trials: int
    seed: int
    tau: float
    delta: float
    top_k: int
    single_error_rate: float
    voted_error_rate: float
    single_only_errors: int
    voted_only_errors: int
    z_score: float
    confident_95: bool


def run_amplified_experiment(cfg: ExperimentConfig, replicas: int) -> ExperimentResult:
    """Paired comparison of one memory vs an r-memory plurality vote.

    Each replica stores the same records under independent codebook
    seeds and sees independently drawn noise. Per trial we record the
    first replica's outcome and the voted outcome for the same query,
    then test error reduction with a one-sided paired (McNemar-style)
    z-test at 95%.
    """
    if replicas < 1:
        raise InvalidArgumentError("replicas must be at least 1")
    if cfg.items < 1:
        raise InvalidArgumentError("amplified experiment needs a non-empty store")

    stores = [
        build_store(
            cfg,
            key_seed=derive_seed(cfg.seed, "replica", j, "key"),
            value_seed=derive_seed(cfg.seed, "replica", j, "value"),
        )
        for j in range(replicas)
    ]
    # One shared decoder config, calibrated on the first replica; the
    # impostor scale is statistically identical across replicas.
    if cfg.decoder is not None:
        decoder, cal = cfg.decoder, None
    else:
        members = _member_probe_sample(stores[0].records)
        cal = calibrate_decoder(
            stores[0].mem, stores[0].scorer, cfg.probe_count, cfg.epsilon,
            derive_seed(cfg.seed, "calibrate"), member_probes=members or None,
        )
        decoder = cal.decoder

    rows = []
    single_errors = voted_errors = 0
    single_only = voted_only = 0
    for t in range(cfg.trials):
        trial_seed = derive_seed(cfg.seed, "amplify", t)
        key, true_label = stores[0].records[t % cfg.items]
        outcomes = []
        for j, store in enumerate(stores):
            key_vec = store.mem.key_codebook().vector(key)
            mem_t, key_vec = apply_noise(
                store.mem, key_vec, cfg.noise, derive_seed(trial_seed, "replica", j)
            )
            z = correlate_query_vector(mem_t, key_vec)
            outcomes.append(decode_ranked(store.scorer.ranked(z), decoder))
        voted = vote_outcomes(outcomes)
        err_single = outcomes[0].label != true_label
        err_voted = voted.label != true_label
        single_errors += int(err_single)
        voted_errors += int(err_voted)
        single_only += int(err_single and not err_voted)
        voted_only += int(err_voted and not err_single)
        rows.append((
            "amplify", cfg.dim, cfg.items, cfg.labels, stores[0].mem.gain,
            replicas, _noise_label(cfg.noise), t, trial_seed,
            _fmt_label(true_label),
            _outcome_status(outcomes[0], true_label),
            _outcome_status(voted, true_label),
        ))

    discordant = single_only + voted_only
    z_score = (single_only - voted_only) / np.sqrt(discordant) if discordant else 0.0
    summary = AmplifySummary(
        experiment="amplify", dim=cfg.dim, items=cfg.items, labels=cfg.labels,
        rho=stores[0].mem.gain, replicas=replicas, trials=cfg.trials,
        seed=cfg.seed, tau=decoder.tau, delta=decoder.delta, top_k=decoder.top_k,
        single_error_rate=single_errors / cfg.trials,
        voted_error_rate=voted_errors / cfg.trials,
        single_only_errors=single_only,
        voted_only_errors=voted_only,
        z_score=float(z_score),
        confident_95=bool(z_score >= 1.6448536269514722),
    )
    return ExperimentResult(summary, csv_text(AMPLIFY_COLUMNS, rows), ())


def _outcome_status(outcome: DecodeOutcome, true_label: bytes) -> str:
    if not outcome.hit:
        return "reject"
    return "hit-correct" if outcome.label == true_label else "hit-wrong"


@dataclass(frozen=True)
class BaselineSummary:
    experiment: str
    p: float
    ell: int
    hop_time: float
    trials: int
    seed: int
    success_prob: float
    expected_time: float
    expected_time_repeat: float
    measured_success: float
    measured_mean_attempts: float
    measured_mean_total_time: float
    truncated_trials: int


def run_baseline_experiment(
    model: ChaseModel,
    trials: int,
    seed: int,
    max_attempts: int | None = None,
    hbf_stats: HbfQueryStats | None = None,
) -> ExperimentResult:
    """Simulate the pointer-chase baseline and emit the comparison CSV."""
    kwargs = {} if max_attempts is None else {"max_attempts": max_attempts}
    stats = chase_simulate(model, trials, seed, **kwargs)
    comparison = []
    if hbf_stats is not None:
        comparison.append(hbf_comparison_row(hbf_stats, model))
    comparison.append(chase_comparison_row(model, stats))
    rows = [
        (
            r.system, r.p, r.ell, r.hop_time, r.success_prob, r.expected_time,
            r.expected_time_repeat, r.measured_success, r.measured_time_mean,
            r.trials, r.seed,
        )
        for r in comparison
    ]
    summary = BaselineSummary(
        experiment="baseline", p=model.p, ell=model.ell, hop_time=model.hop_time,
        trials=trials, seed=seed,
        success_prob=chase_success_prob(model),
        expected_time=chase_expected_time(model),
        expected_time_repeat=chase_expected_time_repeat(model),
        measured_success=stats.success_rate,
        measured_mean_attempts=stats.mean_attempts,
        measured_mean_total_time=stats.mean_total_time,
        truncated_trials=stats.truncated_trials,
    )
    return ExperimentResult(summary, csv_text(BASELINE_COLUMNS, rows), ())
