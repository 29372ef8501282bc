"""Empirical decoder calibration from impostor-score statistics.

Rather than trusting any particular score normalization, the threshold
is set from measurements: non-member probe queries give the impostor
score scale sigma_hat, and the extreme-value quantile of the max over
the label set turns that into an absolute threshold for a target
trigger rate. When known-stored pairs are supplied, their mean match
score mu_hat additionally sets the margin (mu_hat / 4) and floors the
threshold at mu_hat / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import evt_threshold_exact
from .errors import CalibrationError, InvalidArgumentError
from .hypervector import correlate_batch, is_power_of_two
from .index import DecoderConfig, HbfMemory, ValueScorer, correlate_query_vector

_PROBE_CHUNK = 256


@dataclass(frozen=True)
class CalibrationResult:
    decoder: DecoderConfig
    sigma_hat: float
    mu_hat: float | None
    probe_count: int
    epsilon: float


def _probe_keys(seed: int, start: int, count: int) -> list[bytes]:
    # The probe namespace is disjoint from any stored or evaluated key by
    # construction; collisions with a real key space are negligible.
    return [b"calibration-probe:%016x:%08d" % (seed, start + i) for i in range(count)]


def calibrate_decoder(
    mem: HbfMemory,
    labels: Sequence,
    probe_count: int,
    epsilon: float,
    seed: int,
    member_probes: Sequence[tuple] | None = None,
    top_k: int = 2,
) -> CalibrationResult:
    """Fit (tau, delta) for a target non-member trigger rate epsilon.

    probe_count non-member queries are scored against every label to
    estimate the impostor scale; tau is the exact EVT quantile for the
    max of |labels| such scores. member_probes, when given, must be
    (key, value) pairs already stored in the memory.
    """
    if probe_count < 100:
        raise InvalidArgumentError("probe_count must be at least 100")
    if not 0.0 < epsilon < 1.0:
        raise InvalidArgumentError("epsilon must lie in (0, 1)")

    scorer = labels if isinstance(labels, ValueScorer) else ValueScorer(
        mem.value_codebook(), labels
    )
    key_cb = mem.key_codebook()

    total_sq = 0.0
    total_n = 0
    done = 0
    batched = is_power_of_two(mem.dim)
    while done < probe_count:
        chunk = min(_PROBE_CHUNK, probe_count - done)
        keys = _probe_keys(seed, done, chunk)
        if batched:
            probes = np.stack([key_cb.vector(k) for k in keys])
            zs = correlate_batch(probes, mem.vector)
            scores = zs @ scorer.matrix.T
            total_sq += float(np.sum(scores * scores))
            total_n += scores.size
        else:
            for k in keys:
                z = correlate_query_vector(mem, key_cb.vector(k))
                s = scorer.scores(z)
                total_sq += float(s @ s)
                total_n += s.size
        done += chunk

    sigma_hat = float(np.sqrt(total_sq / total_n))
    if sigma_hat == 0.0:
        raise CalibrationError(
            "impostor scores are all zero (empty or degenerate memory)"
        )

    mu_hat: float | None = None
    if member_probes:
        value_cb = mem.value_codebook()
        matches = []
        for key, value in member_probes:
            z = correlate_query_vector(mem, key_cb.vector(key))
            matches.append(float(z @ value_cb.vector(value)))
        mu_hat = float(np.mean(matches))

    tau = evt_threshold_exact(sigma_hat, len(scorer.labels), epsilon)
    delta = 0.0
    if mu_hat is not None:
        delta = mu_hat / 4.0
        tau = max(tau, mu_hat / 2.0)

    return CalibrationResult(
        decoder=DecoderConfig(tau=tau, delta=delta, top_k=top_k),
        sigma_hat=sigma_hat,
        mu_hat=mu_hat,
        probe_count=probe_count,
        epsilon=epsilon,
    )
