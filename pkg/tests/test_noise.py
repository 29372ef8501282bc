"""Noise channels: exactness, statistics, and seeded reproducibility."""

import math

import numpy as np
import pytest

from hbf import (
    Codebook,
    InvalidArgumentError,
    NoiseSpec,
    ValueScorer,
    build,
    correlate_query,
    corrupt_memory_flip,
    corrupt_memory_gauss,
    cosine,
    inner_product,
    perturb_key_gauss,
    perturb_key_hamming,
)
from hbf.experiments import ExperimentConfig, run_fn_experiment


def make_memory(items=20, dim=4096, rho=1.0):
    records = [(b"key-%03d" % i, b"val-%03d" % i) for i in range(items)]
    return records, build(records, dim, rho=rho, key_seed=3, value_seed=4)


# ---------------------------------------------------------------------------
# memory flips


def test_flip_zero_probability_is_identity():
    _, mem = make_memory()
    assert np.array_equal(corrupt_memory_flip(mem, 0.0, 1).vector, mem.vector)


def test_flip_count_within_binomial_range():
    _, mem = make_memory(items=5, dim=10_000)
    corrupted = corrupt_memory_flip(mem, 0.01, seed=42)
    flipped = int(np.sum(corrupted.vector != mem.vector))
    assert 60 <= flipped <= 140


def test_flip_rejects_half_and_above():
    _, mem = make_memory(items=2, dim=256)
    with pytest.raises(InvalidArgumentError):
        corrupt_memory_flip(mem, 0.5, 1)


def test_flip_deterministic_per_seed():
    _, mem = make_memory(items=2, dim=1024)
    a = corrupt_memory_flip(mem, 0.1, seed=9)
    b = corrupt_memory_flip(mem, 0.1, seed=9)
    c = corrupt_memory_flip(mem, 0.1, seed=10)
    assert np.array_equal(a.vector, b.vector)
    assert not np.array_equal(a.vector, c.vector)


def test_flip_shrinks_match_score_by_expected_factor():
    # mean match score under flips approaches (1 - 2 p_e) of the clean one
    d = 8192
    records, mem = make_memory(items=10, dim=d)
    labels = [v for _, v in records]
    scorer = ValueScorer(mem.value_codebook(), labels)
    p_e = 0.2
    ratios = []
    for t in range(60):
        key, value = records[t % len(records)]
        z_clean = correlate_query(mem, key)
        noisy = corrupt_memory_flip(mem, p_e, seed=1000 + t)
        z_noisy = correlate_query(noisy, key)
        pos = scorer.labels.index(value)
        ratios.append(scorer.scores(z_noisy)[pos] / scorer.scores(z_clean)[pos])
    assert np.mean(ratios) == pytest.approx(1 - 2 * p_e, rel=0.10)


# ---------------------------------------------------------------------------
# memory gaussian


def test_gauss_zero_sigma_is_identity():
    _, mem = make_memory(items=3, dim=512)
    assert np.array_equal(corrupt_memory_gauss(mem, 0.0, 5).vector, mem.vector)


def test_gauss_sample_variance_matches():
    _, mem = make_memory(items=3, dim=10_000)
    noisy = corrupt_memory_gauss(mem, 1.0, seed=7)
    added = noisy.vector - mem.vector
    assert 0.95 <= float(np.var(added)) <= 1.05
    assert abs(float(np.mean(added))) < 0.05


def test_gauss_rejects_negative_sigma():
    _, mem = make_memory(items=2, dim=256)
    with pytest.raises(InvalidArgumentError):
        corrupt_memory_gauss(mem, -1.0, 1)


# ---------------------------------------------------------------------------
# key hamming


def test_hamming_zero_is_identity():
    k = Codebook(b"key", 3, 1024).vector(b"probe")
    assert np.array_equal(perturb_key_hamming(k, 0, 1), k)


def test_hamming_full_negates():
    k = Codebook(b"key", 3, 512).vector(b"probe")
    flipped = perturb_key_hamming(k, 512, 1)
    assert np.array_equal(flipped, -k)
    assert inner_product(k, flipped) == -512.0


def test_hamming_inner_product_exact():
    d = 10_000
    k = Codebook(b"key", 3, d).vector(b"probe")
    perturbed = perturb_key_hamming(k, 500, seed=11)
    assert inner_product(k, perturbed) == float(d - 2 * 500)


def test_hamming_exact_over_random_cases():
    rng = np.random.default_rng(123)
    for case in range(100):
        d = int(rng.integers(8, 5000))
        h = int(rng.integers(0, d + 1))
        k = Codebook(b"key", 3, max(2, d)).vector(b"case-%d" % case)
        d = k.shape[0]
        h = min(h, d)
        perturbed = perturb_key_hamming(k, h, seed=case)
        assert inner_product(k, perturbed) == float(d - 2 * h)


def test_hamming_rejects_out_of_range_and_non_sign():
    k = Codebook(b"key", 3, 128).vector(b"probe")
    with pytest.raises(InvalidArgumentError):
        perturb_key_hamming(k, 129, 1)
    with pytest.raises(InvalidArgumentError):
        perturb_key_hamming(k * 0.5, 1, 1)


# ---------------------------------------------------------------------------
# key gaussian


def test_key_gauss_zero_identity_and_cosine():
    d = 4096
    k = Codebook(b"key", 3, d).vector(b"probe")
    assert np.array_equal(perturb_key_gauss(k, 0.0, 1), k)
    sigma = 0.5
    cosines = [
        cosine(k, perturb_key_gauss(k, sigma, seed=s)) for s in range(40)
    ]
    assert np.mean(cosines) == pytest.approx(1 / math.sqrt(1 + sigma**2), rel=0.05)


# ---------------------------------------------------------------------------
# accuracy monotonicity and composition order


def _fn_accuracy(noise, seed=77):
    cfg = ExperimentConfig(
        dim=1024, items=16, labels=16, trials=160, seed=seed,
        rho=1.0, noise=noise, probe_count=100, epsilon=0.05,
    )
    return run_fn_experiment(cfg).summary.accuracy


def test_accuracy_monotone_in_memory_gauss():
    accs = [
        _fn_accuracy((NoiseSpec("mem-gauss", sigma),))
        for sigma in (0.0, 64.0, 256.0, 1024.0)
    ]
    for lo, hi in zip(accs[1:], accs[:-1]):
        assert lo <= hi + 0.05  # sampling slack
    assert accs[-1] < accs[0]


def test_accuracy_monotone_in_key_gauss():
    accs = [
        _fn_accuracy((NoiseSpec("key-gauss", sigma),))
        for sigma in (0.0, 1.0, 2.0, 4.0)
    ]
    for lo, hi in zip(accs[1:], accs[:-1]):
        assert lo <= hi + 0.05
    assert accs[-1] < accs[0]


def test_noise_composition_order_is_distribution_invariant():
    forward = _fn_accuracy(
        (NoiseSpec("mem-flip", 0.05), NoiseSpec("key-hamming", 128)), seed=5
    )
    reverse = _fn_accuracy(
        (NoiseSpec("key-hamming", 128), NoiseSpec("mem-flip", 0.05)), seed=6
    )
    # same distribution, independent draws: compare within 3 sigma of a
    # two-proportion binomial at n=160
    spread = 3 * math.sqrt(2 * 0.25 / 160)
    assert abs(forward - reverse) <= spread


# ---------------------------------------------------------------------------
# NoiseSpec


def test_noise_spec_parse_and_str():
    spec = NoiseSpec.parse("key-hamming:500")
    assert spec.kind == "key-hamming" and spec.amount == 500
    assert str(spec) == "key-hamming:500"
    assert str(NoiseSpec.parse("mem-flip:0.01")) == "mem-flip:0.01"


def test_noise_spec_validation():
    with pytest.raises(InvalidArgumentError):
        NoiseSpec("mem-flip", 0.6)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec("key-hamming", 2.5)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec("whatever", 1.0)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec.parse("mem-flip")
