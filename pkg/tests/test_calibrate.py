"""Decoder calibration: thresholds, margins, and trigger-rate control."""

import pytest

from hbf import (
    CalibrationError,
    InvalidArgumentError,
    ValueScorer,
    build,
    calibrate_decoder,
    decode,
)


def make_store(items, dim, labels_count, rho=1.0, seeds=(41, 42)):
    records = [(b"key-%04d" % i, b"val-%04d" % (i % labels_count)) for i in range(items)]
    labels = [b"val-%04d" % j for j in range(labels_count)]
    mem = build(records, dim, rho=rho, key_seed=seeds[0], value_seed=seeds[1])
    return records, labels, mem


def test_single_item_memory_calibrates_and_hits():
    records, labels, mem = make_store(1, 2048, 8)
    evt_only = calibrate_decoder(mem, labels, 200, 0.01, seed=1)
    cal = calibrate_decoder(mem, labels, 200, 0.01, seed=1, member_probes=records)
    assert cal.mu_hat is not None
    assert cal.mu_hat > 10 * evt_only.decoder.tau  # huge headroom over the noise quantile
    assert cal.decoder.tau == pytest.approx(cal.mu_hat / 2)  # the floor engages
    out = decode(mem, records[0][0], cal.decoder, labels)
    assert out.hit and out.label == records[0][1]


def test_doubling_epsilon_strictly_lowers_tau():
    _, labels, mem = make_store(20, 1024, 20)
    taus = [
        calibrate_decoder(mem, labels, 200, eps, seed=2).decoder.tau
        for eps in (0.01, 0.02, 0.04, 0.08)
    ]
    assert all(a > b for a, b in zip(taus, taus[1:]))


def test_member_probes_floor_tau_and_set_margin():
    records, labels, mem = make_store(4, 1024, 8)
    plain = calibrate_decoder(mem, labels, 200, 0.01, seed=3)
    with_members = calibrate_decoder(
        mem, labels, 200, 0.01, seed=3, member_probes=records
    )
    assert plain.mu_hat is None
    assert plain.decoder.delta == 0.0
    assert with_members.mu_hat is not None
    assert with_members.decoder.delta == pytest.approx(with_members.mu_hat / 4)
    assert with_members.decoder.tau >= with_members.mu_hat / 2
    assert with_members.decoder.tau >= plain.decoder.tau


def test_sigma_hat_reflects_interference_scale():
    _, labels_small, mem_small = make_store(10, 1024, 16)
    _, labels_big, mem_big = make_store(160, 1024, 16)
    small = calibrate_decoder(mem_small, labels_small, 200, 0.05, seed=4)
    big = calibrate_decoder(mem_big, labels_big, 200, 0.05, seed=4)
    # more superposed items, more interference: roughly sqrt(n) growth
    assert big.sigma_hat > 2.5 * small.sigma_hat


def test_trigger_rate_close_to_epsilon():
    _, labels, mem = make_store(50, 2048, 50)
    eps = 0.05
    cal = calibrate_decoder(mem, labels, 400, eps, seed=5)
    scorer = ValueScorer(mem.value_codebook(), labels)
    trials = 2000
    triggers = sum(
        decode(mem, b"not-stored-%05d" % t, cal.decoder, scorer).hit
        for t in range(trials)
    )
    assert triggers / trials <= 2 * eps
    assert triggers / trials >= eps / 4  # tau is sharp, not a blunt +inf


def test_degenerate_sigma_raises():
    _, labels, mem = make_store(0, 512, 4)
    with pytest.raises(CalibrationError):
        calibrate_decoder(mem, labels, 100, 0.01, seed=6)


def test_probe_count_floor_enforced():
    _, labels, mem = make_store(2, 512, 4)
    with pytest.raises(InvalidArgumentError):
        calibrate_decoder(mem, labels, 99, 0.01, seed=7)
    with pytest.raises(InvalidArgumentError):
        calibrate_decoder(mem, labels, 200, 1.5, seed=7)


def test_calibration_deterministic_per_seed():
    records, labels, mem = make_store(8, 1024, 8)
    a = calibrate_decoder(mem, labels, 150, 0.02, seed=8, member_probes=records)
    b = calibrate_decoder(mem, labels, 150, 0.02, seed=8, member_probes=records)
    c = calibrate_decoder(mem, labels, 150, 0.02, seed=9, member_probes=records)
    assert a == b
    assert a.sigma_hat != c.sigma_hat


def test_non_power_of_two_dimension_falls_back():
    records, labels, mem = make_store(3, 1000, 4)
    cal = calibrate_decoder(mem, labels, 100, 0.05, seed=10, member_probes=records)
    assert cal.sigma_hat > 0
    out = decode(mem, records[1][0], cal.decoder, labels)
    assert out.hit and out.label == records[1][1]
