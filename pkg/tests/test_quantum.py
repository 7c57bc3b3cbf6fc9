from __future__ import annotations

import math

import numpy as np
import pytest

from entsim.quantum import (
    QuantumParams,
    binary_entropy,
    coincidence_probability,
    detector_noise_term,
    distillation_yield,
    evaluate_sample,
    qber,
    raw_coincidence_rate,
    simulate_coincidences,
)


def _naive_q(mu: float, eta1: float, eta2: float, y01: float, y02: float) -> float:
    half = mu / 2.0
    return (
        1.0
        - (1.0 - y01) / (1.0 + eta1 * half) ** 2
        - (1.0 - y02) / (1.0 + eta2 * half) ** 2
        + (1.0 - y01) * (1.0 - y02) / (1.0 + (eta1 + eta2 - eta1 * eta2) * half) ** 2
    )


def test_noise_yield() -> None:
    assert detector_noise_term(100.0, 100.0, 200e-12) == pytest.approx(1e-7)
    assert detector_noise_term(100.0, 100.0, 200e-12, n_det=1) == pytest.approx(4e-8)


def test_noise_yield_follows_params(quantum_1550: QuantumParams) -> None:
    assert quantum_1550.noise_yield == pytest.approx(1e-7)
    assert quantum_1550.pair_rate == pytest.approx(1e8)


def test_coincidence_probability_limits() -> None:
    assert coincidence_probability(0.02, 0.0, 0.0, 0.0, 0.0) == 0.0
    assert coincidence_probability(0.02, 0.0, 0.0, 1e-3, 2e-3) == pytest.approx(2e-6)
    assert coincidence_probability(0.02, 0.3, 0.4, 1e-4, 1e-4) == pytest.approx(
        _naive_q(0.02, 0.3, 0.4, 1e-4, 1e-4), rel=1e-9
    )


def test_coincidence_probability_is_symmetric_and_monotone() -> None:
    etas = np.geomspace(1e-6, 0.5, 30)
    q = coincidence_probability(0.02, etas, 1e-3, 1e-7, 1e-7)
    assert np.all(np.diff(q) > 0.0)
    assert coincidence_probability(0.02, 1e-3, 5e-4, 1e-7, 2e-7) == pytest.approx(
        coincidence_probability(0.02, 5e-4, 1e-3, 2e-7, 1e-7), rel=1e-9
    )


def test_tiny_efficiency_has_no_cancellation() -> None:
    # signal ~ eta1*eta2*mu with eta ~ 1e-5; the naive form loses it in 1 - ...
    q = coincidence_probability(0.02, 1e-5, 1e-5, 0.0, 0.0)
    expected = 0.02 * 1e-10 * (1.0 + 1.5 * 0.02)
    assert q == pytest.approx(expected, rel=1e-3)


def test_reference_operating_point(quantum_1550: QuantumParams) -> None:
    result = evaluate_sample(1e-3, 1e-3, quantum_1550)
    assert result.q_prob == pytest.approx(2.0603e-8, rel=1e-4)
    assert result.r_unsifted == pytest.approx(103.01, rel=1e-3)
    assert result.r_raw == pytest.approx(51.507, rel=1e-3)
    assert result.qber == pytest.approx(0.0196, abs=1e-4)
    assert result.distill_yield == pytest.approx(0.3455, abs=1e-3)
    assert result.r_distilled == pytest.approx(35.59, rel=1e-3)
    assert raw_coincidence_rate(result.q_prob, 200e-12) == pytest.approx(
        result.r_unsifted
    )


def test_evaluate_sample_is_vectorized(quantum_1550: QuantumParams) -> None:
    etas = np.array([1e-3, 1e-4])
    batch = evaluate_sample(etas, etas, quantum_1550)
    single = evaluate_sample(1e-4, 1e-4, quantum_1550)
    assert batch.r_raw[1] == pytest.approx(single.r_raw)
    assert batch.qber[1] == pytest.approx(single.qber)
    assert batch.r_raw[0] > batch.r_raw[1]


def test_binary_entropy_values() -> None:
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-4)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_distillation_ratio_at_two_percent() -> None:
    ratio = distillation_yield(0.02, 0.5, 1.22) / 0.5
    assert ratio == pytest.approx(0.686, abs=0.005)


def test_distillation_yield_threshold() -> None:
    assert distillation_yield(0.5, 0.5, 1.22) == 0.0
    assert distillation_yield(0.093, 0.5, 1.22) > 0.0
    assert distillation_yield(0.096, 0.5, 1.22) == 0.0
    assert distillation_yield(math.nan, 0.5, 1.22) == 0.0


def test_qber_tends_to_e0_when_signal_vanishes() -> None:
    y0 = 1e-7
    q = coincidence_probability(0.02, 1e-9, 1e-9, y0, y0)
    assert qber(0.02, 1e-9, 1e-9, q, 0.5, 0.01) == pytest.approx(0.5, abs=1e-3)


def test_qber_is_undefined_without_coincidences() -> None:
    assert math.isnan(qber(0.02, 0.0, 0.0, 0.0, 0.5, 0.01))
    silent = QuantumParams(0.02, 200e-12, 0.5, 1.22, 0.5, 0.01, 0.0, 0.0)
    result = evaluate_sample(0.0, 0.0, silent)
    assert math.isnan(result.qber)
    assert result.r_raw == 0.0
    assert result.r_distilled == 0.0


def test_more_noise_raises_qber() -> None:
    mu, eta = 0.02, 1e-3
    e_values = []
    for y0 in (1e-7, 2e-7):
        q = coincidence_probability(mu, eta, eta, y0, y0)
        e_values.append(qber(mu, eta, eta, q, 0.5, 0.01))
    assert e_values[1] > e_values[0]


def test_quantum_params_validation() -> None:
    with pytest.raises(ValueError):
        QuantumParams(0.0, 200e-12, 0.5, 1.22, 0.5, 0.01, 100.0, 100.0)
    with pytest.raises(ValueError):
        QuantumParams(0.02, 200e-12, 0.5, 0.9, 0.5, 0.01, 100.0, 100.0)
    with pytest.raises(ValueError):
        QuantumParams(0.02, 200e-12, 0.5, 1.22, 0.01, 0.5, 100.0, 100.0)


@pytest.mark.parametrize(
    ("mu", "eta", "y0"),
    [(0.1, 0.1, 1e-4), (0.02, 0.05, 1e-5)],
)
def test_monte_carlo_matches_closed_form(mu: float, eta: float, y0: float) -> None:
    estimate = simulate_coincidences(mu, eta, eta, y0, y0, windows=4_000_000, seed=7)
    expected = coincidence_probability(mu, eta, eta, y0, y0)
    tolerance = 3.0 * max(estimate.std_error, math.sqrt(expected / estimate.windows))
    assert abs(estimate.probability - expected) <= tolerance


def test_monte_carlo_is_reproducible() -> None:
    a = simulate_coincidences(0.1, 0.1, 0.1, 1e-4, 1e-4, windows=10_000, seed=3)
    b = simulate_coincidences(0.1, 0.1, 0.1, 1e-4, 1e-4, windows=10_000, seed=3)
    assert a == b


def test_coincidence_probability_grows_with_mu_and_noise() -> None:
    mus = np.geomspace(1e-4, 0.5, 30)
    assert np.all(np.diff(coincidence_probability(mus, 1e-3, 1e-3, 1e-7, 1e-7)) > 0.0)
    y0s = np.geomspace(1e-9, 1e-3, 30)
    assert np.all(np.diff(coincidence_probability(0.02, 1e-3, 1e-3, y0s, y0s)) > 0.0)


def test_qber_never_rises_with_a_better_channel() -> None:
    etas = np.geomspace(1e-6, 0.5, 40)
    q = coincidence_probability(0.02, etas, 1e-3, 1e-7, 1e-7)
    e = np.asarray(qber(0.02, etas, 1e-3, q, 0.5, 0.01))
    assert np.all(np.diff(e) <= 1e-12)
    assert e[0] > e[-1]


@pytest.mark.parametrize("eta", [1e-3, 0.1])
def test_noiseless_weak_source_qber_is_the_visibility_error(eta: float) -> None:
    mu = 1e-6
    q = coincidence_probability(mu, eta, eta, 0.0, 0.0)
    assert qber(mu, eta, eta, q, 0.5, 0.01) == pytest.approx(0.01, abs=1e-5)
