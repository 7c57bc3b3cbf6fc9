"""Coincidence, QBER and distillation model for a two-station SPDC downlink.

Q(mu) is evaluated in an algebraically equivalent form that avoids the
catastrophic cancellation of ``1 - ... + ...`` when eta*mu is tiny (MEO links
reach eta ~ 1e-5). Every function accepts scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import xlogy

NO_SIGNAL = math.nan


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


@dataclass(frozen=True, slots=True)
class QuantumParams:
    mu: float
    tau_s: float
    q: float
    f: float
    e0: float
    e_p: float
    dark_cps: float
    background_cps: float
    detectors_per_station: int = 4

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0 (got {self.mu})")
        if not self.tau_s > 0.0:
            raise ValueError(f"tau must be > 0 (got {self.tau_s})")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1] (got {self.q})")
        if not self.f >= 1.0:
            raise ValueError(f"f must be >= 1 (got {self.f})")
        if not 0.0 <= self.e_p <= self.e0 <= 0.5:
            raise ValueError("need 0 <= e_p <= e0 <= 0.5")
        if self.dark_cps < 0.0 or self.background_cps < 0.0:
            raise ValueError("count rates must be >= 0")
        if self.detectors_per_station < 1:
            raise ValueError("detectors_per_station must be >= 1")

    @property
    def pair_rate(self) -> float:
        return self.mu / self.tau_s

    @property
    def noise_yield(self) -> float:
        return detector_noise_term(
            self.dark_cps, self.background_cps, self.tau_s, self.detectors_per_station
        )


class CoincidenceResult(NamedTuple):
    q_prob: float
    r_raw: float
    qber: float
    distill_yield: float
    r_distilled: float
    r_unsifted: float


def detector_noise_term(
    dark_cps: float, background_cps: float, tau_s: float, n_det: int = 4
) -> float:
    return (n_det * dark_cps + background_cps) * tau_s


def _inv_sq_complement(x):
    """1 - 1/(1+x)^2, accurate for small x."""
    return -np.expm1(-2.0 * np.log1p(x))


def coincidence_probability(mu, eta1, eta2, y01, y02):
    mu = np.asarray(mu, dtype=float)
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    y01 = np.asarray(y01, dtype=float)
    y02 = np.asarray(y02, dtype=float)

    a1 = eta1 * mu / 2.0
    a2 = eta2 * mu / 2.0
    a12 = (eta1 + eta2 - eta1 * eta2) * mu / 2.0
    c1 = _inv_sq_complement(a1)
    c2 = _inv_sq_complement(a2)
    c12 = _inv_sq_complement(a12)
    # 1 - (1-Y1)u - (1-Y2)v + (1-Y1)(1-Y2)w  with u = 1-c1, v = 1-c2, w = 1-c12
    q = c1 + c2 - c12 + y01 * (c12 - c1) + y02 * (c12 - c2) + y01 * y02 * (1.0 - c12)
    return _out(np.clip(q, 0.0, 1.0))


def raw_coincidence_rate(q_prob, tau_s: float):
    if not tau_s > 0.0:
        raise ValueError("tau must be > 0")
    return _out(np.asarray(q_prob, dtype=float) / tau_s)


def binary_entropy(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("binary entropy needs x in [0, 1]")
    return _out(-(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / math.log(2.0))


def qber(mu, eta1, eta2, q_prob, e0: float, e_p: float):
    """QBER estimate; NO_SIGNAL (NaN) where Q == 0."""
    mu = np.asarray(mu, dtype=float)
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    q_prob = np.asarray(q_prob, dtype=float)
    half = mu / 2.0
    c = ((e0 - e_p) * eta1 * eta2 * mu * (1.0 + half)) / (
        (1.0 + eta1 * half)
        * (1.0 + eta2 * half)
        * (1.0 + (eta1 + eta2 - eta1 * eta2) * half)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.clip(e0 - c / q_prob, 0.0, 0.5)
    return _out(np.where(q_prob > 0.0, value, NO_SIGNAL))


def distillation_yield(qber_value, q: float, f: float):
    """q * (1 - f*H2 - H2), clamped at 0; no-signal samples yield 0."""
    e = np.asarray(qber_value, dtype=float)
    signal = ~np.isnan(e)
    h = binary_entropy(np.where(signal, e, 0.5))
    return _out(np.where(signal, np.maximum(q * (1.0 - f * h - h), 0.0), 0.0))


def evaluate_sample(eta1, eta2, qp: QuantumParams) -> CoincidenceResult:
    """Compose Q, sifted raw rate, QBER, yield and distilled rate.

    Raw rates include the sifting factor q. Where Q == 0 the QBER stays at
    NO_SIGNAL and the yield is 0.
    """
    y0 = qp.noise_yield
    q_prob = np.asarray(coincidence_probability(qp.mu, eta1, eta2, y0, y0))
    r_unsifted = q_prob / qp.tau_s
    r_raw = qp.q * r_unsifted
    e = np.asarray(qber(qp.mu, eta1, eta2, q_prob, qp.e0, qp.e_p))
    y = np.asarray(distillation_yield(e, qp.q, qp.f))
    r_distilled = (y / qp.q) * r_raw
    return CoincidenceResult(
        q_prob=_out(q_prob),
        r_raw=_out(r_raw),
        qber=_out(e),
        distill_yield=_out(y),
        r_distilled=_out(r_distilled),
        r_unsifted=_out(r_unsifted),
    )


# -------------------------
# Event-level oracle
# -------------------------


class MonteCarloEstimate(NamedTuple):
    windows: int
    coincidences: int
    probability: float
    std_error: float


def simulate_coincidences(
    mu: float,
    eta1: float,
    eta2: float,
    y01: float,
    y02: float,
    *,
    windows: int,
    seed: int = 0,
    batch: int = 1_000_000,
) -> MonteCarloEstimate:
    """Count two-sided click windows for a two-mode SPDC source.

    Pair number per window follows P(n) = (n+1) l^n / (1+l)^(n+2), l = mu/2,
    i.e. a negative binomial with r=2, p=1/(1+l). Each photon is detected
    independently; noise clicks are added with probability Y0 per side.
    Batches draw from spawned child seeds, so the count depends only on
    (seed, windows, batch).
    """
    if windows <= 0 or batch <= 0:
        raise ValueError("windows and batch must be > 0")
    lam = mu / 2.0
    n_batches = -(-windows // batch)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    hits = 0
    remaining = windows
    for child in children:
        size = min(batch, remaining)
        remaining -= size
        rng = np.random.default_rng(child)
        pairs = rng.negative_binomial(2, 1.0 / (1.0 + lam), size=size)
        p1 = 1.0 - (1.0 - eta1) ** pairs * (1.0 - y01)
        p2 = 1.0 - (1.0 - eta2) ** pairs * (1.0 - y02)
        both = (rng.random(size) < p1) & (rng.random(size) < p2)
        hits += int(np.count_nonzero(both))
    p_hat = hits / windows
    return MonteCarloEstimate(
        windows=windows,
        coincidences=hits,
        probability=p_hat,
        std_error=math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / windows),
    )
