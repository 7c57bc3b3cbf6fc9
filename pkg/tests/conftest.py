from __future__ import annotations

import math
from collections.abc import Callable
from typing import Any

import pytest

from entsim.astro import Epoch, GroundStation
from entsim.link_budget import LinkParams
from entsim.quantum import QuantumParams
from entsim.scenario import SampleRecord


@pytest.fixture
def start() -> Epoch:
    return Epoch.from_iso("2021-07-01T00:00:00Z")


@pytest.fixture
def paris() -> GroundStation:
    return GroundStation("Paris", 48.85, 2.35)


@pytest.fixture
def nice() -> GroundStation:
    return GroundStation("Nice", 43.7, 7.25)


@pytest.fixture
def link_1550() -> LinkParams:
    return LinkParams(
        wavelength_m=1550e-9,
        d_t_m=0.3,
        d_r_m=0.8,
        a_atm0_db=2.0,
        t_t=0.8,
        t_r=0.8,
        t_optics=0.35,
        l_p=0.2,
        pde=0.9,
    )


@pytest.fixture
def link_810() -> LinkParams:
    return LinkParams(
        wavelength_m=810e-9,
        d_t_m=0.3,
        d_r_m=0.8,
        a_atm0_db=3.0,
        t_t=0.8,
        t_r=0.8,
        t_optics=0.2,
        l_p=0.3,
        pde=0.9,
    )


@pytest.fixture
def quantum_1550() -> QuantumParams:
    return QuantumParams(
        mu=0.02,
        tau_s=200e-12,
        q=0.5,
        f=1.22,
        e0=0.5,
        e_p=0.01,
        dark_cps=100.0,
        background_cps=100.0,
    )


def _record(epoch: Epoch, *, comm: bool = True, **fields: Any) -> SampleRecord:
    values: dict[str, Any] = {
        "beta1_deg": 45.0,
        "beta2_deg": 45.0,
        "range1_km": 800.0,
        "range2_km": 800.0,
        "atten1_db": 25.0,
        "atten2_db": 25.0,
        "eta1": 1e-3,
        "eta2": 1e-3,
        "dual_vis": True,
        "night": True,
        "q_prob": 2e-8,
        "r_raw": 50.0,
        "qber": 0.02,
        "r_distilled": 35.0,
        "r_unsifted": 100.0,
    }
    if not comm:
        for key in ("atten1_db", "atten2_db", "eta1", "eta2", "q_prob", "r_raw"):
            values[key] = math.nan
        for key in ("qber", "r_distilled", "r_unsifted"):
            values[key] = math.nan
    values.update(fields)
    return SampleRecord(epoch=epoch, comm=comm, **values)


@pytest.fixture
def make_record() -> Callable[..., SampleRecord]:
    """Build a synthetic SampleRecord; keyword arguments override fields."""
    return _record
