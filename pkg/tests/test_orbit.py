from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import bisect

from entsim.astro import Epoch, Frame
from entsim.errors import PropagationErr
from entsim.orbit import (
    R_EARTH_KM,
    OrbitElements,
    advance,
    j2_secular_rates,
    local_time_of_ascending_node_h,
    propagate,
    propagate_positions,
    solve_kepler,
    solve_kepler_array,
)


def _kepler_oracle(m: float, e: float) -> float:
    def f(x: float) -> float:
        return x - e * math.sin(x) - m

    return bisect(f, m - e - 0.1, m + e + 0.1, xtol=1e-14)


def test_solve_kepler_agrees_with_bisection_on_a_grid() -> None:
    anomalies = np.linspace(0.0, 2.0 * math.pi, 100, endpoint=False)
    for e in np.linspace(0.0, 0.99, 100):
        solved = solve_kepler_array(anomalies, float(e))
        expected = [_kepler_oracle(float(m), float(e)) for m in anomalies]
        assert np.max(np.abs(solved - expected)) < 1e-10


def test_solve_kepler_edge_cases() -> None:
    assert solve_kepler(0.0, 0.0) == 0.0
    assert solve_kepler(1.0, 0.0) == 1.0
    assert solve_kepler(math.pi, 0.5) == pytest.approx(math.pi, abs=1e-12)
    # branch of M is kept
    assert solve_kepler(4.0 * math.pi + 0.3, 0.2) == pytest.approx(
        4.0 * math.pi + solve_kepler(0.3, 0.2), abs=1e-12
    )
    with pytest.raises(ValueError):
        solve_kepler(1.0, 1.0)


def test_circular_600_km_period() -> None:
    leo = OrbitElements.circular(600.0, 50.0, Epoch(0.0))
    assert leo.period_s == pytest.approx(5801.0, abs=1.0)
    assert leo.altitude_km == pytest.approx(600.0)


def test_orbit_elements_validation() -> None:
    with pytest.raises(ValueError):
        OrbitElements.circular(50.0, 50.0, Epoch(0.0))
    with pytest.raises(ValueError):
        OrbitElements(7000.0, 1.2, 50.0, 0.0, 0.0, 0.0, Epoch(0.0))
    with pytest.raises(ValueError):
        OrbitElements.circular(600.0, 181.0, Epoch(0.0))


def test_sun_synchronous_node_drift() -> None:
    rates = j2_secular_rates(R_EARTH_KM + 600.0, 0.0, 97.8)
    assert rates.raan == pytest.approx(0.9856, rel=0.005)


def test_polar_orbit_has_no_node_drift() -> None:
    assert abs(j2_secular_rates(R_EARTH_KM + 600.0, 0.0, 90.0).raan) < 1e-12


def test_circular_equatorial_position_at_epoch() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(600.0, 0.0, epoch, mean_anomaly_deg=30.0)
    state = propagate(el, epoch)
    a = el.semi_major_axis_km
    assert state.position.frame is Frame.ECI
    assert state.epoch == epoch
    assert (state.position.x, state.position.y, state.position.z) == pytest.approx(
        (a * math.cos(math.radians(30.0)), a * math.sin(math.radians(30.0)), 0.0),
        abs=1e-6,
    )


def test_polar_orbit_repeats_after_one_drifted_period() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(
        600.0, 90.0, epoch, raan_deg=40.0, mean_anomaly_deg=10.0
    )
    rates = j2_secular_rates(el.semi_major_axis_km, 0.0, 90.0)
    u_rate = el.mean_motion_rad_s + math.radians(
        rates.arg_perigee + rates.mean_anomaly_drift
    ) / 86400.0
    later = epoch.plus_seconds(2.0 * math.pi / u_rate)
    p0 = propagate(el, epoch).position
    p1 = propagate(el, later).position
    assert (p1 - p0).norm() < 1.0


def test_eccentric_radius_stays_between_apsides() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements(8000.0, 0.1, 63.4, 10.0, 270.0, 0.0, epoch)
    days = epoch.days + np.linspace(0.0, 2.0, 2000)
    r = np.linalg.norm(propagate_positions(el, days), axis=1)
    assert r.min() >= 8000.0 * 0.9 - 1.0
    assert r.max() <= 8000.0 * 1.1 + 1.0
    assert r.min() == pytest.approx(7200.0, abs=5.0)
    assert r.max() == pytest.approx(8800.0, abs=5.0)


def test_vector_and_scalar_propagation_agree() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(8000.0, 60.0, epoch)
    t = epoch.plus_seconds(12345.0)
    single = propagate(el, t).position.as_array()
    batch = propagate_positions(el, np.array([epoch.days, t.days]))
    assert batch[1] == pytest.approx(single)


def test_advance_drifts_mean_elements() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(600.0, 97.8, epoch)
    rates = j2_secular_rates(el.semi_major_axis_km, 0.0, 97.8)
    later = advance(el, Epoch(epoch.days + 10.0))
    assert later.raan_deg == pytest.approx(10.0 * rates.raan)
    assert later.epoch0.days == epoch.days + 10.0


def test_sun_synchronous_local_time_holds_over_a_year() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(600.0, 97.8, epoch, raan_deg=200.0)
    t0 = local_time_of_ascending_node_h(el, epoch)
    t1 = local_time_of_ascending_node_h(el, Epoch(epoch.days + 365.0))
    drift = (t1 - t0 + 12.0) % 24.0 - 12.0
    assert abs(drift) < 0.1


def test_propagating_far_before_the_element_epoch_fails() -> None:
    epoch = Epoch.from_iso("2021-07-01T00:00:00Z")
    el = OrbitElements.circular(600.0, 50.0, epoch)
    with pytest.raises(PropagationErr, match="2021-06-29"):
        propagate(el, Epoch(epoch.days - 2.0))


def test_propagation_is_time_reversible(start: Epoch) -> None:
    elements = OrbitElements.circular(600.0, 50.0, start)
    later = Epoch(start.days + 0.5)
    moved = advance(elements, later)
    for t in (start, later, Epoch(start.days + 0.25)):
        there = propagate(moved, t).position.as_array()
        here = propagate(elements, t).position.as_array()
        assert np.linalg.norm(there - here) < 1e-3
