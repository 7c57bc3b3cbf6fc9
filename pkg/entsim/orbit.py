"""Kepler + J2-secular orbit propagation in ECI (km).

Mean elements drift linearly at the J2 secular rates; the position comes from
the osculating two-body geometry of the drifted elements. Drag, higher zonal
harmonics and third bodies are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entsim.astro import SECONDS_PER_DAY, Epoch, Frame, Vec3, mean_solar_longitude_deg
from entsim.errors import KeplerConvergenceErr, PropagationErr

MU_EARTH_KM3_S2 = 398600.4418
J2 = 1.08263e-3
R_EARTH_KM = 6378.137

KEPLER_TOL_RAD = 1e-12
KEPLER_MAX_NEWTON = 50
_BISECTION_STEPS = 80

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class OrbitElements:
    semi_major_axis_km: float
    eccentricity: float
    inclination_deg: float
    raan_deg: float
    arg_perigee_deg: float
    mean_anomaly_deg: float
    epoch0: Epoch

    def __post_init__(self) -> None:
        if not self.semi_major_axis_km > R_EARTH_KM + 100.0:
            raise ValueError(
                f"semi-major axis must exceed {R_EARTH_KM + 100.0} km "
                f"(got {self.semi_major_axis_km})"
            )
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(
                f"eccentricity must be in [0, 1) (got {self.eccentricity})"
            )
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError(
                f"inclination must be in [0, 180] deg (got {self.inclination_deg})"
            )

    @classmethod
    def circular(
        cls,
        altitude_km: float,
        inclination_deg: float,
        epoch0: Epoch,
        *,
        raan_deg: float = 0.0,
        mean_anomaly_deg: float = 0.0,
    ) -> OrbitElements:
        return cls(
            semi_major_axis_km=R_EARTH_KM + altitude_km,
            eccentricity=0.0,
            inclination_deg=inclination_deg,
            raan_deg=raan_deg,
            arg_perigee_deg=0.0,
            mean_anomaly_deg=mean_anomaly_deg,
            epoch0=epoch0,
        )

    @property
    def altitude_km(self) -> float:
        return self.semi_major_axis_km - R_EARTH_KM

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(MU_EARTH_KM3_S2 / self.semi_major_axis_km**3)

    @property
    def period_s(self) -> float:
        return TWO_PI / self.mean_motion_rad_s


@dataclass(frozen=True, slots=True)
class SatState:
    position: Vec3  # ECI, km
    epoch: Epoch


class SecularRates(NamedTuple):
    """J2 secular drift rates in degrees per day."""

    raan: float
    arg_perigee: float
    mean_anomaly_drift: float


# -------------------------
# Kepler equation
# -------------------------


def _kepler_residual(E, M, e):
    return E - e * np.sin(E) - M


def solve_kepler_array(M: ArrayLike, e: float) -> NDArray[np.float64]:
    """Eccentric anomaly for an array of mean anomalies (radians).

    Newton iteration capped at KEPLER_MAX_NEWTON steps, then bisection on
    [M - e, M + e] for anything still unconverged. The result stays in the
    same 2*pi branch as M.
    """
    shape = np.shape(M)
    m = np.asarray(M, dtype=float).reshape(-1)
    if not np.all(np.isfinite(m)):
        raise ValueError("mean anomaly must be finite")
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1) (got {e})")

    if e == 0.0:
        return m.reshape(shape)[()]

    turns = np.floor((m + math.pi) / TWO_PI)
    m_red = m - turns * TWO_PI  # in [-pi, pi)

    if e < 0.8:
        E = m_red + e * np.sin(m_red)
    else:
        E = np.where(m_red >= 0.0, math.pi, -math.pi)
    for _ in range(KEPLER_MAX_NEWTON):
        f = _kepler_residual(E, m_red, e)
        if np.all(np.abs(f) < KEPLER_TOL_RAD):
            break
        E = E - f / (1.0 - e * np.cos(E))

    bad = ~(np.abs(_kepler_residual(E, m_red, e)) < KEPLER_TOL_RAD)
    if np.any(bad):
        lo = m_red[bad] - e
        hi = m_red[bad] + e
        target = m_red[bad]
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = _kepler_residual(mid, target, e) > 0.0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        E[bad] = 0.5 * (lo + hi)
        if not np.all(np.abs(_kepler_residual(E, m_red, e)) < KEPLER_TOL_RAD):
            raise KeplerConvergenceErr(
                f"Kepler solver did not converge (e={e}) within the iteration cap"
            )

    return (E + turns * TWO_PI).reshape(shape)[()]


def solve_kepler(M: float, e: float) -> float:
    """Solve M = E - e*sin(E) for E (radians)."""
    return float(solve_kepler_array(M, e))


# -------------------------
# J2 secular theory
# -------------------------


def j2_secular_rates(a_km: float, e: float, i_deg: float) -> SecularRates:
    n = math.sqrt(MU_EARTH_KM3_S2 / a_km**3)
    p = a_km * (1.0 - e * e)
    k = 1.5 * J2 * (R_EARTH_KM / p) ** 2 * n  # rad/s
    i = math.radians(i_deg)
    sin2 = math.sin(i) ** 2
    to_deg_day = math.degrees(1.0) * SECONDS_PER_DAY
    return SecularRates(
        raan=-k * math.cos(i) * to_deg_day,
        arg_perigee=k * (2.0 - 2.5 * sin2) * to_deg_day,
        mean_anomaly_drift=k * math.sqrt(1.0 - e * e) * (1.0 - 1.5 * sin2) * to_deg_day,
    )


def advance(elements: OrbitElements, t: Epoch) -> OrbitElements:
    """Mean elements drifted to epoch t (new epoch0 = t)."""
    rates = j2_secular_rates(
        elements.semi_major_axis_km, elements.eccentricity, elements.inclination_deg
    )
    dt_days = t.days - elements.epoch0.days
    n_deg_day = math.degrees(elements.mean_motion_rad_s) * SECONDS_PER_DAY
    return replace(
        elements,
        raan_deg=elements.raan_deg + rates.raan * dt_days,
        arg_perigee_deg=elements.arg_perigee_deg + rates.arg_perigee * dt_days,
        mean_anomaly_deg=elements.mean_anomaly_deg
        + (n_deg_day + rates.mean_anomaly_drift) * dt_days,
        epoch0=t,
    )


def propagate_positions(
    elements: OrbitElements, days: ArrayLike
) -> NDArray[np.float64]:
    """ECI positions (N, 3) in km for an array of epoch days."""
    d = np.asarray(days, dtype=float)
    if d.size and np.min(d) < elements.epoch0.days - 1.0:
        first = Epoch(float(np.min(d)))
        raise PropagationErr(
            "cannot propagate more than one day before the element epoch",
            epoch=first.isoformat(),
        )
    a = elements.semi_major_axis_km
    e = elements.eccentricity
    inc = math.radians(elements.inclination_deg)
    rates = j2_secular_rates(a, e, elements.inclination_deg)
    dt_s = (d - elements.epoch0.days) * SECONDS_PER_DAY

    raan_rate = math.radians(rates.raan) / SECONDS_PER_DAY
    raan = math.radians(elements.raan_deg) + raan_rate * dt_s
    argp = (
        math.radians(elements.arg_perigee_deg)
        + math.radians(rates.arg_perigee) / SECONDS_PER_DAY * dt_s
    )
    m_drift = math.radians(rates.mean_anomaly_drift) / SECONDS_PER_DAY
    m_rate = elements.mean_motion_rad_s + m_drift
    mean_anom = np.mod(math.radians(elements.mean_anomaly_deg) + m_rate * dt_s, TWO_PI)

    E = solve_kepler_array(mean_anom, e)
    r = a * (1.0 - e * np.cos(E))
    nu = np.arctan2(math.sqrt(1.0 - e * e) * np.sin(E), np.cos(E) - e)
    u = argp + nu

    cos_raan, sin_raan = np.cos(raan), np.sin(raan)
    cos_u, sin_u = np.cos(u), np.sin(u)
    cos_i, sin_i = math.cos(inc), math.sin(inc)

    out = np.empty(np.shape(d) + (3,))
    out[..., 0] = r * (cos_raan * cos_u - sin_raan * sin_u * cos_i)
    out[..., 1] = r * (sin_raan * cos_u + cos_raan * sin_u * cos_i)
    out[..., 2] = r * (sin_u * sin_i)
    return out


def propagate(elements: OrbitElements, t: Epoch) -> SatState:
    xyz = propagate_positions(elements, t.days)
    return SatState(Vec3.from_array(xyz, Frame.ECI), t)


def local_time_of_ascending_node_h(elements: OrbitElements, t: Epoch) -> float:
    """Mean local solar time (hours) at which the orbit crosses its ascending node."""
    raan = advance(elements, t).raan_deg
    hour_angle = (raan - float(mean_solar_longitude_deg(t.days))) / 15.0
    return (hour_angle + 12.0) % 24.0
