"""Station-to-satellite geometry, illumination and communication gating.

The gate predicates are written with ``&`` / ``|`` so they work on plain
bools and on numpy boolean arrays alike; the scenario loop feeds arrays.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entsim.astro import (
    Frame,
    GroundStation,
    Vec3,
    earth_rotation_angles,
    enu_basis,
    geodetic_to_ecef,
    rotate_z,
    sun_elevation_at_station,
)
from entsim.orbit import R_EARTH_KM, SatState


class TwilightRule(StrEnum):
    CIVIL = "civil"
    NAUTICAL = "nautical"
    ASTRONOMICAL = "astronomical"

    @property
    def threshold_deg(self) -> float:
        return _TWILIGHT_THRESHOLDS[self]


_TWILIGHT_THRESHOLDS = {
    TwilightRule.CIVIL: -6.0,
    TwilightRule.NAUTICAL: -12.0,
    TwilightRule.ASTRONOMICAL: -18.0,
}


class OperationMode(StrEnum):
    NIGHT_ONLY = "night_only"
    DAY_AND_NIGHT = "day_and_night"


@dataclass(frozen=True, slots=True)
class PassGeometry:
    elevation_deg: float
    range_km: float
    azimuth_deg: float = 0.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.elevation_deg <= 90.0:
            raise ValueError(f"elevation out of range: {self.elevation_deg}")
        if not self.range_km > 0.0:
            raise ValueError(f"range must be positive: {self.range_km}")


@dataclass(frozen=True, slots=True)
class IlluminationState:
    satellite_sunlit: bool
    station_dark: tuple[bool, bool]


@dataclass(frozen=True, slots=True, eq=False)
class StationFrame:
    """A station's ECEF origin (km) and ENU basis, cached for the sample loop."""

    station: GroundStation
    origin_km: NDArray[np.float64] = field(init=False)
    enu: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "origin_km", geodetic_to_ecef(self.station).as_array() / 1000.0
        )
        object.__setattr__(self, "enu", enu_basis(self.station))

    def look(
        self, sat_ecef_km: ArrayLike
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Elevation (deg), slant range (km) and azimuth (deg, from north)."""
        rel = np.asarray(sat_ecef_km, dtype=float) - self.origin_km
        east, north, up = (rel @ self.enu.T).T if rel.ndim > 1 else self.enu @ rel
        rng = np.sqrt(east * east + north * north + up * up)
        el = np.degrees(np.arcsin(np.clip(up / rng, -1.0, 1.0)))
        az = np.mod(np.degrees(np.arctan2(east, north)), 360.0)
        return el, rng, az


def eci_to_ecef_km(positions_eci_km: ArrayLike, days: ArrayLike) -> NDArray[np.float64]:
    return rotate_z(positions_eci_km, -earth_rotation_angles(days))


def topocentric(station: GroundStation, sat: SatState) -> PassGeometry:
    if sat.position.frame is not Frame.ECI:
        sat_ecef = sat.position.as_array()
    else:
        sat_ecef = eci_to_ecef_km(sat.position.as_array(), sat.epoch.days)
    el, rng, az = StationFrame(station).look(sat_ecef)
    return PassGeometry(float(el), float(rng), float(az))


# -------------------------
# Illumination
# -------------------------


def sunlit_mask(positions_eci_km: ArrayLike, sun_unit: ArrayLike) -> NDArray[np.bool_]:
    """Cylindrical umbra test; False where the satellite is in Earth's shadow."""
    pos = np.asarray(positions_eci_km, dtype=float)
    sun = np.asarray(sun_unit, dtype=float)
    along = np.sum(pos * sun, axis=-1)
    perp = pos - along[..., None] * sun
    in_shadow = (along < 0.0) & (np.linalg.norm(perp, axis=-1) < R_EARTH_KM)
    return ~in_shadow


def satellite_sunlit(sat: SatState, sun: Vec3) -> bool:
    return bool(sunlit_mask(sat.position.as_array(), sun.as_array()))


def station_dark(sun_elevation_deg: ArrayLike, rule: TwilightRule):
    return np.asarray(sun_elevation_deg) < rule.threshold_deg


def illumination_state(
    stations: Sequence[GroundStation], sat: SatState, sun: Vec3, rule: TwilightRule
) -> IlluminationState:
    dark = tuple(
        bool(station_dark(sun_elevation_at_station(s, sat.epoch), rule))
        for s in stations
    )
    return IlluminationState(satellite_sunlit(sat, sun), dark)


def night_mask(sat_sunlit: ArrayLike, dark1: ArrayLike, dark2: ArrayLike):
    return ~np.asarray(sat_sunlit) & np.asarray(dark1) & np.asarray(dark2)


def night_condition(ill: IlluminationState) -> bool:
    return (not ill.satellite_sunlit) and all(ill.station_dark)


# -------------------------
# Gates
# -------------------------


def dual_visibility(g1, g2, beta_min_deg: float):
    """Both elevations at or above beta_min (inclusive).

    Accepts PassGeometry objects or elevation values/arrays in degrees.
    """
    if not 0.0 <= beta_min_deg < 90.0:
        raise ValueError(f"beta_min must be in [0, 90) deg (got {beta_min_deg})")
    b1 = g1.elevation_deg if isinstance(g1, PassGeometry) else np.asarray(g1)
    b2 = g2.elevation_deg if isinstance(g2, PassGeometry) else np.asarray(g2)
    result = (b1 >= beta_min_deg) & (b2 >= beta_min_deg)
    return bool(result) if np.ndim(result) == 0 else result


def communication_allowed(dual_vis, night, mode: OperationMode):
    allowed = dual_vis & (night | (mode is OperationMode.DAY_AND_NIGHT))
    return bool(allowed) if np.ndim(allowed) == 0 else allowed
