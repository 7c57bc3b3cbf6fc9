"""Time scales, Earth rotation, WGS84 geodesy and a low-precision Sun.

Conventions
-----------
- Epoch: days since J2000.0 (2000-01-01T12:00:00 UTC), UTC treated as uniform.
- ECI is a mean-equator inertial frame; ECEF is obtained from it by a single
  rotation about the polar axis through the Greenwich mean sidereal angle:
  ``r_eci = Rz(theta) @ r_ecef``. An ECEF unit x at theta = pi/2 maps to ECI +y.
- Array helpers (``*_many`` / plural names) accept numpy arrays of epoch days
  and are what the scenario loop uses; the scalar functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import UTC, datetime, timedelta
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entsim.errors import EpochRangeErr, FrameMismatchErr

SECONDS_PER_DAY = 86400.0
J2000_UTC = datetime(2000, 1, 1, 12, 0, 0, tzinfo=UTC)

# WGS84
WGS84_A_M = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

# Linear GMST model (degrees, degrees per day since J2000.0)
_GMST_AT_J2000_DEG = 280.46061837
_GMST_RATE_EXCESS_DEG = 0.98564736629  # rate above 360 deg/day
SIDEREAL_DAY_DAYS = 360.0 / (360.0 + _GMST_RATE_EXCESS_DEG)

MIN_SUPPORTED = datetime(1990, 1, 1, tzinfo=UTC)
MAX_SUPPORTED = datetime(2061, 1, 1, tzinfo=UTC)


def parse_iso8601_utc(ts: str) -> datetime:
    """Parse an ISO-8601 timestamp and normalize it to UTC.

    Accepts a trailing "Z"; naive timestamps are read as UTC.
    """
    text = ts.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)  # may raise ValueError
    if dt.tzinfo is None:
        return dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC)


def _days_since_j2000(dt: datetime) -> float:
    delta = dt - J2000_UTC
    return delta.days + (delta.seconds + delta.microseconds * 1e-6) / SECONDS_PER_DAY


_MIN_DAYS = _days_since_j2000(MIN_SUPPORTED)
_MAX_DAYS = _days_since_j2000(MAX_SUPPORTED)


def check_supported(days: ArrayLike) -> None:
    """Raise EpochRangeErr unless every epoch lies within 1990-2060."""
    arr = np.asarray(days, dtype=float)
    if arr.size == 0:
        return
    if not (np.all(arr >= _MIN_DAYS) and np.all(arr < _MAX_DAYS)):
        bad = float(arr[(arr < _MIN_DAYS) | (arr >= _MAX_DAYS) | np.isnan(arr)][0])
        raise EpochRangeErr(
            f"epoch {Epoch(bad).isoformat()} outside supported range 1990-2060"
        )


@dataclass(frozen=True, slots=True, order=True)
class Epoch:
    """An instant as continuous days since J2000.0 (UTC, no leap seconds)."""

    days: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.days):
            raise ValueError("Epoch days must be finite")

    @classmethod
    def from_datetime(cls, dt: datetime) -> Epoch:
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=UTC)
        return cls(_days_since_j2000(dt.astimezone(UTC)))

    @classmethod
    def from_iso(cls, ts: str) -> Epoch:
        return cls.from_datetime(parse_iso8601_utc(ts))

    @property
    def julian_date(self) -> float:
        return self.days + 2451545.0

    def to_datetime(self) -> datetime:
        return J2000_UTC + timedelta(days=self.days)

    def isoformat(self) -> str:
        """UTC timestamp with millisecond precision and a Z suffix."""
        return self.to_datetime().isoformat(timespec="milliseconds").replace(
            "+00:00", "Z"
        )

    def plus_seconds(self, seconds: float) -> Epoch:
        return Epoch(self.days + seconds / SECONDS_PER_DAY)

    def seconds_since(self, other: Epoch) -> float:
        return (self.days - other.days) * SECONDS_PER_DAY


class Frame(StrEnum):
    ECI = "ECI"
    ECEF = "ECEF"


class Rotation(StrEnum):
    ECEF_TO_ECI = "ecef_to_eci"
    ECI_TO_ECEF = "eci_to_ecef"

    @property
    def source(self) -> Frame:
        return Frame.ECEF if self is Rotation.ECEF_TO_ECI else Frame.ECI

    @property
    def target(self) -> Frame:
        return Frame.ECI if self is Rotation.ECEF_TO_ECI else Frame.ECEF


@dataclass(frozen=True, slots=True)
class Vec3:
    """Frame-tagged 3-vector; units follow context (m, km or unitless)."""

    x: float
    y: float
    z: float
    frame: Frame

    @classmethod
    def from_array(cls, values: ArrayLike, frame: Frame) -> Vec3:
        x, y, z = (float(v) for v in np.asarray(values, dtype=float))
        return cls(x, y, z, frame)

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.z])

    def _same_frame(self, other: Vec3) -> None:
        if self.frame is not other.frame:
            raise FrameMismatchErr(f"cannot combine {self.frame} with {other.frame}")

    def __add__(self, other: Vec3) -> Vec3:
        self._same_frame(other)
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z, self.frame)

    def __sub__(self, other: Vec3) -> Vec3:
        self._same_frame(other)
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z, self.frame)

    def __mul__(self, k: float) -> Vec3:
        return Vec3(self.x * k, self.y * k, self.z * k, self.frame)

    __rmul__ = __mul__

    def dot(self, other: Vec3) -> float:
        self._same_frame(other)
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def unit(self) -> Vec3:
        n = self.norm()
        if n == 0.0:
            raise ValueError("zero vector has no direction")
        return self * (1.0 / n)


@dataclass(frozen=True, slots=True)
class GroundStation:
    name: str
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("station name must be non-empty")
        if not abs(self.latitude_deg) <= 90.0:
            raise ValueError(
                f"latitude must be within [-90, 90] (got {self.latitude_deg})"
            )
        if not math.isfinite(self.longitude_deg):
            raise ValueError("longitude must be finite")
        lon = self.longitude_deg % 360.0
        if lon > 180.0:
            lon -= 360.0
        object.__setattr__(self, "longitude_deg", lon)


# -------------------------
# Earth rotation
# -------------------------


def earth_rotation_angles(days: ArrayLike) -> NDArray[np.float64]:
    """Greenwich mean sidereal angle in [0, 2*pi) for an array of epoch days."""
    d = np.asarray(days, dtype=float)
    check_supported(d)
    # 360 * frac(d) keeps the whole-turn part out of the rounding budget
    deg = _GMST_AT_J2000_DEG + 360.0 * np.mod(d, 1.0) + _GMST_RATE_EXCESS_DEG * d
    return np.mod(np.radians(np.mod(deg, 360.0)), 2.0 * math.pi)


def earth_rotation_angle(epoch: Epoch) -> float:
    return float(earth_rotation_angles(epoch.days))


def rotate_z(xyz: ArrayLike, angles: ArrayLike) -> NDArray[np.float64]:
    """Rotate row vectors (N, 3) about +z by per-row angles (radians)."""
    v = np.asarray(xyz, dtype=float)
    a = np.asarray(angles, dtype=float)
    c, s = np.cos(a), np.sin(a)
    out = np.empty(np.broadcast_shapes(v.shape, a.shape + (3,)))
    out[..., 0] = c * v[..., 0] - s * v[..., 1]
    out[..., 1] = s * v[..., 0] + c * v[..., 1]
    out[..., 2] = v[..., 2]
    return out


def ecef_eci_convert(v: Vec3, epoch: Epoch, direction: Rotation) -> Vec3:
    if v.frame is not direction.source:
        raise FrameMismatchErr(
            f"{direction} expects a {direction.source} vector, got {v.frame}"
        )
    theta = earth_rotation_angle(epoch)
    if direction is Rotation.ECI_TO_ECEF:
        theta = -theta
    return Vec3.from_array(rotate_z(v.as_array(), theta), direction.target)


# -------------------------
# Geodesy
# -------------------------


def geodetic_to_ecef(station: GroundStation) -> Vec3:
    """WGS84 geodetic position to ECEF meters (altitude along the normal)."""
    lat = math.radians(station.latitude_deg)
    lon = math.radians(station.longitude_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    n = WGS84_A_M / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    h = station.altitude_m
    return Vec3(
        (n + h) * cos_lat * math.cos(lon),
        (n + h) * cos_lat * math.sin(lon),
        (n * (1.0 - WGS84_E2) + h) * sin_lat,
        Frame.ECEF,
    )


def enu_basis(station: GroundStation) -> NDArray[np.float64]:
    """Rows are the local east, north and up unit vectors in ECEF."""
    lat = math.radians(station.latitude_deg)
    lon = math.radians(station.longitude_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


# -------------------------
# Sun
# -------------------------


def mean_solar_longitude_deg(days: ArrayLike) -> NDArray[np.float64]:
    """Mean longitude of the Sun (equals the mean Sun's right ascension)."""
    d = np.asarray(days, dtype=float)
    return np.mod(280.460 + 0.9856474 * d, 360.0)


def sun_directions_eci(days: ArrayLike) -> NDArray[np.float64]:
    """Unit geocentric Sun directions (N, 3) in ECI.

    Mean-element solar theory, good to about 0.01 deg over 1950-2050.
    """
    d = np.asarray(days, dtype=float)
    check_supported(d)
    g = np.radians(np.mod(357.528 + 0.9856003 * d, 360.0))
    lam = np.radians(
        mean_solar_longitude_deg(d) + 1.915 * np.sin(g) + 0.020 * np.sin(2.0 * g)
    )
    eps = np.radians(23.439 - 0.0000004 * d)
    out = np.empty(d.shape + (3,))
    out[..., 0] = np.cos(lam)
    out[..., 1] = np.cos(eps) * np.sin(lam)
    out[..., 2] = np.sin(eps) * np.sin(lam)
    return out


def sun_direction_eci(epoch: Epoch) -> Vec3:
    return Vec3.from_array(sun_directions_eci(epoch.days), Frame.ECI)


def sun_elevations_deg(station: GroundStation, days: ArrayLike) -> NDArray[np.float64]:
    """Geometric Sun elevation above the station horizon, no refraction."""
    d = np.asarray(days, dtype=float)
    sun_ecef = rotate_z(sun_directions_eci(d), -earth_rotation_angles(d))
    up = enu_basis(station)[2]
    return np.degrees(np.arcsin(np.clip(sun_ecef @ up, -1.0, 1.0)))


def sun_elevation_at_station(station: GroundStation, epoch: Epoch) -> float:
    return float(sun_elevations_deg(station, epoch.days))
