from __future__ import annotations

import math

import numpy as np
import pytest

from entsim.astro import (
    SIDEREAL_DAY_DAYS,
    WGS84_A_M,
    WGS84_F,
    Epoch,
    Frame,
    GroundStation,
    Rotation,
    Vec3,
    earth_rotation_angle,
    ecef_eci_convert,
    geodetic_to_ecef,
    parse_iso8601_utc,
    sun_direction_eci,
    sun_elevation_at_station,
    sun_elevations_deg,
)
from entsim.errors import EpochRangeErr, FrameMismatchErr


def _day_grid(iso: str, minutes: int = 1440) -> np.ndarray:
    return Epoch.from_iso(iso).days + np.arange(minutes) / 1440.0


def test_parse_iso8601_utc_accepts_z_offsets_and_naive() -> None:
    z = parse_iso8601_utc("2021-07-01T00:00:00Z")
    offset = parse_iso8601_utc("2021-07-01T02:00:00+02:00")
    naive = parse_iso8601_utc("2021-07-01T00:00:00")
    assert z == offset == naive
    assert z.utcoffset().total_seconds() == 0


def test_epoch_is_days_since_j2000_noon() -> None:
    assert Epoch.from_iso("2000-01-01T12:00:00Z").days == 0.0
    assert Epoch.from_iso("2000-01-02T12:00:00Z").days == 1.0
    assert Epoch.from_iso("2000-01-01T12:00:00Z").julian_date == 2451545.0
    assert Epoch.from_iso("2021-07-01T00:00:00Z").days == 7851.5


def test_epoch_isoformat_and_seconds_arithmetic() -> None:
    e = Epoch.from_iso("2021-07-01T00:00:00Z")
    later = e.plus_seconds(90.5)
    assert later.isoformat() == "2021-07-01T00:01:30.500Z"
    assert later.seconds_since(e) == pytest.approx(90.5, abs=1e-6)
    assert later > e


def test_epochs_outside_1990_2060_are_rejected() -> None:
    with pytest.raises(EpochRangeErr):
        earth_rotation_angle(Epoch.from_iso("1985-01-01T00:00:00Z"))
    with pytest.raises(EpochRangeErr):
        sun_direction_eci(Epoch.from_iso("2070-01-01T00:00:00Z"))


def test_earth_rotation_angle_at_j2000() -> None:
    assert earth_rotation_angle(Epoch(0.0)) == pytest.approx(
        math.radians(280.46061837), abs=1e-12
    )


def test_earth_rotation_angle_repeats_after_one_sidereal_day() -> None:
    e = Epoch.from_iso("2021-07-01T00:00:00Z")
    a0 = earth_rotation_angle(e)
    a1 = earth_rotation_angle(Epoch(e.days + SIDEREAL_DAY_DAYS))
    diff = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    assert abs(diff) < 1e-8


def test_geodetic_to_ecef_reference_points() -> None:
    origin = geodetic_to_ecef(GroundStation("gulf", 0.0, 0.0))
    assert origin.frame is Frame.ECEF
    assert (origin.x, origin.y, origin.z) == pytest.approx((WGS84_A_M, 0.0, 0.0))

    pole = geodetic_to_ecef(GroundStation("pole", 90.0, 0.0))
    assert pole.z == pytest.approx(WGS84_A_M * (1.0 - WGS84_F), abs=1e-3)
    assert abs(pole.x) < 1e-6

    raised = geodetic_to_ecef(GroundStation("mast", 0.0, 90.0, altitude_m=1000.0))
    assert raised.y == pytest.approx(WGS84_A_M + 1000.0)


def test_ground_station_longitude_is_normalized() -> None:
    assert GroundStation("a", 0.0, 190.0).longitude_deg == pytest.approx(-170.0)
    assert GroundStation("b", 0.0, -180.0).longitude_deg == pytest.approx(180.0)
    with pytest.raises(ValueError):
        GroundStation("c", 91.0, 0.0)


def test_ecef_eci_rotation_about_the_pole() -> None:
    epoch = Epoch.from_iso("2021-07-01T06:00:00Z")
    theta = earth_rotation_angle(epoch)
    v = ecef_eci_convert(Vec3(1.0, 0.0, 0.0, Frame.ECEF), epoch, Rotation.ECEF_TO_ECI)
    assert v.frame is Frame.ECI
    assert (v.x, v.y, v.z) == pytest.approx((math.cos(theta), math.sin(theta), 0.0))

    back = ecef_eci_convert(v, epoch, Rotation.ECI_TO_ECEF)
    assert (back.x, back.y, back.z) == pytest.approx((1.0, 0.0, 0.0), abs=1e-15)


def test_frames_never_mix() -> None:
    eci = Vec3(1.0, 0.0, 0.0, Frame.ECI)
    ecef = Vec3(0.0, 1.0, 0.0, Frame.ECEF)
    with pytest.raises(FrameMismatchErr):
        _ = eci + ecef
    with pytest.raises(FrameMismatchErr):
        ecef_eci_convert(eci, Epoch(0.0), Rotation.ECEF_TO_ECI)


def test_sun_direction_is_unit_and_follows_the_seasons() -> None:
    solstice = sun_direction_eci(Epoch.from_iso("2021-06-21T03:32:00Z"))
    assert solstice.norm() == pytest.approx(1.0)
    assert math.degrees(math.asin(solstice.z)) == pytest.approx(23.44, abs=0.05)

    equinox = sun_direction_eci(Epoch.from_iso("2021-03-20T09:37:00Z"))
    assert abs(math.degrees(math.asin(equinox.z))) < 0.05


def test_sun_elevation_noon_at_paris_on_the_solstice(paris: GroundStation) -> None:
    elevations = sun_elevations_deg(paris, _day_grid("2021-06-21T00:00:00Z"))
    assert elevations.max() == pytest.approx(90.0 - 48.85 + 23.44, abs=0.2)


def test_summer_nights_are_astronomically_dark_in_nice_but_not_paris(
    paris: GroundStation, nice: GroundStation
) -> None:
    days = _day_grid("2021-06-21T12:00:00Z")
    assert sun_elevations_deg(paris, days).min() > -18.0
    assert sun_elevations_deg(nice, days).min() < -18.0


def test_sun_elevation_scalar_matches_vector(nice: GroundStation) -> None:
    e = Epoch.from_iso("2021-12-01T23:00:00Z")
    assert sun_elevation_at_station(nice, e) == pytest.approx(
        float(sun_elevations_deg(nice, e.days))
    )


def test_half_a_sidereal_day_turns_the_earth_by_pi() -> None:
    e = Epoch.from_iso("2021-07-01T00:00:00Z")
    a0 = earth_rotation_angle(e)
    a1 = earth_rotation_angle(Epoch(e.days + SIDEREAL_DAY_DAYS / 2.0))
    assert math.remainder(a1 - a0 - math.pi, 2.0 * math.pi) == pytest.approx(
        0.0, abs=1e-8
    )


@pytest.mark.parametrize("iso", ["2021-03-20T00:00:00Z", "2021-06-21T00:00:00Z"])
def test_sun_elevation_moves_slowly_between_samples(
    paris: GroundStation, nice: GroundStation, iso: str
) -> None:
    days = Epoch.from_iso(iso).days + np.arange(8641) * 10.0 / 86400.0
    for station in (paris, nice):
        step = np.abs(np.diff(sun_elevations_deg(station, days)))
        assert step.max() < 0.05
