"""Built-in configuration documents.

DEFAULTS is the Paris/Nice demonstrator on a 600 km, 50 deg LEO at 1550 nm
with SNSPDs. PRESETS covers the orbit x wavelength x detector trade grid;
each entry is a partial document merged over DEFAULTS.

Units follow the config schema: degrees, km, nm, m, dB, ps, cps, s, days.
"""

from __future__ import annotations

from itertools import product
from typing import Any, NamedTuple

DEFAULTS: dict[str, Any] = {
    "name": "default",
    "stations": [
        {"name": "Paris", "lat": 48.85, "lon": 2.35, "alt": 0.0},
        {"name": "Nice", "lat": 43.7, "lon": 7.25, "alt": 0.0},
    ],
    "orbit": {
        "altitude": 600.0,
        "eccentricity": 0.0,
        "inclination": 50.0,
        "raan": 0.0,
        "arg_perigee": 0.0,
        "mean_anomaly": 0.0,
    },
    "link": {
        "wavelength": 1550.0,
        "d_t": 0.3,
        "d_r": 0.8,
        "a_atm0": 2.0,
        "t_t": 0.8,
        "t_r": 0.8,
        "t_optics": 0.35,
        "l_p": 0.2,
        "r0": 1e6,
        "detector": "snspd",
    },
    "quantum": {
        "mu": 0.02,
        "tau": 200.0,
        "q": 0.5,
        "f": 1.22,
        "e0": 0.5,
        "e_p": 0.01,
        "dark": 100.0,
        "background": 100.0,
        "detectors_per_station": 4,
    },
    "gates": {"beta_min": 30.0, "twilight": "astronomical", "mode": "day_and_night"},
    "time": {"start": "2021-07-01T00:00:00Z", "step": 10.0, "duration": 365.0},
    "analysis": {"attenuation_averaging": "db"},
}


class Preset(NamedTuple):
    description: str
    document: dict[str, Any]


_ORBITS = {
    "leo": ("600 km LEO, i=50 deg", {"altitude": 600.0, "inclination": 50.0}),
    "meo": ("8000 km MEO, i=60 deg", {"altitude": 8000.0, "inclination": 60.0}),
    # descending node at 10:30 mean local time
    "sso": (
        "600 km SSO, i=97.8 deg",
        {"altitude": 600.0, "inclination": 97.8, "ltan": 22.5},
    ),
}

_APERTURES = {"leo": (0.3, 0.8), "meo": (0.5, 1.0), "sso": (0.3, 0.8)}

# wavelength -> link fields, background (cps), operating mode
_BANDS: dict[int, tuple[dict[str, float], float, str]] = {
    810: ({"a_atm0": 3.0, "t_optics": 0.2, "l_p": 0.3}, 400.0, "night_only"),
    1550: ({"a_atm0": 2.0, "t_optics": 0.35, "l_p": 0.2}, 100.0, "day_and_night"),
}

_DETECTORS_BY_BAND = {810: ("snspd", "si"), 1550: ("snspd", "iga")}

_DETECTOR_LABELS = {"snspd": "SNSPD", "si": "Si-APD", "iga": "InGaAs-APD"}


def _preset(orbit: str, band: int, detector: str) -> Preset:
    orbit_label, orbit_fields = _ORBITS[orbit]
    link_fields, background, mode = _BANDS[band]
    d_t, d_r = _APERTURES[orbit]
    name = f"{orbit}-{band}-{detector}"
    return Preset(
        description=f"{orbit_label}, {band} nm, {_DETECTOR_LABELS[detector]}, {mode}",
        document={
            "name": name,
            "orbit": dict(orbit_fields),
            "link": {
                "wavelength": float(band),
                "d_t": d_t,
                "d_r": d_r,
                "detector": detector,
                **link_fields,
            },
            "quantum": {"background": background},
            "gates": {"mode": mode},
        },
    )


PRESETS: dict[str, Preset] = {
    f"{orbit}-{band}-{detector}": _preset(orbit, band, detector)
    for orbit, band in product(_ORBITS, _BANDS)
    for detector in _DETECTORS_BY_BAND[band]
}


def preset_names() -> list[str]:
    return sorted(PRESETS)
