"""JSON scenario documents: resolution, validation and Scenario construction.

Layers merge last-writer-wins: DEFAULTS, then the named ``preset``, then the
document body, then ``--set`` overrides. Every diagnostic names the dotted
path of the offending field, e.g. ``gates.beta_min``.

Sections and units::

    stations[2]  name, lat (deg), lon (deg), alt (m)
    orbit        altitude (km) | semi_major_axis (km), eccentricity,
                 inclination (deg), raan (deg) | ltan (h), arg_perigee (deg),
                 mean_anomaly (deg), epoch (ISO-8601), ephemeris (CSV path)
    link         wavelength (nm), d_t (m), d_r (m), a_atm0 (dB), t_t, t_r,
                 t_optics, l_p, r0 (m), pde | detector (snspd | si | iga)
    links[2]     per-station overrides of ``link``
    quantum      mu, tau (ps), q, f, e0, e_p, dark (cps), background (cps),
                 detectors_per_station
    gates        beta_min (deg), twilight, mode
    time         start (ISO-8601), step (s), duration (days) | end (ISO-8601)
    analysis     attenuation_averaging (db | linear)
"""

from __future__ import annotations

import copy
import json
import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from entsim.astro import Epoch, GroundStation, mean_solar_longitude_deg
from entsim.ephemeris import import_ephemeris
from entsim.errors import ConfigErr
from entsim.link_budget import DETECTORS, DetectorKind, LinkParams
from entsim.orbit import R_EARTH_KM, OrbitElements
from entsim.presets import DEFAULTS, PRESETS
from entsim.quantum import QuantumParams
from entsim.scenario import AttenuationAveraging, Scenario
from entsim.visibility import OperationMode, TwilightRule

log = logging.getLogger(__name__)

Number = (int, float)

_STATION_KEYS: dict[str, Any] = {
    "name": str,
    "lat": Number,
    "lon": Number,
    "alt": Number,
}
_LINK_KEYS: dict[str, Any] = {
    **dict.fromkeys(
        (
            "wavelength",
            "d_t",
            "d_r",
            "a_atm0",
            "t_t",
            "t_r",
            "t_optics",
            "l_p",
            "pde",
            "r0",
        ),
        Number,
    ),
    "detector": str,
}
_SECTIONS: dict[str, dict[str, Any]] = {
    "orbit": {
        **dict.fromkeys(
            (
                "altitude",
                "semi_major_axis",
                "eccentricity",
                "inclination",
                "raan",
                "ltan",
                "arg_perigee",
                "mean_anomaly",
            ),
            Number,
        ),
        "epoch": str,
        "ephemeris": str,
    },
    "link": _LINK_KEYS,
    "quantum": {
        **dict.fromkeys(
            ("mu", "tau", "q", "f", "e0", "e_p", "dark", "background"), Number
        ),
        "detectors_per_station": int,
    },
    "gates": {"beta_min": Number, "twilight": str, "mode": str},
    "time": {"start": str, "step": Number, "duration": Number, "end": str},
    "analysis": {"attenuation_averaging": str},
}
_LISTS = {"stations": _STATION_KEYS, "links": _LINK_KEYS}
_TOP_LEVEL = {"name", "preset", *_SECTIONS, *_LISTS}

# setting one key of a pair in a later layer removes the other from earlier ones
_LINK_EXCLUSIVE = (("pde", "detector"),)
_EXCLUSIVE = {
    "orbit": (("altitude", "semi_major_axis"), ("raan", "ltan")),
    "time": (("duration", "end"),),
    "link": _LINK_EXCLUSIVE,
    "links": _LINK_EXCLUSIVE,
}


# -------------------------
# Structure checks
# -------------------------


def _type_ok(value: Any, expected: Any) -> bool:
    if isinstance(value, bool):
        return False
    return isinstance(value, expected)


def _type_name(expected: Any) -> str:
    if expected is Number:
        return "a number"
    if expected is int:
        return "an integer"
    return "a string"


def _check_fields(doc: Mapping[str, Any], keys: Mapping[str, Any], path: str) -> None:
    if not isinstance(doc, Mapping):
        raise ConfigErr("must be an object", path=path)
    for key, value in doc.items():
        field_path = f"{path}.{key}"
        if key not in keys:
            raise ConfigErr("unknown key", path=field_path)
        if not _type_ok(value, keys[key]):
            raise ConfigErr(
                f"must be {_type_name(keys[key])} (got {value!r})", path=field_path
            )


def check_document(doc: Any) -> None:
    """Reject unknown keys and wrongly typed leaves anywhere in the document."""
    if not isinstance(doc, Mapping):
        raise ConfigErr("configuration must be a JSON object", path="<document>")
    for key, value in doc.items():
        match key:
            case "name" | "preset":
                if not isinstance(value, str):
                    raise ConfigErr("must be a string", path=key)
            case "stations" | "links":
                if not isinstance(value, list):
                    raise ConfigErr("must be a list", path=key)
                for i, item in enumerate(value):
                    _check_fields(item, _LISTS[key], f"{key}.{i}")
            case _ if key in _SECTIONS:
                _check_fields(value, _SECTIONS[key], key)
            case _:
                raise ConfigErr("unknown key", path=key)


# -------------------------
# Resolution
# -------------------------


def _drop_superseded(
    section: dict[str, Any], layer: Mapping[str, Any], pairs: Iterable[tuple[str, str]]
) -> None:
    for a, b in pairs:
        if a in layer:
            section.pop(b, None)
        if b in layer:
            section.pop(a, None)


def deep_merge(base: Mapping[str, Any], layer: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for key, value in layer.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            section = out[key]
            _drop_superseded(section, value, _EXCLUSIVE.get(key, ()))
            out[key] = deep_merge(section, value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_override(item: str) -> tuple[list[str], Any]:
    """``gates.beta_min=25`` -> (["gates", "beta_min"], 25)."""
    key, sep, raw = item.partition("=")
    segments = [s for s in key.strip().split(".") if s]
    if not sep or not segments:
        raise ConfigErr(f"override must look like key.path=value (got {item!r})")
    return segments, _parse_value(raw.strip())


def apply_override(
    doc: dict[str, Any], segments: list[str], value: Any
) -> dict[str, Any]:
    path = ".".join(segments)
    if len(segments) == 1 or segments[0] not in _LISTS:
        layer: Any = value
        for seg in reversed(segments):
            layer = {seg: layer}
        return deep_merge(doc, layer)

    out = copy.deepcopy(doc)
    items = out.get(segments[0])
    try:
        index = int(segments[1])
        target = items[index]
    except (TypeError, ValueError, IndexError) as e:
        raise ConfigErr("no such list element", path=path) from e
    if len(segments) != 3:
        raise ConfigErr("list overrides take the form list.index.key", path=path)
    _drop_superseded(target, {segments[2]: value}, _EXCLUSIVE.get(segments[0], ()))
    target[segments[2]] = value
    return out


def resolve_document(
    doc: Mapping[str, Any],
    overrides: Iterable[str] = (),
    *,
    base_dir: Path | None = None,
) -> dict[str, Any]:
    """Merge defaults, preset, document and overrides into one full document."""
    check_document(doc)
    resolved = copy.deepcopy(DEFAULTS)
    preset_name = doc.get("preset")
    if preset_name is not None:
        try:
            preset = PRESETS[preset_name]
        except KeyError as e:
            raise ConfigErr(f"unknown preset {preset_name!r}", path="preset") from e
        resolved = deep_merge(resolved, preset.document)
        log.debug("Applied preset %s", preset_name)
    resolved = deep_merge(resolved, {k: v for k, v in doc.items() if k != "preset"})
    for item in overrides:
        segments, value = parse_override(item)
        resolved = apply_override(resolved, segments, value)
        log.debug("Override %s", item)
    check_document(resolved)

    ephemeris = resolved["orbit"].get("ephemeris")
    if ephemeris is not None and base_dir is not None:
        p = Path(ephemeris)
        if not p.is_absolute():
            resolved["orbit"]["ephemeris"] = str((base_dir / p).resolve())
    return resolved


# -------------------------
# Scenario construction
# -------------------------


def _get(section: Mapping[str, Any], key: str, path: str) -> Any:
    try:
        return section[key]
    except KeyError as e:
        raise ConfigErr("missing required field", path=f"{path}.{key}") from e


def _epoch(text: str, path: str) -> Epoch:
    try:
        return Epoch.from_iso(text)
    except ValueError as e:
        raise ConfigErr(f"not an ISO-8601 UTC timestamp: {text!r}", path=path) from e


def _station(doc: Mapping[str, Any], path: str) -> GroundStation:
    lat = _get(doc, "lat", path)
    if not -90.0 <= lat <= 90.0:
        raise ConfigErr(
            f"latitude must be within [-90, 90] (got {lat})", path=f"{path}.lat"
        )
    try:
        return GroundStation(
            name=_get(doc, "name", path),
            latitude_deg=float(lat),
            longitude_deg=float(_get(doc, "lon", path)),
            altitude_m=float(doc.get("alt", 0.0)),
        )
    except ValueError as e:
        raise ConfigErr(str(e), path=path) from e


def _link(doc: Mapping[str, Any], path: str) -> LinkParams:
    if "pde" in doc:
        pde = doc["pde"]
    else:
        detector = _get(doc, "detector", path)
        try:
            pde = DETECTORS[DetectorKind(detector)].pde
        except ValueError as e:
            choices = ", ".join(DetectorKind)
            raise ConfigErr(
                f"unknown detector {detector!r} (expected one of {choices})",
                path=f"{path}.detector",
            ) from e
    wavelength_nm = _get(doc, "wavelength", path)
    if not wavelength_nm > 0.0:
        raise ConfigErr("must be > 0 nm", path=f"{path}.wavelength")
    try:
        return LinkParams(
            wavelength_m=wavelength_nm * 1e-9,
            d_t_m=float(_get(doc, "d_t", path)),
            d_r_m=float(_get(doc, "d_r", path)),
            a_atm0_db=float(_get(doc, "a_atm0", path)),
            t_t=float(_get(doc, "t_t", path)),
            t_r=float(_get(doc, "t_r", path)),
            t_optics=float(_get(doc, "t_optics", path)),
            l_p=float(_get(doc, "l_p", path)),
            pde=float(pde),
            r0_m=float(doc.get("r0", 1e6)),
        )
    except ValueError as e:
        raise ConfigErr(str(e), path=path) from e


def _station_link(
    shared: Mapping[str, Any], item: Mapping[str, Any]
) -> dict[str, Any]:
    """Per-station link: the shared ``link`` section with the item on top."""
    merged = dict(shared)
    _drop_superseded(merged, item, _LINK_EXCLUSIVE)
    merged.update(item)
    return merged


def _orbit(doc: Mapping[str, Any], start: Epoch) -> OrbitElements:
    epoch0 = _epoch(doc["epoch"], "orbit.epoch") if "epoch" in doc else start
    if "altitude" in doc and "semi_major_axis" in doc:
        raise ConfigErr("give altitude or semi_major_axis, not both", path="orbit")
    if "semi_major_axis" in doc:
        a = float(doc["semi_major_axis"])
    else:
        a = R_EARTH_KM + float(_get(doc, "altitude", "orbit"))
    if "raan" in doc and "ltan" in doc:
        raise ConfigErr("give raan or ltan, not both", path="orbit")
    if "ltan" in doc:
        ltan = float(doc["ltan"])
        if not 0.0 <= ltan < 24.0:
            raise ConfigErr(f"must be in [0, 24) h (got {ltan})", path="orbit.ltan")
        raan = float(mean_solar_longitude_deg(epoch0.days)) + (ltan - 12.0) * 15.0
    else:
        raan = float(doc.get("raan", 0.0))
    try:
        return OrbitElements(
            semi_major_axis_km=a,
            eccentricity=float(doc.get("eccentricity", 0.0)),
            inclination_deg=float(_get(doc, "inclination", "orbit")),
            raan_deg=raan % 360.0,
            arg_perigee_deg=float(doc.get("arg_perigee", 0.0)),
            mean_anomaly_deg=float(doc.get("mean_anomaly", 0.0)),
            epoch0=epoch0,
        )
    except ValueError as e:
        raise ConfigErr(str(e), path="orbit") from e


def _quantum(doc: Mapping[str, Any]) -> QuantumParams:
    try:
        return QuantumParams(
            mu=float(_get(doc, "mu", "quantum")),
            tau_s=float(_get(doc, "tau", "quantum")) * 1e-12,
            q=float(_get(doc, "q", "quantum")),
            f=float(_get(doc, "f", "quantum")),
            e0=float(_get(doc, "e0", "quantum")),
            e_p=float(_get(doc, "e_p", "quantum")),
            dark_cps=float(_get(doc, "dark", "quantum")),
            background_cps=float(_get(doc, "background", "quantum")),
            detectors_per_station=int(doc.get("detectors_per_station", 4)),
        )
    except ValueError as e:
        raise ConfigErr(str(e), path="quantum") from e


def _choice[E: (TwilightRule, OperationMode, AttenuationAveraging)](
    enum: type[E], value: str, path: str
) -> E:
    try:
        return enum(value)
    except ValueError as e:
        choices = ", ".join(enum)
        raise ConfigErr(f"{value!r} is not one of {choices}", path=path) from e


def build_scenario(doc: Mapping[str, Any]) -> Scenario:
    """Turn a fully resolved document into a validated Scenario."""
    stations = doc["stations"]
    if len(stations) != 2:
        raise ConfigErr(
            f"exactly two stations required (got {len(stations)})", path="stations"
        )
    pair = tuple(_station(s, f"stations.{i}") for i, s in enumerate(stations))

    links = doc.get("links")
    if links is None:
        link = _link(doc["link"], "link")
        link_pair = (link, link)
    else:
        if len(links) != 2:
            raise ConfigErr("one entry per station required", path="links")
        link_pair = tuple(
            _link(_station_link(doc["link"], item), f"links.{i}")
            for i, item in enumerate(links)
        )

    gates = doc["gates"]
    beta_min = _get(gates, "beta_min", "gates")
    if not 0.0 <= beta_min < 90.0:
        raise ConfigErr(
            f"must be in [0, 90) deg (got {beta_min})", path="gates.beta_min"
        )

    time = doc["time"]
    start = _epoch(_get(time, "start", "time"), "time.start")
    step = _get(time, "step", "time")
    if not step > 0.0:
        raise ConfigErr(f"must be > 0 s (got {step})", path="time.step")
    if "end" in time:
        duration = _epoch(time["end"], "time.end").days - start.days
    else:
        duration = _get(time, "duration", "time")
    if not duration >= 0.0:
        raise ConfigErr(f"must be >= 0 days (got {duration})", path="time.duration")

    orbit_doc = doc["orbit"]
    if "ephemeris" in orbit_doc:
        orbit = import_ephemeris(Path(orbit_doc["ephemeris"]))
    else:
        orbit = _orbit(orbit_doc, start)

    try:
        return Scenario(
            name=doc.get("name", "scenario"),
            stations=pair,
            orbit=orbit,
            links=link_pair,
            quantum=_quantum(doc["quantum"]),
            beta_min_deg=float(beta_min),
            twilight=_choice(
                TwilightRule, _get(gates, "twilight", "gates"), "gates.twilight"
            ),
            mode=_choice(OperationMode, _get(gates, "mode", "gates"), "gates.mode"),
            start=start,
            step_s=float(step),
            duration_days=float(duration),
            averaging=_choice(
                AttenuationAveraging,
                doc.get("analysis", {}).get("attenuation_averaging", "db"),
                "analysis.attenuation_averaging",
            ),
            config=doc,
        )
    except ValueError as e:
        raise ConfigErr(str(e), path="time") from e


def parse_config(
    text: str, *, overrides: Iterable[str] = (), base_dir: Path | None = None
) -> Scenario:
    """Parse a JSON document into a fully resolved Scenario."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigErr(
            f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}",
            path="<document>",
        ) from e
    return build_scenario(resolve_document(doc, overrides, base_dir=base_dir))


def load_config(path: Path, *, overrides: Iterable[str] = ()) -> Scenario:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigErr("cannot read configuration file", path=str(path)) from e
    log.info("Loading configuration %s", path)
    return parse_config(text, overrides=overrides, base_dir=path.parent)


def preset_scenario(name: str, *, overrides: Iterable[str] = ()) -> Scenario:
    return parse_config(json.dumps({"preset": name}), overrides=overrides)


def dump_config(scenario: Scenario) -> str:
    """The resolved document as stable JSON text."""
    if scenario.config is None:
        raise ConfigErr("scenario was not built from a configuration document")
    return json.dumps(scenario.config, indent=2, sort_keys=True) + "\n"
