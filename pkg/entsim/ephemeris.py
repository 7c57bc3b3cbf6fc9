"""Ephemeris CSV import/export and cubic Hermite interpolation.

File layout::

    # frame: ECI
    epoch,x_km,y_km,z_km
    2021-07-01T00:00:00.000Z,6978.137,0.0,0.0
    ...

The frame may instead be given per row in an optional fifth ``frame`` column;
either way a file holds a single frame. ECEF tables are rotated to ECI at load.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicHermiteSpline

from entsim.astro import (
    SECONDS_PER_DAY,
    Epoch,
    Frame,
    earth_rotation_angles,
    rotate_z,
)
from entsim.errors import (
    EphemerisFormatErr,
    EpochRangeErr,
    OutputWriteErr,
    PropagationErr,
)
from entsim.orbit import OrbitElements, propagate_positions

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("epoch", "x_km", "y_km", "z_km")
FRAME_PREFIX = "# frame:"
# epochs pass through microsecond ISO text; allow that much slack at the ends
SPAN_TOL_DAYS = 1e-9


@dataclass(frozen=True, slots=True, eq=False)
class EphemerisTable:
    """ECI positions (km) at strictly increasing epochs (days since J2000)."""

    days: NDArray[np.float64]
    positions_km: NDArray[np.float64]
    source_frame: Frame = Frame.ECI
    source: str = ""

    def __post_init__(self) -> None:
        if self.days.ndim != 1 or self.positions_km.shape != (self.days.size, 3):
            raise ValueError("ephemeris needs N epochs and an (N, 3) position array")
        if self.days.size < 2:
            raise ValueError("ephemeris needs at least 2 rows")
        if np.any(np.diff(self.days) <= 0.0):
            raise ValueError("ephemeris epochs must be strictly increasing")

    def __len__(self) -> int:
        return int(self.days.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EphemerisTable):
            return NotImplemented
        return (
            np.array_equal(self.days, other.days)
            and np.array_equal(self.positions_km, other.positions_km)
            and self.source_frame is other.source_frame
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def start(self) -> Epoch:
        return Epoch(float(self.days[0]))

    @property
    def end(self) -> Epoch:
        return Epoch(float(self.days[-1]))


# -------------------------
# Parsing
# -------------------------


def _parse_frame(text: str, line_no: int) -> Frame:
    try:
        return Frame(text.strip().upper())
    except ValueError as e:
        raise EphemerisFormatErr(
            f"unknown frame {text.strip()!r} (expected ECI or ECEF)", line_no=line_no
        ) from e


def _parse_float(raw: dict[str, str], key: str, line_no: int) -> float:
    text = (raw.get(key) or "").strip()
    try:
        value = float(text)
    except ValueError as e:
        raise EphemerisFormatErr(
            f"{key} must be a number (got {text!r})", line_no=line_no
        ) from e
    if not np.isfinite(value):
        raise EphemerisFormatErr(f"{key} must be finite", line_no=line_no)
    return value


def read_ephemeris(lines: Iterable[str], *, source: str = "<memory>") -> EphemerisTable:
    """Parse ephemeris CSV text lines into an ECI table."""
    declared: Frame | None = None
    body: list[tuple[int, str]] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.lower().startswith(FRAME_PREFIX):
            frame = _parse_frame(stripped[len(FRAME_PREFIX) :], line_no)
            if declared is not None and frame is not declared:
                raise EphemerisFormatErr("mixed frames in one file", line_no=line_no)
            declared = frame
            continue
        if stripped.startswith("#"):
            continue
        body.append((line_no, stripped))

    if not body:
        raise EphemerisFormatErr("no header row")
    header_line, _ = body[0]
    reader = csv.DictReader([text for _, text in body])
    fieldnames = [name.strip() for name in reader.fieldnames or []]
    reader.fieldnames = fieldnames
    missing = [c for c in REQUIRED_COLUMNS if c not in fieldnames]
    if missing:
        raise EphemerisFormatErr(
            f"missing required columns: {missing}", line_no=header_line
        )

    days: list[float] = []
    positions: list[tuple[float, float, float]] = []
    row_frame = declared
    for (line_no, _), raw in zip(body[1:], reader, strict=True):
        if "frame" in fieldnames:
            frame = _parse_frame(raw.get("frame") or "", line_no)
            if row_frame is not None and frame is not row_frame:
                raise EphemerisFormatErr("mixed frames in one file", line_no=line_no)
            row_frame = frame
        try:
            epoch = Epoch.from_iso(raw.get("epoch") or "")
        except ValueError as e:
            raise EphemerisFormatErr(
                f"epoch must be ISO-8601 UTC (got {raw.get('epoch')!r})",
                line_no=line_no,
            ) from e
        if days and epoch.days <= days[-1]:
            raise EphemerisFormatErr(
                "epochs must be strictly increasing", line_no=line_no
            )
        days.append(epoch.days)
        positions.append(
            tuple(_parse_float(raw, k, line_no) for k in REQUIRED_COLUMNS[1:])
        )

    if row_frame is None:
        raise EphemerisFormatErr(
            "no frame declaration ('# frame: ECI|ECEF' or a frame column)"
        )
    if len(days) < 2:
        raise EphemerisFormatErr("ephemeris needs at least 2 data rows")

    day_arr = np.array(days)
    pos = np.array(positions, dtype=float)
    if row_frame is Frame.ECEF:
        try:
            pos = rotate_z(pos, earth_rotation_angles(day_arr))
        except EpochRangeErr as e:
            raise EphemerisFormatErr(str(e)) from e
    return EphemerisTable(day_arr, pos, row_frame, source)


def import_ephemeris(path: Path) -> EphemerisTable:
    try:
        with path.open("r", newline="", encoding="utf-8") as fin:
            table = read_ephemeris(fin, source=str(path))
    except OSError as e:
        raise EphemerisFormatErr(f"cannot read ephemeris file {path}") from e
    log.info(
        "Imported %d ephemeris rows from %s (%s), interpolation residual %.3g km",
        len(table),
        path,
        table.source_frame,
        interpolation_residual_km(table),
    )
    return table


def write_ephemeris(table: EphemerisTable, path: Path) -> None:
    """Write the table as ECI CSV, full float precision."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fout:
            fout.write(f"{FRAME_PREFIX} {Frame.ECI}\n")
            writer = csv.writer(fout, lineterminator="\n")
            writer.writerow(REQUIRED_COLUMNS)
            for d, (x, y, z) in zip(
                table.days.tolist(), table.positions_km.tolist(), strict=True
            ):
                writer.writerow([_iso_us(d), repr(x), repr(y), repr(z)])
    except OSError as e:
        raise OutputWriteErr(f"failed to write ephemeris: {path}") from e
    log.info("Wrote %d ephemeris rows to %s", len(table), path)


def _iso_us(days: float) -> str:
    stamp = Epoch(days).to_datetime().isoformat(timespec="microseconds")
    return stamp.replace("+00:00", "Z")


def export_ephemeris(
    elements: OrbitElements, start: Epoch, step_s: float, duration_days: float
) -> EphemerisTable:
    """Sample the propagator on a regular grid."""
    n = int(np.floor(duration_days * SECONDS_PER_DAY / step_s)) + 1
    # round-trip through the ISO text the file will carry
    days = np.array(
        [
            Epoch.from_iso(_iso_us(start.days + k * step_s / SECONDS_PER_DAY)).days
            for k in range(n)
        ]
    )
    positions = propagate_positions(elements, days)
    return EphemerisTable(days, positions, Frame.ECI, "propagator")


# -------------------------
# Interpolation
# -------------------------


def _spline(
    days: NDArray[np.float64], positions: NDArray[np.float64]
) -> CubicHermiteSpline:
    t = (days - days[0]) * SECONDS_PER_DAY
    edge = 2 if t.size >= 3 else 1
    velocity = np.gradient(positions, t, axis=0, edge_order=edge)
    return CubicHermiteSpline(t, positions, velocity, axis=0, extrapolate=False)


class EphemerisInterpolator:
    """Cubic Hermite interpolation of ECI position.

    Velocities at the nodes come from finite differences.
    """

    def __init__(self, table: EphemerisTable) -> None:
        self.table = table
        self._t0 = float(table.days[0])
        self._spline = _spline(table.days, table.positions_km)

    def positions_at(self, days: ArrayLike) -> NDArray[np.float64]:
        d = np.asarray(days, dtype=float)
        lo, hi = self.table.days[0], self.table.days[-1]
        outside = (d < lo - SPAN_TOL_DAYS) | (d > hi + SPAN_TOL_DAYS)
        if np.any(outside):
            first = Epoch(float(d[outside].flat[0]))
            raise PropagationErr(
                "epoch outside the ephemeris span", epoch=first.isoformat()
            )
        return self._spline((np.clip(d, lo, hi) - self._t0) * SECONDS_PER_DAY)


def interpolation_residual_km(table: EphemerisTable) -> float:
    """Max error at odd rows of an interpolant built from the even rows.

    With half the native sampling this bounds the error of the full-grid
    interpolant from above; 0.0 when the table is too short to test.
    """
    if len(table) < 5:
        return 0.0
    even = slice(0, None, 2)
    spline = _spline(table.days[even], table.positions_km[even])
    odd_days = table.days[1::2]
    inside = odd_days < table.days[even][-1]
    t = (odd_days[inside] - table.days[0]) * SECONDS_PER_DAY
    err = np.linalg.norm(spline(t) - table.positions_km[1::2][inside], axis=1)
    return float(np.max(err)) if err.size else 0.0
