"""Mission loop: sample the time grid, gate it, evaluate the link chain, aggregate.

The grid is ``start + k*step`` for ``k < floor(duration*86400/step)``. It is cut
into fixed one-day chunks that are evaluated with numpy (inline or in a
process pool) and re-emitted in order, so results never depend on the worker
count. Only dual-visible timesteps are emitted; physics fields of the
non-communicating ones are NaN.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import StrEnum
from itertools import groupby
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray

from entsim.astro import (
    SECONDS_PER_DAY,
    Epoch,
    GroundStation,
    check_supported,
    sun_directions_eci,
    sun_elevations_deg,
)
from entsim.ephemeris import EphemerisInterpolator, EphemerisTable
from entsim.errors import KeplerConvergenceErr, PropagationErr
from entsim.link_budget import (
    LinkParams,
    channel_efficiency,
    dual_system_loss_db,
    link_attenuation,
    to_db,
)
from entsim.orbit import OrbitElements, propagate_positions
from entsim.quantum import QuantumParams, evaluate_sample
from entsim.visibility import (
    OperationMode,
    StationFrame,
    TwilightRule,
    communication_allowed,
    dual_visibility,
    eci_to_ecef_km,
    night_mask,
    station_dark,
    sunlit_mask,
)

log = logging.getLogger(__name__)

_J2000_DATE = date(2000, 1, 1)
# keeps samples computed exactly at midnight on their own calendar day
_DAY_EPS = 1e-9


class AttenuationAveraging(StrEnum):
    DB = "db"
    LINEAR = "linear"


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    stations: tuple[GroundStation, GroundStation]
    orbit: OrbitElements | EphemerisTable
    links: tuple[LinkParams, LinkParams]
    quantum: QuantumParams
    beta_min_deg: float
    twilight: TwilightRule
    mode: OperationMode
    start: Epoch
    step_s: float
    duration_days: float
    averaging: AttenuationAveraging = AttenuationAveraging.DB
    config: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.stations) != 2:
            raise ValueError(
                f"exactly two stations required (got {len(self.stations)})"
            )
        if len(self.links) != 2:
            raise ValueError("one LinkParams per station required")
        if not self.step_s > 0.0:
            raise ValueError(f"step must be > 0 s (got {self.step_s})")
        if not self.duration_days >= 0.0:
            raise ValueError(f"duration must be >= 0 days (got {self.duration_days})")
        if not 0.0 <= self.beta_min_deg < 90.0:
            raise ValueError(
                f"beta_min must be in [0, 90) deg (got {self.beta_min_deg})"
            )
        check_supported([self.start.days, self.start.days + self.duration_days])

    @property
    def sample_count(self) -> int:
        steps = self.duration_days * SECONDS_PER_DAY / self.step_s
        return int(math.floor(steps + 1e-9))

    @property
    def system_loss_db(self) -> float:
        return dual_system_loss_db(*self.links)

    def grid_days(self, first: int, count: int) -> NDArray[np.float64]:
        k = np.arange(first, first + count, dtype=float)
        return self.start.days + (k * self.step_s) / SECONDS_PER_DAY


@dataclass(frozen=True, slots=True)
class SampleRecord:
    epoch: Epoch
    beta1_deg: float
    beta2_deg: float
    range1_km: float
    range2_km: float
    atten1_db: float
    atten2_db: float
    eta1: float
    eta2: float
    dual_vis: bool
    night: bool
    comm: bool
    q_prob: float
    r_raw: float
    qber: float
    r_distilled: float
    r_unsifted: float
    far_field_clamped: bool = False

    @property
    def dual_attenuation_db(self) -> float:
        """-10*log10(eta1*eta2): both links plus the optical system."""
        return -10.0 * math.log10(self.eta1 * self.eta2)


# -------------------------
# Sample loop
# -------------------------


class _ChunkRunner:
    """Per-process evaluator; holds the station frames and orbit source."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.frames = tuple(StationFrame(s) for s in scenario.stations)
        self._interp: EphemerisInterpolator | None = None
        if isinstance(scenario.orbit, EphemerisTable):
            self._interp = EphemerisInterpolator(scenario.orbit)

    def positions(self, days: NDArray[np.float64]) -> NDArray[np.float64]:
        if self._interp is not None:
            return self._interp.positions_at(days)
        try:
            return propagate_positions(self.scenario.orbit, days)
        except KeplerConvergenceErr as e:
            raise PropagationErr(str(e), epoch=Epoch(float(days[0])).isoformat()) from e

    def run(self, first: int, count: int) -> list[SampleRecord]:
        s = self.scenario
        days = s.grid_days(first, count)
        pos = self.positions(days)
        ecef = eci_to_ecef_km(pos, days)
        el1, rng1, _ = self.frames[0].look(ecef)
        el2, rng2, _ = self.frames[1].look(ecef)

        idx = np.flatnonzero(dual_visibility(el1, el2, s.beta_min_deg))
        if idx.size == 0:
            return []
        d = days[idx]
        el1, el2, rng1, rng2 = el1[idx], el2[idx], rng1[idx], rng2[idx]

        sun = sun_directions_eci(d)
        night = night_mask(
            sunlit_mask(pos[idx], sun),
            station_dark(sun_elevations_deg(s.stations[0], d), s.twilight),
            station_dark(sun_elevations_deg(s.stations[1], d), s.twilight),
        )
        # a link cannot be evaluated on the horizon itself
        comm = communication_allowed(np.ones(idx.size, dtype=bool), night, s.mode)
        comm &= (el1 > 0.0) & (el2 > 0.0)

        n = idx.size
        a1_db, a2_db = np.full(n, np.nan), np.full(n, np.nan)
        eta1, eta2 = np.full(n, np.nan), np.full(n, np.nan)
        clamped = np.zeros(n, dtype=bool)
        q_prob, r_raw, qber, r_dist, r_uns = (np.full(n, np.nan) for _ in range(5))
        c = np.flatnonzero(comm)
        if c.size:
            link1 = link_attenuation(rng1[c], s.links[0], el1[c])
            link2 = link_attenuation(rng2[c], s.links[1], el2[c])
            a1_db[c], a2_db[c] = link1.db, link2.db
            eta1[c] = channel_efficiency(link1.linear, s.links[0])
            eta2[c] = channel_efficiency(link2.linear, s.links[1])
            clamped[c] = link1.far_field_clamped | link2.far_field_clamped
            res = evaluate_sample(eta1[c], eta2[c], s.quantum)
            q_prob[c], r_raw[c], qber[c] = res.q_prob, res.r_raw, res.qber
            r_dist[c], r_uns[c] = res.r_distilled, res.r_unsifted

        return [
            SampleRecord(Epoch(row[0]), *row[1:9], True, *row[9:])
            for row in zip(
                d.tolist(),
                el1.tolist(),
                el2.tolist(),
                rng1.tolist(),
                rng2.tolist(),
                a1_db.tolist(),
                a2_db.tolist(),
                eta1.tolist(),
                eta2.tolist(),
                night.tolist(),
                comm.tolist(),
                q_prob.tolist(),
                r_raw.tolist(),
                qber.tolist(),
                r_dist.tolist(),
                r_uns.tolist(),
                clamped.tolist(),
                strict=True,
            )
        ]


_worker: _ChunkRunner | None = None


def _init_worker(scenario: Scenario) -> None:
    global _worker
    _worker = _ChunkRunner(scenario)


def _run_chunk(bounds: tuple[int, int]) -> list[SampleRecord]:
    assert _worker is not None
    return _worker.run(*bounds)


def chunk_bounds(scenario: Scenario) -> list[tuple[int, int]]:
    """(first index, count) per one-day chunk of the grid."""
    n = scenario.sample_count
    size = max(1, int(SECONDS_PER_DAY // scenario.step_s))
    return [(first, min(size, n - first)) for first in range(0, n, size)]


def iter_samples(scenario: Scenario, workers: int = 1) -> Iterator[SampleRecord]:
    """Yield dual-visible samples in chronological order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    bounds = chunk_bounds(scenario)
    if workers == 1 or len(bounds) <= 1:
        runner = _ChunkRunner(scenario)
        for first, count in bounds:
            yield from runner.run(first, count)
        return
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(scenario,)
    ) as pool:
        for chunk in pool.map(_run_chunk, bounds):
            yield from chunk


# -------------------------
# Aggregation
# -------------------------


@dataclass(frozen=True, slots=True)
class KpiSummary:
    """Run totals; the per-day averages of the results table are derived."""

    duration_days: float
    step_s: float
    system_losses_db: float
    averaging: AttenuationAveraging
    dual_visibility_samples: int
    communication_samples: int
    raw_total: float
    distilled_total: float
    atm_sum: float
    qber_sum: float
    qber_samples: int
    flagged_samples: int

    def _per_day(self, total: float) -> float:
        return total / self.duration_days if self.duration_days > 0.0 else 0.0

    @property
    def avg_dual_visibility_min_per_day(self) -> float:
        return self._per_day(self.dual_visibility_samples * self.step_s / 60.0)

    @property
    def avg_communication_min_per_day(self) -> float:
        return self._per_day(self.communication_samples * self.step_s / 60.0)

    @property
    def avg_raw_per_day(self) -> float:
        return self._per_day(self.raw_total)

    @property
    def avg_distilled_per_day(self) -> float:
        return self._per_day(self.distilled_total)

    @property
    def avg_atm_losses_db(self) -> float | None:
        """<A1> + <A2> over communication time; None when nothing was sent."""
        if self.communication_samples == 0:
            return None
        mean = self.atm_sum / self.communication_samples
        if self.averaging is AttenuationAveraging.LINEAR:
            return float(to_db(mean))
        return mean

    @property
    def avg_dual_link_attenuation_db(self) -> float | None:
        atm = self.avg_atm_losses_db
        return None if atm is None else atm + self.system_losses_db

    @property
    def avg_qber(self) -> float | None:
        """Mean over communicating samples that saw any coincidence."""
        if self.qber_samples == 0:
            return None
        return self.qber_sum / self.qber_samples

    def to_dict(self) -> dict[str, Any]:
        return {
            "duration_days": self.duration_days,
            "step_s": self.step_s,
            "attenuation_averaging": str(self.averaging),
            "avg_dual_link_attenuation_db": self.avg_dual_link_attenuation_db,
            "avg_atm_losses_db": self.avg_atm_losses_db,
            "system_losses_db": self.system_losses_db,
            "avg_dual_visibility_min_per_day": self.avg_dual_visibility_min_per_day,
            "avg_communication_min_per_day": self.avg_communication_min_per_day,
            "avg_raw_per_day": self.avg_raw_per_day,
            "avg_distilled_per_day": self.avg_distilled_per_day,
            "avg_qber": self.avg_qber,
            "flagged_samples": self.flagged_samples,
            "dual_visibility_samples": self.dual_visibility_samples,
            "communication_samples": self.communication_samples,
            "raw_total": self.raw_total,
            "distilled_total": self.distilled_total,
        }


def aggregate(
    samples: Iterable[SampleRecord],
    duration_days: float,
    *,
    step_s: float,
    system_loss_db: float,
    averaging: AttenuationAveraging = AttenuationAveraging.DB,
) -> KpiSummary:
    """Single pass over a run's samples."""
    dual = comm = flagged = with_qber = 0
    raw = distilled = atm = qber = 0.0
    for s in samples:
        if s.dual_vis:
            dual += 1
        if not s.comm:
            continue
        comm += 1
        raw += s.r_raw * step_s
        distilled += s.r_distilled * step_s
        if not math.isnan(s.qber):
            qber += s.qber
            with_qber += 1
        pair_db = s.atten1_db + s.atten2_db
        if averaging is AttenuationAveraging.LINEAR:
            atm += 10.0 ** (pair_db / 10.0)
        else:
            atm += pair_db
        if s.far_field_clamped:
            flagged += 1
    return KpiSummary(
        duration_days=duration_days,
        step_s=step_s,
        system_losses_db=system_loss_db,
        averaging=averaging,
        dual_visibility_samples=dual,
        communication_samples=comm,
        raw_total=raw,
        distilled_total=distilled,
        atm_sum=atm,
        qber_sum=qber,
        qber_samples=with_qber,
        flagged_samples=flagged,
    )


def merge_summaries(parts: Sequence[KpiSummary]) -> KpiSummary:
    """Combine summaries of consecutive runs of one configuration."""
    if not parts:
        raise ValueError("nothing to merge")
    head = parts[0]
    for p in parts[1:]:
        same_grid = (p.step_s, p.averaging) == (head.step_s, head.averaging)
        if not same_grid or not math.isclose(p.system_losses_db, head.system_losses_db):
            raise ValueError("summaries come from different configurations")
    return KpiSummary(
        duration_days=sum(p.duration_days for p in parts),
        step_s=head.step_s,
        system_losses_db=head.system_losses_db,
        averaging=head.averaging,
        dual_visibility_samples=sum(p.dual_visibility_samples for p in parts),
        communication_samples=sum(p.communication_samples for p in parts),
        raw_total=math.fsum(p.raw_total for p in parts),
        distilled_total=math.fsum(p.distilled_total for p in parts),
        atm_sum=math.fsum(p.atm_sum for p in parts),
        qber_sum=math.fsum(p.qber_sum for p in parts),
        qber_samples=sum(p.qber_samples for p in parts),
        flagged_samples=sum(p.flagged_samples for p in parts),
    )


# -------------------------
# Daily series and gaps
# -------------------------


class DayTotal(NamedTuple):
    day: date
    dual_visibility_s: float
    communication_s: float
    raw: float
    distilled: float


class Gap(NamedTuple):
    start: date
    end: date

    @property
    def days(self) -> int:
        return (self.end - self.start).days + 1


def utc_day(days: float) -> date:
    return _J2000_DATE + timedelta(days=math.floor(days + 0.5 + _DAY_EPS))


def daily_totals(
    samples: Iterable[SampleRecord],
    *,
    start: Epoch,
    duration_days: float,
    step_s: float,
) -> list[DayTotal]:
    """One row per UTC calendar day touched by the grid, zero days included."""
    n = int(math.floor(duration_days * SECONDS_PER_DAY / step_s + 1e-9))
    if n == 0:
        return []
    first = utc_day(start.days)
    last = utc_day(start.days + (n - 1) * step_s / SECONDS_PER_DAY)
    span = (last - first).days + 1
    vis = [0.0] * span
    com = [0.0] * span
    raw = [0.0] * span
    dist = [0.0] * span
    for s in samples:
        i = (utc_day(s.epoch.days) - first).days
        if s.dual_vis:
            vis[i] += step_s
        if s.comm:
            com[i] += step_s
            raw[i] += s.r_raw * step_s
            dist[i] += s.r_distilled * step_s
    return [
        DayTotal(first + timedelta(days=i), vis[i], com[i], raw[i], dist[i])
        for i in range(span)
    ]


def find_gaps(days: Iterable[DayTotal]) -> list[Gap]:
    """Maximal runs of consecutive days without communication."""
    gaps = []
    for silent, run in groupby(days, key=lambda t: t.communication_s == 0.0):
        if silent:
            run = list(run)
            gaps.append(Gap(run[0].day, run[-1].day))
    return gaps


def gap_analysis(
    samples: Iterable[SampleRecord],
    *,
    start: Epoch,
    duration_days: float,
    step_s: float,
) -> list[Gap]:
    return find_gaps(
        daily_totals(samples, start=start, duration_days=duration_days, step_s=step_s)
    )


# -------------------------
# Runs
# -------------------------


@dataclass(frozen=True, slots=True)
class ScenarioRun:
    scenario: Scenario
    samples: tuple[SampleRecord, ...]
    summary: KpiSummary

    def daily(self) -> list[DayTotal]:
        s = self.scenario
        return daily_totals(
            self.samples, start=s.start, duration_days=s.duration_days, step_s=s.step_s
        )

    def gaps(self) -> list[Gap]:
        return find_gaps(self.daily())


def run_scenario(scenario: Scenario, workers: int = 1) -> ScenarioRun:
    log.info(
        "Running %r: %d samples of %.3g s from %s (workers=%d)",
        scenario.name,
        scenario.sample_count,
        scenario.step_s,
        scenario.start.isoformat(),
        workers,
    )
    samples = tuple(iter_samples(scenario, workers))
    summary = aggregate(
        samples,
        scenario.duration_days,
        step_s=scenario.step_s,
        system_loss_db=scenario.system_loss_db,
        averaging=scenario.averaging,
    )
    if summary.flagged_samples:
        log.warning(
            "%d sample(s) needed the far-field clamp (receiver wider than the beam)",
            summary.flagged_samples,
        )
    log.info(
        "Done %r: %d dual-visible, %d communicating samples",
        scenario.name,
        summary.dual_visibility_samples,
        summary.communication_samples,
    )
    return ScenarioRun(scenario, samples, summary)
