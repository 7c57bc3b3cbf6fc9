"""Downlink attenuation and quantum-channel efficiency.

dB convention: dB = 10*log10(linear attenuation), attenuation >= 1.
All functions accept scalars or numpy arrays for the geometric inputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entsim.errors import BelowHorizonErr

log = logging.getLogger(__name__)

DEFAULT_FRIED_M = 1e6


def to_db(linear: ArrayLike):
    return 10.0 * np.log10(linear)


def from_db(db: ArrayLike):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


class DetectorKind(StrEnum):
    SNSPD = "snspd"
    SI_APD = "si"
    INGAAS_APD = "iga"


@dataclass(frozen=True, slots=True)
class DetectorPreset:
    kind: DetectorKind
    pde: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.pde <= 1.0:
            raise ValueError(f"PDE must be in [0, 1] (got {self.pde})")


DETECTORS: dict[DetectorKind, DetectorPreset] = {
    DetectorKind.SNSPD: DetectorPreset(DetectorKind.SNSPD, pde=0.9),
    DetectorKind.SI_APD: DetectorPreset(DetectorKind.SI_APD, pde=0.68),
    DetectorKind.INGAAS_APD: DetectorPreset(DetectorKind.INGAAS_APD, pde=0.25),
}


@dataclass(frozen=True, slots=True)
class LinkParams:
    wavelength_m: float
    d_t_m: float
    d_r_m: float
    a_atm0_db: float
    t_t: float
    t_r: float
    t_optics: float
    l_p: float
    pde: float
    r0_m: float = DEFAULT_FRIED_M

    def __post_init__(self) -> None:
        for name in ("t_t", "t_r", "t_optics", "l_p", "pde"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1] (got {value})")
        for name in ("wavelength_m", "d_t_m", "d_r_m", "r0_m"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.a_atm0_db < 0.0:
            raise ValueError("a_atm0_db must be >= 0")

    @property
    def transmission_product(self) -> float:
        """T_T * T_R * (1 - L_P) * T_optics * PDE for one link."""
        return self.t_t * self.t_r * (1.0 - self.l_p) * self.t_optics * self.pde

    def with_detector(self, detector: DetectorPreset) -> LinkParams:
        return replace(self, pde=detector.pde)


class LinkAttenuation(NamedTuple):
    linear: NDArray[np.float64] | float
    db: NDArray[np.float64] | float
    far_field_clamped: NDArray[np.bool_] | bool


def divergence_angles(
    wavelength_m: float, d_t_m: float, r0_m: float
) -> tuple[float, float]:
    """Diffraction-limited and turbulence-induced divergence (radians)."""
    if d_t_m <= 0.0 or r0_m <= 0.0:
        raise ValueError("D_T and r0 must be > 0")
    theta_diff = 2.44 * wavelength_m / d_t_m
    theta_atm = 0.0 if math.isinf(r0_m) else 2.1 * wavelength_m / r0_m
    return theta_diff, theta_atm


def atmospheric_attenuation_db(elevation_deg: ArrayLike, a_atm0_db: float):
    beta = np.asarray(elevation_deg, dtype=float)
    if np.any(beta <= 0.0):
        raise BelowHorizonErr("atmospheric attenuation requires elevation > 0")
    out = a_atm0_db / np.sin(np.radians(beta))
    return out[()] if out.ndim == 0 else out


def geometric_spreading(range_km: ArrayLike, params: LinkParams):
    """L^2 (theta_diff^2 + theta_atm^2) / D_R^2 before any clamp."""
    theta_diff, theta_atm = divergence_angles(
        params.wavelength_m, params.d_t_m, params.r0_m
    )
    length_m = np.asarray(range_km, dtype=float) * 1000.0
    return length_m**2 * (theta_diff**2 + theta_atm**2) / params.d_r_m**2


def link_attenuation(
    range_km: ArrayLike, params: LinkParams, elevation_deg: ArrayLike
) -> LinkAttenuation:
    """Single-downlink attenuation, far-field clamped to a spreading factor >= 1."""
    if np.any(np.asarray(range_km) <= 0.0):
        raise ValueError("link range must be > 0")
    spreading = geometric_spreading(range_km, params)
    clamped = spreading < 1.0
    if np.any(clamped):
        log.debug(
            "far-field clamp applied to %d sample(s)", int(np.count_nonzero(clamped))
        )
    spreading = np.maximum(spreading, 1.0)
    atm_db = atmospheric_attenuation_db(elevation_deg, params.a_atm0_db)
    db = to_db(spreading) + atm_db
    linear = spreading * from_db(atm_db)
    if np.ndim(db) == 0:
        return LinkAttenuation(float(linear), float(db), bool(clamped))
    return LinkAttenuation(linear, db, clamped)


def channel_efficiency(attenuation_linear: ArrayLike, params: LinkParams):
    a = np.asarray(attenuation_linear, dtype=float)
    if np.any(a < 1.0):
        raise ValueError("attenuation must be >= 1")
    eta = params.transmission_product / a
    return eta[()] if eta.ndim == 0 else eta


def link_loss_db(params: LinkParams) -> float:
    """Constant optical-system loss of one link in dB (positive)."""
    return -10.0 * math.log10(params.transmission_product)


def dual_system_loss_db(p1: LinkParams, p2: LinkParams) -> float:
    return link_loss_db(p1) + link_loss_db(p2)


def system_loss_db(params: LinkParams) -> float:
    """Dual-link system loss -10*log10((T_T T_R (1-L_P) T_optics PDE)^2)."""
    return dual_system_loss_db(params, params)
