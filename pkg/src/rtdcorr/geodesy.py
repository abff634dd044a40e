"""Geodesic distances on the WGS-84 ellipsoid.

Distances are returned in kilometers.  The primary routine is the Vincenty
inverse solution; near-antipodal pairs where the iteration does not converge
fall back to a great-circle (haversine) distance on the mean Earth radius,
and the fallback is flagged on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError

# WGS-84 ellipsoid
WGS84_A_M = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B_M = WGS84_A_M * (1.0 - WGS84_F)

# mean Earth radius used by the great-circle fallback and the test oracle
MEAN_EARTH_RADIUS_KM = 6371.0088

VINCENTY_MAX_ITER = 200
VINCENTY_TOL_RAD = 1e-12


@dataclass(frozen=True, order=True)
class Coordinate:
    """WGS-84 latitude/longitude in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


class GeodesicResult(NamedTuple):
    km: float
    used_fallback: bool


def haversine_km(a: Coordinate, b: Coordinate, radius_km: float = MEAN_EARTH_RADIUS_KM) -> float:
    """Great-circle distance on a sphere of the given radius."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    s = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * radius_km * math.asin(min(1.0, math.sqrt(s)))


def _vincenty_scalar(a: Coordinate, b: Coordinate) -> GeodesicResult:
    if (a.lat, a.lon) == (b.lat, b.lon):
        return GeodesicResult(0.0, False)

    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    ell = math.radians(b.lon - a.lon)

    u1 = math.atan((1.0 - WGS84_F) * math.tan(phi1))
    u2 = math.atan((1.0 - WGS84_F) * math.tan(phi2))
    sin_u1, cos_u1 = math.sin(u1), math.cos(u1)
    sin_u2, cos_u2 = math.sin(u2), math.cos(u2)

    lam = ell
    for _ in range(VINCENTY_MAX_ITER):
        sin_lam, cos_lam = math.sin(lam), math.cos(lam)
        sin_sigma = math.hypot(
            cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam
        )
        if sin_sigma == 0.0:
            return GeodesicResult(0.0, False)  # coincident on the auxiliary sphere
        cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam
        sigma = math.atan2(sin_sigma, cos_sigma)
        sin_alpha = cos_u1 * cos_u2 * sin_lam / sin_sigma
        cos_sq_alpha = 1.0 - sin_alpha * sin_alpha
        if cos_sq_alpha == 0.0:
            cos_2sigma_m = 0.0  # equatorial line
        else:
            cos_2sigma_m = cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha
        c = WGS84_F / 16.0 * cos_sq_alpha * (4.0 + WGS84_F * (4.0 - 3.0 * cos_sq_alpha))
        lam_prev = lam
        lam = ell + (1.0 - c) * WGS84_F * sin_alpha * (
            sigma
            + c
            * sin_sigma
            * (cos_2sigma_m + c * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m ** 2))
        )
        if abs(lam - lam_prev) < VINCENTY_TOL_RAD:
            break
    else:
        return GeodesicResult(haversine_km(a, b), True)

    u_sq = cos_sq_alpha * (WGS84_A_M ** 2 - WGS84_B_M ** 2) / WGS84_B_M ** 2
    big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)))
    big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)))
    delta_sigma = (
        big_b
        * sin_sigma
        * (
            cos_2sigma_m
            + big_b
            / 4.0
            * (
                cos_sigma * (-1.0 + 2.0 * cos_2sigma_m ** 2)
                - big_b
                / 6.0
                * cos_2sigma_m
                * (-3.0 + 4.0 * sin_sigma ** 2)
                * (-3.0 + 4.0 * cos_2sigma_m ** 2)
            )
        )
    )
    meters = WGS84_B_M * big_a * (sigma - delta_sigma)
    return GeodesicResult(meters / 1000.0, False)


def geodesic_distance_full(a: Coordinate, b: Coordinate) -> GeodesicResult:
    """Vincenty inverse distance with the fallback flag exposed.

    Arguments are canonicalized so the result is bitwise symmetric.
    """
    if (b.lat, b.lon) < (a.lat, a.lon):
        a, b = b, a
    return _vincenty_scalar(a, b)


def geodesic_distance(a: Coordinate, b: Coordinate) -> float:
    """Vincenty inverse distance in km (great-circle fallback near antipodes)."""
    return geodesic_distance_full(a, b).km


def geodesic_distance_many(
    lats1: np.ndarray, lons1: np.ndarray, lats2: np.ndarray, lons2: np.ndarray
) -> np.ndarray:
    """Vectorized Vincenty inverse distance (km) over aligned coordinate arrays.

    Pairs whose iteration does not converge fall back to the great-circle
    distance, matching the scalar routine.
    """
    lats1, lons1, lats2, lons2 = np.broadcast_arrays(
        np.asarray(lats1, dtype=float),
        np.asarray(lons1, dtype=float),
        np.asarray(lats2, dtype=float),
        np.asarray(lons2, dtype=float),
    )
    phi1, phi2 = np.radians(lats1), np.radians(lats2)
    ell = np.radians(lons2 - lons1)

    u1 = np.arctan((1.0 - WGS84_F) * np.tan(phi1))
    u2 = np.arctan((1.0 - WGS84_F) * np.tan(phi2))
    sin_u1, cos_u1 = np.sin(u1), np.cos(u1)
    sin_u2, cos_u2 = np.sin(u2), np.cos(u2)

    lam = ell.copy()
    active = np.ones(lam.shape, dtype=bool)
    sin_sigma = np.zeros_like(lam)
    cos_sigma = np.ones_like(lam)
    sigma = np.zeros_like(lam)
    cos_sq_alpha = np.ones_like(lam)
    cos_2sigma_m = np.zeros_like(lam)

    for _ in range(VINCENTY_MAX_ITER):
        if not active.any():
            break
        sin_lam, cos_lam = np.sin(lam), np.cos(lam)
        ss = np.hypot(cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam)
        cs = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam
        coincident = ss == 0.0
        ss_safe = np.where(coincident, 1.0, ss)
        sa = cos_u1 * cos_u2 * sin_lam / ss_safe
        csa = 1.0 - sa * sa
        c2sm = np.where(csa == 0.0, 0.0, cs - 2.0 * sin_u1 * sin_u2 / np.where(csa == 0.0, 1.0, csa))
        c = WGS84_F / 16.0 * csa * (4.0 + WGS84_F * (4.0 - 3.0 * csa))
        new_lam = ell + (1.0 - c) * WGS84_F * sa * (
            np.arctan2(ss, cs)
            + c * ss * (c2sm + c * cs * (-1.0 + 2.0 * c2sm ** 2))
        )
        upd = active & ~coincident
        sin_sigma = np.where(upd, ss, sin_sigma)
        cos_sigma = np.where(upd, cs, cos_sigma)
        sigma = np.where(upd, np.arctan2(ss, cs), sigma)
        cos_sq_alpha = np.where(upd, csa, cos_sq_alpha)
        cos_2sigma_m = np.where(upd, c2sm, cos_2sigma_m)
        converged = np.abs(new_lam - lam) < VINCENTY_TOL_RAD
        lam = np.where(upd, new_lam, lam)
        active = upd & ~converged

    u_sq = cos_sq_alpha * (WGS84_A_M ** 2 - WGS84_B_M ** 2) / WGS84_B_M ** 2
    big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)))
    big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)))
    delta_sigma = (
        big_b
        * sin_sigma
        * (
            cos_2sigma_m
            + big_b
            / 4.0
            * (
                cos_sigma * (-1.0 + 2.0 * cos_2sigma_m ** 2)
                - big_b
                / 6.0
                * cos_2sigma_m
                * (-3.0 + 4.0 * sin_sigma ** 2)
                * (-3.0 + 4.0 * cos_2sigma_m ** 2)
            )
        )
    )
    km = WGS84_B_M * big_a * (sigma - delta_sigma) / 1000.0

    same = (lats1 == lats2) & (lons1 == lons2)
    km = np.where(same, 0.0, km)

    if active.any():  # never converged: great-circle fallback
        s = (
            np.sin((phi2 - phi1) / 2.0) ** 2
            + np.cos(phi1) * np.cos(phi2) * np.sin(ell / 2.0) ** 2
        )
        gc = 2.0 * MEAN_EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))
        km = np.where(active, gc, km)
    return km
