"""Great-circle distances and the geolocation error metrics.

All distances are haversine kilometres on a sphere of radius 6371 km.
The three headline metrics are accuracy within 161 km (inclusive), mean
error and median error; an optional grouping produces per-group medians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0
ACC_THRESHOLD_KM = 161.0


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in degrees; bounds enforced at construction."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range [-180, 180]: {self.lon}")


@dataclass
class GeoEvalReport:
    """Evaluation summary over one prediction set.

    `distances` keeps the raw per-user error vector so downstream outputs
    (GeoJSON error maps, figures) derive from the exact same numbers as the
    headline metrics.
    """

    acc_at_161: float
    mean_km: float
    median_km: float
    n_users: int
    per_group: Optional[dict] = None
    distances: Optional[np.ndarray] = None


def haversine_arrays(lat1, lon1, lat2, lon2):
    """Vectorised haversine distance in km between degree coordinate arrays."""
    lat1, lon1, lat2, lon2 = (
        np.radians(np.asarray(a, dtype=np.float64)) for a in (lat1, lon1, lat2, lon2)
    )
    h = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    # clip guards against sqrt(1 + eps) from float roundoff on antipodes
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km between two points.

    Delegates to the vectorised path so scalar and batched callers get
    bit-identical values.
    """
    return float(haversine_arrays([a.lat], [a.lon], [b.lat], [b.lon])[0])


def as_latlon_array(points) -> np.ndarray:
    """Coerce a sequence of GeoPoints or an (N, 2) array-like to float64 (N, 2)."""
    if isinstance(points, np.ndarray) and points.ndim == 2 and points.shape[1] == 2:
        return points.astype(np.float64, copy=False)
    first = points[0] if len(points) else None
    if isinstance(first, GeoPoint):
        return np.array([(p.lat, p.lon) for p in points], dtype=np.float64)
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (N, 2) lat/lon coordinates, got shape {arr.shape}")
    return arr


def evaluate(pred, gold, groups: Optional[Sequence] = None) -> GeoEvalReport:
    """Compute Acc@161 / mean / median error between predictions and gold points.

    `pred` and `gold` are equal-length sequences of GeoPoints or (N, 2)
    lat/lon arrays. The 161 km boundary is inclusive. When `groups` is given
    (one id per user) the report also carries a per-group median table.
    """
    p = as_latlon_array(pred)
    g = as_latlon_array(gold)
    if len(p) != len(g):
        raise ValueError(f"pred/gold length mismatch: {len(p)} vs {len(g)}")
    if len(p) == 0:
        raise ValueError("cannot evaluate an empty prediction set")
    d = haversine_arrays(p[:, 0], p[:, 1], g[:, 0], g[:, 1])

    per_group = None
    if groups is not None:
        if len(groups) != len(d):
            raise ValueError(f"groups length mismatch: {len(groups)} vs {len(d)}")
        per_group = {}
        for grp in sorted(set(groups), key=str):
            mask = np.array([x == grp for x in groups])
            per_group[grp] = (float(np.median(d[mask])), int(mask.sum()))

    return GeoEvalReport(
        acc_at_161=float(100.0 * np.count_nonzero(d <= ACC_THRESHOLD_KM) / len(d)),
        mean_km=float(np.mean(d)),
        median_km=float(np.median(d)),
        n_users=len(d),
        per_group=per_group,
        distances=d,
    )


def format_report(report: GeoEvalReport) -> str:
    """Human-readable key-value block for a GeoEvalReport."""
    lines = [
        f"n_users    {report.n_users}",
        f"acc@161    {report.acc_at_161:.6g}",
        f"mean_km    {report.mean_km:.6g}",
        f"median_km  {report.median_km:.6g}",
    ]
    return "\n".join(lines)


def report_rows(report: GeoEvalReport) -> list[tuple[str, str]]:
    """`metric \\t value` rows for the machine-readable flat report file."""
    return [
        ("n_users", str(report.n_users)),
        ("acc_at_161", f"{report.acc_at_161:.6g}"),
        ("mean_km", f"{report.mean_km:.6g}"),
        ("median_km", f"{report.median_km:.6g}"),
    ]


def per_group_rows(report: GeoEvalReport) -> list[tuple[str, str, str]]:
    """`group \\t median_km \\t count` rows; empty when no grouping was given."""
    if not report.per_group:
        return []
    return [
        (str(grp), f"{median:.6g}", str(count))
        for grp, (median, count) in report.per_group.items()
    ]
