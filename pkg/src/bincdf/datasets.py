"""Bundled example datasets.

Two small public statistics are shipped as CSV fixtures so the examples
and the acceptance suite run offline:

* Deutsche Bahn 2022 punctuality: monthly share of stops at most 5:59
  and 15:59 minutes late, per train category (PT/LT/RT).  Published as
  cumulative percentages; thresholds are encoded as 6 and 16 minutes and
  delays are assumed to start at 0 and stop at a chosen upper limit.
* German micro-census commuting: percentage of workers per distance or
  travel-time class, for all workers / self-employed / employees.

Every file is digest-pinned; a mismatch means the installation is
corrupt.
"""

from __future__ import annotations

import csv
import hashlib
from importlib import resources

import numpy as np

from .binned import BinnedTable, validate_table
from .errors import ValidationError

__all__ = [
    "DB_MONTHS",
    "DB_SERIES",
    "COMMUTE_GROUPS",
    "db_delay_rows",
    "db_delay_table",
    "commute_table",
]

DB_MONTHS = (
    "jan", "feb", "mar", "apr", "may", "jun",
    "jul", "aug", "sep", "oct", "nov", "dec",
)
DB_SERIES = ("PT", "LT", "RT")
COMMUTE_GROUPS = ("all", "self_employed", "employees")

_DIGESTS = {
    "db_delays_2022.csv": "85c2a6ece38fb292a0df6b85cc4c66342162bf2389000e28da03227e743fdca9",
    "commute_distance_all.csv": "c62ccc3c93896ecae1f4d452f5635cc684e0c80dc16d641153ebb309a050a3e0",
    "commute_distance_self_employed.csv": "1fab45dcd8df987d076db63bd33e05e9c81e33df7c0c268f52fdd283fd72c2c7",
    "commute_distance_employees.csv": "fc415ac18d799dda1c6233c8eef77562b056c1733be0643e13dadb854bcb3d43",
    "commute_time_all.csv": "5a495e4cfad25aee0b3ff2eb6042897028a53a1f3b22e1994fee6068722b2895",
    "commute_time_self_employed.csv": "75d116369dfc9c9236d55529f7181edc63b9e51fbb164905949a23fb5142a46e",
    "commute_time_employees.csv": "34832366ac80f79cb8c9371b222e339df90c6be36f8f585ad84575bf190ac232",
}


def _read_data(name: str) -> str:
    data = resources.files("bincdf.data").joinpath(name).read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != _DIGESTS[name]:
        raise ValidationError(
            f"bundled file {name} is corrupt: sha256 {digest} != {_DIGESTS[name]}"
        )
    return data.decode("utf-8")


def db_delay_rows(month: str, series: str = "LT") -> list[tuple[float, float]]:
    """(threshold_minutes, cumulative_percent) rows, starting at (0, 0)."""
    month = month.strip().lower()[:3]
    series = series.strip().upper()
    if month not in DB_MONTHS:
        raise ValidationError(f"unknown month {month!r}")
    if series not in DB_SERIES:
        raise ValidationError(f"unknown train series {series!r}")
    rows = [(0.0, 0.0)]
    for rec in csv.DictReader(_read_data("db_delays_2022.csv").splitlines()):
        if rec["month"] == month and rec["series"] == series:
            rows.append((float(rec["threshold_min"]), float(rec["cum_percent"])))
    return rows


def db_delay_table(
    month: str, series: str = "LT", upper_limit: float = 180.0
) -> BinnedTable:
    """Delay-minute table for one month and train category.

    The cumulative percentages are differenced into class proportions;
    ``upper_limit`` closes the final class (delays are assumed never to
    exceed it).
    """
    rows = db_delay_rows(month, series)
    taus = [t for t, _ in rows] + [float(upper_limit)]
    cums = [c for _, c in rows] + [100.0]
    if upper_limit <= taus[-2]:
        raise ValidationError(
            f"upper limit {upper_limit!r} must exceed the last threshold {taus[-2]!r}"
        )
    props = np.diff(cums) / 100.0
    return validate_table(taus, props, units="proportion")


def commute_table(kind: str = "distance", group: str = "all") -> BinnedTable:
    """Micro-census commuting table (percent shares, total unknown)."""
    kind = kind.strip().lower()
    group = group.strip().lower()
    if kind not in ("distance", "time"):
        raise ValidationError(f"kind must be 'distance' or 'time', got {kind!r}")
    if group not in COMMUTE_GROUPS:
        raise ValidationError(f"unknown group {group!r}")
    name = f"commute_{kind}_{group}.csv"
    lowers, uppers, pct = [], [], []
    for rec in csv.DictReader(_read_data(name).splitlines()):
        lowers.append(float(rec["lower"]))
        uppers.append(float(rec["upper"]))
        pct.append(float(rec["count"]))
    return validate_table(lowers + [uppers[-1]], pct, units="percent")
