"""Binned frequency tables and their cumulative curves.

A binned table records how many observations fell between consecutive
thresholds; its cumulative curve is the running total rescaled to [0, 1].
Everything downstream (spline fit, heuristics, kernel smoothing) consumes
one of these two shapes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = [
    "BinnedTable",
    "CumulativeCurve",
    "validate_table",
    "bin_sample",
    "to_cumulative",
    "augment_curve",
    "read_table_csv",
]

# A proportion vector must sum to 1 within this slack.
PROPORTION_TOL = 1e-9
# Published percentage tables are allowed to miss 100 by rounding slack.
PERCENT_SUM_WINDOW = (99.0, 101.0)


def _frozen(values) -> np.ndarray:
    out = np.array(values, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class BinnedTable:
    """Frequencies observed between consecutive thresholds.

    ``counts`` holds either raw counts or relative frequencies; ``n`` is
    the total number of observations when known and ``None`` for tables
    published only as percentages.  The final edge may be ``inf`` for an
    open-ended top class; only the midpoint/Pareto heuristics accept
    such tables.
    """

    edges: np.ndarray
    counts: np.ndarray
    n: float | None = None

    def __post_init__(self):
        edges = _frozen(self.edges)
        counts = _frozen(self.counts)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)
        if edges.ndim != 1 or counts.ndim != 1:
            raise ValidationError("edges and counts must be one-dimensional")
        if len(edges) != len(counts) + 1:
            raise ValidationError(
                f"length mismatch: {len(edges)} edges require "
                f"{len(edges) - 1} counts, got {len(counts)}"
            )
        if np.isnan(edges).any():
            idx = int(np.flatnonzero(np.isnan(edges))[0])
            raise ValidationError(f"edge at index {idx} is not a number")
        if not np.isfinite(edges[:-1]).all():
            idx = int(np.flatnonzero(~np.isfinite(edges[:-1]))[0])
            raise ValidationError(f"edge at index {idx} is not finite")
        bad = np.flatnonzero(np.diff(edges) <= 0)
        if bad.size:
            raise ValidationError(
                f"edges not strictly increasing at index {int(bad[0]) + 1}"
            )
        if not np.isfinite(counts).all():
            idx = int(np.flatnonzero(~np.isfinite(counts))[0])
            raise ValidationError(f"count at index {idx} is not finite")
        neg = np.flatnonzero(counts < 0)
        if neg.size:
            raise ValidationError(f"negative count at index {int(neg[0])}")
        if not (counts > 0).any():
            raise ValidationError("all counts are zero")
        if self.n is not None:
            object.__setattr__(self, "n", float(self.n))

    @property
    def r(self) -> int:
        """Number of classes."""
        return len(self.counts)

    @property
    def proportions(self) -> np.ndarray:
        """Counts rescaled to sum to exactly one (up to fp rounding)."""
        return self.counts / self.counts.sum()

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def is_open_ended(self) -> bool:
        return bool(np.isinf(self.edges[-1]))


@dataclass(frozen=True, eq=False)
class CumulativeCurve:
    """Node pairs (threshold, cumulative relative frequency).

    Starts at exactly 0, ends at exactly 1; thresholds strictly increase
    and the cumulative values never decrease.
    """

    taus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        taus = _frozen(self.taus)
        values = _frozen(self.values)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", values)
        if len(taus) != len(values):
            raise ValidationError("taus and values differ in length")
        if len(taus) < 2:
            raise ValidationError("a cumulative curve needs at least two nodes")
        if not np.isfinite(taus).all():
            raise ValidationError("non-finite threshold in curve")
        bad = np.flatnonzero(np.diff(taus) <= 0)
        if bad.size:
            raise ValidationError(
                f"thresholds not strictly increasing at index {int(bad[0]) + 1}"
            )
        dec = np.flatnonzero(np.diff(values) < 0)
        if dec.size:
            raise ValidationError(
                f"cumulative values decrease at index {int(dec[0]) + 1}"
            )
        if values[0] != 0.0:
            raise ValidationError("first cumulative value must be exactly 0")
        if values[-1] != 1.0:
            raise ValidationError("last cumulative value must be exactly 1")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.taus.tolist(), self.values.tolist()))

    def proportions(self) -> np.ndarray:
        """Per-interval mass recovered by differencing."""
        return np.diff(self.values)


def validate_table(edges, counts, units: str = "count", n: float | None = None) -> BinnedTable:
    """Build a validated table from raw edges and frequencies.

    ``units`` declares how ``counts`` is scaled:

    * ``"count"``       raw frequencies; total taken as their sum unless
                        ``n`` is given explicitly.
    * ``"percent"``     values near a 100 total; normalized by their sum.
    * ``"proportion"``  values summing to 1 within ``PROPORTION_TOL``.
    * ``"auto"``        proportion if the sum is within tolerance of 1,
                        percent if within the 99..101 window, else count.
    """
    arr = np.asarray(counts, dtype=float)
    total = float(arr.sum())
    if units == "auto":
        if abs(total - 1.0) <= PROPORTION_TOL:
            units = "proportion"
        elif PERCENT_SUM_WINDOW[0] <= total <= PERCENT_SUM_WINDOW[1]:
            units = "percent"
        else:
            units = "count"
    if units == "count":
        if n is None:
            n = total
        return BinnedTable(edges, arr, n=n)
    if units == "percent":
        if not (PERCENT_SUM_WINDOW[0] <= total <= PERCENT_SUM_WINDOW[1]):
            raise ValidationError(
                f"percentages sum to {total:g}, expected a total near 100"
            )
        return BinnedTable(edges, arr / total, n=n)
    if units == "proportion":
        if abs(total - 1.0) > PROPORTION_TOL:
            raise ValidationError(
                f"relative frequencies sum to {total!r}, expected 1"
            )
        return BinnedTable(edges, arr / total, n=n)
    raise ValidationError(f"unknown units {units!r}")


def bin_sample(values, edges) -> BinnedTable:
    """Tabulate raw observations against the given thresholds.

    An observation v lands in class j when edge[j-1] < v <= edge[j]; a
    value exactly at the lowest edge is kept in the first class so no
    mass is lost.  Values outside the edge range are an error.
    """
    edges = np.asarray(edges, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.size:
        if not np.isfinite(vals).all():
            raise ValidationError("sample contains non-finite values")
        lo, hi = edges[0], edges[-1]
        out = (vals < lo) | (vals > hi)
        if out.any():
            idx = int(np.flatnonzero(out)[0])
            raise ValidationError(
                f"value {vals[idx]!r} at position {idx} is outside "
                f"[{lo!r}, {hi!r}]"
            )
    idx = np.searchsorted(edges, vals, side="left") - 1
    idx = np.maximum(idx, 0)  # v == lowest edge goes to the first class
    counts = np.bincount(idx, minlength=len(edges) - 1).astype(float)
    return BinnedTable(edges, counts, n=float(vals.size))


def to_cumulative(table: BinnedTable) -> CumulativeCurve:
    """Cumulative relative frequencies at every threshold."""
    if table.is_open_ended:
        raise ValidationError(
            "cumulative curve requires a finite upper edge; supply one"
        )
    cum = np.minimum(np.cumsum(table.proportions), 1.0)
    cum[-1] = 1.0
    values = np.concatenate(([0.0], cum))
    return CumulativeCurve(table.edges, values)


def augment_curve(
    curve: CumulativeCurve,
    pseudo_nodes=(),
    new_upper: float | None = None,
    move_terminal: bool = False,
) -> CumulativeCurve:
    """Insert stabilizing pseudo nodes and/or change the upper limit.

    ``pseudo_nodes`` are (tau, value) pairs merged into the curve in
    sorted order; any pair that breaks threshold ordering or cumulative
    monotonicity is an error.  When ``new_upper`` is given it must exceed
    the current top threshold; the terminal node is either moved there
    (``move_terminal=True``) or kept, with an extra (new_upper, 1) node
    appended after it.
    """
    taus = list(curve.taus)
    values = list(curve.values)
    if new_upper is not None:
        new_upper = float(new_upper)
        if new_upper <= taus[-1]:
            raise ValidationError(
                f"new upper limit {new_upper!r} must exceed the current "
                f"top threshold {taus[-1]!r}"
            )
        if move_terminal:
            taus[-1] = new_upper
        else:
            taus.append(new_upper)
            values.append(1.0)
    for tau, val in pseudo_nodes:
        tau = float(tau)
        val = float(val)
        if tau in taus:
            raise ValidationError(f"pseudo node duplicates threshold {tau!r}")
        pos = int(np.searchsorted(taus, tau))
        taus.insert(pos, tau)
        values.insert(pos, val)
    try:
        return CumulativeCurve(taus, values)
    except ValidationError as exc:
        if pseudo_nodes:
            raise ValidationError(f"pseudo node rejected: {exc}") from exc
        raise


# ---------------------------------------------------------------------------
# CSV ingestion.  Two schemas, distinguished by header:
#   (a) lower,upper,count        one row per class
#   (b) threshold,cum_percent    cumulative percentages, needs a declared
#                                final upper limit unless the last row is 100
# ---------------------------------------------------------------------------

def read_table_csv(
    path,
    units: str = "auto",
    upper_limit: float | None = None,
) -> BinnedTable:
    """Read a binned table from CSV (UTF-8, header row, '.' decimals)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [col.strip().lower() for col in rows[0]]
    body = rows[1:]
    if header[:3] == ["lower", "upper", "count"]:
        return _read_class_rows(path, body, units, upper_limit)
    if header[:2] == ["threshold", "cum_percent"]:
        return _read_cumulative_rows(path, body, upper_limit)
    raise ValidationError(
        f"{path}: unrecognized header {header!r}; expected "
        "lower,upper,count or threshold,cum_percent"
    )


def _parse_float(path: Path, row_no: int, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"{path}: row {row_no}: bad number {text!r}") from None


def _read_class_rows(path, body, units, upper_limit) -> BinnedTable:
    lowers, uppers, counts = [], [], []
    for i, row in enumerate(body, start=2):
        if len(row) < 3:
            raise ValidationError(f"{path}: row {i}: expected 3 columns")
        lowers.append(_parse_float(path, i, row[0]))
        uppers.append(_parse_float(path, i, row[1]))
        counts.append(_parse_float(path, i, row[2]))
    if not counts:
        raise ValidationError(f"{path}: no data rows")
    for i in range(1, len(lowers)):
        if lowers[i] != uppers[i - 1]:
            raise ValidationError(
                f"{path}: classes not contiguous at row {i + 2}: "
                f"{uppers[i - 1]!r} then {lowers[i]!r}"
            )
    edges = lowers + [uppers[-1]]
    if upper_limit is not None:
        if upper_limit <= edges[-2]:
            raise ValidationError(
                f"{path}: upper limit {upper_limit!r} not above the last "
                f"lower bound {edges[-2]!r}"
            )
        edges[-1] = float(upper_limit)
    return validate_table(edges, counts, units=units)


def _read_cumulative_rows(path, body, upper_limit) -> BinnedTable:
    taus, cums = [], []
    for i, row in enumerate(body, start=2):
        if len(row) < 2:
            raise ValidationError(f"{path}: row {i}: expected 2 columns")
        taus.append(_parse_float(path, i, row[0]))
        cums.append(_parse_float(path, i, row[1]))
    if len(taus) < 2:
        raise ValidationError(f"{path}: need at least two cumulative rows")
    if cums[0] != 0.0:
        raise ValidationError(
            f"{path}: first cumulative percentage must be 0, got {cums[0]!r}"
        )
    if upper_limit is not None:
        if upper_limit <= taus[-1]:
            raise ValidationError(
                f"{path}: upper limit {upper_limit!r} not above the last "
                f"threshold {taus[-1]!r}"
            )
        taus.append(float(upper_limit))
        cums.append(100.0)
    elif cums[-1] != 100.0:
        raise ValidationError(
            f"{path}: cumulative percentages end at {cums[-1]!r}; either "
            "finish at 100 or declare a final upper limit"
        )
    props = np.diff(np.asarray(cums)) / 100.0
    return validate_table(taus, props, units="proportion")
