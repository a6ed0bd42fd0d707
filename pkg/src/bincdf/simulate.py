"""Monte-Carlo comparison of the binned-data estimators.

Each replicate draws a fresh sample from a configured distribution, bins
it on equidistant cut-points, and extracts quantiles/mean/sd five ways:
directly from the raw sample (D) and from the binned table via the
spline (S), heuristic (H), step-CDF (E), and kernel (K) estimators.
Paired differences against the theoretical values are collected across
replicates; the summary keeps every raw difference vector so box-plot
data can be regenerated exactly.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .binned import bin_sample, to_cumulative
from .distributions import DistributionSpec, parse_spec, sample
from .errors import ValidationError
from .estimators import (
    EstimatorReport,
    ecdf_estimator,
    heuristic_stats,
    kernel_estimator,
)
from .spline import fit

__all__ = [
    "SimConfig",
    "StudySummary",
    "make_edges",
    "run_replicate",
    "paired_differences",
    "summarize",
    "run_study",
]

METHOD_ORDER = ("D", "S", "H", "E", "K")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One step of the splitmix64 avalanche mixer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def replicate_seed(master_seed: int, dist_index: int, replicate_index: int) -> int:
    """Independent 64-bit seed per (distribution, replicate) cell.

    The master seed and both indices are folded through splitmix64 one at
    a time, so any runtime can reproduce the stream from the config alone.
    """
    x = _splitmix64(int(master_seed) & _MASK64)
    x = _splitmix64(x ^ (int(dist_index) & _MASK64))
    return _splitmix64(x ^ (int(replicate_index) & _MASK64))


@dataclass(frozen=True)
class SimConfig:
    """Study layout: what to draw, how often, and how to bin it."""

    distributions: tuple[DistributionSpec, ...]
    n: int = 1000
    replicates: int = 1000
    cut_points: int = 6
    q_levels: tuple[float, ...] = (0.25, 0.5, 0.75)
    master_seed: int = 20220406

    def __post_init__(self):
        dists = tuple(
            parse_spec(d) if isinstance(d, str) else d for d in self.distributions
        )
        object.__setattr__(self, "distributions", dists)
        object.__setattr__(self, "q_levels", tuple(float(q) for q in self.q_levels))
        if not dists:
            raise ValidationError("config needs at least one distribution")
        if self.replicates < 1:
            raise ValidationError(f"replicates must be >= 1, got {self.replicates!r}")
        if self.n < 10:
            raise ValidationError(f"n must be >= 10, got {self.n!r}")
        if self.cut_points < 2:
            raise ValidationError(f"cut_points must be >= 2, got {self.cut_points!r}")

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(_metric_name(q) for q in self.q_levels) + ("mean", "sd")

    @staticmethod
    def from_dict(raw: dict) -> "SimConfig":
        known = {
            "distributions",
            "n",
            "replicates",
            "cut_points",
            "q_levels",
            "master_seed",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        if "distributions" not in raw:
            raise ValidationError("config is missing 'distributions'")
        kwargs = dict(raw)
        kwargs["distributions"] = tuple(raw["distributions"])
        if "q_levels" in kwargs:
            kwargs["q_levels"] = tuple(kwargs["q_levels"])
        return SimConfig(**kwargs)

    @staticmethod
    def from_file(path) -> "SimConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".toml":
            raw = _load_toml(text)
        else:
            raw = json.loads(text)
        return SimConfig.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "distributions": [d.label() for d in self.distributions],
            "n": self.n,
            "replicates": self.replicates,
            "cut_points": self.cut_points,
            "q_levels": list(self.q_levels),
            "master_seed": self.master_seed,
        }


def _load_toml(text: str) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text)


def _metric_name(level: float) -> str:
    return f"q{100.0 * level:g}"


def make_edges(spec: DistributionSpec, cut_points: int) -> np.ndarray:
    """Equidistant thresholds over the binning range.

    ``cut_points`` interior thresholds split the range into
    ``cut_points + 1`` classes.
    """
    if cut_points < 1:
        raise ValidationError(f"cut_points must be >= 1, got {cut_points!r}")
    lo, hi = spec.bin_range
    return np.linspace(lo, hi, cut_points + 2)


def run_replicate(
    spec: DistributionSpec,
    config: SimConfig,
    replicate_index: int,
    dist_index: int | None = None,
) -> dict[str, EstimatorReport]:
    """All five reports (D, S, H, E, K) for one seeded replicate."""
    if dist_index is None:
        dist_index = config.distributions.index(spec)
    seed = replicate_seed(config.master_seed, dist_index, replicate_index)
    values = sample(spec, config.n, seed)
    qs = config.q_levels

    direct = EstimatorReport(
        method="D",
        q_levels=qs,
        quantiles=tuple(float(v) for v in np.quantile(values, qs)),
        mean=float(values.mean()),
        sd=float(values.std()),
        iqr=float(np.quantile(values, 0.75) - np.quantile(values, 0.25)),
        metadata={"sample_quantile": "type7", "sd_form": "population"},
    )

    table = bin_sample(values, make_edges(spec, config.cut_points))
    curve = to_cumulative(table)
    cdf_fit = fit(curve)
    mean, sd = cdf_fit.mean_sd()
    spline_report = EstimatorReport(
        method="S",
        q_levels=qs,
        quantiles=tuple(cdf_fit.quantile(q) for q in qs),
        mean=mean,
        sd=sd,
        iqr=cdf_fit.iqr(),
    )
    return {
        "D": direct,
        "S": spline_report,
        "H": heuristic_stats(table, qs),
        "E": ecdf_estimator(table, qs),
        "K": kernel_estimator(table, qs),
    }


def true_values(spec: DistributionSpec, q_levels) -> dict[str, float]:
    out = {_metric_name(q): float(spec.quantile(q)) for q in q_levels}
    out["mean"] = spec.mean()
    out["sd"] = spec.sd()
    return out


def paired_differences(truth: dict[str, float], report: EstimatorReport) -> dict[str, float]:
    """Theoretical minus estimated, metric by metric."""
    est = {
        _metric_name(q): v for q, v in zip(report.q_levels, report.quantiles)
    }
    est["mean"] = report.mean
    est["sd"] = report.sd
    missing = set(truth) - set(est)
    if missing:
        raise ValidationError(f"quantile levels missing from report: {sorted(missing)}")
    return {name: truth[name] - est[name] for name in truth}


@dataclass(frozen=True, eq=False)
class StudySummary:
    """Raw paired-difference vectors plus their five-number summaries."""

    config: SimConfig
    deltas: dict = field(repr=False)  # (dist_label, method, metric) -> np.ndarray

    def vector(self, dist_label: str, method: str, metric: str) -> np.ndarray:
        return self.deltas[(dist_label, method, metric)]

    def five_number(self, dist_label: str, method: str, metric: str) -> dict[str, float]:
        v = self.vector(dist_label, method, metric)
        q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
        return {
            "min": float(q[0]),
            "q1": float(q[1]),
            "median": float(q[2]),
            "q3": float(q[3]),
            "max": float(q[4]),
        }

    def median_abs(self, dist_label: str, method: str, metric: str) -> float:
        return float(np.median(np.abs(self.vector(dist_label, method, metric))))

    def iter_cells(self):
        for spec in self.config.distributions:
            for method in METHOD_ORDER:
                for metric in self.config.metrics:
                    yield spec.label(), method, metric

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["distribution", "method", "metric", "replicate", "delta"])
        for dist, method, metric in self.iter_cells():
            for rep, delta in enumerate(self.vector(dist, method, metric)):
                writer.writerow([dist, method, metric, rep, repr(float(delta))])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        cells: dict = {}
        for dist, method, metric in self.iter_cells():
            cells.setdefault(dist, {}).setdefault(method, {})[metric] = {
                **self.five_number(dist, method, metric),
                "median_abs": self.median_abs(dist, method, metric),
            }
        return {"config": self.config.to_dict(), "summaries": cells}


def summarize(config: SimConfig, results: dict) -> StudySummary:
    """Assemble per-cell difference vectors from per-replicate results.

    ``results`` maps (dist_index, replicate_index) to the per-method
    difference dicts produced inside :func:`run_study`; aggregation is
    keyed, so arrival order never matters.
    """
    deltas: dict = {}
    for di, spec in enumerate(config.distributions):
        label = spec.label()
        for method in METHOD_ORDER:
            for metric in config.metrics:
                vec = np.array(
                    [
                        results[(di, ri)][method][metric]
                        for ri in range(config.replicates)
                    ]
                )
                deltas[(label, method, metric)] = vec
    return StudySummary(config=config, deltas=deltas)


def _replicate_cell(args) -> tuple[tuple[int, int], dict]:
    config, di, ri = args
    spec = config.distributions[di]
    truth = true_values(spec, config.q_levels)
    reports = run_replicate(spec, config, ri, dist_index=di)
    diffs = {
        method: paired_differences(truth, report)
        for method, report in reports.items()
    }
    return (di, ri), diffs


def run_study(config: SimConfig, workers: int = 1) -> StudySummary:
    """Run every (distribution, replicate) cell and summarize.

    ``workers > 1`` fans the cells out to a process pool; per-cell
    seeding plus keyed aggregation make the result identical to the
    serial run.
    """
    tasks = [
        (config, di, ri)
        for di in range(len(config.distributions))
        for ri in range(config.replicates)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_replicate_cell, tasks, chunksize=16))
    else:
        pairs = [_replicate_cell(t) for t in tasks]
    return summarize(config, dict(pairs))
