"""Comparison estimators for binned tables.

Four families share one report contract (quantiles, mean, sd, IQR):

* heuristic    midpoint-weighted moments plus the classic grouped-data
               interpolation quantile, with a Pareto fallback for an
               open-ended top class;
* rcfp         the cumulative polygon (straight lines between nodes),
               whose quantiles provably coincide with the heuristic ones;
* ecdf         a step CDF that drops each class mass at its upper edge;
* kernel       a Gaussian-smoothed CDF over the midpoint pseudo-sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .binned import BinnedTable, CumulativeCurve
from .errors import ValidationError

__all__ = [
    "EstimatorReport",
    "ParetoTail",
    "midpoints",
    "linear_quantile",
    "heuristic_stats",
    "pareto_tail",
    "StepCdf",
    "ecdf_estimator",
    "KernelCdf",
    "kernel_estimator",
    "LinearCdf",
    "rcfp_estimator",
]

DEFAULT_Q_LEVELS = (0.25, 0.5, 0.75)
DEFAULT_NOMINAL_N = 1000.0


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    """Per-method summary: quantiles at the requested levels, mean, sd, IQR."""

    method: str
    q_levels: tuple[float, ...]
    quantiles: tuple[float, ...]
    mean: float
    sd: float
    iqr: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.q_levels) != len(self.quantiles):
            raise ValidationError("quantile levels and values differ in length")
        if any(b < a for a, b in zip(self.quantiles, self.quantiles[1:])):
            raise ValidationError(f"{self.method}: quantiles decrease in q")

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "quantiles": {
                _level_name(q): v for q, v in zip(self.q_levels, self.quantiles)
            },
            "mean": self.mean,
            "sd": self.sd,
            "iqr": self.iqr,
        }
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out


def _level_name(level: float) -> str:
    pct = 100.0 * level
    return f"q{pct:g}"


def _report(method, fitted, q_levels, metadata=None) -> EstimatorReport:
    qs = tuple(float(fitted.quantile(q)) for q in q_levels)
    return EstimatorReport(
        method=method,
        q_levels=tuple(float(q) for q in q_levels),
        quantiles=qs,
        mean=float(fitted.mean),
        sd=float(fitted.sd),
        iqr=float(fitted.quantile(0.75) - fitted.quantile(0.25)),
        metadata=metadata or {},
    )


# ---------------------------------------------------------------------------
# Heuristic: midpoints, grouped-data quantile formula, Pareto tail.
# ---------------------------------------------------------------------------

def midpoints(table: BinnedTable) -> np.ndarray:
    """Class midpoints (lower + upper) / 2; edges must be finite."""
    if table.is_open_ended:
        raise ValidationError("midpoints undefined for an open-ended top class")
    return 0.5 * (table.edges[:-1] + table.edges[1:])


def linear_quantile(table: BinnedTable, q: float) -> float:
    """Grouped-data interpolation quantile.

    Locates the first class whose cumulative share reaches q and
    interpolates linearly inside it; a zero-frequency target class
    resolves to its lower boundary (leftmost solution).  Works from
    proportions, so an unknown total is fine.
    """
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"quantile level {q!r} outside [0, 1]")
    p = table.proportions
    cum = np.minimum(np.cumsum(p), 1.0)
    cum[-1] = 1.0
    j = int(np.searchsorted(cum, q, side="left"))
    if p[j] == 0.0:
        return float(table.edges[j])
    if cum[j] == q:
        return float(table.edges[j + 1])
    below = cum[j - 1] if j else 0.0
    width = table.edges[j + 1] - table.edges[j]
    return float(table.edges[j] + (q - below) / p[j] * width)


def heuristic_stats(
    table: BinnedTable,
    q_levels=DEFAULT_Q_LEVELS,
    population_sd: bool = True,
) -> EstimatorReport:
    """Midpoint-mass moments plus interpolation quantiles.

    For an open-ended top class the last midpoint is replaced by the
    robust Pareto tail point; all other classes keep (lower + upper) / 2.
    """
    p = table.proportions
    meta: dict = {"sd_form": "population" if population_sd else "sample"}
    if table.is_open_ended:
        tail = pareto_tail(table)
        mids = 0.5 * (table.edges[:-2] + table.edges[1:-1])
        mids = np.append(mids, tail.rpme_point)
        meta["tail_point"] = tail.rpme_point
        meta["tail_gamma"] = tail.gamma_hat
    else:
        mids = midpoints(table)
    mean = float(np.dot(p, mids))
    var = float(np.dot(p, (mids - mean) ** 2))
    if not population_sd:
        if table.n is None:
            raise ValidationError("sample sd needs a known total count")
        var *= table.n / (table.n - 1.0)
    qs = tuple(linear_quantile(table, q) for q in q_levels)
    return EstimatorReport(
        method="H",
        q_levels=tuple(float(q) for q in q_levels),
        quantiles=qs,
        mean=mean,
        sd=math.sqrt(var),
        iqr=linear_quantile(table, 0.75) - linear_quantile(table, 0.25),
        metadata=meta,
    )


@dataclass(frozen=True)
class ParetoTail:
    """Pareto shape estimate for the top class and the two tail points."""

    gamma_hat: float
    pme_point: float | None
    rpme_point: float

    def __post_init__(self):
        if not self.gamma_hat > 0.0:
            raise ValidationError(f"tail shape must be positive, got {self.gamma_hat!r}")


def pareto_tail(table: BinnedTable) -> ParetoTail:
    """Estimate the top class under a Pareto tail assumption.

    The shape comes from the ratio of the last two frequencies against
    the ratio of the two thresholds below the top class.  The arithmetic
    tail point exists only for shape > 1; the harmonic (robust) point
    always does.
    """
    if table.r < 3:
        raise ValidationError("Pareto tail needs at least three classes")
    eta = table.counts
    if eta[-1] <= 0:
        raise ValidationError("top class has zero frequency")
    if eta[-2] <= 0:
        raise ValidationError("class below the top has zero frequency")
    t_prev, t_prev2 = table.edges[-2], table.edges[-3]
    if t_prev2 <= 0:
        raise ValidationError(
            f"threshold below the tail must be positive, got {t_prev2!r}"
        )
    gamma = math.log((eta[-2] + eta[-1]) / eta[-1]) / math.log(t_prev / t_prev2)
    pme = float(t_prev * gamma / (gamma - 1.0)) if gamma > 1.0 else None
    rpme = float(t_prev * (1.0 + 1.0 / gamma))
    return ParetoTail(gamma_hat=gamma, pme_point=pme, rpme_point=rpme)


# ---------------------------------------------------------------------------
# Step CDF: all class mass at the upper edge.
# ---------------------------------------------------------------------------

class StepCdf:
    """Binned empirical CDF, jumping by each class share at its upper edge."""

    def __init__(self, table: BinnedTable):
        if table.is_open_ended:
            raise ValidationError("step CDF requires a finite upper edge")
        self.atoms = table.edges[1:]
        self.masses = table.proportions
        self._cum = np.minimum(np.cumsum(self.masses), 1.0)
        self._cum[-1] = 1.0
        self.mean = float(np.dot(self.masses, self.atoms))
        self.sd = float(
            np.sqrt(np.dot(self.masses, (self.atoms - self.mean) ** 2))
        )

    def cdf(self, tau):
        t = np.asarray(tau, dtype=float)
        idx = np.searchsorted(self.atoms, t, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, tau):
        # point masses have no density; exported grids carry zeros
        t = np.asarray(tau, dtype=float)
        out = np.zeros_like(t)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q: float) -> float:
        q = float(q)
        if not 0.0 <= q <= 1.0:
            raise ValidationError(f"quantile level {q!r} outside [0, 1]")
        j = int(np.searchsorted(self._cum, q, side="left"))
        return float(self.atoms[j])


def ecdf_estimator(table: BinnedTable, q_levels=DEFAULT_Q_LEVELS) -> EstimatorReport:
    step = StepCdf(table)
    return _report("E", step, q_levels, {"mass_at": "upper_edge"})


# ---------------------------------------------------------------------------
# Kernel CDF over the midpoint pseudo-sample.
# ---------------------------------------------------------------------------

class KernelCdf:
    """Gaussian-kernel CDF built on midpoints weighted by class mass.

    Conceptually each midpoint is repeated as often as its class count
    (a nominal total stands in when only proportions are known); the
    weighted form below is the same sum collapsed over duplicates.
    The bandwidth follows the usual rule of thumb
    0.9 * min(sd, IQR/1.34) * n**(-1/5) on the pseudo-sample, with a
    bin-width fallback when the sample is degenerate.
    """

    def __init__(
        self,
        table: BinnedTable,
        bandwidth: float | None = None,
        nominal_n: float = DEFAULT_NOMINAL_N,
    ):
        self.points = midpoints(table)
        self.n = float(table.n) if table.n is not None else float(nominal_n)
        if self.n <= 1:
            raise ValidationError(f"kernel total must exceed 1, got {self.n!r}")
        self.weights = table.proportions * self.n
        self.degenerate = False
        wmean = float(np.dot(table.proportions, self.points))
        wvar = float(np.dot(table.proportions, (self.points - wmean) ** 2))
        if bandwidth is not None:
            if not bandwidth > 0.0:
                raise ValidationError(f"bandwidth must be positive, got {bandwidth!r}")
            self.bandwidth = float(bandwidth)
        else:
            self.bandwidth = self._silverman(table, wvar)
        self.mean = wmean
        self.sd = math.sqrt(wvar + self.bandwidth**2)

    def _silverman(self, table: BinnedTable, wvar: float) -> float:
        sd = math.sqrt(wvar)
        iqr = self._discrete_quantile(0.75) - self._discrete_quantile(0.25)
        lo = min(sd, iqr / 1.34)
        if lo == 0.0:
            lo = sd
        if lo == 0.0:
            # all mass in a single class: fall back to its width
            j = int(np.argmax(table.proportions))
            self.degenerate = True
            return float(table.widths[j]) / 4.0
        return 0.9 * lo * self.n ** (-0.2)

    def _discrete_quantile(self, q: float) -> float:
        cum = np.cumsum(self.weights)
        j = int(np.searchsorted(cum, q * self.n, side="left"))
        return float(self.points[min(j, len(self.points) - 1)])

    def cdf(self, tau):
        t = np.asarray(tau, dtype=float)
        z = (t[..., None] - self.points) / self.bandwidth
        out = ndtr(z) @ self.weights / self.n
        return float(out) if out.ndim == 0 else out

    def pdf(self, tau):
        t = np.asarray(tau, dtype=float)
        z = (t[..., None] - self.points) / self.bandwidth
        dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        out = dens @ self.weights / (self.n * self.bandwidth)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q: float) -> float:
        q = float(q)
        if not 0.0 < q < 1.0:
            raise ValidationError(
                f"kernel quantile level must be inside (0, 1), got {q!r}"
            )
        span = 20.0 * self.bandwidth
        lo = float(self.points.min()) - span
        hi = float(self.points.max()) + span
        while self.cdf(lo) > q:
            lo -= span
        while self.cdf(hi) < q:
            hi += span
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            g = self.cdf(mid) - q
            if abs(g) <= 1e-10:
                return mid
            if g >= 0.0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)


def kernel_estimator(
    table: BinnedTable,
    q_levels=DEFAULT_Q_LEVELS,
    bandwidth: float | None = None,
    nominal_n: float = DEFAULT_NOMINAL_N,
) -> EstimatorReport:
    kern = KernelCdf(table, bandwidth=bandwidth, nominal_n=nominal_n)
    meta = {
        "kernel": "gaussian",
        "bandwidth": kern.bandwidth,
        "bandwidth_rule": "given" if bandwidth is not None else "silverman",
        "pseudo_n": kern.n,
    }
    if kern.degenerate:
        meta["degenerate_fallback"] = True
    return _report("K", kern, q_levels, meta)


# ---------------------------------------------------------------------------
# Cumulative polygon (straight lines through the curve nodes).
# ---------------------------------------------------------------------------

class LinearCdf:
    """Piecewise-linear CDF through the cumulative nodes.

    The implied density is constant within each interval, so the moments
    have closed forms and the quantiles invert segment by segment.
    """

    def __init__(self, curve: CumulativeCurve):
        self.taus = curve.taus
        self.values = curve.values
        mass = np.diff(curve.values)
        left, right = curve.taus[:-1], curve.taus[1:]
        self.mean = float(np.dot(mass, 0.5 * (left + right)))
        second = float(np.dot(mass, (left * left + left * right + right * right) / 3.0))
        self.sd = math.sqrt(max(second - self.mean**2, 0.0))

    def cdf(self, tau):
        t = np.asarray(tau, dtype=float)
        out = np.interp(t, self.taus, self.values)
        return float(out) if out.ndim == 0 else out

    def pdf(self, tau):
        t = np.asarray(tau, dtype=float)
        j = np.clip(
            np.searchsorted(self.taus, t, side="right") - 1,
            0,
            len(self.taus) - 2,
        )
        dens = np.diff(self.values) / np.diff(self.taus)
        inside = (t >= self.taus[0]) & (t <= self.taus[-1])
        out = np.where(inside, dens[j], 0.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q: float) -> float:
        q = float(q)
        if not 0.0 <= q <= 1.0:
            raise ValidationError(f"quantile level {q!r} outside [0, 1]")
        idx = int(np.searchsorted(self.values, q, side="left"))
        if idx == 0:
            return float(self.taus[0])
        if self.values[idx] == q:
            return float(self.taus[idx])
        f_lo, f_hi = self.values[idx - 1], self.values[idx]
        t_lo, t_hi = self.taus[idx - 1], self.taus[idx]
        return float(t_lo + (q - f_lo) / (f_hi - f_lo) * (t_hi - t_lo))


def rcfp_estimator(curve: CumulativeCurve, q_levels=DEFAULT_Q_LEVELS) -> EstimatorReport:
    return _report("R", LinearCdf(curve), q_levels, {"density": "piecewise_constant"})
