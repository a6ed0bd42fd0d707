"""Parametric generators used as ground truth in the simulation study.

Four families: normal(mean, sd), gamma(shape, scale), gev(loc, scale,
shape) restricted to shape 0 (Gumbel), and triangular(min, max, mode).
Each carries a finite binning range; sampling rejects and redraws values
outside it, while the theoretical functionals stay those of the
untruncated family so estimates are always judged against the intended
target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, ndtr, ndtri

from .errors import NumericalError, ValidationError

__all__ = ["DistributionSpec", "parse_spec", "sample", "theoretical"]

FAMILIES = ("normal", "gamma", "gev", "triangular")


@dataclass(frozen=True)
class DistributionSpec:
    """One parametric family plus the finite range used for binning."""

    family: str
    params: tuple[float, ...]
    bin_range: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(
            self, "bin_range", tuple(float(b) for b in self.bin_range)
        )
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        lo, hi = self.bin_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"range must be finite and ordered, got {self.bin_range!r}")
        p = self.params
        if self.family == "normal":
            _expect(len(p) == 2, "normal takes (mean, sd)")
            _expect(p[1] > 0, "normal sd must be positive")
        elif self.family == "gamma":
            _expect(len(p) == 2, "gamma takes (shape, scale)")
            _expect(p[0] > 0 and p[1] > 0, "gamma shape and scale must be positive")
        elif self.family == "gev":
            _expect(len(p) == 3, "gev takes (loc, scale, shape)")
            _expect(p[1] > 0, "gev scale must be positive")
            _expect(p[2] == 0, "only the shape-0 (Gumbel) branch is supported")
        elif self.family == "triangular":
            _expect(len(p) == 3, "triangular takes (min, max, mode)")
            _expect(p[0] < p[1], "triangular needs min < max")
            _expect(p[0] <= p[2] <= p[1], "triangular mode must lie in [min, max]")

    # -- theoretical functionals ---------------------------------------

    def cdf(self, tau):
        t = np.asarray(tau, dtype=float)
        p = self.params
        if self.family == "normal":
            out = ndtr((t - p[0]) / p[1])
        elif self.family == "gamma":
            out = gammainc(p[0], np.maximum(t, 0.0) / p[1])
        elif self.family == "gev":
            out = np.exp(-np.exp(-(t - p[0]) / p[1]))
        else:
            a, b, c = p
            with np.errstate(divide="ignore", invalid="ignore"):
                rising = (t - a) ** 2 / ((b - a) * (c - a))
                falling = 1.0 - (b - t) ** 2 / ((b - a) * (b - c))
            out = np.select([t <= a, t <= c, t < b], [0.0, rising, falling], 1.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        qq = np.asarray(q, dtype=float)
        if (qq < 0).any() or (qq > 1).any():
            raise ValidationError("quantile level outside [0, 1]")
        p = self.params
        with np.errstate(divide="ignore"):
            if self.family == "normal":
                out = p[0] + p[1] * ndtri(qq)
            elif self.family == "gamma":
                out = p[1] * gammaincinv(p[0], qq)
            elif self.family == "gev":
                out = p[0] - p[1] * np.log(-np.log(qq))
            else:
                a, b, c = p
                split = (c - a) / (b - a)
                out = np.where(
                    qq <= split,
                    a + np.sqrt(qq * (b - a) * (c - a)),
                    b - np.sqrt((1.0 - qq) * (b - a) * (b - c)),
                )
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        p = self.params
        if self.family == "normal":
            return p[0]
        if self.family == "gamma":
            return p[0] * p[1]
        if self.family == "gev":
            return p[0] + p[1] * np.euler_gamma
        a, b, c = p
        return (a + b + c) / 3.0

    def sd(self) -> float:
        p = self.params
        if self.family == "normal":
            return p[1]
        if self.family == "gamma":
            return math.sqrt(p[0]) * p[1]
        if self.family == "gev":
            return p[1] * math.pi / math.sqrt(6.0)
        a, b, c = p
        return math.sqrt((a * a + b * b + c * c - a * b - a * c - b * c) / 18.0)

    def label(self) -> str:
        """Round-trippable text form, e.g. ``normal:3,1@0:10``."""
        params = ",".join(f"{v:g}" for v in self.params)
        lo, hi = self.bin_range
        return f"{self.family}:{params}@{lo:g}:{hi:g}"


def _expect(cond: bool, msg: str):
    if not cond:
        raise ValidationError(msg)


def parse_spec(text: str) -> DistributionSpec:
    """Parse ``family:param,param[,param]@lo:hi``."""
    try:
        head, rng = text.strip().split("@")
        family, params = head.split(":")
        lo, hi = rng.split(":")
        return DistributionSpec(
            family=family.strip(),
            params=tuple(float(v) for v in params.split(",")),
            bin_range=(float(lo), float(hi)),
        )
    except ValueError as exc:
        raise ValidationError(
            f"cannot parse distribution {text!r}: expected "
            "family:param,param[,param]@lo:hi"
        ) from exc


def _drawer(spec: DistributionSpec):
    p = spec.params
    if spec.family == "normal":
        return lambda rng, size: rng.normal(p[0], p[1], size)
    if spec.family == "gamma":
        return lambda rng, size: rng.gamma(p[0], p[1], size)
    if spec.family == "gev":
        return lambda rng, size: rng.gumbel(p[0], p[1], size)
    a, b, c = p
    return lambda rng, size: rng.triangular(a, c, b, size)


def sample(spec: DistributionSpec, n: int, seed: int, truncate: bool = True) -> np.ndarray:
    """Draw n values, redrawing any that fall outside the binning range.

    Deterministic for a fixed seed (PCG64).  ``truncate=False`` skips the
    rejection step, e.g. for goodness-of-fit checks against the
    untruncated family.
    """
    if n < 1:
        raise ValidationError(f"sample size must be at least 1, got {n!r}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    draw = _drawer(spec)
    out = draw(rng, int(n))
    if truncate:
        lo, hi = spec.bin_range
        bad = (out < lo) | (out > hi)
        rounds = 0
        while bad.any():
            out[bad] = draw(rng, int(bad.sum()))
            bad = (out < lo) | (out > hi)
            rounds += 1
            if rounds > 10_000:
                raise NumericalError(
                    f"rejection sampling stalls for {spec.label()}; "
                    "almost no mass inside the range"
                )
    return out


def theoretical(spec: DistributionSpec, kind: str, arg: float | None = None):
    """Dispatch to the closed-form functionals: cdf, quantile, mean, sd."""
    if kind == "cdf":
        return spec.cdf(arg)
    if kind == "quantile":
        return spec.quantile(arg)
    if kind == "mean":
        return spec.mean()
    if kind == "sd":
        return spec.sd()
    raise ValidationError(f"unknown functional {kind!r}")
