"""Monotone interpolating cubic-spline CDF for cumulative curves.

The curve nodes are interpolated by piecewise cubics in Hermite form.
Node slopes start from the Fritsch-Butland weighted harmonic mean
(three-point one-sided formulas at the ends) and are then passed through
Hyman's monotonicity filter, which clamps each slope into the region
where the cubic pieces cannot produce spurious extrema.  The result is a
C1, non-decreasing CDF estimate whose derivative serves as the density.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .binned import CumulativeCurve
from .errors import NumericalError, ValidationError

__all__ = [
    "MonotoneCubicCdf",
    "initial_slopes",
    "hyman_filter",
    "fit",
    "cdf_eval",
    "pdf_eval",
    "quantile",
    "moments",
    "iqr",
]

QUANTILE_TOL = 1e-10
MAX_ROOT_ITER = 200


def initial_slopes(curve: CumulativeCurve) -> np.ndarray:
    """Unfiltered node slopes for the cumulative curve.

    Interior nodes use the Fritsch-Butland weighted harmonic mean of the
    two adjacent gradients, which is positive exactly when both gradients
    are, and zero when either interval is flat.  The first and last nodes
    use the standard non-centered three-point formulas.
    """
    taus, values = curve.taus, curve.values
    if len(taus) < 2:
        raise ValidationError("need at least two nodes to estimate slopes")
    h = np.diff(taus)
    m = np.diff(values) / h
    if len(taus) == 2:
        return np.array([m[0], m[0]])
    b = np.zeros(len(taus))
    b[0] = ((2.0 * h[0] + h[1]) * m[0] - h[0] * m[1]) / (h[0] + h[1])
    b[-1] = ((2.0 * h[-1] + h[-2]) * m[-1] - h[-1] * m[-2]) / (h[-1] + h[-2])
    for j in range(1, len(taus) - 1):
        if m[j - 1] * m[j] > 0.0:
            w_left = 2.0 * h[j] + h[j - 1]
            w_right = h[j] + 2.0 * h[j - 1]
            b[j] = 3.0 * (h[j - 1] + h[j]) / (w_left / m[j - 1] + w_right / m[j])
        # else: a flat or reversing neighborhood forces a zero slope
    return b


def hyman_filter(slopes, gradients) -> np.ndarray:
    """Clamp slopes so the interpolant cannot overshoot between nodes.

    For a non-decreasing curve every slope is limited to
    [0, 3 * min(adjacent gradients)]; endpoints see only their single
    neighboring gradient.  Idempotent by construction.
    """
    b = np.array(slopes, dtype=float)
    m = np.asarray(gradients, dtype=float)
    if len(b) != len(m) + 1:
        raise ValidationError(
            f"{len(b)} slopes require {len(b) - 1} gradients, got {len(m)}"
        )
    if (m < 0).any():
        raise ValidationError("gradients must be non-negative")
    hi = 3.0 * np.minimum(m[np.r_[0, : len(m)]], m[np.r_[: len(m), -1]])
    return np.clip(b, 0.0, hi)


@dataclass(frozen=True, eq=False)
class MonotoneCubicCdf:
    """Fitted piecewise-cubic CDF.

    On interval j the curve is
    ``values[j] + slopes[j]*t + quad[j]*t**2 + cubic[j]*t**3`` with
    ``t = tau - knots[j]``.  ``mesh`` and ``gradients`` are the interval
    widths and secant slopes the coefficients were built from.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    quad: np.ndarray
    cubic: np.ndarray
    mesh: np.ndarray
    gradients: np.ndarray

    def __post_init__(self):
        for name in ("knots", "values", "slopes", "quad", "cubic", "mesh", "gradients"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    # -- evaluation ---------------------------------------------------

    def _piece(self, tau: np.ndarray) -> np.ndarray:
        return np.clip(
            np.searchsorted(self.knots, tau, side="right") - 1,
            0,
            len(self.mesh) - 1,
        )

    def cdf(self, tau):
        """CDF value; 0 below the first knot, 1 above the last."""
        t = np.asarray(tau, dtype=float)
        j = self._piece(t)
        dt = t - self.knots[j]
        out = self.values[j] + dt * (
            self.slopes[j] + dt * (self.quad[j] + dt * self.cubic[j])
        )
        out = np.where(t <= self.knots[0], 0.0, out)
        out = np.where(t >= self.knots[-1], 1.0, out)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, tau):
        """Spline derivative; 0 outside the knot span, never negative."""
        t = np.asarray(tau, dtype=float)
        j = self._piece(t)
        dt = t - self.knots[j]
        out = self.slopes[j] + dt * (2.0 * self.quad[j] + 3.0 * dt * self.cubic[j])
        inside = (t >= self.knots[0]) & (t <= self.knots[-1])
        out = np.where(inside, np.maximum(out, 0.0), 0.0)
        return float(out) if out.ndim == 0 else out

    # -- inversion ----------------------------------------------------

    @cached_property
    def _lists(self):
        # plain-float copies keep the root search off the numpy scalar path
        return (
            self.knots.tolist(),
            self.values.tolist(),
            self.slopes.tolist(),
            self.quad.tolist(),
            self.cubic.tolist(),
        )

    def _piece_eval(self, j: int, tau: float) -> tuple[float, float]:
        """(value, derivative) of cubic piece j at tau."""
        knots, values, slopes, quad, cubic = self._lists
        t = tau - knots[j]
        val = values[j] + t * (slopes[j] + t * (quad[j] + t * cubic[j]))
        der = slopes[j] + t * (2.0 * quad[j] + 3.0 * t * cubic[j])
        return val, der

    def quantile(self, q: float) -> float:
        """Smallest tau in the knot span with ``cdf(tau) >= q``.

        Node hits are returned exactly; otherwise the bracketing piece is
        solved by bisection with a Newton acceleration step.  Flat
        stretches at level q resolve to their left end.
        """
        q = float(q)
        if not 0.0 <= q <= 1.0:
            raise ValidationError(f"quantile level {q!r} outside [0, 1]")
        knots, values = self._lists[0], self._lists[1]
        idx = bisect_left(values, q)
        if idx == 0:
            return knots[0]
        if values[idx] == q:
            return knots[idx]
        piece = idx - 1
        lo, hi = knots[piece], knots[piece + 1]
        for _ in range(MAX_ROOT_ITER):
            mid = 0.5 * (lo + hi)
            g, slope = self._piece_eval(piece, mid)
            g -= q
            if abs(g) <= QUANTILE_TOL:
                return mid
            if g >= 0.0:
                hi = mid
            else:
                lo = mid
            # Newton step from the midpoint, kept only if it stays bracketed
            if slope > 0.0:
                cand = mid - g / slope
                if lo < cand < hi:
                    gc, _ = self._piece_eval(piece, cand)
                    gc -= q
                    if abs(gc) <= QUANTILE_TOL:
                        return cand
                    if gc >= 0.0:
                        hi = cand
                    else:
                        lo = cand
            if hi - lo <= 4.0 * np.spacing(max(abs(lo), abs(hi))):
                return hi
        raise NumericalError(
            f"quantile search did not converge for level {q!r}"
        )

    def quantiles(self, levels) -> np.ndarray:
        return np.array([self.quantile(q) for q in levels])

    # -- functionals ----------------------------------------------------

    def mean_sd(self) -> tuple[float, float]:
        """Mean and standard deviation of the spline distribution.

        Both moment integrals have polynomial integrands per interval
        (degree 3 and 4), so they are evaluated from exact antiderivatives
        rather than quadrature.  Flat pieces carry zero density and drop
        out on their own.
        """
        mean = 0.0
        second = 0.0
        for j in range(len(self.mesh)):
            sprime = np.array(
                [self.slopes[j], 2.0 * self.quad[j], 3.0 * self.cubic[j]]
            )
            shift = np.array([self.knots[j], 1.0])  # tau = knot + t
            h = self.mesh[j]
            mean += _integral(np.convolve(shift, sprime), h)
            second += _integral(np.convolve(np.convolve(shift, shift), sprime), h)
        var = second - mean * mean
        if var < -1e-10:
            raise NumericalError(f"negative spline variance {var!r}")
        return mean, float(np.sqrt(max(var, 0.0)))

    def iqr(self) -> float:
        return self.quantile(0.75) - self.quantile(0.25)

    # -- export ---------------------------------------------------------

    def sample_grid(self, size: int = 512):
        """(tau, cdf, pdf) arrays on a uniform grid over the knot span."""
        if size < 2:
            raise ValidationError("grid size must be at least 2")
        taus = np.linspace(self.knots[0], self.knots[-1], int(size))
        return taus, self.cdf(taus), self.pdf(taus)

    def to_dict(self) -> dict:
        """JSON-ready dump of knots, values, slopes, and coefficients."""
        return {
            "knots": self.knots.tolist(),
            "values": self.values.tolist(),
            "slopes": self.slopes.tolist(),
            "quadratic": self.quad.tolist(),
            "cubic": self.cubic.tolist(),
            "mesh": self.mesh.tolist(),
            "gradients": self.gradients.tolist(),
        }


def _integral(coeffs: np.ndarray, upper: float) -> float:
    """Integrate an ascending-coefficient polynomial over [0, upper]."""
    powers = np.arange(1, len(coeffs) + 1)
    return float(np.sum(coeffs / powers * upper**powers))


def fit(curve: CumulativeCurve) -> MonotoneCubicCdf:
    """Fit the monotone cubic CDF through the curve nodes.

    Two-node curves reduce to the straight line, the only monotone cubic
    the filter admits there.
    """
    taus, values = curve.taus, curve.values
    if not np.isfinite(taus[0]) or not np.isfinite(taus[-1]):
        raise ValidationError("curve endpoints must be finite")
    h = np.diff(taus)
    if (h == 0).any():
        raise ValidationError("duplicate knots")
    m = np.diff(values) / h
    slopes = hyman_filter(initial_slopes(curve), m)
    quad = (3.0 * m - slopes[1:] - 2.0 * slopes[:-1]) / h
    cubic = (slopes[:-1] + slopes[1:] - 2.0 * m) / (h * h)
    return MonotoneCubicCdf(
        knots=taus,
        values=values,
        slopes=slopes,
        quad=quad,
        cubic=cubic,
        mesh=h,
        gradients=m,
    )


# Functional aliases mirroring the method surface.

def cdf_eval(s: MonotoneCubicCdf, tau):
    return s.cdf(tau)


def pdf_eval(s: MonotoneCubicCdf, tau):
    return s.pdf(tau)


def quantile(s: MonotoneCubicCdf, q: float) -> float:
    return s.quantile(q)


def moments(s: MonotoneCubicCdf) -> tuple[float, float]:
    return s.mean_sd()


def iqr(s: MonotoneCubicCdf) -> float:
    return s.iqr()
