"""Shared fuzz generators for the test suite (all seeded, no global state)."""

import numpy as np
import pytest

from bincdf.binned import BinnedTable, CumulativeCurve


def fuzz_curve(rng: np.random.Generator, max_nodes: int = 13) -> CumulativeCurve:
    """Random monotone curve: moderate scales, occasional flat stretches."""
    k = int(rng.integers(2, max_nodes))
    gaps = rng.uniform(0.01, 10.0, k - 1)
    taus = rng.uniform(-100.0, 100.0) + np.concatenate(([0.0], np.cumsum(gaps)))
    incs = rng.uniform(0.0, 1.0, k - 1)
    incs[rng.random(k - 1) < 0.25] = 0.0
    if incs.sum() == 0.0:
        incs[int(rng.integers(0, k - 1))] = 1.0
    values = np.concatenate(([0.0], np.cumsum(incs)))
    values = values / values[-1]
    values[-1] = 1.0
    return CumulativeCurve(taus, values)


def fuzz_table(rng: np.random.Generator, max_bins: int = 9) -> BinnedTable:
    """Random table with positive edges and occasional empty classes."""
    k = int(rng.integers(2, max_bins))
    gaps = rng.uniform(0.05, 10.0, k)
    edges = rng.uniform(0.1, 5.0) + np.concatenate(([0.0], np.cumsum(gaps)))
    counts = rng.uniform(0.0, 50.0, k)
    counts[rng.random(k) < 0.2] = 0.0
    if counts.sum() == 0.0:
        counts[int(rng.integers(0, k))] = 1.0
    return BinnedTable(edges, counts, n=float(counts.sum()))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20220913)
