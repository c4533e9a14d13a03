"""Conversion ladder from a Fisher information distance to weaker metrics,
plus the empirical Kolmogorov distance used for sanity cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import InsufficientData, InvalidInput

UNIFORM_DENSITY_COEFF = 1.0 + math.sqrt(6.0 / math.pi)


@dataclass(frozen=True)
class DistanceReport:
    """Bounds implied by one Fisher information distance value.

    Bounds are never clipped at their trivial caps; vacuous ones (for now
    only a total variation above 1) are flagged in ``cap_notes`` instead.
    """

    fisher: float
    uniform_density: float
    kl: float
    wasserstein2: float
    total_variation: float
    kolmogorov_empirical: Optional[float] = None
    cap_notes: tuple = ()


def convert(fisher_value: float, *,
            kolmogorov_empirical: Optional[float] = None) -> DistanceReport:
    """Populate every downstream bound from a Fisher distance value."""
    if fisher_value < 0.0 or not math.isfinite(fisher_value):
        raise InvalidInput(f"fisher distance must be a finite nonnegative real, "
                           f"got {fisher_value!r}")
    kl = fisher_value / 2.0
    tv = math.sqrt(2.0 * kl)
    notes = []
    if tv > 1.0:
        notes.append("total_variation bound exceeds the trivial cap 1")
    return DistanceReport(
        fisher=fisher_value,
        uniform_density=UNIFORM_DENSITY_COEFF * math.sqrt(fisher_value),
        kl=kl,
        wasserstein2=2.0 * kl,
        total_variation=tv,
        kolmogorov_empirical=kolmogorov_empirical,
        cap_notes=tuple(notes),
    )


def kolmogorov_empirical(f_samples) -> float:
    """Sup distance between the empirical CDF and the standard normal CDF."""
    x = np.sort(np.asarray(f_samples, dtype=float))
    n = x.size
    if n < 10 ** 4:
        raise InsufficientData(f"need at least 1e4 samples, have {n}")
    cdf = special.ndtr(x)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))
