"""Monte Carlo estimators built on streams of score pairs.

A score pair couples one draw of the statistic ``F`` with the draw of the
representation integrand ``H`` whose conditional expectation given ``F``
is minus the score of ``F``.  From pairs we estimate the squared-difference
upper bound, a binned nonparametric score, the plug-in Fisher information
distance, the indicator-weighted density, and log-log convergence rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import GuardDominated, InsufficientData, InvalidInput

GUARDED_FRACTION_LIMIT = 0.01


@dataclass(frozen=True)
class ScorePair:
    """One Monte Carlo draw of ``(F, H)`` plus its normalizing statistic.

    Guarded draws (normalizer below the division guard) carry no ``h_value``.
    """

    f_value: float
    h_value: Optional[float]
    aux: float
    guarded: bool = False

    def __post_init__(self):
        if self.guarded and self.h_value is not None:
            raise InvalidInput("guarded draws must not carry an h_value")
        if not self.guarded and self.h_value is None:
            raise InvalidInput("unguarded draws require an h_value")


class ScoreSample:
    """Column store of score pairs; the batch form all estimators consume."""

    def __init__(self, f, h, aux, guarded):
        self.f = np.asarray(f, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.aux = np.asarray(aux, dtype=float)
        self.guarded = np.asarray(guarded, dtype=bool)
        if not (self.f.shape == self.h.shape == self.aux.shape == self.guarded.shape):
            raise InvalidInput("score sample columns must share one shape")

    @classmethod
    def from_pairs(cls, pairs: Iterable[ScorePair]) -> "ScoreSample":
        pairs = list(pairs)
        f = [p.f_value for p in pairs]
        h = [math.nan if p.guarded else p.h_value for p in pairs]
        aux = [p.aux for p in pairs]
        g = [p.guarded for p in pairs]
        return cls(f, h, aux, g)

    @classmethod
    def concat(cls, samples) -> "ScoreSample":
        return cls(
            np.concatenate([s.f for s in samples]),
            np.concatenate([s.h for s in samples]),
            np.concatenate([s.aux for s in samples]),
            np.concatenate([s.guarded for s in samples]),
        )

    def __len__(self) -> int:
        return self.f.size

    def __iter__(self):
        for i in range(len(self)):
            g = bool(self.guarded[i])
            yield ScorePair(
                f_value=float(self.f[i]),
                h_value=None if g else float(self.h[i]),
                aux=float(self.aux[i]),
                guarded=g,
            )

    @property
    def guarded_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.guarded.mean())

    @property
    def n_unguarded(self) -> int:
        return int((~self.guarded).sum())

    def unguarded(self):
        ok = ~self.guarded
        return self.f[ok], self.h[ok]

    def split_half(self):
        """First half / second half, in draw order (split-sample discipline)."""
        mid = len(self) // 2
        a = ScoreSample(self.f[:mid], self.h[:mid], self.aux[:mid], self.guarded[:mid])
        b = ScoreSample(self.f[mid:], self.h[mid:], self.aux[mid:], self.guarded[mid:])
        return a, b


def as_sample(pairs) -> ScoreSample:
    if isinstance(pairs, ScoreSample):
        return pairs
    return ScoreSample.from_pairs(pairs)


def _checked(pairs, minimum: int) -> ScoreSample:
    sample = as_sample(pairs)
    if sample.guarded_fraction > GUARDED_FRACTION_LIMIT:
        raise GuardDominated(
            f"guarded fraction {sample.guarded_fraction:.4f} exceeds "
            f"{GUARDED_FRACTION_LIMIT:.2%}")
    if sample.n_unguarded < minimum:
        raise InsufficientData(
            f"need at least {minimum} unguarded pairs, have {sample.n_unguarded}")
    return sample


def fisher_distance_upper(pairs):
    """Sample mean and standard error of ``(H - F)^2``; the upper bound.

    Returns ``(estimate, standard_error, guarded_fraction)``.
    """
    sample = _checked(pairs, 10 ** 3)
    f, h = sample.unguarded()
    sq = (h - f) ** 2
    est = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else 0.0
    return est, se, sample.guarded_fraction


@dataclass(frozen=True)
class BinConfig:
    bins: int = 64
    min_count: int = 50


@dataclass(frozen=True)
class BinnedScore:
    """Equal-mass binned estimate of the score ``rho(x) = -E[H | F = x]``."""

    bin_edges: np.ndarray
    bin_means: np.ndarray
    bin_counts: np.ndarray
    min_count: int

    def evaluate(self, x):
        """Piecewise-constant score; points outside clamp to the end bins."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.bin_edges[1:-1], x, side="right"),
                      0, self.bin_means.size - 1)
        return self.bin_means[idx]


def fit_score(pairs, bin_config: BinConfig = BinConfig()) -> BinnedScore:
    """Equal-mass binning of ``-H`` on ``F``; bins under ``min_count`` merge."""
    sample = _checked(pairs, 10 ** 4)
    f, h = sample.unguarded()
    order = np.argsort(f, kind="stable")
    fs, hs = f[order], -h[order]
    n = fs.size
    bins = max(1, int(bin_config.bins))
    cut = np.round(np.linspace(0, n, bins + 1)).astype(int)
    cut = np.unique(cut)

    # Merge runs whose count falls under min_count into their left neighbor.
    keep = [0]
    for i in range(1, cut.size - 1):
        if cut[i] - cut[keep[-1]] >= bin_config.min_count:
            keep.append(i)
    keep.append(cut.size - 1)
    cut = cut[np.unique(keep)]
    # the trailing bin may still be short; fold it into its neighbor
    while cut.size > 2 and cut[-1] - cut[-2] < bin_config.min_count:
        cut = np.delete(cut, -2)
    counts = np.diff(cut)

    sums = np.add.reduceat(hs, cut[:-1])
    means = sums / counts
    edges = np.concatenate(([fs[0]], fs[np.minimum(cut[1:-1], n - 1)], [fs[-1]]))
    # Guarantee strictly increasing edges even with tied f draws.
    for i in range(1, edges.size):
        if edges[i] <= edges[i - 1]:
            edges[i] = np.nextafter(edges[i - 1], np.inf)
    return BinnedScore(bin_edges=edges, bin_means=means,
                       bin_counts=counts, min_count=bin_config.min_count)


def fisher_distance_plugin(pairs, score: BinnedScore):
    """Plug-in estimate ``mean (rho_hat(F) + F)^2`` on held-out pairs.

    The caller must have fitted ``score`` on an independent half of the
    draws; :func:`plugin_split` packages that discipline.
    """
    sample = _checked(pairs, 10 ** 3)
    f, _ = sample.unguarded()
    sq = (score.evaluate(f) + f) ** 2
    est = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else 0.0
    return est, se


def plugin_split(pairs, bin_config: BinConfig = BinConfig()):
    """Fit the score on the first half, evaluate the plug-in on the second.

    Returns ``(estimate, standard_error, score)``.
    """
    sample = as_sample(pairs)
    fit_half, eval_half = sample.split_half()
    score = fit_score(fit_half, bin_config)
    est, se = fisher_distance_plugin(eval_half, score)
    return est, se, score


@dataclass(frozen=True)
class DensityEstimate:
    """Indicator-weighted density estimate with a histogram comparator."""

    x_grid: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    hist_values: np.ndarray
    hist_std_errors: np.ndarray


def density_representation(pairs, x_grid) -> DensityEstimate:
    """Estimate the density of ``F`` as ``mean(1{F > x} * H)`` on a grid."""
    sample = _checked(pairs, 10 ** 4)
    f, h = sample.unguarded()
    grid = np.asarray(x_grid, dtype=float)
    m = f.size
    values = np.empty(grid.size)
    ses = np.empty(grid.size)
    for j, x in enumerate(grid):
        w = np.where(f > x, h, 0.0)
        values[j] = w.mean()
        ses[j] = w.std(ddof=1) / math.sqrt(m)

    # Histogram comparator on cells centered at the grid points.
    mids = 0.5 * (grid[1:] + grid[:-1])
    edges = np.concatenate((
        [grid[0] - (mids[0] - grid[0])], mids,
        [grid[-1] + (grid[-1] - mids[-1])],
    ))
    counts, _ = np.histogram(f, bins=edges)
    widths = np.diff(edges)
    hist = counts / (m * widths)
    hist_se = np.sqrt(np.maximum(counts, 1.0)) / (m * widths)
    return DensityEstimate(x_grid=grid, values=values, std_errors=ses,
                           hist_values=hist, hist_std_errors=hist_se)


@dataclass(frozen=True)
class RateFit:
    """Ordinary least squares of ``log error`` on ``log n``."""

    n_values: tuple
    error_values: tuple
    slope: float
    intercept: float
    r_squared: float


def fit_rate(n_values, error_values) -> RateFit:
    n_values = np.asarray(n_values, dtype=float)
    error_values = np.asarray(error_values, dtype=float)
    if n_values.size != error_values.size:
        raise InvalidInput("n_values and error_values must align")
    if n_values.size < 4:
        raise InvalidInput("rate fits need at least 4 grid points")
    if np.any(error_values <= 0.0) or np.any(n_values <= 0.0):
        raise InvalidInput("rate fits require positive n and error values")
    lx = np.log(n_values)
    ly = np.log(error_values)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(((ly - pred) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(
        n_values=tuple(float(v) for v in n_values),
        error_values=tuple(float(v) for v in error_values),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
    )
