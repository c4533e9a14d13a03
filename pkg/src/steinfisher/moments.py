"""Moment toolbox: negative moments via the MGF integral, the normalized
negative-moment trend, the Marcinkiewicz-Zygmund bound, and the MGF bound
available when the kernel derivative is almost surely bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import DistributionSpec
from .errors import (InvalidInput, InvalidOrder, MissingKernelDerivativeBound,
                     NotIntegrable)
from .quadrature import integrate, integrate_half_line

_PROBE_POINTS = (1e3, 1e6)


@dataclass(frozen=True)
class NegMomentQuery:
    """Negative-moment computation ``E[(Y_1 + ... + Y_m)^-alpha]``.

    ``mgf_factors`` are the maps ``x -> E[exp(-x Y_k)]``; each must equal 1
    at zero and stay at or below 1 for ``x >= 0``.
    """

    alpha: float
    mgf_factors: tuple
    quadrature_tol: float = 1e-10

    def __post_init__(self):
        if self.alpha <= 0:
            raise InvalidInput("alpha must be positive")
        if not self.mgf_factors:
            raise InvalidInput("need at least one MGF factor")
        for fac in self.mgf_factors:
            at0 = float(np.asarray(fac(np.array([0.0])))[0])
            at1 = float(np.asarray(fac(np.array([1.0])))[0])
            if abs(at0 - 1.0) > 1e-9 or at1 > 1.0 + 1e-9:
                raise InvalidInput(
                    "MGF factors must equal 1 at x=0 and stay <= 1 for x >= 0")


def _log_product(factors, x: float) -> float:
    total = 0.0
    for fac in factors:
        v = float(np.asarray(fac(np.array([x])))[0])
        if v <= 0.0:
            return -math.inf
        total += math.log(v)
    return total


def negative_moment(query: NegMomentQuery) -> float:
    """Evaluate the MGF-integral form of a negative moment.

    Probes the factor product's decay at two large abscissae first; a local
    decay exponent at or below ``alpha`` means the integral diverges.
    """
    lo, hi = _PROBE_POINTS
    log_lo = _log_product(query.mgf_factors, lo)
    log_hi = _log_product(query.mgf_factors, hi)
    if math.isfinite(log_lo) and math.isfinite(log_hi):
        decay = -(log_hi - log_lo) / (math.log(hi) - math.log(lo))
        if decay <= query.alpha:
            raise NotIntegrable(
                f"factor product decays like x^-{decay:.3f}, need faster "
                f"than x^-{query.alpha:g}")
    alpha = query.alpha
    log_gamma = math.lgamma(alpha)

    def integrand(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        pos = xs > 0.0
        xp = xs[pos]
        log_prod = np.zeros_like(xp)
        live = np.ones_like(xp, dtype=bool)
        for fac in query.mgf_factors:
            vals = np.asarray(fac(xp), dtype=float)
            live &= vals > 0.0
            with np.errstate(divide="ignore"):
                log_prod = np.where(live, log_prod + np.log(np.where(vals > 0, vals, 1.0)), -np.inf)
        out[pos] = np.exp((alpha - 1.0) * np.log(xp) + log_prod - log_gamma)
        return out

    return integrate_half_line(integrand, tol=query.quadrature_tol)


@dataclass(frozen=True)
class NonnegativeLaw:
    """A nonnegative law with unit mean, described through its MGF."""

    name: str
    mgf: Callable

    @classmethod
    def constant(cls, c: float = 1.0) -> "NonnegativeLaw":
        if c <= 0:
            raise InvalidInput("constant law must be positive")
        return cls(name=f"constant({c:g})",
                   mgf=lambda x: np.exp(-c * np.asarray(x, dtype=float)))

    @classmethod
    def square_of(cls, dist: DistributionSpec, *, tol=1e-12) -> "NonnegativeLaw":
        """Law of ``X^2`` for a standardized input (so ``E[X^2] = 1``)."""
        if dist.name == "gaussian":
            return cls(name="gaussian_square",
                       mgf=lambda x: (1.0 + 2.0 * np.asarray(x, dtype=float)) ** -0.5)
        wlo, whi = dist.quad_window

        def mgf(x):
            arr = np.atleast_1d(np.asarray(x, dtype=float))
            vals = np.array([
                integrate(lambda y: np.exp(-v * y * y) * dist.density(y),
                          wlo, whi, tol=tol)
                for v in arr
            ])
            return vals if np.ndim(x) else float(vals[0])

        return cls(name=f"square_of({dist.name})", mgf=mgf)

    @classmethod
    def kernel_of(cls, dist: DistributionSpec, *, tol=1e-12) -> "NonnegativeLaw":
        """Law of ``tau(X)``, which has unit mean for standardized inputs."""
        wlo, whi = dist.quad_window

        def mgf(x):
            arr = np.atleast_1d(np.asarray(x, dtype=float))
            vals = np.array([
                integrate(lambda y: np.exp(-v * dist.tau(y)) * dist.density(y),
                          wlo, whi, tol=tol)
                for v in arr
            ])
            return vals if np.ndim(x) else float(vals[0])

        return cls(name=f"kernel_of({dist.name})", mgf=mgf)


@dataclass(frozen=True)
class TrendPoint:
    n: int
    value: Optional[float]
    note: str = ""


def ujmld_trend(law: NonnegativeLaw, alpha: float, n_grid,
                *, quadrature_tol=1e-10) -> list:
    """Normalized trend ``n^alpha E[(Y_1 + ... + Y_n)^-alpha]`` over a grid.

    Grid points where the integral diverges are skipped with a note instead
    of aborting the whole trend.
    """
    points = []
    for n in n_grid:
        n = int(n)
        query = NegMomentQuery(alpha=alpha, mgf_factors=(law.mgf,) * n,
                               quadrature_tol=quadrature_tol)
        try:
            value = negative_moment(query) * float(n) ** alpha
            points.append(TrendPoint(n=n, value=value))
        except NotIntegrable as exc:
            points.append(TrendPoint(n=n, value=None, note=str(exc)))
    return points


def mz_bound(per_coordinate_norms, mean_abs: float, p: float) -> float:
    """Right-hand side of the moment inequality
    ``||U||_p^2 <= |E U|^2 + (p - 1) sum_k ||U - E_k U||_p^2``."""
    if p < 2:
        raise InvalidOrder("the inequality needs p >= 2")
    norms = np.asarray(per_coordinate_norms, dtype=float)
    return float(mean_abs ** 2 + (p - 1.0) * (norms ** 2).sum())


@dataclass(frozen=True)
class MgfCheckPoint:
    x: float
    lhs: float
    rhs: float
    ok: bool


def mgf_bound_check(dist: DistributionSpec, x_grid, *, c: Optional[float] = None,
                    tol=1e-12) -> list:
    """Check ``E[exp(-x tau(X))] <= (1 + x c^2)^(-1/c^2)`` pointwise.

    ``c`` defaults to the catalog bound on ``|tau'|``; without a positive
    bound the criterion does not apply.  Points are reported, never
    asserted, so out-of-contract inputs simply show ``ok=False``.
    """
    if c is None:
        c = dist.kernel_form.tau_prime_bound
    if c is None or c <= 0.0:
        raise MissingKernelDerivativeBound(
            f"{dist.name} has no positive kernel-derivative bound; supply c")
    wlo, whi = dist.quad_window
    out = []
    for x in x_grid:
        x = float(x)
        lhs = integrate(lambda y: np.exp(-x * dist.tau(y)) * dist.density(y),
                        wlo, whi, tol=tol)
        rhs = (1.0 + x * c * c) ** (-1.0 / (c * c))
        out.append(MgfCheckPoint(x=x, lhs=lhs, rhs=rhs, ok=lhs <= rhs + 1e-10))
    return out
