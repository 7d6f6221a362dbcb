"""Per-slot maximum utility under a zero-truncated Poisson request count."""

from __future__ import annotations

import math
from functools import cached_property, lru_cache

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError
from .quadrature import DEFAULT_TOL, adaptive_gk

__all__ = [
    "zt_poisson_pmf",
    "zt_poisson_mean",
    "zt_poisson_sample",
    "MaxUtilityDistribution",
    "DiscreteMaxDistribution",
    "max_distribution",
]

ANTIDERIVATIVE_TOL = 1e-6


def _check_rate(lam):
    if not (isinstance(lam, (int, float, np.floating)) and math.isfinite(lam) and lam > 0):
        raise DomainError(f"mean request count must be positive, got {lam!r}")


def zt_poisson_pmf(lam: float, k: int) -> float:
    """``P(K = k | K > 0)`` for ``K ~ Poisson(lam)``."""
    _check_rate(lam)
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    log_p = -lam + k * math.log(lam) - math.lgamma(k + 1) - math.log(-math.expm1(-lam))
    return math.exp(log_p)


def zt_poisson_mean(lam: float) -> float:
    _check_rate(lam)
    return lam / -math.expm1(-lam)


@lru_cache(maxsize=64)
def _zt_cdf_table(lam: float) -> np.ndarray:
    k_max = int(lam + 12.0 * math.sqrt(lam) + 40.0)
    k = np.arange(1, k_max + 1)
    log_p = -lam + k * math.log(lam) - gammaln(k + 1) - math.log(-math.expm1(-lam))
    cdf = np.cumsum(np.exp(log_p))
    cdf /= cdf[-1]
    cdf.setflags(write=False)
    return cdf


def zt_poisson_sample(lam: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draws from the zero-truncated Poisson law."""
    _check_rate(lam)
    cdf = _zt_cdf_table(float(lam))
    u = rng.random(size)
    k = np.searchsorted(cdf, u, side="right") + 1
    return int(k) if size is None else k


class MaxUtilityDistribution:
    """Law of the largest utility among ``K >= 1`` i.i.d. requests.

    With ``F``/``f`` the single-request CDF/pdf and ``K`` zero-truncated
    Poisson(``lam``), summing the conditional laws ``F**k`` over ``k`` gives

        cdf(z) = (exp(lam * F(z)) - 1) / (exp(lam) - 1)
        pdf(z) = lam * f(z) * exp(lam * (F(z) - 1)) / (1 - exp(-lam))

    Both are evaluated in overflow-free form.  On construction the pdf is
    integrated between probe points and checked against cdf increments.
    """

    def __init__(self, lam: float, base, tol: float = DEFAULT_TOL, verify: bool = True):
        _check_rate(lam)
        self.lam = float(lam)
        self.base = base
        self.tol = tol
        self._norm = -math.expm1(-self.lam)
        if verify:
            self.verify_antiderivative()

    @property
    def support(self):
        return self.base.support

    @property
    def grid(self):
        return self.base.grid

    def cdf(self, z):
        F = np.asarray(self.base.cdf(z), dtype=float)
        out = np.exp(self.lam * (F - 1.0)) * -np.expm1(-self.lam * F) / self._norm
        return out if out.ndim else float(out)

    def pdf(self, z):
        F = np.asarray(self.base.cdf(z), dtype=float)
        f = np.asarray(self.base.pdf(z), dtype=float)
        out = self.lam * f * np.exp(self.lam * (F - 1.0)) / self._norm
        return out if out.ndim else float(out)

    def expect(self, g, lower=None, upper=None, tol=None) -> float:
        """``integral of g(z) * pdf(z)`` over ``[lower, upper]`` (clipped to support)."""
        lo, hi = self.support
        a = lo if lower is None else min(max(lower, lo), hi)
        b = hi if upper is None else min(max(upper, lo), hi)
        if b <= a:
            return 0.0
        grid = self.grid
        edges = np.concatenate([[a], grid[(grid > a) & (grid < b)], [b]])
        value, _ = adaptive_gk(lambda z: g(z) * self.pdf(z), edges, tol=self.tol if tol is None else tol)
        return value

    @cached_property
    def mean(self) -> float:
        return self.expect(lambda z: z)

    def quantile(self, q: float) -> float:
        lo, hi = self.support
        return optimize.brentq(lambda z: self.cdf(z) - q, lo, hi, xtol=1e-14)

    def verify_antiderivative(self, n_probe: int = 64) -> float:
        lo, hi = self.support
        probes = np.linspace(lo, hi, n_probe)
        worst = 0.0
        for a, b in zip(probes[:-1], probes[1:]):
            increment = self.expect(lambda z: np.ones_like(z), a, b, tol=1e-12)
            worst = max(worst, abs(increment - (self.cdf(b) - self.cdf(a))))
        if worst > ANTIDERIVATIVE_TOL:
            raise ConvergenceError(
                f"closed CDF is not the antiderivative of the pdf: gap {worst:.3e}"
            )
        return worst


class DiscreteMaxDistribution:
    """Finitely supported slot-maximum law, for exact tests of the DP."""

    def __init__(self, atoms, probs):
        pairs = sorted(zip(atoms, probs))
        if not pairs:
            raise DomainError("need at least one atom")
        if any(p < 0 for _, p in pairs) or sum(p for _, p in pairs) != 1:
            raise DomainError("atom probabilities must be nonnegative and sum to 1")
        self.atoms = [a for a, _ in pairs]
        self.probs = [p for _, p in pairs]

    @property
    def support(self):
        return self.atoms[0], self.atoms[-1]

    def cdf(self, z):
        return sum(p for a, p in zip(self.atoms, self.probs) if a <= z)

    def prob_below(self, z):
        return sum(p for a, p in zip(self.atoms, self.probs) if a < z)

    def expect(self, g, lower=None, upper=None, tol=None):
        return sum(
            g(a) * p
            for a, p in zip(self.atoms, self.probs)
            if (lower is None or a >= lower) and (upper is None or a <= upper)
        )

    @property
    def mean(self):
        return self.expect(lambda z: z)


def max_distribution(lam: float, base, tol: float = DEFAULT_TOL) -> MaxUtilityDistribution:
    return MaxUtilityDistribution(lam, base, tol=tol)
