"""Request-level probability model.

A request arrives at distance ``d`` from the source with intensity ``x``;
its utility is ``z = U(x, d)``.  This module holds the distance law of a
(possibly radially non-homogeneous) Poisson point process on a disk, the
intensity laws, the two utility families, and the law of ``z``.

The law of ``z`` is always computable by integrating the intensity CDF
along the level curve ``x = z / gain(d)``; that numeric route is the
reference.  Closed forms exist for homogeneous disks and are used as a
faster route only after they agree with the reference on a probe grid.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy import optimize, special
from scipy.interpolate import CubicHermiteSpline

from .errors import ConvergenceError, DomainError
from .quadrature import DEFAULT_TOL, adaptive_gk, quad

log = logging.getLogger(__name__)

__all__ = [
    "Scenario",
    "PowerLaw",
    "ExponentialDecay",
    "ExponentialIntensity",
    "UniformIntensity",
    "ServiceRequest",
    "UtilityDistribution",
    "utility",
    "distance_cdf",
    "distance_pdf",
    "utility_distribution",
    "closed_form_available",
    "sample_request",
    "sample_requests",
    "TAIL_MASS",
    "PROBE_POINTS",
    "CLOSED_FORM_TOL",
]

TAIL_MASS = 1e-10
"""Upper-tail probability discarded when the utility support is unbounded."""

PROBE_POINTS = 64
CLOSED_FORM_TOL = 1e-4
GRID_POINTS = 1024


# ---------------------------------------------------------------------------
# Scenario and model types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Service disk and arrival process.

    ``rate`` is the arrival density per unit area per unit time, ``slot`` the
    allocation-period length.  ``radial_profile`` (optional) scales the
    density with distance from the source; ``None`` means homogeneous.
    """

    radius: float
    rate: float
    slot: float
    horizon: int
    resources: int
    radial_profile: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        for name in ("radius", "rate", "slot"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("horizon", "resources"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if self.resources > self.horizon:
            raise DomainError(
                f"resources ({self.resources}) must not exceed horizon ({self.horizon})"
            )

    @property
    def homogeneous(self) -> bool:
        return self.radial_profile is None

    @cached_property
    def profile_mass(self) -> float:
        """Integral of ``r * profile(r)`` over ``[0, R]``."""
        if self.homogeneous:
            return 0.5 * self.radius**2
        mass = quad(lambda r: r * self.radial_profile(r), 0.0, self.radius)
        if not mass > 0:
            raise DomainError("radial profile has no mass on the disk")
        return mass

    @property
    def mean_requests(self) -> float:
        """Expected number of arrivals per slot (before zero truncation)."""
        return self.slot * self.rate * 2.0 * math.pi * self.profile_mass

    @cached_property
    def _distance_table(self):
        # tabulated distance CDF for inverse-transform sampling under a profile
        grid = np.linspace(0.0, self.radius, GRID_POINTS)
        cdf = np.array([distance_cdf(self, d) for d in grid])
        cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
        cdf[-1] = 1.0
        return grid, cdf


@dataclass(frozen=True)
class PowerLaw:
    """``U(x, d) = x * (1 + d) ** -eta``."""

    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise DomainError(f"eta must be >= 0, got {self.eta!r}")

    @property
    def decays(self) -> bool:
        return self.eta > 0

    def gain(self, d):
        return (1.0 + np.asarray(d, dtype=float)) ** (-self.eta)

    def distance_at(self, g):
        """Distance at which ``gain`` equals ``g``."""
        return np.asarray(g, dtype=float) ** (-1.0 / self.eta) - 1.0


@dataclass(frozen=True)
class ExponentialDecay:
    """``U(x, d) = x * exp(-alpha * d)``."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be >= 0, got {self.alpha!r}")

    @property
    def decays(self) -> bool:
        return self.alpha > 0

    def gain(self, d):
        return np.exp(-self.alpha * np.asarray(d, dtype=float))

    def distance_at(self, g):
        return -np.log(np.asarray(g, dtype=float)) / self.alpha


UtilityModel = Union[PowerLaw, ExponentialDecay]


@dataclass(frozen=True)
class ExponentialIntensity:
    """Exponential intensity with rate ``mu`` (mean ``1 / mu``)."""

    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be > 0, got {self.mu!r}")

    upper = math.inf

    @property
    def mean(self) -> float:
        return 1.0 / self.mu

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.mu * x)

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.exp(-self.mu * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.mu * np.exp(-self.mu * np.maximum(x, 0.0)), 0.0)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.mu


@dataclass(frozen=True)
class UniformIntensity:
    """Intensity uniform on ``(0, beta)``."""

    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be > 0, got {self.beta!r}")

    @property
    def upper(self) -> float:
        return self.beta

    @property
    def mean(self) -> float:
        return 0.5 * self.beta

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float) / self.beta, 0.0, 1.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x < self.beta), 1.0 / self.beta, 0.0)

    def ppf(self, u):
        return self.beta * np.asarray(u, dtype=float)


IntensityDist = Union[ExponentialIntensity, UniformIntensity]


@dataclass(frozen=True)
class ServiceRequest:
    x: float
    d: float
    theta: float
    z: float

    @classmethod
    def create(cls, model: UtilityModel, x: float, d: float, theta: float = 0.0):
        return cls(float(x), float(d), float(theta), utility(model, x, d))


# ---------------------------------------------------------------------------
# Utility and distance law
# ---------------------------------------------------------------------------


def utility(model: UtilityModel, x: float, d: float, radius: float = math.inf) -> float:
    """Utility of serving intensity ``x`` at distance ``d``."""
    if not x >= 0:
        raise DomainError(f"intensity must be >= 0, got {x!r}")
    if not 0 <= d <= radius:
        raise DomainError(f"distance must lie in [0, {radius}], got {d!r}")
    return float(x * model.gain(d))


def _check_distance(s: Scenario, d: float):
    if not 0 <= d <= s.radius:
        raise DomainError(f"distance must lie in [0, {s.radius}], got {d!r}")


def distance_cdf(s: Scenario, d: float) -> float:
    _check_distance(s, d)
    if s.homogeneous:
        return (d / s.radius) ** 2
    inner = quad(lambda r: r * s.radial_profile(r), 0.0, d)
    return min(1.0, inner / s.profile_mass)


def distance_pdf(s: Scenario, d: float) -> float:
    _check_distance(s, d)
    if s.homogeneous:
        return 2.0 * d / s.radius**2
    return d * s.radial_profile(d) / s.profile_mass


def _distance_density(s: Scenario):
    if s.homogeneous:
        scale = 2.0 / s.radius**2
        return lambda d: scale * d
    mass = s.profile_mass
    return lambda d: d * s.radial_profile(d) / mass


# ---------------------------------------------------------------------------
# Law of the utility of one request
# ---------------------------------------------------------------------------


def _monotone_hermite(x, y, slopes):
    """Cubic Hermite interpolant limited to stay monotone (Fritsch-Carlson)."""
    m = np.maximum(np.asarray(slopes, dtype=float).copy(), 0.0)
    h = np.diff(x)
    delta = np.diff(y) / h
    flat = delta <= 0
    m[:-1][flat] = 0.0
    m[1:][flat] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(flat, 0.0, m[:-1] / delta)
        b = np.where(flat, 0.0, m[1:] / delta)
    for k in np.flatnonzero(a * a + b * b > 9.0):
        t = 3.0 / math.hypot(a[k], b[k])
        m[k] = t * a[k] * delta[k]
        m[k + 1] = t * b[k] * delta[k]
    return CubicHermiteSpline(x, y, m)


class UtilityDistribution:
    """Tabulated CDF and pdf of a single request's utility.

    The CDF is a monotone cubic Hermite interpolant through exact node values
    and node slopes; the pdf is its derivative, so the two are consistent by
    construction and the pdf integrates to ``F(hi) - F(lo)`` exactly.
    """

    def __init__(self, grid, cdf_nodes, pdf_nodes, provenance, bounded, diagnostic=None):
        grid = np.asarray(grid, dtype=float)
        cdf_nodes = np.maximum.accumulate(np.clip(np.asarray(cdf_nodes, dtype=float), 0.0, 1.0))
        self.grid = grid
        self.cdf_nodes = cdf_nodes
        self.pdf_nodes = np.maximum(np.asarray(pdf_nodes, dtype=float), 0.0)
        self.provenance = provenance
        self.bounded = bounded
        self.diagnostic = diagnostic
        self._spline = _monotone_hermite(grid, cdf_nodes, self.pdf_nodes)
        self._density = self._spline.derivative()

    @property
    def support(self) -> tuple[float, float]:
        """Tabulated support; the upper end is a tail quantile when unbounded."""
        return float(self.grid[0]), float(self.grid[-1])

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        lo, hi = self.support
        out = np.clip(self._spline(np.clip(z, lo, hi)), 0.0, 1.0)
        out = np.where(z < lo, 0.0, np.where(z > hi, 1.0, out))
        return out if out.ndim else float(out)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        lo, hi = self.support
        out = np.maximum(self._density(np.clip(z, lo, hi)), 0.0)
        out = np.where((z < lo) | (z > hi), 0.0, out)
        return out if out.ndim else float(out)

    def quantile(self, q: float) -> float:
        lo, hi = self.support
        if q <= 0:
            return lo
        if q >= self.cdf_nodes[-1]:
            return hi
        k = int(np.searchsorted(self.cdf_nodes, q))
        a, b = self.grid[max(k - 1, 0)], self.grid[min(k, self.grid.size - 1)]
        if a == b:
            return float(a)
        return optimize.brentq(lambda z: self.cdf(z) - q, a, b, xtol=1e-14)

    def expect(self, g, tol=DEFAULT_TOL) -> float:
        value, _ = adaptive_gk(lambda z: g(z) * self.pdf(z), self.grid, tol=tol)
        return value

    @cached_property
    def mean(self) -> float:
        return self.expect(lambda z: z)

    def probe_rows(self, n: int = PROBE_POINTS):
        lo, hi = self.support
        for z in np.linspace(lo, hi, n):
            yield float(z), float(self.cdf(z)), float(self.pdf(z)), self.provenance

    def to_csv(self, path, n: int = PROBE_POINTS) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "F_Z", "f_Z", "provenance"])
            for z, F, f, prov in self.probe_rows(n):
                writer.writerow([repr(z), repr(F), repr(f), prov])


def _kink_distance(m: UtilityModel, ix: IntensityDist, z: float, radius: float):
    """Distance where the level curve meets the intensity support's upper end."""
    if not (math.isfinite(ix.upper) and m.decays) or z <= 0:
        return None
    d = float(m.distance_at(z / ix.upper))
    return d if 0.0 < d < radius else None


def numeric_sf(s: Scenario, m: UtilityModel, ix: IntensityDist, z: float, tol=DEFAULT_TOL):
    """``P(Z > z)`` by integrating along the level curve."""
    if z <= 0:
        return 1.0
    f_d = _distance_density(s)
    kink = _kink_distance(m, ix, z, s.radius)
    points = None if kink is None else [kink]
    return quad(lambda d: ix.sf(z / m.gain(d)) * f_d(d), 0.0, s.radius, tol=tol, points=points)


def numeric_cdf(s, m, ix, z, tol=DEFAULT_TOL):
    if z <= 0:
        return 0.0
    return 1.0 - numeric_sf(s, m, ix, z, tol)


def numeric_pdf(s: Scenario, m: UtilityModel, ix: IntensityDist, z: float, tol=DEFAULT_TOL):
    """Derivative of the CDF under the integral sign."""
    if z < 0:
        return 0.0
    f_d = _distance_density(s)
    upper = s.radius
    if math.isfinite(ix.upper):
        if z >= ix.upper:
            return 0.0
        kink = _kink_distance(m, ix, z, s.radius)
        if kink is not None:
            upper = kink
    return quad(lambda d: ix.pdf(z / m.gain(d)) / m.gain(d) * f_d(d), 0.0, upper, tol=tol)


def _upper_end(s: Scenario, m: UtilityModel, ix: IntensityDist) -> tuple[float, bool]:
    if math.isfinite(ix.upper):
        # gain(0) == 1 for both families
        return float(ix.upper), True
    hi = float(ix.ppf(1.0 - TAIL_MASS))
    target = TAIL_MASS
    try:
        root = optimize.brentq(
            lambda z: numeric_sf(s, m, ix, z, tol=1e-16) - target, 0.0, hi, xtol=1e-12
        )
    except ValueError as exc:
        raise ConvergenceError(f"could not bracket the utility tail quantile: {exc}") from exc
    return root, False


def _grid(s, m, ix, n_grid):
    hi, bounded = _upper_end(s, m, ix)
    nodes = np.linspace(0.0, hi, n_grid)
    if math.isfinite(ix.upper) and m.decays:
        knee = ix.upper * float(m.gain(s.radius))
        nodes = np.union1d(nodes, [knee])
    return nodes, bounded


def closed_form_available(s: Scenario, m: UtilityModel, ix: IntensityDist) -> bool:
    return s.homogeneous and m.decays


def _closed_form_funcs(s: Scenario, m: UtilityModel, ix: IntensityDist):
    from . import closed_forms as cf

    R = s.radius
    if isinstance(m, PowerLaw) and isinstance(ix, ExponentialIntensity):
        return (lambda z: cf.power_exponential_cdf(z, R, m.eta, ix.mu),
                lambda z: cf.power_exponential_pdf(z, R, m.eta, ix.mu))
    if isinstance(m, PowerLaw) and isinstance(ix, UniformIntensity):
        return (lambda z: cf.power_uniform_cdf(z, R, m.eta, ix.beta),
                lambda z: cf.power_uniform_pdf(z, R, m.eta, ix.beta))
    if isinstance(m, ExponentialDecay) and isinstance(ix, ExponentialIntensity):
        return (lambda z: cf.exponential_exponential_cdf(z, R, m.alpha, ix.mu),
                lambda z: cf.exponential_exponential_pdf(z, R, m.alpha, ix.mu))
    if isinstance(m, ExponentialDecay) and isinstance(ix, UniformIntensity):
        return (lambda z: cf.exponential_uniform_cdf(z, R, m.alpha, ix.beta),
                lambda z: cf.exponential_uniform_pdf(z, R, m.alpha, ix.beta))
    raise DomainError(f"no closed form for {type(m).__name__} with {type(ix).__name__}")


def closed_form_deviation(s, m, ix, cdf, n_probe=PROBE_POINTS):
    """Sup-norm gap between ``cdf`` and the numeric CDF on a probe grid.

    Returns ``(gap, z_at_gap)``.
    """
    hi, _ = _upper_end(s, m, ix)
    probes = np.linspace(0.0, hi, n_probe)
    gaps = np.array([abs(float(cdf(z)) - numeric_cdf(s, m, ix, z)) for z in probes])
    k = int(np.argmax(gaps))
    return float(gaps[k]), float(probes[k])


def utility_distribution(
    s: Scenario,
    m: UtilityModel,
    ix: IntensityDist,
    method: str = "auto",
    n_grid: int = GRID_POINTS,
    tol: float = DEFAULT_TOL,
    closed_forms=None,
) -> UtilityDistribution:
    """Build the law of ``Z = U(X, D)``.

    ``method`` is ``"numeric"``, ``"closed-form"`` or ``"auto"`` (closed form
    when one exists).  A closed form that disagrees with the numeric CDF by
    more than ``CLOSED_FORM_TOL`` on the probe grid is dropped in favour of
    the numeric route and the reason is kept in ``diagnostic``.
    ``closed_forms`` optionally overrides the ``(cdf, pdf)`` pair used.
    """
    if method not in ("auto", "numeric", "closed-form"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed-form" and not s.homogeneous:
        raise DomainError("closed-form utility laws require a homogeneous scenario")
    if method == "closed-form" and not m.decays:
        raise DomainError("closed-form utility laws require a positive decay parameter")

    grid, bounded = _grid(s, m, ix, n_grid)
    use_closed = method == "closed-form" or (method == "auto" and closed_form_available(s, m, ix))
    diagnostic = None
    if use_closed:
        cdf, pdf = closed_forms or _closed_form_funcs(s, m, ix)
        gap, where = closed_form_deviation(s, m, ix, cdf)
        if gap <= CLOSED_FORM_TOL:
            F = np.array([float(cdf(z)) for z in grid])
            f = np.array([float(pdf(z)) for z in grid])
            return UtilityDistribution(grid, F, f, "closed-form", bounded)
        diagnostic = (
            f"closed form demoted: sup |F_closed - F_numeric| = {gap:.3e} at z = {where:.6g}"
            f" exceeds {CLOSED_FORM_TOL:g}"
        )
        log.warning(diagnostic)

    F = np.array([numeric_cdf(s, m, ix, z, tol) for z in grid])
    f = np.array([numeric_pdf(s, m, ix, z, tol) for z in grid])
    if bounded:
        F[-1] = 1.0
    return UtilityDistribution(grid, F, f, "numeric", bounded, diagnostic)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_distances(s: Scenario, rng: np.random.Generator, size=None):
    u = rng.random(size)
    if s.homogeneous:
        return s.radius * np.sqrt(u)
    grid, cdf = s._distance_table
    return np.interp(u, cdf, grid)


def sample_requests(s: Scenario, m: UtilityModel, ix: IntensityDist, rng, size):
    """Draw ``size`` requests as arrays ``(x, d, theta, z)``."""
    d = sample_distances(s, rng, size)
    theta = 2.0 * math.pi * rng.random(size)
    x = ix.ppf(rng.random(size))
    return x, d, theta, x * m.gain(d)


def sample_request(s: Scenario, m: UtilityModel, ix: IntensityDist, rng) -> ServiceRequest:
    x, d, theta, z = sample_requests(s, m, ix, rng, 1)
    return ServiceRequest(float(x[0]), float(d[0]), float(theta[0]), float(z[0]))
