"""Self-checks run by ``stalloc validate``.

Each check yields a :class:`Check`; informational checks (``gated=False``)
are reported but never fail the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .dp import ThresholdTable, compute_thresholds, table_violations
from .extreme import max_distribution, zt_poisson_pmf
from .simulator import monte_carlo
from .spatial import (
    CLOSED_FORM_TOL,
    ExponentialDecay,
    ExponentialIntensity,
    PowerLaw,
    UniformIntensity,
    closed_form_deviation,
    utility_distribution,
)

NORMALIZATION_TOL = 1e-6
MIXTURE_TOL = 1e-9
MIXTURE_RATE = 3.0
SERIES_FLOOR = 1e-15


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    observed: str
    expected: str
    gated: bool = True

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.gated else "INFO"
        return f"{tag} {self.name}: observed={self.observed} expected={self.expected}"


def mixture_pdf(lam: float, base, z) -> np.ndarray:
    """Slot-maximum pdf summed term by term over the request count."""
    F = np.asarray(base.cdf(z), dtype=float)
    f = np.asarray(base.pdf(z), dtype=float)
    total = np.zeros_like(F)
    k = 1
    while True:
        w = zt_poisson_pmf(lam, k)
        total += w * k * F ** (k - 1) * f
        if k > lam and w < SERIES_FLOOR:
            return total
        k += 1


def closed_form_checks(scenario, eta: float, alpha: float, mu: float, beta: float):
    R = scenario.radius
    cases = []
    if eta > 0:
        cases += [
            ("power/exponential", PowerLaw(eta), ExponentialIntensity(mu),
             lambda z: cf.power_exponential_cdf(z, R, eta, mu), None),
            ("power/uniform", PowerLaw(eta), UniformIntensity(beta),
             lambda z: cf.power_uniform_cdf(z, R, eta, beta),
             lambda z: cf.printed_power_uniform_cdf(z, R, eta, beta)),
        ]
    if alpha > 0:
        cases += [
            ("exponential/exponential", ExponentialDecay(alpha), ExponentialIntensity(mu),
             lambda z: cf.exponential_exponential_cdf(z, R, alpha, mu), None),
            ("exponential/uniform", ExponentialDecay(alpha), UniformIntensity(beta),
             lambda z: cf.exponential_uniform_cdf(z, R, alpha, beta),
             lambda z: cf.printed_exponential_uniform_cdf(z, R, alpha, beta)),
        ]
    for label, m, ix, cdf, printed in cases:
        gap, where = closed_form_deviation(scenario, m, ix, cdf)
        yield Check(
            f"closed-form cdf {label} vs numeric (sup-norm)",
            gap <= CLOSED_FORM_TOL, f"{gap:.3e}", f"<= {CLOSED_FORM_TOL:g}",
        )
        if printed is not None:
            gap, where = closed_form_deviation(scenario, m, ix, printed)
            yield Check(
                f"printed closed-form cdf {label} vs numeric (sup-norm)",
                gap <= CLOSED_FORM_TOL, f"{gap:.3e} at z={where:.4g}", f"<= {CLOSED_FORM_TOL:g}",
                gated=False,
            )


def distribution_checks(lam, base):
    maxd = max_distribution(lam, base)
    mass = maxd.expect(lambda z: np.ones_like(z))
    yield Check(
        "slot-maximum pdf integrates to one",
        abs(mass - 1.0) <= NORMALIZATION_TOL, repr(mass), f"1 +- {NORMALIZATION_TOL:g}",
    )
    rate = min(lam, MIXTURE_RATE)
    small = max_distribution(rate, base)
    lo, hi = base.support
    z = np.linspace(lo, hi, 257)
    gap = float(np.max(np.abs(mixture_pdf(rate, base, z) - small.pdf(z))))
    yield Check(
        f"series vs closed slot-maximum pdf at rate {rate:g}",
        gap <= MIXTURE_TOL, f"{gap:.3e}", f"<= {MIXTURE_TOL:g}",
    )


def table_checks(table: ThresholdTable, mean=None):
    problems = table_violations(table, mean)
    yield Check(
        "threshold table invariants",
        not problems, "; ".join(problems[:5]) or "none violated", "no violations",
    )


def consistency_check(scenario, model, intensity, table, reps, seed, jobs=1):
    res = monte_carlo(scenario, model, intensity, table, policies=("optimal",),
                      reps=reps, seed=seed, jobs=jobs)
    opt = res.summary["optimal"]
    target = table.value(scenario.horizon, scenario.resources)
    ok = reps > 1 and abs(opt.mean - target) <= 3.0 * opt.stderr
    yield Check(
        "simulated optimal mean vs ev[T][N]",
        ok, f"{opt.mean:.6g} (stderr {opt.stderr:.3g}, {reps} reps)", f"{target:.6g} +- 3 stderr",
    )


def run_all(config, table: ThresholdTable | None = None):
    """All checks for ``config``; ``table`` replaces the computed table if given."""
    scenario = config.scenario()
    model, intensity = config.utility_model(), config.intensity()
    lam = scenario.mean_requests
    yield Check("mean requests per slot", True, repr(lam), "slot * rate * pi * radius^2", gated=False)
    yield from closed_form_checks(scenario, config.eta, config.alpha, config.mu, config.beta)
    base = utility_distribution(scenario, model, intensity)
    yield from distribution_checks(lam, base)
    maxd = max_distribution(lam, base)
    if table is None:
        table = compute_thresholds(scenario.horizon, scenario.resources, maxd)
    elif (table.T, table.N) != (scenario.horizon, scenario.resources):
        yield Check("table shape matches config", False, f"T={table.T}, N={table.N}",
                    f"T={scenario.horizon}, N={scenario.resources}")
        return
    yield from table_checks(table, maxd.mean)
    yield from consistency_check(scenario, model, intensity, table, config.reps, config.seed,
                                 config.jobs)
