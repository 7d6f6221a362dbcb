import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import empirical_ks, within_se
from stalloc import (
    DomainError,
    ExponentialDecay,
    ExponentialIntensity,
    PowerLaw,
    Scenario,
    ServiceRequest,
    UniformIntensity,
    distance_cdf,
    distance_pdf,
    sample_request,
    utility,
    utility_distribution,
)
from stalloc import closed_forms as cf
from stalloc.spatial import (
    CLOSED_FORM_TOL,
    closed_form_deviation,
    numeric_cdf,
    sample_requests,
)

UNIT = Scenario(radius=1.0, rate=10.0, slot=1.0, horizon=30, resources=10)

# F_Z at the reference setting (power law 1.5, unit exponential intensity),
# from a 30-digit mpmath quadrature of 1 - int exp(-z (1+d)^1.5) 2d dd
MPMATH_CDF = {0.5: 0.652974256443517092, 1.0: 0.872959955763196141, 2.0: 0.979993706725408102}
# same for a uniform(0, 1) intensity: int min(1, z (1+d)^1.5) 2d dd
MPMATH_UNIFORM_CDF = {0.2: 0.433612862822334642, 0.5: 0.939234648166233800}


class TestUtility:
    def test_power_law_examples(self):
        assert utility(PowerLaw(1.5), 2.0, 0.0) == 2.0
        assert utility(PowerLaw(2.0), 1.0, 1.0) == pytest.approx(0.25)
        assert utility(PowerLaw(1.5), 3.0, 3.0) == pytest.approx(3.0 / 8.0)

    def test_exponential_decay_example(self):
        assert utility(ExponentialDecay(1.0), 2.0, 1.0) == pytest.approx(2.0 / math.e)

    def test_zero_decay_ignores_distance(self):
        assert utility(PowerLaw(0.0), 1.7, 0.9) == 1.7
        assert utility(ExponentialDecay(0.0), 1.7, 0.9) == 1.7

    @pytest.mark.parametrize("x, d", [(-1.0, 0.5), (1.0, -0.1), (1.0, 1.5), (math.nan, 0.1)])
    def test_domain_errors(self, x, d):
        with pytest.raises(DomainError):
            utility(PowerLaw(1.5), x, d, radius=1.0)

    def test_negative_decay_rejected(self):
        with pytest.raises(DomainError):
            PowerLaw(-0.5)
        with pytest.raises(DomainError):
            ExponentialDecay(-1.0)

    def test_service_request_create(self):
        r = ServiceRequest.create(PowerLaw(1.0), 4.0, 1.0, theta=0.3)
        assert r == ServiceRequest(4.0, 1.0, 0.3, 2.0)

    @given(st.floats(0, 100), st.floats(0, 5), st.floats(0, 5), st.floats(0, 4))
    def test_utility_decreasing_in_distance(self, x, d1, d2, eta):
        lo, hi = sorted((d1, d2))
        m = PowerLaw(eta)
        assert utility(m, x, hi) <= utility(m, x, lo)


class TestScenario:
    def test_mean_requests(self):
        assert UNIT.mean_requests == pytest.approx(10 * math.pi, rel=1e-15)

    @pytest.mark.parametrize("kw", [
        dict(radius=0.0), dict(rate=-1.0), dict(slot=math.inf), dict(horizon=0),
        dict(resources=31), dict(horizon=2.5),
    ])
    def test_rejects_bad_parameters(self, kw):
        args = dict(radius=1.0, rate=10.0, slot=1.0, horizon=30, resources=10) | kw
        with pytest.raises(DomainError):
            Scenario(**args)

    def test_profile_without_mass(self):
        s = Scenario(1.0, 1.0, 1.0, 2, 1, radial_profile=lambda r: 0.0)
        with pytest.raises(DomainError):
            s.profile_mass


class TestDistanceLaw:
    def test_homogeneous_cdf(self):
        s = Scenario(2.0, 1.0, 1.0, 5, 1)
        assert distance_cdf(s, 1.0) == 0.25
        assert distance_cdf(s, 2.0) == 1.0
        assert distance_pdf(s, 1.0) == 0.5

    def test_constant_profile_matches_homogeneous(self):
        s = Scenario(1.0, 1.0, 1.0, 5, 1, radial_profile=lambda r: 3.0)
        assert distance_cdf(s, 0.5) == pytest.approx(0.25, abs=1e-12)
        assert s.mean_requests == pytest.approx(3.0 * math.pi, rel=1e-12)

    def test_linear_profile(self):
        # profile r gives density 3 d^2 on the unit disk
        s = Scenario(1.0, 1.0, 1.0, 5, 1, radial_profile=lambda r: r)
        assert distance_cdf(s, 0.5) == pytest.approx(0.125, abs=1e-12)
        assert distance_pdf(s, 0.5) == pytest.approx(0.75, rel=1e-12)

    def test_profile_sampling_matches_cdf(self, rng):
        s = Scenario(1.0, 1.0, 1.0, 5, 1, radial_profile=lambda r: r)
        _, d, _, _ = sample_requests(s, PowerLaw(1.0), ExponentialIntensity(1.0), rng, 20000)
        assert empirical_ks(d, lambda x: x**3) < 0.015

    def test_outside_disk(self):
        with pytest.raises(DomainError):
            distance_cdf(UNIT, 1.01)


@pytest.fixture(scope="module")
def power_exp():
    return utility_distribution(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), method="numeric")


@pytest.fixture(scope="module")
def power_exp_closed():
    return utility_distribution(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), method="closed-form")


class TestUtilityDistribution:
    def test_reference_values(self, power_exp):
        for z, F in MPMATH_CDF.items():
            assert power_exp.cdf(z) == pytest.approx(F, abs=1e-8)

    def test_uniform_reference_values(self):
        dist = utility_distribution(UNIT, PowerLaw(1.5), UniformIntensity(1.0), method="numeric")
        for z, F in MPMATH_UNIFORM_CDF.items():
            assert dist.cdf(z) == pytest.approx(F, abs=1e-8)

    def test_mean_matches_hand_derivation(self, power_exp):
        # E[X] E[(1+D)^-1.5] = 6 sqrt(2) - 8
        assert power_exp.mean == pytest.approx(6 * math.sqrt(2) - 8, rel=1e-7)

    def test_below_support(self, power_exp):
        assert power_exp.cdf(-1.0) == 0.0
        assert power_exp.pdf(-1.0) == 0.0
        assert numeric_cdf(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), 0.0) == 0.0

    def test_bounded_support_reaches_one(self):
        dist = utility_distribution(UNIT, ExponentialDecay(1.0), UniformIntensity(2.0))
        assert dist.bounded
        assert dist.support[1] == 2.0
        assert dist.cdf(2.0) == 1.0
        assert dist.cdf(5.0) == 1.0

    def test_tail_mass(self, power_exp):
        assert power_exp.cdf(power_exp.support[1]) == pytest.approx(1.0, abs=2e-10)

    def test_cdf_nondecreasing(self, power_exp):
        z = np.linspace(-0.5, power_exp.support[1] + 1, 5000)
        assert np.all(np.diff(power_exp.cdf(z)) >= 0)

    @pytest.mark.parametrize("method", ["numeric", "closed-form"])
    @pytest.mark.parametrize("model", [PowerLaw(1.5), ExponentialDecay(2.0)])
    @pytest.mark.parametrize("law", [ExponentialIntensity(1.0), UniformIntensity(1.0)])
    def test_density_integrates_to_one(self, method, model, law):
        dist = utility_distribution(UNIT, model, law, method=method)
        assert dist.expect(lambda z: np.ones_like(z)) == pytest.approx(1.0, abs=1e-6)

    def test_pdf_is_cdf_derivative(self, power_exp):
        lo, hi = power_exp.support
        h = 1e-5
        for z in np.linspace(lo + 0.01, hi - 0.01, 40):
            fd = (power_exp.cdf(z + h) - power_exp.cdf(z - h)) / (2 * h)
            assert fd == pytest.approx(power_exp.pdf(z), abs=1e-4)

    def test_empirical_ks(self, power_exp, rng):
        _, _, _, z = sample_requests(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), rng, 100_000)
        assert empirical_ks(z, power_exp.cdf) <= 0.01

    @pytest.mark.parametrize("etas", [(0.5, 1.5), (1.0, 3.0)])
    def test_stronger_decay_is_stochastically_smaller(self, etas):
        weak, strong = (utility_distribution(UNIT, PowerLaw(e), ExponentialIntensity(1.0)) for e in etas)
        z = np.linspace(0.01, 5, 50)
        assert np.all(strong.cdf(z) >= weak.cdf(z) - 1e-12)

    def test_stronger_exponential_decay_is_stochastically_smaller(self):
        weak, strong = (utility_distribution(UNIT, ExponentialDecay(a), UniformIntensity(1.0))
                        for a in (0.5, 2.0))
        z = np.linspace(0.01, 1, 50)
        assert np.all(strong.cdf(z) >= weak.cdf(z) - 1e-12)

    def test_quantile_inverts_cdf(self, power_exp):
        for q in (0.1, 0.5, 0.9, 0.999):
            assert power_exp.cdf(power_exp.quantile(q)) == pytest.approx(q, abs=1e-10)

    def test_csv_export(self, power_exp, tmp_path):
        path = tmp_path / "z.csv"
        power_exp.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "z,F_Z,f_Z,provenance"
        assert len(lines) == 65
        assert lines[1].endswith(",numeric")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            utility_distribution(UNIT, PowerLaw(1.0), ExponentialIntensity(1.0), method="magic")


class TestClosedForms:
    @pytest.mark.parametrize("model, law", [
        (PowerLaw(1.5), ExponentialIntensity(1.0)),
        (PowerLaw(0.7), ExponentialIntensity(2.5)),
        (PowerLaw(1.5), UniformIntensity(1.0)),
        (PowerLaw(3.0), UniformIntensity(0.4)),
        (ExponentialDecay(1.0), ExponentialIntensity(1.0)),
        (ExponentialDecay(1.0), UniformIntensity(1.0)),
        (ExponentialDecay(0.3), UniformIntensity(2.0)),
    ])
    def test_corrected_cdf_matches_numeric(self, model, law):
        s = Scenario(1.5, 1.0, 1.0, 5, 1)
        funcs = {
            (PowerLaw, ExponentialIntensity): lambda z: cf.power_exponential_cdf(z, 1.5, model.eta, law.mu),
            (PowerLaw, UniformIntensity): lambda z: cf.power_uniform_cdf(z, 1.5, model.eta, law.beta),
            (ExponentialDecay, ExponentialIntensity):
                lambda z: cf.exponential_exponential_cdf(z, 1.5, model.alpha, law.mu),
            (ExponentialDecay, UniformIntensity):
                lambda z: cf.exponential_uniform_cdf(z, 1.5, model.alpha, law.beta),
        }
        gap, _ = closed_form_deviation(s, model, law, funcs[type(model), type(law)])
        assert gap <= CLOSED_FORM_TOL

    def test_closed_and_numeric_routes_agree(self, power_exp, power_exp_closed):
        assert power_exp_closed.provenance == "closed-form"
        z = np.linspace(0, power_exp.support[1], 300)
        assert np.max(np.abs(power_exp.cdf(z) - power_exp_closed.cdf(z))) < 1e-8
        assert np.max(np.abs(power_exp.pdf(z) - power_exp_closed.pdf(z))) < 1e-5

    def test_printed_power_exponential_pdf_misses_factor(self):
        # the printed density lacks the 2 / R^2 factor of the distance law
        for R in (1.0, 2.0):
            z = np.array([0.1, 0.7, 1.9])
            ratio = cf.power_exponential_pdf(z, R, 1.5, 1.0) / cf.printed_power_exponential_pdf(z, R, 1.5, 1.0)
            assert np.allclose(ratio, 2 / R**2, rtol=1e-10)

    @pytest.mark.parametrize("model, law, printed", [
        (PowerLaw(1.5), UniformIntensity(1.0),
         lambda z: cf.printed_power_uniform_cdf(z, 1.0, 1.5, 1.0)),
        (ExponentialDecay(1.0), UniformIntensity(1.0),
         lambda z: cf.printed_exponential_uniform_cdf(z, 1.0, 1.0, 1.0)),
    ])
    def test_printed_uniform_cdfs_disagree(self, model, law, printed):
        gap, where = closed_form_deviation(UNIT, model, law, printed)
        print(f"printed {type(model).__name__}/uniform cdf deviation {gap:.3e} at z={where:.4g}")
        assert gap > CLOSED_FORM_TOL

    def test_failing_closed_form_is_demoted(self, caplog):
        bad = (lambda z: cf.printed_power_uniform_cdf(z, 1.0, 1.5, 1.0),
               lambda z: cf.printed_power_uniform_pdf(z, 1.0, 1.5, 1.0))
        with caplog.at_level("WARNING"):
            dist = utility_distribution(UNIT, PowerLaw(1.5), UniformIntensity(1.0), closed_forms=bad)
        assert dist.provenance == "numeric"
        assert "demoted" in dist.diagnostic
        assert "demoted" in caplog.text
        assert dist.cdf(0.5) == pytest.approx(MPMATH_UNIFORM_CDF[0.5], abs=1e-8)

    def test_closed_form_rejected_with_profile(self):
        s = Scenario(1.0, 1.0, 1.0, 5, 1, radial_profile=lambda r: 1 + r)
        with pytest.raises(DomainError):
            utility_distribution(s, PowerLaw(1.0), ExponentialIntensity(1.0), method="closed-form")

    def test_closed_form_rejected_without_decay(self):
        with pytest.raises(DomainError):
            utility_distribution(UNIT, PowerLaw(0.0), ExponentialIntensity(1.0), method="closed-form")

    def test_auto_uses_numeric_under_profile(self):
        s = Scenario(1.0, 1.0, 1.0, 5, 1, radial_profile=lambda r: 1 + r)
        dist = utility_distribution(s, PowerLaw(1.0), ExponentialIntensity(1.0))
        assert dist.provenance == "numeric"
        assert dist.expect(lambda z: np.ones_like(z)) == pytest.approx(1.0, abs=1e-6)


class TestSampling:
    def test_deterministic(self):
        a = sample_request(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), np.random.default_rng(7))
        b = sample_request(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), np.random.default_rng(7))
        assert a == b

    def test_request_fields(self, rng):
        r = sample_request(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), rng)
        assert 0 <= r.d <= 1 and 0 <= r.theta < 2 * math.pi and r.x >= 0
        assert r.z == pytest.approx(utility(PowerLaw(1.5), r.x, r.d))

    def test_mean_distance(self, rng):
        _, d, _, _ = sample_requests(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0), rng, 50_000)
        ok, mean, se = within_se(d, 2.0 / 3.0)
        assert ok, (mean, se)

    def test_uniform_intensity_mean(self, rng):
        x, _, _, _ = sample_requests(UNIT, PowerLaw(1.5), UniformIntensity(1.0), rng, 50_000)
        ok, mean, se = within_se(x, 0.5)
        assert ok, (mean, se)
        assert x.min() >= 0 and x.max() <= 1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_angles_in_range(self, seed):
        _, _, theta, _ = sample_requests(UNIT, PowerLaw(1.5), ExponentialIntensity(1.0),
                                         np.random.default_rng(seed), 64)
        assert np.all((theta >= 0) & (theta < 2 * math.pi))
