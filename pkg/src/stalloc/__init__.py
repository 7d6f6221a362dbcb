"""Optimal threshold allocation of finite resources to spatio-temporal requests."""

from .dp import Decision, ThresholdTable, compute_thresholds, decide, tail_value
from .errors import ConfigError, ConvergenceError, DomainError
from .extreme import (
    DiscreteMaxDistribution,
    MaxUtilityDistribution,
    max_distribution,
    zt_poisson_pmf,
    zt_poisson_sample,
)
from .simulator import (
    generate_episode,
    monte_carlo,
    run_ideal,
    run_myopic,
    run_optimal,
    run_random,
)
from .spatial import (
    ExponentialDecay,
    ExponentialIntensity,
    PowerLaw,
    Scenario,
    ServiceRequest,
    UniformIntensity,
    UtilityDistribution,
    distance_cdf,
    distance_pdf,
    sample_request,
    utility,
    utility_distribution,
)

__version__ = "0.1.0"
