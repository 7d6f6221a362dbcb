"""Monte Carlo evaluation of allocation policies on sampled request streams.

Every replication draws one episode (``T`` slots of requests) and scores
all requested policies on that same episode, so per-episode comparisons
such as ``ideal >= optimal`` are exact statements, not statistical ones.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dp import Decision, ThresholdTable, decide
from .errors import DomainError
from .extreme import zt_poisson_sample
from .spatial import Scenario, ServiceRequest, sample_requests

__all__ = [
    "SlotBatch",
    "EpisodeResult",
    "PolicySummary",
    "MonteCarloResult",
    "POLICIES",
    "replication_streams",
    "generate_episode",
    "run_optimal",
    "run_ideal",
    "run_myopic",
    "run_random",
    "monte_carlo",
    "write_trace_csv",
    "write_summary_csv",
]

POLICIES = ("ideal", "optimal", "myopic", "random")


@dataclass(frozen=True, eq=False)
class SlotBatch:
    """Requests that arrived during one slot, stored column-wise."""

    slot_index: int
    x: np.ndarray
    d: np.ndarray
    theta: np.ndarray
    z: np.ndarray

    @property
    def size(self) -> int:
        return int(self.z.size)

    @property
    def max_request(self) -> int:
        # argmax returns the first maximiser: ties go to the lowest index
        return int(np.argmax(self.z))

    @property
    def max_utility(self) -> float:
        return float(self.z[self.max_request])

    @property
    def requests(self) -> list[ServiceRequest]:
        return [
            ServiceRequest(float(x), float(d), float(th), float(z))
            for x, d, th, z in zip(self.x, self.d, self.theta, self.z)
        ]


@dataclass
class EpisodeResult:
    policy: str
    total: float = 0.0
    allocations: list[tuple[int, float, int]] = field(default_factory=list)

    @property
    def resources_used(self) -> int:
        return len(self.allocations)

    def allocate(self, slot: int, z: float, n_before: int) -> None:
        self.allocations.append((slot, z, n_before))
        self.total += z


def replication_streams(seed: int, index: int):
    """Independent (episode, policy) generators for replication ``index``."""
    seq = np.random.SeedSequence(seed, spawn_key=(index,))
    episode_seq, policy_seq = seq.spawn(2)
    return np.random.default_rng(episode_seq), np.random.default_rng(policy_seq)


def generate_episode(s: Scenario, m, ix, rng: np.random.Generator, horizon: int | None = None):
    """Sample ``horizon`` (default ``s.horizon``) slots of requests."""
    T = s.horizon if horizon is None else horizon
    counts = zt_poisson_sample(s.mean_requests, rng, size=T)
    x, d, theta, z = sample_requests(s, m, ix, rng, int(counts.sum()))
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [
        SlotBatch(j + 1, x[a:b], d[a:b], theta[a:b], z[a:b])
        for j, (a, b) in enumerate(zip(bounds[:-1], bounds[1:]))
    ]


def _slot_maxima(episode) -> list[float]:
    return [batch.max_utility for batch in episode]


def _check_resources(episode, n_resources):
    if n_resources < 0 or n_resources > len(episode):
        raise DomainError(f"need 0 <= N <= T, got N={n_resources}, T={len(episode)}")


def run_optimal(table: ThresholdTable, episode, n_resources: int | None = None) -> EpisodeResult:
    T = len(episode)
    if T > table.T:
        raise DomainError(f"episode has {T} slots but the table only covers {table.T}")
    n = table.N if n_resources is None else n_resources
    _check_resources(episode, n)
    if n > table.N:
        raise DomainError(f"table covers at most {table.N} resources, asked for {n}")
    result = EpisodeResult("optimal")
    for j, batch in enumerate(episode):
        if n == 0:
            break
        t_remaining = T - j
        z = batch.max_utility
        if decide(table, t_remaining, n, z) is Decision.ALLOCATE:
            result.allocate(batch.slot_index, z, n)
            n -= 1
    return result


def run_ideal(episode, n_resources: int) -> EpisodeResult:
    _check_resources(episode, n_resources)
    maxima = np.array(_slot_maxima(episode))
    # stable sort keeps earlier slots first among equal maxima
    chosen = np.sort(np.argsort(-maxima, kind="stable")[:n_resources])
    result = EpisodeResult("ideal")
    n = n_resources
    for j in chosen:
        result.allocate(episode[j].slot_index, float(maxima[j]), n)
        n -= 1
    return result


def run_myopic(episode, n_resources: int) -> EpisodeResult:
    _check_resources(episode, n_resources)
    result = EpisodeResult("myopic")
    n = n_resources
    for batch in episode[:n_resources]:
        result.allocate(batch.slot_index, batch.max_utility, n)
        n -= 1
    return result


def run_random(episode, n_resources: int, p: float, rng: np.random.Generator) -> EpisodeResult:
    """Allocate with probability ``p`` per slot; leftovers at the end are lost."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"allocation probability must lie in [0, 1], got {p!r}")
    _check_resources(episode, n_resources)
    coins = rng.random(len(episode))
    result = EpisodeResult("random")
    n = n_resources
    for batch, u in zip(episode, coins):
        if n == 0:
            break
        if u < p:
            result.allocate(batch.slot_index, batch.max_utility, n)
            n -= 1
    return result


@dataclass(frozen=True)
class PolicySummary:
    policy: str
    mean: float
    stderr: float
    reps: int


@dataclass
class MonteCarloResult:
    totals: dict[str, np.ndarray]
    summary: dict[str, PolicySummary]


def _replicate(s, m, ix, table, policies, p, seed, index):
    ep_rng, pol_rng = replication_streams(seed, index)
    episode = generate_episode(s, m, ix, ep_rng)
    N = s.resources
    out = []
    for name in policies:
        if name == "ideal":
            out.append(run_ideal(episode, N).total)
        elif name == "optimal":
            out.append(run_optimal(table, episode, N).total)
        elif name == "myopic":
            out.append(run_myopic(episode, N).total)
        elif name == "random":
            out.append(run_random(episode, N, p, pol_rng).total)
        else:
            raise ValueError(f"unknown policy {name!r}")
    return out


def _run_chunk(args):
    s, m, ix, rho, ev, policies, p, seed, indices = args
    table = ThresholdTable(rho.shape[0] - 1, rho.shape[1] - 1, rho, ev)
    return [_replicate(s, m, ix, table, policies, p, seed, i) for i in indices]


def _summarise(name, values):
    reps = values.size
    mean = math.fsum(values) / reps
    if reps > 1:
        var = math.fsum((values - mean) ** 2) / (reps - 1)
        stderr = math.sqrt(var / reps)
    else:
        stderr = float("nan")
    return PolicySummary(name, mean, stderr, reps)


def monte_carlo(
    s: Scenario,
    m,
    ix,
    table: ThresholdTable | None,
    policies: Sequence[str] = POLICIES,
    reps: int = 10_000,
    seed: int = 0,
    p: float = 0.5,
    jobs: int = 1,
) -> MonteCarloResult:
    """Score ``policies`` on ``reps`` shared episodes.

    Replication ``i`` draws from streams keyed by ``(seed, i)`` alone, and
    reductions use exact summation, so results do not depend on ``jobs``.
    """
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    policies = tuple(policies)
    unknown = set(policies) - set(POLICIES)
    if unknown:
        raise ValueError(f"unknown policies {sorted(unknown)}")
    if "optimal" in policies and table is None:
        raise ValueError("the optimal policy needs a threshold table")
    if s.radial_profile is not None and jobs > 1:
        # profiles are arbitrary callables and may not pickle
        jobs = 1
    rho = table.rho if table is not None else np.zeros((s.horizon + 1, s.resources + 1))
    ev = table.ev if table is not None else rho
    if jobs <= 1:
        t = table if table is not None else ThresholdTable(s.horizon, s.resources, rho, ev)
        rows = [_replicate(s, m, ix, t, policies, p, seed, i) for i in range(reps)]
    else:
        chunks = np.array_split(np.arange(reps), min(jobs * 4, reps))
        work = [(s, m, ix, rho, ev, policies, p, seed, list(c)) for c in chunks if c.size]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = [row for part in pool.map(_run_chunk, work) for row in part]
    arr = np.array(rows, dtype=float).reshape(reps, len(policies))
    totals = {name: arr[:, k] for k, name in enumerate(policies)}
    summary = {name: _summarise(name, totals[name]) for name in policies}
    return MonteCarloResult(totals, summary)


def write_trace_csv(path, episode, results: Sequence[EpisodeResult]) -> None:
    """One row per slot: request count, slot maximum, and each policy's action."""
    allocated = {r.policy: {slot for slot, _, _ in r.allocations} for r in results}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slot", "K", "z_max"] + [r.policy for r in results])
        for batch in episode:
            actions = [
                "allocate" if batch.slot_index in allocated[r.policy] else "skip" for r in results
            ]
            writer.writerow([batch.slot_index, batch.size, repr(batch.max_utility)] + actions)


def write_summary_csv(path_or_file, summaries: Sequence[PolicySummary]) -> None:
    own = isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["policy", "mean", "stderr", "reps"])
        for row in summaries:
            writer.writerow([row.policy, repr(row.mean), repr(row.stderr), row.reps])
    finally:
        if own:
            fh.close()
