"""Backward recursion for allocation thresholds and expected values.

With ``t`` periods left and ``n`` identical resources, the slot maximum
``z`` is allocated iff ``z >= rho[t][n]`` where

    rho[t][n] = ev[t-1][n] - ev[t-1][n-1]
    ev[t][n]  = E[(z + ev[t-1][n-1]) 1{z >= rho}] + ev[t-1][n] P(z < rho)

with ``ev[t][0] = 0`` and ``ev[n][n] = n E[z]`` (allocate every slot).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .quadrature import DEFAULT_TOL

__all__ = [
    "Decision",
    "ThresholdTable",
    "tail_value",
    "compute_thresholds",
    "decide",
    "table_violations",
    "NEGATIVE_FLOOR",
]

NEGATIVE_FLOOR = 1e-9


class Decision(enum.Enum):
    ALLOCATE = "allocate"
    DEFER = "defer"


@dataclass(frozen=True, eq=False)
class ThresholdTable:
    """Dense ``(T+1) x (N+1)`` grids of thresholds and expected values.

    ``rho[t, n]`` is defined for ``1 <= n <= min(t, N)`` and NaN elsewhere.
    ``ev[t, n]`` is defined everywhere; for ``n > t`` it equals ``ev[t, t]``.
    """

    T: int
    N: int
    rho: np.ndarray
    ev: np.ndarray
    dist: Any = None

    def threshold(self, t: int, n: int) -> float:
        return float(self.rho[t, n])

    def value(self, t: int, n: int) -> float:
        return float(self.ev[t, n])

    def rows(self):
        for t in range(self.T + 1):
            for n in range(self.N + 1):
                yield t, n, float(self.rho[t, n]), float(self.ev[t, n])

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "n", "rho", "ev"])
            for t, n, rho, ev in self.rows():
                writer.writerow([t, n, "" if math.isnan(rho) else repr(rho), repr(ev)])
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path) -> "ThresholdTable":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["t", "n", "rho", "ev"]:
                raise ValueError(f"unexpected threshold header {reader.fieldnames}")
            records = [(int(r["t"]), int(r["n"]), r["rho"], r["ev"]) for r in reader]
        if not records:
            raise ValueError("empty threshold table")
        T = max(r[0] for r in records)
        N = max(r[1] for r in records)
        rho = np.full((T + 1, N + 1), np.nan)
        ev = np.full((T + 1, N + 1), np.nan)
        for t, n, r, e in records:
            rho[t, n] = float(r) if r != "" else np.nan
            ev[t, n] = float(e)
        if np.isnan(ev).any():
            raise ValueError("threshold table is missing expected-value entries")
        return cls(T, N, rho, ev)


def tail_value(dist, rho: float, continuation_hit: float, continuation_miss: float,
               tol: float = DEFAULT_TOL) -> float:
    """Expected value of one decision step with threshold ``rho``.

    Slot maxima ``z >= rho`` earn ``z + continuation_hit``; smaller ones earn
    ``continuation_miss``.  Finitely supported laws are summed exactly.
    """
    if not rho >= 0:
        raise DomainError(f"threshold must be >= 0, got {rho!r}")
    hit = dist.expect(lambda z: z + continuation_hit, lower=rho, tol=tol)
    if hasattr(dist, "prob_below"):
        below = dist.prob_below(rho)
    else:
        below = dist.cdf(rho)
    return hit + continuation_miss * below


def compute_thresholds(T: int, N: int, dist, tol: float = DEFAULT_TOL) -> ThresholdTable:
    """Fill the threshold and value tables period by period."""
    if isinstance(T, bool) or int(T) != T or T < 1:
        raise DomainError(f"horizon must be a positive integer, got {T!r}")
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise DomainError(f"resource count must be a positive integer, got {N!r}")
    if N > T:
        raise DomainError(f"resources ({N}) must not exceed horizon ({T})")
    T, N = int(T), int(N)
    mean = dist.mean
    rho = np.full((T + 1, N + 1), np.nan)
    ev = np.zeros((T + 1, N + 1))
    for t in range(1, T + 1):
        for n in range(1, N + 1):
            if n >= t:
                ev[t, n] = t * mean
                if n == t:
                    rho[t, n] = 0.0
                continue
            r = ev[t - 1, n] - ev[t - 1, n - 1]
            if r < 0:
                if r < -NEGATIVE_FLOOR:
                    raise DomainError(
                        f"negative threshold {r:.3e} at (t={t}, n={n}); distribution is inconsistent"
                    )
                r = 0.0
            rho[t, n] = r
            ev[t, n] = tail_value(dist, r, ev[t - 1, n - 1], ev[t - 1, n], tol=tol)
    return ThresholdTable(T, N, rho, ev, dist)


def decide(table: ThresholdTable, t_remaining: int, n_available: int, z: float) -> Decision:
    if n_available > t_remaining:
        raise DomainError(
            f"{n_available} resources cannot be left with only {t_remaining} periods"
        )
    if not (1 <= n_available <= table.N and t_remaining <= table.T):
        raise DomainError(f"state (t={t_remaining}, n={n_available}) outside the table")
    if t_remaining == n_available or z >= table.rho[t_remaining, n_available]:
        return Decision.ALLOCATE
    return Decision.DEFER


def table_violations(table: ThresholdTable, mean: float | None = None, rel_tol: float = 1e-9):
    """List every broken structural property of ``table`` (empty if sound)."""
    out = []
    T, N, rho, ev = table.T, table.N, table.rho, table.ev
    if mean is None:
        mean = ev[1, 1]
    for t in range(T + 1):
        if ev[t, 0] != 0:
            out.append(f"ev[{t}][0] = {float(ev[t, 0])!r}, expected 0")
    for n in range(1, min(T, N) + 1):
        if rho[n, n] != 0:
            out.append(f"rho[{n}][{n}] = {float(rho[n, n])!r}, expected 0")
        if abs(ev[n, n] - n * mean) > rel_tol * max(abs(n * mean), 1e-300):
            out.append(f"ev[{n}][{n}] = {float(ev[n, n])!r}, expected {float(n * mean)!r}")
    for t in range(1, T + 1):
        for n in range(1, min(t, N) + 1):
            if not rho[t, n] >= 0:
                out.append(f"rho[{t}][{n}] = {float(rho[t, n])!r} is negative or missing")
            if t > n and rho[t, n] != ev[t - 1, n] - ev[t - 1, n - 1]:
                out.append(f"rho[{t}][{n}] is not ev[{t - 1}][{n}] - ev[{t - 1}][{n - 1}]")
            if t > n and rho[t, n] < rho[t - 1, n]:
                out.append(f"rho decreases in t at (t={t}, n={n})")
            if n > 1 and rho[t, n] > rho[t, n - 1]:
                out.append(f"rho increases in n at (t={t}, n={n})")
    if np.any(np.diff(ev, axis=0) < 0):
        out.append("ev decreases in t")
    if np.any(np.diff(ev, axis=1) < 0):
        out.append("ev decreases in n")
    return out
