"""Haar-random unitaries and order statistics of their columns."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .lattice import LatticeGeometry
from .transfer import implement_column

DEFAULT_C = 0.2475


class DegenerateColumnError(ValueError):
    pass


def sample_haar_unitary(m: int, seed) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phases of ``diag(R)`` divided out."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def uniform_unit_vectors(count: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform unit vectors in ``C^m``, one per row."""
    z = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


class MaxEntryCdf(NamedTuple):
    value: float
    lower_bound: float


def max_entry_cdf(x: float, m: int) -> MaxEntryCdf:
    """Probability that every ``|z_i|^2`` of a uniform unit vector in ``C^m`` is at most ``x``.

    The alternating series is summed in exact rational arithmetic; its
    partial sums alternate in sign so floating point cancels badly for
    moderate ``m``. Thresholds above 1 are clamped to 1, where the event is
    certain.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    x = min(float(x), 1.0)
    bound = 1.0 - m * (1.0 - x) ** (m - 1)
    if m == 1:
        return MaxEntryCdf(1.0 if x >= 1 else 0.0, bound)
    fx = Fraction(x)
    k = math.floor(1 / fx)
    total = sum(
        (-1) ** l * math.comb(m, l) * (1 - l * fx) ** (m - 1) for l in range(min(k, m) + 1)
    )
    return MaxEntryCdf(float(total), bound)


@dataclass(frozen=True)
class ColumnStats:
    m: int
    max_entry_sq: float
    second_entry_sq: float
    diag_entry_sq: float
    omega_sq: float
    implement_time: Optional[float] = None


def omega_for_column(column, j: int) -> ColumnStats:
    """Effective single-shot frequency after parking weight on the largest off-diagonal mode."""
    col = np.asarray(column, dtype=complex)
    if abs(np.linalg.norm(col) - 1) > 1e-10:
        raise ValueError("column must have unit norm")
    sq = np.abs(col) ** 2
    if np.count_nonzero(sq > 0) < 3:
        raise DegenerateColumnError("need at least three nonzero entries")
    off = np.sort(np.delete(sq, j))[::-1]
    if off[1] == 0:
        raise DegenerateColumnError("second-largest off-diagonal entry vanishes")
    omega_sq = max(0.0, 1.0 - off[0] - sq[j]) / off[1]
    return ColumnStats(len(col), float(off[0]), float(off[1]), float(sq[j]), float(omega_sq))


@dataclass(frozen=True)
class ColumnTrialRow:
    trial: int
    column: int
    stats: ColumnStats
    below_threshold: bool


@dataclass(frozen=True)
class Proportion:
    successes: int
    total: int

    @property
    def fraction(self) -> float:
        return self.successes / self.total

    @property
    def sigma(self) -> float:
        p = self.fraction
        return math.sqrt(p * (1 - p) / self.total)

    def at_least(self, target: float, sigmas: float = 3.0) -> bool:
        """``fraction >= target`` within ``sigmas`` binomial deviations at ``target``."""
        spread = math.sqrt(target * (1 - target) / self.total)
        return self.fraction >= target - sigmas * spread


@dataclass(frozen=True)
class ColumnTrials:
    m: int
    c: float
    time_threshold: float
    omega_sq_threshold: float
    rows: tuple
    time_fraction: Proportion
    omega_fraction: Proportion
    inverse_omega_fraction: Proportion  # 1/omega_min of the trace below the time threshold

    def csv_rows(self):
        for r in self.rows:
            yield (r.trial, r.column, self.m, r.stats.omega_sq, r.stats.implement_time, int(r.below_threshold))


CSV_HEADER = ("trial", "column", "m", "omega_sq", "time", "below_threshold")


def column_time_trials(m: int, trials: int, seed: int, c: float = DEFAULT_C, *, columns: int = 1) -> ColumnTrials:
    """Sample Haar unitaries (seed ``seed + trial``) and time the first ``columns`` columns at ``alpha = 0``."""
    if trials < 1 or not 1 <= columns <= m:
        raise ValueError("need trials >= 1 and 1 <= columns <= m")
    if c <= 0:
        raise ValueError("c must be positive")
    geom = LatticeGeometry.chain(m)
    t_max = math.sqrt(math.log(m) / (c * m))
    w_min = c * m / math.log(m)
    rows = []
    fast = fast_omega = fast_inv = 0
    for trial in range(trials):
        U = sample_haar_unitary(m, seed + trial)
        for j in range(columns):
            trace = implement_column(U, j, 0.0, geom)
            stats = omega_for_column(U[:, j], j)
            stats = replace(stats, implement_time=trace.total_time)
            below = trace.total_time <= t_max
            fast += below
            fast_omega += stats.omega_sq >= w_min
            fast_inv += trace.omega_min is not None and 1 / trace.omega_min <= t_max
            rows.append(ColumnTrialRow(trial, j, stats, below))
    n = len(rows)
    return ColumnTrials(
        m, c, t_max, w_min, tuple(rows), Proportion(fast, n), Proportion(fast_omega, n), Proportion(fast_inv, n)
    )
