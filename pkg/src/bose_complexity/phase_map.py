"""Closed-form exponents of the easy and hard sampling timescales.

Timescales are ``t = c n^gamma``. Below ``gamma_easy`` an efficient sampler
exists; above ``gamma_hard`` sampling is as hard as a universal or
boson-sampling reduction. All O(1) constants are 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

V_REGIMES = ("vanishing", "constant", "polynomial", "hardcore")
DEFAULT_N = 1e6
DEFAULT_DELTA = 0.01


class ScopeError(ValueError):
    pass


class InconsistentBoundsError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    alpha: float
    beta: float
    D: int
    V_regime: str
    gamma: float = 0.0
    delta: float = DEFAULT_DELTA
    n: float = DEFAULT_N

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 1 or self.D < 1:
            raise ValueError("need alpha >= 0, beta >= 1, D >= 1")
        if self.V_regime not in V_REGIMES:
            raise ValueError(f"V_regime must be one of {V_REGIMES}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.n > 1:
            raise ValueError("n must exceed 1")

    @property
    def interacting(self) -> bool:
        return self.V_regime != "vanishing"


class EasyExponent(NamedTuple):
    value: float
    log_regime: bool

    @property
    def threshold(self) -> float:
        """Exponent separating easy from unknown; any ``gamma < 0`` is easy in the log regime."""
        return 0.0 if self.log_regime else self.value


class HardExponent(NamedTuple):
    value: float
    kind: str  # "I" or "II"
    candidates: dict


def gamma_easy(alpha: float, beta: float, D: int) -> EasyExponent:
    if not alpha > D + 1:
        raise ScopeError(f"easiness bound needs alpha > D + 1 (alpha={alpha}, D={D})")
    if math.isinf(alpha):
        value = (beta - 1) / D
    else:
        value = (beta - 1) / D * (alpha - 2 * D) / (alpha - D) - 1 / (alpha - D)
    return EasyExponent(value, value < 0)


def _log_V_plus_one(regime: str, n: float) -> float:
    V = {"vanishing": 0.0, "constant": 1.0, "polynomial": n, "hardcore": math.inf}[regime]
    return math.log1p(V)


def gamma_hard_type_one(alpha: float, beta: float, D: int) -> float:
    if alpha > D:
        return (beta - 1) / D * min(1.0, alpha - D)
    return 0.0


def gamma_hard_type_two(alpha: float, beta: float, D: int, V_regime: str, delta: float, n: float) -> float:
    if alpha > D:
        cap = 1 + _log_V_plus_one(V_regime, n) / math.log(n)
        return delta + (beta - 1) / D * min(cap, alpha - D)
    if alpha >= D / 2:
        return delta
    return delta + beta / D * (alpha - D / 2)


def gamma_hard(point: PhasePoint) -> HardExponent:
    """Smallest hardness exponent among the reductions whose conditions hold."""
    p = point
    candidates = {}
    if p.alpha >= p.D / 2 and p.interacting and p.D >= 2:
        candidates["I"] = gamma_hard_type_one(p.alpha, p.beta, p.D)
    if p.alpha < p.D / 2 or not p.interacting or p.D == 1:
        candidates["II"] = gamma_hard_type_two(p.alpha, p.beta, p.D, p.V_regime, p.delta, p.n)
    kind = min(candidates, key=candidates.get)
    return HardExponent(candidates[kind], kind, candidates)


def transition_kind(point: PhasePoint) -> str:
    nearest = math.isinf(point.alpha)
    if nearest and point.interacting and point.D >= 2:
        return "Sharp"
    if nearest and point.D == 1:
        return "Coarse"
    if point.D == 1 or not point.interacting:
        return "Suggested-Coarse"
    return "Unknown"


@dataclass(frozen=True)
class PhaseVerdict:
    verdict: str
    gamma_easy: Optional[EasyExponent]
    gamma_hard: HardExponent
    transition_kind: str
    governing: str


def classify(point: PhasePoint) -> PhaseVerdict:
    hard = gamma_hard(point)
    try:
        easy = gamma_easy(point.alpha, point.beta, point.D)
    except ScopeError:
        easy = None
    if easy is not None and easy.threshold > hard.value + 1e-12:
        raise InconsistentBoundsError(
            f"easy exponent {easy.threshold} exceeds hard exponent {hard.value} at {point}"
        )
    if easy is not None and point.gamma < easy.threshold:
        verdict, governing = "Easy", "easiness-log" if easy.log_regime else "easiness"
    elif point.gamma > hard.value:
        verdict, governing = "Hard", f"hardness-type-{hard.kind}"
    else:
        verdict = "Unknown"
        governing = "between-bounds" if easy is not None else "no-easiness-bound"
    return PhaseVerdict(verdict, easy, hard, transition_kind(point), governing)


def ts_1d(L: float, alpha: float, c: float = 1.0) -> float:
    """State-transfer time over distance ``L`` in one dimension."""
    if L < 2 or c <= 0:
        raise ValueError("need L >= 2 and c > 0")
    if alpha > 2:
        return c * L
    if alpha > 1:
        return c * L ** (alpha - 1)
    if alpha == 1:
        return c * math.log(L)
    if alpha >= 0.5:
        return c
    return c * L ** (alpha - 0.5)


def _exp_or_inf(log_value: float) -> float:
    return math.exp(log_value) if log_value < 700 else math.inf


def hardness_protocol_time(alpha: float, D: int, L: float, m: float, beta: float, delta: float):
    """Cheapest hardness protocol with unit constants; returns ``(time, strategy, candidates)``."""
    if L < 2 or m < 2 or beta < 1 or not delta > 0:
        raise ValueError("need L >= 2, m >= 2, beta >= 1, delta > 0")
    candidates = {"nearest-neighbor": 6 * L + 1}
    if alpha > D:
        log_t = (alpha - D) * math.log(L) + math.log(math.log(L))
        candidates["long-range-transfer"] = _exp_or_inf(log_t) + 1
    if alpha <= D:
        candidates["entangling-gate-limited"] = 1.0
    n = m ** (1 / beta)
    log_bs = delta * math.log(n) + (alpha / D - 0.5) * math.log(m) + 0.5 * math.log(math.log(m))
    candidates["boson-sampling"] = _exp_or_inf(log_bs)
    strategy = min(candidates, key=candidates.get)
    return candidates[strategy], strategy, candidates


def snake_index(row: int, col: int, shape: Sequence[int]) -> int:
    """Boustrophedon index: even rows run left to right, odd rows right to left."""
    rows, cols = shape
    if not (0 <= row < rows and 0 <= col < cols):
        raise IndexError(f"({row}, {col}) outside a {rows}x{cols} grid")
    return row * cols + (col if row % 2 == 0 else cols - 1 - col)


GRID_HEADER = (
    "alpha", "y", "gamma", "gamma_easy", "gamma_hard", "hard_type", "verdict", "transition_kind", "axis_flag",
)


def alpha_axis(lo: float, hi: float, points: int, spacing: str = "linear") -> list:
    """Alpha samples; ``inverse_sqrt`` spaces them evenly in ``1/sqrt(alpha)`` and allows ``hi = inf``."""
    if points < 1 or lo < 0 or hi < lo:
        raise ValueError("need points >= 1 and 0 <= lo <= hi")
    if spacing == "linear":
        if math.isinf(hi):
            raise ValueError("linear spacing needs a finite upper end")
        return [float(a) for a in np.linspace(lo, hi, points)]
    if spacing != "inverse_sqrt":
        raise ValueError(f"unknown spacing {spacing!r}")
    if lo <= 0:
        raise ValueError("inverse_sqrt spacing needs alpha > 0 at the lower end")
    ys = np.linspace(1 / math.sqrt(hi), 1 / math.sqrt(lo), points)
    return sorted(math.inf if y == 0 else float(1 / y**2) for y in ys)


def phase_grid(
    D: int,
    beta: float,
    V_regime: str,
    alphas: Sequence[float],
    gammas: Sequence[float],
    *,
    delta: float = DEFAULT_DELTA,
    n: float = DEFAULT_N,
):
    """One row per ``(alpha, gamma)``; ``y = 1/sqrt(alpha)`` is left empty and flagged at ``alpha = 0``."""
    rows = []
    for a in alphas:
        y = "" if a == 0 else (0.0 if math.isinf(a) else 1 / math.sqrt(a))
        flag = "alpha_zero" if a == 0 else ""
        for g in gammas:
            v = classify(PhasePoint(a, beta, D, V_regime, g, delta, n))
            rows.append((
                a, y, g,
                "" if v.gamma_easy is None else v.gamma_easy.value,
                v.gamma_hard.value, v.gamma_hard.kind, v.verdict, v.transition_kind, flag,
            ))
    return rows
