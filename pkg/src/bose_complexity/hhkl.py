"""Cluster-local sampler built on the HHKL spatial decomposition.

For a clustered initial state the decomposed propagator reduces to a product
of forward evolutions on nested balls around each cluster's bosons; the
backward shell evolutions commute through to the vacuum and are never applied.
Each cluster is evolved on its own small Fock space, the product state is the
approximation to the true evolved state, and samples are drawn cluster by
cluster.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .fock_space import FockBasis, enumerate_basis
from .lattice import ClusterPartition, CouplingSchedule, DivergenceError, LatticeGeometry, offcluster_norm_bound
from .propagator import StateVector, evolve_region

DEFAULT_T1 = 0.5
# decay constant in the e^{-gamma ell} term of the decomposition error
DECAY_CONSTANT = 1.0


class ScopeError(ValueError):
    """Parameters outside the range where the easiness analysis applies."""


class InfeasiblePlanError(ValueError):
    """Evolution too long for the cluster geometry; fall back to exact evolution."""


@dataclass(frozen=True)
class HHKLPlan:
    t: float
    steps: int
    step_time: float
    shell_width: float
    core_radius: float
    velocity: float
    regime: str
    alpha: float
    dimension: int
    L: float
    centers: tuple
    radii: tuple
    balls: tuple  # balls[i][k] = sorted site tuple of B^i_k, k = 0..N

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t, self.steps + 1)


def default_velocity(partition: ClusterPartition, J: np.ndarray) -> float:
    """``2 (b + 1) max |J_ij|`` over off-diagonal couplings."""
    off = np.abs(np.asarray(J)) * (1 - np.eye(len(J)))
    return 2.0 * (partition.b + 1) * float(off.max(initial=0.0))


def fixed_step_threshold(D: int, beta: float) -> float:
    """Critical ``alpha`` above which fixed O(1) time steps beat a single step."""
    return math.inf if beta <= 1 else 2 * D + D / (beta - 1)


def _cluster_centre(geom: LatticeGeometry, sites: Sequence[int], bosons: Sequence[int]):
    if not bosons:
        return sites[0], 0.0
    best = None
    for c in sites:
        r = max(geom.distance(c, s) for s in bosons)
        if best is None or r < best[1] - 1e-12:
            best = (c, r)
    return best


def plan_decomposition(
    partition: ClusterPartition,
    t: float,
    alpha: float,
    v: float,
    beta: float,
    *,
    t1: float = DEFAULT_T1,
    ell: Optional[int] = None,
) -> HHKLPlan:
    geom = partition.geometry
    D = geom.dimension
    if not alpha > D + 1:
        raise ScopeError(f"the decomposition error bound needs alpha > D + 1 (alpha={alpha}, D={D})")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    regime = "fixed_step" if alpha > fixed_step_threshold(D, beta) else "single_step"
    N = max(1, math.ceil(t / t1 - 1e-12)) if regime == "fixed_step" else 1
    step_time = t / N

    centers, radii = [], []
    for k in range(partition.count):
        c, r = _cluster_centre(geom, partition.sites(k), partition.bosons(k))
        centers.append(c)
        radii.append(r)
    r0 = max(radii)
    L = partition.L

    if math.isinf(L):
        width = math.inf
    elif ell is None:
        width = float(math.floor((L - r0) / N + 1e-12))
    else:
        width = float(ell)
        if r0 + (N - 1) * width > L + 1e-12:
            raise InfeasiblePlanError(f"ell={ell} lets step-{N} balls leave their clusters")
    if width < 1:
        raise InfeasiblePlanError(
            f"shell width {width:g} < 1 for t={t}, N={N}, L={L}, r0={r0}; use exact evolution"
        )

    balls = []
    for k in range(partition.count):
        sites = partition.sites(k)
        per = []
        for step in range(N + 1):
            radius = radii[k] + step * width
            per.append(tuple(s for s in sites if geom.distance(centers[k], s) <= radius + 1e-9))
        balls.append(tuple(per))
    return HHKLPlan(
        t=float(t),
        steps=N,
        step_time=step_time,
        shell_width=width,
        core_radius=r0,
        velocity=float(v),
        regime=regime,
        alpha=float(alpha),
        dimension=D,
        L=L,
        centers=tuple(centers),
        radii=tuple(radii),
        balls=tuple(balls),
    )


@dataclass(frozen=True)
class ClusterState:
    cluster: int
    sites: tuple
    state: StateVector


def decompose_evolve(
    plan: HHKLPlan,
    geom: LatticeGeometry,
    schedule: CouplingSchedule,
    partition: ClusterPartition,
) -> list:
    """Evolve each cluster's bosons through the nested balls of ``plan``."""
    m = geom.site_count
    occ0 = partition.occupation()
    times = plan.times
    out = []
    for k in range(partition.count):
        sites = tuple(partition.sites(k))
        nk = sum(occ0[s] for s in sites)
        basis = enumerate_basis(m, nk, support=sites)
        local = tuple(occ0[s] if s in sites else 0 for s in range(m))
        psi = StateVector.fock(basis, local)
        for step in range(1, plan.steps + 1):
            window = schedule.window(times[step - 1], times[step])
            if window.total_time <= 0:
                continue
            psi = evolve_region(geom, window, psi, window.total_time, plan.balls[k][step])
        out.append(ClusterState(k, sites, psi))
    return out


def product_state(cluster_states: Sequence[ClusterState], basis: FockBasis) -> StateVector:
    """Embed the product of cluster states into a global basis."""
    amps = np.zeros(len(basis), dtype=complex)
    factors = []
    for cs in cluster_states:
        nz = np.flatnonzero(cs.state.amplitudes)
        factors.append([(np.array(cs.state.basis.states[i]), cs.state.amplitudes[i]) for i in nz])
    for combo in itertools.product(*factors):
        occ = tuple(int(x) for x in sum(o for o, _ in combo))
        amp = np.prod([a for _, a in combo])
        idx = basis.index.get(occ)
        if idx is None:
            raise ValueError("product state leaves the target basis")
        amps[idx] += amp
    return StateVector(basis, amps)


def error_bound(plan: HHKLPlan, K: int) -> float:
    """Decomposition error with unit prefactor and unit decay constant."""
    ell = plan.shell_width
    D = plan.dimension
    if math.isinf(ell):
        return 0.0
    suppression = ell ** (-plan.alpha + D + 1) + math.exp(-DECAY_CONSTANT * ell)
    boundary = sum((plan.core_radius + j * ell) ** (D - 1) for j in range(plan.steps))
    return K * math.expm1(plan.velocity * plan.step_time) * suppression * boundary


def regime_name(alpha: float, beta: float, D: int) -> str:
    if math.isinf(alpha):
        return "nearest_neighbor"
    if not alpha > D + 1:
        raise ScopeError(f"no easiness regime for alpha={alpha} <= D + 1 = {D + 1}")
    if alpha > fixed_step_threshold(D, beta):
        return "fixed_step"
    return "single_step"


def regime_error(alpha: float, beta: float, D: int, n: float, L: float, v: float, t: float) -> float:
    """Asymptotic decomposition error in the three easiness regimes (unit prefactor)."""
    regime = regime_name(alpha, beta, D)
    if regime == "nearest_neighbor":
        return n * math.exp(v * t - L)
    if regime == "fixed_step":
        return n * t ** (alpha - D) / L ** (alpha - 2 * D)
    return n * math.expm1(v * t) / L ** (alpha - D - 1)


def easiness_time(alpha: float, beta: float, D: int, n: float, L: float, v: float) -> float:
    """Time at which :func:`regime_error` reaches 1."""
    regime = regime_name(alpha, beta, D)
    if regime == "nearest_neighbor":
        return (L - math.log(n)) / v
    if regime == "fixed_step":
        return n ** (-1 / (alpha - D)) * L ** ((alpha - 2 * D) / (alpha - D))
    return math.log1p(L ** (alpha - D - 1) / n) / v


def truncation_error_bound(
    partition: ClusterPartition,
    alpha: float,
    b: int,
    t: float,
    eps_of_tau: Callable[[float], float],
    *,
    points: Optional[Sequence[float]] = None,
) -> float:
    """Analytic off-cluster norm times ``int_0^t eps(tau) dtau``."""
    D = partition.geometry.dimension
    if alpha <= D:
        raise DivergenceError(f"truncation bound needs alpha > D (alpha={alpha}, D={D})")
    if t <= 0:
        return 0.0
    norm = offcluster_norm_bound(partition, alpha, b).analytic_bound
    pts = None if points is None else [p for p in points if 0 < p < t] or None
    value, _ = integrate.quad(eps_of_tau, 0.0, t, epsrel=1e-6, epsabs=0.0, limit=200, points=pts)
    return norm * value


def sample_output(cluster_states: Sequence[ClusterState], rng_seed: int, shots: Optional[int] = None):
    """Sample occupations cluster by cluster with generators seeded ``seed + k``.

    Returns one occupation tuple, or an ``(shots, m)`` array when ``shots`` is given.
    """
    if not cluster_states:
        raise ValueError("no cluster states to sample")
    m = cluster_states[0].state.basis.site_count
    size = 1 if shots is None else int(shots)
    total = np.zeros((size, m), dtype=np.int64)
    for cs in cluster_states:
        rng = np.random.default_rng(int(rng_seed) + cs.cluster)
        p = cs.state.probabilities()
        p = p / p.sum()
        picks = rng.choice(len(p), size=size, p=p)
        total += cs.state.basis.occupations()[picks]
    if shots is None:
        return tuple(int(x) for x in total[0])
    return total
