"""Free-boson protocols acting on a single particle.

Every protocol here is a sequence of pulses that couple one site to many
others at once. Such a pulse only mixes the source mode with the normalised
mode ``b = sum_j J_ji a_j / omega``, rotating between the two at frequency
``omega = sqrt(sum_j |J_ji|^2)``. Phase fixes are instantaneous on-site
rotations with zero duration, since on-site fields are unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from .lattice import CouplingCapError, LatticeGeometry, validate_couplings
from .propagator import NumericalFailure


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class TraceSegment:
    duration: float
    couplings: Optional[np.ndarray] = None  # single-particle hopping matrix
    phases: Optional[np.ndarray] = None  # instantaneous diagonal rotation
    omega: Optional[float] = None
    label: str = ""

    def nonzero_couplings(self) -> list:
        if self.couplings is None:
            return []
        iu = np.argwhere(np.triu(np.abs(self.couplings) > 0, 1))
        return [[int(i), int(j), float(self.couplings[i, j].real), float(self.couplings[i, j].imag)] for i, j in iu]


@dataclass(frozen=True)
class ProtocolTrace:
    segments: tuple
    achieved_state: np.ndarray
    target_state: np.ndarray
    column: Optional[int] = None
    total_time: float = field(init=False)
    fidelity: float = field(init=False)

    def __post_init__(self):
        drift = abs(np.linalg.norm(self.achieved_state) - 1.0)
        if drift > 1e-10:
            raise NumericalFailure(f"single-particle norm drifted by {drift:.3e}")
        object.__setattr__(self, "total_time", float(sum(s.duration for s in self.segments)))
        overlap = np.vdot(self.target_state, self.achieved_state)
        object.__setattr__(self, "fidelity", float(abs(overlap) ** 2))

    @property
    def leakage(self) -> float:
        return 1.0 - self.fidelity

    @property
    def omegas(self) -> list:
        return [s.omega for s in self.segments if s.omega is not None]

    @property
    def omega_min(self) -> Optional[float]:
        om = self.omegas
        return min(om) if om else None

    def to_json(self) -> dict:
        return {
            "column": self.column,
            "total_time": self.total_time,
            "fidelity": self.fidelity,
            "segments": [
                {"duration": s.duration, "nonzero_couplings": s.nonzero_couplings()} for s in self.segments
            ],
        }


def run_segments(segments: Sequence[TraceSegment], start: np.ndarray) -> np.ndarray:
    """Exact single-particle evolution through ``segments``."""
    psi = np.array(start, dtype=complex)
    for seg in segments:
        if seg.couplings is not None and seg.duration > 0:
            w, v = la.eigh(seg.couplings)
            psi = v @ (np.exp(-1j * w * seg.duration) * (v.conj().T @ psi))
        if seg.phases is not None:
            psi = seg.phases * psi
    return psi


def _cap(d, alpha):
    if math.isinf(alpha):
        return 1.0 if d <= 1 else 0.0
    return d ** (-alpha) if alpha else 1.0


def _scale(geom, alpha, source, weights, optimize):
    """Largest common prefactor ``c`` with ``c |w_j| <= 1/d(source, j)^alpha``."""
    nz = np.flatnonzero(np.abs(weights) > 0)
    if optimize:
        c = min(_cap(geom.distance(source, j), alpha) / abs(weights[j]) for j in nz)
    else:
        worst = max(geom.distance(source, j) for j in nz)
        c = _cap(worst, alpha) / float(np.max(np.abs(weights[nz])))
    if c <= 0:
        raise CouplingCapError(f"alpha={alpha} forbids a coupling this pulse from site {source} needs")
    return c


def _pulse(geom, alpha, source, weights, scale, duration, label):
    m = geom.site_count
    J = np.zeros((m, m), dtype=complex)
    J[:, source] = scale * weights
    J[source, :] = np.conj(scale * weights)
    J[source, source] = 0.0
    J = validate_couplings(geom, J, alpha)
    omega = float(np.linalg.norm(J[:, source]))
    return TraceSegment(float(duration), couplings=J, omega=omega, label=label)


def _phase(m, fixes, label="phase"):
    ph = np.ones(m, dtype=complex)
    for site, value in fixes.items():
        ph[site] = value
    return TraceSegment(0.0, phases=ph, label=label)


def _unit(z):
    return z / abs(z) if abs(z) > 0 else 1.0


def _single_shot_segments(geom, alpha, i, gammas, optimize):
    m = geom.site_count
    g = np.array(gammas, dtype=complex)
    gi = g[i]
    g[i] = 0.0
    if np.linalg.norm(g) < 1e-15:
        return [_phase(m, {i: _unit(gi)})]
    c = _scale(geom, alpha, i, g, optimize)
    omega = c * float(np.linalg.norm(g))
    t = math.acos(min(1.0, abs(gi))) / omega
    pulse = _pulse(geom, alpha, i, g, c, t, "single-shot")
    # the pulse leaves |gi| on the source and -i g elsewhere
    fixes = {int(j): 1j for j in np.flatnonzero(np.abs(g) > 0)}
    fixes[i] = _unit(gi)
    return [pulse, _phase(m, fixes)]


def single_shot(
    i: int,
    gammas: Sequence[complex],
    alpha: float,
    geom: LatticeGeometry,
    *,
    optimize_couplings: bool = False,
) -> ProtocolTrace:
    """Map ``a_i^dag -> sum_j gamma_j a_j^dag`` with one pulse from site ``i``."""
    g = np.asarray(gammas, dtype=complex)
    if g.shape != (geom.site_count,):
        raise ProtocolError("need one target amplitude per site")
    if abs(np.vdot(g, g).real - 1.0) > 1e-10:
        raise ProtocolError("target amplitudes must have unit norm")
    segs = _single_shot_segments(geom, alpha, i, g, optimize_couplings)
    start = np.zeros(geom.site_count, dtype=complex)
    start[i] = 1.0
    return ProtocolTrace(tuple(segs), run_segments(segs, start), g)


def _transfer_segments(geom, alpha, i, j, gamma_i, gamma_j, ancillas, optimize):
    m = geom.site_count
    anc = sorted(set(int(a) for a in ancillas))
    if not anc:
        raise ProtocolError("state transfer needs at least one ancilla")
    if i in anc or j in anc or i == j:
        raise ProtocolError("ancillas must be disjoint from the two endpoints")
    w = np.zeros(m, dtype=complex)
    w[anc] = 1.0
    if optimize:
        c = min(_scale(geom, alpha, i, w, True), _scale(geom, alpha, j, w, True))
    else:
        c = _cap(max(geom.distance(e, a) for e in (i, j) for a in anc), alpha)
        if c <= 0:
            raise CouplingCapError(f"alpha={alpha} forbids the ancilla couplings of this transfer")
    omega = c * math.sqrt(len(anc))
    first = _pulse(geom, alpha, i, w, c, math.acos(min(1.0, abs(gamma_i))) / omega, "transfer-out")
    second = _pulse(geom, alpha, j, w, c, (math.pi / 2) / omega, "transfer-in")
    # the two pulses leave |gamma_i| on i and -sqrt(1 - |gamma_i|^2) on j
    fixes = {i: _unit(gamma_i), j: -_unit(gamma_j)}
    return [first, second, _phase(m, fixes)]


def state_transfer(
    i: int,
    j: int,
    gamma_i: complex,
    gamma_j: complex,
    ancillas: Sequence[int],
    alpha: float,
    geom: LatticeGeometry,
    *,
    optimize_couplings: bool = False,
) -> ProtocolTrace:
    """Map ``a_i^dag -> gamma_i a_i^dag + gamma_j a_j^dag`` through an ancilla mode.

    Round one rotates site ``i`` into the uniform superposition over the
    ancillas, round two rotates that mode fully onto site ``j``.
    """
    if abs(abs(gamma_i) ** 2 + abs(gamma_j) ** 2 - 1.0) > 1e-10:
        raise ProtocolError("|gamma_i|^2 + |gamma_j|^2 must equal 1")
    segs = _transfer_segments(geom, alpha, i, j, gamma_i, gamma_j, ancillas, optimize_couplings)
    m = geom.site_count
    start = np.zeros(m, dtype=complex)
    start[i] = 1.0
    target = np.zeros(m, dtype=complex)
    target[i] = gamma_i
    target[j] = gamma_j
    return ProtocolTrace(tuple(segs), run_segments(segs, start), target)


def column_order(U: np.ndarray, j: int) -> list:
    """Modes other than ``j`` by nonincreasing ``|U_ij|``; ties by mode index."""
    return sorted((i for i in range(U.shape[0]) if i != j), key=lambda i: (-abs(U[i, j]), i))


def implement_column(
    U: np.ndarray,
    j: int,
    alpha: float,
    geom: LatticeGeometry,
    *,
    optimize_couplings: bool = False,
) -> ProtocolTrace:
    """Prepare column ``j`` of ``U`` from a boson on site ``j``.

    A state transfer first parks ``sqrt(1 - |U_jj|^2)`` on the mode with the
    largest off-diagonal entry (skipped when ``U_jj`` already dominates), then
    a single-shot pulse from that mode spreads it over the rest.
    """
    U = np.asarray(U, dtype=complex)
    m = U.shape[0]
    if U.shape != (m, m) or m != geom.site_count:
        raise ProtocolError("unitary size must match the lattice")
    if np.max(np.abs(U.conj().T @ U - np.eye(m))) > 1e-10:
        raise ProtocolError("matrix is not unitary")
    col = U[:, j]
    start = np.zeros(m, dtype=complex)
    start[j] = 1.0
    rest_sq = 1.0 - abs(col[j]) ** 2
    if rest_sq < 1e-14:
        segs = [_phase(m, {j: _unit(col[j])}, "localized")]
        return ProtocolTrace(tuple(segs), run_segments(segs, start), col, column=j)

    order = column_order(U, j)
    first = order[0]
    if abs(col[j]) >= abs(col[first]) or m < 3:
        segs = _single_shot_segments(geom, alpha, j, col, optimize_couplings)
    else:
        s = math.sqrt(rest_sq)
        ancillas = [k for k in range(m) if k not in (j, first)]
        segs = _transfer_segments(geom, alpha, j, first, col[j], s, ancillas, optimize_couplings)
        gammas = col / s
        gammas[j] = 0.0
        segs += _single_shot_segments(geom, alpha, first, gammas, optimize_couplings)
    return ProtocolTrace(tuple(segs), run_segments(segs, start), col, column=j)
