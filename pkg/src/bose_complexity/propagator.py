"""Exact time-ordered evolution under piecewise-constant Hamiltonians.

This is the reference everything else is checked against. Each segment is
exponentiated exactly: dense eigendecomposition up to ``DENSE_LIMIT`` states,
``scipy.sparse.linalg.expm_multiply`` beyond.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .fock_space import FockBasis
from .lattice import CouplingSchedule, LatticeGeometry, build_hamiltonian

DENSE_LIMIT = 2000
NORM_DRIFT_TOL = 1e-8


class NumericalFailure(RuntimeError):
    """Norm drift signalling an ill-conditioned exponential."""


@dataclass(frozen=True)
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray

    @classmethod
    def fock(cls, basis: FockBasis, occupation) -> "StateVector":
        return cls(basis, basis.basis_vector(occupation))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        if other.basis is not self.basis and other.basis.states != self.basis.states:
            raise ValueError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def distance(self, other: "StateVector") -> float:
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


def apply_exponential(H, psi: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i H t) psi``."""
    if t == 0.0:
        return psi.copy()
    dim = H.shape[0]
    if dim <= DENSE_LIMIT:
        Hd = H.toarray() if hasattr(H, "toarray") else np.asarray(H)
        w, v = la.eigh(Hd)
        return v @ (np.exp(-1j * w * t) * (v.conj().T @ psi))
    return spla.expm_multiply(-1j * t * H.tocsc(), psi)


def propagator_matrix(H, t: float) -> np.ndarray:
    """Dense ``exp(-i H t)``."""
    Hd = H.toarray() if hasattr(H, "toarray") else np.asarray(H)
    if t == 0.0:
        return np.eye(Hd.shape[0], dtype=complex)
    w, v = la.eigh(Hd)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _check_norm(psi: np.ndarray, reference: float) -> None:
    drift = abs(np.linalg.norm(psi) - reference)
    if drift > NORM_DRIFT_TOL:
        raise NumericalFailure(f"norm drifted by {drift:.3e} during evolution")


def _evolve(geom, schedule, psi0, t, region, backward):
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if t > schedule.total_time * (1 + 1e-12) + 1e-15:
        raise ValueError(f"time {t} exceeds schedule duration {schedule.total_time}")
    basis = psi0.basis
    steps = []
    elapsed = 0.0
    for seg in schedule.segments:
        if elapsed >= t:
            break
        dt = min(seg.duration, t - elapsed)
        elapsed += seg.duration
        if dt > 0:
            steps.append((seg, dt))
    # (U_R)^dag = U_1^dag ... U_k^dag: reverse order, negative time
    if backward:
        steps = [(seg, -dt) for seg, dt in reversed(steps)]
    psi = np.array(psi0.amplitudes, dtype=complex)
    start = np.linalg.norm(psi)
    for seg, dt in steps:
        H = build_hamiltonian(geom, seg.J, schedule.V, basis, region, sparse=len(basis) > DENSE_LIMIT)
        psi = apply_exponential(H, psi, dt)
    _check_norm(psi, start)
    return StateVector(basis, psi)


def evolve_exact(
    geom: LatticeGeometry, schedule: CouplingSchedule, psi0: StateVector, t: float
) -> StateVector:
    """Evolve ``psi0`` from time 0 to ``t`` under the full Hamiltonian."""
    return _evolve(geom, schedule, psi0, t, None, False)


def evolve_region(
    geom: LatticeGeometry,
    schedule: CouplingSchedule,
    psi0: StateVector,
    t: float,
    region: Optional[Iterable[int]] = None,
    direction: str = "forward",
) -> StateVector:
    """Evolve under the terms supported entirely inside ``region``.

    ``direction="backward"`` applies the adjoint of the forward propagator.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    return _evolve(geom, schedule, psi0, t, region, direction == "backward")


def expectation(H, psi: StateVector) -> float:
    return float(np.real(np.vdot(psi.amplitudes, H @ psi.amplitudes)))
