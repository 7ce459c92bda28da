import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings
from hypothesis import strategies as st

from bose_complexity import propagator
from bose_complexity.fock_space import enumerate_basis
from bose_complexity.lattice import LatticeGeometry, build_hamiltonian, make_schedule, random_couplings
from bose_complexity.propagator import (
    NumericalFailure,
    StateVector,
    evolve_exact,
    evolve_region,
    expectation,
)


def dimer_schedule(V=0.0, t=10.0):
    geom = LatticeGeometry.chain(2)
    J = np.array([[0, 1.0], [1.0, 0]])
    return geom, make_schedule(geom, [(t, J)], V, 0.0)


def random_schedule(m, alpha, seeds, durations, V=0.7):
    geom = LatticeGeometry.chain(m)
    segs = [(d, random_couplings(geom, alpha, np.random.default_rng(s))) for s, d in zip(seeds, durations)]
    return geom, make_schedule(geom, segs, V, alpha)


def test_zero_time_is_identity():
    geom, sched = dimer_schedule()
    basis = enumerate_basis(2, 1)
    psi0 = StateVector.fock(basis, (1, 0))
    assert np.array_equal(evolve_exact(geom, sched, psi0, 0.0).amplitudes, psi0.amplitudes)


def test_single_boson_dimer_quarter_period():
    geom, sched = dimer_schedule()
    psi = evolve_exact(geom, sched, StateVector.fock(enumerate_basis(2, 1), (1, 0)), math.pi / 2)
    assert np.allclose(psi.amplitudes, [0, -1j], atol=1e-14)


@pytest.mark.parametrize("t", [0.1, 0.4, 1.0, 2.3])
def test_two_boson_dimer_against_hand_matrix(t):
    geom, sched = dimer_schedule()
    basis = enumerate_basis(2, 2)
    psi = evolve_exact(geom, sched, StateVector.fock(basis, (1, 1)), t)
    r2 = math.sqrt(2)
    H = np.array([[0, r2, 0], [r2, 0, r2], [0, r2, 0]])  # (2,0), (1,1), (0,2)
    oracle = la.expm(-1j * t * H)[:, 1]
    assert np.allclose(psi.amplitudes, oracle, atol=1e-13)
    # spectrum {-2, 0, 2} gives the return amplitude cos(2t)
    assert psi.amplitudes[1] == pytest.approx(math.cos(2 * t), abs=1e-13)


def test_region_covering_lattice_matches_exact():
    geom, sched = random_schedule(4, 1.0, [1, 2], [0.4, 0.6])
    basis = enumerate_basis(4, 2)
    psi0 = StateVector.fock(basis, (1, 0, 1, 0))
    a = evolve_exact(geom, sched, psi0, 0.9)
    b = evolve_region(geom, sched, psi0, 0.9, range(4))
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-13)


def test_forward_then_backward_is_identity():
    geom, sched = random_schedule(5, 2.0, [3, 4, 5], [0.3, 0.5, 0.2])
    basis = enumerate_basis(5, 2)
    psi0 = StateVector.fock(basis, (0, 1, 0, 1, 0))
    fwd = evolve_region(geom, sched, psi0, 0.9, [0, 1, 2, 3])
    back = evolve_region(geom, sched, fwd, 0.9, [0, 1, 2, 3], direction="backward")
    assert np.allclose(back.amplitudes, psi0.amplitudes, atol=1e-10)


def test_region_without_bosons_leaves_state_alone():
    geom, sched = random_schedule(6, 1.5, [7], [1.0])
    basis = enumerate_basis(6, 2)
    psi0 = StateVector.fock(basis, (1, 1, 0, 0, 0, 0))
    psi = evolve_region(geom, sched, psi0, 1.0, [3, 4, 5])
    assert abs(abs(psi.overlap(psi0)) - 1) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.2), st.floats(0.0, 1.2), st.integers(0, 1000))
def test_composition(t1, t2, seed):
    geom, sched = random_schedule(4, 1.0, [seed, seed + 1], [0.8, 1.6])
    basis = enumerate_basis(4, 2)
    psi0 = StateVector.fock(basis, (2, 0, 0, 0))
    whole = evolve_exact(geom, sched, psi0, t1 + t2)
    mid = evolve_exact(geom, sched, psi0, t1)
    rest = sched.window(t1, t1 + t2)
    split = evolve_exact(geom, rest, mid, rest.total_time)
    assert np.allclose(whole.amplitudes, split.amplitudes, atol=1e-10)


def test_energy_conserved_on_static_segment():
    geom, sched = random_schedule(5, 1.0, [11], [3.0], V=1.3)
    basis = enumerate_basis(5, 3)
    H = build_hamiltonian(geom, sched.segments[0].J, sched.V, basis)
    psi0 = StateVector(basis, np.ones(len(basis), dtype=complex) / math.sqrt(len(basis)))
    e0 = expectation(H, psi0)
    for t in (0.5, 1.5, 3.0):
        assert expectation(H, evolve_exact(geom, sched, psi0, t)) == pytest.approx(e0, abs=1e-9)


def test_sparse_path_matches_dense(monkeypatch):
    geom, sched = random_schedule(5, 1.0, [5, 6], [0.5, 0.5])
    basis = enumerate_basis(5, 3)
    psi0 = StateVector.fock(basis, (1, 1, 1, 0, 0))
    dense = evolve_exact(geom, sched, psi0, 0.8)
    monkeypatch.setattr(propagator, "DENSE_LIMIT", 5)
    sparse = evolve_exact(geom, sched, psi0, 0.8)
    assert np.allclose(dense.amplitudes, sparse.amplitudes, atol=1e-12)


def test_norm_drift_raises(monkeypatch):
    geom, sched = dimer_schedule()
    psi0 = StateVector.fock(enumerate_basis(2, 1), (1, 0))
    monkeypatch.setattr(propagator, "apply_exponential", lambda H, psi, t: 1.01 * psi)
    with pytest.raises(NumericalFailure):
        evolve_exact(geom, sched, psi0, 1.0)


def test_time_outside_schedule():
    geom, sched = dimer_schedule(t=1.0)
    psi0 = StateVector.fock(enumerate_basis(2, 1), (1, 0))
    with pytest.raises(ValueError):
        evolve_exact(geom, sched, psi0, 1.5)
    with pytest.raises(ValueError):
        evolve_exact(geom, sched, psi0, -0.1)
    with pytest.raises(ValueError):
        evolve_region(geom, sched, psi0, 0.5, direction="sideways")


def test_overlap_requires_common_basis():
    a = StateVector.fock(enumerate_basis(2, 1), (1, 0))
    b = StateVector.fock(enumerate_basis(3, 1), (1, 0, 0))
    with pytest.raises(ValueError):
        a.overlap(b)
