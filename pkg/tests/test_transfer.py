import math

import numpy as np
import pytest
import scipy.linalg as la

from bose_complexity.haar import sample_haar_unitary
from bose_complexity.lattice import CouplingCapError, LatticeGeometry
from bose_complexity.transfer import (
    ProtocolError,
    column_order,
    implement_column,
    single_shot,
    state_transfer,
)


def replay(trace, start):
    """Independent replay: explicit matrix exponentials and diagonal phases."""
    psi = np.array(start, dtype=complex)
    for seg in trace.segments:
        if seg.couplings is not None:
            psi = la.expm(-1j * seg.duration * seg.couplings) @ psi
        if seg.phases is not None:
            psi = seg.phases * psi
    return psi


def site(m, k):
    e = np.zeros(m, dtype=complex)
    e[k] = 1.0
    return e


def assert_caps_respected(trace, geom, alpha):
    cap = geom.coupling_cap(alpha)
    for seg in trace.segments:
        if seg.couplings is not None:
            off = np.abs(seg.couplings) * (1 - np.eye(geom.site_count))
            assert np.all(off <= cap * (1 + 1e-12) + 1e-15)


# -- single shot -------------------------------------------------------------


def test_single_shot_even_split():
    geom = LatticeGeometry.chain(3)
    gammas = np.array([0, 1, 1]) / math.sqrt(2)
    trace = single_shot(0, gammas, 0.0, geom)
    pulse = trace.segments[0]
    assert np.allclose(np.abs(pulse.couplings[0, 1:]), [1.0, 1.0])
    assert pulse.omega == pytest.approx(math.sqrt(2))
    assert trace.total_time == pytest.approx(math.pi / (2 * math.sqrt(2)), rel=1e-15)
    assert np.allclose(replay(trace, site(3, 0)), gammas, atol=1e-14)
    assert trace.fidelity == pytest.approx(1.0, abs=1e-14)


def test_single_shot_localized_target_takes_no_time():
    geom = LatticeGeometry.chain(4)
    trace = single_shot(2, site(4, 2), 0.0, geom)
    assert trace.total_time == 0.0
    assert trace.fidelity == pytest.approx(1.0)


@pytest.mark.parametrize("m", [3, 5, 10])
def test_single_shot_uniform_spread(m):
    geom = LatticeGeometry.chain(m)
    gammas = np.ones(m, dtype=complex) / math.sqrt(m - 1)
    gammas[0] = 0
    trace = single_shot(0, gammas, 0.0, geom)
    assert trace.omega_min == pytest.approx(math.sqrt(m - 1))
    assert trace.total_time == pytest.approx(math.pi / (2 * math.sqrt(m - 1)), rel=1e-14)
    assert trace.fidelity == pytest.approx(1.0, abs=1e-13)


def test_single_shot_complex_amplitudes_with_decay():
    geom = LatticeGeometry.chain(6)
    rng = np.random.default_rng(2)
    g = rng.normal(size=6) + 1j * rng.normal(size=6)
    g /= np.linalg.norm(g)
    for alpha in (0.0, 1.3):
        trace = single_shot(3, g, alpha, geom)
        assert_caps_respected(trace, geom, alpha)
        assert np.allclose(replay(trace, site(6, 3)), g, atol=1e-12)


def test_single_shot_rejects_bad_input():
    geom = LatticeGeometry.chain(3)
    with pytest.raises(ProtocolError):
        single_shot(0, [1, 1, 0], 0.0, geom)
    with pytest.raises(ProtocolError):
        single_shot(0, [1, 0], 0.0, geom)


def test_nearest_neighbor_limit_forbids_long_pulses():
    geom = LatticeGeometry.chain(4)
    with pytest.raises(CouplingCapError):
        single_shot(0, np.array([0, 0, 0, 1.0]), math.inf, geom)


# -- state transfer ----------------------------------------------------------


def test_full_transfer_through_nine_ancillas():
    geom = LatticeGeometry.chain(11)
    trace = state_transfer(0, 1, 0.0, 1.0, range(2, 11), 0.0, geom)
    assert trace.total_time == pytest.approx(math.pi / 3, rel=1e-15)
    achieved = replay(trace, site(11, 0))
    assert abs(achieved[1]) ** 2 >= 1 - 1e-12
    assert trace.fidelity >= 1 - 1e-12


def test_transfer_with_no_weight_moved_returns_to_source():
    geom = LatticeGeometry.chain(5)
    trace = state_transfer(0, 4, 1.0, 0.0, [1, 2, 3], 0.0, geom)
    assert trace.total_time == pytest.approx((math.pi / 2) / math.sqrt(3))
    assert abs(replay(trace, site(5, 0))[0]) == pytest.approx(1.0, abs=1e-12)


def test_partial_transfer_with_phases():
    geom = LatticeGeometry.chain(6)
    gi, gj = 0.6 * np.exp(0.4j), 0.8 * np.exp(-1.1j)
    trace = state_transfer(1, 4, gi, gj, [0, 2, 3, 5], 0.7, geom)
    assert_caps_respected(trace, geom, 0.7)
    target = np.zeros(6, dtype=complex)
    target[1], target[4] = gi, gj
    assert np.allclose(replay(trace, site(6, 1)), target, atol=1e-12)


def test_distance_slows_transfer_by_the_cap():
    geom = LatticeGeometry.chain(11)
    base = state_transfer(0, 1, 0.0, 1.0, range(2, 11), 0.0, geom)
    slow = state_transfer(0, 1, 0.0, 1.0, range(2, 11), 0.4, geom)
    assert slow.total_time / base.total_time == pytest.approx(10**0.4, rel=1e-12)
    assert slow.fidelity >= 1 - 1e-12


def test_optimized_couplings_are_never_slower():
    geom = LatticeGeometry.chain(11)
    plain = state_transfer(0, 1, 0.0, 1.0, range(2, 11), 0.4, geom)
    fast = state_transfer(0, 1, 0.0, 1.0, range(2, 11), 0.4, geom, optimize_couplings=True)
    assert fast.total_time <= plain.total_time
    assert fast.fidelity >= 1 - 1e-12


def test_transfer_input_checks():
    geom = LatticeGeometry.chain(4)
    with pytest.raises(ProtocolError):
        state_transfer(0, 1, 0.5, 0.5, [2, 3], 0.0, geom)
    with pytest.raises(ProtocolError):
        state_transfer(0, 1, 0.0, 1.0, [], 0.0, geom)
    with pytest.raises(ProtocolError):
        state_transfer(0, 1, 0.0, 1.0, [1, 2], 0.0, geom)


# -- column synthesis --------------------------------------------------------


def test_identity_column_needs_no_time():
    geom = LatticeGeometry.chain(4)
    for j in range(4):
        trace = implement_column(np.eye(4), j, 0.0, geom)
        assert trace.total_time == 0.0 and trace.fidelity == pytest.approx(1.0)


def test_two_mode_balanced_column():
    geom = LatticeGeometry.chain(2)
    U = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    trace = implement_column(U, 0, 0.0, geom)
    assert len([s for s in trace.segments if s.couplings is not None]) == 1
    assert trace.total_time == pytest.approx(math.pi / 4)
    assert trace.fidelity == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_haar_columns_exact_and_within_time_budget(seed):
    m = 16
    geom = LatticeGeometry.chain(m)
    U = sample_haar_unitary(m, seed)
    for j in range(4):
        trace = implement_column(U, j, 0.0, geom)
        assert np.allclose(replay(trace, site(m, j)), U[:, j], atol=1e-10)
        assert trace.fidelity >= 1 - 1e-10
        assert trace.total_time <= 1.5 * math.pi / trace.omega_min
        assert trace.total_time == pytest.approx(sum(s.duration for s in trace.segments), rel=0, abs=0)


def test_columns_of_one_unitary_stay_orthogonal():
    m = 8
    geom = LatticeGeometry.chain(m)
    U = sample_haar_unitary(m, 42)
    states = [implement_column(U, j, 0.0, geom).achieved_state for j in range(m)]
    gram = np.array([[np.vdot(a, b) for b in states] for a in states])
    assert np.allclose(gram, np.eye(m), atol=1e-6)


def test_columns_with_decay_respect_caps():
    m = 6
    geom = LatticeGeometry.chain(m)
    U = sample_haar_unitary(m, 5)
    trace = implement_column(U, 2, 1.0, geom)
    assert_caps_respected(trace, geom, 1.0)
    assert trace.fidelity >= 1 - 1e-10


def test_column_order_breaks_ties_by_index():
    U = np.full((4, 4), 0.5)
    assert column_order(U, 1) == [0, 2, 3]


def test_non_unitary_rejected():
    geom = LatticeGeometry.chain(3)
    with pytest.raises(ProtocolError):
        implement_column(np.ones((3, 3)), 0, 0.0, geom)


def test_trace_json_shape():
    geom = LatticeGeometry.chain(3)
    trace = single_shot(0, np.array([0, 1, 1]) / math.sqrt(2), 0.0, geom)
    payload = trace.to_json()
    assert set(payload) == {"column", "total_time", "fidelity", "segments"}
    couplings = payload["segments"][0]["nonzero_couplings"]
    assert [c[:2] for c in couplings] == [[0, 1], [0, 2]]
