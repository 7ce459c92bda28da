import math
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bose_complexity.fock_space import (
    BasisCapacityError,
    enumerate_basis,
    hop_element,
    interaction_energy,
)


def two_clusters_of_two():
    return SimpleNamespace(assignment=(0, 0, 1, 1))


def test_single_boson_on_two_sites():
    basis = enumerate_basis(2, 1)
    assert basis.states == ((1, 0), (0, 1))


def test_two_bosons_on_three_sites_has_six_states():
    assert len(enumerate_basis(3, 2)) == 6


def test_cluster_cap_keeps_one_boson_per_cluster():
    full = enumerate_basis(4, 2)
    capped = enumerate_basis(4, 2, two_clusters_of_two(), cap=1)
    # brute-force filter of the untruncated list
    expected = [s for s in full.states if s[0] + s[1] <= 1 and s[2] + s[3] <= 1]
    assert len(full) == 10
    assert list(capped.states) == expected
    assert len(capped) == 4


def test_ordering_is_lexicographic_descending():
    states = enumerate_basis(4, 3).states
    assert list(states) == sorted(states, reverse=True)
    assert states[0] == (3, 0, 0, 0)


def test_support_restricts_occupied_sites():
    basis = enumerate_basis(5, 2, support=[1, 3])
    assert basis.states == ((0, 2, 0, 0, 0), (0, 1, 0, 1, 0), (0, 0, 0, 2, 0))
    assert basis.support == (1, 3)


def test_dimension_limit():
    with pytest.raises(BasisCapacityError):
        enumerate_basis(20, 10, limit=1000)


@pytest.mark.parametrize("m, n", [(0, 1), (3, -1)])
def test_invalid_sizes(m, n):
    with pytest.raises(ValueError):
        enumerate_basis(m, n)


def test_cap_requires_partition():
    with pytest.raises(ValueError):
        enumerate_basis(3, 2, cap=1)


def test_embedding_maps_substates():
    full = enumerate_basis(4, 2)
    sub = enumerate_basis(4, 2, two_clusters_of_two(), cap=1)
    idx = full.embedding(sub)
    assert [full.states[k] for k in idx] == list(sub.states)


def test_cluster_counts():
    basis = enumerate_basis(4, 2, two_clusters_of_two())
    assert basis.cluster_counts((1, 0, 0, 1)) == [1, 1]


@pytest.mark.parametrize(
    "state, i, j, expected",
    [
        ((0, 1), 0, 1, ((1, 0), 1.0)),
        ((1, 1), 0, 1, ((2, 0), math.sqrt(2))),
        ((2, 0), 1, 0, ((1, 1), math.sqrt(2))),
    ],
)
def test_hop_element_examples(state, i, j, expected):
    image, amp = hop_element(state, i, j)
    assert image == expected[0]
    assert amp == pytest.approx(expected[1], rel=1e-15)


def test_hop_from_empty_site_vanishes():
    assert hop_element((1, 0), 0, 1) is None


def test_hop_needs_distinct_sites():
    with pytest.raises(ValueError):
        hop_element((1, 0), 0, 0)


@pytest.mark.parametrize("state, V, energy", [((1, 1, 1), 5, 0), ((2, 0), 4, 4), ((3, 1), 2, 6)])
def test_interaction_energy_examples(state, V, energy):
    assert interaction_energy(state, V) == energy


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 4))
def test_dimension_identity(m, n):
    assert len(enumerate_basis(m, n)) == math.comb(m + n - 1, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(1, 4), st.data())
def test_hop_adjointness(m, n, data):
    states = enumerate_basis(m, n).states
    s = data.draw(st.sampled_from(states))
    i = data.draw(st.integers(0, m - 1))
    j = data.draw(st.integers(0, m - 1).filter(lambda x: x != i))
    forward = hop_element(s, i, j)
    if forward is None:
        return
    image, amp = forward
    back_image, back_amp = hop_element(image, j, i)
    assert back_image == s
    assert back_amp == pytest.approx(amp, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.data())
def test_truncated_basis_closed_under_single_hops_from_b_states(b, data):
    # 3 clusters of 2 sites; states with <= b per cluster stay inside the cap b+1 basis after one hop
    part = SimpleNamespace(assignment=(0, 0, 1, 1, 2, 2))
    n = data.draw(st.integers(1, 3 * b))
    trunc = enumerate_basis(6, n, part, cap=b + 1)
    inner = [s for s in trunc.states if max(trunc.cluster_counts(s)) <= b]
    if not inner:
        return
    s = data.draw(st.sampled_from(inner))
    for i in range(6):
        for j in range(6):
            if i != j and (hop := hop_element(s, i, j)) is not None:
                assert hop[0] in trunc.index


def test_hardcore_basis_dimension():
    part = SimpleNamespace(assignment=tuple(range(6)))
    assert len(enumerate_basis(6, 3, part, cap=1)) == math.comb(6, 3)
