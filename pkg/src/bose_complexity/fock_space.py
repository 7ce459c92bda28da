"""Occupation-number bases for a fixed number of bosons on a lattice.

States are plain tuples of non-negative integers (bosons per site). A
:class:`FockBasis` orders them lexicographically descending, so ``(n, 0, ...)``
always comes first and indices are reproducible between runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

FockState = tuple  # tuple[int, ...], one entry per site

DEFAULT_DIMENSION_LIMIT = 200_000


class BasisCapacityError(ValueError):
    """Raised when a basis would exceed the configured dimension limit."""


@dataclass(frozen=True)
class FockBasis:
    states: tuple
    total_n: int
    site_count: int
    cluster_cap: Optional[int] = None
    cluster_of: Optional[tuple] = None
    support: Optional[tuple] = None
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {s: k for k, s in enumerate(self.states)})

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def occupations(self) -> np.ndarray:
        """Occupation table of shape ``(dim, site_count)``."""
        return np.array(self.states, dtype=np.int64).reshape(len(self.states), self.site_count)

    def basis_vector(self, state: Sequence[int]) -> np.ndarray:
        vec = np.zeros(len(self), dtype=complex)
        vec[self.index[tuple(state)]] = 1.0
        return vec

    def cluster_counts(self, state: Sequence[int]) -> list:
        if self.cluster_of is None:
            raise ValueError("basis has no cluster assignment")
        counts = [0] * (max(self.cluster_of) + 1)
        for site, occ in enumerate(state):
            counts[self.cluster_of[site]] += occ
        return counts

    def embedding(self, sub: "FockBasis") -> np.ndarray:
        """Indices of ``sub``'s states inside this basis (the inclusion map)."""
        return np.array([self.index[s] for s in sub.states], dtype=np.int64)


def _compositions(n: int, slots: int):
    # descending lexicographic order
    if slots == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, slots - 1):
            yield (first,) + rest


def enumerate_basis(
    m: int,
    n: int,
    partition=None,
    cap: Optional[int] = None,
    *,
    support: Optional[Iterable[int]] = None,
    limit: int = DEFAULT_DIMENSION_LIMIT,
) -> FockBasis:
    """All configurations of ``n`` bosons on ``m`` sites.

    Parameters
    ----------
    partition:
        Anything with an ``assignment`` sequence (site -> cluster id). Required
        when ``cap`` is given; the cap applies to the boson count per cluster.
    cap:
        Maximum number of bosons per cluster (``b + 1`` for the truncated
        Hamiltonian, ``1`` with singleton clusters for hardcore bosons).
    support:
        Optional subset of sites allowed to hold bosons. Used for per-cluster
        bases embedded in the global site labelling.
    limit:
        Hard cap on the dimension.
    """
    if m < 1 or n < 0:
        raise ValueError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    if cap is not None and partition is None:
        raise ValueError("a cluster cap requires a partition")
    sites = sorted(set(range(m) if support is None else support))
    if any(s < 0 or s >= m for s in sites):
        raise ValueError("support sites out of range")
    if not sites:
        raise ValueError("empty support")
    if cap is None and math.comb(len(sites) + n - 1, n) > limit:
        raise BasisCapacityError(
            f"basis dimension {math.comb(len(sites) + n - 1, n)} exceeds limit {limit}"
        )

    cluster_of = None
    if partition is not None:
        cluster_of = tuple(int(c) for c in partition.assignment)
        if len(cluster_of) != m:
            raise ValueError("partition does not cover the lattice")

    states = []
    for comp in _compositions(n, len(sites)):
        if support is None:
            occ = comp
        else:
            full = [0] * m
            for s, k in zip(sites, comp):
                full[s] = k
            occ = tuple(full)
        if cap is not None:
            counts = {}
            for site, k in enumerate(occ):
                if k:
                    c = cluster_of[site]
                    counts[c] = counts.get(c, 0) + k
            if any(v > cap for v in counts.values()):
                continue
        states.append(occ)
        if len(states) > limit:
            raise BasisCapacityError(f"basis dimension exceeds limit {limit}")

    return FockBasis(
        states=tuple(states),
        total_n=n,
        site_count=m,
        cluster_cap=cap,
        cluster_of=cluster_of,
        support=None if support is None else tuple(sites),
    )


def hop_element(s: Sequence[int], i: int, j: int):
    """Image of ``s`` under ``a_i^dagger a_j``.

    Returns ``(new_state, amplitude)`` or ``None`` when site ``j`` is empty.
    """
    if i == j:
        raise ValueError("hop needs two distinct sites")
    nj = s[j]
    if nj == 0:
        return None
    ni = s[i]
    out = list(s)
    out[i] = ni + 1
    out[j] = nj - 1
    return tuple(out), math.sqrt(ni + 1) * math.sqrt(nj)


def interaction_energy(s: Sequence[int], V: float) -> float:
    """Bose-Hubbard on-site energy ``sum_i V n_i (n_i - 1) / 2``."""
    return V * sum(k * (k - 1) for k in s) / 2.0
