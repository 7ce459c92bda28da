"""Lattice geometry, cluster partitions, hopping schedules and Hamiltonians.

Hamiltonian convention (single segment)::

    H = sum_{i != j} J_ij a_i^dag a_j + sum_i J_ii n_i + V/2 sum_i n_i (n_i - 1)

with ``J`` Hermitian, so each unordered pair contributes ``J_ij a_i^dag a_j + h.c.``.
Off-diagonal couplings must satisfy ``|J_ij| <= 1 / d(i, j)**alpha``; on-site
fields are unconstrained.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .fock_space import FockBasis, hop_element, interaction_energy

# relative slack when checking the power-law cap
CAP_RTOL = 1e-12


class CouplingCapError(ValueError):
    """A hopping amplitude exceeds the power-law cap."""


class DivergenceError(ValueError):
    """The off-cluster coupling sum does not converge (alpha <= D)."""


@dataclass(frozen=True)
class LatticeGeometry:
    """Hypercubic lattice with unit spacing and open boundaries.

    Sites are labelled in C order over ``shape``; ``metric`` selects the
    distance used for the power-law cap and for ball radii.
    """

    shape: tuple
    metric: str = "euclidean"
    coords: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or any(s < 1 for s in shape):
            raise ValueError(f"invalid lattice shape {self.shape!r}")
        if self.metric not in ("euclidean", "chebyshev"):
            raise ValueError(f"unknown metric {self.metric!r}")
        object.__setattr__(self, "shape", shape)
        grid = np.indices(shape).reshape(len(shape), -1).T
        object.__setattr__(self, "coords", grid.astype(float))

    @classmethod
    def chain(cls, m: int, metric: str = "euclidean") -> "LatticeGeometry":
        return cls((m,), metric)

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def site_count(self) -> int:
        return int(np.prod(self.shape))

    def distance(self, i: int, j: int) -> float:
        diff = np.abs(self.coords[i] - self.coords[j])
        if self.metric == "chebyshev":
            return float(diff.max())
        return float(np.sqrt((diff**2).sum()))

    def distance_matrix(self) -> np.ndarray:
        diff = np.abs(self.coords[:, None, :] - self.coords[None, :, :])
        if self.metric == "chebyshev":
            return diff.max(axis=-1)
        return np.sqrt((diff**2).sum(axis=-1))

    def coupling_cap(self, alpha: float) -> np.ndarray:
        """Matrix of maximal ``|J_ij|``; the diagonal is ``inf`` (unconstrained)."""
        d = self.distance_matrix()
        with np.errstate(divide="ignore"):
            if math.isinf(alpha):
                cap = np.where(d <= 1.0, 1.0, 0.0)
            else:
                cap = np.where(d > 0, d ** (-float(alpha)) if alpha else 1.0, np.inf)
        np.fill_diagonal(cap, np.inf)
        return cap


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters covering the lattice plus the initial boson positions.

    ``occupied`` lists initially occupied sites; a site may repeat to hold
    several bosons. Widths are always recomputed from the geometry.
    """

    geometry: LatticeGeometry
    assignment: tuple
    occupied: tuple
    grid_coords: Optional[tuple] = None
    widths: tuple = field(init=False)

    def __post_init__(self):
        m = self.geometry.site_count
        assignment = tuple(int(a) for a in self.assignment)
        if len(assignment) != m:
            raise ValueError("cluster assignment must list every site")
        ids = sorted(set(assignment))
        if ids != list(range(len(ids))):
            raise ValueError("cluster ids must be 0..K-1")
        occupied = tuple(int(s) for s in self.occupied)
        if any(s < 0 or s >= m for s in occupied):
            raise ValueError("occupied site out of range")
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "occupied", occupied)
        object.__setattr__(self, "widths", tuple(self._width(k) for k in range(len(ids))))

    @classmethod
    def blocks(cls, geometry: LatticeGeometry, width, occupied: Sequence[int]) -> "ClusterPartition":
        """Tile the lattice with hypercubic blocks of side ``width`` per axis."""
        widths = (width,) * geometry.dimension if np.isscalar(width) else tuple(width)
        if len(widths) != geometry.dimension:
            raise ValueError("block width needs one entry per axis")
        counts = []
        for ext, w in zip(geometry.shape, widths):
            if w < 1 or ext % w:
                raise ValueError(f"block width {w} does not tile extent {ext}")
            counts.append(ext // w)
        block = (geometry.coords // np.array(widths, dtype=float)).astype(int)
        assignment = np.ravel_multi_index(block.T, counts)
        grid = tuple(tuple(int(x) for x in np.unravel_index(k, counts)) for k in range(int(np.prod(counts))))
        return cls(geometry, tuple(int(a) for a in assignment), tuple(occupied), grid)

    @property
    def count(self) -> int:
        return len(self.widths)

    def sites(self, k: int) -> list:
        return [s for s, a in enumerate(self.assignment) if a == k]

    def bosons(self, k: int) -> list:
        return [s for s in self.occupied if self.assignment[s] == k]

    def boson_counts(self) -> list:
        return [len(self.bosons(k)) for k in range(self.count)]

    @property
    def b(self) -> int:
        return max(self.boson_counts())

    @property
    def L(self) -> float:
        return min(self.widths)

    def occupation(self) -> tuple:
        occ = [0] * self.geometry.site_count
        for s in self.occupied:
            occ[s] += 1
        return tuple(occ)

    def _width(self, k: int) -> float:
        inside = self.bosons(k)
        outside = [s for s, a in enumerate(self.assignment) if a != k]
        if not inside or not outside:
            return math.inf
        return min(self.geometry.distance(i, o) for i in set(inside) for o in outside)

    def cluster_distance(self, k: int, q: int) -> int:
        """Cluster distance ``l`` with ``l + 1 = max_d |k_d - q_d|`` on the block grid."""
        if self.grid_coords is None:
            raise ValueError("cluster distance needs a block partition")
        a, b = self.grid_coords[k], self.grid_coords[q]
        return max(abs(x - y) for x, y in zip(a, b)) - 1


@dataclass(frozen=True)
class Segment:
    duration: float
    J: np.ndarray

    @property
    def onsite(self) -> np.ndarray:
        return np.real(np.diag(self.J))


@dataclass(frozen=True)
class CouplingSchedule:
    """Piecewise-constant hopping matrices plus interaction strength ``V``."""

    segments: tuple
    V: float
    alpha: float

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def window(self, t0: float, t1: float) -> "CouplingSchedule":
        """Sub-schedule covering ``[t0, t1]``, splitting segments as needed."""
        if t1 < t0 - 1e-15:
            raise ValueError("window end before start")
        out = []
        start = 0.0
        for seg in self.segments:
            end = start + seg.duration
            lo, hi = max(start, t0), min(end, t1)
            if hi > lo:
                out.append(Segment(hi - lo, seg.J))
            start = end
        return CouplingSchedule(tuple(out), self.V, self.alpha)


def validate_couplings(geom: LatticeGeometry, J: np.ndarray, alpha: float) -> np.ndarray:
    """Check the power-law cap and return an exactly Hermitian copy of ``J``."""
    J = np.asarray(J, dtype=complex)
    m = geom.site_count
    if J.shape != (m, m):
        raise ValueError(f"hopping matrix must be {m}x{m}, got {J.shape}")
    if np.max(np.abs(J - J.conj().T), initial=0.0) > 1e-12:
        raise ValueError("hopping matrix is not Hermitian")
    J = (J + J.conj().T) / 2
    cap = geom.coupling_cap(alpha)
    bad = np.abs(J) > cap * (1 + CAP_RTOL) + 1e-15
    np.fill_diagonal(bad, False)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise CouplingCapError(
            f"|J[{i},{j}]| = {abs(J[i, j]):.6g} exceeds 1/d^alpha = {cap[i, j]:.6g} "
            f"(d = {geom.distance(i, j):.6g}, alpha = {alpha})"
        )
    return J


def make_schedule(geom: LatticeGeometry, segments: Iterable, V: float, alpha: float) -> CouplingSchedule:
    """Validate ``(duration, J)`` pairs and build a schedule."""
    segs = []
    for duration, J in segments:
        if not duration > 0:
            raise ValueError(f"segment durations must be positive, got {duration}")
        segs.append(Segment(float(duration), validate_couplings(geom, J, alpha)))
    return CouplingSchedule(tuple(segs), float(V), float(alpha))


def power_law_couplings(geom: LatticeGeometry, alpha: float, scale: float = 1.0) -> np.ndarray:
    """Uniform hopping saturating the cap: ``J_ij = scale / d(i,j)**alpha``."""
    cap = geom.coupling_cap(alpha)
    J = scale * np.where(np.isfinite(cap), cap, 0.0)
    return J.astype(complex)


def random_couplings(geom: LatticeGeometry, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Random admissible hopping: uniform modulus below the cap, uniform phase."""
    m = geom.site_count
    cap = geom.coupling_cap(alpha)
    cap = np.where(np.isfinite(cap), cap, 0.0)
    mod = rng.uniform(0.0, 1.0, size=(m, m))
    phase = np.exp(2j * np.pi * rng.uniform(size=(m, m)))
    J = np.triu(cap * mod * phase, 1)
    return J + J.conj().T


def build_hamiltonian(
    geom: LatticeGeometry,
    J: np.ndarray,
    V: float,
    basis: FockBasis,
    region: Optional[Iterable[int]] = None,
    *,
    sparse: bool = False,
):
    """Matrix of the Hamiltonian restricted to terms supported in ``region``.

    Hops whose image leaves ``basis`` are dropped, so on a truncated basis this
    is exactly the compressed operator ``Q H Q``.
    """
    m = geom.site_count
    J = np.asarray(J, dtype=complex)
    sites = list(range(m)) if region is None else sorted(set(int(r) for r in region))
    in_region = np.zeros(m, dtype=bool)
    in_region[sites] = True
    rows, cols, vals = [], [], []
    index = basis.index
    for col, s in enumerate(basis.states):
        diag = interaction_energy([s[i] for i in sites], V)
        diag += sum(J[i, i].real * s[i] for i in sites)
        if diag != 0.0:
            rows.append(col)
            cols.append(col)
            vals.append(diag)
        for j in sites:
            if s[j] == 0:
                continue
            for i in sites:
                if i == j or J[i, j] == 0:
                    continue
                image, amp = hop_element(s, i, j)
                row = index.get(image)
                if row is None:
                    continue
                rows.append(row)
                cols.append(col)
                vals.append(J[i, j] * amp)
    dim = len(basis)
    H = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex).tocsr()
    return H if sparse else H.toarray()


def truncate_hamiltonian(H, basis_full: FockBasis, basis_trunc: FockBasis):
    """Principal submatrix of ``H`` on the truncated states (``Q H Q``)."""
    idx = basis_full.embedding(basis_trunc)
    if sp.issparse(H):
        return H.tocsr()[idx][:, idx]
    return np.asarray(H)[np.ix_(idx, idx)]


def intercluster_couplings(partition: ClusterPartition, J: np.ndarray) -> np.ndarray:
    """``J`` with every intra-cluster entry (and the diagonal) zeroed."""
    a = np.array(partition.assignment)
    mask = a[:, None] != a[None, :]
    return np.where(mask, np.asarray(J, dtype=complex), 0.0)


def gershgorin_radius(M: np.ndarray) -> float:
    """Maximum absolute row sum, an upper bound on every eigenvalue modulus."""
    return float(np.abs(M).sum(axis=1).max(initial=0.0))


@dataclass(frozen=True)
class OffClusterBound:
    analytic_bound: float
    c_geo: float
    exact_norm: Optional[float] = None


def offcluster_geometric_constant(partition: ClusterPartition, alpha: float) -> float:
    """Explicit constant in front of ``b L^(D - alpha)`` from the cluster-pair count.

    Each cluster distance ``l`` contributes ``2^(D+1) D (l+1)^(D-1)`` groupings
    of ``2b``-boson normal modes with Gershgorin radius ``L^D ((l+1) L)^-alpha``.
    The sum is evaluated over the cluster distances present in the lattice.
    """
    D = partition.geometry.dimension
    if alpha <= D:
        raise DivergenceError(f"off-cluster coupling sum diverges for alpha={alpha} <= D={D}")
    K = partition.count
    if K < 2:
        return 0.0
    if partition.grid_coords is None:
        l_max = 0
    else:
        l_max = max(partition.cluster_distance(k, q) for k, q in itertools.combinations(range(K), 2))
    ls = np.arange(l_max + 1, dtype=float)
    return float(np.sum(2.0 ** (D + 1) * D * (ls + 1) ** (D - 1) * 2.0 * (ls + 1) ** (-alpha)))


def offcluster_norm_bound(
    partition: ClusterPartition,
    alpha: float,
    b: Optional[int] = None,
    *,
    J: Optional[np.ndarray] = None,
    exact: bool = False,
    limit: int = 20_000,
) -> OffClusterBound:
    """Bound on ``max_{eta in im Q} ||(H - QHQ) eta||`` for cluster cap ``b + 1``.

    With ``exact=True`` (and a hopping matrix ``J``) the left-hand side is also
    computed by dense singular values on the ``n``-boson space.
    """
    geom = partition.geometry
    D = geom.dimension
    b = partition.b if b is None else b
    c_geo = offcluster_geometric_constant(partition, alpha)
    L = partition.L
    analytic = 0.0 if math.isinf(L) else c_geo * b * L ** (D - alpha)
    exact_norm = None
    if exact:
        if J is None:
            raise ValueError("exact norm needs a hopping matrix")
        from .fock_space import enumerate_basis

        n = len(partition.occupied)
        full = enumerate_basis(geom.site_count, n, partition, limit=limit)
        trunc = enumerate_basis(geom.site_count, n, partition, cap=b + 1, limit=limit)
        Jx = intercluster_couplings(partition, J)
        H = build_hamiltonian(geom, Jx, 0.0, full)
        inside = set(full.embedding(trunc).tolist())
        outside = [k for k in range(len(full)) if k not in inside]
        if not outside:
            exact_norm = 0.0
        else:
            block = H[np.ix_(outside, sorted(inside))]
            exact_norm = float(np.linalg.norm(block, 2))
    return OffClusterBound(analytic, c_geo, exact_norm)
