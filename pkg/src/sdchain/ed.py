"""Exact diagonalization of XXZ chains in fixed-magnetization sectors.

Site ``l`` (1-based) is bit ``l - 1`` of a configuration; a set bit is spin up.
Energies are in units of J and temperatures in k_B T / J.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Union

import numpy as np
import scipy.linalg

from .model import ChainSpec, CouplingProfile, bond_profile

log = logging.getLogger(__name__)

MAX_SITES = 28
MAX_THERMAL_SITES = 14
STORED_SPARSE_MAX_SITES = 16
DEGENERACY_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class DegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SectorBasis:
    n_sites: int
    n_up: int
    states: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, configs: np.ndarray) -> np.ndarray:
        """Ordinal of each configuration; ``-1`` where it is not in the sector."""
        configs = np.asarray(configs, dtype=np.int64)
        pos = np.searchsorted(self.states, configs)
        pos = np.minimum(pos, self.dim - 1)
        return np.where(self.states[pos] == configs, pos, -1)

    def occupation(self, site: int) -> np.ndarray:
        """0/1 occupation of 0-based ``site`` for every basis state."""
        return (self.states >> site) & 1


def build_basis(n_sites: int, n_up: int) -> SectorBasis:
    if n_sites > MAX_SITES:
        raise ValueError(f"n_sites={n_sites} exceeds the ED memory guard of {MAX_SITES}")
    if not 0 <= n_up <= n_sites:
        raise ValueError(f"n_up={n_up} outside [0, {n_sites}]")
    if n_sites <= 20:
        # dense popcount filter is fastest at this size
        all_states = np.arange(1 << n_sites, dtype=np.int64)
        counts = np.zeros_like(all_states)
        for b in range(n_sites):
            counts += (all_states >> b) & 1
        states = all_states[counts == n_up]
    else:
        states = np.array(
            sorted(sum(1 << b for b in c) for c in combinations(range(n_sites), n_up)),
            dtype=np.int64,
        )
    states.setflags(write=False)
    return SectorBasis(n_sites, n_up, states)


def _check_sector(profile: CouplingProfile, basis: SectorBasis) -> None:
    if profile.n_sites != basis.n_sites:
        raise ValueError(
            f"profile has {profile.n_sites} sites but basis has {basis.n_sites}"
        )


def diagonal_energies(profile: CouplingProfile, delta: float, basis: SectorBasis) -> np.ndarray:
    _check_sector(profile, basis)
    diag = np.zeros(basis.dim)
    for i, j, b in profile.pairs():
        if b == 0.0:
            continue
        same = basis.occupation(i) == basis.occupation(j)
        diag += np.where(same, 0.25, -0.25) * (delta * b)
    return diag


def _hopping_terms(profile: CouplingProfile, basis: SectorBasis):
    """Yield ``(rows, cols, amplitude)`` for every non-zero spin-flip matrix element."""
    for i, j, b in profile.pairs():
        if b == 0.0:
            continue
        ni, nj = basis.occupation(i), basis.occupation(j)
        src = np.nonzero(ni != nj)[0]
        flipped = basis.states[src] ^ ((1 << i) | (1 << j))
        dst = basis.index(flipped)
        yield dst, src, 0.5 * b


def apply_hamiltonian(
    profile: CouplingProfile, delta: float, basis: SectorBasis, v: np.ndarray
) -> np.ndarray:
    """``H v`` for ``H = sum_l b_l (Sx Sx + Sy Sy + delta Sz Sz)``, matrix-free.

    The output stays in ``basis``: flip terms exchange an up and a down spin.
    """
    v = np.asarray(v)
    if v.shape != (basis.dim,):
        raise ValueError(f"vector has shape {v.shape}, basis dimension is {basis.dim}")
    out = diagonal_energies(profile, delta, basis) * v
    for dst, src, amp in _hopping_terms(profile, basis):
        # dst is a permutation of src within the flippable subset: no repeated targets
        out[dst] += amp * v[src]
    return out


class SectorOperator:
    """Cached ``H`` restricted to one sector.

    Stores a CSR matrix for ``N <= 16`` and only the flip index lists above,
    which is what keeps the N = 20-24 Lanczos runs within memory.
    """

    def __init__(self, profile: CouplingProfile, delta: float, basis: SectorBasis):
        _check_sector(profile, basis)
        self.basis = basis
        self.diag = diagonal_energies(profile, delta, basis)
        self._terms = list(_hopping_terms(profile, basis))
        self._matrix = None
        if basis.n_sites <= STORED_SPARSE_MAX_SITES:
            import scipy.sparse

            rows = [np.arange(basis.dim)] + [d for d, _, _ in self._terms]
            cols = [np.arange(basis.dim)] + [s for _, s, _ in self._terms]
            vals = [self.diag] + [np.full(len(d), a) for d, _, a in self._terms]
            self._matrix = scipy.sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(basis.dim, basis.dim),
            )

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix @ v
        out = self.diag * v
        for dst, src, amp in self._terms:
            out[dst] += amp * v[src]
        return out

    def dense(self) -> np.ndarray:
        h = np.diag(self.diag)
        for dst, src, amp in self._terms:
            h[dst, src] += amp
        return h

    def spectral_scale(self) -> float:
        """Gershgorin bound on ``|H|``."""
        radius = np.abs(self.diag).copy()
        for dst, _, amp in self._terms:
            np.add.at(radius, dst, abs(amp))
        return float(radius.max()) if len(radius) else 0.0


@dataclass(frozen=True, eq=False)
class SpinState:
    sector: SectorBasis
    amplitudes: np.ndarray = field(repr=False)
    energy: float = float("nan")
    gap: float = float("nan")
    residual: float = float("nan")


def marshall_seed(basis: SectorBasis) -> np.ndarray:
    """Uniform-magnitude vector carrying the Marshall sign of the sublattice.

    Every antiferromagnetic chain with non-negative bonds has a ground state
    whose Marshall-signed amplitudes are all non-negative, so this seed
    overlaps it. A plain all-equal vector is orthogonal to e.g. the N = 2 singlet.
    """
    odd_up = np.zeros(basis.dim, dtype=np.int64)
    for site in range(1, basis.n_sites, 2):
        odd_up += basis.occupation(site)
    v = np.where(odd_up % 2 == 0, 1.0, -1.0)
    return v / np.linalg.norm(v)


def lanczos_lowest(
    op: SectorOperator,
    v0: np.ndarray,
    tol: float = 1e-10,
    max_krylov: int = 160,
    max_restarts: int = 40,
) -> tuple[float, np.ndarray, float, float]:
    """Lowest eigenpair by Lanczos with full reorthogonalization and explicit restarts.

    Returns ``(energy, vector, second_ritz_value, residual_norm)``.  Convergence
    means ``|H v - E v| <= tol * scale`` with ``scale`` the Gershgorin bound.
    """
    dim = op.dim
    scale = max(op.spectral_scale(), 1e-300)
    if dim == 1:
        e = float(op.diag[0])
        return e, np.ones(1), math.inf, 0.0
    if dim <= 400:
        w, vecs = np.linalg.eigh(op.dense())
        v = vecs[:, 0] * np.sign(vecs[:, 0] @ v0 or 1.0)
        res = float(np.linalg.norm(op.matvec(v) - w[0] * v))
        return float(w[0]), v, float(w[1]), res

    v = v0 / np.linalg.norm(v0)
    second = math.inf
    residual = math.inf
    energy = math.nan
    # keep the Krylov block under ~1.5 GB
    m_max = max(20, min(max_krylov, dim, int(1.5e9 / (8 * dim))))
    for _ in range(max_restarts):
        basis = np.empty((m_max + 1, dim))
        alphas, betas = [], []
        basis[0] = v
        m = 0
        for k in range(m_max):
            w = op.matvec(basis[k])
            a = float(basis[k] @ w)
            alphas.append(a)
            # full reorthogonalization, applied twice for stability
            w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
            w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
            b = float(np.linalg.norm(w))
            m = k + 1
            if b < 1e-14 * scale:
                break
            betas.append(b)
            basis[k + 1] = w / b
            if m >= 8 and m % 4 == 0:
                theta, s = scipy.linalg.eigh_tridiagonal(
                    np.array(alphas), np.array(betas[: m - 1])
                )
                if abs(b * s[-1, 0]) <= tol * scale * 0.1:
                    break
        theta, s = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas[: m - 1]))
        energy = float(theta[0])
        second = float(theta[1]) if m > 1 else math.inf
        v = basis[:m].T @ s[:, 0]
        v /= np.linalg.norm(v)
        residual = float(np.linalg.norm(op.matvec(v) - energy * v))
        if residual <= tol * scale:
            if v @ v0 < 0:
                v = -v
            return energy, v, second, residual
    raise ConvergenceError("Lanczos did not converge", residual)


def _half_filling(spec: ChainSpec) -> int:
    if spec.n_sites % 2:
        raise ValueError(f"ground_state requires even N, got {spec.n_sites}")
    return spec.n_sites // 2


def ground_state(spec: ChainSpec, n_up: int | None = None) -> tuple[float, SpinState]:
    """Lowest eigenpair of ``spec`` in the ``n_up = N/2`` sector (or ``n_up`` if given)."""
    if n_up is None:
        n_up = _half_filling(spec)
    profile = bond_profile(spec)
    basis = build_basis(spec.n_sites, n_up)
    op = SectorOperator(profile, spec.delta, basis)
    tol = 1e-13 if spec.alpha >= 3.5 else 1e-10
    energy, vec, second, residual = lanczos_lowest(op, marshall_seed(basis), tol=tol)
    gap = second - energy
    if gap < DEGENERACY_TOL:
        warnings.warn(
            f"near-degenerate ground state for {spec}: gap estimate {gap:.2e}",
            DegeneracyWarning,
            stacklevel=2,
        )
    log.debug("ground state %s: E=%.15g gap=%.3e residual=%.2e", spec, energy, gap, residual)
    return energy, SpinState(basis, vec, energy, gap, residual)


@dataclass(frozen=True, eq=False)
class ThermalEnsemble:
    spec: ChainSpec
    sectors: list[SectorBasis] = field(repr=False)
    energies: list[np.ndarray] = field(repr=False)
    vectors: list[np.ndarray] = field(repr=False)
    e_min: float = 0.0

    def weights(self, temperature: float) -> list[np.ndarray]:
        """Normalized Boltzmann weights per sector.

        ``temperature == 0`` spreads the weight evenly over the states within
        ``DEGENERACY_TOL`` of ``e_min``.
        """
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        if temperature == 0:
            raw = [(e - self.e_min <= DEGENERACY_TOL).astype(float) for e in self.energies]
        else:
            raw = [np.exp(-(e - self.e_min) / temperature) for e in self.energies]
        z = math.fsum(float(w.sum()) for w in raw)
        return [w / z for w in raw]

    def partition_function(self, temperature: float) -> float:
        """``Z`` with energies measured from ``e_min``."""
        if temperature <= 0:
            raise ValueError("temperature must be > 0")
        return math.fsum(
            float(np.exp(-(e - self.e_min) / temperature).sum()) for e in self.energies
        )

    def all_energies(self) -> np.ndarray:
        return np.sort(np.concatenate(self.energies))


def full_spectrum(spec: ChainSpec) -> ThermalEnsemble:
    if spec.n_sites > MAX_THERMAL_SITES:
        raise ValueError(
            f"full_spectrum is limited to N <= {MAX_THERMAL_SITES}, got {spec.n_sites}"
        )
    profile = bond_profile(spec)
    sectors, energies, vectors = [], [], []
    for n_up in range(spec.n_sites + 1):
        basis = build_basis(spec.n_sites, n_up)
        w, v = np.linalg.eigh(SectorOperator(profile, spec.delta, basis).dense())
        sectors.append(basis)
        energies.append(w)
        vectors.append(v)
    e_min = min(float(e[0]) for e in energies)
    return ThermalEnsemble(spec, sectors, energies, vectors, e_min)


@dataclass(frozen=True)
class EdgeObservables:
    magnetization_m: float
    cx: float
    cz: float
    temperature: float


# ---------------------------------------------------------------------------
# expectation values


def _sz(basis: SectorBasis, site: int) -> np.ndarray:
    return basis.occupation(site) - 0.5


def _flip_pair(basis: SectorBasis, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows where sites i, j are antiparallel, and the rows with both flipped."""
    src = np.nonzero(basis.occupation(i) != basis.occupation(j))[0]
    dst = basis.index(basis.states[src] ^ ((1 << i) | (1 << j)))
    return src, dst


def _sector_terms(basis: SectorBasis, vecs: np.ndarray, w: np.ndarray, i: int, j: int):
    """Weighted ``(<Sz_i>, <Sx_i Sx_j>, <Sz_i Sz_j>)`` contributions of one sector.

    ``vecs`` has one column per state and ``w`` the matching weights.
    """
    prob = (vecs * vecs) @ w
    zi, zj = _sz(basis, i), _sz(basis, j)
    m = float(prob @ zi)
    cz = float(prob @ (zi * zj))
    src, dst = _flip_pair(basis, i, j)
    # <Sx_i Sx_j> = (1/4)<S+_i S-_j + S-_i S+_j> = (1/4) sum_r psi(flip r) psi(r)
    cx = 0.25 * float(((vecs[dst] * vecs[src]) @ w).sum())
    return m, cx, cz


StateLike = Union[SpinState, ThermalEnsemble]


def _check_state(state: StateLike, temperature: float) -> None:
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if isinstance(state, SpinState):
        if temperature != 0:
            raise TypeError("a SpinState only describes T = 0; pass a ThermalEnsemble")
    elif not isinstance(state, ThermalEnsemble):
        raise TypeError(f"expected SpinState or ThermalEnsemble, got {type(state).__name__}")


def _iter_weighted(state: StateLike, temperature: float):
    if isinstance(state, SpinState):
        yield state.sector, state.amplitudes[:, None], np.ones(1)
        return
    for basis, vecs, w in zip(state.sectors, state.vectors, state.weights(temperature)):
        keep = w > 0
        if keep.any():
            yield basis, vecs[:, keep], w[keep]


def pair_observables(state: StateLike, i: int, j: int, temperature: float = 0.0) -> EdgeObservables:
    """``<Sz_i>``, ``<Sx_i Sx_j>`` and ``<Sz_i Sz_j>`` for 0-based sites ``i != j``."""
    _check_state(state, temperature)
    if i == j:
        raise ValueError("sites must differ")
    m = cx = cz = 0.0
    for basis, vecs, w in _iter_weighted(state, temperature):
        dm, dcx, dcz = _sector_terms(basis, vecs, w, i, j)
        m, cx, cz = m + dm, cx + dcx, cz + dcz
    return EdgeObservables(m, cx, cz, temperature)


def edge_observables(spec: ChainSpec, state: StateLike, temperature: float = 0.0) -> EdgeObservables:
    """Edge magnetization and end-to-end correlators ``C^x_{1N}``, ``C^z_{1N}``.

    ``temperature == 0`` takes a :class:`SpinState` (or a :class:`ThermalEnsemble`,
    averaged over its degenerate ground manifold); ``temperature > 0`` needs a
    :class:`ThermalEnsemble`.
    """
    n = _state_sites(state)
    if n != spec.n_sites:
        raise ValueError(f"state has {n} sites, spec has {spec.n_sites}")
    return pair_observables(state, 0, n - 1, temperature)


def _state_sites(state: StateLike) -> int:
    if isinstance(state, SpinState):
        return state.sector.n_sites
    if isinstance(state, ThermalEnsemble):
        return state.spec.n_sites
    raise TypeError(f"expected SpinState or ThermalEnsemble, got {type(state).__name__}")


def reduced_dm_edges(state: StateLike, temperature: float = 0.0) -> np.ndarray:
    """Exact partial trace over sites 2..N-1.

    Returns the 4x4 matrix in the basis ``(up up, up down, down up, down down)``
    of spins (1, N).
    """
    _check_state(state, temperature)
    n = _state_sites(state)
    first, last = 0, n - 1
    edge_mask = (1 << first) | (1 << last)
    # product-basis label -> (bit of site 1, bit of site N), up = 1
    labels = [(1, 1), (1, 0), (0, 1), (0, 0)]
    rho = np.zeros((4, 4))
    for basis, vecs, w in _iter_weighted(state, temperature):
        s1, sn = basis.occupation(first), basis.occupation(last)
        for a, (a1, an) in enumerate(labels):
            rows = np.nonzero((s1 == a1) & (sn == an))[0]
            if len(rows) == 0:
                continue
            bulk = basis.states[rows] & ~edge_mask
            for b, (b1, bn) in enumerate(labels):
                partner = basis.index(bulk | (b1 << first) | (bn << last))
                ok = partner >= 0
                if not ok.any():
                    continue
                # <a, bulk| rho |b, bulk> summed over bulk
                rho[a, b] += float(((vecs[rows[ok]] * vecs[partner[ok]]) @ w).sum())
    return rho
