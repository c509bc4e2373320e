"""Exact XY-chain (delta = 0) solver through the Jordan-Wigner mapping.

Conventions: ``c_l^dag = S^+_l prod_{m<l} (1 - 2 n_m)`` with ``n_m = S^z_m + 1/2``.
With these signs the spin Hamiltonian ``sum_l b_l (Sx Sx + Sy Sy)`` becomes
``sum_ij c_i^dag h_ij c_j`` with positive hopping ``h_{l,l+1} = b_l / 2`` and no
boundary term for open chains.  The many-body ground state fills every mode
with ``eps_k < 0``.  For an antiferromagnetic bond this gives ``G_{l,l+1} < 0``
and ``C^x < 0``; downstream only ``|C^x|`` is used.

Majoranas are ``A_m = c_m + c_m^dag`` and ``B_m = c_m^dag - c_m`` so that
``A_m B_m = 1 - 2 n_m`` and ``4 Sx_1 Sx_N = B_1 A_2 B_2 ... A_{N-1} B_{N-1} A_N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import expit

from .model import Boundary, ChainSpec, bond_profile
from .pfaffian import pfaffian

ZERO_MODE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HoppingMatrix:
    """Real symmetric single-particle matrix.

    ``off_diagonal`` holds the nearest-neighbour hoppings; ``corner`` couples
    the last site back to the first on a ring (0 for open chains).
    """

    off_diagonal: np.ndarray = field(repr=False)
    corner: float = 0.0

    @property
    def size(self) -> int:
        return len(self.off_diagonal) + 1

    def dense(self) -> np.ndarray:
        h = np.diag(self.off_diagonal, 1)
        h = h + h.T
        if self.corner:
            h[0, -1] += self.corner
            h[-1, 0] += self.corner
        return h


@dataclass(frozen=True, eq=False)
class ModeSet:
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)  # column k is mode k

    @property
    def size(self) -> int:
        return len(self.energies)


def hopping_matrix(spec: ChainSpec) -> HoppingMatrix:
    """Hopping matrix ``b_l / 2`` of an open XY chain."""
    if spec.delta != 0:
        raise ValueError(f"the free-fermion engine needs delta = 0, got {spec.delta}")
    if spec.boundary is Boundary.UNIFORM_PERIODIC:
        raise ValueError("use ring_hopping_matrix for periodic chains")
    return HoppingMatrix(0.5 * bond_profile(spec).bonds)


def ring_hopping_matrix(n_sites: int, j_coupling: float = 1.0, antiperiodic: bool = False) -> HoppingMatrix:
    """Uniform ring with periodic or antiperiodic fermion closure.

    A spin ring with ``N_f`` up spins maps to fermions with periodic closure
    for odd ``N_f`` and antiperiodic closure for even ``N_f``.
    """
    t = 0.5 * j_coupling
    if n_sites == 2:
        # both bonds join the same pair; the closure sign decides whether they add or cancel
        return HoppingMatrix(np.array([0.0 if antiperiodic else 2 * t]))
    return HoppingMatrix(np.full(n_sites - 1, t), corner=-t if antiperiodic else t)


def diagonalize(h: HoppingMatrix) -> ModeSet:
    if h.corner:
        eps, vecs = np.linalg.eigh(h.dense())
    else:
        eps, vecs = scipy.linalg.eigh_tridiagonal(np.zeros(h.size), h.off_diagonal)
    return ModeSet(eps, vecs)


def occupations(modes: ModeSet, temperature: float) -> np.ndarray:
    eps = modes.energies
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        occ = np.where(eps < 0, 1.0, 0.0)
        occ[np.abs(eps) <= ZERO_MODE_TOL] = 0.5
        return occ
    return expit(-eps / temperature)


def green_function(modes: ModeSet, temperature: float) -> np.ndarray:
    """``G_ij = <c_i^dag c_j>`` of the grand-canonical state at zero chemical potential."""
    occ = occupations(modes, temperature)
    phi = modes.vectors
    g = (phi * occ) @ phi.T
    return 0.5 * (g + g.T)


def edge_cz(g: np.ndarray) -> float:
    n = g.shape[0]
    if n < 2:
        raise ValueError("need at least two sites")
    return float((g[0, 0] - 0.5) * (g[-1, -1] - 0.5) - g[0, -1] * g[-1, 0])


def string_matrix(g: np.ndarray) -> np.ndarray:
    """``D_jk = <B_j A_{k+1}> = 2 G_{j,k+1} - delta_{j,k+1}`` for ``j, k = 1..N-1``."""
    n = g.shape[0]
    d = 2.0 * g[: n - 1, 1:]
    d -= np.eye(n, dtype=float)[: n - 1, 1:]
    return d


def edge_cx_determinant(g: np.ndarray) -> float:
    """``<Sx_1 Sx_N> = det(D) / 4``."""
    if g.shape[0] < 2:
        raise ValueError("need at least two sites")
    return 0.25 * float(np.linalg.det(string_matrix(g)))


def majorana_contractions(g: np.ndarray) -> np.ndarray:
    """Skew-symmetric contraction matrix of ``(B_1, A_2, B_2, ..., A_{N-1}, B_{N-1}, A_N)``.

    Entry ``(p, q)`` with ``p < q`` is ``<gamma_p gamma_q>``; equal-type pairs on
    different sites vanish for a number-conserving state.
    """
    n = g.shape[0]
    ops = [("B", 0)]
    for m in range(1, n - 1):
        ops += [("A", m), ("B", m)]
    ops.append(("A", n - 1))
    size = len(ops)
    mat = np.zeros((size, size))
    for p in range(size):
        kp, sp = ops[p]
        for q in range(p + 1, size):
            kq, sq = ops[q]
            if kp == kq:
                continue  # <A_i A_j> = <B_i B_j> = 0 for i != j
            if kp == "B":
                val = 2.0 * g[sp, sq] - (sp == sq)
            else:
                # A_i B_j = -B_j A_i whenever i != j; same-site pairs never appear with A first
                val = -(2.0 * g[sq, sp] - (sp == sq))
            mat[p, q] = val
            mat[q, p] = -val
    return mat


def edge_cx_pfaffian(g: np.ndarray) -> float:
    """Same correlator as :func:`edge_cx_determinant`, through the full Wick Pfaffian."""
    if g.shape[0] < 2:
        raise ValueError("need at least two sites")
    return 0.25 * pfaffian(majorana_contractions(g))


def ground_energy_ff(modes: ModeSet) -> float:
    eps = modes.energies
    return float(eps[eps < -ZERO_MODE_TOL].sum())


def edge_correlators(spec: ChainSpec, temperature: float = 0.0) -> tuple[float, float]:
    """``(C^x_{1N}, C^z_{1N})`` of an open XY chain at ``temperature``."""
    g = green_function(diagonalize(hopping_matrix(spec)), temperature)
    return edge_cx_determinant(g), edge_cz(g)


def ring_nn_correlators(
    n_sites: int, antiperiodic: bool, temperature: float = 0.0, j_coupling: float = 1.0
) -> tuple[float, float]:
    """Nearest-neighbour ``(<Sx_1 Sx_2>, <Sz_1 Sz_2>)`` on a uniform XY ring."""
    g = green_function(diagonalize(ring_hopping_matrix(n_sites, j_coupling, antiperiodic)), temperature)
    cx = 0.5 * g[0, 1]
    cz = (g[0, 0] - 0.5) * (g[1, 1] - 0.5) - g[0, 1] * g[1, 0]
    return float(cx), float(cz)
