"""Wootters concurrence of the two edge spins."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

CLAMP_TOL = 1e-12
INVALID_TOL = 1e-8

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


class Method(str, enum.Enum):
    EIGENVALUE_DEF = "eigenvalue-def"
    CORRELATOR_FORMULA = "correlator-formula"


@dataclass(frozen=True)
class ConcurrenceResult:
    value: float
    method: Method
    lambdas: tuple[float, ...] = ()


def check_density_matrix(rho: np.ndarray, tol: float = CLAMP_TOL) -> None:
    """Raise ``ValueError`` unless ``rho`` is a Hermitian, unit-trace, PSD 4x4 matrix."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"two-spin density matrix must be 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")


def spin_flipped_state(rho: np.ndarray) -> np.ndarray:
    """``(sigma_y x sigma_y) rho^* (sigma_y x sigma_y)`` in the basis (uu, ud, du, dd)."""
    rho = np.asarray(rho)
    return _YY @ rho.conj() @ _YY


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def concurrence_from_dm(rho: np.ndarray) -> ConcurrenceResult:
    """Concurrence ``max(0, l1 - l2 - l3 - l4)`` from the full reduced density matrix.

    The ``l_i`` are the square roots of the eigenvalues of ``rho rho~``.  With
    ``A = sqrt(rho) Y sqrt(rho)^*`` (``Y = sigma_y x sigma_y``) one has
    ``sqrt(rho) rho~ sqrt(rho) = A A^dag``, so the ``l_i`` are the singular
    values of ``A``.  This avoids square roots of tiny eigenvalues, which
    would amplify roundoff for rank-deficient states.
    """
    rho = np.asarray(rho, dtype=complex)
    check_density_matrix(rho, tol=INVALID_TOL)
    rho = 0.5 * (rho + rho.conj().T)
    root = _psd_sqrt(rho)
    lambdas = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    value = max(0.0, float(lambdas[0] - lambdas[1:].sum()))
    return ConcurrenceResult(min(value, 1.0), Method.EIGENVALUE_DEF, tuple(map(float, lambdas)))


def correlator_argument(cx: float, cz: float, m: float = 0.0) -> float:
    """``2|C^x| - sqrt((1/4 + C^z)^2 - M^2)``; the concurrence is twice its positive part."""
    radicand = (0.25 + cz) ** 2 - m * m
    if radicand < 0:
        if radicand < -CLAMP_TOL:
            raise ValueError(
                f"(1/4 + Cz)^2 < M^2 for Cz={cz!r}, M={m!r}: inputs are not from a physical state"
            )
        radicand = 0.0
    return 2.0 * abs(cx) - math.sqrt(radicand)


def concurrence_from_correlators(obs) -> ConcurrenceResult:
    """Closed-form concurrence from ``M``, ``C^x_{1N}`` and ``C^z_{1N}``.

    Valid for states that conserve total ``S^z`` and have ``<S^z_1> = <S^z_N>``.
    ``obs`` is anything with ``magnetization_m``, ``cx`` and ``cz`` attributes.
    """
    g = correlator_argument(obs.cx, obs.cz, obs.magnetization_m)
    return ConcurrenceResult(min(2.0 * max(0.0, g), 1.0), Method.CORRELATOR_FORMULA)
