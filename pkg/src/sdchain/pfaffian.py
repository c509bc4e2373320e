"""Pfaffian of a real skew-symmetric matrix by pivoted Parlett-Reid elimination."""

from __future__ import annotations

import numpy as np


def pfaffian(a: np.ndarray, check: bool = True) -> float:
    """Pfaffian of the real skew-symmetric matrix ``a``.

    Eliminates two rows/columns per step, swapping the largest entry of the
    current column into the pivot position (each swap flips the sign).
    Odd dimension gives 0 only if ``check`` is off; otherwise it is an error.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("pfaffian needs a square matrix")
    if check and not np.allclose(a, -a.T, atol=1e-12 * max(1.0, np.abs(a).max(initial=0))):
        raise ValueError("matrix is not skew-symmetric")
    if n % 2:
        if check:
            raise ValueError(f"odd dimension {n}: the Pfaffian is not defined")
        return 0.0
    result = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1 :, k])))
        if kp != k + 1:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
            result = -result
        pivot = a[k + 1, k]
        if pivot == 0.0:
            return 0.0
        result *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2 :] / a[k, k + 1]
            # rank-2 update keeps the trailing block skew-symmetric
            upd = np.outer(tau, a[k + 2 :, k + 1])
            a[k + 2 :, k + 2 :] += upd - upd.T
    return float(result)
