import numpy as np
import pytest

# Single-site operators in the (down, up) basis: index 1 = up = set bit.
SZ = np.diag([-0.5, 0.5])
SP = np.array([[0.0, 0.0], [1.0, 0.0]])
SM = SP.T
SX = 0.5 * (SP + SM)
I2 = np.eye(2)


def site_op(op, site, n):
    """Embed a one-site operator; site 0 is the least significant bit."""
    out = np.array([[1.0]])
    for k in reversed(range(n)):
        out = np.kron(out, op if k == site else I2)
    return out


def dense_xxz(bond_list, delta, n):
    """Full 2^n Hamiltonian from explicit Kronecker products.

    ``bond_list`` holds ``(i, j, strength)`` triples with 0-based sites.
    """
    h = np.zeros((2**n, 2**n))
    for i, j, b in bond_list:
        h += b * 0.5 * (site_op(SP, i, n) @ site_op(SM, j, n) + site_op(SM, i, n) @ site_op(SP, j, n))
        h += b * delta * site_op(SZ, i, n) @ site_op(SZ, j, n)
    return h


def embed(basis, amplitudes):
    full = np.zeros(2**basis.n_sites)
    full[basis.states] = amplitudes
    return full


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
