"""Independent dense reference constructions (Kronecker products, enumeration)."""
import itertools
from functools import reduce

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def site_op(n, ops):
    """Tensor product with ``ops[i]`` on site i; site 0 is the rightmost (least significant) factor."""
    factors = [ops.get(i, I2) for i in reversed(range(n))]
    return reduce(np.kron, factors)


def dense_hamiltonian(n, edges, epsilon, delta, j):
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        H -= epsilon[i] * site_op(n, {i: Z}) + delta[i] * site_op(n, {i: X})
    for (a, b), jab in zip(edges, j):
        H += jab * site_op(n, {a: Z, b: Z})
    return H


def classical_energies(n, edges, j):
    """Ising energy of every spin configuration; index bit i = site i, 0 = up."""
    out = np.zeros(2**n)
    for idx, bits in enumerate(itertools.product((0, 1), repeat=n)):
        spins = [1 - 2 * b for b in reversed(bits)]  # product() varies the last element fastest
        out[idx] = sum(jab * spins[a] * spins[b] for (a, b), jab in zip(edges, j))
    return out


def product_state(vectors):
    """|v_0> (x) ... with v_0 on site 0."""
    return reduce(np.kron, list(reversed(vectors)))


def six_term_state():
    """The frustrated-manifold state as written in the source experiment (signs included)."""
    from fluxqpt.network import basis_state

    plus = ["ddu", "dud", "udd"]
    minus = ["duu", "udu", "uud"]
    v = sum(basis_state(3, s) for s in plus) - sum(basis_state(3, s) for s in minus)
    return v / np.sqrt(6)


def uniform_frustrated_state():
    from fluxqpt.network import basis_state

    v = sum(basis_state(3, s) for s in ["ddu", "dud", "udd", "duu", "udu", "uud"])
    return v / np.sqrt(6)
