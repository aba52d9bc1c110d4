"""Spin-network model and sparse operators on the 2**n computational basis.

Basis convention: index ``b`` encodes site ``i`` in bit ``i`` (site 0 is the
least significant bit); bit value 0 is spin up (sigma^z = +1), 1 is spin down.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

TOPOLOGIES = ("triangle", "nn-nnn-chain", "custom")

#: environment variable holding the memory budget in bytes
MEMORY_BUDGET_ENV = "FLUXQPT_MEMORY_BUDGET"
DEFAULT_MEMORY_BUDGET = 2 * 1024**3


class MemoryBudgetError(ValueError):
    """Raised when a 2**n-dimensional object would not fit the memory budget."""

    def __init__(self, n: int, required: int, budget: int):
        self.n = n
        self.required = required
        self.budget = budget
        super().__init__(
            f"n={n} needs about {required} bytes, budget is {budget} bytes "
            f"(set {MEMORY_BUDGET_ENV} to raise it)"
        )


def memory_budget() -> int:
    raw = os.environ.get(MEMORY_BUDGET_ENV)
    if raw is None:
        return DEFAULT_MEMORY_BUDGET
    return int(float(raw))


def required_bytes(n: int, krylov_vectors: int = 200) -> int:
    """Rough peak memory for one Hamiltonian plus an iterative eigensolve."""
    dim = 2**n
    # csr storage: complex value + int64 column per nonzero, (n + 1) nonzeros per row
    ham = (n + 1) * dim * (16 + 8) + (dim + 1) * 8
    vectors = (krylov_vectors + 8) * dim * 16
    return ham + vectors


def check_memory(n: int) -> None:
    budget = memory_budget()
    need = required_bytes(n)
    if need > budget:
        raise MemoryBudgetError(n, need, budget)


@dataclass(frozen=True)
class SpinNetwork:
    """Lattice of ``n`` spin-1/2 sites with pairwise sigma^z sigma^z couplings."""

    n: int
    edges: tuple[tuple[int, int], ...]
    topology: str = "custom"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        normed = []
        for edge in self.edges:
            i, j = (int(x) for x in edge)
            if i == j:
                raise ValueError(f"self-loop on site {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge {(i, j)} out of range for n={self.n}")
            normed.append((min(i, j), max(i, j)))
        if len(set(normed)) != len(normed):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", tuple(normed))

    @classmethod
    def triangle(cls) -> SpinNetwork:
        return cls(3, ((0, 1), (1, 2), (0, 2)), "triangle")

    @classmethod
    def chain(cls, n: int) -> SpinNetwork:
        """Open chain with nearest- and next-nearest-neighbour couplings."""
        edges = [(i, i + 1) for i in range(n - 1)] + [(i, i + 2) for i in range(n - 2)]
        return cls(n, tuple(edges), "nn-nnn-chain")

    @classmethod
    def complete(cls, n: int) -> SpinNetwork:
        return cls(n, tuple(combinations(range(n), 2)), "custom")

    @classmethod
    def from_topology(cls, topology: str, n: int | None = None, edges=None) -> SpinNetwork:
        if topology == "triangle":
            if n not in (None, 3):
                raise ValueError(f"triangle topology has n=3, got n={n}")
            return cls.triangle()
        if topology == "nn-nnn-chain":
            if n is None:
                raise ValueError("nn-nnn-chain needs n")
            return cls.chain(n)
        if topology == "custom":
            if n is None or edges is None:
                raise ValueError("custom topology needs n and edges")
            return cls(n, tuple(tuple(e) for e in edges), "custom")
        raise ValueError(f"unknown topology {topology!r}")

    @property
    def dim(self) -> int:
        return 2**self.n

    def contiguous_blocks(self) -> list[tuple[int, int, int]]:
        return [(i, i + 1, i + 2) for i in range(self.n - 2)]

    def to_dict(self) -> dict:
        return {"topology": self.topology, "n": self.n, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class ControlParams:
    """Per-site bias and tunnelling, per-edge coupling, all in GHz."""

    epsilon: np.ndarray
    delta: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        for name in ("epsilon", "delta", "j"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, network: SpinNetwork, delta: float, j: float, epsilon: float = 0.0) -> ControlParams:
        return cls(
            np.full(network.n, epsilon),
            np.full(network.n, delta),
            np.full(len(network.edges), j),
        )

    def check(self, network: SpinNetwork) -> None:
        if self.epsilon.size != network.n or self.delta.size != network.n:
            raise ValueError(
                f"site parameters must have length n={network.n}, got "
                f"epsilon[{self.epsilon.size}], delta[{self.delta.size}]"
            )
        if self.j.size != len(network.edges):
            raise ValueError(f"j must have one entry per edge ({len(network.edges)}), got {self.j.size}")


@dataclass(frozen=True)
class SparseOperator:
    """Operator on the 2**n spin space stored as a CSR matrix."""

    matrix: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got {m.shape}")
        dim = m.shape[0]
        if dim < 1 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def __matmul__(self, v):
        return apply(self, v)

    def __add__(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator(self.matrix + other.matrix)

    def __sub__(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator(self.matrix - other.matrix)

    def __mul__(self, scalar) -> SparseOperator:
        return SparseOperator(self.matrix * scalar)

    __rmul__ = __mul__

    def dot(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator(self.matrix @ other.matrix)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermitian_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def norm_bound(self) -> float:
        """Max absolute row sum; bounds the spectral radius."""
        return float(abs(self.matrix).sum(axis=1).max())

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))

    @classmethod
    def identity(cls, n: int) -> SparseOperator:
        return cls(sp.identity(2**n, dtype=float, format="csr"))

    @classmethod
    def zero(cls, n: int) -> SparseOperator:
        return cls(sp.csr_matrix((2**n, 2**n), dtype=float))


def apply(op: SparseOperator, v: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product; no renormalisation."""
    v = np.asarray(v)
    if v.shape[0] != op.dim:
        raise ValueError(f"vector length {v.shape[0]} does not match operator dimension {op.dim}")
    return op.matrix @ v


def _basis_indices(n: int) -> np.ndarray:
    return np.arange(2**n, dtype=np.int64)


def z_signs(n: int) -> np.ndarray:
    """sigma^z eigenvalue of each site for every basis state, shape (2**n, n)."""
    idx = _basis_indices(n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def moments(n: int) -> np.ndarray:
    """Total moment (#up - #down) of every basis state."""
    return z_signs(n).sum(axis=1, dtype=np.int64)


def _flip_terms(n: int, weights, dim: int):
    idx = _basis_indices(n)
    rows, cols, vals, sites = [], [], [], []
    for i, w in enumerate(weights):
        if w == 0:
            continue
        rows.append(idx)
        cols.append(idx ^ (1 << i))
        vals.append(np.full(dim, w, dtype=float))
        sites.append(i)
    return rows, cols, vals, sites


def build_hamiltonian(network: SpinNetwork, params: ControlParams) -> SparseOperator:
    """Transverse-field Ising Hamiltonian of the network.

    H = sum_i -(eps_i Z_i + delta_i X_i) + sum_(i,j) J_ij Z_i Z_j, in GHz.
    All diagonal contributions are folded into one entry per row.
    """
    params.check(network)
    check_memory(network.n)
    n, dim = network.n, network.dim
    signs = z_signs(n).astype(float)
    diag = -(signs @ params.epsilon)
    for (a, b), jab in zip(network.edges, params.j):
        diag += jab * signs[:, a] * signs[:, b]
    idx = _basis_indices(n)
    rows, cols, vals, _ = _flip_terms(n, -params.delta, dim)
    rows.insert(0, idx)
    cols.insert(0, idx)
    vals.insert(0, diag)
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    return SparseOperator(m)


def build_pauli_sum(network: SpinNetwork | int, axis: str, weights=None) -> SparseOperator:
    """sum_i w_i sigma_i^axis; with unit weights and axis 'z' this is the total moment."""
    n = network if isinstance(network, int) else network.n
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.size != n:
        raise ValueError(f"weights must have length {n}, got {w.size}")
    check_memory(n)
    dim = 2**n
    idx = _basis_indices(n)
    if axis == "z":
        return SparseOperator(sp.diags(z_signs(n) @ w, format="csr"))
    rows, cols, vals, sites = _flip_terms(n, w, dim)
    if axis == "y":
        signs = z_signs(n)
        # <r|sigma^y|c> = -i * (sigma^z of site i in row state r)
        vals = [-1j * val * signs[:, i] for val, i in zip(vals, sites)]
    if not rows:
        return SparseOperator(sp.csr_matrix((dim, dim)))
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    return SparseOperator(m)


def basis_state(n: int, spins: str) -> np.ndarray:
    """Computational basis vector from a string like 'udu' (site 0 first)."""
    if len(spins) != n or set(spins) - {"u", "d"}:
        raise ValueError(f"expected {n} characters from 'u'/'d', got {spins!r}")
    index = sum(1 << i for i, c in enumerate(spins) if c == "d")
    v = np.zeros(2**n, dtype=complex)
    v[index] = 1.0
    return v


def basis_label(index: int, n: int) -> str:
    return "".join("d" if (index >> i) & 1 else "u" for i in range(n))


def plus_state(n: int) -> np.ndarray:
    return np.full(2**n, 2.0 ** (-n / 2), dtype=complex)


def flip_even_basis(n: int) -> sp.csr_matrix:
    """Isometry onto states invariant under the global spin flip prod_i sigma_i^x.

    Column ``c`` is (|c> + |c xor 1...1>)/sqrt(2) for the representatives with
    the top bit clear.
    """
    dim = 2**n
    if n == 0:
        return sp.identity(1, format="csr")
    half = np.arange(dim // 2, dtype=np.int64)
    rows = np.concatenate([half, half ^ (dim - 1)])
    cols = np.concatenate([half, half])
    vals = np.full(dim, 1.0 / np.sqrt(2.0))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim // 2))
