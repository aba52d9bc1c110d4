"""Measurable quantities of a spin-network state.

The total-moment histogram is the macroscopic probe; the symmetric W-state
witness on three sites is the microscopic one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, sqrt

import numpy as np

from .network import build_pauli_sum, moments

SQRT5 = sqrt(5.0)
WITNESS_FLOOR = SQRT5 - 3.0
WITNESS_CEILING = 4.0 + SQRT5


@dataclass(frozen=True)
class MomentHistogram:
    """Distribution of the total moment mu^z over {-n, -n+2, ..., n}."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size != self.n + 1:
            raise ValueError(f"expected {self.n + 1} probabilities for n={self.n}, got {p.size}")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.n, self.n + 1, 2)

    def total(self) -> float:
        return float(self.probs.sum())

    def normalized(self) -> MomentHistogram:
        return MomentHistogram(self.n, self.probs / self.probs.sum())

    def prob(self, mu: int) -> float:
        if (mu + self.n) % 2 or abs(mu) > self.n:
            return 0.0
        return float(self.probs[(mu + self.n) // 2])

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.support, self.probs)}

    @classmethod
    def from_mapping(cls, n: int, mapping: dict) -> MomentHistogram:
        """Build from ``{mu: weight}`` in any order; missing bins are zero."""
        p = np.zeros(n + 1)
        for mu, w in mapping.items():
            mu = int(mu)
            if (mu + n) % 2 or abs(mu) > n:
                raise ValueError(f"moment {mu} not in the support for n={n}")
            p[(mu + n) // 2] += w
        return cls(n, p)


def _num_sites(psi: np.ndarray) -> int:
    dim = psi.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"state length {dim} is not a power of two")
    return dim.bit_length() - 1


def computational_basis_probabilities(psi: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(psi)) ** 2


def moment_distribution(psi: np.ndarray) -> MomentHistogram:
    psi = np.asarray(psi)
    n = _num_sites(psi)
    p = np.bincount((moments(n) + n) // 2, weights=np.abs(psi) ** 2, minlength=n + 1)
    return MomentHistogram(n, p)


def paramagnetic_reference(n: int) -> MomentHistogram:
    """Binomial moment distribution of |+>^n: P(k) = C(n, (n + k)/2) / 2**n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return MomentHistogram(n, np.array([comb(n, m) for m in range(n + 1)], dtype=float) / 2.0**n)


@lru_cache(maxsize=1)
def witness_matrix() -> np.ndarray:
    """8x8 symmetric W-state witness, (4 + sqrt5) - (Sx^2 + Sy^2)/2 with S = sum of Paulis."""
    sx = build_pauli_sum(3, "x").to_dense()
    sy = build_pauli_sum(3, "y").to_dense()
    w = WITNESS_CEILING * np.eye(8) - 0.5 * (sx @ sx) - 0.5 * (sy @ sy)
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class WitnessValue:
    value: float

    @property
    def entangled(self) -> bool:
        return self.value < 0


def witness_expectation(state: np.ndarray, trace_tol: float = 1e-8) -> WitnessValue:
    """<W_S> for a 3-qubit pure state (length 8) or density operator (8x8)."""
    state = np.asarray(state)
    w = witness_matrix()
    if state.shape == (8,):
        return WitnessValue(float(np.vdot(state, w @ state).real))
    if state.shape == (8, 8):
        tr = np.trace(state).real
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density operator trace {tr} differs from 1")
        return WitnessValue(float(np.trace(w @ state).real))
    raise ValueError(f"expected a length-8 state or an 8x8 density operator, got shape {state.shape}")


def reduce_to_block(psi: np.ndarray, sites) -> np.ndarray:
    """Reduced density operator of ``sites`` (in that order, first site = lowest bit)."""
    psi = np.asarray(psi, dtype=complex)
    n = _num_sites(psi)
    sites = tuple(int(s) for s in sites)
    if len(set(sites)) != len(sites):
        raise ValueError(f"duplicate sites in {sites}")
    if any(not 0 <= s < n for s in sites):
        raise ValueError(f"sites {sites} out of range for n={n}")
    # C-order reshape puts the highest bit on axis 0
    tensor = psi.reshape((2,) * n)
    keep = [n - 1 - s for s in reversed(sites)]
    rest = [a for a in range(n) if a not in keep]
    m = tensor.transpose(keep + rest).reshape(2 ** len(sites), -1)
    return m @ m.conj().T


def block_witnesses(psi: np.ndarray, blocks) -> list[WitnessValue]:
    return [witness_expectation(reduce_to_block(psi, b)) for b in blocks]
