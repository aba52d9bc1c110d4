"""Low-lying eigenpairs of spin Hamiltonians.

Dense diagonalisation for n <= 10, Lanczos with full reorthogonalisation
above that. Both paths can run inside a symmetry sector given as an
isometry ``basis`` (columns orthonormal in the full space); returned vectors
are always lifted back to the full 2**n space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .network import SparseOperator

DENSE_MAX_N = 10
GAUGE_THRESHOLD = 1e-8
DEFAULT_GAP_TOL = 1e-9
DEFAULT_SEED = 20160125


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, full-space, gauge fixed
    gap: float
    degenerate: bool
    method: str

    @property
    def energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def fix_gauge(v: np.ndarray, threshold: float = GAUGE_THRESHOLD) -> np.ndarray:
    """Normalise ``v`` and rotate its first non-negligible amplitude onto the positive real axis."""
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot gauge-fix the zero vector")
    v = v / norm
    big = np.flatnonzero(np.abs(v) > threshold)
    if big.size == 0:
        big = [int(np.argmax(np.abs(v)))]
    a = v[big[0]]
    return v * (abs(a) / a)


def lanczos(matvec, dim: int, k: int = 1, v0=None, *, tol: float = 1e-12, maxiter: int | None = None,
            seed: int = DEFAULT_SEED, norm_estimate: float | None = None):
    """Lowest ``k`` eigenpairs of a Hermitian operator given only ``matvec``.

    Every new Krylov vector is reorthogonalised twice against the whole basis.
    On an invariant subspace the recursion restarts from a fresh random vector
    orthogonal to the basis, so repeated eigenvalues can still be found.
    Returns ``(eigenvalues, vectors, residuals)``.
    """
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in [1, {dim}], got {k}")
    maxiter = min(dim, maxiter or max(300, 20 * k))
    rng = np.random.default_rng(seed)
    if v0 is None or np.linalg.norm(v0) == 0:
        v0 = rng.standard_normal(dim) + 0j
    q = np.asarray(v0, dtype=complex)
    q = q / np.linalg.norm(q)

    basis = np.empty((maxiter, dim), dtype=complex)
    alphas, betas = [], []
    scale = norm_estimate or 1.0
    beta = 0.0
    check_every = 5
    for it in range(maxiter):
        basis[it] = q
        w = matvec(q)
        a = float(np.vdot(q, w).real)
        w = w - a * q
        if it > 0 and beta != 0.0:
            w = w - beta * basis[it - 1]
        V = basis[: it + 1]
        for _ in range(2):
            w = w - V.T @ (V.conj() @ w)
        alphas.append(a)
        beta = float(np.linalg.norm(w))
        m = it + 1
        if m == dim:
            break
        breakdown = beta < 1e-14 * scale
        if not breakdown and m >= k and m % check_every == 0:
            theta, s = _tridiag_eigh(alphas, betas + [beta])
            scale = max(scale, float(np.max(np.abs(theta))))
            if np.all(beta * np.abs(s[-1, :k]) < tol * scale):
                break
        if breakdown:
            # invariant subspace: restart orthogonally, decoupled in the tridiagonal
            w = rng.standard_normal(dim) + 0j
            for _ in range(2):
                w = w - V.T @ (V.conj() @ w)
            beta_next = 0.0
            q = w / np.linalg.norm(w)
        else:
            beta_next = beta
            q = w / beta
        betas.append(beta_next)
        beta = beta_next
    m = len(alphas)
    theta, s = _tridiag_eigh(alphas, betas[: m - 1])
    vecs = basis[:m].T @ s[:, :k]
    vals = theta[:k]
    resid = np.array([np.linalg.norm(matvec(vecs[:, i]) - vals[i] * vecs[:, i]) for i in range(k)])
    return vals, vecs, resid


def _tridiag_eigh(alphas, betas):
    T = np.diag(alphas)
    if len(betas):
        off = np.asarray(betas[: len(alphas) - 1])
        T = T + np.diag(off, 1) + np.diag(off, -1)
    return np.linalg.eigh(T)


def ground_state(h: SparseOperator, k: int = 1, gap_tol: float = DEFAULT_GAP_TOL, *,
                 basis: sp.spmatrix | None = None, v0: np.ndarray | None = None,
                 method: str = "auto", tol: float = 1e-12, maxiter: int | None = None,
                 seed: int = DEFAULT_SEED) -> EigenResult:
    """The ``k`` lowest eigenpairs of ``h``, gauge fixed, with the E1 - E0 gap.

    If the ground level is degenerate within ``gap_tol`` the result is widened
    to include the quasi-degenerate vectors the solver found and ``degenerate``
    is set.
    """
    if basis is not None:
        V = sp.csr_matrix(basis)
        if V.shape[0] != h.dim:
            raise ValueError(f"basis has {V.shape[0]} rows, operator dimension is {h.dim}")
        op = sp.csr_matrix(V.conj().T @ h.matrix @ V)
    else:
        V = None
        op = h.matrix
    dim = op.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in [1, {dim}], got {k}")
    if method == "auto":
        method = "dense" if h.n <= DENSE_MAX_N else "lanczos"
    want = min(dim, k + 1)

    if method == "dense":
        vals, vecs = np.linalg.eigh(op.toarray())
        nkeep = min(dim, max(want, int(np.searchsorted(vals, vals[0] + gap_tol, side="right")) + 1))
        vals, vecs = vals[:nkeep], vecs[:, :nkeep]
    elif method == "lanczos":
        start = None
        if v0 is not None:
            start = V.conj().T @ v0 if V is not None else np.asarray(v0)
        vals, vecs, resid = lanczos(lambda x: op @ x, dim, want, start, tol=tol, maxiter=maxiter,
                                    seed=seed, norm_estimate=abs(op).sum(axis=1).max())
        bound = 1e-8 * max(1.0, float(abs(op).sum(axis=1).max()))
        if np.any(resid > bound):
            raise ConvergenceError(
                f"Lanczos did not converge: residual {resid.max():.3e} exceeds {bound:.3e}",
                float(resid.max()),
            )
    else:
        raise ValueError(f"unknown method {method!r}")

    if V is not None:
        vecs = V @ vecs
    vecs = np.column_stack([fix_gauge(vecs[:, i]) for i in range(vecs.shape[1])])
    gap = float(vals[1] - vals[0]) if len(vals) > 1 else np.inf
    degenerate = gap < gap_tol
    if degenerate:
        nkeep = max(k, int(np.searchsorted(vals, vals[0] + gap_tol, side="right")))
    else:
        nkeep = k
    return EigenResult(np.asarray(vals[:nkeep], dtype=float), vecs[:, :nkeep], gap, bool(degenerate), method)
