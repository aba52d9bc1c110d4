"""Quantum-phase-transition diagnostics.

Fidelity susceptibility along a sweep, Kullback-Leibler divergence with
additive smoothing, a one-parameter exponential fit of moment histograms,
and the macroscopic sign measure built from them.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .dynamics import ControlSchedule, SweepModel, Trajectory, _as_model
from .eigensolver import DEFAULT_GAP_TOL, ground_state
from .network import SparseOperator, SpinNetwork
from .observables import MomentHistogram, moment_distribution, paramagnetic_reference

DEFAULT_DELTA_S = 1e-4
DEFAULT_SMOOTHING = 1e-12
ALPHA_MAX = 50.0


@dataclass(frozen=True)
class FidelityPoint:
    overlap: float  # -d^2 ln|<psi(x)|psi(x + e)>| / de^2, primary
    derivative: float  # <dpsi|dpsi> - |<psi|dpsi>|^2
    flagged: bool = False


def _log_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """ln|<a|b>| for unit vectors, accurate when the overlap is close to one."""
    ov = np.vdot(a, b)
    perp = b - ov * a
    deficit = float(np.vdot(perp, perp).real)  # 1 - |<a|b>|^2
    return 0.5 * np.log1p(-deficit)


def susceptibility_from_states(minus: np.ndarray, centre: np.ndarray, plus: np.ndarray, step: float) -> FidelityPoint:
    """Both finite-difference estimators from ground states at x - step, x, x + step."""
    lo, hi = _log_overlap(centre, minus), _log_overlap(centre, plus)
    if -(lo + hi) < 1e-14:
        warnings.warn("overlap deficit below 1e-14; fidelity susceptibility is dominated by roundoff",
                      RuntimeWarning, stacklevel=2)
    overlap_form = -(lo + hi) / step**2
    # parallel-transport gauge: make <centre|neighbour> real and positive
    aligned = []
    for v in (minus, plus):
        ov = np.vdot(centre, v)
        aligned.append(v * (abs(ov) / ov) if ov != 0 else v)
    d = (aligned[1] - aligned[0]) / (2 * step)
    proj = np.vdot(centre, d)
    derivative_form = float(np.vdot(d, d).real - abs(proj) ** 2)
    return FidelityPoint(float(overlap_form), derivative_form)


def fidelity_susceptibility_family(hamiltonian: Callable[[float], SparseOperator], x: float, step: float,
                                   *, gap_tol: float = DEFAULT_GAP_TOL, basis=None, method: str = "auto",
                                   v0=None) -> FidelityPoint:
    """chi_F of the ground state of ``hamiltonian(x)`` with respect to ``x``."""
    if not step > 0:
        raise ValueError("step must be positive")
    states, flagged = [], False
    for xi in (x - step, x, x + step):
        res = ground_state(hamiltonian(xi), 1, gap_tol, basis=basis, method=method, v0=v0)
        flagged |= res.degenerate
        states.append(res.state)
        v0 = res.state
    if flagged:
        return FidelityPoint(np.nan, np.nan, True)
    return susceptibility_from_states(*states, step)


def fidelity_susceptibility(network: SpinNetwork | SweepModel, sched: ControlSchedule | None, s: float,
                            delta_s: float = DEFAULT_DELTA_S, *, gap_tol: float = DEFAULT_GAP_TOL,
                            symmetry: str = "auto", method: str = "auto", v0=None) -> FidelityPoint:
    """chi_F with respect to the schedule fraction ``s`` (dimensionless)."""
    if not (0.0 <= s - delta_s and s + delta_s <= 1.0):
        raise ValueError(f"stencil [{s - delta_s}, {s + delta_s}] leaves [0, 1]")
    model = _as_model(network, sched)
    return fidelity_susceptibility_family(model.hamiltonian, s, delta_s, gap_tol=gap_tol,
                                          basis=model.sector_basis(symmetry), method=method, v0=v0)


@dataclass
class ChiTrace:
    grid: np.ndarray  # schedule fraction s
    chi: np.ndarray
    chi_derivative: np.ndarray
    flags: np.ndarray
    t_final: float = 50.0

    @property
    def times(self) -> np.ndarray:
        return self.grid * self.t_final

    def peak(self) -> tuple[float, float]:
        """(s, chi) at the largest unflagged value."""
        vals = np.where(self.flags, -np.inf, self.chi)
        k = int(np.argmax(vals))
        return float(self.grid[k]), float(self.chi[k])


def chi_trace(network: SpinNetwork | SweepModel, sched: ControlSchedule | None = None, grid_points: int = 101,
              delta_s: float = DEFAULT_DELTA_S, *, gap_tol: float = DEFAULT_GAP_TOL, symmetry: str = "auto",
              method: str = "auto") -> ChiTrace:
    """chi_F on a uniform grid in s; the two end points move inward by ``delta_s``."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    model = _as_model(network, sched)
    grid = np.clip(np.linspace(0.0, 1.0, grid_points), delta_s, 1.0 - delta_s)
    basis = model.sector_basis(symmetry)
    chi = np.empty(grid_points)
    deriv = np.empty(grid_points)
    flags = np.zeros(grid_points, dtype=bool)
    v0 = None
    for k, s in enumerate(grid):
        states, flagged = [], False
        for x in (s - delta_s, s, s + delta_s):
            res = ground_state(model.hamiltonian(x), 1, gap_tol, basis=basis, method=method, v0=v0)
            flagged |= res.degenerate
            states.append(res.state)
            v0 = res.state
        if flagged:
            chi[k] = deriv[k] = np.nan
            flags[k] = True
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            point = susceptibility_from_states(*states, delta_s)
        chi[k], deriv[k] = point.overlap, point.derivative
    return ChiTrace(grid, chi, deriv, flags, model.schedule.t_final)


def _as_probs(p) -> tuple[np.ndarray, int | None]:
    if isinstance(p, MomentHistogram):
        return np.asarray(p.probs, dtype=float), p.n
    return np.asarray(p, dtype=float).ravel(), None


def kl_divergence(p, q, smoothing: float = DEFAULT_SMOOTHING) -> float:
    """sum_k p_k ln(p_k / q_k) in nats after adding ``smoothing`` to every bin of both."""
    pa, pn = _as_probs(p)
    qa, qn = _as_probs(q)
    if pa.shape != qa.shape or (pn is not None and qn is not None and pn != qn):
        raise ValueError(f"support mismatch: {pa.shape} vs {qa.shape}")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    pa = pa + smoothing
    qa = qa + smoothing
    pa = pa / pa.sum()
    qa = qa / qa.sum()
    mask = pa > 0
    if np.any(qa[mask] == 0):
        return float("inf")
    return float(np.sum(pa[mask] * np.log(pa[mask] / qa[mask])))


def exponential_family(n: int, alpha: float) -> np.ndarray:
    """Q(k) proportional to exp(-alpha |k|) on {-n, ..., n} in steps of 2."""
    absk = np.abs(np.arange(-n, n + 1, 2))
    w = np.exp(-alpha * (absk - absk.min()))
    return w / w.sum()


@dataclass(frozen=True)
class FitResult:
    family: str
    alpha: float
    fitted: MomentHistogram
    goodness: float  # KL(empirical || fitted), nats


def fit_exponential(h: MomentHistogram, alpha_max: float = ALPHA_MAX) -> FitResult:
    """Minimum-KL exponential fit; equivalent to matching E|k|.

    The decay rate is clamped to [0, alpha_max]: histograms flatter than uniform
    give 0 and those concentrated on the smallest |k| give ``alpha_max``.
    """
    absk = np.abs(h.support)
    if np.unique(absk).size < 2:
        raise ValueError(f"histogram support for n={h.n} has a single |k| value; the fit is undefined")
    p = h.probs / h.probs.sum()
    target = float(p @ absk)

    def excess(alpha):
        return float(exponential_family(h.n, alpha) @ absk) - target

    if excess(0.0) <= 0:
        alpha = 0.0
    elif excess(alpha_max) >= 0:
        alpha = alpha_max
    else:
        alpha = brentq(excess, 0.0, alpha_max, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    fitted = MomentHistogram(h.n, exponential_family(h.n, alpha))
    return FitResult("exponential", float(alpha), fitted, kl_divergence(p, fitted.probs))


def macro_measure(h: MomentHistogram, p_exp: FitResult | MomentHistogram, p_bin: MomentHistogram,
                  smoothing: float = DEFAULT_SMOOTHING) -> float:
    """D = KL(P_exp || h) - KL(P_bin || h); positive on the paramagnetic side."""
    exp_hist = p_exp.fitted if isinstance(p_exp, FitResult) else p_exp
    if not (h.n == exp_hist.n == p_bin.n):
        raise ValueError(f"support mismatch: n = {h.n}, {exp_hist.n}, {p_bin.n}")
    return kl_divergence(exp_hist, h, smoothing) - kl_divergence(p_bin, h, smoothing)


@dataclass
class MacroTrace:
    times: np.ndarray
    D: np.ndarray
    alpha: np.ndarray  # exponential fit of each point's own histogram
    histograms: list[MomentHistogram]
    reference_alpha: float  # fixed P_exp, fitted at the final time

    def sign_changes(self) -> int:
        signs = np.sign(self.D[self.D != 0])
        return int(np.count_nonzero(np.diff(signs)))


def macro_trace(trajectory: Trajectory, smoothing: float = DEFAULT_SMOOTHING) -> MacroTrace:
    """D along a trajectory with P_exp fitted to the final histogram and P_bin binomial."""
    hists = [moment_distribution(psi) for psi in trajectory.states]
    n = hists[0].n
    p_exp = fit_exponential(hists[-1])
    p_bin = paramagnetic_reference(n)
    D = np.array([macro_measure(h, p_exp, p_bin, smoothing) for h in hists])
    alpha = np.array([fit_exponential(h).alpha for h in hists])
    return MacroTrace(np.asarray(trajectory.times), D, alpha, hists, p_exp.alpha)
