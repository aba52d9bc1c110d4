"""Adiabatic control schedule, instantaneous ground-state tracking and
time-dependent Schroedinger integration.

Energies are in GHz and times in ns; the propagator uses
omega = 2*pi*E, i.e. i d(psi)/dt = 2*pi*H(t) psi.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigensolver import DEFAULT_GAP_TOL, ground_state
from .network import (
    ControlParams,
    SparseOperator,
    SpinNetwork,
    build_hamiltonian,
    build_pauli_sum,
    flip_even_basis,
    z_signs,
)

UNITS = "energies in GHz as ordinary frequencies; phase rate 2*pi*E rad/ns; time in ns"
TWO_PI = 2.0 * np.pi


class AccuracyError(RuntimeError):
    """The integration step is too coarse for the requested accuracy."""


@dataclass(frozen=True)
class ControlSchedule:
    """Linear ramps with additive floors.

    delta(t) = delta_max * (1 - s) + delta_floor, J(t) = j_max * s + j_floor, s = t / t_final.
    """

    t_final: float = 50.0
    delta_max: float = 5.0
    j_max: float = 5.0
    delta_floor: float = 5e-6
    j_floor: float = 5e-6
    shape: str = "linear"

    def __post_init__(self):
        if self.shape != "linear":
            raise ValueError(f"unsupported ramp shape {self.shape!r}")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.delta_max < 0 or self.j_max < 0:
            raise ValueError("delta_max and j_max must be non-negative")
        if not (self.delta_floor > 0 and self.j_floor > 0):
            raise ValueError("floors must be positive")

    def fraction(self, t: float) -> float:
        if not (0.0 <= t <= self.t_final):
            raise ValueError(f"t={t} outside [0, {self.t_final}]")
        return t / self.t_final

    def at_fraction(self, s: float) -> tuple[float, float]:
        if not (0.0 <= s <= 1.0):
            raise ValueError(f"s={s} outside [0, 1]")
        return self.delta_max * (1.0 - s) + self.delta_floor, self.j_max * s + self.j_floor

    def to_dict(self) -> dict:
        return {
            "t_final": self.t_final, "delta_max": self.delta_max, "j_max": self.j_max,
            "delta_floor": self.delta_floor, "j_floor": self.j_floor, "shape": self.shape,
        }


def schedule_at(sched: ControlSchedule, t: float) -> tuple[float, float]:
    """(delta, J) in GHz at time ``t`` ns."""
    return sched.at_fraction(sched.fraction(t))


@dataclass(frozen=True)
class SweepModel:
    """A network driven by a schedule, with optional static per-site/per-edge profiles.

    The instantaneous Hamiltonian is delta(s) * A + J(s) * B + C with
    A = -sum_i w_i X_i, B = sum_e u_e Z_i Z_j, C = -sum_i eps_i Z_i.
    """

    network: SpinNetwork
    schedule: ControlSchedule = field(default_factory=ControlSchedule)
    delta_weights: np.ndarray | None = None
    j_weights: np.ndarray | None = None
    epsilon: np.ndarray | None = None

    def __post_init__(self):
        n, m = self.network.n, len(self.network.edges)
        for name, size, default in (("delta_weights", n, 1.0), ("j_weights", m, 1.0), ("epsilon", n, 0.0)):
            val = getattr(self, name)
            arr = np.full(size, default) if val is None else np.asarray(val, dtype=float).ravel()
            if arr.size != size:
                raise ValueError(f"{name} must have length {size}, got {arr.size}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def flip_symmetric(self) -> bool:
        return not np.any(self.epsilon)

    def params(self, s: float) -> ControlParams:
        d, j = self.schedule.at_fraction(s)
        return ControlParams(self.epsilon, d * self.delta_weights, j * self.j_weights)

    def hamiltonian(self, s: float) -> SparseOperator:
        return build_hamiltonian(self.network, self.params(s))

    def sector_basis(self, symmetry: str = "auto"):
        """Global-flip-even isometry when the model allows it, else None."""
        if symmetry == "none":
            return None
        if symmetry not in ("auto", "flip-even"):
            raise ValueError(f"unknown symmetry {symmetry!r}")
        if not self.flip_symmetric:
            if symmetry == "flip-even":
                raise ValueError("flip-even sector requires epsilon = 0 on every site")
            return None
        return flip_even_basis(self.network.n)

    def parts(self):
        """The static operators A, B, C as CSR matrices."""
        n = self.network.n
        A = -build_pauli_sum(n, "x", self.delta_weights).matrix
        signs = z_signs(n).astype(float)
        zz = np.zeros(2**n)
        for (a, b), u in zip(self.network.edges, self.j_weights):
            zz += u * signs[:, a] * signs[:, b]
        B = sp.diags(zz, format="csr")
        C = sp.diags(-(signs @ self.epsilon), format="csr")
        return A, B, C


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2**n)
    energies: np.ndarray
    gaps: np.ndarray
    flags: np.ndarray
    source: str
    t_final: float = 50.0
    norm_drift: float | None = None
    adiabatic_fidelity: float | None = None

    @property
    def fractions(self) -> np.ndarray:
        return self.times / self.t_final

    def __len__(self) -> int:
        return len(self.times)


def _as_model(network, sched) -> SweepModel:
    if isinstance(network, SweepModel):
        return network
    return SweepModel(network, sched if sched is not None else ControlSchedule())


def track_ground_state(network: SpinNetwork | SweepModel, sched: ControlSchedule | None = None,
                       grid_points: int = 1001, *, gap_tol: float = DEFAULT_GAP_TOL,
                       symmetry: str = "auto", method: str = "auto") -> Trajectory:
    """Instantaneous ground state on a uniform time grid.

    Consecutive states are sign-aligned so their overlap has non-negative real
    part. Points whose ground level is degenerate within ``gap_tol`` are flagged.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    model = _as_model(network, sched)
    sched = model.schedule
    times = np.linspace(0.0, sched.t_final, grid_points)
    basis = model.sector_basis(symmetry)
    states = np.empty((grid_points, model.network.dim), dtype=complex)
    energies = np.empty(grid_points)
    gaps = np.empty(grid_points)
    flags = np.zeros(grid_points, dtype=bool)
    prev = None
    for k, t in enumerate(times):
        res = ground_state(model.hamiltonian(sched.fraction(t)), 1, gap_tol, basis=basis,
                           v0=prev, method=method)
        psi = res.state
        if prev is not None and np.vdot(prev, psi).real < 0:
            psi = -psi
        states[k], energies[k], gaps[k], flags[k] = psi, res.energy, res.gap, res.degenerate
        prev = psi
    return Trajectory(times, states, energies, gaps, flags, "tracked", sched.t_final)


def _magnus_setup(model: SweepModel, dense: bool):
    A, B, C = model.parts()
    AB = A @ B - B @ A
    AC = A @ C - C @ A
    if dense:
        A, B, C, AB, AC = (m.toarray() for m in (A, B, C, AB, AC))
    return A, B, C, AB, AC


def evolve_schrodinger(network: SpinNetwork | SweepModel, sched: ControlSchedule | None = None,
                       psi0: np.ndarray | None = None, dt: float = 1e-3, *, grid_points: int = 101,
                       reference: Trajectory | None = None, max_step_phase: float = 1.0,
                       drift_limit: float = 1e-6) -> Trajectory:
    """Integrate i dpsi/dt = 2 pi H(t) psi with a fourth-order Magnus step.

    Each step uses the two Gauss-Legendre nodes,
    Omega = -i 2pi dt (H1 + H2)/2 + (sqrt(3)/12) (2pi dt)^2 [H2, H1],
    whose exponential is unitary, so the norm drift only measures roundoff.
    States are recorded on a uniform grid of ``grid_points`` times, which must
    fall on integer multiples of ``dt``. The final state is compared with the
    instantaneous ground state (from ``reference`` when given).
    """
    model = _as_model(network, sched)
    sched = model.schedule
    if not dt > 0:
        raise ValueError("dt must be positive")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    steps_total = sched.t_final / dt
    nsteps = int(round(steps_total))
    if abs(steps_total - nsteps) > 1e-9 * max(1.0, steps_total) or nsteps % (grid_points - 1):
        raise ValueError(f"t_final/dt = {steps_total} must be an integer multiple of grid_points - 1")
    stride = nsteps // (grid_points - 1)
    dim = model.network.dim
    psi = (np.full(dim, dim**-0.5, dtype=complex) if psi0 is None
           else np.asarray(psi0, dtype=complex).copy())
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalised")

    dense = dim <= 256
    A, B, C, AB, AC = _magnus_setup(model, dense)
    bound = max(sched.delta_max + sched.delta_floor, 0) * float(np.abs(model.delta_weights).sum()) \
        + (sched.j_max + sched.j_floor) * float(np.abs(model.j_weights).sum()) + float(np.abs(model.epsilon).sum())
    if TWO_PI * bound * dt > max_step_phase:
        raise AccuracyError(
            f"dt={dt} ns too coarse: 2*pi*|H|*dt = {TWO_PI * bound * dt:.3f} exceeds {max_step_phase}; use a smaller dt"
        )

    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    k3 = np.sqrt(3) / 12 * (TWO_PI * dt) ** 2
    times = np.linspace(0.0, sched.t_final, grid_points)
    states = np.empty((grid_points, dim), dtype=complex)
    norms = np.empty(grid_points)
    states[0], norms[0] = psi, np.linalg.norm(psi)
    rec = 1
    for step in range(nsteps):
        t = step * dt
        d1, j1 = sched.at_fraction(min((t + c1 * dt) / sched.t_final, 1.0))
        d2, j2 = sched.at_fraction(min((t + c2 * dt) / sched.t_final, 1.0))
        hbar = 0.5 * (d1 + d2) * A + 0.5 * (j1 + j2) * B + C
        # [H2, H1] with H = dA + jB + C and [B, C] = 0
        comm = (d2 * j1 - j2 * d1) * AB + (d2 - d1) * AC
        # exp(Omega) = exp(-i G), G Hermitian
        G = TWO_PI * dt * hbar - 1j * k3 * comm
        if dense:
            w, U = la.eigh(G)
            psi = U @ (np.exp(-1j * w) * (U.conj().T @ psi))
        else:
            psi = spla.expm_multiply(-1j * sp.csr_matrix(G), psi)
        if (step + 1) % stride == 0:
            states[rec], norms[rec] = psi, np.linalg.norm(psi)
            rec += 1
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > drift_limit:
        raise AccuracyError(f"norm drift {drift:.3e} exceeds {drift_limit:.1e}; use a smaller dt")

    if reference is not None:
        target = reference.states[-1]
    else:
        res = ground_state(model.hamiltonian(1.0), 1, basis=model.sector_basis("auto"))
        target = res.state
    fidelity = float(abs(np.vdot(target, psi)) ** 2)
    energies = np.array([np.vdot(states[k], model.hamiltonian(times[k] / sched.t_final) @ states[k]).real
                         for k in range(grid_points)])
    return Trajectory(times, states, energies, np.full(grid_points, np.nan), np.zeros(grid_points, bool),
                      "integrated", sched.t_final, drift, fidelity)
