"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary,
then asserts. Tolerances and runtimes are the fixed acceptance values.
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fluxqpt.dynamics import ControlSchedule, SweepModel, evolve_schrodinger, track_ground_state
from fluxqpt.eigensolver import ground_state
from fluxqpt.metrics import (
    chi_trace,
    exponential_family,
    fidelity_susceptibility_family,
    fit_exponential,
    kl_divergence,
    macro_trace,
)
from fluxqpt.network import (
    ControlParams,
    SparseOperator,
    SpinNetwork,
    apply,
    basis_state,
    build_hamiltonian,
    plus_state,
)
from fluxqpt.observables import (
    MomentHistogram,
    block_witnesses,
    moment_distribution,
    paramagnetic_reference,
    witness_expectation,
)
from oracles import dense_hamiltonian, product_state, six_term_state

SQRT5 = np.sqrt(5)
DEFAULT = ControlSchedule()


def record(number: int, title: str, checks: dict[str, bool], detail: str) -> None:
    failed = [name for name, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"[{status}] criterion {number}: {title} | {detail}"
    if failed:
        line += f" | failed: {', '.join(failed)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not failed, line


def test_criterion_1_witness_endpoints():
    start = time.perf_counter()
    traj = track_ground_state(SpinNetwork.triangle(), DEFAULT, 1001)
    w = np.array([block_witnesses(p, [(0, 1, 2)])[0].value for p in traj.states])
    elapsed = time.perf_counter() - start
    signs = np.sign(w[w != 0])
    changes = int(np.count_nonzero(np.diff(signs)))
    record(1, "witness endpoints", {
        "W(0)": abs(w[0] - (SQRT5 - 2)) < 1e-3,
        "W(t_final)": abs(w[-1] - (SQRT5 - 3)) < 1e-3,
        "one sign change": changes == 1,
        "runtime < 5 s": elapsed < 5,
    }, f"W(0)={w[0]:.7f} W(end)={w[-1]:.7f} sign changes={changes} time={elapsed:.2f}s")


def test_criterion_2_ground_state_endpoints():
    start = time.perf_counter()
    traj = track_ground_state(SpinNetwork.triangle(), DEFAULT, 1001)
    elapsed = time.perf_counter() - start
    f0 = abs(np.vdot(plus_state(3), traj.states[0])) ** 2
    f1 = abs(np.vdot(six_term_state(), traj.states[-1])) ** 2
    record(2, "ground-state endpoints", {
        "initial overlap": f0 > 1 - 1e-6,
        "final six-term overlap": f1 > 1 - 1e-3,
        "runtime < 5 s": elapsed < 5,
    }, f"|<+++|psi(0)>|^2={f0:.10f} |<six-term|psi(T)>|^2={f1:.3e} time={elapsed:.2f}s")


def test_criterion_3_paramagnetic_distribution():
    start = time.perf_counter()
    traj = track_ground_state(SpinNetwork.chain(12), DEFAULT, 2)
    got = moment_distribution(traj.states[0]).probs
    elapsed = time.perf_counter() - start
    dev = float(np.max(np.abs(got - paramagnetic_reference(12).probs)))
    record(3, "paramagnetic distribution n=12", {
        "bin-by-bin 1e-6": dev < 1e-6,
        "runtime < 2 min": elapsed < 120,
    }, f"max deviation={dev:.2e} time={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_4_macro_sign_change():
    start = time.perf_counter()
    traj = track_ground_state(SpinNetwork.chain(12), DEFAULT, 101)
    mt = macro_trace(traj)
    elapsed = time.perf_counter() - start
    record(4, "macro sign change n=12", {
        "D(0) > 0": mt.D[0] > 0,
        "D(t_final) < 0": mt.D[-1] < 0,
        "single crossing": mt.sign_changes() == 1,
        "monotone decrease": bool(np.all(np.diff(mt.D) < 0)),
        "runtime < 15 min": elapsed < 900,
    }, f"D(0)={mt.D[0]:.4f} D(end)={mt.D[-1]:.4f} crossings={mt.sign_changes()} time={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_chi_properties():
    peaks, worst = {}, np.inf
    for n in (3, 6, 9, 12):
        net = SpinNetwork.triangle() if n == 3 else SpinNetwork.chain(n)
        trace = chi_trace(net, DEFAULT, 101)
        ok = ~trace.flags
        worst = min(worst, float(trace.chi[ok].min()))
        peaks[n] = trace.peak()
    heights = [peaks[n][1] for n in (3, 6, 9, 12)]
    detail = " ".join(f"n={n}: peak s={s:.2f} chi={c:.4g}" for n, (s, c) in peaks.items())
    record(5, "chi_F properties", {
        "chi >= -1e-8": worst >= -1e-8,
        "peak at s > 0.9": all(s > 0.9 for s, _ in peaks.values()),
        "height increases with n": all(a < b for a, b in zip(heights, heights[1:])),
    }, f"min chi={worst:.3e} {detail}")


def test_criterion_6_analytic_oracle():
    delta = 1.0
    worst_single = 0.0
    for lam in np.linspace(-5, 5, 41):
        exact = delta**2 / (4 * (lam**2 + delta**2) ** 2)
        fam = lambda x: build_hamiltonian(SpinNetwork(1, ()), ControlParams([x], [delta], []))
        p = fidelity_susceptibility_family(fam, lam, 1e-4)
        worst_single = max(worst_single, abs(p.overlap - exact) / exact, abs(p.derivative - exact) / exact)

    rng = np.random.default_rng(6)
    worst_pair = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        net = SpinNetwork.chain(n)
        m = len(net.edges)
        base = [rng.normal(0, 1, n), rng.uniform(0.5, 2, n), rng.uniform(0, 2, m)]
        direction = [rng.normal(0, 1, n), rng.normal(0, 1, n), rng.normal(0, 1, m)]

        def fam(x, base=base, direction=direction, net=net):
            return build_hamiltonian(net, ControlParams(*(b + x * d for b, d in zip(base, direction))))

        p = fidelity_susceptibility_family(fam, 0.0, 1e-4)
        worst_pair = max(worst_pair, abs(p.overlap - p.derivative) / abs(p.derivative))
    record(6, "analytic oracle", {
        "single-qubit 1e-6 rel": worst_single < 1e-6,
        "estimators agree 1e-6 rel": worst_pair < 1e-6,
    }, f"single-qubit worst rel={worst_single:.2e} estimator worst rel={worst_pair:.2e}")


def test_criterion_7_brute_force_oracles():
    rng = np.random.default_rng(7)
    worst_eig, worst_mv = 0.0, 0.0
    for n in range(2, 9):
        net = SpinNetwork.chain(n)
        params = ControlParams(rng.normal(0, 1, n), rng.uniform(0.2, 2, n), rng.uniform(0, 2, len(net.edges)))
        h = build_hamiltonian(net, params)
        dense = dense_hamiltonian(n, net.edges, params.epsilon, params.delta, params.j)
        k = min(4, 2**n - 1)
        it = ground_state(h, k, method="lanczos").eigenvalues[:k]
        worst_eig = max(worst_eig, float(np.max(np.abs(it - np.linalg.eigvalsh(dense)[:k]))))
        v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        worst_mv = max(worst_mv, float(np.max(np.abs(apply(h, v) - dense @ v))))
    tri = SpinNetwork.triangle()
    spectrum = np.linalg.eigvalsh(build_hamiltonian(tri, ControlParams.uniform(tri, 0.0, 1.0)).to_dense())
    expected = np.array([-1.0] * 6 + [3.0] * 2)
    record(7, "brute-force oracles", {
        "eigenvalues 1e-8": worst_eig < 1e-8,
        "matvec": worst_mv < 1e-12,
        "triangle spectrum": np.allclose(spectrum, expected, atol=1e-12),
    }, f"eig worst={worst_eig:.2e} matvec worst={worst_mv:.2e} spectrum={np.round(spectrum, 12).tolist()}")


def test_criterion_8_dynamics_verification():
    rabi = SweepModel(SpinNetwork(1, ()), ControlSchedule(1.0, 0.0, 0.0, 5.0, 1e-9))
    traj = evolve_schrodinger(rabi, None, basis_state(1, "u"), 1e-3, grid_points=101)
    rabi_err = float(np.max(np.abs(np.abs(traj.states[:, 0]) ** 2 - np.cos(2 * np.pi * 5 * traj.times) ** 2)))
    full = evolve_schrodinger(SpinNetwork.triangle(), DEFAULT, plus_state(3), 1e-3, grid_points=101)
    record(8, "dynamics verification", {
        "Rabi 1e-6": rabi_err < 1e-6,
        "norm drift < 1e-9": full.norm_drift < 1e-9,
        "adiabatic fidelity > 0.99": full.adiabatic_fidelity > 0.99,
    }, f"Rabi err={rabi_err:.2e} drift={full.norm_drift:.2e} fidelity={full.adiabatic_fidelity:.10f}")


def test_criterion_9_metric_math():
    kl = kl_divergence([0.5, 0.5], [0.25, 0.75])
    kl_err = abs(kl - 0.5 * np.log(4 / 3))
    rng = np.random.default_rng(9)
    gibbs = min(kl_divergence(p, q) for p, q in
                ((rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))) for d in rng.integers(2, 14, 1000)))
    alpha = fit_exponential(MomentHistogram(12, exponential_family(12, 1.0))).alpha
    qubits = (rng.normal(size=(1000, 3, 2)) + 1j * rng.normal(size=(1000, 3, 2)))
    qubits /= np.linalg.norm(qubits, axis=2, keepdims=True)
    wmin = min(witness_expectation(product_state(list(q))).value for q in qubits)
    record(9, "metric math", {
        "KL hand case 1e-12": kl_err < 1e-12,
        "Gibbs non-negativity": gibbs >= 0,
        "fit alpha=1 within 1e-6": abs(alpha - 1) < 1e-6,
        "witness positive on products": wmin > 0,
    }, f"KL err={kl_err:.1e} min KL={gibbs:.2e} alpha={alpha:.12f} min product W={wmin:.4f}")


def test_sparse_operator_dense_roundtrip():
    # guards the brute-force oracle itself
    h = dense_hamiltonian(3, [(0, 1)], [0.1, 0, 0], [1, 1, 1], [0.5])
    assert np.allclose(SparseOperator(h).to_dense(), h)
