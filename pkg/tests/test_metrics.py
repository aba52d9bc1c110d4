import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxqpt.dynamics import ControlSchedule, SweepModel, Trajectory
from fluxqpt.eigensolver import ground_state
from fluxqpt.metrics import (
    chi_trace,
    exponential_family,
    fidelity_susceptibility,
    fidelity_susceptibility_family,
    fit_exponential,
    kl_divergence,
    macro_measure,
    macro_trace,
    susceptibility_from_states,
)
from fluxqpt.network import ControlParams, SparseOperator, SpinNetwork, build_hamiltonian, plus_state
from fluxqpt.observables import MomentHistogram, paramagnetic_reference


def single_qubit_family(delta):
    net = SpinNetwork(1, ())
    return lambda x: build_hamiltonian(net, ControlParams([x], [delta], []))


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def perturbative_chi(a, b, x):
    """sum over excited states |<m|B|0>|^2 / (E_m - E_0)^2 for H = A + x B."""
    vals, vecs = np.linalg.eigh(a + x * b)
    bm = vecs.conj().T @ b @ vecs
    return float(np.sum(np.abs(bm[1:, 0]) ** 2 / (vals[1:] - vals[0]) ** 2))


@pytest.mark.parametrize("x", [-2.0, -0.3, 0.0, 0.7, 3.0])
def test_single_qubit_oracle(x):
    delta = 1.3
    exact = delta**2 / (4 * (x**2 + delta**2) ** 2)
    point = fidelity_susceptibility_family(single_qubit_family(delta), x, 1e-4)
    assert point.overlap == pytest.approx(exact, rel=1e-6)
    assert point.derivative == pytest.approx(exact, rel=1e-6)
    assert not point.flagged


def test_random_families_match_perturbation_theory(rng):
    worst = 0.0
    for _ in range(20):
        a, b = random_hermitian(rng, 8), random_hermitian(rng, 8)
        x = rng.uniform(-1, 1)
        exact = perturbative_chi(a, b, x)
        point = fidelity_susceptibility_family(lambda t: SparseOperator(a + t * b), x, 1e-4, method="dense")
        worst = max(worst, abs(point.overlap - exact) / exact, abs(point.derivative - exact) / exact)
    assert worst < 1e-5


def test_gauge_invariance(rng):
    a, b = random_hermitian(rng, 8), random_hermitian(rng, 8)
    states = [ground_state(SparseOperator(a + x * b), method="dense").state for x in (-1e-3, 0, 1e-3)]
    ref = susceptibility_from_states(*states, 1e-3)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    moved = susceptibility_from_states(*(p * s for p, s in zip(phases, states)), 1e-3)
    assert moved.overlap == pytest.approx(ref.overlap, abs=1e-10)
    assert moved.derivative == pytest.approx(ref.derivative, abs=1e-10)


def test_scalar_multiple_family_has_zero_chi():
    net = SpinNetwork.chain(4)
    h0 = build_hamiltonian(net, ControlParams.uniform(net, 1.0, 0.5, 0.3))
    with pytest.warns(RuntimeWarning):
        point = fidelity_susceptibility_family(lambda x: h0 * (1 + x), 0.2, 1e-3)
    assert abs(point.overlap) < 1e-8 and abs(point.derivative) < 1e-8


def test_constant_schedule_gives_zero_chi():
    sched = ControlSchedule(delta_max=0.0, j_max=0.0, delta_floor=2.0, j_floor=1.0)
    with pytest.warns(RuntimeWarning):
        point = fidelity_susceptibility(SpinNetwork.triangle(), sched, 0.5)
    assert abs(point.overlap) < 1e-8


def test_stencil_must_fit():
    with pytest.raises(ValueError):
        fidelity_susceptibility(SpinNetwork.triangle(), ControlSchedule(), 0.0)
    with pytest.raises(ValueError):
        fidelity_susceptibility_family(single_qubit_family(1.0), 0.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chi_non_negative(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
    point = fidelity_susceptibility_family(lambda t: SparseOperator(a + t * b), 0.0, 1e-3, method="dense")
    assert point.overlap >= 0 and point.derivative >= 0


def test_triangle_chi_trace_symmetric_peak():
    trace = chi_trace(SpinNetwork.triangle(), ControlSchedule(), 21)
    s, chi = trace.peak()
    assert s == pytest.approx(0.5) and chi == pytest.approx(1 / 3, rel=1e-4)
    assert trace.grid[0] == pytest.approx(1e-4) and trace.grid[-1] == pytest.approx(1 - 1e-4)
    np.testing.assert_allclose(trace.chi, trace.chi[::-1], rtol=1e-5)
    np.testing.assert_allclose(trace.times, trace.grid * 50)


def test_kl_hand_case():
    p, q = [0.5, 0.5], [0.25, 0.75]
    exact = 0.5 * np.log(2) + 0.5 * np.log(2 / 3)
    assert kl_divergence(p, q, smoothing=0) == pytest.approx(exact, abs=1e-15)
    assert kl_divergence(p, q) == pytest.approx(exact, abs=1e-12)


def test_kl_identity_and_infinity():
    p = paramagnetic_reference(6)
    assert kl_divergence(p, p) == 0
    assert kl_divergence([0.5, 0.5], [1.0, 0.0], smoothing=0) == np.inf
    assert np.isfinite(kl_divergence([0.5, 0.5], [1.0, 0.0]))


def test_kl_support_mismatch():
    with pytest.raises(ValueError):
        kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])
    with pytest.raises(ValueError):
        kl_divergence(paramagnetic_reference(3), paramagnetic_reference(4))


def test_kl_gibbs_inequality(rng):
    for _ in range(1000):
        dim = rng.integers(2, 14)
        p, q = rng.dirichlet(np.ones(dim)), rng.dirichlet(np.ones(dim))
        assert kl_divergence(p, q) >= -1e-15


@pytest.mark.parametrize("n", [2, 3, 6, 12])
def test_fit_recovers_alpha(n):
    fit = fit_exponential(MomentHistogram(n, exponential_family(n, 1.0)))
    assert fit.alpha == pytest.approx(1.0, abs=1e-8)
    assert fit.goodness == pytest.approx(0, abs=1e-12)


def test_fit_uniform_gives_zero():
    assert fit_exponential(MomentHistogram(5, np.full(6, 1 / 6))).alpha == pytest.approx(0, abs=1e-10)


def test_fit_clamps():
    spread = np.zeros(7)
    spread[[0, -1]] = 0.5
    assert fit_exponential(MomentHistogram(6, spread)).alpha == 0
    centre = np.zeros(7)
    centre[3] = 1
    assert fit_exponential(MomentHistogram(6, centre)).alpha == 50


def test_fit_scale_and_reflection_invariance(rng):
    probs = rng.dirichlet(np.ones(9))
    base = fit_exponential(MomentHistogram(8, probs)).alpha
    assert fit_exponential(MomentHistogram(8, 3.7 * probs)).alpha == pytest.approx(base, abs=1e-10)
    assert fit_exponential(MomentHistogram(8, probs[::-1])).alpha == pytest.approx(base, abs=1e-10)


def test_fit_single_qubit_undefined():
    with pytest.raises(ValueError):
        fit_exponential(paramagnetic_reference(1))


def test_macro_anchor_signs():
    n = 12
    p_bin = paramagnetic_reference(n)
    p_exp = MomentHistogram(n, exponential_family(n, 2.0))
    assert macro_measure(p_bin, p_exp, p_bin) > 0
    assert macro_measure(p_exp, p_exp, p_bin) < 0
    with pytest.raises(ValueError):
        macro_measure(paramagnetic_reference(4), p_exp, p_bin)


def test_macro_trace_on_synthetic_trajectory():
    n = 6
    states = np.array([plus_state(n), plus_state(n)])
    traj = Trajectory(np.array([0.0, 50.0]), states, np.zeros(2), np.ones(2), np.zeros(2, bool), "tracked", 50.0)
    trace = macro_trace(traj)
    # final histogram is binomial, so its own exponential fit is the reference
    assert trace.reference_alpha == pytest.approx(trace.alpha[-1])
    np.testing.assert_allclose(trace.D, trace.D[0])
    assert trace.sign_changes() == 0


def test_sweep_model_sector_consistent_chi():
    model = SweepModel(SpinNetwork.chain(5), ControlSchedule())
    a = fidelity_susceptibility(model, None, 0.6, symmetry="none")
    b = fidelity_susceptibility(model, None, 0.6, symmetry="flip-even")
    assert a.overlap == pytest.approx(b.overlap, rel=1e-6)
