"""
Fidelity susceptibility along the sweep
=======================================

chi_F measures how quickly the ground state turns as the schedule fraction s
advances. A sharp maximum marks the finite-size precursor of the transition.
We check the estimator on a single qubit first, where the answer is known in
closed form, and then scan the triangle and a 6-site chain.
"""
import numpy as np

from fluxqpt import ControlSchedule, SpinNetwork, chi_trace
from fluxqpt.metrics import fidelity_susceptibility_family
from fluxqpt.network import ControlParams, build_hamiltonian

###############################################################################
# Single qubit, H = -(x sz + sx): chi_F(x) = 1 / (4 (x^2 + 1)^2).
qubit = SpinNetwork(1, ())
for x in (-2.0, 0.0, 0.5, 3.0):
    point = fidelity_susceptibility_family(
        lambda v: build_hamiltonian(qubit, ControlParams([v], [1.0], [])), x, 1e-4)
    exact = 1 / (4 * (x**2 + 1) ** 2)
    print(f"x={x:+.1f}  overlap={point.overlap:.8f}  derivative={point.derivative:.8f}  exact={exact:.8f}")

###############################################################################
# Sweeps. Each point costs three ground-state solves.
sched = ControlSchedule()
for name, net in (("triangle", SpinNetwork.triangle()), ("chain n=6", SpinNetwork.chain(6))):
    trace = chi_trace(net, sched, grid_points=51)
    s, chi = trace.peak()
    print(f"\n{name}: peak chi_F = {chi:.4g} at s = {s:.2f} (t = {s * sched.t_final:.1f} ns)")
    coarse = np.linspace(0, len(trace.grid) - 1, 11).astype(int)
    for k in coarse:
        print(f"  s={trace.grid[k]:.2f}  chi_F={trace.chi[k]:.5g}")
