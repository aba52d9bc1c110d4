"""
Microscopic signature of the frustrated triangle
================================================

Three flux qubits with antiferromagnetic couplings on every edge. The sweep
starts deep in the paramagnetic phase and ends in the frustrated Ising limit.
We follow the instantaneous ground state and watch the basis probabilities
and the W-state entanglement witness change along the way.
"""
import numpy as np

from fluxqpt import ControlSchedule, SpinNetwork, track_ground_state
from fluxqpt.network import basis_label
from fluxqpt.observables import computational_basis_probabilities, witness_expectation

net = SpinNetwork.triangle()
sched = ControlSchedule()  # 50 ns linear ramp, Delta 5 -> 0 GHz, J 0 -> 5 GHz
traj = track_ground_state(net, sched, grid_points=201)

###############################################################################
# Basis probabilities at a few times. At t = 0 every configuration has 1/8;
# at the end the two fully aligned states are gone and the six frustrated
# configurations share the weight equally.
labels = [basis_label(i, 3) for i in range(8)]
print("t_ns  " + "  ".join(f"{lab:>6}" for lab in labels))
for k in (0, 50, 100, 150, 200):
    p = computational_basis_probabilities(traj.states[k])
    print(f"{traj.times[k]:4.1f}  " + "  ".join(f"{x:6.4f}" for x in p))

###############################################################################
# The witness is non-negative on every separable state. Its value drops from
# sqrt(5) - 2 to sqrt(5) - 3, crossing zero once: the final ground state is
# genuinely tripartite entangled.
w = np.array([witness_expectation(psi).value for psi in traj.states])
crossing = traj.times[np.argmax(w < 0)]
print(f"\nW(0) = {w[0]:.6f}  (sqrt5 - 2 = {np.sqrt(5) - 2:.6f})")
print(f"W(T) = {w[-1]:.6f}  (sqrt5 - 3 = {np.sqrt(5) - 3:.6f})")
print(f"first negative value at t = {crossing:.2f} ns")
