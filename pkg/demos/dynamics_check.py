"""
Is the sweep adiabatic?
=======================

The diagnostics use instantaneous ground states. Here we integrate the
time-dependent Schrodinger equation for the triangle and compare the evolved
state with the tracked ground state on a common grid.
"""
import numpy as np

from fluxqpt import ControlSchedule, SpinNetwork, evolve_schrodinger, track_ground_state

net = SpinNetwork.triangle()
for t_final in (50.0, 2.0, 0.5):
    sched = ControlSchedule(t_final=t_final)
    tracked = track_ground_state(net, sched, grid_points=101)
    evolved = evolve_schrodinger(net, sched, tracked.states[0], dt=1e-3, grid_points=101)
    fid = np.abs(np.einsum("ij,ij->i", tracked.states.conj(), evolved.states)) ** 2
    print(f"T = {t_final:5.1f} ns  min fidelity {fid.min():.6f}  final {fid[-1]:.6f}"
          f"  norm drift {evolved.norm_drift:.1e}")
