"""Central spin in a two-spin bath: three coupled components.

The bath's angular-momentum projection labels three components (1, 0, -1),
each starting as |e><e| with weight 1/3.  Every step, one shared random
number decides the branch of all three components, and weight migrates
between neighbouring projections.  The ensemble tracks the deterministic
integration of the full coupled system; the component weights show where
the reduced state lives.

Run:  python demos/spin_bath_weights.py
"""

import numpy as np

import qjump as qj

DT, T_MAX, STRIDE, N_TRAJ, SEED = 1e-3, 5.0, 50, 1000, 3

model = qj.build_spin_bath()  # labels (1, 0, -1), every interior rate 1
print(qj.validate(model))
print(f"jump terms: {len(model.jump_terms)}, "
      f"joint modes per step: {qj.jump_mode_count_for_model(model)}")

amp = 1.0 / np.sqrt(3.0)
initial = qj.TrajectoryState(0.0, [[amp, 0], [amp, 0], [amp, 0]])

observables = [
    "excited_population",
    "component_weight(0)",
    "component_weight(1)",
    "component_weight(2)",
]
ensemble = qj.run_ensemble(
    model, initial, dt=DT, t_max=T_MAX, n_traj=N_TRAJ, master_seed=SEED,
    observables=observables, sample_stride=STRIDE,
)

rho0 = np.array([np.outer(v, v.conj()) for v in initial.components])
det = qj.rk4_integrate(model, rho0, dt=DT, t_max=T_MAX, sample_stride=STRIDE)
det_ts = qj.density_expectations(det, observables)

print(f"\n{'t':>6} {'rho_ee jump':>12} {'rho_ee rk4':>12} "
      f"{'w(m=1)':>8} {'w(m=0)':>8} {'w(m=-1)':>8}")
for i in range(0, ensemble.times.size, 20):
    row = ensemble.mean[i]
    print(f"{ensemble.times[i]:6.2f} {row[0]:12.6f} {det_ts.values[i, 0]:12.6f}"
          f" {row[1]:8.4f} {row[2]:8.4f} {row[3]:8.4f}")

mean, stderr = ensemble.column("excited_population")
print("\njump vs integrator:",
      qj.compare_series(mean, det_ts.values[:, 0], stderr, abs_tol=0.03,
                        z_max=3.0, times=ensemble.times))
total = ensemble.mean[:, 1:].sum(axis=1)
print(f"weights stay normalized: max |sum - 1| = {np.abs(total - 1).max():.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].errorbar(ensemble.times, mean, yerr=stderr, fmt=".", ms=3, label="jump")
    axes[0].plot(det.times, det_ts.values[:, 0], "-", lw=1, label="Runge-Kutta")
    axes[0].set_ylabel("excited population")
    axes[0].legend()
    for k, label in ((1, "m=1"), (2, "m=0"), (3, "m=-1")):
        axes[1].plot(ensemble.times, ensemble.mean[:, k], label=f"weight {label}")
    axes[1].set_ylabel("component weight")
    axes[1].legend()
    for ax in axes:
        ax.set_xlabel("t (units of 1/hbar)")
    fig.tight_layout()
    fig.savefig("spin_bath_weights.png", dpi=120)
    print("wrote spin_bath_weights.png")
except ImportError:
    print("matplotlib not available, skipping the plot")
