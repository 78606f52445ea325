"""Relaxation of an excited qubit coupled to a two-band environment.

The environment's lower band alone is populated, so the reduced state
splits into two coupled components: component 0 (lower band) starts as
|e><e| and component 1 (upper band) starts empty.  Weight flows back and
forth between the components until the total excited population settles at
gamma1 / (gamma1 + gamma2).

Three routes to the same curve are compared here:

  * the stochastic jump ensemble (400 trajectories),
  * the deterministic Runge-Kutta integration of the component equations,
  * the closed-form solution of the population subsystem.

Run:  python demos/two_band_relaxation.py
"""

import numpy as np

import qjump as qj

GAMMA1, GAMMA2 = 1.0, 1.0
DT, T_MAX, STRIDE, N_TRAJ, SEED = 1e-3, 5.0, 50, 400, 11

model = qj.build_two_band(GAMMA1, GAMMA2)
print(qj.validate(model))
print(f"joint jump modes per step: {qj.jump_mode_count_for_model(model)}")

initial = qj.TrajectoryState(0.0, [[1, 0], [0, 0]])  # |e> in the lower band

ensemble = qj.run_ensemble(
    model, initial, dt=DT, t_max=T_MAX, n_traj=N_TRAJ, master_seed=SEED,
    observables=["excited_population"], sample_stride=STRIDE,
)
mean, stderr = ensemble.column("excited_population")

rho0 = np.array([np.outer(v, v.conj()) for v in initial.components])
rk4 = qj.rk4_integrate(model, rho0, dt=DT, t_max=T_MAX, sample_stride=STRIDE)
rk4_vals = qj.density_expectations(rk4, ["excited_population"]).values[:, 0]

closed = 0.5 * (1.0 + np.exp(-(GAMMA1 + GAMMA2) * ensemble.times))

print(f"\n{'t':>6} {'jump':>10} {'rk4':>10} {'closed':>10} {'|jump-closed|':>14}")
for i in range(0, ensemble.times.size, 10):
    t = ensemble.times[i]
    print(f"{t:6.2f} {mean[i]:10.6f} {rk4_vals[i]:10.6f} {closed[i]:10.6f}"
          f" {abs(mean[i] - closed[i]):14.2e}")

report = qj.compare_series(mean, closed, stderr, abs_tol=0.05, z_max=3.0,
                           times=ensemble.times)
print(f"\njump vs closed form: {report}")
print(f"rk4 vs closed form:  max |diff| = {np.abs(rk4_vals - closed).max():.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(ensemble.times, mean, yerr=stderr, fmt=".", ms=3,
                label=f"jump ensemble (N={N_TRAJ})")
    ax.plot(rk4.times, rk4_vals, "--", label="Runge-Kutta")
    ax.plot(ensemble.times, closed, "-", lw=1, label="closed form")
    ax.set_xlabel("t (units of 1/hbar)")
    ax.set_ylabel("excited population")
    ax.legend()
    fig.tight_layout()
    fig.savefig("two_band_relaxation.png", dpi=120)
    print("wrote two_band_relaxation.png")
except ImportError:
    print("matplotlib not available, skipping the plot")
