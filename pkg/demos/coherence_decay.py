"""Coherence decay of a superposition under two-band coupling.

The system starts in (|e> + |g>)/sqrt(2).  With only the lower band
populated, the off-diagonal element of the reduced state decays as
(1/2) exp(-gamma2 t / 2) while the populations relax independently; the
jump ensemble reproduces both.  When both bands carry weight 1/2 there is
no closed form, so the ensemble is checked against the deterministic
integrator instead.

Run:  python demos/coherence_decay.py
"""

import numpy as np

import qjump as qj

DT, T_MAX, STRIDE, N_TRAJ = 1e-3, 5.0, 50, 400
model = qj.build_two_band(1.0, 1.0)
s = 2**-0.5

print("-- lower band only --")
lower = qj.run_ensemble(
    model, qj.TrajectoryState(0.0, [[s, s], [0, 0]]),
    dt=DT, t_max=T_MAX, n_traj=N_TRAJ, master_seed=11,
    observables=["coherence_re", "excited_population"], sample_stride=STRIDE,
)
mean, stderr = lower.column("coherence_re")
closed = 0.5 * np.exp(-lower.times / 2.0)
print(qj.compare_series(mean, closed, stderr, abs_tol=0.05, z_max=3.0,
                        times=lower.times))

print("\n-- both bands at weight 1/2 --")
both_init = qj.TrajectoryState(0.0, [[0.5, 0.5], [0.5, 0.5]])
both = qj.run_ensemble(
    model, both_init, dt=DT, t_max=T_MAX, n_traj=N_TRAJ, master_seed=11,
    observables=["coherence_re"], sample_stride=STRIDE,
)
rho0 = np.array([np.outer(v, v.conj()) for v in both_init.components])
det = qj.rk4_integrate(model, rho0, dt=DT, t_max=T_MAX, sample_stride=STRIDE)
det_vals = qj.density_expectations(det, ["coherence_re"]).values[:, 0]
mean_b, stderr_b = both.column("coherence_re")
print(qj.compare_series(mean_b, det_vals, stderr_b, abs_tol=0.05, z_max=3.0,
                        times=both.times))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    axes[0].errorbar(lower.times, mean, yerr=stderr, fmt=".", ms=3, label="jump")
    axes[0].plot(lower.times, closed, "-", lw=1, label="closed form")
    axes[0].set_title("lower band only")
    axes[1].errorbar(both.times, mean_b, yerr=stderr_b, fmt=".", ms=3, label="jump")
    axes[1].plot(det.times, det_vals, "-", lw=1, label="Runge-Kutta")
    axes[1].set_title("both bands, weight 1/2")
    for ax in axes:
        ax.set_xlabel("t (units of 1/hbar)")
        ax.legend()
    axes[0].set_ylabel("Re rho_eg")
    fig.tight_layout()
    fig.savefig("coherence_decay.png", dpi=120)
    print("wrote coherence_decay.png")
except ImportError:
    print("matplotlib not available, skipping the plot")
