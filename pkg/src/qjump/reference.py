"""Deterministic oracle: RK4 integration of the coupled component master
equation and closed-form solutions of the two-band model.

Density components are M non-normalized d x d matrices whose traces sum to
one; they are handled as an (M, d, d) complex stack throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import dagger
from .model import GeneralizedLindbladModel

HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-8


class IntegrationInvariantError(RuntimeError):
    """A sampled state violated a density-component invariant."""

    def __init__(self, time: float, issue: str):
        super().__init__(time, issue)
        self.time = time
        self.issue = issue

    def __str__(self) -> str:
        return f"invariant violated at t = {self.time:g}: {self.issue}"


def _as_components(components, model: GeneralizedLindbladModel) -> np.ndarray:
    stack = np.asarray(components, dtype=np.complex128)
    expected = (model.num_components, model.hilbert_dim, model.hilbert_dim)
    if stack.shape != expected:
        raise ValueError(f"expected components of shape {expected}, got {stack.shape}")
    return stack


def master_rhs(model: GeneralizedLindbladModel, components) -> np.ndarray:
    """Time derivative of every density component.

    Component m changes by ``-i[H_m, rho_m]`` plus the gain terms
    ``R rho_source R^dag`` of the jump terms targeting m, minus half the
    anticommutator of its summed drain operators with ``rho_m``.
    """
    rho = _as_components(components, model)
    out = np.empty_like(rho)
    for m in range(model.num_components):
        ham = model.hamiltonians[m]
        out[m] = -1j * (ham @ rho[m] - rho[m] @ ham)
    for term in model.jump_terms:
        op = term.operator
        out[term.target] += op @ rho[term.source] @ dagger(op)
        drain = dagger(op) @ op
        out[term.source] -= 0.5 * (drain @ rho[term.source] + rho[term.source] @ drain)
    return out


def _check_invariants(model, rho, time, trace_tol):
    for m in range(model.num_components):
        dev = float(np.abs(rho[m] - dagger(rho[m])).max())
        if dev > HERMITICITY_TOL:
            raise IntegrationInvariantError(
                time, f"component {m} not Hermitian (deviation {dev:.3e})"
            )
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho[m] + dagger(rho[m]))).min())
        if min_eig < -POSITIVITY_TOL:
            raise IntegrationInvariantError(
                time, f"component {m} not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )
    total = float(sum(np.trace(rho[m]).real for m in range(model.num_components)))
    if abs(total - 1.0) > trace_tol:
        raise IntegrationInvariantError(time, f"total trace {total!r} drifted from 1")


@dataclass(frozen=True)
class DensitySeries:
    """Sampled density components along a deterministic integration."""

    times: np.ndarray       # (n_samples,)
    components: np.ndarray  # (n_samples, M, d, d)


def rk4_integrate(
    model: GeneralizedLindbladModel,
    initial,
    dt: float,
    t_max: float,
    sample_stride: int = 1,
    check_invariants: bool = True,
    trace_tol: float = TRACE_TOL,
) -> DensitySeries:
    """Classic fixed-step fourth-order integration of the master equation.

    Samples the state every ``sample_stride`` steps starting at t = 0 and
    verifies Hermiticity, positivity and total-trace conservation of each
    sample, reporting the time of the first violation.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    rho = _as_components(initial, model).copy()
    n_steps = max(1, round(t_max / dt))
    # Same grid arithmetic as the jump engine so CSVs compare exactly.
    times = np.arange(n_steps // sample_stride + 1) * (sample_stride * dt)
    samples = [rho.copy()]
    if check_invariants:
        _check_invariants(model, rho, 0.0, trace_tol)
    for step in range(n_steps):
        k1 = master_rhs(model, rho)
        k2 = master_rhs(model, rho + 0.5 * dt * k1)
        k3 = master_rhs(model, rho + 0.5 * dt * k2)
        k4 = master_rhs(model, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (step + 1) % sample_stride == 0:
            samples.append(rho.copy())
            if check_invariants:
                _check_invariants(model, rho, float(times[len(samples) - 1]), trace_tol)
    return DensitySeries(times=times, components=np.array(samples))


def closed_form_two_band(
    gamma1: float, gamma2: float, amplitudes, t: float
) -> np.ndarray:
    """Exact two-band state at time t for a pure start in component 0.

    The initial system state is ``a|e> + b|g>`` placed entirely in the
    lower-band component; component 1 starts empty.  The populations obey
    the closed two-variable system

        d p0e / dt = gamma1 * p1g - gamma2 * p0e
        d p1g / dt = gamma2 * p0e - gamma1 * p1g

    with p0e(0) = |a|^2, the component-0 coherence decays as
    ``a conj(b) exp(-gamma2 t / 2)``, and all other entries are constant.

    Returns the (2, 2, 2) component stack.
    """
    a, b = complex(amplitudes[0]), complex(amplitudes[1])
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-9:
        raise ValueError("initial amplitudes must be normalized")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    s = abs(a) ** 2
    w = gamma1 + gamma2
    if w > 0:
        p0e = s * (gamma1 + gamma2 * np.exp(-w * t)) / w
    else:
        p0e = s
    p1g = s - p0e
    c0 = a * np.conj(b) * np.exp(-gamma2 * t / 2.0)
    rho0 = np.array([[p0e, c0], [np.conj(c0), abs(b) ** 2]], dtype=np.complex128)
    rho1 = np.array([[0.0, 0.0], [0.0, p1g]], dtype=np.complex128)
    return np.stack([rho0, rho1])


def closed_form_two_band_series(gamma1, gamma2, amplitudes, times) -> DensitySeries:
    """closed_form_two_band evaluated on a time grid."""
    grid = np.asarray(times, dtype=np.float64)
    stack = np.array([closed_form_two_band(gamma1, gamma2, amplitudes, t) for t in grid])
    return DensitySeries(times=grid, components=stack)


def reduce_density(components) -> np.ndarray:
    """The reduced system state: entrywise sum of all components."""
    stack = np.asarray(components, dtype=np.complex128)
    if stack.ndim != 3:
        raise ValueError(f"expected an (M, d, d) stack, got shape {stack.shape}")
    return stack.sum(axis=0)


def density_expectations(series: DensitySeries, observables) -> "TimeSeries":
    """Evaluate observables on every sample of a density series."""
    from .observables import as_observable, expectation_density
    from .stats import TimeSeries

    dim = series.components.shape[-1]
    obs = [as_observable(o, dim) for o in observables]
    values = np.array(
        [[expectation_density(sample, o) for o in obs] for sample in series.components]
    ).reshape(series.times.size, len(obs))
    return TimeSeries(times=series.times, names=tuple(o.name for o in obs), values=values)
