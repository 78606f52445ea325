"""Stochastic unraveling of the coupled-component master equation.

One step advances every component from the same pre-step snapshot.  For a
target component m the branch weights are

    q[m, n, lam] = <psi_n| R^dag R |psi_n> dt      (jump from source n)
    q0[m]        = <psi_m| W0^dag W0 |psi_m>        (non-jump)

with ``W0 = 1 - i H_eff dt`` built from the effective Hamiltonian.  Their
sum is the new component weight ``p_m``; dividing by it gives the branch
probabilities.  A single uniform random number resolves the branch of every
component (jumps ordered by source then label, non-jump last), and the
selected branch state is renormalized to norm ``sqrt(p_m)``.  Averaging
``sum_m <psi_m|A|psi_m>`` over many such trajectories reproduces the
deterministic evolution of `reference.master_rhs`.

Trajectories are reproducible: trajectory j of an ensemble draws its
uniforms from a PCG64 generator seeded with
``SeedSequence(master_seed, spawn_key=(j,))``, one number per step (or one
per component per step in the opt-in independent mode), and the ensemble
reduction consumes trajectories in index order, so results are identical
for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from . import _kernel
from ._linalg import matvec, norm_sq, quad_form, readonly_complex
from .model import GeneralizedLindbladModel, effective_hamiltonian
from .observables import RESIDUE_TOL, ImaginaryResidueError, Observable, as_observable
from .stats import EnsembleAccumulator, TimeSeries

INITIAL_NORM_TOL = 1e-9
JUMP_WEIGHT_LIMIT = 0.5


class NonPositiveStepError(ValueError):
    """The time step must be positive."""


class StepTooLargeError(RuntimeError):
    """A per-step jump weight exceeded 0.5 (or a non-jump weight went
    negative): dt is too large for the model's rates."""

    def __init__(self, time: float, dt: float):
        super().__init__(time, dt)
        self.time = time
        self.dt = dt

    def __str__(self) -> str:
        return (
            f"step size dt = {self.dt:g} too large at t = {self.time:g}; "
            f"retry with a smaller step (e.g. dt = {self.dt / 10:g})"
        )


class ZeroNormJumpError(RuntimeError):
    """A selected branch had zero amplitude, which indicates a partition bug."""


class TrajectoryFailureError(RuntimeError):
    """A trajectory of an ensemble failed; carries the trajectory index."""

    def __init__(self, index: int, message: str):
        super().__init__(index, message)
        self.index = index

    def __str__(self) -> str:
        return f"trajectory {self.index} failed: {self.args[1]}"


@dataclass(frozen=True, eq=False)
class TrajectoryState:
    """Time plus the M non-normalized component wave functions of one
    stochastic realization, stored as an (M, d) amplitude array."""

    time: float
    components: np.ndarray

    def __post_init__(self):
        arr = readonly_complex(self.components)
        if arr.ndim != 2:
            raise ValueError(f"components must be an (M, d) array, got shape {arr.shape}")
        object.__setattr__(self, "components", arr)

    @property
    def weights(self) -> np.ndarray:
        """Squared norm of every component."""
        return (self.components.conj() * self.components).real.sum(axis=1)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class JumpOption:
    """One jump branch of a target component's partition."""

    source: int
    label: int
    probability: float
    term_index: int  # position in model.jump_terms


@dataclass(frozen=True, eq=False)
class StepProbabilities:
    """Branch partition of one step: per target component, the jump options
    ordered by (source, label), the non-jump probability last, and the new
    component weights p."""

    weights: np.ndarray                      # (M,) new weights p_m
    jumps: tuple[tuple[JumpOption, ...], ...]
    non_jump: np.ndarray                     # (M,) non-jump probabilities


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Trajectory-averaged observable series with standard errors."""

    times: np.ndarray
    names: tuple[str, ...]
    mean: np.ndarray    # (n_times, n_observables)
    stderr: np.ndarray
    n_traj: int
    master_seed: int

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.names.index(name)
        return self.mean[:, idx], self.stderr[:, idx]


@dataclass(frozen=True, eq=False)
class _StepOperators:
    """Constant per-(model, dt) arrays consumed by both the numpy step
    operations and the compiled kernel; building them in one place keeps the
    two code paths bitwise consistent."""

    w0: np.ndarray          # (M, d, d) non-jump propagators
    g0: np.ndarray          # (M, d, d) W0^dag W0
    r_ops: np.ndarray       # (K, d, d) jump operators, sorted by (target, source, label)
    q_ops: np.ndarray       # (K, d, d) R^dag R in the same order
    jt_source: np.ndarray   # (K,) int64
    tgt_start: np.ndarray   # (M + 1,) int64 slot ranges per target
    term_order: tuple[int, ...]   # position -> index into model.jump_terms
    options: tuple[tuple[tuple[int, int, int], ...], ...]  # per target: (source, label, slot)


def _build_step_operators(
    model: GeneralizedLindbladModel, dt: float, nonjump_mode: str = "linear"
) -> _StepOperators:
    if nonjump_mode not in ("linear", "exponential"):
        raise ValueError(f"unknown nonjump_mode {nonjump_mode!r}")
    m_count, dim = model.num_components, model.hilbert_dim
    w0 = np.empty((m_count, dim, dim), dtype=np.complex128)
    g0 = np.empty_like(w0)
    for m in range(m_count):
        heff = effective_hamiltonian(model, m)
        if nonjump_mode == "linear":
            w0[m] = np.eye(dim) - 1j * dt * heff
        else:
            from scipy.linalg import expm

            w0[m] = expm(-1j * dt * heff)
        g0[m] = w0[m].conj().T @ w0[m]

    order = sorted(
        range(len(model.jump_terms)), key=lambda i: model.jump_terms[i].key
    )
    n_terms = len(order)
    r_ops = np.zeros((n_terms, dim, dim), dtype=np.complex128)
    q_ops = np.zeros_like(r_ops)
    jt_source = np.zeros(n_terms, dtype=np.int64)
    tgt_start = np.zeros(m_count + 1, dtype=np.int64)
    options: list[list[tuple[int, int, int]]] = [[] for _ in range(m_count)]
    for slot, idx in enumerate(order):
        term = model.jump_terms[idx]
        r_ops[slot] = term.operator
        q_ops[slot] = term.operator.conj().T @ term.operator
        jt_source[slot] = term.source
        options[term.target].append((term.source, term.label, slot))
    for m in range(m_count):
        tgt_start[m + 1] = tgt_start[m] + len(options[m])
    return _StepOperators(
        w0=w0,
        g0=g0,
        r_ops=r_ops,
        q_ops=q_ops,
        jt_source=jt_source,
        tgt_start=tgt_start,
        term_order=tuple(order),
        options=tuple(tuple(o) for o in options),
    )


def _as_state(initial, model: GeneralizedLindbladModel) -> TrajectoryState:
    state = initial if isinstance(initial, TrajectoryState) else TrajectoryState(0.0, initial)
    expected = (model.num_components, model.hilbert_dim)
    if state.components.shape != expected:
        raise ValueError(
            f"state shape {state.components.shape} does not match model {expected}"
        )
    return state


def _step_weights(ops: _StepOperators, psi: np.ndarray, dt: float, time: float):
    """Raw branch weights (q per slot, q0 per component, p per component)."""
    n_terms = ops.r_ops.shape[0]
    m_count = psi.shape[0]
    q = np.zeros(n_terms)
    for k in range(n_terms):
        q[k] = quad_form(ops.q_ops[k], psi[ops.jt_source[k]]).real * dt
        if q[k] > JUMP_WEIGHT_LIMIT:
            raise StepTooLargeError(time, dt)
    q0 = np.zeros(m_count)
    p = np.zeros(m_count)
    for m in range(m_count):
        q0[m] = quad_form(ops.g0[m], psi[m]).real
        if q0[m] < 0.0:
            raise StepTooLargeError(time, dt)
    for m in range(m_count):
        total = q0[m]
        for k in range(ops.tgt_start[m], ops.tgt_start[m + 1]):
            total += q[k]
        p[m] = total
    return q, q0, p


def step_probabilities(
    state, model: GeneralizedLindbladModel, dt: float, nonjump_mode: str = "linear"
) -> StepProbabilities:
    """Branch partition of the next step, computed from the pre-step states.

    Raises NonPositiveStepError for dt <= 0 and StepTooLargeError when any
    single jump weight exceeds 0.5 (before normalization by p_m) or a
    non-jump weight turns negative.  Components with p_m = 0 report zero
    probability for every branch.
    """
    if dt <= 0:
        raise NonPositiveStepError(f"dt must be positive, got {dt}")
    state = _as_state(state, model)
    ops = _build_step_operators(model, dt, nonjump_mode)
    q, q0, p = _step_weights(ops, state.components, dt, state.time)

    jumps = []
    non_jump = np.zeros_like(p)
    for m in range(model.num_components):
        entries = []
        for source, label, slot in ops.options[m]:
            dp = q[slot] / p[m] if p[m] > 0 else 0.0
            entries.append(
                JumpOption(source=source, label=label, probability=dp,
                           term_index=ops.term_order[slot])
            )
        non_jump[m] = q0[m] / p[m] if p[m] > 0 else 0.0
        jumps.append(tuple(entries))
    return StepProbabilities(weights=p, jumps=tuple(jumps), non_jump=non_jump)


def _branch_state(op: np.ndarray, source_psi: np.ndarray, weight: float) -> np.ndarray:
    v = matvec(op, source_psi)
    nrm2 = norm_sq(v)
    if nrm2 <= 0.0:
        raise ZeroNormJumpError("selected branch has zero amplitude")
    return v * (math.sqrt(weight) / math.sqrt(nrm2))


def apply_jump(
    state,
    target: int,
    source: int,
    label: int,
    model: GeneralizedLindbladModel,
    dt: float,
    nonjump_mode: str = "linear",
) -> np.ndarray:
    """State of the target component after the given jump fires: the pre-step
    source state mapped through the jump operator, renormalized to norm
    sqrt(p_target)."""
    state = _as_state(state, model)
    ops = _build_step_operators(model, dt, nonjump_mode)
    slot = next(
        (s for src, lab, s in ops.options[target] if src == source and lab == label),
        None,
    )
    if slot is None:
        raise ValueError(f"model has no jump term (target={target}, source={source}, label={label})")
    _, _, p = _step_weights(ops, state.components, dt, state.time)
    return _branch_state(ops.r_ops[slot], state.components[source], p[target])


def apply_non_jump(
    state,
    m: int,
    model: GeneralizedLindbladModel,
    dt: float,
    nonjump_mode: str = "linear",
) -> np.ndarray:
    """State of component m when no jump fires: the non-jump propagator
    applied to its pre-step state, renormalized to norm sqrt(p_m); a zero
    component with zero inflow stays the zero vector."""
    state = _as_state(state, model)
    if not 0 <= m < model.num_components:
        raise IndexError(f"component index {m} out of range")
    ops = _build_step_operators(model, dt, nonjump_mode)
    _, _, p = _step_weights(ops, state.components, dt, state.time)
    if p[m] <= 0.0:
        return np.zeros(model.hilbert_dim, dtype=np.complex128)
    return _branch_state(ops.w0[m], state.components[m], p[m])


def advance(
    state,
    model: GeneralizedLindbladModel,
    dt: float,
    epsilon,
    nonjump_mode: str = "linear",
) -> TrajectoryState:
    """One synchronous step: every component resolves its branch partition
    against the same random number (or its own entry of an epsilon array in
    the independent mode) and every branch is evaluated on the pre-step
    states.  Branches with zero probability are never selected."""
    state = _as_state(state, model)
    m_count, dim = state.components.shape
    eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64), (m_count,))
    if np.any(eps < 0.0) or np.any(eps > 1.0):
        raise ValueError("epsilon must lie in the unit interval")
    probs = step_probabilities(state, model, dt, nonjump_mode)
    ops = _build_step_operators(model, dt, nonjump_mode)

    psi = state.components
    new = np.zeros_like(psi)
    for m in range(m_count):
        p = probs.weights[m]
        if p <= 0.0:
            continue
        chosen: JumpOption | None = None
        non_jump = False
        cum = 0.0
        for option in probs.jumps[m]:
            cum += option.probability
            if eps[m] < cum and option.probability > 0.0:
                chosen = option
                break
        if chosen is None:
            cum += probs.non_jump[m]
            if eps[m] < cum and probs.non_jump[m] > 0.0:
                non_jump = True
            elif probs.non_jump[m] > 0.0:
                non_jump = True  # epsilon beyond the partition: rounding residue
            else:
                chosen = next(
                    (o for o in reversed(probs.jumps[m]) if o.probability > 0.0), None
                )
                if chosen is None:
                    raise ZeroNormJumpError(f"component {m} has no selectable branch")
        if non_jump:
            new[m] = _branch_state(ops.w0[m], psi[m], p)
        else:
            slot = next(
                s for src, lab, s in ops.options[m]
                if (src, lab) == (chosen.source, chosen.label)
            )
            new[m] = _branch_state(ops.r_ops[slot], psi[chosen.source], p)
    return TrajectoryState(time=state.time + dt, components=new)


def enumerate_single_step(
    state, model: GeneralizedLindbladModel, dt: float, nonjump_mode: str = "linear"
) -> np.ndarray:
    """All-branch reconstruction of the post-step density components.

    Sums the outer product of every branch state weighted by its branch
    probability, which rebuilds each rho_m(t + dt) deterministically; the
    trace of component m equals its weight p_m.  This is the bridge oracle
    between the stochastic step and the deterministic equation: the result
    matches an Euler step of `reference.master_rhs` up to O(dt^2).
    """
    state = _as_state(state, model)
    ops = _build_step_operators(model, dt, nonjump_mode)
    probs = step_probabilities(state, model, dt, nonjump_mode)
    psi = state.components
    m_count, dim = psi.shape
    out = np.zeros((m_count, dim, dim), dtype=np.complex128)
    for m in range(m_count):
        p = probs.weights[m]
        if p <= 0.0:
            continue
        for option in probs.jumps[m]:
            if option.probability <= 0.0:
                continue
            slot = next(
                s for src, lab, s in ops.options[m]
                if (src, lab) == (option.source, option.label)
            )
            phi = _branch_state(ops.r_ops[slot], psi[option.source], p)
            out[m] += option.probability * np.outer(phi, phi.conj())
        if probs.non_jump[m] > 0.0:
            phi = _branch_state(ops.w0[m], psi[m], p)
            out[m] += probs.non_jump[m] * np.outer(phi, phi.conj())
    return out


def child_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed of trajectory `index` in an ensemble: a splittable counter scheme
    that makes serial and parallel runs agree bit for bit."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def _prepare_observables(observables, model: GeneralizedLindbladModel):
    obs = [as_observable(o, model.hilbert_dim) for o in observables]
    names = tuple(o.name for o in obs)
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate observable names in {names}")
    kinds = np.zeros(len(obs), dtype=np.int64)
    refs = np.zeros(len(obs), dtype=np.int64)
    mats = []
    for i, o in enumerate(obs):
        if o.component is not None:
            if o.component >= model.num_components:
                raise ValueError(
                    f"observable {o.name!r}: component {o.component} out of range"
                )
            kinds[i] = _kernel.OBS_WEIGHT
            refs[i] = o.component
        else:
            if o.matrix.shape[0] != model.hilbert_dim:
                raise ValueError(
                    f"observable {o.name!r} dimension {o.matrix.shape[0]} "
                    f"does not match the model's d = {model.hilbert_dim}"
                )
            kinds[i] = _kernel.OBS_MATRIX
            refs[i] = len(mats)
            mats.append(o.matrix)
    dim = model.hilbert_dim
    mat_stack = (
        np.ascontiguousarray(np.stack(mats))
        if mats
        else np.zeros((0, dim, dim), dtype=np.complex128)
    )
    return obs, names, kinds, refs, mat_stack


def _sample_grid(t0: float, dt: float, n_steps: int, stride: int) -> np.ndarray:
    n_samples = n_steps // stride + 1
    return t0 + np.arange(n_samples) * (stride * dt)


def _run_kernel(
    ops: _StepOperators,
    psi0: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    stride: int,
    eps2d: np.ndarray,
    kinds: np.ndarray,
    refs: np.ndarray,
    mat_stack: np.ndarray,
) -> np.ndarray:
    n_samples = n_steps // stride + 1
    out = np.zeros((n_samples, kinds.size))
    # The kernel advances psi in place; always hand it a fresh copy.
    psi = np.array(psi0, dtype=np.complex128, order="C")
    status, step, resid = _kernel.run_trajectory_kernel(
        psi, ops.w0, ops.g0, ops.r_ops, ops.q_ops, ops.jt_source, ops.tgt_start,
        dt, n_steps, eps2d, stride, kinds, refs, mat_stack, out,
    )
    if status in (_kernel.STATUS_STEP_TOO_LARGE, _kernel.STATUS_NEGATIVE_NON_JUMP):
        raise StepTooLargeError(t0 + step * dt, dt)
    if status == _kernel.STATUS_ZERO_NORM:
        raise ZeroNormJumpError(f"zero-amplitude branch selected at t = {t0 + step * dt:g}")
    if resid > RESIDUE_TOL:
        raise ImaginaryResidueError(resid)
    return out


def _draw_epsilons(seed, n_steps: int, m_count: int, shared: bool) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    if shared:
        eps = rng.random(n_steps)
        return np.repeat(eps[:, np.newaxis], m_count, axis=1)
    return rng.random((n_steps, m_count))


def _validated_run_args(initial, model, dt, t_max, sample_stride):
    if dt <= 0:
        raise NonPositiveStepError(f"dt must be positive, got {dt}")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    state = _as_state(initial, model)
    if abs(state.total_weight - 1.0) > INITIAL_NORM_TOL:
        raise ValueError(
            f"initial total squared norm {state.total_weight!r} must be 1 "
            f"within {INITIAL_NORM_TOL:g}"
        )
    n_steps = max(1, round(t_max / dt))
    return state, n_steps


def run_trajectory(
    model: GeneralizedLindbladModel,
    initial,
    dt: float,
    t_max: float,
    seed,
    observables,
    sample_stride: int = 1,
    shared_epsilon: bool = True,
    nonjump_mode: str = "linear",
) -> TimeSeries:
    """One stochastic realization of all components over ``round(t_max/dt)``
    steps, recording ``sum_m <psi_m|A|psi_m>`` every ``sample_stride`` steps
    (the t = 0 state included).

    ``seed`` may be an int or a numpy SeedSequence; a fixed seed gives a
    bit-identical series.  One uniform number is drawn per step; with
    ``shared_epsilon=False`` each component consumes its own draw instead
    (same per-component marginals, for variance studies).
    """
    state, n_steps = _validated_run_args(initial, model, dt, t_max, sample_stride)
    ops = _build_step_operators(model, dt, nonjump_mode)
    _, names, kinds, refs, mat_stack = _prepare_observables(observables, model)
    eps2d = _draw_epsilons(seed, n_steps, model.num_components, shared_epsilon)
    values = _run_kernel(
        ops, state.components, state.time, dt, n_steps, sample_stride,
        eps2d, kinds, refs, mat_stack,
    )
    times = _sample_grid(state.time, dt, n_steps, sample_stride)
    return TimeSeries(times=times, names=names, values=values)


# Worker-process state for parallel ensembles, set once per worker.
_WORKER: dict = {}


def _worker_init(payload):
    _WORKER.clear()
    _WORKER.update(payload)
    _WORKER["ops"] = _build_step_operators(
        payload["model"], payload["dt"], payload["nonjump_mode"]
    )


def _worker_run(index: int) -> np.ndarray:
    w = _WORKER
    eps2d = _draw_epsilons(
        child_seed(w["master_seed"], index),
        w["n_steps"],
        w["model"].num_components,
        w["shared_epsilon"],
    )
    return _run_kernel(
        w["ops"], w["psi0"], w["t0"], w["dt"], w["n_steps"], w["stride"],
        eps2d, w["kinds"], w["refs"], w["mat_stack"],
    )


def run_ensemble(
    model: GeneralizedLindbladModel,
    initial,
    dt: float,
    t_max: float,
    n_traj: int,
    master_seed: int,
    observables,
    workers: int = 1,
    sample_stride: int = 1,
    shared_epsilon: bool = True,
    nonjump_mode: str = "linear",
) -> EnsembleResult:
    """Mean and standard error of observable series over ``n_traj``
    trajectories.

    Trajectory j is seeded with ``child_seed(master_seed, j)`` and the
    running statistics consume trajectories in index order, so the result
    is bit-identical for any ``workers`` value; ``n_traj=1`` reproduces
    ``run_trajectory`` with child seed 0.  A failing trajectory aborts the
    ensemble with its index.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    state, n_steps = _validated_run_args(initial, model, dt, t_max, sample_stride)
    _, names, kinds, refs, mat_stack = _prepare_observables(observables, model)
    times = _sample_grid(state.time, dt, n_steps, sample_stride)
    acc = EnsembleAccumulator(times, names)

    payload = dict(
        model=model,
        psi0=np.ascontiguousarray(state.components),
        t0=state.time,
        dt=dt,
        n_steps=n_steps,
        stride=sample_stride,
        master_seed=master_seed,
        shared_epsilon=shared_epsilon,
        nonjump_mode=nonjump_mode,
        kinds=kinds,
        refs=refs,
        mat_stack=mat_stack,
    )
    if workers == 1:
        _worker_init(payload)
        for j in range(n_traj):
            try:
                acc.add(_worker_run(j))
            except Exception as exc:
                raise TrajectoryFailureError(j, str(exc)) from exc
    else:
        chunksize = max(1, min(32, n_traj // (workers * 4) or 1))
        with Pool(processes=workers, initializer=_worker_init, initargs=(payload,)) as pool:
            results = pool.imap(_worker_run, range(n_traj), chunksize=chunksize)
            for j in range(n_traj):
                try:
                    values = next(results)
                except Exception as exc:
                    raise TrajectoryFailureError(j, str(exc)) from exc
                acc.add(values)
    mean, stderr = acc.finalize()
    return EnsembleResult(
        times=times, names=names, mean=mean, stderr=stderr,
        n_traj=n_traj, master_seed=master_seed,
    )
