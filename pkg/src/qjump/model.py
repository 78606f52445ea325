"""Model data structures for coupled-component Lindblad master equations.

A model holds M coupled components, each a non-normalized density matrix on
the same d-dimensional Hilbert space.  Component m evolves under its own
Hermitian Hamiltonian ``H_m`` and exchanges weight with other components
through jump operators: a :class:`JumpTerm` with ``target=m, source=n``
feeds ``R rho_n R^dag`` into component m while draining component n through
the matching anticommutator term.  With a single component the equations
reduce to the ordinary Markovian Lindblad form.

Basis convention for the built-in qubit models: the excited state ``|e>``
is basis index 0 and the ground state ``|g>`` is index 1, so

    sigma_plus  = |e><g| = [[0, 1], [0, 0]]
    sigma_minus = |g><e| = [[0, 0], [1, 0]]
    sigma_z     = diag(1, -1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import dagger, hermitian_deviation, readonly_complex

HERMITICITY_TOL = 1e-10
_TRACE_PRESERVATION_TOL = 1e-12

SIGMA_PLUS = readonly_complex([[0, 1], [0, 0]])
SIGMA_MINUS = readonly_complex([[0, 0], [1, 0]])
SIGMA_Z = readonly_complex([[1, 0], [0, -1]])
EXCITED = 0
GROUND = 1


@dataclass(frozen=True, eq=False)
class JumpTerm:
    """One jump operator feeding amplitude from component ``source`` into
    component ``target``; ``label`` distinguishes multiple operators for the
    same (target, source) pair."""

    target: int
    source: int
    label: int
    operator: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "operator", readonly_complex(self.operator))

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.target, self.source, self.label)


@dataclass(frozen=True, eq=False)
class GeneralizedLindbladModel:
    """M coupled components on a d-dimensional Hilbert space.

    Construction only coerces types; structural problems (non-Hermitian
    Hamiltonians, out-of-range indices, dimension mismatches) are reported
    by :func:`validate` rather than raised here, so that hand-written
    configurations can be checked and diagnosed in full.
    """

    num_components: int
    hilbert_dim: int
    hamiltonians: tuple[np.ndarray, ...] = field(default=())
    jump_terms: tuple[JumpTerm, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(
            self, "hamiltonians", tuple(readonly_complex(h) for h in self.hamiltonians)
        )
        object.__setattr__(self, "jump_terms", tuple(self.jump_terms))

    def terms_from(self, source: int) -> tuple[JumpTerm, ...]:
        """Jump terms draining the given component (ordered by target, label)."""
        return tuple(
            sorted(
                (t for t in self.jump_terms if t.source == source),
                key=lambda t: (t.target, t.label),
            )
        )

    def terms_into(self, target: int) -> tuple[JumpTerm, ...]:
        """Jump terms feeding the given component (ordered by source, label)."""
        return tuple(
            sorted(
                (t for t in self.jump_terms if t.target == target),
                key=lambda t: (t.source, t.label),
            )
        )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[str, ...]

    def __str__(self) -> str:
        if self.ok:
            return "model ok"
        return "model invalid:\n" + "\n".join(f"  - {s}" for s in self.issues)


def validate(model: GeneralizedLindbladModel) -> ValidationReport:
    """Check every structural requirement of the coupled master equation.

    Reports all findings instead of stopping at the first.  Besides shape,
    Hermiticity and index checks, this re-derives trace preservation of the
    generator numerically (gain and drain traces summed through independent
    groupings); in this representation that identity holds by construction,
    so a finding there indicates an internal inconsistency.
    """
    issues: list[str] = []
    m_count, dim = model.num_components, model.hilbert_dim

    if m_count < 1:
        issues.append(f"number of components must be >= 1, got {m_count}")
    if dim < 1:
        issues.append(f"hilbert dimension must be >= 1, got {dim}")
    if len(model.hamiltonians) != m_count:
        issues.append(
            f"expected {m_count} hamiltonians, got {len(model.hamiltonians)}"
        )

    shapes_ok = m_count >= 1 and dim >= 1
    for m, ham in enumerate(model.hamiltonians):
        if ham.shape != (dim, dim):
            issues.append(f"hamiltonian {m} dimension mismatch: {ham.shape}")
            shapes_ok = False
            continue
        if not np.all(np.isfinite(ham)):
            issues.append(f"hamiltonian {m} has non-finite entries")
            shapes_ok = False
            continue
        if hermitian_deviation(ham) > HERMITICITY_TOL:
            issues.append(f"hamiltonian {m} not Hermitian")

    seen: set[tuple[int, int, int]] = set()
    for idx, term in enumerate(model.jump_terms):
        if not (0 <= term.target < m_count) or not (0 <= term.source < m_count):
            issues.append(f"jump term {idx}: component index out of range")
            shapes_ok = False
        if term.operator.shape != (dim, dim):
            issues.append(f"jump term {idx}: operator dimension mismatch")
            shapes_ok = False
        elif not np.all(np.isfinite(term.operator)):
            issues.append(f"jump term {idx}: non-finite entries")
            shapes_ok = False
        if term.key in seen:
            issues.append(f"jump term {idx}: duplicate (target, source, label) {term.key}")
        seen.add(term.key)

    if shapes_ok and len(model.hamiltonians) == m_count:
        if not _generator_trace_preserving(model):
            issues.append("generator not trace-preserving")

    return ValidationReport(ok=not issues, issues=tuple(issues))


def _generator_trace_preserving(model: GeneralizedLindbladModel) -> bool:
    # Probe with seeded random PSD components: the gain traces (grouped by
    # term) must cancel the drain traces (grouped by source component).
    rng = np.random.default_rng(0)
    dim = model.hilbert_dim
    rhos = []
    for _ in range(model.num_components):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = a @ dagger(a)
        rhos.append(rho / np.trace(rho).real)
    gain = sum(
        np.trace(dagger(t.operator) @ t.operator @ rhos[t.source]).real
        for t in model.jump_terms
    )
    drain = 0.0
    for n in range(model.num_components):
        ops = sum(
            (dagger(t.operator) @ t.operator for t in model.terms_from(n)),
            start=np.zeros((dim, dim), dtype=np.complex128),
        )
        drain += np.trace(ops @ rhos[n]).real
    scale = max(1.0, abs(gain), abs(drain))
    return abs(gain - drain) <= _TRACE_PRESERVATION_TOL * scale


def effective_hamiltonian(model: GeneralizedLindbladModel, m: int) -> np.ndarray:
    """Non-Hermitian effective Hamiltonian of component m.

    H_m minus i/2 times the summed decay operators draining the component,
    i.e. the sum of ``R^dag R`` over every jump term whose *source* is m.
    """
    if not 0 <= m < model.num_components:
        raise IndexError(f"component index {m} out of range [0, {model.num_components})")
    dim = model.hilbert_dim
    drain = np.zeros((dim, dim), dtype=np.complex128)
    for term in model.terms_from(m):
        drain += dagger(term.operator) @ term.operator
    return model.hamiltonians[m] - 0.5j * drain


def build_two_band(gamma1: float, gamma2: float) -> GeneralizedLindbladModel:
    """Qubit coupled to an environment of two energy bands.

    Component 0 belongs to the lower band, component 1 to the upper band.
    Component 0 gains through ``sqrt(gamma1) sigma_plus`` acting on
    component 1, and component 1 gains through ``sqrt(gamma2) sigma_minus``
    acting on component 0.  Both Hamiltonians vanish.

    Parameters
    ----------
    gamma1, gamma2 : float
        Nonnegative relaxation rates of the two bands.
    """
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError(f"rates must be nonnegative, got ({gamma1}, {gamma2})")
    zero = np.zeros((2, 2))
    return GeneralizedLindbladModel(
        num_components=2,
        hilbert_dim=2,
        hamiltonians=(zero, zero),
        jump_terms=(
            JumpTerm(target=0, source=1, label=0, operator=math.sqrt(gamma1) * SIGMA_PLUS),
            JumpTerm(target=1, source=0, label=0, operator=math.sqrt(gamma2) * SIGMA_MINUS),
        ),
    )


def build_spin_bath(
    f: Sequence[float] | None = None,
    g: Sequence[float] | None = None,
    m_values: Sequence[int] = (1, 0, -1),
) -> GeneralizedLindbladModel:
    """Central spin coupled to a spin bath, one component per bath projection.

    Component labels ``m_values`` index the z-projection of the bath angular
    momentum; component positions follow the ordering of ``m_values``.  Rate
    ``f[i]`` drains component ``m_values[i]`` into the component labelled
    ``m_values[i]+1`` through ``sigma_minus``; rate ``g[i]`` drains it into
    ``m_values[i]-1`` through ``sigma_plus``.  A nonzero rate pointing at a
    missing neighbour label would break trace conservation and is rejected,
    which forces f at the topmost label and g at the bottommost label to
    zero.  Terms with a rate of exactly zero are omitted.

    Defaults reproduce the two-bath-spin case: labels (1, 0, -1) with every
    interior rate equal to 1.
    """
    labels = tuple(int(m) for m in m_values)
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate component labels in {labels}")
    if not labels:
        raise ValueError("at least one component label required")
    position = {m: i for i, m in enumerate(labels)}
    if f is None:
        f = [1.0 if m + 1 in position else 0.0 for m in labels]
    if g is None:
        g = [1.0 if m - 1 in position else 0.0 for m in labels]
    if len(f) != len(labels) or len(g) != len(labels):
        raise ValueError("f and g must have one rate per component label")

    terms = []
    for i, m in enumerate(labels):
        fi, gi = float(f[i]), float(g[i])
        if fi < 0 or gi < 0:
            raise ValueError(f"rates must be nonnegative, got f={fi}, g={gi} at label {m}")
        if fi > 0:
            if m + 1 not in position:
                raise ValueError(
                    f"nonzero boundary rate f={fi} at topmost label {m} breaks trace conservation"
                )
            terms.append(
                JumpTerm(target=position[m + 1], source=i, label=0,
                         operator=math.sqrt(fi) * SIGMA_MINUS)
            )
        if gi > 0:
            if m - 1 not in position:
                raise ValueError(
                    f"nonzero boundary rate g={gi} at bottommost label {m} breaks trace conservation"
                )
            terms.append(
                JumpTerm(target=position[m - 1], source=i, label=0,
                         operator=math.sqrt(gi) * SIGMA_PLUS)
            )

    zero = np.zeros((2, 2))
    return GeneralizedLindbladModel(
        num_components=len(labels),
        hilbert_dim=2,
        hamiltonians=(zero,) * len(labels),
        jump_terms=tuple(terms),
    )


def gamma_from_microscopic(coupling: float, level_count: int, band_width: float) -> float:
    """Relaxation rate of one band: 2 pi coupling^2 level_count / band_width."""
    if level_count < 1:
        raise ValueError(f"level count must be >= 1, got {level_count}")
    if band_width <= 0:
        raise ValueError(f"band width must be positive, got {band_width}")
    return 2.0 * math.pi * coupling**2 * level_count / band_width


def jump_mode_count(num_components: int, ops_per_component: int) -> int:
    """Number of distinct joint outcomes of one shared-random-number step.

    ``ops_per_component`` counts the operators of one component including
    its non-jump operator; the result is M(J - 1) + 1.
    """
    if num_components < 1 or ops_per_component < 1:
        raise ValueError("counts must be >= 1")
    return num_components * (ops_per_component - 1) + 1


def jump_mode_count_for_model(model: GeneralizedLindbladModel) -> int:
    """Joint outcome count with J taken as the widest per-component branch set."""
    widest = max(
        (len(model.terms_into(m)) for m in range(model.num_components)), default=0
    )
    return jump_mode_count(model.num_components, widest + 1)
