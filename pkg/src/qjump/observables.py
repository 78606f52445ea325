"""Observable specifications and expectation values on both state pictures.

An observable is either an explicit Hermitian matrix or one of the named
qubit presets.  Expectation values over a trajectory state sum
``<psi_m|A|psi_m>`` across the non-normalized component wave functions; on
the density-matrix side they are ``Tr(A sum_m rho_m)``.  The two agree
whenever each ``rho_m`` is the outer product of the matching ``psi_m``.
"""

from __future__ import annotations

import re

import numpy as np

from ._linalg import hermitian_deviation, norm_sq, quad_form, readonly_complex
from .model import HERMITICITY_TOL

RESIDUE_TOL = 1e-10

# Presets use the qubit basis convention |e> = index 0, |g> = index 1.
_QUBIT_PRESETS = {
    "excited_population": [[1, 0], [0, 0]],
    "ground_population": [[0, 0], [0, 1]],
    # Tr(A rho) = Re rho_eg and Im rho_eg respectively.
    "coherence_re": [[0, 0.5], [0.5, 0]],
    "coherence_im": [[0, 0.5j], [-0.5j, 0]],
    "sigma_z": [[1, 0], [0, -1]],
}
_COMPONENT_WEIGHT_RE = re.compile(r"^component_weight\((\d+)\)$")


class ImaginaryResidueError(RuntimeError):
    """Expectation value had an imaginary part beyond the tolerated residue."""

    def __init__(self, residue: float):
        super().__init__(residue)
        self.residue = residue

    def __str__(self) -> str:
        return f"imaginary residue {self.residue:.3e} exceeds {RESIDUE_TOL:.0e}"


class Observable:
    """A named Hermitian matrix observable or a single component's weight."""

    def __init__(self, name: str, matrix=None, component: int | None = None):
        if not name or any(c in name for c in ",\n\r"):
            raise ValueError(f"invalid observable name {name!r}")
        if (matrix is None) == (component is None):
            raise ValueError("exactly one of matrix or component is required")
        self.name = name
        self.component = None if component is None else int(component)
        if matrix is not None:
            mat = readonly_complex(matrix)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"observable {name!r} matrix must be square")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"observable {name!r} has non-finite entries")
            if hermitian_deviation(mat) > HERMITICITY_TOL:
                raise ValueError(f"observable {name!r} is not Hermitian")
            self.matrix = mat
        else:
            if self.component < 0:
                raise ValueError("component index must be nonnegative")
            self.matrix = None

    def __repr__(self) -> str:
        return f"Observable({self.name!r})"


def preset(name: str, dim: int) -> Observable:
    """Look up a named preset; qubit presets require dim == 2."""
    match = _COMPONENT_WEIGHT_RE.match(name)
    if match:
        return Observable(name, component=int(match.group(1)))
    if name not in _QUBIT_PRESETS:
        known = sorted(_QUBIT_PRESETS) + ["component_weight(m)"]
        raise ValueError(f"unknown observable {name!r}; known presets: {known}")
    if dim != 2:
        raise ValueError(f"preset {name!r} requires a 2-dimensional system, got d={dim}")
    return Observable(name, matrix=_QUBIT_PRESETS[name])


def as_observable(spec, dim: int) -> Observable:
    if isinstance(spec, Observable):
        return spec
    if isinstance(spec, str):
        return preset(spec, dim)
    raise TypeError(f"cannot interpret {spec!r} as an observable")


def _checked_real(value: complex) -> float:
    if abs(value.imag) > RESIDUE_TOL:
        raise ImaginaryResidueError(abs(value.imag))
    return value.real


def expectation_wavefunction(state, observable: Observable) -> float:
    """sum_m <psi_m|A|psi_m> over the non-normalized component wave functions.

    ``state`` is a TrajectoryState or an (M, d) array of amplitudes.
    """
    components = np.asarray(getattr(state, "components", state), dtype=np.complex128)
    if observable.component is not None:
        if observable.component >= components.shape[0]:
            raise IndexError(f"component {observable.component} out of range")
        return norm_sq(components[observable.component])
    total = 0j
    for psi in components:
        total += quad_form(observable.matrix, psi)
    return _checked_real(total)


def expectation_density(components, observable: Observable) -> float:
    """Tr(A sum_m rho_m) over the non-normalized density components."""
    stack = np.asarray(components, dtype=np.complex128)
    if observable.component is not None:
        if observable.component >= stack.shape[0]:
            raise IndexError(f"component {observable.component} out of range")
        return _checked_real(complex(np.trace(stack[observable.component])))
    reduced = stack.sum(axis=0)
    return _checked_real(complex(np.trace(observable.matrix @ reduced)))
