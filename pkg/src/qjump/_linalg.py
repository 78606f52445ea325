"""Small dense complex-matrix helpers shared by the engine and observables.

These deliberately avoid BLAS so that the summation order (inner index
ascending, then outer index ascending) matches the compiled trajectory
kernel exactly; agreement between the two code paths is tested bitwise.
"""

from __future__ import annotations

import numpy as np


def matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(a @ v) computed row by row with the inner sum over columns ascending."""
    return (a * v[np.newaxis, :]).sum(axis=1)


def quad_form(a: np.ndarray, v: np.ndarray) -> complex:
    """<v|a|v> for a small square matrix, same accumulation order as matvec."""
    av = (a * v[np.newaxis, :]).sum(axis=1)
    return complex((v.conj() * av).sum())


def norm_sq(v: np.ndarray) -> float:
    """Squared Euclidean norm, summed in index order."""
    return float((v.conj() * v).real.sum())


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitian_deviation(a: np.ndarray) -> float:
    """Max absolute entry of a - a^dagger."""
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


def readonly_complex(a, shape=None) -> np.ndarray:
    """Copy input to an immutable complex128 array (shared-safe)."""
    arr = np.array(a, dtype=np.complex128)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr
