"""Shared construction helpers for the test suite."""

import numpy as np

import qjump as qj


def random_model(rng, m_count, dim, terms_per_pair=1, rate_scale=1.0):
    """A random valid model: Hermitian Hamiltonians plus one operator per
    ordered component pair and label."""
    hams = []
    for _ in range(m_count):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        hams.append(0.5 * (a + a.conj().T))
    terms = []
    for target in range(m_count):
        for source in range(m_count):
            for label in range(terms_per_pair):
                op = rate_scale * (
                    rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
                )
                terms.append(qj.JumpTerm(target, source, label, op))
    model = qj.GeneralizedLindbladModel(m_count, dim, tuple(hams), tuple(terms))
    assert qj.validate(model).ok
    return model


def random_pure_state(rng, m_count, dim):
    """Random components with total squared norm exactly normalized to 1."""
    psi = rng.standard_normal((m_count, dim)) + 1j * rng.standard_normal((m_count, dim))
    psi /= np.sqrt((psi.conj() * psi).real.sum())
    return qj.TrajectoryState(0.0, psi)


def random_density_components(rng, m_count, dim):
    """Random Hermitian PSD components with unit total trace."""
    rhos = []
    for _ in range(m_count):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rhos.append(a @ a.conj().T)
    stack = np.array(rhos)
    total = stack.trace(axis1=1, axis2=2).real.sum()
    return stack / total


def models_equal(a, b, tol=0.0):
    """Entrywise model equality (jump terms matched by their key)."""
    if a.num_components != b.num_components or a.hilbert_dim != b.hilbert_dim:
        return False
    if len(a.hamiltonians) != len(b.hamiltonians):
        return False
    for ha, hb in zip(a.hamiltonians, b.hamiltonians):
        if ha.shape != hb.shape or np.abs(ha - hb).max() > tol:
            return False
    terms_a = {t.key: t.operator for t in a.jump_terms}
    terms_b = {t.key: t.operator for t in b.jump_terms}
    if terms_a.keys() != terms_b.keys():
        return False
    return all(np.abs(terms_a[k] - terms_b[k]).max() <= tol for k in terms_a)
