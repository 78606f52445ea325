import numpy as np
import pytest

import qjump as qj
from qjump.observables import ImaginaryResidueError, Observable, _checked_real, preset

from helpers import random_pure_state


class TestPresets:
    def test_matrices(self):
        assert np.array_equal(preset("excited_population", 2).matrix, np.diag([1, 0]))
        assert np.array_equal(preset("ground_population", 2).matrix, np.diag([0, 1]))
        assert np.array_equal(preset("sigma_z", 2).matrix, np.diag([1, -1]))

    def test_coherence_presets_extract_rho_eg(self):
        rho = np.array([[0.5, 0.2 + 0.3j], [0.2 - 0.3j, 0.5]])
        re = qj.expectation_density(rho[np.newaxis], preset("coherence_re", 2))
        im = qj.expectation_density(rho[np.newaxis], preset("coherence_im", 2))
        assert re == pytest.approx(0.2, abs=1e-14)
        assert im == pytest.approx(0.3, abs=1e-14)

    def test_component_weight(self):
        obs = preset("component_weight(1)", 5)
        assert obs.component == 1 and obs.matrix is None

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown observable"):
            preset("population", 2)

    def test_qubit_presets_require_d2(self):
        with pytest.raises(ValueError, match="2-dimensional"):
            preset("sigma_z", 3)


class TestObservable:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            Observable("bad", matrix=[[0, 1], [0, 0]])

    def test_rejects_bad_names(self):
        with pytest.raises(ValueError):
            Observable("a,b", matrix=np.eye(2))
        with pytest.raises(ValueError):
            Observable("", matrix=np.eye(2))

    def test_requires_exactly_one_payload(self):
        with pytest.raises(ValueError):
            Observable("x", matrix=np.eye(2), component=0)
        with pytest.raises(ValueError):
            Observable("x")


class TestExpectationWavefunction:
    def test_identity_equals_total_norm(self):
        state = random_pure_state(np.random.default_rng(0), 3, 2)
        value = qj.expectation_wavefunction(state, Observable("n", matrix=np.eye(2)))
        assert value == pytest.approx(state.total_weight, abs=0.0)

    def test_sigma_z_on_excited(self, excited_lower):
        assert qj.expectation_wavefunction(excited_lower, preset("sigma_z", 2)) == 1.0

    def test_mixed_components(self):
        state = qj.TrajectoryState(0.0, [[0.8, 0.0], [0.0, 0.6]])
        obs = preset("excited_population", 2)
        assert qj.expectation_wavefunction(state, obs) == pytest.approx(0.64, abs=1e-15)

    def test_component_weight(self):
        state = qj.TrajectoryState(0.0, [[0.8, 0.0], [0.0, 0.6]])
        obs = preset("component_weight(1)", 2)
        assert qj.expectation_wavefunction(state, obs) == pytest.approx(0.36, abs=1e-15)
        with pytest.raises(IndexError):
            qj.expectation_wavefunction(state, preset("component_weight(5)", 2))


class TestExpectationDensity:
    def test_matches_wavefunction_on_pure_components(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            state = random_pure_state(rng, 3, 3)
            a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            obs = Observable("h", matrix=0.5 * (a + a.conj().T))
            rho = np.array([np.outer(v, v.conj()) for v in state.components])
            wf = qj.expectation_wavefunction(state, obs)
            dm = qj.expectation_density(rho, obs)
            assert abs(wf - dm) < 1e-12

    def test_spin_bath_initial_fully_excited(self, spin_bath_initial):
        rho = np.array([np.outer(v, v.conj()) for v in spin_bath_initial.components])
        value = qj.expectation_density(rho, preset("excited_population", 2))
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_identity_on_valid_components(self, spin_bath_initial):
        rho = np.array([np.outer(v, v.conj()) for v in spin_bath_initial.components])
        value = qj.expectation_density(rho, Observable("n", matrix=np.eye(2)))
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_component_weight(self, spin_bath_initial):
        rho = np.array([np.outer(v, v.conj()) for v in spin_bath_initial.components])
        value = qj.expectation_density(rho, preset("component_weight(2)", 2))
        assert value == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_residue_guard():
    # the guard fires only when numerics leak a genuine imaginary part
    assert _checked_real(1.0 + 1e-12j) == 1.0
    with pytest.raises(ImaginaryResidueError):
        _checked_real(1.0 + 1e-8j)
