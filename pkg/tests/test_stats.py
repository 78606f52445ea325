import numpy as np
import pytest

import qjump as qj
from qjump.stats import EnsembleAccumulator, TimeSeries, compare_series


class TestTimeSeries:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            TimeSeries(times=[0.0, 0.0, 1.0], names=("a",), values=np.zeros((3, 1)))

    def test_shape_must_match(self):
        with pytest.raises(ValueError):
            TimeSeries(times=[0.0, 1.0], names=("a",), values=np.zeros((3, 1)))

    def test_column_lookup(self):
        ts = TimeSeries(times=[0.0, 1.0], names=("a", "b"), values=[[1, 2], [3, 4]])
        assert np.array_equal(ts.column("b"), [2, 4])


class TestAccumulator:
    def test_single_series_stderr_zero(self):
        acc = EnsembleAccumulator([0.0, 1.0], ("a",))
        acc.add(np.array([[1.0], [2.0]]))
        mean, stderr = acc.finalize()
        assert np.array_equal(mean, [[1.0], [2.0]])
        assert np.all(stderr == 0.0)
        assert acc.count == 1

    def test_constant_series(self):
        acc = EnsembleAccumulator([0.0], ("a",))
        acc.add([[3.0]])
        acc.add([[3.0]])
        mean, stderr = acc.finalize()
        assert mean[0, 0] == 3.0 and stderr[0, 0] == 0.0

    def test_two_point_textbook_case(self):
        acc = EnsembleAccumulator([0.0], ("a",))
        acc.add([[0.0]])
        acc.add([[1.0]])
        mean, stderr = acc.finalize()
        assert mean[0, 0] == pytest.approx(0.5, abs=0.0)
        # sample variance 0.5, stderr sqrt(0.5 / 2) = 0.5
        assert stderr[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_against_numpy_moments(self):
        rng = np.random.default_rng(8)
        data = rng.standard_normal((40, 5, 2))
        acc = EnsembleAccumulator(np.arange(5.0), ("a", "b"))
        for row in data:
            acc.add(row)
        mean, stderr = acc.finalize()
        assert np.abs(mean - data.mean(axis=0)).max() < 1e-13
        expected = data.std(axis=0, ddof=1) / np.sqrt(40)
        assert np.abs(stderr - expected).max() < 1e-13

    def test_merge_matches_concatenation(self):
        rng = np.random.default_rng(12)
        data = rng.standard_normal((30, 4, 1))
        whole = EnsembleAccumulator(np.arange(4.0), ("a",))
        for row in data:
            whole.add(row)
        left = EnsembleAccumulator(np.arange(4.0), ("a",))
        right = EnsembleAccumulator(np.arange(4.0), ("a",))
        for row in data[:13]:
            left.add(row)
        for row in data[13:]:
            right.add(row)
        left.merge(right)
        assert left.count == whole.count
        for got, want in zip(left.finalize(), whole.finalize()):
            assert np.abs(got - want).max() < 1e-12

    def test_merge_deterministic_for_fixed_grouping(self):
        rng = np.random.default_rng(13)
        data = rng.standard_normal((20, 3, 1))

        def reduce_in_chunks():
            parts = []
            for chunk in np.split(data, [5, 11]):
                acc = EnsembleAccumulator(np.arange(3.0), ("a",))
                for row in chunk:
                    acc.add(row)
                parts.append(acc)
            base = parts[0]
            base.merge(parts[1])
            base.merge(parts[2])
            return base.finalize()

        first, second = reduce_in_chunks(), reduce_in_chunks()
        assert np.array_equal(first[0], second[0])
        assert np.array_equal(first[1], second[1])

    def test_merge_empty(self):
        acc = EnsembleAccumulator([0.0], ("a",))
        other = EnsembleAccumulator([0.0], ("a",))
        other.add([[2.0]])
        acc.merge(other)
        assert acc.count == 1 and acc.finalize()[0][0, 0] == 2.0

    def test_grid_mismatch(self):
        acc = EnsembleAccumulator([0.0, 1.0], ("a",))
        other = EnsembleAccumulator([0.0, 2.0], ("a",))
        with pytest.raises(ValueError, match="grid mismatch"):
            acc.merge(other)
        with pytest.raises(ValueError, match="grid mismatch"):
            acc.add_series(TimeSeries([0.0, 2.0], ("a",), np.zeros((2, 1))))

    def test_finalize_empty(self):
        with pytest.raises(ValueError):
            EnsembleAccumulator([0.0], ("a",)).finalize()


class TestCompareSeries:
    def test_identical_series_pass(self):
        a = np.linspace(0, 1, 10)
        report = compare_series(a, a.copy(), np.zeros(10))
        assert report.passed and report.max_z == 0.0 and report.max_abs_diff == 0.0

    def test_large_offset_fails(self):
        a = np.zeros(5)
        b = a + 1.0
        stderr = np.full(5, 0.1)
        report = compare_series(a, b, stderr, abs_tol=0.05, z_max=3.0)
        assert not report.passed
        assert report.max_z == pytest.approx(10.0)

    def test_abs_tol_arm_rescues_zero_stderr(self):
        a = np.zeros(5)
        b = a + 0.01
        report = compare_series(a, b, np.zeros(5), abs_tol=0.05, z_max=3.0)
        assert report.passed  # z is astronomical but |diff| <= abs_tol

    def test_z_arm_rescues_large_but_noisy_diff(self):
        a = np.zeros(3)
        b = a + 0.2
        report = compare_series(a, b, np.full(3, 0.1), abs_tol=0.05, z_max=3.0)
        assert report.passed and report.max_z == pytest.approx(2.0)

    def test_worst_point_reported(self):
        a = np.zeros(4)
        b = np.array([0.0, 0.3, 0.1, 0.0])
        report = compare_series(a, b, np.full(4, 0.01), times=[0.0, 0.5, 1.0, 1.5])
        assert report.worst_abs_time == 0.5 and not report.passed

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            compare_series(np.zeros(3), np.zeros(4))
        with pytest.raises(ValueError):
            compare_series(np.zeros(3), np.zeros(3), np.zeros(2))


def test_ensemble_result_column(two_band, excited_lower):
    result = qj.run_ensemble(
        two_band, excited_lower, dt=0.01, t_max=0.1, n_traj=3, master_seed=0,
        observables=["excited_population", "sigma_z"],
    )
    mean, stderr = result.column("sigma_z")
    assert mean.shape == result.times.shape == stderr.shape
    assert result.n_traj == 3 and result.master_seed == 0
    assert np.all(stderr >= 0.0)
