"""Time series containers, streaming ensemble statistics and series comparison.

The accumulator keeps Welford-style running moments per (time, observable)
cell.  Ensemble reductions push one trajectory at a time in trajectory-index
order, which makes the result independent of how trajectories were
distributed over workers; ``merge`` combines two accumulators and is used
when partial accumulators are reduced in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z_FLOOR = 1e-12


def _as_grid(times) -> np.ndarray:
    grid = np.asarray(times, dtype=np.float64)
    if grid.ndim != 1:
        raise ValueError("time grid must be one-dimensional")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class TimeSeries:
    """Values of named observables on a strictly increasing time grid."""

    times: np.ndarray
    names: tuple[str, ...]
    values: np.ndarray  # shape (len(times), len(names))

    def __post_init__(self):
        grid = _as_grid(self.times)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (grid.size, len(self.names)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{(grid.size, len(self.names))}"
            )
        object.__setattr__(self, "times", grid)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


class EnsembleAccumulator:
    """Running mean and variance of observable time series across trajectories."""

    def __init__(self, times, names):
        self.times = _as_grid(times)
        self.names = tuple(names)
        self.count = 0
        shape = (self.times.size, len(self.names))
        self._mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def _check_grid(self, times, names):
        if tuple(names) != self.names or not np.array_equal(times, self.times):
            raise ValueError("grid mismatch between accumulator and input")

    def add(self, values: np.ndarray) -> None:
        """Push one trajectory's (n_times, n_observables) value array."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self._mean.shape:
            raise ValueError(f"expected shape {self._mean.shape}, got {values.shape}")
        self.count += 1
        delta = values - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (values - self._mean)

    def add_series(self, series: TimeSeries) -> None:
        self._check_grid(series.times, series.names)
        self.add(series.values)

    def merge(self, other: "EnsembleAccumulator") -> None:
        """Fold another accumulator into this one (Chan's parallel update)."""
        self._check_grid(other.times, other.names)
        if other.count == 0:
            return
        if self.count == 0:
            self.count = other.count
            self._mean = other._mean.copy()
            self._m2 = other._m2.copy()
            return
        total = self.count + other.count
        delta = other._mean - self._mean
        self._mean += delta * (other.count / total)
        self._m2 += other._m2 + delta**2 * (self.count * other.count / total)
        self.count = total

    def finalize(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and standard error of the mean; stderr is zero for count == 1."""
        if self.count == 0:
            raise ValueError("no trajectories accumulated")
        if self.count == 1:
            return self._mean.copy(), np.zeros_like(self._mean)
        variance = self._m2 / (self.count - 1)
        return self._mean.copy(), np.sqrt(np.maximum(variance, 0.0) / self.count)


@dataclass(frozen=True)
class ComparisonReport:
    n_points: int
    max_abs_diff: float
    max_z: float
    worst_abs_time: float
    worst_z_time: float
    passed: bool
    abs_tol: float
    z_max: float

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: {self.n_points} points, "
            f"max |diff| = {self.max_abs_diff:.3e} (at t = {self.worst_abs_time:g}), "
            f"max z = {self.max_z:.3g} (at t = {self.worst_z_time:g}) "
            f"[abs_tol = {self.abs_tol:g}, z_max = {self.z_max:g}]"
        )


def compare_series(
    a,
    b,
    b_stderr=None,
    abs_tol: float = 0.05,
    z_max: float = 3.0,
    times=None,
) -> ComparisonReport:
    """Point-by-point comparison of two series on the same grid.

    A point passes when ``z = |a - b| / max(stderr, floor)`` is at most
    ``z_max`` or when ``|a - b|`` is at most ``abs_tol``; the comparison
    passes when every point does.  The floor guards exactly conserved
    observables whose stderr vanishes.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"series shapes differ: {a.shape} vs {b.shape}")
    if b_stderr is None:
        stderr = np.zeros_like(a)
    else:
        stderr = np.asarray(b_stderr, dtype=np.float64)
        if stderr.shape != a.shape:
            raise ValueError("stderr shape does not match series")
    grid = np.arange(a.size, dtype=np.float64) if times is None else _as_grid(times)
    if grid.size != a.size:
        raise ValueError("grid mismatch between times and series")

    diff = np.abs(a - b)
    z = diff / np.maximum(stderr, Z_FLOOR)
    point_ok = (z <= z_max) | (diff <= abs_tol)
    i_abs = int(np.argmax(diff)) if diff.size else 0
    i_z = int(np.argmax(z)) if z.size else 0
    return ComparisonReport(
        n_points=int(a.size),
        max_abs_diff=float(diff[i_abs]) if diff.size else 0.0,
        max_z=float(z[i_z]) if z.size else 0.0,
        worst_abs_time=float(grid[i_abs]) if diff.size else 0.0,
        worst_z_time=float(grid[i_z]) if z.size else 0.0,
        passed=bool(np.all(point_ok)),
        abs_tol=abs_tol,
        z_max=z_max,
    )
