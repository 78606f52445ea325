"""Simulation configs, model files and CSV time-series output.

Both configs and model files are YAML documents.  A simulation config looks
like::

    model:
      builtin: two_band        # or spin_bath, or an explicit model mapping
      gamma1: 1.0
      gamma2: 1.0
    initial:                   # one amplitude list per component, [re, im]
      - [[1.0, 0.0], [0.0, 0.0]]
      - [[0.0, 0.0], [0.0, 0.0]]
    dt: 1.0e-3
    t_max: 5.0
    sample_stride: 50
    n_traj: 400
    master_seed: 7
    workers: 1
    observables: [excited_population]
    output: out.csv

An explicit model (inline under ``model:`` or as a standalone model file)
uses sparse complex triplets ``[row, col, re, im]`` per operator::

    dimensions: {components: 2, hilbert_dim: 2}
    hamiltonians:
      - []                     # one triplet list per component
      - []
    jump_terms:
      - {target: 0, source: 1, label: 0, entries: [[0, 1, 1.0, 0.0]]}
      - {target: 1, source: 0, label: 0, entries: [[1, 0, 1.0, 0.0]]}
    metadata: {name: two-band}

Unknown keys are rejected with the offending field path.  CSV files carry a
``t`` column plus one value and one ``_stderr`` column per observable, with
every number printed to 17 significant digits, so re-running with the same
seed reproduces the file byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .model import GeneralizedLindbladModel, JumpTerm, build_spin_bath, build_two_band, validate
from .observables import Observable, preset


class ConfigError(Exception):
    """Base class for configuration problems."""


class ConfigSyntaxError(ConfigError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(line, column, message)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"syntax error at line {self.line}, column {self.column}: {self.args[2]}"


class ConfigFieldError(ConfigError):
    def __init__(self, path: str, message: str):
        super().__init__(path, message)
        self.path = path

    def __str__(self) -> str:
        return f"{self.path}: {self.args[1]}"


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    initial: np.ndarray  # (M, d) complex amplitudes
    dt: float
    t_max: float
    sample_stride: int
    n_traj: int
    master_seed: int
    workers: int
    observables: tuple[Observable, ...]
    output: str | None


def _load_yaml(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = (mark.line + 1) if mark else 0
        column = (mark.column + 1) if mark else 0
        raise ConfigSyntaxError(line, column, exc.problem or str(exc)) from exc
    except yaml.YAMLError as exc:
        raise ConfigSyntaxError(0, 0, str(exc)) from exc


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigFieldError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _reject_unknown(node: dict, allowed, path: str) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigFieldError(
            f"{path}.{unknown[0]}" if path else str(unknown[0]),
            f"unknown key (allowed: {sorted(allowed)})",
        )


def _number(node, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigFieldError(path, f"expected a number, got {node!r}")
    return float(node)


def _integer(node, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ConfigFieldError(path, f"expected an integer, got {node!r}")
    return node


def _complex_entry(node, path: str) -> complex:
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return complex(node)
    if isinstance(node, list) and len(node) == 2:
        return complex(_number(node[0], f"{path}[0]"), _number(node[1], f"{path}[1]"))
    raise ConfigFieldError(path, f"expected a number or [re, im] pair, got {node!r}")


def _triplets_to_matrix(node, dim: int, path: str) -> np.ndarray:
    if not isinstance(node, list):
        raise ConfigFieldError(path, "expected a list of [row, col, re, im] triplet entries")
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for i, entry in enumerate(node):
        epath = f"{path}[{i}]"
        if not isinstance(entry, list) or len(entry) != 4:
            raise ConfigFieldError(epath, f"expected [row, col, re, im], got {entry!r}")
        row = _integer(entry[0], f"{epath}[0]")
        col = _integer(entry[1], f"{epath}[1]")
        if not (0 <= row < dim and 0 <= col < dim):
            raise ConfigFieldError(epath, f"entry ({row}, {col}) outside a {dim}x{dim} operator")
        mat[row, col] = complex(
            _number(entry[2], f"{epath}[2]"), _number(entry[3], f"{epath}[3]")
        )
    return mat


def _matrix_to_triplets(mat: np.ndarray) -> list[list]:
    entries = []
    for row in range(mat.shape[0]):
        for col in range(mat.shape[1]):
            z = mat[row, col]
            if z != 0:
                entries.append([row, col, float(z.real), float(z.imag)])
    return entries


def parse_model_mapping(node, path: str = "model") -> GeneralizedLindbladModel:
    """Explicit model mapping (dimensions / hamiltonians / jump_terms) to a model."""
    node = _require_mapping(node, path)
    _reject_unknown(node, {"dimensions", "hamiltonians", "jump_terms", "metadata"}, path)
    for key in ("dimensions", "hamiltonians", "jump_terms"):
        if key not in node:
            raise ConfigFieldError(f"{path}.{key}", "missing required key")
    dims = _require_mapping(node["dimensions"], f"{path}.dimensions")
    _reject_unknown(dims, {"components", "hilbert_dim"}, f"{path}.dimensions")
    for key in ("components", "hilbert_dim"):
        if key not in dims:
            raise ConfigFieldError(f"{path}.dimensions.{key}", "missing required key")
    m_count = _integer(dims["components"], f"{path}.dimensions.components")
    dim = _integer(dims["hilbert_dim"], f"{path}.dimensions.hilbert_dim")
    if m_count < 1 or dim < 1:
        raise ConfigFieldError(f"{path}.dimensions", "components and hilbert_dim must be >= 1")

    hams = node["hamiltonians"]
    if not isinstance(hams, list) or len(hams) != m_count:
        raise ConfigFieldError(
            f"{path}.hamiltonians", f"expected a list of {m_count} triplet lists"
        )
    hamiltonians = tuple(
        _triplets_to_matrix(h, dim, f"{path}.hamiltonians[{m}]") for m, h in enumerate(hams)
    )

    terms_node = node["jump_terms"]
    if not isinstance(terms_node, list):
        raise ConfigFieldError(f"{path}.jump_terms", "expected a list")
    terms = []
    for i, tnode in enumerate(terms_node):
        tpath = f"{path}.jump_terms[{i}]"
        tnode = _require_mapping(tnode, tpath)
        _reject_unknown(tnode, {"target", "source", "label", "entries"}, tpath)
        for key in ("target", "source", "entries"):
            if key not in tnode:
                raise ConfigFieldError(f"{tpath}.{key}", "missing required key")
        terms.append(
            JumpTerm(
                target=_integer(tnode["target"], f"{tpath}.target"),
                source=_integer(tnode["source"], f"{tpath}.source"),
                label=_integer(tnode.get("label", 0), f"{tpath}.label"),
                operator=_triplets_to_matrix(tnode["entries"], dim, f"{tpath}.entries"),
            )
        )
    if "metadata" in node:
        _require_mapping(node["metadata"], f"{path}.metadata")
    return GeneralizedLindbladModel(
        num_components=m_count, hilbert_dim=dim,
        hamiltonians=hamiltonians, jump_terms=tuple(terms),
    )


def _parse_builtin_model(node: dict, path: str) -> GeneralizedLindbladModel:
    name = node["builtin"]
    if name == "two_band":
        _reject_unknown(node, {"builtin", "gamma1", "gamma2"}, path)
        for key in ("gamma1", "gamma2"):
            if key not in node:
                raise ConfigFieldError(f"{path}.{key}", "missing required key")
        try:
            return build_two_band(
                _number(node["gamma1"], f"{path}.gamma1"),
                _number(node["gamma2"], f"{path}.gamma2"),
            )
        except ValueError as exc:
            raise ConfigFieldError(path, str(exc)) from exc
    if name == "spin_bath":
        _reject_unknown(node, {"builtin", "f", "g", "m_values"}, path)
        kwargs = {}
        for key in ("f", "g", "m_values"):
            if key in node:
                if not isinstance(node[key], list):
                    raise ConfigFieldError(f"{path}.{key}", "expected a list")
                kwargs[key] = node[key]
        try:
            return build_spin_bath(**kwargs)
        except ValueError as exc:
            raise ConfigFieldError(path, str(exc)) from exc
    raise ConfigFieldError(
        f"{path}.builtin", f"unknown builtin {name!r} (known: two_band, spin_bath)"
    )


def _parse_model_section(node, path: str = "model") -> GeneralizedLindbladModel:
    node = _require_mapping(node, path)
    if "builtin" in node:
        return _parse_builtin_model(node, path)
    return parse_model_mapping(node, path)


def _parse_observable(node, dim: int, path: str) -> Observable:
    if isinstance(node, str):
        try:
            return preset(node, dim)
        except ValueError as exc:
            raise ConfigFieldError(path, str(exc)) from exc
    node = _require_mapping(node, path)
    _reject_unknown(node, {"name", "matrix"}, path)
    for key in ("name", "matrix"):
        if key not in node:
            raise ConfigFieldError(f"{path}.{key}", "missing required key")
    if not isinstance(node["name"], str):
        raise ConfigFieldError(f"{path}.name", "expected a string")
    rows = node["matrix"]
    if not isinstance(rows, list) or len(rows) != dim:
        raise ConfigFieldError(f"{path}.matrix", f"expected {dim} rows")
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ConfigFieldError(f"{path}.matrix[{r}]", f"expected {dim} entries")
        for c, cell in enumerate(row):
            mat[r, c] = _complex_entry(cell, f"{path}.matrix[{r}][{c}]")
    try:
        return Observable(node["name"], matrix=mat)
    except ValueError as exc:
        raise ConfigFieldError(path, str(exc)) from exc


_CONFIG_KEYS = {
    "model", "initial", "dt", "t_max", "sample_stride", "n_traj",
    "master_seed", "workers", "observables", "output",
}


def parse_config(text: str) -> tuple[SimulationConfig, GeneralizedLindbladModel]:
    """Parse and fully validate a simulation config document.

    Returns the run parameters and the model; delegates model validation to
    `model.validate` and reports its findings as field errors.
    """
    root = _load_yaml(text)
    root = _require_mapping(root, "config")
    _reject_unknown(root, _CONFIG_KEYS, "")
    for key in ("model", "initial", "dt", "t_max"):
        if key not in root:
            raise ConfigFieldError(key, "missing required key")

    model = _parse_model_section(root["model"])
    report = validate(model)
    if not report.ok:
        raise ConfigFieldError("model", "; ".join(report.issues))

    m_count, dim = model.num_components, model.hilbert_dim
    init_node = root["initial"]
    if not isinstance(init_node, list) or len(init_node) != m_count:
        raise ConfigFieldError("initial", f"expected {m_count} component amplitude lists")
    initial = np.zeros((m_count, dim), dtype=np.complex128)
    for m, comp in enumerate(init_node):
        if not isinstance(comp, list) or len(comp) != dim:
            raise ConfigFieldError(f"initial[{m}]", f"expected {dim} amplitudes")
        for i, amp in enumerate(comp):
            initial[m, i] = _complex_entry(amp, f"initial[{m}][{i}]")
    total = float((initial.conj() * initial).real.sum())
    if abs(total - 1.0) > 1e-9:
        raise ConfigFieldError(
            "initial", f"total squared norm {total!r} must be 1 within 1e-09"
        )

    dt = _number(root["dt"], "dt")
    t_max = _number(root["t_max"], "t_max")
    stride = _integer(root.get("sample_stride", 1), "sample_stride")
    n_traj = _integer(root.get("n_traj", 1), "n_traj")
    master_seed = _integer(root.get("master_seed", 0), "master_seed")
    workers = _integer(root.get("workers", 1), "workers")
    if dt <= 0:
        raise ConfigFieldError("dt", f"must be positive, got {dt}")
    if t_max <= 0:
        raise ConfigFieldError("t_max", f"must be positive, got {t_max}")
    if stride < 1:
        raise ConfigFieldError("sample_stride", f"must be >= 1, got {stride}")
    if n_traj < 1:
        raise ConfigFieldError("n_traj", f"must be >= 1, got {n_traj}")
    if workers < 1:
        raise ConfigFieldError("workers", f"must be >= 1, got {workers}")

    obs_node = root.get("observables", [])
    if not isinstance(obs_node, list):
        raise ConfigFieldError("observables", "expected a list")
    observables = tuple(
        _parse_observable(o, dim, f"observables[{i}]") for i, o in enumerate(obs_node)
    )
    names = [o.name for o in observables]
    if len(set(names)) != len(names):
        raise ConfigFieldError("observables", f"duplicate names in {names}")
    for o in observables:
        if o.component is not None and o.component >= m_count:
            raise ConfigFieldError(
                "observables", f"{o.name}: component index out of range"
            )

    output = root.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigFieldError("output", "expected a string path")

    config = SimulationConfig(
        initial=initial, dt=dt, t_max=t_max, sample_stride=stride, n_traj=n_traj,
        master_seed=master_seed, workers=workers, observables=observables,
        output=output,
    )
    return config, model


def load_config(path) -> tuple[SimulationConfig, GeneralizedLindbladModel]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_model_file(text: str) -> GeneralizedLindbladModel:
    """Parse a standalone model document (no run parameters)."""
    root = _load_yaml(text)
    return parse_model_mapping(_require_mapping(root, "model"), path="model")


def serialize_model(model: GeneralizedLindbladModel, metadata: dict | None = None) -> str:
    """Model file text that parses back to an entrywise-identical model."""
    doc = {
        "dimensions": {
            "components": model.num_components,
            "hilbert_dim": model.hilbert_dim,
        },
        "hamiltonians": [_matrix_to_triplets(h) for h in model.hamiltonians],
        "jump_terms": [
            {
                "target": t.target,
                "source": t.source,
                "label": t.label,
                "entries": _matrix_to_triplets(t.operator),
            }
            for t in model.jump_terms
        ],
    }
    if metadata:
        doc["metadata"] = metadata
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _format(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    return f"{value:.17g}"


def emit_csv(result, path) -> None:
    """Write a time-series CSV: header ``t,<obs>,<obs>_stderr,...``, one row
    per sample, 17 significant digits, trailing newline, UTF-8.

    Accepts an `EnsembleResult` or a plain `TimeSeries` (whose stderr
    columns are written as zeros).
    """
    times = np.asarray(result.times, dtype=np.float64)
    names = tuple(result.names)
    values = np.asarray(getattr(result, "mean", getattr(result, "values", None)))
    stderr = getattr(result, "stderr", None)
    if stderr is None:
        stderr = np.zeros_like(values)
    header = ["t"]
    for name in names:
        header.extend([name, f"{name}_stderr"])
    lines = [",".join(header)]
    for i, t in enumerate(times):
        row = [_format(t)]
        for k in range(len(names)):
            row.append(_format(values[i, k]))
            row.append(_format(stderr[i, k]))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[np.ndarray, tuple[str, ...], np.ndarray, np.ndarray]:
    """Read a CSV written by `emit_csv`: (times, names, values, stderr)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    if header[0] != "t":
        raise ValueError(f"{path}: first column must be 't', got {header[0]!r}")
    names: list[str] = []
    stderr_col: dict[str, int] = {}
    value_col: dict[str, int] = {}
    for idx, col in enumerate(header[1:], start=1):
        if col.endswith("_stderr"):
            stderr_col[col[: -len("_stderr")]] = idx
        else:
            names.append(col)
            value_col[col] = idx
    rows = [line.split(",") for line in lines[1:]]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
    times = np.array([float(r[0]) for r in rows])
    values = np.array([[float(r[value_col[n]]) for n in names] for r in rows]).reshape(
        len(rows), len(names)
    )
    stderr = np.zeros_like(values)
    for k, name in enumerate(names):
        if name in stderr_col:
            stderr[:, k] = [float(r[stderr_col[name]]) for r in rows]
    return times, tuple(names), values, stderr
