"""Scenario configuration documents: TOML schema, validation, serialization.

A config holds an optional ``[output]`` table and one or more ``[[scenario]]``
tables.  Unknown keys are rejected with their full dotted path so typos are
caught before a campaign burns CPU time.  See the README for a complete
example.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .harness import (
    ESTIMATOR_IDS,
    FixedArray,
    RandomCircle,
    ReplicatedSites,
    Scenario,
)
from .model import NoiseModel, SourceLocation
from .presets import DEFAULT_SEED


class ConfigError(ValueError):
    """Invalid configuration document; message carries the offending path."""


@dataclass(frozen=True)
class OutputOptions:
    csv: str | None = None
    per_run: str | None = None


_OUTPUT_KEYS = {"csv", "per_run"}
_SCENARIO_KEYS = {
    "name",
    "array",
    "source",
    "sigma_a",
    "sigma_e",
    "n",
    "estimators",
    "runs",
    "seed",
}
_ARRAY_KEYS = {
    "fixed": {"kind", "positions"},
    "replicated": {"kind", "sites"},
    "random-circle": {"kind", "radius", "center"},
}


def _reject_unknown(table: dict, allowed: set[str], path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} at {path}")


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} at {path}")
    return table[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number")
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer")
    return value


def _as_points(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a nonempty list of coordinate lists")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) not in (2, 3):
            raise ConfigError(f"{path}[{i}] must be a 2- or 3-element list")
        rows.append([_as_number(v, f"{path}[{i}]") for v in row])
    arr = np.asarray(rows, dtype=float)
    if len({r.shape[0] for r in arr}) > 1:
        raise ConfigError(f"{path} mixes 2-D and 3-D points")
    return arr


def _parse_array(table, path: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{path} must be a table")
    kind = _require(table, "kind", path)
    if kind not in _ARRAY_KEYS:
        raise ConfigError(
            f"{path}.kind must be one of {sorted(_ARRAY_KEYS)}, got {kind!r}"
        )
    _reject_unknown(table, _ARRAY_KEYS[kind], path)
    if kind == "fixed":
        return FixedArray(positions=_as_points(_require(table, "positions", path), f"{path}.positions"))
    if kind == "replicated":
        return ReplicatedSites(sites=_as_points(_require(table, "sites", path), f"{path}.sites"))
    radius = _as_number(_require(table, "radius", path), f"{path}.radius")
    center = table.get("center", [0.0, 0.0])
    if not isinstance(center, list) or len(center) != 2:
        raise ConfigError(f"{path}.center must be a 2-element list")
    return RandomCircle(
        radius=radius,
        center=(
            _as_number(center[0], f"{path}.center[0]"),
            _as_number(center[1], f"{path}.center[1]"),
        ),
    )


def _parse_scenario(table: dict, path: str) -> Scenario:
    if not isinstance(table, dict):
        raise ConfigError(f"{path} must be a table")
    _reject_unknown(table, _SCENARIO_KEYS, path)
    name = _require(table, "name", path)
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{path}.name must be a nonempty string")
    source_raw = _require(table, "source", path)
    if not isinstance(source_raw, list) or len(source_raw) not in (2, 3):
        raise ConfigError(f"{path}.source must be a 2- or 3-element list")
    source = SourceLocation(
        coords=np.array([_as_number(v, f"{path}.source") for v in source_raw])
    )
    sigma_a = _as_number(_require(table, "sigma_a", path), f"{path}.sigma_a")
    sigma_e = None
    if source.dim == 3:
        sigma_e = _as_number(_require(table, "sigma_e", path), f"{path}.sigma_e")
    elif "sigma_e" in table:
        raise ConfigError(f"{path}.sigma_e is only valid for 3-D scenarios")
    n_raw = _require(table, "n", path)
    if not isinstance(n_raw, list) or not n_raw:
        raise ConfigError(f"{path}.n must be a nonempty list of integers")
    n_list = tuple(_as_int(v, f"{path}.n") for v in n_raw)
    est_raw = _require(table, "estimators", path)
    if not isinstance(est_raw, list) or not est_raw:
        raise ConfigError(f"{path}.estimators must be a nonempty list")
    for est in est_raw:
        if est not in ESTIMATOR_IDS:
            raise ConfigError(
                f"{path}.estimators contains unknown id {est!r}; "
                f"valid ids: {', '.join(ESTIMATOR_IDS)}"
            )
    runs = _as_int(_require(table, "runs", path), f"{path}.runs")
    seed = _as_int(table.get("seed", DEFAULT_SEED), f"{path}.seed")
    try:
        return Scenario(
            name=name,
            array_spec=_parse_array(_require(table, "array", path), f"{path}.array"),
            source=source,
            noise=NoiseModel(sigma_a=sigma_a, sigma_e=sigma_e),
            n_list=n_list,
            estimators=tuple(est_raw),
            runs=runs,
            base_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid scenario at {path}: {exc}") from exc


def parse_config(text: str) -> tuple[list[Scenario], OutputOptions]:
    """Parse and validate a config document; raises ConfigError on any defect."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    _reject_unknown(doc, {"output", "scenario"}, "top level")
    output = OutputOptions()
    if "output" in doc:
        table = doc["output"]
        if not isinstance(table, dict):
            raise ConfigError("output must be a table")
        _reject_unknown(table, _OUTPUT_KEYS, "output")
        output = OutputOptions(csv=table.get("csv"), per_run=table.get("per_run"))
    raw_scenarios = doc.get("scenario", [])
    if not isinstance(raw_scenarios, list) or not raw_scenarios:
        raise ConfigError("config must define at least one [[scenario]]")
    scenarios = [
        _parse_scenario(tab, f"scenario[{i}]") for i, tab in enumerate(raw_scenarios)
    ]
    return scenarios, output


def _fmt_value(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _array_table(spec) -> str:
    if isinstance(spec, FixedArray):
        return (
            '{ kind = "fixed", positions = '
            + _fmt_value([list(p) for p in spec.positions])
            + " }"
        )
    if isinstance(spec, ReplicatedSites):
        return (
            '{ kind = "replicated", sites = '
            + _fmt_value([list(p) for p in spec.sites])
            + " }"
        )
    return (
        '{ kind = "random-circle", radius = '
        + _fmt_value(spec.radius)
        + ", center = "
        + _fmt_value(list(spec.center))
        + " }"
    )


def serialize_config(scenarios: list[Scenario], output: OutputOptions | None = None) -> str:
    """Emit a config document that parses back to value-identical scenarios."""
    lines: list[str] = []
    if output is not None and (output.csv or output.per_run):
        lines.append("[output]")
        if output.csv:
            lines.append(f"csv = {_fmt_value(output.csv)}")
        if output.per_run:
            lines.append(f"per_run = {_fmt_value(output.per_run)}")
        lines.append("")
    for sc in scenarios:
        lines.append("[[scenario]]")
        lines.append(f"name = {_fmt_value(sc.name)}")
        lines.append(f"array = {_array_table(sc.array_spec)}")
        lines.append(f"source = {_fmt_value(list(sc.source.coords))}")
        lines.append(f"sigma_a = {_fmt_value(sc.noise.sigma_a)}")
        if sc.noise.sigma_e is not None:
            lines.append(f"sigma_e = {_fmt_value(sc.noise.sigma_e)}")
        lines.append(f"n = {_fmt_value(list(sc.n_list))}")
        lines.append(f"estimators = {_fmt_value(list(sc.estimators))}")
        lines.append(f"runs = {_fmt_value(sc.runs)}")
        lines.append(f"seed = {_fmt_value(sc.base_seed)}")
        lines.append("")
    return "\n".join(lines)
