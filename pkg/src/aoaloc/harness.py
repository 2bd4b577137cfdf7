"""Scenario definitions, Monte Carlo campaign execution, and the bias/RMSE
metrics used in every experiment table.

Campaigns are deterministic: the seed of run ``j`` at sample size ``n`` is a
pure function of (base_seed, n, j) (see :mod:`aoaloc.seeding`), results are
reduced in run-index order, and per-run work never shares RNG state — so the
summary is bit-identical regardless of the parallelism level.  Runs that fail
with an :class:`~aoaloc.errors.EstimationError` are counted and excluded from
the metrics; cells with more than 1% failures are flagged invalid.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import crlb as crlb_mod
from .errors import EstimationError
from .estim2d import (
    bels,
    build_regression,
    estimate_var_sin_2d,
    pls,
    two_step_2d,
)
from .estim3d import (
    bels_3d,
    build_z_regression,
    estimate_var_sin_e,
    pls_3d,
    project_planar,
    two_step_3d,
    _planar_chain,
)
from .model import (
    MeasurementSet,
    NoiseModel,
    SensorArray,
    SourceLocation,
    synthesize_measurements,
    var_sin,
)
from .seeding import CHANNEL_ARRAY, derive_run_seed, substream

FAILURE_FLAG_FRACTION = 0.01


@dataclass(frozen=True)
class FixedArray:
    """A literal sensor list; each n in the sweep must equal its length."""

    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "positions", np.asarray(self.positions, dtype=float)
        )


@dataclass(frozen=True)
class ReplicatedSites:
    """m fixed sites observed repeatedly; n = m * T expands to a tiled array.

    Round t of observations visits every site once, so the expanded array is
    the site list tiled T times — identical inputs to a FixedArray holding
    those tiled coordinates.
    """

    sites: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sites", np.asarray(self.sites, dtype=float))


@dataclass(frozen=True)
class RandomCircle:
    """n sensors drawn uniformly on a circle, fresh for every run (2-D only).

    Angles are uniform on the half-open interval [0, 2 pi).
    """

    radius: float
    center: tuple[float, float] = (0.0, 0.0)


ArraySpec = FixedArray | ReplicatedSites | RandomCircle

# Estimator identifiers accepted by Scenario.estimators.  The "vhat-*" entries
# are scalar pseudo-estimators used for noise-moment reproduction tables: their
# "estimate" is the estimated sine variance and the truth it is scored against
# is the closed-form value.
ESTIMATOR_IDS = (
    "pls",
    "bels",
    "bels+gn",
    "bels-vhat",
    "bels-vhat+gn",
    "vhat-a",
    "vhat-e",
)
_SCALAR_ESTIMATORS = ("vhat-a", "vhat-e")


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo experiment: geometry family, truth, noise, sweep."""

    name: str
    array_spec: ArraySpec
    source: SourceLocation
    noise: NoiseModel
    n_list: tuple[int, ...]
    estimators: tuple[str, ...]
    runs: int
    base_seed: int

    def __post_init__(self):
        if not self.n_list:
            raise ValueError("n_list must be nonempty")
        if list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError("n_list must be strictly ascending")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.estimators:
            raise ValueError("estimators must be nonempty")
        for est in self.estimators:
            if est not in ESTIMATOR_IDS:
                raise ValueError(f"unknown estimator id {est!r}")
        if self.noise.sigma_a is None:
            raise ValueError("scenario noise must be fully known (it drives synthesis)")
        if self.dim == 3 and self.noise.sigma_e is None:
            raise ValueError("3-D scenario needs sigma_e")
        if self.dim == 2 and "vhat-e" in self.estimators:
            raise ValueError("vhat-e requires a 3-D scenario")
        spec = self.array_spec
        if isinstance(spec, FixedArray):
            if spec.positions.shape[1] != self.dim:
                raise ValueError("fixed array dimension differs from the source's")
            for n in self.n_list:
                if n != spec.positions.shape[0]:
                    raise ValueError(
                        f"fixed array has {spec.positions.shape[0]} sensors, n_list asks {n}"
                    )
        elif isinstance(spec, ReplicatedSites):
            if spec.sites.shape[1] != self.dim:
                raise ValueError("replicated sites dimension differs from the source's")
            m = spec.sites.shape[0]
            for n in self.n_list:
                if n % m != 0:
                    raise ValueError(f"n={n} is not a multiple of the {m} sites")
        elif isinstance(spec, RandomCircle) and self.dim != 2:
            raise ValueError("RandomCircle arrays are 2-D only")

    @property
    def dim(self) -> int:
        return self.source.dim


@dataclass(frozen=True)
class McCell:
    """Aggregated metrics for one (scenario, n, estimator) cell."""

    scenario: str
    n: int
    estimator: str
    bias: float
    rmse: float
    rcrlb: float | None
    runs_completed: int
    runs_failed: int
    base_seed: int
    invalid: bool


@dataclass(frozen=True)
class RunRecord:
    """One estimator output in one run; estimate is None for failed runs."""

    scenario: str
    n: int
    estimator: str
    run_index: int
    seed: int
    estimate: tuple[float, ...] | None


@dataclass(frozen=True)
class CampaignResult:
    cells: list[McCell]
    runs: list[RunRecord] | None = None


def metrics(estimates, truth) -> tuple[float, float]:
    """Bias and RMSE of a batch of estimates against the truth.

    Bias is the sum of absolute componentwise deviations of the mean
    estimate; RMSE is sqrt(mean squared Euclidean error).
    """
    arr = np.asarray(estimates, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] == 0:
        raise ValueError("metrics need at least one estimate")
    t = np.asarray(truth, dtype=float).reshape(-1)
    if arr.shape[1] != t.shape[0]:
        raise ValueError("estimates and truth dimensions differ")
    bias = float(np.abs(arr.mean(axis=0) - t).sum())
    rmse = float(np.sqrt(np.mean(np.sum((arr - t) ** 2, axis=1))))
    return bias, rmse


def materialize_array(spec: ArraySpec, n: int, dim: int, run_seed: int) -> SensorArray:
    """Concrete sensor array for one run at sample size n."""
    if isinstance(spec, FixedArray):
        if spec.positions.shape[0] != n:
            raise ValueError(
                f"fixed array has {spec.positions.shape[0]} sensors, scenario asks {n}"
            )
        return SensorArray(positions=spec.positions)
    if isinstance(spec, ReplicatedSites):
        m = spec.sites.shape[0]
        if n % m != 0:
            raise ValueError(f"n={n} is not a multiple of the {m} replicated sites")
        return SensorArray(positions=np.tile(spec.sites, (n // m, 1)))
    if isinstance(spec, RandomCircle):
        if dim != 2:
            raise ValueError("RandomCircle arrays are 2-D only")
        beta = substream(run_seed, CHANNEL_ARRAY).uniform(0.0, 2.0 * np.pi, n)
        center = np.asarray(spec.center, dtype=float)
        pos = center + spec.radius * np.column_stack([np.cos(beta), np.sin(beta)])
        return SensorArray(positions=pos)
    raise TypeError(f"unknown array spec {type(spec).__name__}")


def run_estimator(
    est_id: str, array: SensorArray, meas: MeasurementSet, noise: NoiseModel
) -> np.ndarray:
    """Run one estimator; returns the estimate vector (scalar ones as 1-vectors)."""
    dim = array.dim
    if est_id == "pls":
        if dim == 2:
            return pls(build_regression(array, meas)).p_hat
        return pls_3d(array, meas).p_hat
    if est_id == "bels":
        if dim == 2:
            reg = build_regression(array, meas)
            return bels(reg, var_sin(noise.sigma_a)).p_hat
        return bels_3d(array, meas, noise).p_hat
    if est_id == "bels+gn":
        if dim == 2:
            return two_step_2d(array, meas, noise).p_hat
        return two_step_3d(array, meas, noise).p_hat
    if est_id == "bels-vhat":
        unknown = NoiseModel(sigma_a=None, sigma_e=None)
        if dim == 2:
            reg = build_regression(array, meas)
            return bels(reg, estimate_var_sin_2d(reg, array)).p_hat
        return bels_3d(array, meas, unknown).p_hat
    if est_id == "bels-vhat+gn":
        unknown = NoiseModel(sigma_a=None, sigma_e=None)
        if dim == 2:
            return two_step_2d(array, meas, unknown).p_hat
        return two_step_3d(array, meas, unknown).p_hat
    if est_id == "vhat-a":
        reg = build_regression(array, meas)
        planar = project_planar(array) if dim == 3 else array
        return np.array([estimate_var_sin_2d(reg, planar)])
    if est_id == "vhat-e":
        unknown = NoiseModel(sigma_a=None, sigma_e=None)
        _, planar, _, _ = _planar_chain(array, meas, unknown)
        zreg = build_z_regression(array, meas, planar.p_hat)
        return np.array([estimate_var_sin_e(zreg)])
    raise ValueError(f"unknown estimator id {est_id!r}")


def truth_vector(scenario: Scenario, est_id: str) -> np.ndarray:
    """What an estimator's output is scored against."""
    if est_id == "vhat-a":
        return np.array([var_sin(scenario.noise.sigma_a)])
    if est_id == "vhat-e":
        return np.array([var_sin(scenario.noise.sigma_e)])
    return scenario.source.coords


def _needs_crlb(est_id: str) -> bool:
    return est_id not in _SCALAR_ESTIMATORS


def _crlb_trace_or_none(scenario: Scenario, array: SensorArray) -> float | None:
    noise = scenario.noise
    if noise.sigma_a == 0.0 or (scenario.dim == 3 and noise.sigma_e == 0.0):
        return None
    try:
        if scenario.dim == 2:
            info = crlb_mod.fisher_2d(array, scenario.source.coords, noise.sigma_a)
        else:
            info = crlb_mod.fisher_3d(
                array, scenario.source.coords, noise.sigma_a, noise.sigma_e
            )
        return crlb_mod.crlb_trace(info)
    except EstimationError:
        return None


def _one_run(scenario: Scenario, n: int, j: int, want_crlb: bool):
    """Worker: all requested estimators on one synthesized measurement set."""
    seed = derive_run_seed(scenario.base_seed, n, j)
    outputs: dict[str, tuple[float, ...] | None] = {}
    trace = None
    try:
        array = materialize_array(scenario.array_spec, n, scenario.dim, seed)
        meas = synthesize_measurements(array, scenario.source, scenario.noise, seed)
    except EstimationError:
        return j, seed, {est: None for est in scenario.estimators}, None
    for est in scenario.estimators:
        try:
            outputs[est] = tuple(run_estimator(est, array, meas, scenario.noise))
        except EstimationError:
            outputs[est] = None
    if want_crlb:
        trace = _crlb_trace_or_none(scenario, array)
    return j, seed, outputs, trace


def _run_args(scenario: Scenario, n: int, want_crlb_per_run: bool):
    for j in range(scenario.runs):
        yield scenario, n, j, want_crlb_per_run


def run_campaign(
    scenario: Scenario, parallelism: int = 1, collect_runs: bool = False
) -> CampaignResult:
    """Execute the full sweep; deterministic for a given (scenario, base_seed).

    Failed runs are excluded from the metrics and counted in the cell; the
    RCRLB column averages trace(F^{-1}) over runs (constant for fixed arrays,
    per-draw for random ones) and uses the scenario's true sigmas — the
    benchmark never moves with the estimators.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    cells: list[McCell] = []
    records: list[RunRecord] | None = [] if collect_runs else None
    position_ests = [e for e in scenario.estimators if _needs_crlb(e)]
    for n in scenario.n_list:
        random_array = isinstance(scenario.array_spec, RandomCircle)
        want_per_run = bool(position_ests) and random_array
        if parallelism == 1:
            results = [
                _one_run(scenario, n, j, want_per_run) for j in range(scenario.runs)
            ]
        else:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                chunk = max(1, scenario.runs // (4 * parallelism))
                results = list(
                    pool.map(
                        _one_run_star,
                        _run_args(scenario, n, want_per_run),
                        chunksize=chunk,
                    )
                )
        results.sort(key=lambda item: item[0])
        traces = [t for _, _, _, t in results if t is not None]
        if position_ests and not random_array:
            array = materialize_array(
                scenario.array_spec, n, scenario.dim, derive_run_seed(scenario.base_seed, n, 0)
            )
            t = _crlb_trace_or_none(scenario, array)
            traces = [t] if t is not None else []
        cell_rcrlb = math.sqrt(float(np.mean(traces))) if traces else None
        for est in scenario.estimators:
            good = [out[est] for _, _, out, _ in results if out[est] is not None]
            failed = scenario.runs - len(good)
            if good:
                bias, rmse = metrics(np.asarray(good), truth_vector(scenario, est))
            else:
                bias, rmse = math.nan, math.nan
            cells.append(
                McCell(
                    scenario=scenario.name,
                    n=n,
                    estimator=est,
                    bias=bias,
                    rmse=rmse,
                    rcrlb=cell_rcrlb if _needs_crlb(est) else None,
                    runs_completed=len(good),
                    runs_failed=failed,
                    base_seed=scenario.base_seed,
                    invalid=failed > FAILURE_FLAG_FRACTION * scenario.runs,
                )
            )
        if collect_runs:
            for j, seed, out, _ in results:
                for est in scenario.estimators:
                    records.append(
                        RunRecord(
                            scenario=scenario.name,
                            n=n,
                            estimator=est,
                            run_index=j,
                            seed=seed,
                            estimate=out[est],
                        )
                    )
    return CampaignResult(cells=cells, runs=records)


def _one_run_star(args):
    return _one_run(*args)


def slope_check(cells: list[McCell], estimator: str) -> float:
    """Least-squares slope of log RMSE against log n for one estimator.

    A slope near -0.5 is the operational signature of sqrt(n)-consistency;
    a slope near 0 indicates a bias plateau.
    """
    points = sorted(
        (c.n, c.rmse)
        for c in cells
        if c.estimator == estimator and math.isfinite(c.rmse) and c.rmse > 0
    )
    if len(points) < 3:
        raise ValueError("slope check needs at least 3 sample sizes")
    x = np.log(np.array([p[0] for p in points], dtype=float))
    y = np.log(np.array([p[1] for p in points], dtype=float))
    xc = x - x.mean()
    return float((xc @ (y - y.mean())) / (xc @ xc))
