"""2-D estimators: plain and bias-eliminated least squares, data-driven
noise-moment estimation, Gauss-Newton refinement, and the full two-step
pipeline.

The linearized regression stacks, per sensor, h_i = [sin a_i, -cos a_i]^T and
Y_i = h_i^T p_i, giving Y = X p0 + V.  Plain LS on this model is biased
because the regressors contain the noise; subtracting the sine-variance of
the noise from the Gram matrix (and its multiple of the mean sensor vector
from the moment vector) removes the bias:

    p_be = (X^T X / n - v I)^{-1} (X^T Y / n - v p_bar),   v = Var(sin eps).

When v is unknown it is recovered from the data as the reciprocal of the
largest generalized eigenvalue of ([X Y]^T [X Y] / n, second-moment matrix of
the sensors) — see :func:`estimate_var_sin_2d`.  One Gauss-Newton step from
the bias-eliminated point then attains the asymptotic accuracy of maximum
likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError
from .model import (
    COINCIDENCE_TOL,
    MeasurementSet,
    NoiseModel,
    SensorArray,
    bearings_2d,
    mean_cos,
    var_sin,
    wrap_angle,
)
from .smallmat import cond_sym, max_gen_eigenvalue, solve_spd

# Largest admissible sine-variance estimate; Var(sin X) < 1/2 for any Gaussian X.
VSIN_MAX = 0.5 - 1e-9

_GRID_RESOLUTION_MAX = 400


@dataclass(frozen=True)
class Regression2d:
    """Linearized regression built once per measurement set.

    x: (n, 2) rows [sin a_i, -cos a_i]; y: (n,) with y_i = row_i . p_i;
    p_bar: mean sensor coordinate.
    """

    x: np.ndarray
    y: np.ndarray
    p_bar: np.ndarray


@dataclass
class Estimate:
    """Point estimate with provenance and solve diagnostics.

    ``method`` is one of PLS / BELS / BELS+GN / GN / OracleUB / ML-grid.
    ``v_sin_a`` / ``v_sin_e`` record the sine-variance values used for the
    bias correction (None when not applicable).  ``diagnostics`` carries
    condition numbers, Gauss-Newton step norms, and clamping flags.
    """

    p_hat: np.ndarray
    method: str
    v_sin_a: float | None = None
    v_sin_e: float | None = None
    diagnostics: dict = field(default_factory=dict)


def build_regression(array: SensorArray, meas: MeasurementSet) -> Regression2d:
    """Assemble X, Y, and the mean sensor vector in one O(n) pass.

    Works on 2-D arrays and on the planar projection of 3-D arrays.
    """
    if meas.n != array.n:
        raise ValueError("measurement count does not match sensor count")
    pos = array.positions[:, :2]
    sin_a = np.sin(meas.azimuths)
    cos_a = np.cos(meas.azimuths)
    x = np.column_stack([sin_a, -cos_a])
    y = sin_a * pos[:, 0] - cos_a * pos[:, 1]
    return Regression2d(x=x, y=y, p_bar=pos.mean(axis=0))


def pls(reg: Regression2d) -> Estimate:
    """Plain least squares (X^T X)^{-1} X^T Y; biased, used as the baseline."""
    gram = reg.x.T @ reg.x
    p_hat = solve_spd(gram, reg.x.T @ reg.y)
    return Estimate(
        p_hat=p_hat, method="PLS", diagnostics={"cond_gram": cond_sym(gram)}
    )


def estimate_var_sin_2d(reg: Regression2d, array: SensorArray) -> float:
    """Estimate Var(sin eps) from data via the generalized eigenvalue pencil.

    Builds Q = [X Y]^T [X Y] / n and the sensor second-moment matrix
    S = [[I2, p_bar], [p_bar^T, mean ||p_i||^2]] and returns
    1 / lambda_max(Q^{-1} S), clamped to [0, VSIN_MAX].  Zero-noise data make
    Q singular and the estimate exactly 0.
    """
    if array.n < 4:
        raise ValueError("sine-variance estimation needs at least 4 measurements")
    pos = array.positions[:, :2]
    n = array.n
    m = np.column_stack([reg.x, reg.y])
    q = (m.T @ m) / n
    s = np.empty((3, 3))
    s[:2, :2] = np.eye(2)
    s[:2, 2] = reg.p_bar
    s[2, :2] = reg.p_bar
    s[2, 2] = float(np.einsum("ij,ij->", pos, pos)) / n
    lam = max_gen_eigenvalue(q, s)
    v = 0.0 if lam == np.inf else 1.0 / lam
    return min(max(v, 0.0), VSIN_MAX)


def bels(reg: Regression2d, v_sin_a: float) -> Estimate:
    """Bias-eliminated least squares with a given sine-variance of the noise.

    With v = 0 this is exactly :func:`pls` written over the n-normalized
    matrices.  Raises IllConditionedError when the bias-subtracted Gram
    matrix is no longer positive definite (v too large for the data).
    """
    if not (0.0 <= v_sin_a < 0.5):
        raise ValueError(f"v_sin_a must lie in [0, 0.5), got {v_sin_a}")
    n = reg.y.shape[0]
    gram = reg.x.T @ reg.x / n - v_sin_a * np.eye(2)
    rhs = reg.x.T @ reg.y / n - v_sin_a * reg.p_bar
    p_hat = solve_spd(gram, rhs)
    return Estimate(
        p_hat=p_hat,
        method="BELS",
        v_sin_a=v_sin_a,
        diagnostics={"cond_gram": cond_sym(gram)},
    )


def oracle_unbiased_ls(
    array: SensorArray, source_truth, meas: MeasurementSet, sigma_a: float
) -> Estimate:
    """Oracle LS with noise-free regressors; simulation/test use only.

    Builds X0 rows mean_cos(sigma) * [sin a_i0, -cos a_i0] from the true
    bearings (known only when the ground truth is), and solves against the
    noisy Y.  Unbiased for the true source; never part of a production path.
    """
    truth = np.asarray(source_truth, dtype=float)
    a0 = bearings_2d(array.positions, truth)
    scale = mean_cos(sigma_a)
    x0 = scale * np.column_stack([np.sin(a0), -np.cos(a0)])
    reg = build_regression(array, meas)
    p_hat = solve_spd(x0.T @ x0, x0.T @ reg.y)
    return Estimate(p_hat=p_hat, method="OracleUB", v_sin_a=var_sin(sigma_a))


def ml_objective_2d(array: SensorArray, meas: MeasurementSet, p) -> float:
    """Mean squared wrapped bearing residual at candidate point p."""
    f = bearings_2d(array.positions, np.asarray(p, dtype=float))
    resid = wrap_angle(meas.azimuths - f)
    return float(np.mean(resid * resid))


def _gn_step(array: SensorArray, meas: MeasurementSet, p: np.ndarray):
    """One Gauss-Newton update for the 2-D bearing objective."""
    d = array.positions[:, :2] - p
    d2 = np.einsum("ij,ij->i", d, d)
    if np.min(d2) < COINCIDENCE_TOL**2:
        raise DegenerateGeometryError("Gauss-Newton iterate hit a sensor")
    f = np.arctan2(d[:, 1], d[:, 0])
    resid = wrap_angle(meas.azimuths - f)
    jac = np.column_stack([d[:, 1] / d2, -d[:, 0] / d2])
    jtj = jac.T @ jac
    step = solve_spd(jtj, jac.T @ resid)
    return step, resid, jtj


def gn_refine_2d(
    array: SensorArray, meas: MeasurementSet, p_init, max_iters: int = 1
) -> Estimate:
    """Gauss-Newton refinement of the bearing ML objective.

    One iteration (the default) is what the two-step pipeline prescribes;
    more are exposed for convergence studies.  Azimuth residuals are wrapped
    to (-pi, pi] so initializers on the far side of the cut do not see 2 pi
    jumps.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    p = np.array(p_init, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ValueError("p_init must be a finite 2-vector")
    step_norm = 0.0
    cond_jtj = np.inf
    for _ in range(max_iters):
        step, resid, jtj = _gn_step(array, meas, p)
        p = p + step
        step_norm = float(np.linalg.norm(step))
        cond_jtj = cond_sym(jtj)
    return Estimate(
        p_hat=p,
        method="GN",
        diagnostics={
            "gn_step_norm": step_norm,
            "gn_resid_rms": float(np.sqrt(np.mean(resid * resid))),
            "cond_jtj": cond_jtj,
        },
    )


def two_step_2d(
    array: SensorArray,
    meas: MeasurementSet,
    noise: NoiseModel,
    gn_iters: int = 1,
) -> Estimate:
    """Full 2-D pipeline: (estimated) sine variance, BELS, one GN step.

    With a known sigma_a the sine variance is the closed form; otherwise it
    is estimated from the data.  Exactly ``gn_iters`` Gauss-Newton iterations
    (default one) follow the bias-eliminated estimate.
    """
    if array.n < 4:
        raise ValueError("two-step estimation needs at least 4 measurements")
    reg = build_regression(array, meas)
    if noise.sigma_a is not None:
        v = var_sin(noise.sigma_a)
        estimated = False
    else:
        v = estimate_var_sin_2d(reg, array)
        estimated = True
    be = bels(reg, v)
    gn = gn_refine_2d(array, meas, be.p_hat, max_iters=gn_iters)
    diagnostics = dict(gn.diagnostics)
    diagnostics["cond_gram"] = be.diagnostics["cond_gram"]
    diagnostics["v_sin_estimated"] = estimated
    diagnostics["v_sin_clamped"] = estimated and v >= VSIN_MAX
    return Estimate(
        p_hat=gn.p_hat, method="BELS+GN", v_sin_a=v, diagnostics=diagnostics
    )


def ml_grid_oracle_2d(
    array: SensorArray,
    meas: MeasurementSet,
    box,
    resolution: int,
) -> Estimate:
    """Grid search over ``box`` plus Gauss-Newton polish; test oracle only.

    A desk-scale stand-in for the global ML solution: evaluates the objective
    on a resolution x resolution grid over box = ((xmin, xmax), (ymin, ymax)),
    then iterates Gauss-Newton from the best cell until the step norm falls
    below 1e-10 (at most 50 iterations).
    """
    (x_lo, x_hi), (y_lo, y_hi) = box
    if not (2 <= resolution <= _GRID_RESOLUTION_MAX):
        raise ValueError(f"resolution must lie in [2, {_GRID_RESOLUTION_MAX}]")
    xs = np.linspace(x_lo, x_hi, resolution)
    ys = np.linspace(y_lo, y_hi, resolution)
    pos = array.positions[:, :2]
    az = meas.azimuths
    best_val = np.inf
    best_point = None
    # Chunk over x to keep the (n, resolution) intermediates small.
    for x in xs:
        dx = pos[:, 0, None] - x
        dy = pos[:, 1, None] - ys[None, :]
        d2 = dx * dx + dy * dy
        f = np.arctan2(dy, dx)
        resid = wrap_angle(az[:, None] - f)
        obj = np.mean(resid * resid, axis=0)
        obj = np.where(d2.min(axis=0) < COINCIDENCE_TOL**2, np.inf, obj)
        j = int(np.argmin(obj))
        if obj[j] < best_val:
            best_val = float(obj[j])
            best_point = np.array([x, ys[j]])
    p = best_point
    step_norm = np.inf
    for _ in range(50):
        step, _, _ = _gn_step(array, meas, p)
        p = p + step
        step_norm = float(np.linalg.norm(step))
        if step_norm < 1e-10:
            break
    return Estimate(
        p_hat=p,
        method="ML-grid",
        diagnostics={"grid_objective": best_val, "gn_step_norm": step_norm},
    )
