"""3-D estimators: planar bias-eliminated least squares reused from 2-D,
range plug-in, z-coordinate BELS, elevation noise-moment estimation, and the
jointly weighted Gauss-Newton refinement.

The 3-D chain is planar-first: azimuths alone fix (x, y) through the 2-D
machinery; the planar estimate supplies plug-in ranges r_hat_i, which turn
the elevation equations into a scalar linear regression

    Gamma_i = Phi_i z0 + noise,  Phi_i = -cos e_i,
    Gamma_hat_i = sin(e_i) r_hat_i - cos(e_i) z_i,

whose bias is removed exactly like in 2-D.  The final Gauss-Newton step works
on the stacked azimuth/elevation residuals with rows weighted by 1/sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, IllConditionedError
from .model import (
    COINCIDENCE_TOL,
    MeasurementSet,
    NoiseModel,
    SensorArray,
    sigma_from_var_sin,
    var_sin,
    wrap_angle,
)
from .estim2d import (
    VSIN_MAX,
    Estimate,
    Regression2d,
    bels,
    build_regression,
    estimate_var_sin_2d,
    pls,
)
from .smallmat import cond_sym, max_gen_eigenvalue, solve_spd

# Floor for 1/sigma Gauss-Newton weights; only the sigma_a/sigma_e ratio
# matters, so flooring both at the same tiny value keeps the zero-noise limit
# well defined (equal weights).
_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class ZRegression:
    """Scalar regression for the z coordinate, built once per measurement set.

    phi: (n,) with -cos(e_i); gamma_hat: (n,) with sin(e_i) r_hat_i -
    cos(e_i) z_i; r_hat: plug-in planar ranges; z_bar: mean sensor z;
    mean_sq_zr: (1/n) sum (z_i^2 + r_hat_i^2).
    """

    phi: np.ndarray
    gamma_hat: np.ndarray
    r_hat: np.ndarray
    z_bar: float
    mean_sq_zr: float


def project_planar(array: SensorArray) -> SensorArray:
    """The 2-D sensor array obtained by dropping z."""
    if array.dim != 3:
        raise ValueError("projection expects a 3-D array")
    return SensorArray(positions=array.positions[:, :2])


def planar_bels_3d(array: SensorArray, meas: MeasurementSet, v_sin_a: float) -> Estimate:
    """BELS for the first two coordinates; same code path as the 2-D solver."""
    reg = build_regression(array, meas)
    return bels(reg, v_sin_a)


def plug_in_ranges(array: SensorArray, planar_estimate) -> np.ndarray:
    """Planar ranges from each sensor to a planar estimate of the source."""
    est = np.asarray(planar_estimate, dtype=float)
    if est.shape != (2,) or not np.all(np.isfinite(est)):
        raise ValueError("planar estimate must be a finite 2-vector")
    d = array.positions[:, :2] - est
    return np.hypot(d[:, 0], d[:, 1])


def build_z_regression(
    array: SensorArray, meas: MeasurementSet, planar_estimate
) -> ZRegression:
    """Assemble the z regression from elevations and plug-in ranges, O(n)."""
    if meas.elevations is None:
        raise ValueError("z regression needs elevation measurements")
    r_hat = plug_in_ranges(array, planar_estimate)
    z = array.positions[:, 2]
    cos_e = np.cos(meas.elevations)
    sin_e = np.sin(meas.elevations)
    return ZRegression(
        phi=-cos_e,
        gamma_hat=sin_e * r_hat - cos_e * z,
        r_hat=r_hat,
        z_bar=float(z.mean()),
        mean_sq_zr=float(np.mean(z * z + r_hat * r_hat)),
    )


def bels_z(zreg: ZRegression, v_sin_e: float) -> float:
    """Bias-eliminated z estimate; scalar arithmetic throughout.

    z_hat = (Phi.Phi/n - v)^{-1} (Phi.Gamma_hat/n - v z_bar).  A denominator
    at or below zero means the elevations are too steep for the claimed noise
    level (or v is too large) and raises IllConditionedError.
    """
    if not (0.0 <= v_sin_e < 0.5):
        raise ValueError(f"v_sin_e must lie in [0, 0.5), got {v_sin_e}")
    n = zreg.phi.shape[0]
    denom = float(zreg.phi @ zreg.phi) / n - v_sin_e
    if denom <= 0.0:
        raise IllConditionedError(
            "elevation Gram term is not positive after bias subtraction",
            cond=np.inf,
        )
    num = float(zreg.phi @ zreg.gamma_hat) / n - v_sin_e * zreg.z_bar
    return num / denom


def estimate_var_sin_e(zreg: ZRegression) -> float:
    """Estimate Var(sin eps_e) from the z regression via the 2x2 pencil.

    R = [Phi Gamma_hat]^T [Phi Gamma_hat] / n against
    U = [[1, z_bar], [z_bar, mean(z^2 + r_hat^2)]]; the estimate is
    1 / lambda_max(R^{-1} U) clamped to [0, VSIN_MAX].
    """
    n = zreg.phi.shape[0]
    if n < 3:
        raise ValueError("elevation variance estimation needs at least 3 sensors")
    m = np.column_stack([zreg.phi, zreg.gamma_hat])
    r = (m.T @ m) / n
    u = np.array([[1.0, zreg.z_bar], [zreg.z_bar, zreg.mean_sq_zr]])
    lam = max_gen_eigenvalue(r, u)
    v = 0.0 if lam == np.inf else 1.0 / lam
    return min(max(v, 0.0), VSIN_MAX)


def _gn_step_3d(
    array: SensorArray,
    meas: MeasurementSet,
    p: np.ndarray,
    weight_a: float,
    weight_e: float,
):
    """One weighted Gauss-Newton update on stacked azimuth/elevation residuals."""
    pos = array.positions
    dxy = pos[:, :2] - p[:2]
    dz = pos[:, 2] - p[2]
    r2 = np.einsum("ij,ij->i", dxy, dxy)
    if np.min(r2) < COINCIDENCE_TOL**2:
        raise DegenerateGeometryError(
            "Gauss-Newton iterate hit a sensor's vertical line"
        )
    r = np.sqrt(r2)
    d2 = r2 + dz * dz
    az = np.arctan2(dxy[:, 1], dxy[:, 0])
    el = np.arctan2(dz, r)
    res_a = weight_a * wrap_angle(meas.azimuths - az)
    res_e = weight_e * (meas.elevations - el)  # elevations cannot wrap
    jac_a = weight_a * np.column_stack(
        [dxy[:, 1] / r2, -dxy[:, 0] / r2, np.zeros_like(r)]
    )
    jac_e = weight_e * np.column_stack(
        [dxy[:, 0] * dz / (r * d2), dxy[:, 1] * dz / (r * d2), -r / d2]
    )
    jtj = jac_a.T @ jac_a + jac_e.T @ jac_e
    jtr = jac_a.T @ res_a + jac_e.T @ res_e
    step = solve_spd(jtj, jtr)
    return step, jtj


def gn_refine_3d(
    array: SensorArray,
    meas: MeasurementSet,
    p_init,
    sigma_a: float,
    sigma_e: float,
    max_iters: int = 1,
) -> Estimate:
    """Weighted Gauss-Newton refinement of the 3-D angle objective.

    Residual rows carry factors 1/sigma_a and 1/sigma_e (known values, or
    consistently estimated ones supplied by the caller); only their ratio
    affects the step.  Azimuth residuals are wrapped, elevation residuals are
    not (their range plus bounded noise cannot wrap).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if meas.elevations is None:
        raise ValueError("3-D refinement needs elevation measurements")
    p = np.array(p_init, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError("p_init must be a finite 3-vector")
    weight_a = 1.0 / max(sigma_a, _SIGMA_FLOOR)
    weight_e = 1.0 / max(sigma_e, _SIGMA_FLOOR)
    step_norm = 0.0
    cond_jtj = np.inf
    for _ in range(max_iters):
        step, jtj = _gn_step_3d(array, meas, p, weight_a, weight_e)
        p = p + step
        step_norm = float(np.linalg.norm(step))
        cond_jtj = cond_sym(jtj)
    return Estimate(
        p_hat=p,
        method="GN",
        diagnostics={"gn_step_norm": step_norm, "cond_jtj": cond_jtj},
    )


def _planar_chain(
    array: SensorArray, meas: MeasurementSet, noise: NoiseModel
) -> tuple[Regression2d, Estimate, float, bool]:
    """Planar BELS with known or estimated sine variance (2-D pipeline reuse)."""
    reg = build_regression(array, meas)
    if noise.sigma_a is not None:
        v_a = var_sin(noise.sigma_a)
        estimated = False
    else:
        v_a = estimate_var_sin_2d(reg, project_planar(array))
        estimated = True
    return reg, bels(reg, v_a), v_a, estimated


def two_step_3d(
    array: SensorArray,
    meas: MeasurementSet,
    noise: NoiseModel,
    gn_iters: int = 1,
) -> Estimate:
    """Full 3-D pipeline: planar BELS, z BELS with plug-in ranges, one GN step.

    The plug-in ranges use the planar BELS estimate itself (never a refined
    one), and the elevation variance estimator reuses that same estimate, so
    the chain is computed once in order.  Unknown sigmas are recovered from
    the estimated sine variances to weight the Gauss-Newton rows.
    """
    if array.dim != 3 or meas.elevations is None:
        raise ValueError("two_step_3d expects a 3-D array with elevations")
    if array.n < 4:
        raise ValueError("two-step estimation needs at least 4 measurements")
    _, planar, v_a, est_a = _planar_chain(array, meas, noise)
    zreg = build_z_regression(array, meas, planar.p_hat)
    if noise.sigma_e is not None:
        v_e = var_sin(noise.sigma_e)
        est_e = False
    else:
        v_e = estimate_var_sin_e(zreg)
        est_e = True
    z_hat = bels_z(zreg, v_e)
    p_be = np.array([planar.p_hat[0], planar.p_hat[1], z_hat])
    sigma_a = noise.sigma_a if noise.sigma_a is not None else sigma_from_var_sin(v_a)
    sigma_e = noise.sigma_e if noise.sigma_e is not None else sigma_from_var_sin(v_e)
    gn = gn_refine_3d(array, meas, p_be, sigma_a, sigma_e, max_iters=gn_iters)
    diagnostics = dict(gn.diagnostics)
    diagnostics["cond_gram"] = planar.diagnostics["cond_gram"]
    diagnostics["v_sin_estimated"] = est_a or est_e
    diagnostics["v_sin_clamped"] = (est_a and v_a >= VSIN_MAX) or (
        est_e and v_e >= VSIN_MAX
    )
    return Estimate(
        p_hat=gn.p_hat,
        method="BELS+GN",
        v_sin_a=v_a,
        v_sin_e=v_e,
        diagnostics=diagnostics,
    )


def bels_3d(array: SensorArray, meas: MeasurementSet, noise: NoiseModel) -> Estimate:
    """3-D BELS without the Gauss-Newton step (planar + z chain only)."""
    _, planar, v_a, est_a = _planar_chain(array, meas, noise)
    zreg = build_z_regression(array, meas, planar.p_hat)
    if noise.sigma_e is not None:
        v_e = var_sin(noise.sigma_e)
        est_e = False
    else:
        v_e = estimate_var_sin_e(zreg)
        est_e = True
    z_hat = bels_z(zreg, v_e)
    return Estimate(
        p_hat=np.array([planar.p_hat[0], planar.p_hat[1], z_hat]),
        method="BELS",
        v_sin_a=v_a,
        v_sin_e=v_e,
        diagnostics={
            "cond_gram": planar.diagnostics["cond_gram"],
            "v_sin_estimated": est_a or est_e,
        },
    )


def pls_3d(array: SensorArray, meas: MeasurementSet) -> Estimate:
    """Plain-LS baseline: planar PLS plus the v = 0 z chain; biased."""
    if array.dim != 3 or meas.elevations is None:
        raise ValueError("pls_3d expects a 3-D array with elevations")
    reg = build_regression(array, meas)
    planar = pls(reg)
    zreg = build_z_regression(array, meas, planar.p_hat)
    z_hat = bels_z(zreg, 0.0)
    return Estimate(
        p_hat=np.array([planar.p_hat[0], planar.p_hat[1], z_hat]),
        method="PLS",
        diagnostics={"cond_gram": planar.diagnostics["cond_gram"]},
    )
