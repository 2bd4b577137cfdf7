"""Finite-n Fisher information and root-CRLB for both dimensions.

The root-CRLB, sqrt(trace(F^{-1})), is the benchmark line every RMSE curve is
compared against.  Replicated-measurement scenarios are handled by passing
the expanded array (each site repeated T times); the Fisher information is
additive over sensors, so this is exactly the per-site term summed T times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    UndefinedCrlbError,
    UnidentifiableGeometryError,
)
from .model import COINCIDENCE_TOL, SensorArray
from .smallmat import sym_eig

COND_LIMIT = 1e12


@dataclass(frozen=True)
class FisherInfo:
    """Fisher information matrix with the noise parameters that produced it."""

    matrix: np.ndarray
    n: int
    sigma_a: float
    sigma_e: float | None = None


def fisher_2d(array: SensorArray, source, sigma_a: float) -> FisherInfo:
    """Exact finite-n Fisher information of the 2-D bearing model.

    F = (1/sigma_a^2) sum_i g_i g_i^T / ||p_i - p0||^4 with
    g_i = [y_i - y0, -(x_i - x0)]^T.
    """
    if sigma_a <= 0.0:
        raise UndefinedCrlbError("CRLB undefined for sigma_a = 0")
    src = np.asarray(source, dtype=float)[:2]
    d = array.positions[:, :2] - src
    d2 = np.einsum("ij,ij->i", d, d)
    if np.min(d2) < COINCIDENCE_TOL**2:
        raise DegenerateGeometryError("source coincides with a sensor")
    g = np.column_stack([d[:, 1], -d[:, 0]]) / d2[:, None]
    return FisherInfo(matrix=(g.T @ g) / sigma_a**2, n=array.n, sigma_a=sigma_a)


def fisher_3d(array: SensorArray, source, sigma_a: float, sigma_e: float) -> FisherInfo:
    """Fisher information of the 3-D azimuth/elevation model.

    F = sum_i J_i^T J_i with the 2x3 per-sensor Jacobian rows weighted by
    1/sigma_a and 1/sigma_e.
    """
    if sigma_a <= 0.0 or sigma_e <= 0.0:
        raise UndefinedCrlbError("CRLB undefined for zero noise")
    src = np.asarray(source, dtype=float)
    pos = array.positions
    dxy = pos[:, :2] - src[:2]
    dz = pos[:, 2] - src[2]
    r2 = np.einsum("ij,ij->i", dxy, dxy)
    if np.min(r2) < COINCIDENCE_TOL**2:
        raise DegenerateGeometryError("a sensor lies on the source's vertical line")
    r = np.sqrt(r2)
    d2 = r2 + dz * dz
    jac_a = np.column_stack([dxy[:, 1] / r2, -dxy[:, 0] / r2, np.zeros_like(r)])
    jac_a /= sigma_a
    jac_e = np.column_stack(
        [dxy[:, 0] * dz / (r * d2), dxy[:, 1] * dz / (r * d2), -r / d2]
    )
    jac_e /= sigma_e
    return FisherInfo(
        matrix=jac_a.T @ jac_a + jac_e.T @ jac_e,
        n=array.n,
        sigma_a=sigma_a,
        sigma_e=sigma_e,
    )


def rcrlb(info: FisherInfo) -> float:
    """Root-CRLB: sqrt(trace(F^{-1})).

    Raises :class:`UnidentifiableGeometryError` for a singular Fisher matrix
    (e.g. all sensors and the source collinear).
    """
    return math.sqrt(crlb_trace(info))


def crlb_trace(info: FisherInfo) -> float:
    """trace(F^{-1}); separate from :func:`rcrlb` so traces can be averaged."""
    w, _ = sym_eig(info.matrix)
    wmin, wmax = float(w[0]), float(w[-1])
    if wmin <= 0.0 or wmax / wmin > COND_LIMIT:
        cond = math.inf if wmin <= 0.0 else wmax / wmin
        raise UnidentifiableGeometryError(
            "Fisher information is singular or near-singular", cond=cond
        )
    return float(np.sum(1.0 / w))


def rcrlb_2d(array: SensorArray, source, sigma_a: float) -> float:
    """Convenience wrapper: root-CRLB of the 2-D model."""
    return rcrlb(fisher_2d(array, source, sigma_a))


def rcrlb_3d(array: SensorArray, source, sigma_a: float, sigma_e: float) -> float:
    """Convenience wrapper: root-CRLB of the 3-D model."""
    return rcrlb(fisher_3d(array, source, sigma_a, sigma_e))
