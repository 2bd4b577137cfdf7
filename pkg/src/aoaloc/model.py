"""Domain types, bearing geometry, measurement synthesis, and the closed-form
moments of Gaussian angle noise that every estimator consumes.

Angle convention: bearings are full-circle two-argument angles of the vector
from the source to the sensor, in (-pi, pi].  Under this convention the
identities

    (x_i - x0) sin(a_i0) - (y_i - y0) cos(a_i0) = 0
    (x_i - x0) cos(a_i0) + (y_i - y0) sin(a_i0) = r_i0 > 0

hold unconditionally, which is what the linear-regression estimators rely on.
Noisy angles are stored unwrapped; every consumer either takes sin/cos or
wraps residuals explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .seeding import CHANNEL_AZIMUTH, CHANNEL_ELEVATION, substream

# Two points closer than this (in scenario units) are treated as coincident.
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class SensorArray:
    """Ordered sensor coordinates, shape (n, dim) with dim in {2, 3}, n >= 3.

    Collinearity is not checked here; degenerate geometry surfaces at solve
    time as an :class:`~aoaloc.errors.IllConditionedError`.
    """

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise ValueError("positions must be an (n, 2) or (n, 3) array")
        if pos.shape[0] < 3:
            raise ValueError(f"need at least 3 sensors, got {pos.shape[0]}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("sensor coordinates must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class SourceLocation:
    """True source coordinates (simulation input / oracle side)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.shape[0] not in (2, 3):
            raise ValueError("source coordinates must be a 2- or 3-vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("source coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian angle-noise standard deviations, in radians.

    ``None`` means "unknown, estimate from data".  Known values must satisfy
    0 <= sigma < pi; anything larger makes the angle model meaningless.
    """

    sigma_a: float | None
    sigma_e: float | None = None

    def __post_init__(self):
        for name, value in (("sigma_a", self.sigma_a), ("sigma_e", self.sigma_e)):
            if value is None:
                continue
            if not (0.0 <= value < math.pi):
                raise ValueError(f"{name} must lie in [0, pi), got {value}")


@dataclass(frozen=True)
class MeasurementSet:
    """Per-sensor noisy angles: azimuths, plus elevations when 3-D.

    Noisy values are stored unwrapped (the noise may push an azimuth out of
    (-pi, pi]); wrapping is applied where residuals are formed.
    """

    azimuths: np.ndarray
    elevations: np.ndarray | None = None

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=float)
        if az.ndim != 1:
            raise ValueError("azimuths must be a 1-D array")
        if not np.all(np.isfinite(az)):
            raise ValueError("azimuths must be finite")
        object.__setattr__(self, "azimuths", az)
        if self.elevations is not None:
            el = np.asarray(self.elevations, dtype=float)
            if el.shape != az.shape:
                raise ValueError("elevations must match azimuths in length")
            if not np.all(np.isfinite(el)):
                raise ValueError("elevations must be finite")
            object.__setattr__(self, "elevations", el)

    @property
    def n(self) -> int:
        return self.azimuths.shape[0]

    @property
    def dim(self) -> int:
        return 2 if self.elevations is None else 3


def wrap_angle(theta):
    """Wrap angle(s) to (-pi, pi]."""
    return np.pi - np.remainder(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


def bearings_2d(positions: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Full-circle bearings of each sensor as seen against the source.

    Vectorized core shared by synthesis, estimators, and oracles.  Raises
    :class:`DegenerateGeometryError` if any sensor coincides with ``source``.
    """
    d = positions[:, :2] - np.asarray(source, dtype=float)[:2]
    if np.min(np.einsum("ij,ij->i", d, d)) < COINCIDENCE_TOL**2:
        raise DegenerateGeometryError("source coincides with a sensor")
    a = np.arctan2(d[:, 1], d[:, 0])
    # arctan2 may return exactly -pi for signed-zero corner cases; fold to +pi.
    return np.where(a <= -np.pi, np.pi, a)


def elevations_3d(positions: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Elevation angles in (-pi/2, pi/2) of each sensor against the source."""
    src = np.asarray(source, dtype=float)
    dxy = positions[:, :2] - src[:2]
    r = np.hypot(dxy[:, 0], dxy[:, 1])
    if np.min(r) < COINCIDENCE_TOL:
        raise DegenerateGeometryError(
            "a sensor lies on the source's vertical line (planar range ~ 0)"
        )
    return np.arctan2(positions[:, 2] - src[2], r)


def true_bearing_2d(sensor, source) -> float:
    """Noise-free bearing of one sensor: the angle of the vector sensor - source."""
    s = np.asarray(sensor, dtype=float).reshape(1, 2)
    return float(bearings_2d(s, np.asarray(source, dtype=float))[0])


def true_elevation_3d(sensor, source) -> float:
    """Noise-free elevation of one sensor, arctan(dz / planar range)."""
    s = np.asarray(sensor, dtype=float).reshape(1, 3)
    return float(elevations_3d(s, np.asarray(source, dtype=float))[0])


def synthesize_measurements(
    array: SensorArray,
    source: SourceLocation,
    noise: NoiseModel,
    rng_seed: int,
) -> MeasurementSet:
    """Draw one noisy measurement set; bit-identical for identical inputs.

    Azimuth and elevation noises come from independent Philox substreams of
    ``rng_seed`` (see :mod:`aoaloc.seeding`), so growing ``n`` never perturbs
    the draws of existing sensors and the two channels stay independent.
    """
    if array.dim != source.dim:
        raise ValueError("sensor array and source dimensions differ")
    if noise.sigma_a is None or (array.dim == 3 and noise.sigma_e is None):
        raise ValueError("synthesis requires a fully known noise model")

    az0 = bearings_2d(array.positions, source.coords)
    eps_a = substream(rng_seed, CHANNEL_AZIMUTH).standard_normal(array.n)
    azimuths = az0 + noise.sigma_a * eps_a

    if array.dim == 2:
        return MeasurementSet(azimuths=azimuths)

    el0 = elevations_3d(array.positions, source.coords)
    eps_e = substream(rng_seed, CHANNEL_ELEVATION).standard_normal(array.n)
    return MeasurementSet(azimuths=azimuths, elevations=el0 + noise.sigma_e * eps_e)


def var_sin(sigma: float) -> float:
    """Variance of sin(X) for X ~ N(0, sigma^2): (1 - exp(-2 sigma^2)) / 2."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return -0.5 * math.expm1(-2.0 * sigma * sigma)


def var_cos(sigma: float) -> float:
    """Variance of cos(X) for X ~ N(0, sigma^2): (1 - exp(-sigma^2))^2 / 2."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return 0.5 * math.expm1(-sigma * sigma) ** 2


def mean_cos(sigma: float) -> float:
    """Mean of cos(X) for X ~ N(0, sigma^2): exp(-sigma^2 / 2)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return math.exp(-0.5 * sigma * sigma)


def sigma_from_var_sin(v: float) -> float:
    """Invert :func:`var_sin`: sigma = sqrt(-ln(1 - 2 v) / 2).

    Defined for v in [0, 1/2); no Gaussian yields a sine variance of 1/2 or
    more, so larger inputs are rejected.
    """
    if not (0.0 <= v < 0.5):
        raise ValueError(f"sine variance must lie in [0, 0.5), got {v}")
    return math.sqrt(-0.5 * math.log1p(-2.0 * v))
