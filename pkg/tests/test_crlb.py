"""Fisher information and root-CRLB: hand cases, score-covariance oracle."""

import math

import numpy as np
import pytest

from aoaloc import (
    SensorArray,
    UndefinedCrlbError,
    UnidentifiableGeometryError,
    fisher_2d,
    fisher_3d,
    rcrlb,
    rcrlb_2d,
)

from conftest import replicated_array


class TestHandCases:
    def test_compass_geometry(self):
        # 4 sensors at distance r on the +/-x, +/-y axes: F = (2/(sigma r)^2) I
        r, sigma = 7.0, 0.13
        array = SensorArray(positions=[[r, 0], [0, r], [-r, 0], [0, -r]])
        info = fisher_2d(array, [0.0, 0.0], sigma)
        assert np.allclose(info.matrix, (2.0 / (sigma * r) ** 2) * np.eye(2))
        assert rcrlb(info) == pytest.approx(sigma * r)

    def test_distance_scaling(self):
        rng = np.random.default_rng(80)
        pos = rng.uniform(10, 50, (8, 2))
        array = SensorArray(positions=pos)
        scaled = SensorArray(positions=3.0 * pos)
        base = rcrlb_2d(array, [0.0, 0.0], 0.2)
        assert rcrlb_2d(scaled, [0.0, 0.0], 0.2) == pytest.approx(3.0 * base, rel=1e-12)

    def test_duplicating_sensors_halves_variance(self):
        rng = np.random.default_rng(81)
        pos = rng.uniform(10, 50, (6, 2))
        array = SensorArray(positions=pos)
        doubled = SensorArray(positions=np.vstack([pos, pos]))
        assert rcrlb_2d(doubled, [0.0, 0.0], 0.2) == pytest.approx(
            rcrlb_2d(array, [0.0, 0.0], 0.2) / math.sqrt(2.0), rel=1e-12
        )

    def test_collinear_unidentifiable(self):
        array = SensorArray(positions=[[10.0, 0.0], [20.0, 0.0], [30.0, 0.0]])
        with pytest.raises(UnidentifiableGeometryError):
            rcrlb_2d(array, [0.0, 0.0], 0.2)

    def test_zero_sigma_rejected(self):
        array = SensorArray(positions=[[10.0, 0.0], [0.0, 10.0], [-10.0, 0.0]])
        with pytest.raises(UndefinedCrlbError):
            fisher_2d(array, [0.0, 0.0], 0.0)
        array3 = SensorArray(positions=[[10.0, 0, 1], [0, 10, 2], [-10, 0, 3]])
        with pytest.raises(UndefinedCrlbError):
            fisher_3d(array3, [0.0, 0.0, 0.0], 0.2, 0.0)


class TestScoreCovarianceOracle:
    """F must equal the covariance of the log-likelihood gradient."""

    def test_2d(self):
        rng = np.random.default_rng(82)
        # clustered geometry so every Fisher entry is decently sized
        pos = rng.uniform(20, 80, (20, 2))
        array = SensorArray(positions=pos)
        source = np.array([5.0, -3.0])
        sigma = 0.2
        info = fisher_2d(array, source, sigma)
        d = pos - source
        d2 = np.einsum("ij,ij->i", d, d)
        jac = np.column_stack([d[:, 1] / d2, -d[:, 0] / d2])
        draws = 100_000
        eps = rng.standard_normal((draws, 20)) * sigma
        scores = (eps @ jac) / sigma**2
        cov = scores.T @ scores / draws
        assert np.all(np.abs(cov - info.matrix) <= 0.03 * np.abs(info.matrix))

    def test_3d(self):
        rng = np.random.default_rng(83)
        pos = rng.uniform(20, 80, (20, 3))
        array = SensorArray(positions=pos)
        source = np.array([5.0, -3.0, 2.0])
        sigma_a, sigma_e = 0.2, 0.1
        info = fisher_3d(array, source, sigma_a, sigma_e)
        dxy = pos[:, :2] - source[:2]
        dz = pos[:, 2] - source[2]
        r2 = np.einsum("ij,ij->i", dxy, dxy)
        r = np.sqrt(r2)
        d2 = r2 + dz * dz
        jac_a = np.column_stack([dxy[:, 1] / r2, -dxy[:, 0] / r2, np.zeros(20)]) / sigma_a
        jac_e = (
            np.column_stack([dxy[:, 0] * dz / (r * d2), dxy[:, 1] * dz / (r * d2), -r / d2])
            / sigma_e
        )
        draws = 100_000
        # weighted scores: unit-variance normal per residual row
        scores = rng.standard_normal((draws, 20)) @ jac_a
        scores += rng.standard_normal((draws, 20)) @ jac_e
        cov = scores.T @ scores / draws
        assert np.all(np.abs(cov - info.matrix) <= 0.03 * np.abs(info.matrix))


class TestStructure:
    def test_coplanar_still_identifiable(self, sites_3d_coplanar):
        # z = 0 sensors, source on and off the plane: F nonsingular either way
        array = replicated_array(sites_3d_coplanar, 10)
        for source in ([60.0, 10.0, 10.0], [60.0, 10.0, 0.0]):
            info = fisher_3d(array, source, 0.2, 0.2)
            from aoaloc.smallmat import sym_eigvals

            assert sym_eigvals(info.matrix)[0] > 0
            assert rcrlb(info) > 0

    def test_azimuth_block_matches_2d(self, sites_3d):
        # sigma_e -> infinity leaves only the azimuth information, whose
        # planar block is exactly the projected 2-D Fisher matrix
        array = replicated_array(sites_3d, 10)
        source = np.array([60.0, 10.0, 10.0])
        info3 = fisher_3d(array, source, 0.2, 1e9)
        flat = SensorArray(positions=array.positions[:, :2])
        info2 = fisher_2d(flat, source[:2], 0.2)
        assert np.allclose(info3.matrix[:2, :2], info2.matrix, rtol=1e-9)

    def test_monotone_in_sensors(self):
        # adding a sensor never increases the RCRLB
        rng = np.random.default_rng(84)
        for _ in range(50):
            pos = rng.uniform(-50, 50, (6, 2)) + np.array([100.0, 0.0])
            array = SensorArray(positions=pos)
            extra = rng.uniform(-50, 50, 2) + np.array([100.0, 0.0])
            bigger = SensorArray(positions=np.vstack([pos, extra]))
            assert rcrlb_2d(bigger, [0.0, 0.0], 0.2) <= rcrlb_2d(
                array, [0.0, 0.0], 0.2
            ) * (1 + 1e-12)

    def test_rotation_invariance(self, sites_2d):
        array = replicated_array(sites_2d, 10)
        source = np.array([60.0, 10.0])
        base = rcrlb_2d(array, source, 0.2)
        theta = 1.1
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        rotated = SensorArray(positions=array.positions @ rot.T)
        assert rcrlb_2d(rotated, rot @ source, 0.2) == pytest.approx(base, rel=1e-12)

    def test_replication_equivalence(self, sites_2d):
        # T-fold site replication equals the expanded fixed array by construction
        t = 7
        expanded = replicated_array(sites_2d, 10 * t)
        per_site = SensorArray(positions=sites_2d)
        f_site = fisher_2d(per_site, [60.0, 10.0], 0.2).matrix
        f_exp = fisher_2d(expanded, [60.0, 10.0], 0.2).matrix
        assert np.allclose(f_exp, t * f_site, rtol=1e-12)
