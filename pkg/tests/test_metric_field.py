import numpy as np
import pytest

from conftest import random_spd, random_sym
from dgk import (
    DetectorFieldGrid,
    Lattice,
    MetricField,
    ParamChart,
    Profile,
    SpatialDetectorParams,
    TemporalDetectorParams,
    assemble_lorentzian,
    metric_variation_lorentzian,
    metric_variation_spatial,
    metric_variation_temporal,
    pullback_lapse,
    pullback_spatial,
    reconstruct,
    spatial_metric_closed,
)
from dgk.errors import DegeneracyError, DomainError
from dgk.metric_field import LORENTZIAN


def identity_labels(n):
    return [Profile.linear(k + 1) for k in range(n)]


def phase_grid(beta, dims=(5, 7, 7, 5), spacing=(0.1, 0.2, 0.2, 0.2), origin=(0.0, -0.6, -0.6, -0.4)):
    lat = Lattice(dims, spacing, origin)
    base = SpatialDetectorParams(q=np.zeros(3), A=np.eye(3))
    tbase = TemporalDetectorParams(t=0.0, a=1.0)
    return DetectorFieldGrid.from_profiles(
        lat,
        ParamChart.labels(base),
        identity_labels(3),
        ParamChart(["t"], tbase),
        [Profile.linear(0)],
        spatial_background={"B": beta},
    )


class TestReconstruction:
    def test_phase_profile_exact(self):
        grid = phase_grid(Profile.linear(1))
        g = reconstruct(grid)
        x1 = grid.lattice.coordinates()[..., 1]
        expected = (1 + 4 * x1**2)[..., None, None] * np.eye(3)
        assert np.array_equal(g.g[..., 1:, 1:], expected)
        assert np.array_equal(g.g[..., 0, 0], -np.ones(grid.lattice.dims))
        assert g.signature == LORENTZIAN

    def test_constant_parameters_give_constant_metric(self):
        g = reconstruct(phase_grid(Profile.constant(0.3)))
        assert np.ptp(g.g.reshape(-1, 16), axis=0).max() == 0.0

    def test_numeric_jacobian_agrees_with_exact(self):
        grid = phase_grid(Profile.linear(1))
        approx = DetectorFieldGrid(
            grid.lattice, grid.spatial_chart, grid.xi_S ** 1, grid.temporal_chart, grid.xi_T, grid.spatial_background
        )
        h_exact, _ = pullback_spatial(grid)
        h_num, _ = pullback_spatial(approx)
        np.testing.assert_allclose(h_num, h_exact, atol=1e-12)

    def test_caustic_is_flagged(self):
        lat = Lattice((5, 9), (0.1, 0.25), (0.0, -1.0))
        base = SpatialDetectorParams(q=[0.0], A=[[1.0]])
        cubic = Profile.from_dict({"poly": [{"axis": 1, "coeffs": [0.0, 0.0, 0.0, 1.0]}]})
        grid = DetectorFieldGrid.from_profiles(
            lat, ParamChart.labels(base), [cubic], ParamChart(["t"], TemporalDetectorParams(0.0, 1.0)), [Profile.linear(0)]
        )
        _, flags = pullback_spatial(grid)
        assert flags.sum() == 5 and flags[:, 4].all()
        with pytest.raises(DegeneracyError) as err:
            reconstruct(grid)
        assert len(err.value.sites) == 5
        g = reconstruct(grid, allow_degenerate=True)
        assert (~g.valid).sum() == 5

    def test_lapse_from_temporal_sector(self):
        lat = Lattice((6, 5), (0.1, 0.2))
        grid = DetectorFieldGrid.from_profiles(
            lat,
            ParamChart.labels(SpatialDetectorParams(q=[0.0], A=[[1.0]])),
            [Profile.linear(1)],
            ParamChart(["t"], TemporalDetectorParams(0.0, a=2.0, b=1.0)),
            [Profile.linear(0, slope=0.5)],
        )
        N2, flags = pullback_lapse(grid)
        np.testing.assert_allclose(N2, 4.0 * 0.25)
        assert not flags.any()

    def test_nonpositive_width_background(self):
        with pytest.raises(DomainError):
            phase_grid(Profile.linear(1)).__class__.from_profiles(
                Lattice((5, 5), (0.1, 0.1)),
                ParamChart.labels(SpatialDetectorParams(q=[0.0], A=[[1.0]])),
                [Profile.linear(1)],
                spatial_background={"A": Profile.linear(1)},
            )

    def test_assemble_rejects_bad_shapes(self):
        lat = Lattice((5, 5), (0.1, 0.1))
        with pytest.raises(Exception):
            assemble_lorentzian(lat, np.ones((5, 5)), np.ones((5, 5, 2, 2)))

    def test_spatial_slice(self):
        g = reconstruct(phase_grid(Profile.linear(1)))
        s = g.spatial_slice(2)
        assert s.lattice.dims == (7, 7, 5)
        assert s.signature == "riemannian"

    def test_metric_field_requires_symmetry(self):
        lat = Lattice((5, 5), (0.1, 0.1))
        g = np.broadcast_to(np.array([[1.0, 0.2], [0.0, 1.0]]), (5, 5, 2, 2))
        with pytest.raises(DomainError):
            MetricField(lat, g)


class TestVariations:
    def test_spatial_against_finite_difference(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 4))
            A, B = random_spd(rng, n), random_sym(rng, n)
            dA, dB = random_sym(rng, n), random_sym(rng, n)

            def G(eps):
                return spatial_metric_closed(SpatialDetectorParams(q=np.zeros(n), A=A + eps * dA, B=B + eps * dB))

            eps = 1e-4
            fd = (G(eps) - G(-eps)) / (2 * eps)
            an = metric_variation_spatial(A, B, dA, dB)
            assert np.abs(an - fd).max() <= 1e-6 * np.abs(fd).max()

    def test_temporal_against_finite_difference(self, rng):
        a, b, da, db = 1.3, -0.4, 0.7, 0.2
        eps = 1e-4

        def g(e):
            return (a + e * da) + 4 * (b + e * db) ** 2 / (a + e * da)

        fd = (g(eps) - g(-eps)) / (2 * eps)
        assert metric_variation_temporal(a, b, da, db) == pytest.approx(fd, rel=1e-7)

    def test_lorentzian_blocks(self, rng):
        A, B = random_spd(rng, 2), random_sym(rng, 2)
        dA, dB = random_sym(rng, 2), random_sym(rng, 2)
        out = metric_variation_lorentzian(A, B, 1.0, 0.2, dA, dB, 0.1, 0.3, dt_xi_T=2.0)
        assert out[0, 0] == pytest.approx(-4.0 * metric_variation_temporal(1.0, 0.2, 0.1, 0.3))
        np.testing.assert_allclose(out[1:, 1:], metric_variation_spatial(A, B, dA, dB))
        np.testing.assert_array_equal(out[0, 1:], 0.0)

    def test_rejects_asymmetric_variation(self):
        with pytest.raises(DomainError):
            metric_variation_spatial(np.eye(2), np.zeros((2, 2)), np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2)))
