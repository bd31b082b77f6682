import numpy as np
import pytest

from ppct.errors import InvalidArgumentError
from ppct.phantoms import Volume, disk, shepp_logan
from ppct.projector import (CountsSinogram, FanGeometry, HelixGeometry, counts_to_projections,
                            default_offsets, project_fan, project_helical, radon_parallel,
                            simulate_counts)


def chord(r, l):
    return 2 * np.sqrt(np.maximum(r * r - l * l, 0.0))


def assert_chords(data, r, l, h):
    """Profiles agree with the disk chord up to two pixel widths.

    Everywhere the data lie between the chords of radii ``r -+ 2h``; away from
    the rim (``|l| <= r - 2h``) the absolute error is below ``2h``.
    """
    l = np.broadcast_to(l, data.shape)
    assert np.all(data >= chord(r - 2 * h, l) - 1e-12)
    assert np.all(data <= chord(r + 2 * h, l) + 1e-12)
    inner = np.abs(l) <= r - 2 * h
    assert np.max(np.abs(data - chord(r, l))[inner]) <= 2 * h


class TestParallel:
    def test_disk_chords(self):
        n, r = 128, 0.5
        angles = np.linspace(0, np.pi, 7, endpoint=False)
        ps = radon_parallel(disk(n, r), angles)
        assert_chords(ps.data, r, ps.offsets, 2 / n)

    def test_zero(self):
        ps = radon_parallel(np.zeros((16, 16)), [0.0, 1.0])
        assert not np.any(ps.data)

    def test_rotation_identity(self, rng):
        n = 32
        img = shepp_logan(n)
        phi = rng.uniform(0, np.pi, 5)
        a = radon_parallel(img, phi).data
        b = radon_parallel(np.rot90(img), phi + np.pi / 2).data
        assert np.max(np.abs(a - b)) <= 0.05 * np.max(np.abs(a))
        # axis-aligned angles hit pixel centres identically
        a0 = radon_parallel(img, [0.0]).data
        b0 = radon_parallel(np.rot90(img), [np.pi / 2]).data
        np.testing.assert_allclose(a0, b0, atol=1e-12)

    def test_mass_conservation(self):
        n = 64
        img = shepp_logan(n)
        ps = radon_parallel(img, [0.3, 1.2])
        dl = np.diff(ps.offsets)[0]
        np.testing.assert_allclose(ps.data.sum(axis=1) * dl, img.sum() * (2 / n) ** 2, rtol=1e-3)

    def test_linear(self, rng):
        a, b = rng.standard_normal((2, 16, 16))
        ang = [0.1, 0.9]
        lhs = radon_parallel(2 * a - b, ang).data
        rhs = 2 * radon_parallel(a, ang).data - radon_parallel(b, ang).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_offsets_default(self):
        o = default_offsets(16)
        assert o.size == 2 * int(np.ceil(np.sqrt(2) * 16))
        np.testing.assert_allclose(o, -o[::-1])

    def test_errors(self):
        with pytest.raises(InvalidArgumentError):
            radon_parallel(np.zeros((16, 16)), [])
        with pytest.raises(InvalidArgumentError):
            radon_parallel(np.zeros((16, 16)), [0.0], n_offsets=4)


class TestFan:
    def test_central_ray_is_parallel_ray(self, rng):
        n = 64
        img = shepp_logan(n)
        betas = rng.uniform(0, 2 * np.pi, 4)
        geom = FanGeometry(3.0, 0.5, 65, betas)  # odd count: the middle detector has gamma = 0
        assert geom.gammas[32] == pytest.approx(0.0, abs=1e-15)
        fan = project_fan(img, geom)
        par = radon_parallel(img, betas, offsets=np.array([0.0]))
        np.testing.assert_allclose(fan.data[:, 32], par.data[:, 0], atol=1e-9)

    def test_disk_chords(self):
        n, r, R = 128, 0.5, 3.0
        geom = FanGeometry.covering(R, 8, 257)
        fan = project_fan(disk(n, r), geom)
        assert_chords(fan.data, r, R * np.sin(geom.gammas), 2 / n)

    def test_zero(self):
        fan = project_fan(np.zeros((16, 16)), FanGeometry.covering(3.0, 4, 20))
        assert not np.any(fan.data)

    def test_geometry_validation(self):
        with pytest.raises(InvalidArgumentError):
            FanGeometry(0.5, 0.3, 10, [0.0])
        with pytest.raises(InvalidArgumentError):
            FanGeometry(3.0, 2.0, 10, [0.0])


class TestHelical:
    def setup_method(self):
        n = 32
        self.vol = Volume(np.repeat(shepp_logan(n)[None], 9, axis=0))
        self.geom = HelixGeometry.for_volume(self.vol, views_per_turn=24, n_rows=5)

    def test_zero(self):
        zero = Volume(np.zeros_like(self.vol.slices))
        assert not np.any(project_helical(zero, self.geom).data)

    def test_linear(self):
        a = project_helical(self.vol, self.geom).data
        b = project_helical(Volume(2 * self.vol.slices), self.geom).data
        np.testing.assert_allclose(b, 2 * a, atol=1e-12)

    def test_central_row_matches_fan(self):
        cone = project_helical(self.vol, self.geom)
        g = self.geom
        inside = np.abs(g.source_z) <= self.vol.z[-1] - self.vol.z_spacing
        fan = project_fan(self.vol.slices[0], FanGeometry(g.R, g.gamma_max, g.n_cols, g.phis[inside]))
        mid = cone.data[inside, g.n_rows // 2, :]
        assert g.v[g.n_rows // 2] == 0
        rms = np.sqrt(np.mean((mid - fan.data) ** 2)) / np.sqrt(np.mean(fan.data**2))
        assert rms < 1e-2

    def test_needs_coverage(self):
        g = self.geom
        short = HelixGeometry(g.R, g.D, g.P, g.gamma_max, g.n_cols, g.n_rows, g.row_spacing,
                              g.phis[: g.phis.size // 4])
        with pytest.raises(InvalidArgumentError):
            project_helical(self.vol, short)


class TestCounts:
    def test_zero_line_integral_mean(self):
        c = simulate_counts(np.zeros((100, 1000)), 1000.0, rng_seed=1)
        assert c.counts.mean() == pytest.approx(1000.0, rel=5e-3)

    def test_ln2_mean(self):
        c = simulate_counts(np.full((100, 1000), np.log(2)), 1e6, rng_seed=2)
        assert c.counts.mean() == pytest.approx(5e5, rel=1e-2)

    @pytest.mark.parametrize("lam_bar,sigma2", [(500.0, 0.0), (500.0, 25.0)])
    def test_projection_variance(self, lam_bar, sigma2):
        lam_T = 1000.0
        g = np.full((100, 1000), np.log(lam_T / lam_bar))
        y, _ = counts_to_projections(simulate_counts(g, lam_T, np.sqrt(sigma2), rng_seed=3))
        want = (lam_bar + sigma2) / lam_bar**2
        assert y.var() == pytest.approx(want, rel=0.05)

    def test_seed_reproducible(self):
        g = np.full((4, 50), 0.5)
        a = simulate_counts(g, 100.0, 2.0, rng_seed=7).counts
        b = simulate_counts(g, 100.0, 2.0, rng_seed=7).counts
        c = simulate_counts(g, 100.0, 2.0, rng_seed=8).counts
        np.testing.assert_array_equal(a, b)
        assert np.any(a != c)

    def test_floor(self):
        c = simulate_counts(np.full((2, 100), 50.0), 10.0, rng_seed=0)
        assert c.counts.min() >= 1.0

    def test_bad_flux(self):
        with pytest.raises(InvalidArgumentError):
            simulate_counts(np.zeros(3), 0.0)

    def test_projections_and_weights(self):
        y, d = counts_to_projections(CountsSinogram(np.array([1000.0, 100.0]), 1000.0, 0.0))
        assert y[0] == 0.0
        assert d[1] == pytest.approx(100.0)
        _, d = counts_to_projections(CountsSinogram(np.array([100.0]), 1000.0, 5.0))
        assert d[0] == pytest.approx(80.0)


def exact_log_variance(lam_bar, sigma2, floor=1.0):
    """Variance of -log(max(Poisson + Gaussian, floor)) by direct quadrature."""
    from scipy import stats

    k = np.arange(0, int(lam_bar + 12 * np.sqrt(lam_bar + sigma2)) + 50)
    pk = stats.poisson.pmf(k, lam_bar)
    if sigma2 == 0:
        x, w = np.maximum(k, floor), pk
    else:
        t = np.linspace(-10, 10, 4001)
        wt = stats.norm.pdf(t)
        wt /= wt.sum()
        x = np.maximum(k[:, None] + np.sqrt(sigma2) * t[None, :], floor)
        w = pk[:, None] * wt[None, :]
    v = -np.log(x)
    m = np.sum(w * v)
    return np.sum(w * (v - m) ** 2)


@pytest.mark.parametrize("lam_bar,sigma2", [(50.0, 0.0), (50.0, 25.0), (5000.0, 25.0)])
def test_projection_variance_exact(lam_bar, sigma2):
    # the simulated chain against the exact distribution of the log data
    lam_T = 1e4
    g = np.full((100, 1000), np.log(lam_T / lam_bar))
    y, _ = counts_to_projections(simulate_counts(g, lam_T, np.sqrt(sigma2), rng_seed=11))
    assert y.var() == pytest.approx(exact_log_variance(lam_bar, sigma2), rel=0.015)
