import numpy as np
import pytest

from ppct.errors import InvalidArgumentError
from ppct.phantoms import SHEPP_LOGAN, Volume, disk, helical_test_volume, pixel_centers, shepp_logan


def ellipse_sum_at(x, y):
    """Direct point-in-ellipse evaluation of the classic table."""
    total = 0.0
    for e in SHEPP_LOGAN:
        t = np.deg2rad(e.angle)
        dx, dy = x - e.x0, y - e.y0
        xr = dx * np.cos(t) + dy * np.sin(t)
        yr = -dx * np.sin(t) + dy * np.cos(t)
        if (xr / e.a) ** 2 + (yr / e.b) ** 2 <= 1:
            total += e.intensity
    return max(total, 0.0)


class TestSheppLogan:
    def test_centre_pixels(self):
        n = 256
        img = shepp_logan(n)
        x, y = pixel_centers(n)
        for r, c in [(127, 127), (127, 128), (128, 127), (128, 128)]:
            assert img[r, c] == pytest.approx(ellipse_sum_at(x[r, c], y[r, c]))
        # the centre of the head sits in the brain region: 1 - 0.98
        assert img[128, 128] == pytest.approx(0.02)

    def test_outside_head(self):
        n = 256
        img = shepp_logan(n)
        x, y = pixel_centers(n)
        r = np.argmin(np.abs(y[:, 0] - 0.95))
        c = np.argmin(np.abs(x[0] - 0.95))
        assert img[r, c] == 0

    def test_random_points_match_table(self, rng):
        n = 64
        img = shepp_logan(n)
        x, y = pixel_centers(n)
        for r, c in rng.integers(0, n, size=(40, 2)):
            assert img[r, c] == pytest.approx(ellipse_sum_at(x[r, c], y[r, c]))

    def test_mirror_symmetry(self):
        n = 256
        img = shepp_logan(n)
        diff = np.abs(img - img[:, ::-1])
        x, y = pixel_centers(n)
        mirrored = {(e.intensity, e.a, e.b, -e.x0, e.y0, -e.angle) for e in SHEPP_LOGAN}
        odd = [e for e in SHEPP_LOGAN
               if (e.intensity, e.a, e.b, e.x0, e.y0, e.angle) not in mirrored]
        # symmetry can only break where an ellipse without a mirror partner (or
        # its reflection) covers the pixel; the pixel grid itself is symmetric
        region = np.zeros((n, n), bool)
        for e in odd:
            region |= e.contains(x, y) | e.contains(-x, y)
        assert diff[~region].max() == 0
        assert diff.max() <= max(abs(e.intensity) for e in odd) * 2 + 1e-12

    def test_non_negative_and_deterministic(self):
        a, b = shepp_logan(64), shepp_logan(64)
        assert a.min() >= 0
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("n", [7, 0, -4, 5.0])
    def test_bad_size(self, n):
        with pytest.raises(InvalidArgumentError):
            shepp_logan(n)


class TestDisk:
    def test_centre_and_corner(self):
        img = disk(64, 0.5, 1.0)
        assert img[32, 32] == 1
        assert img[0, 0] == 0

    def test_linear_in_value(self):
        np.testing.assert_array_equal(disk(64, 0.5, 2.0), 2 * disk(64, 0.5, 1.0))

    def test_area(self):
        n = 512
        area = disk(n, 0.5).sum() * (2 / n) ** 2
        assert area == pytest.approx(np.pi * 0.25, rel=1e-2)

    def test_bad_radius(self):
        with pytest.raises(InvalidArgumentError):
            disk(64, 0.0)


class TestHelicalVolume:
    def test_structure(self):
        vol = helical_test_volume(32, 12)
        mid = vol.slices[6]
        end = vol.slices[0]
        assert vol.slices.shape == (12, 32, 32)
        # inserts add structure beyond the plain cylinder
        assert len(np.unique(mid)) > len(np.unique(end))
        np.testing.assert_array_equal(vol.slices[0], vol.slices[-1])
        assert set(np.unique(end)) <= {0.0, 1.0}

    def test_central_third_constant(self):
        vol = helical_test_volume(32, 12)
        sums = vol.slices.sum(axis=(1, 2))
        mid = slice(4, 8)
        assert np.ptp(sums[mid]) == 0

    def test_z_positions_centred(self):
        vol = helical_test_volume(16, 5)
        np.testing.assert_allclose(vol.z, (np.arange(5) - 2) * (2 / 16))

    def test_volume_validation(self):
        with pytest.raises(InvalidArgumentError):
            Volume(np.zeros((4, 4)))
        with pytest.raises(InvalidArgumentError):
            Volume(np.zeros((2, 4, 4)), z_spacing=-1.0)
