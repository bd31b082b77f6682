import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppct.errors import InvalidArgumentError
from ppct.phantoms import Volume, disk, shepp_logan
from ppct.ppfft import ppft_forward
from ppct.projector import (FanGeometry, FanSinogram, HelixGeometry, ParallelSinogram,
                            default_offsets, project_fan, project_helical, radon_parallel)
from ppct.rebin import (EPS_CAP, bilinear_transfer, cb_ssrb, eps_from_fraction,
                        equally_sloped_angles, fraction_from_eps, interpolation_error,
                        line_to_samples, parallel_to_ppdata, ray_error_to_lines,
                        rebin_fan_to_parallel, ssrb_weight)


class TestAngles:
    def test_n4(self):
        a = equally_sloped_angles(4)
        assert 0.0 in a.angles
        assert np.any(np.isclose(a.angles, np.pi / 2))
        assert np.any(np.isclose(a.angles, 0.46365, atol=1e-5))

    @pytest.mark.parametrize("n", [4, 6, 8, 16, 32, 64, 128, 256])
    def test_count_distinct(self, n):
        a = equally_sloped_angles(n).angles
        assert len(equally_sloped_angles(n)) == 2 * n
        assert np.unique(np.round(a, 12)).size == 2 * n
        assert np.all(np.diff(a) > 0)

    def test_odd(self):
        with pytest.raises(InvalidArgumentError):
            equally_sloped_angles(7)


class TestErrorMap:
    def test_eps_mapping(self):
        assert eps_from_fraction(0.0) == 0
        assert eps_from_fraction(0.5) == pytest.approx(1.0)
        assert eps_from_fraction(1.0) == EPS_CAP

    @given(q=st.floats(0, 0.999))
    def test_roundtrip(self, q):
        assert fraction_from_eps(eps_from_fraction(q)) == pytest.approx(q, abs=1e-9)

    def test_coincident_angles(self):
        n = 8
        aset = equally_sloped_angles(n)
        eps = interpolation_error(aset.angles, aset)
        assert eps.shape == (2, 2 * n, n)
        assert not np.any(eps)

    def test_midway_and_quarter(self):
        n = 4
        aset = equally_sloped_angles(n)
        target = aset.angles[3]  # arctan(1/2)
        gap = 0.2
        # target exactly midway between two measured angles
        eps = interpolation_error([target - gap / 2, target + gap / 2], aset)
        assert eps[0, 0, 3] == EPS_CAP
        # Delta = H/2: nearest measured angle at a quarter of the gap
        eps = interpolation_error([target - gap / 4, target + 3 * gap / 4], aset)
        assert eps[0, 0, 3] == pytest.approx(1.0)
        # the factor is constant along the line
        assert np.ptp(eps[0, :, 3]) == 0

    def test_modulo_pi(self):
        aset = equally_sloped_angles(4)
        a = interpolation_error(aset.angles, aset)
        b = interpolation_error(aset.angles + np.pi, aset)
        np.testing.assert_array_equal(a, b)

    def test_line_layout(self):
        n = 4
        per_line = np.arange(2 * n, dtype=float)
        s = line_to_samples(per_line, n)
        assert s[0, 5, 1] == 1 and s[1, 0, 2] == n + 2

    def test_ray_to_lines(self):
        offs = np.linspace(-1.4, 1.4, 8)
        eps = np.zeros((3, 8))
        eps[1] = 1.0
        eps[2, np.abs(offs) > 1] = EPS_CAP  # outside the support: ignored
        np.testing.assert_allclose(ray_error_to_lines(eps, offs), [0.0, 1.0, 0.0])


def full_fan(n, views, detectors=None, R=3.0):
    return FanGeometry.covering(R, views, detectors or 3 * n)


class TestFanToParallel:
    def test_node_is_exact(self, rng):
        geom = full_fan(32, 90, 64)
        data = rng.standard_normal((90, 64))
        fan = FanSinogram(geom, data)
        i, j = 17, 40
        gam = geom.gammas[j]
        offsets = np.array([geom.R * np.sin(gam)])
        ps, eps = rebin_fan_to_parallel(fan, [geom.betas[i] + gam], offsets=offsets,
                                        combine="nearest")
        assert ps.data[0, 0] == pytest.approx(data[i, j], abs=1e-12)
        assert eps[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_zero(self):
        fan = FanSinogram(full_fan(16, 40), np.zeros((40, 48)))
        ps, _ = rebin_fan_to_parallel(fan, equally_sloped_angles(16))
        assert not np.any(ps.data)

    @pytest.mark.parametrize("combine", ["mean", "proximity", "nearest"])
    def test_constant_profile_is_preserved(self, combine):
        # data depending only on l = R sin(gamma) survive any combination
        geom = full_fan(16, 60)
        l = geom.R * np.sin(geom.gammas)
        fan = FanSinogram(geom, np.tile(np.cos(l), (60, 1)))
        ps, eps = rebin_fan_to_parallel(fan, equally_sloped_angles(16), combine=combine)
        np.testing.assert_allclose(ps.data, np.broadcast_to(np.cos(ps.offsets), ps.data.shape), atol=1e-3)
        assert np.all(eps >= 0)

    def test_disk_chords(self):
        n, r = 128, 0.5
        aset = equally_sloped_angles(n)
        offsets = default_offsets(n)
        fan = project_fan(disk(n, r), full_fan(n, 720))
        ps, _ = rebin_fan_to_parallel(fan, aset, offsets=offsets)
        direct = radon_parallel(disk(n, r), aset.angles, offsets=offsets)
        want = 2 * np.sqrt(np.maximum(r * r - offsets**2, 0))[None, :]
        rms_rebin = np.sqrt(np.mean((ps.data - want) ** 2))
        rms_direct = np.sqrt(np.mean((direct.data - want) ** 2))
        assert rms_rebin < 2 * rms_direct

    def test_offsets_beyond_fan(self):
        fan = FanSinogram(full_fan(16, 40), np.zeros((40, 48)))
        with pytest.raises(InvalidArgumentError):
            rebin_fan_to_parallel(fan, [0.0], offsets=np.array([5.0]))

    def test_short_scan_coverage(self):
        geom = FanGeometry.covering(3.0, 20, 48, arc=np.pi / 2)
        fan = FanSinogram(geom, np.zeros((20, 48)))
        with pytest.raises(InvalidArgumentError):
            rebin_fan_to_parallel(fan, equally_sloped_angles(16))


class TestSSRBWeight:
    def test_branch_boundary(self):
        gt, g = 0.4, 0.1
        assert ssrb_weight(2 * gt - 2 * g, g, gt) == pytest.approx(1.0)
        assert ssrb_weight(2 * gt - 2 * g - 1e-9, g, gt) == pytest.approx(1.0, abs=1e-6)
        assert ssrb_weight(-0.1, g, gt) == 0
        assert ssrb_weight(np.pi + 2 * gt + 0.1, g, gt) == 0

    @given(phi=st.floats(0, np.pi), frac=st.floats(-0.99, 0.99))
    def test_partition_of_unity(self, phi, frac):
        gt = 0.45
        gam = frac * gt
        # the conjugate of (phi_ss, gamma) is (phi_ss + pi + 2 gamma, -gamma) when in range
        phi = phi * (np.pi + 2 * gt - (np.pi + 2 * gam)) / np.pi if gam > 0 else phi
        conj = phi + np.pi + 2 * gam
        if phi < 0 or conj > np.pi + 2 * gt:
            return
        total = ssrb_weight(phi, gam, gt) + ssrb_weight(conj, -gam, gt)
        assert total == pytest.approx(1.0, abs=1e-9)


def z_constant_cone(n=32, slices=9, rows=None, views_per_turn=96):
    vol = Volume(np.repeat(shepp_logan(n)[None], slices, axis=0))
    geom = HelixGeometry.for_volume(vol, P=0.5, views_per_turn=views_per_turn, n_rows=rows)
    return vol, project_helical(vol, geom)


class TestCBSSRB:
    def test_zero_offset_uses_central_row(self):
        vol, cone = z_constant_cone()
        g = cone.geometry
        k = np.argmin(np.abs(g.source_z))
        z = g.source_z[k]
        fan, eps = cb_ssrb(cone, z)
        i = np.flatnonzero(np.isclose(fan.geometry.betas, g.phis[k]))[0]
        np.testing.assert_allclose(fan.data[i], cone.data[k, g.n_rows // 2], atol=1e-12)
        assert np.all(eps[i] < 1e-9)

    def test_matches_fan_projection(self):
        vol, cone = z_constant_cone()
        fan, eps = cb_ssrb(cone, 0.0)
        g = fan.geometry
        ref = project_fan(vol.slices[0], g).data
        used = fan.weights > 0
        rms = np.sqrt(np.mean((fan.data - ref)[used] ** 2) / np.mean(ref[used] ** 2))
        assert rms < 0.03
        assert np.all(eps >= 0)

    def test_outside_coverage(self):
        _, cone = z_constant_cone()
        with pytest.raises(InvalidArgumentError):
            cb_ssrb(cone, 10.0)


class TestToPPData:
    def test_zero(self):
        n = 8
        aset = equally_sloped_angles(n)
        ps = ParallelSinogram(aset.angles, default_offsets(n), np.zeros((2 * n, 2 * 12)))
        y, eps = parallel_to_ppdata(ps, n)
        assert not np.any(y)
        assert not np.any(eps)

    def test_delta_is_flat(self):
        n = 32
        img = np.zeros((n, n))
        img[n // 2, n // 2] = 1.0
        # fine detector pitch and quadrature so that projection error stays below 1%
        ps = radon_parallel(img, equally_sloped_angles(n).angles, n_offsets=8 * n, step=0.25 / n)
        y, _ = parallel_to_ppdata(ps, n)
        ref = ppft_forward(img)
        np.testing.assert_allclose(np.abs(ref), 1.0, atol=1e-12)
        # the pixel-sum transform of a delta has unit magnitude everywhere
        assert np.max(np.abs(np.abs(y) - 1.0)) < 0.01

    @pytest.mark.parametrize("radial", ["exact", "linear"])
    def test_central_slice_consistency(self, radial):
        n = 64
        img = shepp_logan(n)
        ps = radon_parallel(img, equally_sloped_angles(n).angles)
        y, eps = parallel_to_ppdata(ps, n, radial=radial)
        ref = ppft_forward(img)
        assert np.linalg.norm(y - ref) / np.linalg.norm(ref) < 0.05
        if radial == "linear":
            assert eps.max() <= 0.25 / 4 + 1e-12 and eps.min() >= 0

    def test_transfer_is_one_at_dc(self):
        T = bilinear_transfer(8)
        np.testing.assert_allclose(T[:, 8, :], 1.0)
        assert np.all(T > 0)

    def test_wrong_angles(self):
        n = 8
        ps = ParallelSinogram(np.linspace(0, 3, 16), default_offsets(n), np.zeros((16, 24)))
        with pytest.raises(InvalidArgumentError):
            parallel_to_ppdata(ps, n)
