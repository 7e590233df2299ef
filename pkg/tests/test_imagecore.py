import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from glyphdesc.errors import (
    EvenKernel,
    ImageTooSmall,
    RectOutOfBounds,
    SingularHomography,
)
from glyphdesc.imagecore import (
    GrayImage,
    Homography,
    box_sum,
    convolve,
    gradients,
    integral_image,
    read_pgm,
    resize_bilinear,
    warp_projective,
    write_pgm,
)

RNG = np.random.default_rng(42)


def rand_image(h, w, seed=0):
    return GrayImage(np.random.default_rng(seed).random((h, w)))


class TestGrayImage:
    def test_invariants(self):
        img = rand_image(5, 7)
        assert img.width == 7 and img.height == 5
        assert img.data.shape == (35,)

    def test_rejects_nonfinite(self):
        bad = np.ones((4, 4))
        bad[1, 1] = np.nan
        with pytest.raises(ValueError):
            GrayImage(bad)

    def test_from_flat_roundtrip(self):
        img = rand_image(4, 6, seed=3)
        again = GrayImage.from_flat(img.data, 6, 4)
        assert np.array_equal(again.pixels, img.pixels)


class TestGradients:
    def test_constant_image_zero(self):
        g = gradients(GrayImage(np.full((5, 5), 0.7)))
        assert not g.gx.any() and not g.gy.any() and not g.magnitude.any()

    def test_unit_ramp(self):
        ramp = GrayImage(np.tile(np.arange(8.0), (8, 1)))
        g = gradients(ramp)
        assert np.allclose(g.gx, 1.0)
        assert np.allclose(g.gy, 0.0)
        assert np.allclose(g.orientation, 0.0)

    def test_matches_naive_oracle(self):
        img = rand_image(8, 8, seed=5)
        gx, gy, mag, ori = oracles.naive_gradients(img.pixels)
        g = gradients(img)
        assert np.array_equal(g.gx, gx)
        assert np.array_equal(g.gy, gy)
        assert np.allclose(g.magnitude, mag, atol=1e-15)
        assert np.allclose(g.orientation, ori, atol=1e-15)

    def test_magnitude_orientation_invariants(self):
        g = gradients(rand_image(9, 11, seed=8))
        assert np.allclose(g.magnitude, np.sqrt(g.gx**2 + g.gy**2), atol=1e-9)
        assert g.orientation.min() >= 0.0
        assert g.orientation.max() < np.pi

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            gradients(GrayImage(np.ones((2, 5))))

    def test_shift_invariance_dyadic(self):
        # dyadic intensities plus a power-of-two constant add exactly
        base = np.random.default_rng(1).integers(0, 256, (6, 6)) / 256.0
        g1 = gradients(GrayImage(base))
        g2 = gradients(GrayImage(base + 0.5))
        assert np.array_equal(g1.gx, g2.gx)
        assert np.array_equal(g1.gy, g2.gy)


class TestIntegralImage:
    def test_all_ones(self):
        ii = integral_image(GrayImage(np.ones((3, 3))))
        assert box_sum(ii, 0, 0, 3, 3) == pytest.approx(9.0)
        assert ii.table[0].sum() == 0 and ii.table[:, 0].sum() == 0

    def test_empty_rect(self):
        ii = integral_image(rand_image(4, 4))
        assert box_sum(ii, 2, 2, 0, 0) == 0.0

    def test_monotone_for_nonnegative(self):
        ii = integral_image(rand_image(6, 5, seed=2))
        assert np.all(np.diff(ii.table, axis=0) >= 0)
        assert np.all(np.diff(ii.table, axis=1) >= 0)

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_random_rectangles_match_naive(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.random((16, 16))
        ii = integral_image(GrayImage(a))
        t = rng.integers(0, 16)
        l = rng.integers(0, 16)
        h = rng.integers(0, 16 - t + 1)
        w = rng.integers(0, 16 - l + 1)
        assert box_sum(ii, t, l, h, w) == pytest.approx(
            oracles.naive_box_sum(a, t, l, h, w), abs=1e-9)

    def test_out_of_bounds(self):
        ii = integral_image(rand_image(4, 4))
        with pytest.raises(RectOutOfBounds):
            box_sum(ii, 2, 2, 3, 1)

    def test_additive_over_adjacent_halves(self):
        a = rand_image(8, 8, seed=9)
        ii = integral_image(a)
        whole = box_sum(ii, 1, 1, 6, 6)
        left = box_sum(ii, 1, 1, 6, 3)
        right = box_sum(ii, 1, 4, 6, 3)
        assert whole >= 0 and left >= 0 and right >= 0
        assert whole == pytest.approx(left + right, abs=1e-9)


class TestResize:
    def test_identity(self):
        img = rand_image(7, 9, seed=4)
        out = resize_bilinear(img, 9, 7)
        assert np.array_equal(out.pixels, img.pixels)

    def test_constant(self):
        out = resize_bilinear(GrayImage(np.full((3, 5), 0.25)), 11, 4)
        assert np.allclose(out.pixels, 0.25)

    def test_checkerboard_hand_computed(self):
        # 2x2 {0,1} checkerboard up to 4x4: output samples at source
        # coordinates -0.25/0.25/0.75/1.25 (clamped), hand-evaluated
        board = GrayImage(np.array([[0.0, 1.0], [1.0, 0.0]]))
        out = resize_bilinear(board, 4, 4)
        expected = np.array([
            [0.0, 0.25, 0.75, 1.0],
            [0.25, 0.375, 0.625, 0.75],
            [0.75, 0.625, 0.375, 0.25],
            [1.0, 0.75, 0.25, 0.0],
        ])
        assert np.allclose(out.pixels, expected, atol=1e-12)

    def test_range_preserved(self):
        img = rand_image(10, 10, seed=6)
        out = resize_bilinear(img, 23, 5)
        assert out.pixels.min() >= img.pixels.min() - 1e-12
        assert out.pixels.max() <= img.pixels.max() + 1e-12


class TestConvolve:
    def test_identity_kernel(self):
        img = rand_image(6, 6, seed=1)
        assert np.allclose(convolve(img, np.array([[1.0]])).pixels, img.pixels)

    def test_zero_mean_kernel_on_constant(self):
        k = np.array([[1.0, -2.0, 1.0], [0.5, -1.0, 0.5], [0.0, 0.0, 0.0]])
        k -= k.mean()
        out = convolve(GrayImage(np.full((5, 5), 0.3)), k)
        assert np.allclose(out.pixels, 0.0, atol=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(11)
        img = GrayImage(rng.random((8, 8)))
        k = rng.normal(size=(3, 3))
        assert np.allclose(convolve(img, k).pixels,
                           oracles.naive_convolve(img.pixels, k), atol=1e-9)

    def test_even_kernel_rejected(self):
        with pytest.raises(EvenKernel):
            convolve(rand_image(5, 5), np.ones((2, 3)))

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        i1 = rng.random((6, 6))
        i2 = rng.random((6, 6))
        k = rng.normal(size=(3, 5))
        a, b = rng.normal(size=2)
        lhs = convolve(GrayImage(a * i1 + b * i2), k).pixels
        rhs = a * convolve(GrayImage(i1), k).pixels + b * convolve(GrayImage(i2), k).pixels
        assert np.allclose(lhs, rhs, atol=1e-9)


class TestWarp:
    def test_identity(self):
        img = rand_image(12, 10, seed=13)
        out = warp_projective(img, Homography.identity(), 10, 12)
        assert np.allclose(out.pixels, img.pixels, atol=1e-9)

    def test_translation_roundtrip(self):
        img = rand_image(16, 16, seed=14)
        fwd = Homography(np.array([[1, 0, 2], [0, 1, 0], [0, 0, 1]], dtype=float))
        back = Homography(np.array([[1, 0, -2], [0, 1, 0], [0, 0, 1]], dtype=float))
        there = warp_projective(img, fwd, 16, 16)
        home = warp_projective(there, back, 16, 16)
        assert np.allclose(home.pixels[2:-2, 2:-2], img.pixels[2:-2, 2:-2], atol=1e-6)

    def test_projective_roundtrip(self):
        # smooth synthetic image: bilinear resampling error stays small
        y, x = np.mgrid[0:64, 0:64].astype(float)
        img = GrayImage(0.5 + 0.25 * np.sin(2 * np.pi * x / 64)
                        + 0.2 * np.cos(2 * np.pi * y / 64))
        H = Homography(np.array([[0.95, 0.05, 1.5],
                                 [-0.04, 1.02, 0.8],
                                 [1e-4, -5e-5, 1.0]]))
        warped = warp_projective(img, H, 64, 64)
        back = warp_projective(warped, H.inverse(), 64, 64)
        interior = np.s_[3:-3, 3:-3]
        err = np.abs(back.pixels[interior] - img.pixels[interior]).mean()
        assert err < 1e-3

    def test_out_of_source_is_white(self):
        img = GrayImage(np.zeros((4, 4)))
        shift = Homography(np.array([[1, 0, 2], [0, 1, 0], [0, 0, 1]], dtype=float))
        out = warp_projective(img, shift, 4, 4)
        assert np.allclose(out.pixels[:, :2], 1.0)

    def test_singular_rejected(self):
        with pytest.raises(SingularHomography):
            Homography(np.array([[1, 0, 0], [2, 0, 0], [0, 0, 1.0]]))


class TestPgm:
    def test_roundtrip(self, tmp_path):
        img = GrayImage(np.random.default_rng(3).integers(0, 256, (9, 7)) / 255.0)
        path = tmp_path / "img.pgm"
        write_pgm(img, path)
        again = read_pgm(path)
        assert again.width == 7 and again.height == 9
        assert np.allclose(again.pixels, img.pixels, atol=1e-12)

    def test_comment_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        img = read_pgm(path)
        assert img.pixels[0, 1] == pytest.approx(128 / 255)

    def test_color_rejected(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        with pytest.raises(ValueError, match="color"):
            read_pgm(path)

    def test_ascii_rejected(self, tmp_path):
        path = tmp_path / "a.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(ValueError):
            read_pgm(path)
