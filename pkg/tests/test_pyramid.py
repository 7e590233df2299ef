import numpy as np
import pytest

from glyphdesc.descriptors import DescriptorKind, base_dim, describe
from glyphdesc.errors import ImageTooSmall
from glyphdesc.imagecore import GrayImage
from glyphdesc.pyramid import describe7, regions


def blank(h=64, w=64):
    return GrayImage(np.ones((h, w)))


class TestRegions:
    def test_canonical_window_bounds(self):
        rs = regions(blank(64, 64))
        bounds = [(r.top, r.left, r.height, r.width) for r in rs]
        assert bounds == [
            (0, 0, 64, 64),
            (0, 0, 32, 64), (16, 0, 32, 64), (32, 0, 32, 64),
            (0, 0, 64, 32), (0, 16, 64, 32), (0, 32, 64, 32),
        ]

    def test_vertical_strips_cover_every_row(self):
        rs = regions(blank(64, 64))
        covered = np.zeros(64, dtype=bool)
        for r in list(rs)[1:4]:
            covered[r.top:r.top + r.height] = True
        assert covered.all()

    def test_odd_size(self):
        rs = regions(blank(65, 65))
        tops = [(r.top, r.height) for r in list(rs)[1:4]]
        assert tops == [(0, 33), (16, 33), (32, 33)]

    @pytest.mark.parametrize("h", range(4, 101, 7))
    @pytest.mark.parametrize("w", range(4, 101, 7))
    def test_bounds_within_image(self, h, w):
        rs = regions(blank(h, w))
        assert len(rs) == 7
        for r in rs:
            assert 0 <= r.top and r.top + r.height <= h
            assert 0 <= r.left and r.left + r.width <= w
            assert r.height >= 1 and r.width >= 1
        # strips overlap by about half a strip
        v = list(rs)[1:4]
        assert v[0].top + v[0].height > v[1].top
        assert v[1].top + v[1].height > v[2].top

    def test_exhaustive_size_sweep(self):
        for n in range(4, 101):
            rs = regions(blank(n, n))
            for r in rs:
                assert r.top >= 0 and r.top + r.height <= n
                assert r.left >= 0 and r.left + r.width <= n
            strips = list(rs)[1:4]
            assert strips[0].height == (n + 1) // 2
            assert strips[1].top == n // 4
            assert strips[2].top == n - (n + 1) // 2

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            regions(blank(3, 10))


class TestDescribe7:
    def test_dimensions(self):
        img = GrayImage(np.random.default_rng(0).random((64, 64)))
        for kind in DescriptorKind:
            d = describe7(img, kind)
            assert d.pyramid
            assert d.values.size == 7 * base_dim(kind)

    def test_constant_zero_for_gradient_kinds(self):
        img = blank()
        for kind in (DescriptorKind.HOG, DescriptorKind.SIFT,
                     DescriptorKind.SURF, DescriptorKind.GIST):
            assert not describe7(img, kind).values.any()

    def test_prefix_is_base_descriptor_bitwise(self):
        img = GrayImage(np.random.default_rng(5).random((64, 64)))
        for kind in DescriptorKind:
            d7 = describe7(img, kind)
            d1 = describe(img, kind)
            n = base_dim(kind)
            assert np.array_equal(d7.values[:n], d1.values)

    def test_prefix_holds_for_noncanonical_input(self):
        img = GrayImage(np.random.default_rng(6).random((90, 70)))
        d7 = describe7(img, DescriptorKind.SIFT)
        d1 = describe(img, DescriptorKind.SIFT)
        assert np.array_equal(d7.values[:128], d1.values)

    def test_dot_pair_differs_most_through_strips(self):
        # same glyph except a dot in the top vs the bottom half: strip
        # segments must separate the pair more than the full-window segment
        def glyph(dot_row):
            a = np.ones((64, 64))
            a[30:34, 16:48] = 0.0                      # shared horizontal bar
            a[dot_row:dot_row + 4, 30:34] = 0.0        # the moving dot
            return GrayImage(a)

        top = glyph(10)
        bottom = glyph(52)
        d_top = describe7(top, DescriptorKind.SIFT).values
        d_bot = describe7(bottom, DescriptorKind.SIFT).values
        full_d = np.linalg.norm(d_top[:128] - d_bot[:128])
        x7_d = np.linalg.norm(d_top - d_bot)
        assert x7_d > full_d

    def test_order_deterministic(self):
        img = GrayImage(np.random.default_rng(7).random((64, 64)))
        a = describe7(img, DescriptorKind.LBP).values
        b = describe7(img, DescriptorKind.LBP).values
        assert np.array_equal(a, b)
