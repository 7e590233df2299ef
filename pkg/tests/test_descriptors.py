import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from glyphdesc.descriptors import (
    Descriptor,
    DescriptorKind,
    base_dim,
    default_gabor_bank,
    describe,
    gist,
    hog,
    lbp,
    make_gabor_bank,
    sift_global,
    surf_global,
)
from glyphdesc.errors import ImageTooSmall, WrongWindowSize
from glyphdesc.imagecore import GrayImage


def window(seed=0):
    return GrayImage(np.random.default_rng(seed).random((64, 64)))


def dyadic_window(seed=0):
    return GrayImage(np.random.default_rng(seed).integers(0, 256, (64, 64)) / 256.0)



class TestDescriptorType:
    def test_dimension_contract(self):
        dims = {DescriptorKind.HOG: 1764, DescriptorKind.SIFT: 128,
                DescriptorKind.SURF: 64, DescriptorKind.LBP: 59,
                DescriptorKind.GIST: 512}
        for kind, d in dims.items():
            assert base_dim(kind) == d

    def test_bad_length_is_construction_error(self):
        with pytest.raises(ValueError, match="128"):
            Descriptor(DescriptorKind.SIFT, np.zeros(127))
        with pytest.raises(ValueError):
            Descriptor(DescriptorKind.LBP, np.zeros(59 * 7), pyramid=False)

    def test_negative_rejected_for_histogram_kinds(self):
        v = np.zeros(59)
        v[0] = -0.1
        with pytest.raises(ValueError, match="nonnegative"):
            Descriptor(DescriptorKind.LBP, v)

    def test_nonfinite_rejected(self):
        v = np.zeros(64)
        v[1] = np.inf
        with pytest.raises(ValueError):
            Descriptor(DescriptorKind.SURF, v)


class TestHog:
    def test_constant_is_zero(self):
        d = hog(GrayImage(np.full((64, 64), 0.42)))
        assert d.values.shape == (1764,)
        assert not d.values.any()

    def test_additive_shift_invariance(self):
        img = dyadic_window(1)
        shifted = GrayImage(img.pixels + 0.5)
        assert np.array_equal(hog(img).values, hog(shifted).values)
        near = GrayImage(window(1).pixels + 0.1)
        assert np.allclose(hog(window(1)).values, hog(near).values, atol=1e-9)

    def test_vertical_step_edge_single_bin(self):
        a = np.zeros((64, 64))
        a[:, 32:] = 1.0
        d = hog(GrayImage(a))
        mass = d.values.reshape(49, 4, 9).sum(axis=(0, 1))
        assert mass[0] > 0
        assert np.allclose(mass[1:], 0.0)
        assert np.allclose(d.values, oracles.naive_hog(a), atol=1e-9)

    def test_matches_naive_oracle(self):
        img = window(7)
        assert np.allclose(hog(img).values, oracles.naive_hog(img.pixels), atol=1e-9)

    def test_wrong_size(self):
        with pytest.raises(WrongWindowSize):
            hog(GrayImage(np.zeros((32, 64))))


class TestSift:
    def test_constant_is_zero(self):
        assert not sift_global(GrayImage(np.full((64, 64), 0.9))).values.any()

    def test_unit_norm_for_nonflat(self):
        for seed in (1, 2, 3):
            d = sift_global(window(seed))
            assert np.linalg.norm(d.values) == pytest.approx(1.0, abs=1e-6)

    def test_matches_naive_oracle(self):
        img = window(21)
        assert np.allclose(sift_global(img).values,
                           oracles.naive_sift(img.pixels), atol=1e-6)

    def test_additive_shift_invariance(self):
        img = dyadic_window(4)
        assert np.array_equal(sift_global(img).values,
                              sift_global(GrayImage(img.pixels + 0.25)).values)


class TestSurf:
    def test_constant_is_zero(self):
        assert not surf_global(GrayImage(np.full((64, 64), 0.1))).values.any()

    def test_x_ramp_cell_signs(self):
        a = np.tile(np.arange(64.0) / 64.0, (64, 1))
        d = surf_global(GrayImage(a))
        cells = d.values.reshape(16, 4)
        norm = np.linalg.norm(d.values)
        assert norm > 0
        # per cell: sum dx equals sum |dx| > 0 and sum dy is 0
        assert np.all(cells[:, 0] > 0)
        assert np.allclose(cells[:, 0], cells[:, 1], atol=1e-12)
        assert np.allclose(cells[:, 2], 0.0, atol=1e-12)

    def test_matches_naive_oracle(self):
        img = window(22)
        assert np.allclose(surf_global(img).values,
                           oracles.naive_surf(img.pixels), atol=1e-9)

    def test_additive_shift_invariance(self):
        img = dyadic_window(5)
        assert np.array_equal(surf_global(img).values,
                              surf_global(GrayImage(img.pixels + 0.25)).values)


class TestLbp:
    def test_constant_codes_to_255(self):
        d = lbp(GrayImage(np.full((8, 8), 0.5)))
        import glyphdesc.descriptors as D
        assert d.values[D._LBP_LUT[255]] == pytest.approx(1.0)
        assert d.values.sum() == pytest.approx(1.0)

    @given(st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_histogram_is_probability_vector(self, seed):
        img = GrayImage(np.random.default_rng(seed).random((10, 10)))
        v = lbp(img).values
        assert np.all(v >= 0)
        assert v.sum() == pytest.approx(1.0, abs=1e-9)

    def test_matches_naive_oracle_exactly(self):
        img = GrayImage(np.random.default_rng(23).random((10, 10)))
        assert np.array_equal(lbp(img).values, oracles.naive_lbp(img.pixels))

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            lbp(GrayImage(np.ones((2, 8))))


class TestGaborBank:
    def test_bank_shape_and_zero_mean(self):
        bank = make_gabor_bank()
        assert len(bank) == 32
        for k in bank.kernels:
            assert abs(k.sum()) < 1e-9
            assert k.shape[0] % 2 == 1 and k.shape[0] == k.shape[1]

    def test_orientations_uniform(self):
        bank = make_gabor_bank()
        got = sorted(set(bank.orientations))
        assert np.allclose(got, [i * np.pi / 8 for i in range(8)])

    def test_orthogonal_orientations_respond_differently(self):
        bank = default_gabor_bank()
        y, x = np.mgrid[0:64, 0:64].astype(float)
        wl = 8.0
        grating = GrayImage(0.5 + 0.4 * np.cos(2 * np.pi * x / wl))
        d = gist(grating, bank).values.reshape(32, 16)
        energy = (d**2).sum(axis=1)
        idx_matched = 8 * 1 + 0       # wavelength 8, orientation 0
        idx_ortho = 8 * 1 + 4         # wavelength 8, orientation pi/2
        assert energy[idx_matched] > 10.0 * energy[idx_ortho]


class TestGist:
    def test_constant_is_zero(self):
        assert not gist(GrayImage(np.full((64, 64), 0.6))).values.any()

    def test_dc_shift_invariance(self):
        img = window(9)
        shifted = GrayImage(img.pixels + 0.2)
        assert np.allclose(gist(img).values, gist(shifted).values, atol=1e-9)

    def test_matched_grating_dominates(self):
        bank = default_gabor_bank()
        y, x = np.mgrid[0:64, 0:64].astype(float)
        theta, wl = np.pi / 4, 16.0
        phase = 2 * np.pi * (x * np.cos(theta) + y * np.sin(theta)) / wl
        grating = GrayImage(0.5 + 0.4 * np.cos(phase))
        d = gist(grating, bank).values.reshape(32, 16)
        means = d.mean(axis=1)
        idx = 8 * 2 + 2               # wavelength 16, orientation pi/4
        others = np.delete(means, idx)
        assert means[idx] > others.max()

    def test_matches_direct_correlation_oracle(self):
        img = window(33)
        bank = default_gabor_bank()
        assert np.allclose(gist(img, bank).values,
                           oracles.naive_gist(img.pixels, bank.kernels), atol=1e-6)


class TestDescribe:
    def test_determinism(self):
        img = window(12)
        for kind in DescriptorKind:
            a = describe(img, kind).values
            b = describe(img, kind).values
            assert np.array_equal(a, b)

    def test_resizes_noncanonical_input(self):
        img = GrayImage(np.random.default_rng(2).random((96, 80)))
        for kind in DescriptorKind:
            d = describe(img, kind)
            assert d.values.size == base_dim(kind)

    def test_translation_keeps_hog_vote_mass(self):
        # glyph moved by (8, 8) px: total unnormalized orientation-vote
        # mass shifts between cells but is conserved up to boundary effects
        from glyphdesc.imagecore import gradients
        canvas = np.ones((64, 64))
        canvas[20:36, 20:36] = 0.0
        moved = np.ones((64, 64))
        moved[28:44, 28:44] = 0.0
        m1 = gradients(GrayImage(canvas)).magnitude.sum()
        m2 = gradients(GrayImage(moved)).magnitude.sum()
        assert abs(m1 - m2) / m1 < 0.02
