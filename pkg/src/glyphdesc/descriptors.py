"""Five window-based descriptors over a canonical 64x64 character window.

Every descriptor maps a grayscale window to a fixed-length vector:

  HOG   1764   gradient histograms over 8x8-pixel cells, 2x2-cell blocks
  SIFT   128   one whole-window keypoint region, 4x4 cells x 8 bins
  SURF    64   Haar box-filter responses summarized per 4x4 cell
  LBP     59   uniform local binary pattern histogram
  GIST   512   mean Gabor response magnitude per 4x4 cell, 32 filters

Vector layouts (fixed; the on-disk descriptor cache depends on them):

  HOG:  blocks row-major over the 7x7 block grid, cells row-major inside
        each 2x2 block, then 9 orientation bins.
  SIFT: cells row-major over the 4x4 grid, then 8 orientation bins.
  SURF: cells row-major, per cell (sum dx, sum |dx|, sum dy, sum |dy|).
  LBP:  58 uniform codes in ascending numeric order, then the catch-all bin.
  GIST: filters ordered scale-major (wavelength 4, 8, 16, 32) then by
        orientation k*pi/8 (k = 0..7); 16 cell means row-major per filter.

All functions are pure; the Gabor bank is built once and shared read-only.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall, WrongWindowSize
from .imagecore import GrayImage, gradients, resize_bilinear

__all__ = [
    "CANONICAL_SIZE",
    "DescriptorKind",
    "Descriptor",
    "DescriptorParams",
    "DEFAULT_PARAMS",
    "GaborBank",
    "base_dim",
    "hog",
    "sift_global",
    "surf_global",
    "lbp",
    "gist",
    "make_gabor_bank",
    "default_gabor_bank",
    "describe",
]

CANONICAL_SIZE = 64


class DescriptorKind(enum.Enum):
    HOG = "hog"
    SIFT = "sift"
    SURF = "surf"
    LBP = "lbp"
    GIST = "gist"


_BASE_DIMS = {
    DescriptorKind.HOG: 1764,
    DescriptorKind.SIFT: 128,
    DescriptorKind.SURF: 64,
    DescriptorKind.LBP: 59,
    DescriptorKind.GIST: 512,
}

# descriptors whose construction guarantees nonnegative entries
_NONNEGATIVE = (DescriptorKind.HOG, DescriptorKind.SIFT, DescriptorKind.LBP)


def base_dim(kind: DescriptorKind) -> int:
    return _BASE_DIMS[kind]


@dataclass(frozen=True)
class Descriptor:
    """Fixed-length feature vector with a kind tag.

    A violated length is a construction error, never silent.
    """

    kind: DescriptorKind
    values: np.ndarray
    pyramid: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = _BASE_DIMS[self.kind] * (7 if self.pyramid else 1)
        if v.ndim != 1 or v.size != expected:
            raise ValueError(
                f"{self.kind.value}{'7' if self.pyramid else ''} descriptor must have "
                f"{expected} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("descriptor values must be finite")
        if self.kind in _NONNEGATIVE and np.any(v < 0):
            raise ValueError(f"{self.kind.value} descriptor values must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def name(self) -> str:
        return self.kind.value + ("7" if self.pyramid else "")


@dataclass(frozen=True)
class DescriptorParams:
    """Named constants of every descriptor, collected so alternates can be swept.

    The vector-length contracts above hold for the defaults; changing a
    structural constant (cell or grid size, bin count) changes dimensions.
    """

    hog_cell: int = 8
    hog_block: int = 2
    hog_bins: int = 9
    hog_clip: float = 0.2
    hog_eps: float = 1e-6
    sift_grid: int = 4
    sift_bins: int = 8
    sift_sigma: float = 32.0
    sift_clip: float = 0.2
    surf_filter: int = 8
    surf_grid: int = 4
    gist_grid: int = 4
    gist_wavelengths: tuple = (4.0, 8.0, 16.0, 32.0)
    gist_orientations: int = 8
    gist_sigma_per_wavelength: float = 0.56
    gist_aspect: float = 0.5


DEFAULT_PARAMS = DescriptorParams()


def _require_window(img: GrayImage):
    if img.width != CANONICAL_SIZE or img.height != CANONICAL_SIZE:
        raise WrongWindowSize(
            f"expected {CANONICAL_SIZE}x{CANONICAL_SIZE} window, got {img.width}x{img.height}"
        )


def _l2_guarded(v: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < floor:
        return np.zeros_like(v)
    return v / n


def hog(img: GrayImage, params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Histogram of oriented gradients over overlapping 2x2-cell blocks.

    Votes split bilinearly between the two nearest orientation bins
    (bin centers at k*pi/nbins, circular over [0, pi)).  Each block is
    L2-normalized with epsilon, clipped at 0.2, and renormalized.
    """
    _require_window(img)
    cell, nbins = params.hog_cell, params.hog_bins
    ncells = CANONICAL_SIZE // cell
    g = gradients(img)

    binw = np.pi / nbins
    t = g.orientation / binw
    f = np.floor(t)
    b0 = f.astype(int) % nbins
    b1 = (b0 + 1) % nbins
    w1 = t - f
    w0 = 1.0 - w1

    rows, cols = np.indices((CANONICAL_SIZE, CANONICAL_SIZE))
    cy, cx = rows // cell, cols // cell
    hist = np.zeros((ncells, ncells, nbins))
    np.add.at(hist, (cy, cx, b0), g.magnitude * w0)
    np.add.at(hist, (cy, cx, b1), g.magnitude * w1)

    nb = params.hog_block
    blocks = np.lib.stride_tricks.sliding_window_view(hist, (nb, nb, nbins))[:, :, 0]
    nblocks = ncells - nb + 1
    vecs = blocks.reshape(nblocks, nblocks, nb * nb * nbins).copy()

    eps = params.hog_eps
    norms = np.sqrt(np.sum(vecs**2, axis=-1, keepdims=True) + eps**2)
    vecs = np.minimum(vecs / norms, params.hog_clip)
    norms = np.sqrt(np.sum(vecs**2, axis=-1, keepdims=True) + eps**2)
    vecs = vecs / norms
    return Descriptor(DescriptorKind.HOG, vecs.reshape(-1))


def sift_global(img: GrayImage, params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Whole-window keypoint descriptor: 4x4 cells of orientation histograms.

    Magnitude votes are weighted by a Gaussian centered on the window and
    shared bilinearly between the (up to four) spatially nearest cells;
    each vote lands in the single orientation bin containing its angle.
    """
    _require_window(img)
    grid, nbins = params.sift_grid, params.sift_bins
    cellsz = CANONICAL_SIZE // grid
    g = gradients(img)

    c = (CANONICAL_SIZE - 1) / 2.0
    rows, cols = np.indices((CANONICAL_SIZE, CANONICAL_SIZE))
    gauss = np.exp(-((cols - c) ** 2 + (rows - c) ** 2) / (2.0 * params.sift_sigma**2))
    contrib = (g.magnitude * gauss).ravel()

    t = g.orientation * (nbins / np.pi)
    bins = (np.floor(t).astype(int) % nbins).ravel()

    # cell-space coordinates; cell centers sit at integer positions 0..grid-1
    u = (cols.ravel() + 0.5) / cellsz - 0.5
    v = (rows.ravel() + 0.5) / cellsz - 0.5
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    fu = u - u0
    fv = v - v0

    hist = np.zeros((grid, grid, nbins))
    for dy, wy in ((0, 1.0 - fv), (1, fv)):
        for dx, wx in ((0, 1.0 - fu), (1, fu)):
            cyy = v0 + dy
            cxx = u0 + dx
            ok = (cyy >= 0) & (cyy < grid) & (cxx >= 0) & (cxx < grid)
            np.add.at(hist, (cyy[ok], cxx[ok], bins[ok]), contrib[ok] * wy[ok] * wx[ok])

    vec = hist.reshape(-1)
    n = float(np.linalg.norm(vec))
    if n < 1e-12:
        return Descriptor(DescriptorKind.SIFT, np.zeros_like(vec))
    vec = np.minimum(vec / n, params.sift_clip)
    vec = vec / np.linalg.norm(vec)
    return Descriptor(DescriptorKind.SIFT, vec)


def _haar_responses(img: GrayImage, size: int):
    """Per-pixel dx/dy box-filter responses, zero where the filter leaves the image.

    The size x size filter at pixel (r, c) covers rows [r-s/2, r+s/2) and
    columns [c-s/2, c+s/2); dx subtracts its left half from its right half,
    dy subtracts the top half from the bottom half, both divided by the
    filter area.  Intensities are mean-centered first: the responses are
    shift-invariant, and centering keeps the summed-area cancellation from
    leaving float residue on flat images.
    """
    h, w = img.height, img.width
    half = size // 2
    a = img.pixels - img.pixels.mean()
    s = np.zeros((h + 1, w + 1))
    s[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    dx = np.zeros((h, w))
    dy = np.zeros((h, w))
    if h < size or w < size:
        return dx, dy
    rr = np.arange(half, h - half + 1)
    cc = np.arange(half, w - half + 1)

    def rect(rlo, rhi, clo, chi):
        return (s[np.ix_(rhi, chi)] - s[np.ix_(rlo, chi)]
                - s[np.ix_(rhi, clo)] + s[np.ix_(rlo, clo)])

    area = float(size * size)
    right = rect(rr - half, rr + half, cc, cc + half)
    left = rect(rr - half, rr + half, cc - half, cc)
    bottom = rect(rr, rr + half, cc - half, cc + half)
    top = rect(rr - half, rr, cc - half, cc + half)
    dx[half:h - half + 1, half:w - half + 1] = (right - left) / area
    dy[half:h - half + 1, half:w - half + 1] = (bottom - top) / area
    return dx, dy


def surf_global(img: GrayImage, params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Box-filter responses summarized by per-cell sums instead of histograms."""
    _require_window(img)
    grid = params.surf_grid
    cellsz = CANONICAL_SIZE // grid
    dx, dy = _haar_responses(img, params.surf_filter)

    def cellsum(a):
        return a.reshape(grid, cellsz, grid, cellsz).sum(axis=(1, 3))

    feats = np.stack(
        [cellsum(dx), cellsum(np.abs(dx)), cellsum(dy), cellsum(np.abs(dy))], axis=-1
    )
    return Descriptor(DescriptorKind.SURF, _l2_guarded(feats.reshape(-1)))


# ring of 8 radius-1 neighbors, clockwise from the top-left
_LBP_RING = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _uniform_lut() -> np.ndarray:
    """Map each 8-bit code to its histogram bin: 58 uniform codes then a catch-all."""
    lut = np.full(256, 58, dtype=np.int64)
    nxt = 0
    for code in range(256):
        rot = ((code << 1) | (code >> 7)) & 0xFF
        if bin(code ^ rot).count("1") <= 2:
            lut[code] = nxt
            nxt += 1
    assert nxt == 58
    return lut


_LBP_LUT = _uniform_lut()


def lbp(img: GrayImage, params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Uniform local binary pattern histogram, L1-normalized.

    Bit i is set iff the i-th ring neighbor is >= the center (ties set the
    bit, so flat regions code to 255); the first neighbor is the most
    significant bit.
    """
    if img.height < 3 or img.width < 3:
        raise ImageTooSmall(f"lbp needs at least 3x3, got {img.width}x{img.height}")
    a = img.pixels
    center = a[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for i, (dr, dc) in enumerate(_LBP_RING):
        nbr = a[1 + dr:a.shape[0] - 1 + dr, 1 + dc:a.shape[1] - 1 + dc]
        codes |= (nbr >= center).astype(np.int64) << (7 - i)
    hist = np.bincount(_LBP_LUT[codes.ravel()], minlength=59).astype(np.float64)
    return Descriptor(DescriptorKind.LBP, hist / codes.size)


@dataclass(frozen=True, eq=False)
class GaborBank:
    """32 zero-mean Gabor kernels: 4 wavelengths x 8 orientations, scale-major.

    Carries precomputed kernel spectra for fast filtering of canonical
    windows; kernels and spectra are read-only.
    """

    kernels: tuple
    wavelengths: tuple
    orientations: tuple
    sigmas: tuple
    aspect: float
    fft_pads: tuple      # per scale: padding used for reflect-101 filtering
    fft_spectra: tuple   # per scale: conjugated rfft2 of the 8 kernels

    def __len__(self):
        return len(self.kernels)


def _gabor_kernel(wavelength: float, theta: float, sigma: float, aspect: float) -> np.ndarray:
    size = int(round(4.0 * sigma + 1.0))
    if size % 2 == 0:
        size += 1
    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    xr = x * np.cos(theta) + y * np.sin(theta)
    yr = -x * np.sin(theta) + y * np.cos(theta)
    k = np.exp(-(xr**2 + (aspect * yr) ** 2) / (2.0 * sigma**2)) * np.cos(
        2.0 * np.pi * xr / wavelength
    )
    k -= k.mean()
    return k


def make_gabor_bank(params: DescriptorParams = DEFAULT_PARAMS) -> GaborBank:
    """Build the filter bank and the spectra used on canonical windows."""
    kernels, wavelengths, orientations, sigmas = [], [], [], []
    pads, spectra = [], []
    northo = params.gist_orientations
    for wl in params.gist_wavelengths:
        sigma = params.gist_sigma_per_wavelength * wl
        scale_kernels = []
        for k in range(northo):
            theta = k * np.pi / northo
            kern = _gabor_kernel(wl, theta, sigma, params.gist_aspect)
            kern.setflags(write=False)
            scale_kernels.append(kern)
            kernels.append(kern)
            wavelengths.append(wl)
            orientations.append(theta)
            sigmas.append(sigma)
        pad = scale_kernels[0].shape[0] // 2
        size = CANONICAL_SIZE + 2 * pad
        spec = np.stack(
            [np.conj(np.fft.rfft2(kern, s=(size, size))) for kern in scale_kernels]
        )
        spec.setflags(write=False)
        pads.append(pad)
        spectra.append(spec)
    return GaborBank(
        kernels=tuple(kernels),
        wavelengths=tuple(wavelengths),
        orientations=tuple(orientations),
        sigmas=tuple(sigmas),
        aspect=params.gist_aspect,
        fft_pads=tuple(pads),
        fft_spectra=tuple(spectra),
    )


@functools.lru_cache(maxsize=1)
def default_gabor_bank() -> GaborBank:
    return make_gabor_bank()


def gist(img: GrayImage, bank: GaborBank | None = None,
         params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Mean absolute Gabor response within each 4x4 cell, 32 filters.

    Filtering is correlation with reflect-101 borders, evaluated in the
    Fourier domain with the bank's precomputed spectra.
    """
    _require_window(img)
    if bank is None:
        bank = default_gabor_bank()
    grid = params.gist_grid
    cellsz = CANONICAL_SIZE // grid
    northo = params.gist_orientations
    feats = np.empty((len(bank.kernels), grid * grid))
    for s, (pad, spec) in enumerate(zip(bank.fft_pads, bank.fft_spectra)):
        padded = np.pad(img.pixels, pad, mode="reflect")
        size = padded.shape[0]
        freq = np.fft.rfft2(padded)
        for j in range(northo):
            resp = np.fft.irfft2(freq * spec[j], s=(size, size))
            mag = np.abs(resp[:CANONICAL_SIZE, :CANONICAL_SIZE])
            cells = mag.reshape(grid, cellsz, grid, cellsz).mean(axis=(1, 3))
            feats[s * northo + j] = cells.reshape(-1)
    return Descriptor(DescriptorKind.GIST, _l2_guarded(feats.reshape(-1)))


_DISPATCH = {
    DescriptorKind.HOG: hog,
    DescriptorKind.SIFT: sift_global,
    DescriptorKind.SURF: surf_global,
    DescriptorKind.LBP: lbp,
    DescriptorKind.GIST: gist,
}


def describe(img: GrayImage, kind: DescriptorKind, bank: GaborBank | None = None,
             params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Resize to the canonical window if needed and apply the base descriptor."""
    if img.width != CANONICAL_SIZE or img.height != CANONICAL_SIZE:
        img = resize_bilinear(img, CANONICAL_SIZE, CANONICAL_SIZE)
    if kind is DescriptorKind.GIST:
        return gist(img, bank, params)
    return _DISPATCH[kind](img, params)
