"""Grayscale image primitives shared by the descriptors and the form pipeline.

Images are immutable 2-D float64 rasters with intensities nominally in
[0, 1] (8-bit inputs are divided by 255 on load).  All operations here are
pure functions and safe to call concurrently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    EvenKernel,
    ImageTooSmall,
    RectOutOfBounds,
    SingularHomography,
)

__all__ = [
    "GrayImage",
    "GradientField",
    "IntegralImage",
    "Homography",
    "gradients",
    "integral_image",
    "box_sum",
    "resize_bilinear",
    "convolve",
    "warp_projective",
    "read_pgm",
    "write_pgm",
]


def _frozen_array(a, dtype=np.float64):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GrayImage:
    """2-D grayscale raster, row-major, intensities as float64."""

    pixels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.pixels, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"expected a 2-D raster with positive size, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("image intensities must be finite")
        object.__setattr__(self, "pixels", _frozen_array(a))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flattened view of the intensities."""
        return self.pixels.reshape(-1)

    @staticmethod
    def from_flat(data, width: int, height: int) -> "GrayImage":
        a = np.asarray(data, dtype=np.float64)
        if a.size != width * height:
            raise ValueError(f"data length {a.size} != {width}x{height}")
        return GrayImage(a.reshape(height, width))


@dataclass(frozen=True)
class GradientField:
    """Per-pixel derivatives with magnitude and unsigned orientation in [0, pi)."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray


@dataclass(frozen=True)
class IntegralImage:
    """(height+1) x (width+1) summed-area table; row 0 and column 0 are zero."""

    table: np.ndarray

    @property
    def width(self) -> int:
        return self.table.shape[1] - 1

    @property
    def height(self) -> int:
        return self.table.shape[0] - 1


@dataclass(frozen=True)
class Homography:
    """3x3 projective transform, normalized so the bottom-right entry is 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {m.shape}")
        if abs(m[2, 2]) < 1e-12:
            raise SingularHomography("bottom-right entry is (near) zero; cannot normalize")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= 1e-12:
            raise SingularHomography("matrix is not invertible")
        object.__setattr__(self, "matrix", _frozen_array(m))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map an (n, 2) array of (x, y) points through the transform."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ones = np.ones((pts.shape[0], 1))
        ph = np.hstack([pts, ones]) @ self.matrix.T
        return ph[:, :2] / ph[:, 2:3]

    @staticmethod
    def identity() -> "Homography":
        return Homography(np.eye(3))


def gradients(img: GrayImage) -> GradientField:
    """Central differences on the interior, one-sided at the borders.

    Orientation is folded to the unsigned range [0, pi) so that inverting
    ink and background does not change it.
    """
    if img.height < 3 or img.width < 3:
        raise ImageTooSmall(f"gradients need at least 3x3, got {img.width}x{img.height}")
    gy, gx = np.gradient(img.pixels)
    mag = np.hypot(gx, gy)
    ori = np.mod(np.arctan2(gy, gx), np.pi)
    # exact-pi values (from tiny negative angles) fold back to zero
    ori[ori >= np.pi] = 0.0
    return GradientField(
        gx=_frozen_array(gx),
        gy=_frozen_array(gy),
        magnitude=_frozen_array(mag),
        orientation=_frozen_array(ori),
    )


def integral_image(img: GrayImage) -> IntegralImage:
    """Summed-area table: entry (i, j) sums all pixels with row < i, col < j."""
    h, w = img.pixels.shape
    table = np.zeros((h + 1, w + 1), dtype=np.float64)
    table[1:, 1:] = img.pixels.cumsum(axis=0).cumsum(axis=1)
    return IntegralImage(_frozen_array(table))


def box_sum(ii: IntegralImage, top: int, left: int, height: int, width: int) -> float:
    """Sum of the rectangle [top, top+height) x [left, left+width)."""
    if height < 0 or width < 0:
        raise RectOutOfBounds(f"negative rectangle extent {height}x{width}")
    if top < 0 or left < 0 or top + height > ii.height or left + width > ii.width:
        raise RectOutOfBounds(
            f"rect (top={top}, left={left}, h={height}, w={width}) exceeds "
            f"{ii.width}x{ii.height} image"
        )
    t = ii.table
    return float(t[top + height, left + width] - t[top, left + width]
                 - t[top + height, left] + t[top, left])


def resize_bilinear(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resample with half-pixel-centered sampling."""
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    src = img.pixels
    h, w = src.shape
    if (w, h) == (width, height):
        return GrayImage(src)
    xs = (np.arange(width) + 0.5) * (w / width) - 0.5
    ys = (np.arange(height) + 0.5) * (h / height) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return GrayImage(out)


def convolve(img: GrayImage, kernel: np.ndarray) -> GrayImage:
    """Correlate the image with an odd-sized kernel, reflect-101 borders."""
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise EvenKernel(f"kernel must be 2-D, got {k.ndim}-D")
    if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise EvenKernel(f"kernel must be odd-sized in both dimensions, got {k.shape}")
    out = ndimage.correlate(img.pixels, k, mode="mirror")
    return GrayImage(out)


def warp_projective(img: GrayImage, hom: Homography, out_width: int,
                    out_height: int) -> GrayImage:
    """Inverse-map the output grid through the homography, bilinear sampling.

    Pixels that map outside the source are filled white (1.0).
    """
    if abs(np.linalg.det(hom.matrix)) <= 1e-12:
        raise SingularHomography("homography is not invertible")
    hinv = np.linalg.inv(hom.matrix)
    src = img.pixels
    h, w = src.shape
    xx, yy = np.meshgrid(np.arange(out_width, dtype=np.float64),
                         np.arange(out_height, dtype=np.float64))
    denom = hinv[2, 0] * xx + hinv[2, 1] * yy + hinv[2, 2]
    safe = np.abs(denom) > 1e-12
    denom = np.where(safe, denom, 1.0)
    xs = (hinv[0, 0] * xx + hinv[0, 1] * yy + hinv[0, 2]) / denom
    ys = (hinv[1, 0] * xx + hinv[1, 1] * yy + hinv[1, 2]) / denom
    inside = safe & (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    val = (src[y0, x0] * (1 - fx) * (1 - fy) + src[y0, x1] * fx * (1 - fy)
           + src[y1, x0] * (1 - fx) * fy + src[y1, x1] * fx * fy)
    out = np.where(inside, val, 1.0)
    return GrayImage(out)


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*(\S+)")


def _read_pgm_tokens(buf: bytes, count: int):
    """Read `count` whitespace/comment-delimited header tokens, return (tokens, offset)."""
    pos = 0
    tokens = []
    for _ in range(count):
        m = _PGM_TOKEN.match(buf, pos)
        if not m:
            raise ValueError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pgm(path) -> GrayImage:
    """Load a binary 8-bit grayscale PGM (P5).  Color formats are rejected."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] == b"P6":
        raise ValueError(f"{path}: color PPM images are rejected, convert upstream")
    if buf[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    (magic, w, h, maxval), offset = _read_pgm_tokens(buf, 4)
    width, height, maxval = int(w), int(h), int(maxval)
    if maxval > 255 or maxval < 1:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    # exactly one whitespace byte separates the header from the raster
    offset += 1
    raster = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=offset)
    if raster.size != width * height:
        raise ValueError(f"{path}: truncated raster")
    return GrayImage(raster.reshape(height, width).astype(np.float64) / 255.0)


def write_pgm(img: GrayImage, path) -> None:
    """Write a binary 8-bit PGM; intensities are clipped to [0, 1]."""
    raster = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(raster.tobytes())
