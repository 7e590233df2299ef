"""Overlapping spatial partitioning: one base descriptor becomes seven.

A window is described by the full image plus three half-height strips and
three half-width strips, consecutive strips overlapping by about half a
strip.  Concatenating the seven per-region descriptors (each region resized
back to the canonical window first) yields the "7" variant of a descriptor;
its first segment is bit-for-bit the base descriptor of the full window.

Region order is fixed: [full, top, vertical-middle, bottom, left,
horizontal-middle, right].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .descriptors import (
    DEFAULT_PARAMS,
    Descriptor,
    DescriptorKind,
    DescriptorParams,
    GaborBank,
    describe,
)
from .errors import ImageTooSmall
from .imagecore import GrayImage

__all__ = ["Region", "RegionSet", "regions", "describe7"]


class Region(NamedTuple):
    top: int
    left: int
    height: int
    width: int


@dataclass(frozen=True)
class RegionSet:
    """The seven sub-windows, region 0 being the full window."""

    regions: tuple

    def __iter__(self):
        return iter(self.regions)

    def __len__(self):
        return len(self.regions)

    def __getitem__(self, i):
        return self.regions[i]


def regions(img: GrayImage) -> RegionSet:
    """Sub-window bounds for a W x H image.

    Strips are ceil(extent/2) long with offsets 0, floor(extent/4) and
    extent - ceil(extent/2), which for even sizes gives exactly 50% overlap.
    """
    w, h = img.width, img.height
    if w < 4 or h < 4:
        raise ImageTooSmall(f"partitioning needs at least 4x4, got {w}x{h}")
    sh = (h + 1) // 2
    sw = (w + 1) // 2
    regs = (
        Region(0, 0, h, w),
        Region(0, 0, sh, w),
        Region(h // 4, 0, sh, w),
        Region(h - sh, 0, sh, w),
        Region(0, 0, h, sw),
        Region(0, w // 4, h, sw),
        Region(0, w - sw, h, sw),
    )
    return RegionSet(regs)


def _crop(img: GrayImage, r: Region) -> GrayImage:
    return GrayImage(img.pixels[r.top:r.top + r.height, r.left:r.left + r.width])


def describe7(img: GrayImage, kind: DescriptorKind, bank: GaborBank | None = None,
              params: DescriptorParams = DEFAULT_PARAMS) -> Descriptor:
    """Concatenate the base descriptor of all seven regions."""
    parts = [
        describe(_crop(img, region), kind, bank, params).values
        for region in regions(img)
    ]
    return Descriptor(kind, np.concatenate(parts), pyramid=True)
