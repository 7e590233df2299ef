"""Scanned-form digitization: corner detection, deskewing, cell cropping.

A filled form is located by its four strongest Harris corners (one per
image quadrant), rectified with a projective transform, and cut into cells
that are shrunk by a border margin and resized to the canonical window.
Heuristic QA flags approximate a manual verification pass; they are
advisory and never delete anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    CornersNotFound,
    DegenerateConfiguration,
    ImageTooSmall,
    SingularHomography,
    SpecMismatch,
)
from .imagecore import (
    GrayImage,
    Homography,
    convolve,
    gradients,
    resize_bilinear,
    warp_projective,
)

__all__ = [
    "Corner",
    "GridSpec",
    "harris_response",
    "harris",
    "find_form_corners",
    "estimate_homography",
    "deskew",
    "crop_cells",
    "otsu_threshold",
    "ink_mask",
    "connected_components",
    "qa_flags",
    "synthetic_form",
]

HARRIS_K = 0.04
HARRIS_SIGMA = 1.5
CELL_SIZE = 64

FLAG_MULTI_COMPONENT = "MultiComponent"
FLAG_NEAR_EMPTY = "NearEmpty"
FLAG_LOW_CONTRAST = "LowContrast"


@dataclass(frozen=True)
class Corner:
    x: float
    y: float
    response: float


@dataclass(frozen=True)
class GridSpec:
    """Cell grid layout of the canonical (deskewed) form."""

    rows: int
    cols: int
    form_width: int
    form_height: int
    margin: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        cell_w = self.form_width / self.cols
        cell_h = self.form_height / self.rows
        if self.margin < 0 or 2 * self.margin >= min(cell_w, cell_h):
            raise ValueError(
                f"margin {self.margin} must be below half the cell dimension"
            )


def _gaussian_kernel2d(sigma: float) -> np.ndarray:
    size = int(round(4.0 * sigma + 1.0))
    if size % 2 == 0:
        size += 1
    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    k = np.exp(-(x**2 + y**2) / (2.0 * sigma**2))
    return k / k.sum()


def harris_response(img: GrayImage, k: float = HARRIS_K,
                    sigma: float = HARRIS_SIGMA) -> np.ndarray:
    """det(M) - k trace(M)^2 from Gaussian-smoothed gradient products."""
    if img.width < 7 or img.height < 7:
        raise ImageTooSmall(f"harris needs at least 7x7, got {img.width}x{img.height}")
    g = gradients(img)
    kern = _gaussian_kernel2d(sigma)
    a = convolve(GrayImage(g.gx * g.gx), kern).pixels
    b = convolve(GrayImage(g.gy * g.gy), kern).pixels
    c = convolve(GrayImage(g.gx * g.gy), kern).pixels
    return (a * b - c * c) - k * (a + b) ** 2


def _refine(resp: np.ndarray, r: int, c: int):
    """Quadratic subpixel refinement along each axis, clamped to +-0.5."""

    def offset(lo, mid, hi):
        denom = lo - 2.0 * mid + hi
        if abs(denom) < 1e-12:
            return 0.0
        return float(np.clip(0.5 * (lo - hi) / denom, -0.5, 0.5))

    dx = offset(resp[r, c - 1], resp[r, c], resp[r, c + 1]) if 0 < c < resp.shape[1] - 1 else 0.0
    dy = offset(resp[r - 1, c], resp[r, c], resp[r + 1, c]) if 0 < r < resp.shape[0] - 1 else 0.0
    return c + dx, r + dy


def harris(img: GrayImage, threshold: float, k: float = HARRIS_K,
           sigma: float = HARRIS_SIGMA) -> list:
    """Corners above an absolute response threshold after 3x3 non-maximum
    suppression, strongest first."""
    resp = harris_response(img, k, sigma)
    h, w = resp.shape
    interior = resp[1:h - 1, 1:w - 1]
    peak = np.ones_like(interior, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            peak &= interior > resp[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc]
    rows, cols = np.nonzero(peak & (interior > threshold))
    corners = []
    for r, c in zip(rows + 1, cols + 1):
        x, y = _refine(resp, r, c)
        corners.append(Corner(x=x, y=y, response=float(resp[r, c])))
    corners.sort(key=lambda cn: (-cn.response, cn.y, cn.x))
    return corners


def find_form_corners(img: GrayImage, rel_threshold: float = 0.01) -> np.ndarray:
    """One form corner per image quadrant, ordered TL, TR, BR, BL.

    Among candidates above `rel_threshold` of the peak response, each
    quadrant contributes the candidate nearest its canvas corner, which
    keeps the selection stable between a frame's outer and inner junctions.
    """
    resp = harris_response(img)
    peak = float(resp.max())
    if peak <= 1e-10:
        raise CornersNotFound("no corner structure in the image")
    corners = harris(img, threshold=rel_threshold * peak)
    w, h = img.width, img.height
    w2, h2 = w / 2.0, h / 2.0
    canvas = ((0.0, 0.0), (w - 1.0, 0.0), (w - 1.0, h - 1.0), (0.0, h - 1.0))
    quads: list = [[], [], [], []]  # TL, TR, BR, BL
    for cn in corners:
        qi = (0 if cn.y < h2 else 3) if cn.x < w2 else (1 if cn.y < h2 else 2)
        quads[qi].append(cn)
    missing = [name for name, q in zip(("TL", "TR", "BR", "BL"), quads) if not q]
    if missing:
        raise CornersNotFound(f"no corner found in quadrant(s) {', '.join(missing)}")
    picked = [
        min(cands, key=lambda cn: (cn.x - cx) ** 2 + (cn.y - cy) ** 2)
        for cands, (cx, cy) in zip(quads, canvas)
    ]
    return np.array([[q.x, q.y] for q in picked], dtype=np.float64)


def _collinear(p, q, r, tol=1e-9):
    area = abs((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    scale = max(1.0, np.abs(np.array([p, q, r])).max() ** 2)
    return area <= tol * scale


def estimate_homography(src, dst) -> Homography:
    """Exact 4-point direct linear solve, normalized so H[2][2] = 1."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise DegenerateConfiguration("need exactly four source and destination points")
    for i in range(4):
        for j in range(i + 1, 4):
            for m in range(j + 1, 4):
                if _collinear(src[i], src[j], src[m]):
                    raise DegenerateConfiguration(
                        f"source points {i}, {j}, {m} are collinear or duplicated"
                    )
    A = np.zeros((8, 8))
    rhs = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -x * u, -y * u]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -x * v, -y * v]
        rhs[2 * i] = u
        rhs[2 * i + 1] = v
    try:
        h = np.linalg.solve(A, rhs)
        return Homography(np.append(h, 1.0).reshape(3, 3))
    except (np.linalg.LinAlgError, SingularHomography) as exc:
        raise DegenerateConfiguration(f"degenerate point configuration: {exc}") from exc


def deskew(form: GrayImage, spec: GridSpec,
           reference_corners=None) -> GrayImage:
    """Warp the detected form corners onto their canonical positions.

    `reference_corners` (TL, TR, BR, BL) gives the calibrated corner
    positions in the canonical layout, e.g. measured once from an empty
    reference form; by default the corners of the canonical canvas.
    """
    detected = find_form_corners(form)
    if reference_corners is None:
        w, h = spec.form_width, spec.form_height
        reference_corners = [(0, 0), (w - 1, 0), (w - 1, h - 1), (0, h - 1)]
    hom = estimate_homography(detected, np.asarray(reference_corners, dtype=np.float64))
    return warp_projective(form, hom, spec.form_width, spec.form_height)


def crop_cells(form: GrayImage, spec: GridSpec) -> list:
    """Row-major cells, shrunk by the margin and resized to the canonical
    window."""
    if form.width != spec.form_width or form.height != spec.form_height:
        raise SpecMismatch(
            f"form is {form.width}x{form.height}, spec wants "
            f"{spec.form_width}x{spec.form_height}"
        )
    ys = [int(np.floor(r * spec.form_height / spec.rows)) for r in range(spec.rows + 1)]
    xs = [int(np.floor(c * spec.form_width / spec.cols)) for c in range(spec.cols + 1)]
    m = spec.margin
    cells = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            patch = form.pixels[ys[r] + m:ys[r + 1] - m, xs[c] + m:xs[c + 1] - m]
            cells.append(resize_bilinear(GrayImage(patch), CELL_SIZE, CELL_SIZE))
    return cells


def otsu_threshold(pixels: np.ndarray) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram;
    ink is everything strictly below the returned value."""
    bins = np.clip((pixels * 256.0).astype(int), 0, 255)
    hist = np.bincount(bins.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_t = mu[-1]
    denom = omega * (1.0 - omega)
    denom[denom < 1e-12] = np.inf
    sigma_b = (mu_t * omega - mu) ** 2 / denom
    k = int(np.argmax(sigma_b))
    return (k + 1) / 256.0


def ink_mask(cell: GrayImage) -> np.ndarray:
    return cell.pixels < otsu_threshold(cell.pixels)


def connected_components(mask: np.ndarray):
    """8-connected component labeling; returns (labels, count)."""
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return labels, int(count)


def qa_flags(cell: GrayImage, min_component_frac: float = 0.01,
             max_components: int = 4, min_ink_frac: float = 0.005,
             min_range: float = 0.15) -> set:
    """Advisory quality flags for one cropped cell.

    MultiComponent: more than `max_components` ink components each covering
    at least `min_component_frac` of the cell (a cropping-error proxy).
    NearEmpty: ink fraction below `min_ink_frac`.  LowContrast: intensity
    range below `min_range`.
    """
    flags = set()
    px = cell.pixels
    if float(px.max() - px.min()) < min_range:
        flags.add(FLAG_LOW_CONTRAST)
    mask = ink_mask(cell)
    n_ink = int(mask.sum())
    if n_ink < min_ink_frac * mask.size:
        flags.add(FLAG_NEAR_EMPTY)
    if n_ink:
        labels, count = connected_components(mask)
        sizes = np.bincount(labels.ravel())[1:]
        big = int((sizes >= min_component_frac * mask.size).sum())
        if big > max_components:
            flags.add(FLAG_MULTI_COMPONENT)
    return flags


def synthetic_form(spec: GridSpec, seed: int = 0, frame_inset: int = 6,
                   frame_thickness: int = 5, with_glyphs: bool = True) -> GrayImage:
    """A white form with a dark rectangular frame and one blob per cell.

    The frame's four corner junctions are the strongest corners in their
    quadrants, which is what the deskewing pipeline keys on.
    """
    h, w = spec.form_height, spec.form_width
    canvas = np.ones((h, w))
    i, t = frame_inset, frame_thickness
    canvas[i:i + t, i:w - i] = 0.0
    canvas[h - i - t:h - i, i:w - i] = 0.0
    canvas[i:h - i, i:i + t] = 0.0
    canvas[i:h - i, w - i - t:w - i] = 0.0
    if with_glyphs:
        rng = np.random.default_rng(seed)
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        cell_h, cell_w = h / spec.rows, w / spec.cols
        radius = 0.12 * min(cell_h, cell_w)
        for r in range(spec.rows):
            for c in range(spec.cols):
                cy = (r + 0.5) * cell_h + rng.uniform(-2, 2)
                cx = (c + 0.5) * cell_w + rng.uniform(-2, 2)
                d = np.hypot(xx - cx, yy - cy)
                canvas = np.minimum(canvas, np.where(d <= radius, 0.35, 1.0))
    return GrayImage(canvas)
