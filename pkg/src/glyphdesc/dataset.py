"""Sample ingestion, stratified splitting, and a synthetic glyph generator.

The generator renders 28 abstract glyph classes built from 9 stroke
skeletons; several skeletons are shared by multiple classes that differ
only in dot count and placement, mirroring the confusability structure of
handwritten alphabets where dots carry the class identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadLabel, ClassTooSmall, EmptyDataset
from .imagecore import GrayImage, read_pgm, resize_bilinear

__all__ = [
    "CLASS_COUNT",
    "Sample",
    "SplitSpec",
    "GlyphPrototype",
    "GlyphParams",
    "IngestResult",
    "default_glyph_params",
    "confusable_groups",
    "ingest",
    "split",
    "synth_glyphs",
    "export_split_manifest",
    "gender_counts",
]

CLASS_COUNT = 28
GENDERS = ("female", "male", "unknown")


@dataclass(frozen=True, eq=False)
class Sample:
    """One labeled character image with writer metadata."""

    image: GrayImage
    label: int
    writer_id: str
    gender: str
    ident: str

    def __post_init__(self):
        if not (0 <= self.label < CLASS_COUNT):
            raise BadLabel(f"label {self.label} outside [0, {CLASS_COUNT})")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}, got {self.gender!r}")


@dataclass(frozen=True)
class SplitSpec:
    """70/15/15 stratified split, deterministic for a fixed seed."""

    seed: int = 0
    ratios: tuple = (0.70, 0.15, 0.15)

    def __post_init__(self):
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {self.ratios}")


# ---------------------------------------------------------------------------
# synthetic glyphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlyphPrototype:
    """A stroke skeleton plus a dot pattern; skeletons are shared by
    confusable classes."""

    name: str
    skeleton: str
    strokes: tuple   # ("line", ((x, y), ...)) or ("arc", (cx, cy), r, deg0, deg1)
    dot_count: int = 0
    dot_pos: str = ""  # "above" | "below" | "inside" when dot_count > 0


# dot anchor points per skeleton, in the unit glyph box (y grows downward)
_ANCHORS = {
    "bowl": {"above": (0.50, 0.14), "below": (0.50, 0.90), "inside": (0.50, 0.42)},
    "arch": {"above": (0.50, 0.08), "below": (0.50, 0.88), "inside": (0.50, 0.58)},
    "ring": {"above": (0.50, 0.08), "below": (0.50, 0.92), "inside": (0.50, 0.50)},
    "bar": {"above": (0.50, 0.06), "below": (0.50, 0.95), "inside": (0.62, 0.50)},
    "zig": {"above": (0.50, 0.08), "below": (0.50, 0.93), "inside": (0.50, 0.50)},
    "hook": {"above": (0.62, 0.06), "below": (0.50, 0.88), "inside": (0.44, 0.42)},
    "wave": {"above": (0.50, 0.12), "below": (0.50, 0.90), "inside": (0.50, 0.50)},
    "ell": {"above": (0.35, 0.06), "below": (0.58, 0.94), "inside": (0.60, 0.48)},
    "tee": {"above": (0.50, 0.08), "below": (0.50, 0.95), "inside": (0.66, 0.55)},
}

_SKELETONS = {
    "bowl": (("arc", (0.50, 0.40), 0.32, 0.0, 180.0),),
    "arch": (("arc", (0.50, 0.58), 0.30, 180.0, 360.0),),
    "ring": (("arc", (0.50, 0.50), 0.28, 0.0, 360.0),),
    "bar": (("line", ((0.50, 0.12), (0.50, 0.88))),),
    "zig": (("line", ((0.70, 0.20), (0.30, 0.40), (0.70, 0.60), (0.30, 0.80))),),
    "hook": (
        ("line", ((0.62, 0.15), (0.62, 0.55))),
        ("arc", (0.45, 0.55), 0.17, 0.0, 160.0),
    ),
    "wave": (("line", ((0.15, 0.60), (0.30, 0.35), (0.50, 0.50), (0.70, 0.65), (0.85, 0.40))),),
    "ell": (("line", ((0.35, 0.15), (0.35, 0.80), (0.75, 0.80))),),
    "tee": (
        ("line", ((0.20, 0.20), (0.80, 0.20))),
        ("line", ((0.50, 0.20), (0.50, 0.85))),
    ),
}

_VARIANTS = (
    ("bowl", 0, ""), ("bowl", 1, "below"), ("bowl", 1, "above"),
    ("bowl", 2, "above"), ("bowl", 3, "above"),
    ("arch", 0, ""), ("arch", 1, "above"), ("arch", 1, "inside"),
    ("ring", 0, ""), ("ring", 1, "above"), ("ring", 1, "inside"), ("ring", 2, "below"),
    ("bar", 0, ""), ("bar", 1, "above"),
    ("zig", 0, ""), ("zig", 1, "above"), ("zig", 2, "below"),
    ("hook", 0, ""), ("hook", 1, "above"), ("hook", 1, "below"), ("hook", 2, "above"),
    ("wave", 0, ""), ("wave", 1, "above"), ("wave", 3, "below"),
    ("ell", 0, ""), ("ell", 1, "inside"),
    ("tee", 0, ""), ("tee", 1, "below"),
)


def _default_prototypes() -> tuple:
    protos = []
    for skel, count, pos in _VARIANTS:
        suffix = f"-{count}{pos}" if count else ""
        protos.append(GlyphPrototype(
            name=f"{skel}{suffix}", skeleton=skel,
            strokes=_SKELETONS[skel], dot_count=count, dot_pos=pos,
        ))
    return tuple(protos)


@dataclass(frozen=True)
class GlyphParams:
    """Prototype set and per-sample jitter magnitudes."""

    prototypes: tuple = field(default_factory=_default_prototypes)
    rotation_deg: float = 8.0
    translation_px: float = 4.0
    stroke_width: tuple = (2.0, 4.0)
    noise_sigma: float = 0.03
    ink_level: float = 0.08
    canvas: int = 64

    def __post_init__(self):
        groups = {}
        for p in self.prototypes:
            groups.setdefault(p.skeleton, []).append(p)
        confusable = sum(1 for g in groups.values() if len(g) >= 2)
        if confusable < 4:
            raise ValueError(
                f"need at least 4 confusable skeleton groups, got {confusable}"
            )


def default_glyph_params() -> GlyphParams:
    return GlyphParams()


def confusable_groups(params: GlyphParams | None = None) -> dict:
    """Map skeleton name -> list of class labels sharing that skeleton."""
    params = params or default_glyph_params()
    groups: dict = {}
    for label, p in enumerate(params.prototypes):
        groups.setdefault(p.skeleton, []).append(label)
    return {k: v for k, v in groups.items() if len(v) >= 2}


def _stroke_points(strokes):
    """Flatten strokes into polyline segments in unit coordinates."""
    segs = []
    for stroke in strokes:
        if stroke[0] == "line":
            pts = [np.array(p, dtype=np.float64) for p in stroke[1]]
        else:
            _, (cx, cy), r, d0, d1 = stroke
            ang = np.radians(np.linspace(d0, d1, 25))
            pts = [np.array([cx + r * math.cos(a), cy + r * math.sin(a)]) for a in ang]
        segs.extend((pts[i], pts[i + 1]) for i in range(len(pts) - 1))
    return segs


def _dot_centers(proto: GlyphPrototype):
    if proto.dot_count == 0:
        return []
    ax, ay = _ANCHORS[proto.skeleton][proto.dot_pos]
    offsets = {1: (0.0,), 2: (-0.055, 0.055), 3: (-0.11, 0.0, 0.11)}[proto.dot_count]
    return [np.array([ax + dx, ay]) for dx in offsets]


def _segment_distance(px, py, a, b):
    """Distance from each pixel center to segment ab (all in pixel coords)."""
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-12:
        t = np.zeros_like(px)
    else:
        t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * ab[0]), py - (a[1] + t * ab[1]))


def render_glyph(proto: GlyphPrototype, rng: np.random.Generator,
                 params: GlyphParams) -> GrayImage:
    """Rasterize one jittered instance: dark anti-aliased ink on white."""
    n = params.canvas
    rot = math.radians(rng.uniform(-params.rotation_deg, params.rotation_deg))
    tx, ty = rng.uniform(-params.translation_px, params.translation_px, size=2)
    width = rng.uniform(*params.stroke_width)

    box0, scale = n * 0.125, n * 0.75  # glyph box with a margin for jitter
    c = n / 2.0
    cosr, sinr = math.cos(rot), math.sin(rot)

    def to_canvas(p):
        x, y = box0 + scale * p[0], box0 + scale * p[1]
        xr = c + (x - c) * cosr - (y - c) * sinr + tx
        yr = c + (x - c) * sinr + (y - c) * cosr + ty
        return np.array([xr, yr])

    py, px = np.mgrid[0:n, 0:n].astype(np.float64)
    dist = np.full((n, n), 1e9)
    for a, b in _stroke_points(proto.strokes):
        dist = np.minimum(dist, _segment_distance(px, py, to_canvas(a), to_canvas(b)))
    coverage = np.clip(width / 2.0 + 0.5 - dist, 0.0, 1.0)

    dot_r = 1.5 + 0.3 * width
    for center in _dot_centers(proto):
        cc = to_canvas(center)
        d = np.hypot(px - cc[0], py - cc[1])
        coverage = np.maximum(coverage, np.clip(dot_r + 0.5 - d, 0.0, 1.0))

    img = 1.0 - coverage * (1.0 - params.ink_level)
    img = img + rng.normal(0.0, params.noise_sigma, size=(n, n))
    return GrayImage(np.clip(img, 0.0, 1.0))


def synth_glyphs(n_per_class: int, seed: int,
                 params: GlyphParams | None = None) -> list:
    """Render n_per_class jittered instances of every prototype.

    Deterministic for a fixed seed; class counts are exactly equal.  Writer
    ids and genders are synthetic, for exercising the metadata path.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    params = params or default_glyph_params()
    rng = np.random.default_rng(seed)
    samples = []
    for label, proto in enumerate(params.prototypes):
        for rep in range(n_per_class):
            img = render_glyph(proto, rng, params)
            widx = (label * n_per_class + rep) % 20
            samples.append(Sample(
                image=img,
                label=label,
                writer_id=f"w{widx:02d}",
                gender="female" if widx % 2 == 0 else "male",
                ident=f"synthetic/{label:02d}/w{widx:02d}_{rep:03d}",
            ))
    return samples


# ---------------------------------------------------------------------------
# ingestion from a directory tree:  root/<class_id>/<writer>_<rep>.pgm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IngestResult:
    samples: tuple
    warnings: tuple


def _read_metadata(root: Path):
    meta = {}
    path = root / "metadata.csv"
    if not path.is_file():
        return meta
    lines = path.read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:  # header: writer_id,gender
        line = line.strip()
        if not line:
            continue
        writer, _, gender = line.partition(",")
        gender = gender.strip().lower()
        meta[writer.strip()] = gender if gender in ("female", "male") else "unknown"
    return meta


def ingest(root_path, target_size: int = 64) -> IngestResult:
    """Load every readable PGM under root/<class_id>/, resized to the
    canonical window.  Unreadable files become warnings, not failures."""
    root = Path(root_path)
    meta = _read_metadata(root) if root.is_dir() else {}
    samples = []
    warnings = []
    if root.is_dir():
        for entry in sorted(root.iterdir()):
            if not entry.is_dir():
                continue
            try:
                label = int(entry.name)
            except ValueError:
                raise BadLabel(f"directory name {entry.name!r} is not a class id")
            if not (0 <= label < CLASS_COUNT):
                raise BadLabel(f"class id {label} outside [0, {CLASS_COUNT})")
            for f in sorted(entry.glob("*.pgm")):
                try:
                    img = resize_bilinear(read_pgm(f), target_size, target_size)
                except Exception as exc:
                    warnings.append(f"{f}: {exc}")
                    continue
                writer = f.stem.rsplit("_", 1)[0]
                samples.append(Sample(
                    image=img,
                    label=label,
                    writer_id=writer,
                    gender=meta.get(writer, "unknown"),
                    ident=f"{entry.name}/{f.name}",
                ))
    if not samples:
        raise EmptyDataset(f"no valid samples under {root}")
    samples.sort(key=lambda s: (s.label, s.writer_id, s.ident))
    return IngestResult(samples=tuple(samples), warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# deterministic stratified split
# ---------------------------------------------------------------------------

def split(samples, spec: SplitSpec):
    """Per-class shuffle and allocate floor(0.70 n) / floor(0.15 n) / rest,
    with the test share capped at 0.15 n + 1 (excess moves to train) so the
    per-class test fraction stays within one sample of 15%.

    Returns (train, val, test) lists; the partition is exact and
    deterministic for a fixed seed.
    """
    samples = list(samples)
    by_class: dict = {}
    for i, s in enumerate(samples):
        by_class.setdefault(s.label, []).append(i)
    for label, idx in sorted(by_class.items()):
        if len(idx) < 3:
            raise ClassTooSmall(f"class {label} has only {len(idx)} samples (need >= 3)")
    rng = np.random.default_rng(spec.seed)
    r_train, r_val, r_test = spec.ratios
    train, val, test = [], [], []
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        perm = idx[rng.permutation(idx.size)]
        n = idx.size
        ntr = int(math.floor(r_train * n))
        nva = int(math.floor(r_val * n))
        nte = n - ntr - nva
        if nte - r_test * n > 1.0:
            ntr += 1
            nte -= 1
        train.extend(perm[:ntr])
        val.extend(perm[ntr:ntr + nva])
        test.extend(perm[ntr + nva:])
    return ([samples[i] for i in train],
            [samples[i] for i in val],
            [samples[i] for i in test])


def export_split_manifest(train, val, test, path) -> None:
    """One `sample_path,split` row per sample, sorted by sample path."""
    rows = [(s.ident, name) for name, part in
            (("train", train), ("val", val), ("test", test)) for s in part]
    rows.sort()
    with open(path, "w", encoding="utf-8") as fh:
        for ident, name in rows:
            fh.write(f"{ident},{name}\n")


def gender_counts(train, val, test) -> dict:
    """Per-split totals by gender, for Table-1-style summaries."""
    out = {}
    for name, part in (("train", train), ("val", val), ("test", test)):
        counts = {g: 0 for g in GENDERS}
        for s in part:
            counts[s.gender] += 1
        out[name] = counts
    return out
