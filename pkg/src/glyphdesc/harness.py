"""Experiment runner: extract features, tune on validation, refit, report.

For every configured (descriptor, classifier) pair the runner extracts (or
loads cached) features, z-scores them with training statistics, grid-searches
hyperparameters on the validation set, retrains on train+validation, and
records test accuracy.  A failed cell is recorded and the run continues.
Runs are deterministic given the config seeds: two runs of the same config
produce byte-identical exports.

Feature matrices are float32 end to end, matching the on-disk descriptor
cache, so cold- and warm-cache runs are bit-identical.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import (
    ClassifierKind,
    LabeledSet,
    ParamGrid,
    Standardizer,
    grid_search,
    refit_and_test,
)
from .dataset import (
    SplitSpec,
    gender_counts,
    ingest,
    split,
    synth_glyphs,
)
from .descriptors import (
    DescriptorKind,
    base_dim,
    default_gabor_bank,
    describe,
)
from .errors import LengthMismatch
from .imagecore import write_pgm
from .pyramid import describe7

__all__ = [
    "DescriptorSpec",
    "ExperimentConfig",
    "CellResult",
    "ExperimentReport",
    "parse_config_text",
    "load_config",
    "dataset_hash",
    "extract_features",
    "write_cache",
    "read_cache",
    "cached_features",
    "run_experiment",
    "confusion",
    "report_render",
    "delta_rows",
    "dump_misclassified",
    "save_report",
]

CLASSIFIER_TITLES = {
    ClassifierKind.LOGREG: "LR",
    ClassifierKind.ANN: "ANN",
    ClassifierKind.SVM_LINEAR: "SVM (Linear)",
    ClassifierKind.SVM_RBF: "SVM (RBF)",
}

_KIND_BYTES = {k: i for i, k in enumerate(DescriptorKind)}
_BYTE_KINDS = {i: k for k, i in _KIND_BYTES.items()}


@dataclass(frozen=True)
class DescriptorSpec:
    kind: DescriptorKind
    pyramid: bool = False

    @property
    def name(self) -> str:
        return self.kind.value + ("7" if self.pyramid else "")

    @property
    def dim(self) -> int:
        return base_dim(self.kind) * (7 if self.pyramid else 1)

    @staticmethod
    def parse(text: str) -> "DescriptorSpec":
        text = text.strip().lower()
        pyramid = text.endswith("7")
        kind = DescriptorKind(text[:-1] if pyramid else text)
        return DescriptorSpec(kind, pyramid)


_DEFAULT_DESCRIPTORS = tuple(
    DescriptorSpec(kind, pyr) for pyr in (False, True) for kind in DescriptorKind
)
_DEFAULT_CLASSIFIERS = tuple(ClassifierKind)


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synthetic"          # "synthetic" | "directory"
    dataset_path: str | None = None
    n_per_class: int = 30
    dataset_seed: int = 7
    split_seed: int = 0
    train_seed: int = 0
    descriptors: tuple = _DEFAULT_DESCRIPTORS
    classifiers: tuple = _DEFAULT_CLASSIFIERS
    grid: ParamGrid = field(default_factory=ParamGrid)
    output_dir: str | None = None
    cache_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.descriptors or not self.classifiers:
            raise ValueError("descriptor and classifier lists must be nonempty")
        if self.source not in ("synthetic", "directory"):
            raise ValueError(f"unknown dataset source {self.source!r}")
        if self.source == "directory" and not self.dataset_path:
            raise ValueError("directory source needs dataset.path")


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def config_from_mapping(kv: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    grid = ParamGrid(
        lambdas=_floats(kv["grid.lambda"]) if "grid.lambda" in kv else ParamGrid().lambdas,
        Cs=_floats(kv["grid.C"]) if "grid.C" in kv else ParamGrid().Cs,
        gammas=_floats(kv["grid.gamma"]) if "grid.gamma" in kv else ParamGrid().gammas,
    )
    descriptors = cfg.descriptors
    if "descriptors" in kv:
        descriptors = tuple(DescriptorSpec.parse(d) for d in kv["descriptors"].split(","))
    classifiers = cfg.classifiers
    if "classifiers" in kv:
        classifiers = tuple(ClassifierKind(c.strip().lower())
                            for c in kv["classifiers"].split(","))
    return ExperimentConfig(
        source=kv.get("dataset.source", cfg.source),
        dataset_path=kv.get("dataset.path"),
        n_per_class=int(kv.get("dataset.n_per_class", cfg.n_per_class)),
        dataset_seed=int(kv.get("dataset.seed", cfg.dataset_seed)),
        split_seed=int(kv.get("split.seed", cfg.split_seed)),
        train_seed=int(kv.get("train.seed", cfg.train_seed)),
        descriptors=descriptors,
        classifiers=classifiers,
        grid=grid,
        output_dir=kv.get("output.dir"),
        cache_dir=kv.get("cache.dir"),
        workers=int(kv.get("workers", cfg.workers)),
    )


def load_config(path) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# feature extraction and the on-disk descriptor cache
# ---------------------------------------------------------------------------

def dataset_hash(samples) -> str:
    digest = hashlib.sha256()
    for s in samples:
        digest.update(s.ident.encode("utf-8"))
        digest.update(struct.pack("<i", s.label))
        digest.update(s.image.pixels.tobytes())
    return digest.hexdigest()[:16]


def extract_features(samples, spec: DescriptorSpec, workers: int = 1) -> np.ndarray:
    """(N, D) float32 descriptor matrix in sample order."""
    if spec.kind is DescriptorKind.GIST:
        default_gabor_bank()  # build once before any worker needs it

    def one(sample):
        if spec.pyramid:
            d = describe7(sample.image, spec.kind)
        else:
            d = describe(sample.image, spec.kind)
        return d.values.astype(np.float32)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, samples))
    else:
        rows = [one(s) for s in samples]
    return np.vstack(rows)


_CACHE_MAGIC = b"GDC1"


def write_cache(path, spec: DescriptorSpec, X: np.ndarray, labels: np.ndarray) -> None:
    X = np.ascontiguousarray(X, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype="<i2")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<BB", _KIND_BYTES[spec.kind], 1 if spec.pyramid else 0))
        fh.write(struct.pack("<II", X.shape[0], X.shape[1]))
        fh.write(X.tobytes())
        fh.write(labels.tobytes())


def read_cache(path):
    buf = Path(path).read_bytes()
    if buf[:4] != _CACHE_MAGIC:
        raise ValueError(f"{path}: not a GDC1 cache file")
    kind_b, pyr_b = struct.unpack_from("<BB", buf, 4)
    n, d = struct.unpack_from("<II", buf, 6)
    spec = DescriptorSpec(_BYTE_KINDS[kind_b], bool(pyr_b))
    if d != spec.dim:
        raise ValueError(f"{path}: dimension {d} violates the {spec.name} contract "
                         f"({spec.dim})")
    off = 14
    X = np.frombuffer(buf, dtype="<f4", count=n * d, offset=off).reshape(n, d).copy()
    off += 4 * n * d
    labels = np.frombuffer(buf, dtype="<i2", count=n, offset=off).astype(np.int64)
    return spec, X, labels


def cached_features(samples, spec: DescriptorSpec, cache_dir, workers: int = 1,
                    ds_hash: str | None = None) -> np.ndarray:
    """Extract features, transparently reading/writing the cache directory."""
    if cache_dir is None:
        return extract_features(samples, spec, workers)
    ds_hash = ds_hash or dataset_hash(samples)
    path = Path(cache_dir) / f"{ds_hash}_{spec.name}.gdc"
    labels = np.array([s.label for s in samples], dtype=np.int64)
    if path.is_file():
        _, X, cached_labels = read_cache(path)
        if X.shape[0] == len(samples) and np.array_equal(cached_labels, labels):
            return X
        raise ValueError(f"{path}: cache does not match the dataset")
    X = extract_features(samples, spec, workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_cache(path, spec, X, labels)
    return X


# ---------------------------------------------------------------------------
# the experiment matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    descriptor: DescriptorSpec
    classifier: ClassifierKind
    ok: bool
    error: str | None = None
    best_params: dict | None = None
    val_accuracy: float | None = None
    accuracy: float | None = None          # fraction correct on the test set
    predictions: np.ndarray | None = field(default=None, compare=False, repr=False)
    confusion_matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def accuracy_pct(self) -> float | None:
        return None if self.accuracy is None else 100.0 * self.accuracy


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    class_labels: tuple                    # original class ids, ascending
    split_sizes: tuple                     # (train, val, test)
    gender_totals: dict
    cells: dict                            # (descriptor name, classifier) -> CellResult
    best_key: tuple | None
    misclassified: tuple                   # (ident, true, predicted) of the best cell
    split_idents: tuple = ()               # (ident, "train"|"val"|"test") rows
    test_samples: tuple = field(default=(), compare=False, repr=False)

    def cell(self, descriptor: str, classifier: ClassifierKind) -> CellResult:
        return self.cells[(descriptor, classifier)]


def confusion(preds, labels, K: int) -> np.ndarray:
    """K x K counts; entry (i, j) counts true class i predicted as j."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise LengthMismatch(f"{preds.shape} predictions vs {labels.shape} labels")
    out = np.zeros((K, K), dtype=np.int64)
    np.add.at(out, (labels, preds), 1)
    return out


def _load_samples(config: ExperimentConfig):
    if config.source == "synthetic":
        return synth_glyphs(config.n_per_class, config.dataset_seed)
    return list(ingest(config.dataset_path).samples)


def _feature_sets(samples, parts, spec, config, ds_hash):
    """LabeledSets for (train, val, test) with labels compacted to 0..K-1."""
    X = cached_features(samples, spec, config.cache_dir, config.workers, ds_hash)
    index = {s: i for i, s in enumerate(samples)}
    classes = sorted({s.label for s in samples})
    remap = {c: i for i, c in enumerate(classes)}
    sets = []
    for part in parts:
        rows = np.array([index[s] for s in part], dtype=np.int64)
        y = np.array([remap[s.label] for s in part], dtype=np.int64)
        sets.append(LabeledSet(X[rows], y, len(classes)))
    return sets, classes


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    samples = _load_samples(config)
    train_s, val_s, test_s = split(samples, SplitSpec(seed=config.split_seed))
    ds_hash = dataset_hash(samples)

    cells: dict = {}
    classes: list = sorted({s.label for s in samples})
    for spec in config.descriptors:
        try:
            (train, val, test), classes = _feature_sets(
                samples, (train_s, val_s, test_s), spec, config, ds_hash)
        except Exception as exc:  # extraction failure poisons the whole row
            for ck in config.classifiers:
                cells[(spec.name, ck)] = CellResult(
                    descriptor=spec, classifier=ck, ok=False, error=str(exc))
            continue
        scaler = Standardizer.fit(train.X)
        train_z = LabeledSet(scaler.transform(train.X), train.y, train.K)
        val_z = LabeledSet(scaler.transform(val.X), val.y, val.K)
        for ck in config.classifiers:
            try:
                search = grid_search(train_z, val_z, ck, config.grid,
                                     seed=config.train_seed)
                # refit standardization is recomputed on train+validation
                refit_scaler = Standardizer.fit(np.vstack([train.X, val.X]))
                result = refit_and_test(
                    LabeledSet(refit_scaler.transform(train.X), train.y, train.K),
                    LabeledSet(refit_scaler.transform(val.X), val.y, val.K),
                    LabeledSet(refit_scaler.transform(test.X), test.y, test.K),
                    ck, search.params, seed=config.train_seed)
                cm = confusion(result.predictions, test.y, train.K)
                cells[(spec.name, ck)] = CellResult(
                    descriptor=spec, classifier=ck, ok=True,
                    best_params=search.params, val_accuracy=search.accuracy,
                    accuracy=result.accuracy, predictions=result.predictions,
                    confusion_matrix=cm)
            except Exception as exc:
                cells[(spec.name, ck)] = CellResult(
                    descriptor=spec, classifier=ck, ok=False, error=str(exc))

    best_key = None
    best_acc = -1.0
    for spec in config.descriptors:
        for ck in config.classifiers:
            cell = cells[(spec.name, ck)]
            if cell.ok and cell.accuracy > best_acc:
                best_acc = cell.accuracy
                best_key = (spec.name, ck)

    misclassified = []
    if best_key is not None:
        best = cells[best_key]
        remap = {c: i for i, c in enumerate(classes)}
        for s, pred in zip(test_s, best.predictions):
            if remap[s.label] != pred:
                misclassified.append((s.ident, s.label, classes[int(pred)]))

    idents = [(s.ident, name) for name, part in
              (("train", train_s), ("val", val_s), ("test", test_s)) for s in part]
    return ExperimentReport(
        config=config,
        class_labels=tuple(classes),
        split_sizes=(len(train_s), len(val_s), len(test_s)),
        gender_totals=gender_counts(train_s, val_s, test_s),
        cells=cells,
        best_key=best_key,
        misclassified=tuple(misclassified),
        split_idents=tuple(sorted(idents)),
        test_samples=tuple(test_s),
    )


# ---------------------------------------------------------------------------
# rendering and exports
# ---------------------------------------------------------------------------

def _fmt_params(params: dict | None) -> str:
    if not params:
        return ""
    return ";".join(f"{k}={v:g}" for k, v in sorted(params.items()))


def _fmt_pct(cell: CellResult) -> str:
    return f"{cell.accuracy_pct:.2f}%" if cell.ok else "FAILED"


def report_render(report: ExperimentReport):
    """Aligned accuracy table (descriptors x classifiers) plus CSV rows."""
    classifiers = report.config.classifiers
    headers = [""] + [CLASSIFIER_TITLES[ck] for ck in classifiers]
    rows = []
    for spec in report.config.descriptors:
        row = [spec.name.upper()]
        for ck in classifiers:
            row.append(_fmt_pct(report.cells[(spec.name, ck)]))
        rows.append(row)
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    text = "\n".join(lines) + "\n"

    csv_rows = ["descriptor,pyramid,classifier,params,accuracy"]
    for spec in report.config.descriptors:
        for ck in classifiers:
            cell = report.cells[(spec.name, ck)]
            acc = f"{cell.accuracy_pct:.2f}" if cell.ok else "FAILED"
            csv_rows.append(
                f"{spec.kind.value},{int(spec.pyramid)},{ck.value},"
                f"{_fmt_params(cell.best_params)},{acc}"
            )
    return text, csv_rows


def delta_rows(report: ExperimentReport) -> list:
    """Pyramid-minus-base accuracy deltas in percentage points, per classifier."""
    rows = ["descriptor,classifier,base,pyramid,delta"]
    by_kind: dict = {}
    for spec in report.config.descriptors:
        by_kind.setdefault(spec.kind, {})[spec.pyramid] = spec
    for kind, variants in by_kind.items():
        if True not in variants or False not in variants:
            continue
        for ck in report.config.classifiers:
            base = report.cells[(variants[False].name, ck)]
            pyr = report.cells[(variants[True].name, ck)]
            if not (base.ok and pyr.ok):
                continue
            delta = pyr.accuracy_pct - base.accuracy_pct
            rows.append(
                f"{kind.value},{ck.value},{base.accuracy_pct:.2f},"
                f"{pyr.accuracy_pct:.2f},{delta:+.2f}"
            )
    return rows


def dump_misclassified(report: ExperimentReport, out_dir) -> list:
    """Write each misclassified test image of the best cell plus an index file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_ident = {s.ident: s for s in report.test_samples}
    index_rows = []
    written = []
    for ident, true, pred in report.misclassified:
        stem = ident.replace("/", "-")
        name = f"true{true:02d}_pred{pred:02d}_{stem}.pgm"
        write_pgm(by_ident[ident].image, out / name)
        index_rows.append(f"{name},{ident},{true},{pred}")
        written.append(name)
    (out / "index.csv").write_text(
        "\n".join(["file,ident,true,predicted"] + index_rows) + "\n", encoding="utf-8")
    return written


def save_report(report: ExperimentReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text, csv_rows = report_render(report)
    summary = [
        f"split sizes: train={report.split_sizes[0]} val={report.split_sizes[1]} "
        f"test={report.split_sizes[2]}",
    ]
    for part, counts in report.gender_totals.items():
        summary.append(
            f"{part} by gender: " + " ".join(f"{g}={n}" for g, n in counts.items()))
    if report.best_key is not None:
        best = report.cells[report.best_key]
        summary.append(
            f"best cell: {report.best_key[0].upper()} + "
            f"{CLASSIFIER_TITLES[report.best_key[1]]} = {_fmt_pct(best)} "
            f"({len(report.misclassified)} misclassified)")
    (out / "report.txt").write_text(text + "\n" + "\n".join(summary) + "\n",
                                    encoding="utf-8")
    (out / "report.csv").write_text("\n".join(csv_rows) + "\n", encoding="utf-8")
    (out / "deltas.csv").write_text("\n".join(delta_rows(report)) + "\n",
                                    encoding="utf-8")
    if report.best_key is not None:
        best = report.cells[report.best_key]
        np.savetxt(out / "confusion_best.csv", best.confusion_matrix,
                   fmt="%d", delimiter=",")
    dump_misclassified(report, out / "misclassified")
    with open(out / "split_manifest.csv", "w", encoding="utf-8") as fh:
        for ident, name in report.split_idents:
            fh.write(f"{ident},{name}\n")
