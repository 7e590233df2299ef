"""Command-line entry points.

Subcommands: synth, extract, tune, evaluate, run, preprocess-form.
Exit codes: 0 success, 2 partial cell failure in `run`, 1 fatal error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import dataset, formproc, harness
from .classifiers import ClassifierKind
from .errors import GlyphDescError
from .imagecore import read_pgm, write_pgm


def _add_config_arg(p):
    p.add_argument("--config", required=True, help="flat key = value config file")


def _cmd_synth(args) -> int:
    samples = dataset.synth_glyphs(args.n_per_class, args.seed)
    root = Path(args.out)
    writers = {}
    for s in samples:
        d = root / f"{s.label:02d}"
        d.mkdir(parents=True, exist_ok=True)
        rep = s.ident.rsplit("_", 1)[1]
        write_pgm(s.image, d / f"{s.writer_id}_{rep}.pgm")
        writers[s.writer_id] = s.gender
    with open(root / "metadata.csv", "w", encoding="utf-8") as fh:
        fh.write("writer_id,gender\n")
        for wid in sorted(writers):
            fh.write(f"{wid},{writers[wid]}\n")
    print(f"wrote {len(samples)} glyphs over {len(writers)} writers to {root}")
    return 0


def _cmd_extract(args) -> int:
    config = harness.load_config(args.config)
    if args.cache_dir:
        config = replace(config, cache_dir=args.cache_dir)
    if config.cache_dir is None:
        print("extract: config has no cache.dir and no --cache-dir given",
              file=sys.stderr)
        return 1
    samples = dataset.synth_glyphs(config.n_per_class, config.dataset_seed) \
        if config.source == "synthetic" else list(dataset.ingest(config.dataset_path).samples)
    ds_hash = harness.dataset_hash(samples)
    for spec in config.descriptors:
        X = harness.cached_features(samples, spec, config.cache_dir,
                                    config.workers, ds_hash)
        print(f"{spec.name}: {X.shape[0]} x {X.shape[1]} (dataset {ds_hash})")
    return 0


def _one_cell_config(args) -> harness.ExperimentConfig:
    config = harness.load_config(args.config)
    return replace(
        config,
        descriptors=(harness.DescriptorSpec.parse(args.descriptor),),
        classifiers=(ClassifierKind(args.classifier),),
    )


def _cmd_tune(args) -> int:
    config = _one_cell_config(args)
    report = harness.run_experiment(config)
    cell = next(iter(report.cells.values()))
    if not cell.ok:
        print(f"cell failed: {cell.error}", file=sys.stderr)
        return 1
    print(f"{cell.descriptor.name} + {cell.classifier.value}: "
          f"best params {cell.best_params} "
          f"validation accuracy {100 * cell.val_accuracy:.2f}%")
    return 0


def _cmd_evaluate(args) -> int:
    config = _one_cell_config(args)
    report = harness.run_experiment(config)
    cell = next(iter(report.cells.values()))
    if not cell.ok:
        print(f"cell failed: {cell.error}", file=sys.stderr)
        return 1
    print(f"{cell.descriptor.name} + {cell.classifier.value}: "
          f"params {cell.best_params} test accuracy {cell.accuracy_pct:.2f}% "
          f"({int(round((1 - cell.accuracy) * report.split_sizes[2]))} misclassified)")
    return 0


def _cmd_run(args) -> int:
    config = harness.load_config(args.config)
    if args.out:
        config = replace(config, output_dir=args.out)
    report = harness.run_experiment(config)
    text, _ = harness.report_render(report)
    print(text, end="")
    if config.output_dir:
        harness.save_report(report, config.output_dir)
        print(f"report written to {config.output_dir}")
    failed = sum(1 for c in report.cells.values() if not c.ok)
    if failed:
        print(f"{failed} cell(s) failed", file=sys.stderr)
        return 2
    return 0


def _cmd_preprocess_form(args) -> int:
    rows, cols = (int(v) for v in args.grid.lower().split("x"))
    width, height = (int(v) for v in args.canonical.lower().split("x"))
    spec = formproc.GridSpec(rows=rows, cols=cols, form_width=width,
                             form_height=height, margin=args.margin)
    form = read_pgm(args.form)
    canonical = formproc.deskew(form, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = formproc.crop_cells(canonical, spec)
    qa_rows = []
    for i, cell in enumerate(cells):
        r, c = divmod(i, cols)
        name = f"r{r}c{c}.pgm"
        write_pgm(cell, out / name)
        flags = sorted(formproc.qa_flags(cell))
        qa_rows.append(f"{name},{';'.join(flags)}")
    (out / "qa_report.csv").write_text(
        "\n".join(["cell,flags"] + qa_rows) + "\n", encoding="utf-8")
    print(f"wrote {len(cells)} cells and qa_report.csv to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glyphdesc",
        description="window-based descriptor experiments for handwritten glyphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic glyph dataset to a directory")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("extract", help="extract configured descriptors into the cache")
    _add_config_arg(p)
    p.add_argument("--cache-dir")
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("tune", help="grid-search one descriptor/classifier cell")
    _add_config_arg(p)
    p.add_argument("--descriptor", required=True, help="e.g. sift or sift7")
    p.add_argument("--classifier", required=True,
                   choices=[k.value for k in ClassifierKind])
    p.set_defaults(fn=_cmd_tune)

    p = sub.add_parser("evaluate", help="tune, refit on train+val, score the test set")
    _add_config_arg(p)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--classifier", required=True,
                   choices=[k.value for k in ClassifierKind])
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("run", help="run the full descriptor x classifier matrix")
    _add_config_arg(p)
    p.add_argument("--out", help="override output.dir")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("preprocess-form", help="deskew a scanned form and crop cells")
    p.add_argument("form", help="input form image (binary PGM)")
    p.add_argument("--grid", required=True, help="RxC, e.g. 7x4")
    p.add_argument("--canonical", required=True, help="WxH of the deskewed form")
    p.add_argument("--margin", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_preprocess_form)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (GlyphDescError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
