"""
Command-line entry point: ``texdefect {detect,evaluate,synth,bench}``.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 precondition error,
5 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, evaluation, fusion, glcm, imaging, synth
from .clustering import LINKAGES
from .config import AGGREGATE_MODES, RunConfig, load_config
from .dissimilarity import dissimilarity_matrix, matrix_heatmap, write_matrix_csv
from .errors import ImageIOError, PreconditionError, TexDefectError
from .pipeline import DefectReport, detect_image, evaluate_report

log = logging.getLogger("texdefect")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PRECONDITION = 4
EXIT_INTERNAL = 5


@contextmanager
def stage(name: str):
    """Re-raise package errors with the failing stage named."""
    try:
        yield
    except TexDefectError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--period-rows", type=int, help="rows in one periodic unit")
    p.add_argument("--period-cols", type=int, help="columns in one periodic unit")
    p.add_argument("--levels", type=int, help="gray levels after quantization (default 64)")
    p.add_argument("--offsets", help="GLCM offsets 'drow,dcol;...' (default 0,1;1,0;1,1;1,-1)")
    p.add_argument("--linkage", choices=LINKAGES)
    p.add_argument("--aggregate", choices=AGGREGATE_MODES,
                   help="sum counts over offsets, or average per-offset distances")
    p.add_argument("--gap-factor", type=float,
                   help="enable the no-defect guard with this factor")
    p.add_argument("--symmetric-glcm", action="store_true", default=None)
    p.add_argument("--solid-blocks", action="store_true", default=None,
                   help="fuse solid block rectangles instead of outlines")
    p.add_argument("--out-dir")
    p.add_argument("--workers", type=int, help="images processed in parallel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texdefect",
        description="Defect detection on periodic textures (GLCM chi-square + clustering).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect defects and write masks and overlays")
    p.add_argument("inputs", nargs="+")
    _common_flags(p)
    p.add_argument("--display-scale", type=float,
                   help="scale gray values of the overlay for display only")
    p.add_argument("--boundaries", action="store_true", default=None,
                   help="also write per-cropping boundary masks")
    p.add_argument("--heatmaps", action="store_true", default=None,
                   help="also write dissimilarity heatmaps")
    p.add_argument("--dump-glcm", type=int, metavar="BLOCK_ID",
                   help="write the count matrix of one block per cropping as CSV")

    p = sub.add_parser("evaluate", help="score detection against truth masks")
    p.add_argument("inputs", nargs="+")
    _common_flags(p)
    p.add_argument("--truth", action="append", required=True,
                   help="truth mask per input (repeat in input order)")
    p.add_argument("--defect-type", action="append", dest="defect_types",
                   help="label for the report (repeat in input order)")
    p.add_argument("--min-overlap", type=float)

    p = sub.add_parser("synth", help="generate a synthetic texture with truth mask")
    p.add_argument("--pattern", choices=sorted(synth.UNIT_PATTERNS), default="dot")
    p.add_argument("--defect", action="append", choices=synth.DEFECT_KINDS, default=[],
                   help="defect family to plant (repeatable)")
    p.add_argument("--period-rows", type=int, default=8)
    p.add_argument("--period-cols", type=int, default=8)
    p.add_argument("--tiles", type=int, nargs=2, default=(12, 12), metavar=("ROWS", "COLS"))
    p.add_argument("--margin", type=int, nargs=2, default=(4, 4), metavar=("ROWS", "COLS"))
    p.add_argument("--noise", type=float, default=0.5, help="Gaussian noise sigma (gray levels)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("bench", help="time GLCM construction and all-pairs distances")
    p.add_argument("--sizes", default="16,64,256", help="comma-separated block counts")
    p.add_argument("--period-rows", type=int, default=8)
    p.add_argument("--period-cols", type=int, default=8)
    p.add_argument("--levels", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in ("period_rows", "period_cols", "levels", "offsets", "linkage",
                  "aggregate", "gap_factor", "symmetric_glcm", "solid_blocks",
                  "out_dir", "workers", "display_scale", "boundaries", "heatmaps",
                  "min_overlap", "defect_types", "truth")
    }
    overrides["inputs"] = args.inputs
    cfg = load_config(args.config, **overrides)
    if cfg.period_rows < 2 or cfg.period_cols < 2:
        raise PreconditionError("--period-rows and --period-cols are required (>= 2)")
    return cfg


def output_names(paths) -> dict[str, str]:
    """File stem per input, prefixed with the parent directory (and then an
    index) where stems would otherwise collide in one output directory."""
    paths = list(dict.fromkeys(paths))
    stems = [Path(p).stem for p in paths]
    names = [f"{Path(p).parent.name}.{s}" if stems.count(s) > 1 and Path(p).parent.name else s
             for p, s in zip(paths, stems)]
    seen: dict[str, int] = {}
    base = list(names)
    for k, name in enumerate(base):
        if base.count(name) > 1:
            seen[name] = seen.get(name, 0) + 1
            names[k] = f"{name}.{seen[name]}"
    return dict(zip(paths, names))


def _detect_one(path: str, cfg: RunConfig, name: str) -> DefectReport:
    with stage(f"load {path}"):
        img = imaging.load_grayscale(path)
    with stage(f"detect {path}"):
        return detect_image(img, cfg, name=name)


def _write_detect_outputs(report: DefectReport, cfg: RunConfig, dump_block: int | None) -> None:
    out = Path(cfg.out_dir)
    stem = report.name
    base = report.image
    if cfg.display_scale != 1.0:
        base = fusion.scale_for_display(base, cfg.display_scale)
    imaging.save_gray(fusion.edge_overlay(report.mask, base), out / f"{stem}.defects.png")
    imaging.save_gray(report.mask, out / f"{stem}.mask.png")
    for c in report.croppings:
        corner = c.grid.source_corner.value
        write_matrix_csv(c.matrix, out / f"{stem}.{corner}.dissimilarity.csv")
        c.dendrogram.to_json(out / f"{stem}.{corner}.dendrogram.json")
        if cfg.boundaries:
            imaging.save_gray(
                fusion.blocks_to_boundary_mask(c.labels, c.grid),
                out / f"{stem}.boundaries.{corner}.png",
            )
        if cfg.heatmaps:
            imaging.save_gray(matrix_heatmap(c.matrix), out / f"{stem}.{corner}.heatmap.png")
        if dump_block is not None:
            with stage("glcm dump"):
                c.grid.block_rect(dump_block)
                _, block = next(b for b in imaging.partition_blocks(c.grid) if b[0] == dump_block)
                total = sum(glcm.compute_glcm(block, o).counts for o in cfg.offsets)
                glcm.write_counts_csv(total, out / f"{stem}.{corner}.block{dump_block}.glcm.csv")
    (out / f"{stem}.blocks.txt").write_text("\n".join(report.id_lines()) + "\n")


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)

    names = output_names(list(cfg.inputs))

    def run(path):
        report = _detect_one(path, cfg, names[path])
        with stage(f"write {path}"):
            _write_detect_outputs(report, cfg, args.dump_glcm)
        return report

    for report in _map(run, list(cfg.inputs), cfg.workers):
        print(f"{report.name}:")
        for line in report.id_lines():
            print(f"  {line}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    if len(cfg.truth) != len(cfg.inputs):
        raise PreconditionError(
            f"got {len(cfg.truth)} truth masks for {len(cfg.inputs)} inputs"
        )
    types = list(cfg.defect_types) + [""] * (len(cfg.inputs) - len(cfg.defect_types))
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)

    names = output_names(list(cfg.inputs))

    def run(job):
        path, truth_path, dtype = job
        report = _detect_one(path, cfg, names[path])
        with stage(f"load truth {truth_path}"):
            truth = imaging.load_grayscale(truth_path).pixels > 0
        with stage(f"evaluate {path}"):
            return evaluate_report(report, truth, cfg.min_overlap, dtype)

    reports = _map(run, list(zip(cfg.inputs, cfg.truth, types)), cfg.workers)
    out = Path(cfg.out_dir)
    evaluation.write_report_csv(reports, out / "report.csv")
    evaluation.write_report_json(reports, out / "report.json")
    for r in reports:
        print(f"{r.image}: {r.row()}")
    if len(reports) > 1:
        s = evaluation.summarize(reports)
        print(f"average: {evaluation.format_row(sum(r.n_blocks for r in reports), s)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synth.random_spec(
        args.pattern, args.defect, seed=args.seed,
        period=(args.period_rows, args.period_cols),
        tiling=tuple(args.tiles), margin=tuple(args.margin), noise_sigma=args.noise,
    )
    img, truth = synth.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    imaging.save_gray(img, out / "image.png")
    imaging.save_gray(truth, out / "truth.png")
    spec.to_json(out / "spec.json")
    print(f"wrote {out / 'image.png'} ({img.height}x{img.width}), truth.png, spec.json")
    return EXIT_OK


BENCH_COLUMNS = ("n_blocks", "block_rows", "block_cols", "levels", "n_offsets",
                 "n_pairs", "glcm_seconds", "distance_seconds", "distance_sum")


def run_bench(sizes, period_rows=8, period_cols=8, levels=64, seed=0,
              offsets=glcm.DEFAULT_OFFSETS) -> list[dict]:
    """Time signature construction and all-pairs distances on random blocks."""
    rows = []
    for n in sizes:
        rng = np.random.default_rng([seed, n])
        blocks = rng.integers(0, levels, size=(n, period_rows, period_cols))
        t0 = time.perf_counter()
        counts = glcm.stack_counts(blocks, levels, offsets)
        sigs = glcm.signatures_from_counts(counts)
        t_glcm = time.perf_counter() - t0
        row = {"n_blocks": n, "block_rows": period_rows, "block_cols": period_cols,
               "levels": levels, "n_offsets": len(offsets), "n_pairs": n * (n - 1) // 2,
               "glcm_seconds": f"{t_glcm:.6f}", "distance_seconds": "", "distance_sum": ""}
        if n >= 2:
            t0 = time.perf_counter()
            D = dissimilarity_matrix(sigs)
            row["distance_seconds"] = f"{time.perf_counter() - t0:.6f}"
            row["distance_sum"] = f"{D.off_diagonal().sum():.12f}"
        rows.append(row)
    return rows


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise PreconditionError(f"bad --sizes {args.sizes!r}") from exc
    if any(n < 1 for n in sizes):
        raise PreconditionError("block counts must be >= 1")
    rows = run_bench(sizes, args.period_rows, args.period_cols, args.levels, args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "evaluate": cmd_evaluate, "synth": cmd_synth, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ImageIOError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except PreconditionError as exc:
        log.error("%s", exc)
        return EXIT_PRECONDITION
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
