"""Command-line interface.

Subcommands: screen, linearize, eval (pixel | contrail | relaxed), sample,
coverage, serve. Rasters use the binary sidecar format, segments use JSONL,
and tabular inputs use CSV; reports are JSON.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import metrics, sampler
from .detector import ScreenParams, screen
from .grids import Grid, read_raster, write_raster
from .linearize import (
    binarize,
    detect_segments,
    merge_segments,
    read_segments_jsonl,
    write_segments_jsonl,
)

log = logging.getLogger("contrailkit")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCREEN_FAILED = 3


def _load_params(path: str | None, cls):
    if path is None:
        return cls()
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return cls(**obj)


def _cmd_screen(args: argparse.Namespace) -> int:
    grid = read_raster(args.input)
    params = _load_params(args.params, ScreenParams)
    mask, passed = screen(grid, params)
    if args.out_mask:
        write_raster(
            Grid(values=mask.astype(np.float64), missing=grid.missing, geo=grid.geo),
            args.out_mask,
        )
    print(json.dumps({"passed": passed, "positive_pixels": int(mask.sum())}))
    return EXIT_OK if passed else EXIT_SCREEN_FAILED


def _cmd_linearize(args: argparse.Namespace) -> int:
    grid = read_raster(args.mask)
    mask = binarize(grid.values, args.threshold) & ~grid.missing
    segs = detect_segments(
        mask,
        width_tol=args.width_tol,
        min_component_px=args.min_component_px,
        source_threshold=args.threshold,
    )
    merged = merge_segments(segs)
    write_segments_jsonl(merged, args.out)
    print(json.dumps({"segments": len(merged)}))
    return EXIT_OK


def _pair_files(pred_dir: str, gt_dir: str, pattern: str) -> list[tuple[Path, Path]]:
    preds = sorted(Path(pred_dir).glob(pattern))
    if not preds:
        raise FileNotFoundError(f"no {pattern} files in {pred_dir}")
    pairs = []
    for pred in preds:
        gt = Path(gt_dir) / pred.name
        if not gt.exists():
            raise FileNotFoundError(f"missing ground truth for {pred.name} in {gt_dir}")
        pairs.append((pred, gt))
    return pairs


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.kind == "pixel":
        pairs = _pair_files(args.pred, args.gt, "*.btg")
        preds = [read_raster(p).values for p, _ in pairs]
        gts = [read_raster(g).values > 0.5 for _, g in pairs]
        curve = metrics.pixel_pr_curve(preds, gts, n_thresholds=args.thresholds)
        report = {"kind": "pixel", "n_images": len(pairs), **curve.to_json()}
    elif args.kind == "contrail":
        pairs = _pair_files(args.pred, args.gt, "*.btg")
        preds = [read_raster(p).values for p, _ in pairs]
        gts = []
        for _, g in pairs:
            gts.append(read_segments_jsonl(g.with_suffix(".jsonl")))
        thresholds = np.linspace(0.0, 1.0, args.thresholds)
        curve = metrics.contrail_pr_curve(preds, gts, thresholds)
        report = {"kind": "contrail", "n_images": len(pairs), **curve.to_json()}
    else:
        pairs = _pair_files(args.pred, args.gt, "*.btg")
        per_image = []
        for p, g in pairs:
            pred = read_raster(p).values > 0.5
            gt = read_raster(g).values > 0.5
            r = metrics.relaxed_pr(pred, gt, rho=args.rho)
            per_image.append({"image": p.name, **r.to_json()})
        report = {"kind": "relaxed", "rho": args.rho, "images": per_image}
    out = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return EXIT_OK


def _cmd_sample(args: argparse.Namespace) -> int:
    features = sampler.read_features_csv(args.features)
    policy = _load_params(args.policy, sampler.KeepPolicy)
    kept = list(sampler.sample_scenes(features, seed=args.seed, policy=policy))
    n = sampler.write_kept_csv(kept, args.out)
    print(json.dumps({"total": len(features), "kept": n}))
    return EXIT_OK


def _cmd_coverage(args: argparse.Namespace) -> int:
    rows = []
    for path in sorted(Path(args.detections).glob("*.btg")):
        grid = read_raster(path)
        meta_path = path.with_suffix(".json")
        meta = (
            json.loads(meta_path.read_text(encoding="utf-8"))
            if meta_path.exists()
            else {}
        )
        rows.append((path.name, grid, meta))
    if not rows:
        raise FileNotFoundError(f"no .btg files in {args.detections}")
    out_rows = []
    for name, grid, meta in rows:
        entry = {
            "image": name,
            "coverage_percent": cov.coverage_fraction(grid, args.threshold),
        }
        if args.by == "hour" and "utc_hour" in meta and "center_lon" in meta:
            entry["local_hour"] = cov.local_hour(
                float(meta["utc_hour"]), float(meta["center_lon"])
            )
        if args.by == "gridbox" and "center_lat" in meta and "center_lon" in meta:
            box = cov.gridbox(float(meta["center_lat"]), float(meta["center_lon"]))
            entry["gridbox_lat"], entry["gridbox_lon"] = box
        out_rows.append(entry)
    header = sorted({k for row in out_rows for k in row})
    lines = [",".join(header)]
    for row in out_rows:
        lines.append(",".join(str(row.get(k, "")) for k in header))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .annotate.service import create_app
    from .annotate.store import AnnotationStore

    app = create_app(AnnotationStore(Path(args.store)), Path(args.frames))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrailkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("screen", help="run the oriented-line screen on a raster")
    p.add_argument("--input", required=True, help="temperature-difference raster (.btg)")
    p.add_argument("--params", help="JSON file of screen parameters")
    p.add_argument("--out-mask", help="write the detection mask as a raster")
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("linearize", help="vectorize a probability raster into segments")
    p.add_argument("--mask", required=True, help="probability raster (.btg)")
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--width-tol", type=float, default=1.5)
    p.add_argument("--min-component-px", type=int, default=10)
    p.add_argument("--out", required=True, help="output segments JSONL")
    p.set_defaults(func=_cmd_linearize)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("kind", choices=["pixel", "contrail", "relaxed"])
    p.add_argument("--pred", required=True, help="directory of prediction rasters")
    p.add_argument("--gt", required=True, help="directory of ground-truth files")
    p.add_argument("--thresholds", type=int, default=10000)
    p.add_argument("--rho", type=int, default=2)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sample", help="deterministically sample scenes by features")
    p.add_argument("--features", required=True, help="scene features CSV")
    p.add_argument("--policy", help="JSON file of keep-policy factors")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output CSV of kept scenes")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("coverage", help="coverage statistics over detection rasters")
    p.add_argument("--detections", required=True, help="directory of probability rasters")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--by", choices=["none", "hour", "gridbox"], default="none")
    p.add_argument("--out", help="output CSV")
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--store", required=True, help="annotation store directory")
    p.add_argument("--frames", required=True, help="directory of frame PNGs")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
