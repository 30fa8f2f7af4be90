"""Command-line pipeline driver.

JSON results go to standard output, logs to standard error, so the tool
pipes cleanly. Exit code 0 means every requested output was written;
batch failures are listed on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .compose import (
    composite,
    render_record_full,
    synthesize_manifest,
    write_manifest,
)
from .evalmetrics import evaluate
from .fuse import fuse, harden, read_ptm
from .imgcore import (
    AlphaMatte,
    GrayMap,
    laplacian_pyramid,
    load_png,
    save_png,
)
from .trimapgen import (
    RATE_FUR,
    RATE_HAIR,
    RATE_SOLID,
    TrimapParams,
    adaptive_trimap,
    classify_boundary,
    conventional_trimap,
    object_scale,
)

log = logging.getLogger("mattekit")

_CSV_FIELDS = ("stem", "sad", "mse", "mse_x100", "grad", "conn", "region", "pixels")


def _emit(obj) -> None:
    print(json.dumps(obj))


def _thread_count(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        n = int(os.environ.get("MATTEKIT_THREADS", "1"))
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def _require_file(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"not a file: {path}")
    return path


def _load_alpha(path) -> AlphaMatte:
    return AlphaMatte(load_png(path, "gray").plane)


def _parse_rates(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--rates needs three comma-separated values, got {text!r}")
    return tuple(float(p) for p in parts)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_trimap(args) -> int:
    mask = load_png(_require_file(args.mask), "mask")
    parsing = load_png(_require_file(args.hair_mask), "mask") if args.hair_mask else None
    rates = _parse_rates(args.rates) if args.rates else (RATE_HAIR, RATE_FUR, RATE_SOLID)
    classes = classify_boundary(mask, parsing_mask=parsing, fur_object=args.fur)
    d = object_scale(mask)
    params = TrimapParams(d, *rates)
    tri = adaptive_trimap(mask, classes, params)
    save_png(tri, args.out)
    _emit({"D": d, "radii": params.radii(), "out": str(args.out)})
    return 0


def cmd_trimap_conv(args) -> int:
    alpha = _load_alpha(_require_file(args.alpha))
    tri = conventional_trimap(alpha, args.kernel_radius)
    save_png(tri, args.out)
    _emit({"kernel_radius": args.kernel_radius, "out": str(args.out)})
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    manifest = Path(args.manifest) if args.manifest else out_dir / "manifest.jsonl"
    records = synthesize_manifest(args.fg_dir, args.alpha_dir, args.bg_dir,
                                  args.per_fg, args.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    for sub in ("composite", "alpha", "trimap"):
        (out_dir / sub).mkdir(exist_ok=True)
    write_manifest(records, manifest)

    failures = []

    def render_one(item):
        index, record = item
        stem = f"{index:05d}.png"
        try:
            sample, tri = render_record_full(record, out_size=args.out_size)
            save_png(sample.composite, out_dir / "composite" / stem)
            save_png(sample.alpha, out_dir / "alpha" / stem)
            save_png(tri, out_dir / "trimap" / stem)
        except (ValueError, OSError) as exc:
            failures.append((stem, str(exc)))

    items = list(enumerate(records))
    threads = _thread_count(args)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(render_one, items))
    else:
        for item in items:
            render_one(item)

    if failures:
        for stem, msg in sorted(failures):
            log.error("sample %s failed: %s", stem, msg)
        return 1
    _emit({"manifest": str(manifest), "samples": len(records), "out_dir": str(out_dir)})
    return 0


def cmd_compose(args) -> int:
    fg = load_png(_require_file(args.fg), "image")
    bg = load_png(_require_file(args.bg), "image")
    alpha = _load_alpha(_require_file(args.alpha))
    save_png(composite(fg, bg, alpha), args.out)
    _emit({"out": str(args.out)})
    return 0


def cmd_fuse(args) -> int:
    prob = read_ptm(_require_file(args.ptm))
    alpha = _load_alpha(_require_file(args.alpha))
    save_png(fuse(prob, alpha), args.out)
    _emit({"out": str(args.out)})
    return 0


def cmd_harden(args) -> int:
    prob = read_ptm(_require_file(args.ptm))
    save_png(harden(prob), args.out)
    _emit({"out": str(args.out)})
    return 0


def _eval_pair(pred_path, gt_path, trimap_path, region_mode):
    pred = _load_alpha(pred_path)
    gt = _load_alpha(gt_path)
    tri = load_png(trimap_path, "trimap") if trimap_path else None
    return evaluate(pred, gt, tri, region_mode=region_mode)


def _csv_row(stem, report_dict):
    row = {"stem": stem}
    row.update({k: report_dict[k] for k in _CSV_FIELDS if k != "stem"})
    return row


def _append_csv_row(path, row):
    path = Path(path)
    fresh = not path.exists()
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        if fresh:
            writer.writeheader()
        writer.writerow(row)


def _stem_index(directory, what):
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"{what} is not a directory: {directory}")
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def cmd_eval(args) -> int:
    pred_path, gt_path = Path(args.pred), Path(args.gt)
    if args.region == "unknown" and not args.trimap:
        raise ValueError("--region unknown requires --trimap")
    if pred_path.is_dir() != gt_path.is_dir():
        raise ValueError("--pred and --gt must both be files or both directories")
    if not pred_path.is_dir():
        report = _eval_pair(_require_file(pred_path), _require_file(gt_path),
                            _require_file(args.trimap) if args.trimap else None,
                            args.region)
        _emit(report.to_dict())
        if args.csv:
            _append_csv_row(args.csv, _csv_row(pred_path.stem, report.to_dict()))
        return 0

    preds = _stem_index(pred_path, "--pred")
    gts = _stem_index(gt_path, "--gt")
    trimaps = _stem_index(args.trimap, "--trimap") if args.trimap else {}
    only_pred = sorted(set(preds) - set(gts))
    only_gt = sorted(set(gts) - set(preds))
    if only_pred or only_gt:
        raise ValueError(f"stem mismatch between --pred and --gt: "
                         f"pred-only {only_pred}, gt-only {only_gt}")
    if args.trimap:
        missing = sorted(set(preds) - set(trimaps))
        if missing:
            raise ValueError(f"stems missing from --trimap: {missing}")
    if not preds:
        raise ValueError("no PNG pairs to evaluate")

    stems = sorted(preds)
    results = {}
    failures = {}

    def eval_one(stem):
        try:
            results[stem] = _eval_pair(preds[stem], gts[stem],
                                       trimaps.get(stem), args.region)
        except (ValueError, OSError) as exc:
            failures[stem] = str(exc)

    threads = _thread_count(args)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(eval_one, stems))
    else:
        for stem in stems:
            eval_one(stem)

    items = [dict(stem=s, **results[s].to_dict()) for s in stems if s in results]
    payload = {"items": items}
    rows = [_csv_row(item["stem"], item) for item in items]
    if items:
        mean = {k: float(np.mean([item[k] for item in items]))
                for k in ("sad", "mse", "mse_x100", "grad", "conn", "pixels")}
        mean["region"] = args.region
        payload["mean"] = mean
        rows.append(_csv_row("mean", mean))
    _emit(payload)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    if failures:
        for stem in sorted(failures):
            log.error("pair %s failed: %s", stem, failures[stem])
        return 1
    return 0


def cmd_pyramid(args) -> int:
    plane = load_png(_require_file(args.map), "gray")
    stack = laplacian_pyramid(plane, args.levels)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, level in enumerate(stack.levels, start=1):
        name = f"level_{i:02d}.png"
        # Levels are signed; encode as (value+1)/2 so PNG holds [-1,1].
        save_png(GrayMap((level.plane + 1.0) / 2.0), out_dir / name)
        names.append(name)
    _emit({"levels": stack.count, "out_dir": str(out_dir),
           "files": names, "encoding": "(value+1)/2"})
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: MATTEKIT_THREADS or 1)")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="mattekit",
        description="Trimap generation, compositing, fusion and matting evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trimap", parents=[common],
                       help="adaptive trimap from a coarse binary mask")
    p.add_argument("--mask", required=True, help="coarse mask PNG")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hair-mask", help="hair-region parsing mask PNG")
    group.add_argument("--fur", action="store_true", help="treat the whole boundary as fur")
    p.add_argument("--rates", help="hair,fur,solid dilation rates (default 0.035,0.025,0.015)")
    p.add_argument("--out", required=True, help="output trimap PNG")
    p.set_defaults(func=cmd_trimap)

    p = sub.add_parser("trimap-conv", parents=[common],
                       help="conventional erosion-dilation trimap from an alpha matte")
    p.add_argument("--alpha", required=True, help="alpha matte PNG")
    p.add_argument("--kernel-radius", required=True, type=int, help="erosion/dilation radius")
    p.add_argument("--out", required=True, help="output trimap PNG")
    p.set_defaults(func=cmd_trimap_conv)

    p = sub.add_parser("synth", parents=[common],
                       help="synthesize a composited training set from fg/alpha/bg pools")
    p.add_argument("--fg-dir", required=True, help="foreground PNG directory")
    p.add_argument("--alpha-dir", required=True, help="alpha PNG directory (stems match fg)")
    p.add_argument("--bg-dir", required=True, action="append",
                   help="background PNG directory (repeatable, sampled equally)")
    p.add_argument("--per-fg", required=True, type=int, help="samples per foreground")
    p.add_argument("--out-dir", required=True, help="output directory for PNG triplets")
    p.add_argument("--manifest", help="manifest path (default OUT_DIR/manifest.jsonl)")
    p.add_argument("--out-size", type=int, default=320, help="rendered sample size (default 320)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compose", parents=[common],
                       help="composite fg over bg with an alpha matte")
    p.add_argument("--fg", required=True)
    p.add_argument("--bg", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--out", required=True, help="output composite PNG")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("fuse", parents=[common],
                       help="fuse a probabilistic trimap with a matting alpha")
    p.add_argument("--ptm", required=True, help="probabilistic trimap file")
    p.add_argument("--alpha", required=True, help="matting-network alpha PNG")
    p.add_argument("--out", required=True, help="output fused alpha PNG")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("harden", parents=[common],
                       help="argmax a probabilistic trimap into a hard trimap PNG")
    p.add_argument("--ptm", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_harden)

    p = sub.add_parser("eval", parents=[common],
                       help="matting metrics for a pred/gt pair or directory batch")
    p.add_argument("--pred", required=True, help="predicted alpha PNG or directory")
    p.add_argument("--gt", required=True, help="ground-truth alpha PNG or directory")
    p.add_argument("--trimap", help="trimap PNG or directory (needed for --region unknown)")
    p.add_argument("--region", choices=("whole", "unknown"), default="whole")
    p.add_argument("--csv", help="CSV summary path (batch adds a mean row)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pyramid", parents=[common],
                       help="dump Laplacian pyramid levels as PNGs for inspection")
    p.add_argument("--map", required=True, help="grayscale PNG")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pyramid)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
