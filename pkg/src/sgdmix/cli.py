"""Command-line interface: saliency extraction, single-pair mixing,
full dataset augmentation, and manifest reporting.

Exit codes are a stable contract: 0 success, 1 runtime failures,
2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .imaging import (
    ImagingError,
    load_image,
    load_saliency,
    resize_bilinear,
    resize_image_bilinear,
    save_image,
    save_saliency,
)
from .masking import composite, otsu_threshold, union_masks
from .pipeline import (
    AugmentationConfig,
    PipelineError,
    augment_dataset,
    derive_seed,
    load_manifest,
    _match_channels,
)
from .report import render_report
from .saliency import SaliencyError, SpectralResidualParams, spectral_residual
from .selection import SelectionError, load_index, sample_target_batch, select_target

log = logging.getLogger("sgdmix")

_IMAGE_EXTS = (".png", ".jpg", ".jpeg")


def _parse_strengths(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad strength list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("strength list is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgdmix",
        description="Saliency-guided mixing and diffusion-refined dataset augmentation.",
    )
    parser.add_argument(
        "--log-level",
        choices=("debug", "info", "warning", "error"),
        default="warning",
        help="logging verbosity (default: warning)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sal = sub.add_parser("saliency", help="write saliency maps for images")
    p_sal.add_argument("input", help="image file or directory of images")
    p_sal.add_argument("--out", required=True, help="output directory")
    p_sal.add_argument("--resize-edge", type=int, default=64)
    p_sal.add_argument("--filter-size", type=int, default=3)
    p_sal.add_argument("--sigma", type=float, default=2.5)

    p_mix = sub.add_parser("mix", help="mix one source entry against a sampled batch")
    p_mix.add_argument("--index", required=True, help="dataset index JSON")
    p_mix.add_argument("--source-id", type=int, required=True)
    p_mix.add_argument("--out", default=".", help="output directory (default: cwd)")
    p_mix.add_argument("--batch-size", type=int, default=50)
    p_mix.add_argument("--seed", type=int, default=0)
    p_mix.add_argument(
        "--saliency-source",
        choices=("ingest", "spectral-residual"),
        default="ingest",
    )

    p_aug = sub.add_parser("augment", help="run the full augmentation pipeline")
    p_aug.add_argument("--index", required=True, help="dataset index JSON")
    p_aug.add_argument("--out", required=True, help="output directory")
    p_aug.add_argument("--batch-size", type=int, default=50)
    p_aug.add_argument("--strengths", type=_parse_strengths, default=(0.5, 0.7, 0.9))
    p_aug.add_argument("--multiplier", type=int, default=5)
    p_aug.add_argument("--replace-prob", type=float, default=0.1)
    p_aug.add_argument("--confidence", type=float, default=0.9)
    p_aug.add_argument("--refiner", choices=("identity", "noise", "remote"), default="identity")
    p_aug.add_argument(
        "--endpoint",
        default=os.environ.get("SGDMIX_ENDPOINT"),
        help="refine service address (or set SGDMIX_ENDPOINT)",
    )
    p_aug.add_argument("--seed", type=int, default=0)
    p_aug.add_argument("--workers", type=int, default=1)
    p_aug.add_argument("--dry-run", action="store_true", help="print the plan, write nothing")
    p_aug.add_argument(
        "--saliency-source",
        choices=("ingest", "spectral-residual"),
        default="ingest",
    )

    p_rep = sub.add_parser("report", help="render manifest summary figures")
    p_rep.add_argument("--manifest", required=True, help="manifest JSONL path")
    p_rep.add_argument("--out", default=None, help="figure directory (default: next to manifest)")
    p_rep.add_argument("--index", default=None, help="optional index JSON for class names")

    return parser


def cmd_saliency(args) -> int:
    try:
        params = SpectralResidualParams(args.resize_edge, args.filter_size, args.sigma)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if os.path.isdir(args.input):
        names = sorted(
            n for n in os.listdir(args.input) if n.lower().endswith(_IMAGE_EXTS)
        )
        paths = [os.path.join(args.input, n) for n in names]
        if not paths:
            print(f"warning: no images found in {args.input}", file=sys.stderr)
            return 0
    elif os.path.exists(args.input):
        paths = [args.input]
    else:
        print(f"error: no such input: {args.input}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    status = 0
    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        try:
            sal = spectral_residual(load_image(path), params)
            save_saliency(sal, os.path.join(args.out, f"{stem}.saliency.png"))
        except (ImagingError, SaliencyError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            status = 1
    return status


def cmd_mix(args) -> int:
    try:
        index = load_index(args.index)
    except SelectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not 0 <= args.source_id < len(index):
        print(
            f"error: source id {args.source_id} outside 0..{len(index) - 1}",
            file=sys.stderr,
        )
        return 2

    cfg = AugmentationConfig(
        batch_size=args.batch_size,
        master_seed=args.seed,
        saliency_source=args.saliency_source,
    )

    def map_of(entry_id):
        if cfg.saliency_source == "ingest":
            path = index.entries[entry_id].saliency_path
            if path is None:
                raise PipelineError(f"entry {entry_id} carries no saliency path")
            return load_saliency(path)
        return spectral_residual(load_image(index.entries[entry_id].image_path))

    try:
        batch_seed = derive_seed(cfg.master_seed, args.source_id, 0, "batch")
        candidate_ids = sample_target_batch(index, args.source_id, cfg.batch_size, batch_seed)
        source_img = load_image(index.entries[args.source_id].image_path)
        source_map = map_of(args.source_id)
        candidates = [
            (cid, resize_bilinear(map_of(cid), source_map.width, source_map.height))
            for cid in candidate_ids
        ]
        outcome = select_target(source_map, candidates)
        target_map = dict(candidates)[outcome.target_entry_id]
        source_otsu = otsu_threshold(source_map)
        target_otsu = otsu_threshold(target_map)
        mask = union_masks(source_otsu.mask, target_otsu.mask)
        target_img = _match_channels(
            resize_image_bilinear(
                load_image(index.entries[outcome.target_entry_id].image_path),
                source_img.width,
                source_img.height,
            ),
            source_img.channels,
        )
        mixed = composite(mask, source_img, target_img)
    except (ImagingError, SaliencyError, SelectionError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    image_path = os.path.join(args.out, f"mix_{args.source_id:05d}.png")
    report_path = os.path.join(args.out, f"mix_{args.source_id:05d}.json")
    save_image(mixed, image_path)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "source_entry_id": args.source_id,
                "target_entry_id": outcome.target_entry_id,
                "l2_distance": outcome.l2_distance,
                "source_threshold": source_otsu.threshold,
                "target_threshold": target_otsu.threshold,
                "batch_seed": batch_seed,
                "candidate_ids": list(outcome.candidate_ids),
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    print(f"mixed image: {image_path}")
    print(f"report: {report_path}")
    return 0


def cmd_augment(args) -> int:
    try:
        cfg = AugmentationConfig(
            batch_size=args.batch_size,
            strengths=args.strengths,
            expansion_multiplier=args.multiplier,
            replacement_probability=args.replace_prob,
            smoothing_confidence=args.confidence,
            master_seed=args.seed,
            refiner=args.refiner,
            endpoint=args.endpoint,
            saliency_source=args.saliency_source,
        )
        index = load_index(args.index)
    except (ValueError, SelectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    total = len(index) * cfg.expansion_multiplier
    if args.dry_run:
        print(f"plan: {len(index)} entries x multiplier {cfg.expansion_multiplier} = {total} samples")
        print(f"plan: classes: {len(index.classes)}, batch size {cfg.batch_size}")
        print(f"plan: strengths {list(cfg.strengths)}, refiner {cfg.refiner}")
        print(f"plan: output dir {args.out} (nothing written, dry run)")
        return 0

    started = time.monotonic()
    try:
        result = augment_dataset(index, cfg, args.out, workers=args.workers)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImagingError, SaliencyError, SelectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    elapsed = time.monotonic() - started

    print(f"{len(result.records)} generated, {len(result.failures)} failed in {elapsed:.2f}s")
    print(f"manifest: {result.manifest_path}")
    if result.failures:
        print(f"failures: {result.failures_path}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    try:
        records = load_manifest(args.manifest)
    except (FileNotFoundError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    class_names = None
    if args.index:
        try:
            class_names = list(load_index(args.index).classes)
        except SelectionError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    out_dir = args.out or os.path.dirname(os.path.abspath(args.manifest))
    try:
        written = render_report(records, out_dir, class_names)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"figure: {path}")
    return 0


_COMMANDS = {
    "saliency": cmd_saliency,
    "mix": cmd_mix,
    "augment": cmd_augment,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    return _COMMANDS[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
