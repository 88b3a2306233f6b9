"""Command-line scripts: convert legacy outputs, generate test fixtures."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .adapters import LAYOUTS
from .fixtures import PROFILES, generate_fixture
from .interchange import image_entry, write_masks_tiff, write_prediction_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgconvert", description="Interchange-format tooling for scene graph outputs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", help="pickle in, interchange files out")
    convert.add_argument("--input", required=True, help="pickled model output")
    convert.add_argument("--layout", choices=sorted(LAYOUTS), default="generic")
    convert.add_argument("--out", required=True, help="output directory")

    genfix = sub.add_parser("genfix", help="generate a synthetic gt/pred fixture pair")
    genfix.add_argument("--seed", type=int, default=0)
    genfix.add_argument("--images", type=int, default=4)
    genfix.add_argument("--instances", type=int, default=4)
    genfix.add_argument("--predicates", type=int, default=5)
    genfix.add_argument("--profile", choices=PROFILES, default="perfect")
    genfix.add_argument("--out", required=True, help="output directory")
    return parser


def run_convert(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = LAYOUTS[args.layout](args.input)
    entries = []
    for image in images:
        seg_filename = None
        if image.masks is not None:
            seg_filename = f"pred_{image.id}.tiff"
            write_masks_tiff(image.masks, out_dir / seg_filename)
        entries.append(
            image_entry(image.id, image.instances, image.triplets, seg_filename=seg_filename)
        )
    pred_path = out_dir / "pred.json"
    write_prediction_file(entries, pred_path)
    print(f"wrote {pred_path} ({len(entries)} images)")
    return 0


def run_genfix(args: argparse.Namespace) -> int:
    gt_path, pred_path = generate_fixture(
        seed=args.seed,
        n_images=args.images,
        n_instances=args.instances,
        n_predicates=args.predicates,
        profile=args.profile,
        out_dir=args.out,
    )
    print(f"wrote {gt_path} and {pred_path}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "convert":
            return run_convert(args)
        return run_genfix(args)
    except NotImplementedError as exc:
        print(f"not implemented: {exc}", file=sys.stderr)
        return 5
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
