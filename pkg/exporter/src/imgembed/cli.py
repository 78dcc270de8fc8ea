"""Command-line entry: flags mirror the manifest fields."""

from __future__ import annotations

import argparse
import sys

from .errors import ImgembedError
from .export import export_features
from .manifest import DEFAULT_CHECKPOINT, ExportManifest, load_manifest, manifest_from_root


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imgembed",
        description="Export pretrained image embeddings to binary feature files",
    )
    parser.add_argument("--manifest", help="manifest JSON (overrides all other flags)")
    parser.add_argument("--root", help="image-folder dataset root")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")
    parser.add_argument(
        "--checkpoint",
        default=DEFAULT_CHECKPOINT,
        help="hub:<repo>#<entry> or a local TorchScript file",
    )
    parser.add_argument("--projection", help="optional TorchScript projection head")
    parser.add_argument(
        "--base-classes",
        nargs="+",
        dest="base_classes",
        help="class names split into support+stream (default: all classes)",
    )
    parser.add_argument(
        "--support-fraction", type=float, default=0.5, dest="support_fraction"
    )
    parser.add_argument("--batch-size", type=int, default=16, dest="batch_size")
    parser.add_argument("--image-size", type=int, default=224, dest="image_size")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.manifest:
            manifest = load_manifest(args.manifest)
        else:
            if not args.root or not args.out_dir:
                print("error: --root and --out-dir are required without --manifest", file=sys.stderr)
                return 2
            manifest = manifest_from_root(
                args.root,
                args.out_dir,
                checkpoint=args.checkpoint,
                projection=args.projection,
                base_classes=tuple(args.base_classes) if args.base_classes else None,
                support_fraction=args.support_fraction,
                batch_size=args.batch_size,
                image_size=args.image_size,
            )
        result = export_features(manifest)
    except (ImgembedError, ValueError) as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 2
    print(
        f"exported {result.support_count} support + {result.stream_count} stream "
        f"features (d={result.dim}) to {manifest.output_dir}"
        + (f"; skipped {len(result.skipped)} unreadable" if result.skipped else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
