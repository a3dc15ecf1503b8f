"""Command-line entry points: tattooed-export and tattooed-import."""

from __future__ import annotations

import argparse
import json
import sys

from .convert import export, import_back
from .errors import ExporterError


def export_main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="tattooed-export",
        description="Convert a weight checkpoint (.pt/.pth/.bin/.npz) to a .tnsr container.",
    )
    parser.add_argument("checkpoint", help="source checkpoint file")
    parser.add_argument("out", help="destination .tnsr path")
    parser.add_argument("--json", action="store_true", help="print the export manifest")
    args = parser.parse_args(argv)
    try:
        manifest = export(args.checkpoint, args.out)
    except (ExporterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(3)
    if args.json:
        print(json.dumps(manifest.to_dict()))
    else:
        print(f"exported {len(manifest.name_mapping)} tensors to {args.out}")
        for name, dtype in manifest.coercions:
            print(f"  coerced {name}: {dtype} -> f32")


def import_main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="tattooed-import",
        description="Write container values back into a checkpoint shaped like the template.",
    )
    parser.add_argument("container", help="source .tnsr path")
    parser.add_argument("template", help="checkpoint providing names, shapes and metadata")
    parser.add_argument("out", help="destination checkpoint path")
    args = parser.parse_args(argv)
    try:
        import_back(args.container, args.template, args.out)
    except (ExporterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(3)
    print(f"wrote {args.out}")
