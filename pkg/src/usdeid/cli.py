"""Command-line surface.

One subcommand per batch mode plus the analysis helpers and the phantom
generator. Exit codes: 0 success, 1 job-level failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ingest, metrics, pipeline, synth
from .roi import Tunables

JSON_SCHEMA_VERSION = 1

_BATCH_COMMANDS = {
    "deid": "deid",
    "deid-clean": "deid_clean",
    "deid-one": "deid_one",
    "deid-us": "deid_us",
    "find-txt": "find_txt",
    "convert": "convert",
}

_BATCH_HELP = {
    "deid": "mask burned-in text, keep full-size frames",
    "deid-clean": "deid plus small-feature removal",
    "deid-one": "deid plus crop to the single most salient component",
    "deid-us": "deid plus scan-region isolation and crop",
    "find-txt": "write the text CSV only, no images",
    "convert": "re-emit frames losslessly without de-identification",
}


def _threshold(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"threshold {value!r} is not an integer")
    if not 0 <= n <= 255:
        raise argparse.ArgumentTypeError(f"threshold {n} outside [0, 255]")
    return n


def _color(value: str) -> tuple[int, int, int]:
    parts = value.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"color {value!r} is not R,G,B")
    rgb = tuple(int(p) for p in parts)
    if any(not 0 <= v <= 255 for v in rgb):
        raise argparse.ArgumentTypeError(f"color {value!r} outside 0-255")
    return rgb


def parse_config_file(path: Path) -> Tunables:
    """Tunables from `key = value` lines; `#` starts a comment."""
    mapping = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"bad config line {raw!r}")
        mapping[key.strip()] = value.strip()
    return Tunables.from_mapping(mapping)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usdeid",
        description="De-identify image stacks: mask burned-in text, isolate "
                    "the scan region, re-emit lossless frames with audit CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)

    for command, help_text in _BATCH_HELP.items():
        p = sub.add_parser(command, help=help_text)
        p.add_argument("--input", required=True, type=Path, help="input directory")
        p.add_argument("--output", required=True, type=Path, help="output directory")
        p.add_argument("--rename-files", action="store_true",
                       help="rename outputs to 10 random alphanumerics")
        p.add_argument("--threshold", type=_threshold, default=0,
                       help="background intensity (0-255, default 0)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for rename randomness")
        p.add_argument("--config", type=Path, default=None,
                       help="tunables file, key = value per line")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker threads (default: logical CPUs)")
        p.add_argument("--json", action="store_true",
                       help="print a machine-readable summary")

    p = sub.add_parser("dice", help="overlap score between two mask images")
    p.add_argument("pred", type=Path)
    p.add_argument("true", type=Path)
    p.add_argument("--k", type=int, default=1, help="pixel value meaning set")

    p = sub.add_parser("imshowpair", help="color-coded mask comparison image")
    p.add_argument("pred", type=Path)
    p.add_argument("true", type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--color1", type=_color, default=metrics.DEFAULT_COLOR1)
    p.add_argument("--color2", type=_color, default=metrics.DEFAULT_COLOR2)

    p = sub.add_parser("color-select", help="print the pixel value at --x/--y")
    p.add_argument("image", type=Path)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)

    p = sub.add_parser("synth", help="generate a ground-truth phantom corpus")
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-kind", type=int, default=10)
    p.add_argument("--frames", type=int, default=8)

    return parser


def _load_image(path: Path) -> np.ndarray:
    stack, _ = ingest.load_stack(path)
    return stack.frames[0]


def _run_batch(args, mode: str) -> int:
    tunables = Tunables()
    if args.config is not None:
        tunables = parse_config_file(args.config)
    cfg = pipeline.JobConfig(
        input_path=args.input, output_path=args.output, mode=mode,
        rename_files=args.rename_files, threshold=args.threshold,
        tunables=tunables, seed=args.seed, jobs=args.jobs)
    result = pipeline.run(cfg)
    if args.json:
        print(json.dumps({
            "schema_version": JSON_SCHEMA_VERSION,
            "mode": mode,
            "processed": [{
                "source": p.source_id, "output": p.output_id,
                "frames": p.frames, "before_bytes": p.before_bytes,
                "after_bytes": p.after_bytes, "fallback": p.fallback,
            } for p in result.processed],
            "skipped": [{"source": s.source_id, "reason": s.reason}
                        for s in result.skipped],
            "text_records": len(result.records),
        }))
    else:
        print(f"{mode}: {len(result.processed)} processed, "
              f"{len(result.skipped)} skipped, "
              f"{len(result.records)} text records -> {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command in _BATCH_COMMANDS:
            return _run_batch(args, _BATCH_COMMANDS[args.command])

        if args.command == "dice":
            score = metrics.dice_score(_load_image(args.pred),
                                       _load_image(args.true), args.k)
            print(score)
            return 0

        if args.command == "imshowpair":
            overlay = metrics.imshowpair(_load_image(args.pred) != 0,
                                         _load_image(args.true) != 0,
                                         args.color1, args.color2)
            from PIL import Image

            Image.fromarray(overlay).save(args.output, format="PNG")
            print(f"wrote {args.output}")
            return 0

        if args.command == "color-select":
            print(metrics.color_select(_load_image(args.image), args.x, args.y))
            return 0

        if args.command == "synth":
            return _run_synth(args)
    except ValueError as exc:
        parser.error(str(exc))  # exits 2
    except Exception as exc:  # job-level failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _run_synth(args) -> int:
    args.output.mkdir(parents=True, exist_ok=True)
    specs = synth.make_phantom_specs(args.seed, args.per_kind, args.frames)
    for i, spec in enumerate(specs):
        stack, truth = synth.render(spec)
        name = f"phantom_{i:03d}_{spec.kind}"
        data = synth.author_dicom(stack, {"PatientName": "DOE^JANE",
                                          "PatientID": f"{1000 + i}"})
        (args.output / f"{name}.dcm").write_bytes(data)
        (args.output / f"{name}_truth.pgm").write_bytes(
            ingest.write_pgm(truth.roi_mask.astype(np.uint8) * 255))
        (args.output / f"{name}_spec.txt").write_text(synth.spec_to_text(spec),
                                                      encoding="utf-8")
    print(f"wrote {len(specs)} phantoms to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
