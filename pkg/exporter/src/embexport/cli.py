"""Command line: ``embexport export --in <dir> --out <file>``.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backbone import DEFAULT_MODEL, OFFLINE_MODEL, ModelLoadError
from .export import ExportJob, export


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="embexport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("export", help="embed an image folder into an EMBSET file")
    ex.add_argument("--in", dest="input_dir", required=True, help="image folder")
    ex.add_argument("--out", dest="output_path", required=True,
                    help="output EMBSET v1 path")
    ex.add_argument("--labels-from-dirs", action="store_true",
                    help="label each image with its immediate parent directory")
    ex.add_argument("--model", default=DEFAULT_MODEL,
                    help=f"backbone identifier (default {DEFAULT_MODEL}; "
                         f"{OFFLINE_MODEL} runs offline with seeded weights)")
    ex.add_argument("--weights", default=None,
                    help="state-dict file for the ViT-S/16 architecture")
    ex.add_argument("--seed", type=int, default=0,
                    help=f"weight seed for {OFFLINE_MODEL}")
    ex.add_argument("--batch-size", type=int, default=8)
    ex.add_argument("--summary", default=None,
                    help="also write the JSON summary to this path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if args.batch_size < 1:
        print("usage error: --batch-size must be positive", file=sys.stderr)
        return 1
    job = ExportJob(
        input_dir=args.input_dir,
        output_path=args.output_path,
        labels_from_dirs=args.labels_from_dirs,
        model_id=args.model,
        weights=args.weights,
        seed=args.seed,
        batch_size=args.batch_size,
    )
    try:
        summary = export(job)
    except (ModelLoadError, NotADirectoryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = summary.to_json()
    print(text)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
