"""Command-line front door.

Subcommands: ``gen`` (synthetic sets), ``eval`` (offline accuracy protocol),
``calibrate`` (rejection-threshold sweep), ``replay`` (scenario scripts
through the agent pipeline), ``repl`` (interactive teach/ask session).

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import embeddings as embio
from .embeddings import SyntheticSpec
from .engine import NamingConfig, NamingEngine, load_session, save_session
from .errors import NameThatError
from .evaluate import (
    CORRECTION_MODES,
    EvalConfig,
    calibrate_threshold,
    eval_protocol,
    write_curve_csv,
    write_records_csv,
    write_sweep_csv,
)
from .pipeline import PipelineConfig, load_scenario, parse_command, respond, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="namethat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic embedding set")
    gen.add_argument("--spec", required=True, help="JSON file of generator parameters")
    gen.add_argument("--out", required=True, help="output EMBSET v1 path")
    gen.add_argument("--seed", type=int, default=None, help="override the spec's seed")

    def add_engine_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--d", type=float, default=None,
                       help="similarity scaling before the softmax "
                            "(default: sqrt(dim))")
        p.add_argument("--phi", type=float, default=0.2,
                       help="angle step between word codes, radians")
        p.add_argument("--threshold", type=float, default=None,
                       help="relevance threshold; omit to disable rejection")

    ev = sub.add_parser("eval", help="run the offline evaluation protocol")
    ev.add_argument("--set", dest="set_path", required=True)
    ev.add_argument("--corrections", choices=CORRECTION_MODES, default="off")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default="curve.csv", help="accuracy curve CSV")
    ev.add_argument("--log", default=None,
                    help="per-record outcome CSV (default: <out>_records.csv)")
    ev.add_argument("--post-corrections", action="store_true",
                    help="report each round's accuracy after that round's "
                         "corrections instead of before")
    ev.add_argument("--no-plot", action="store_true",
                    help="skip the PNG next to the curve CSV")
    add_engine_flags(ev)

    cal = sub.add_parser("calibrate", help="sweep rejection thresholds")
    cal.add_argument("--set", dest="set_path", required=True)
    group = cal.add_mutually_exclusive_group(required=True)
    group.add_argument("--unknown", default=None,
                       help="comma-separated labels to hold out as unknown")
    group.add_argument("--holdout", type=int, default=None,
                       help="hold out the last N categories of a seeded shuffle")
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--out", default="sweep.csv", help="sweep table CSV")
    cal.add_argument("--no-plot", action="store_true")

    rp = sub.add_parser("replay", help="replay a scenario script")
    rp.add_argument("--set", dest="set_path", required=True)
    rp.add_argument("--script", required=True)
    rp.add_argument("--speech-seconds-per-word", type=float, default=0.06)
    rp.add_argument("--feedback", action="store_true",
                    help="feed robot speech back into the audio channel")
    rp.add_argument("--session", default=None,
                    help="resume from a saved session snapshot")
    add_engine_flags(rp)

    repl = sub.add_parser("repl", help="interactive teach/ask session")
    repl.add_argument("--set", dest="set_path", required=True)
    repl.add_argument("--session", default=None,
                      help="resume from a saved session snapshot")
    add_engine_flags(repl)

    return parser


def _load_set(path: str) -> embio.EmbeddingSet:
    if not Path(path).exists():
        raise NameThatError(f"no such file: {path}")
    return embio.load(path)


def _cmd_gen(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.exists():
        raise NameThatError(f"no such file: {args.spec}")
    try:
        raw = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise NameThatError(f"{args.spec} is not valid JSON: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = SyntheticSpec(**raw)
    except (TypeError, ValueError) as exc:
        raise NameThatError(f"{args.spec}: bad generator parameters: {exc}") from exc
    generated = embio.generate(spec)
    embio.save(generated, args.out)
    print(
        f"wrote {len(generated)} records ({spec.classes} classes, dim {spec.dim}) "
        f"to {args.out}"
    )
    return EXIT_OK


def _cmd_eval(args) -> int:
    embedding_set = _load_set(args.set_path)
    config = EvalConfig(
        corrections=args.corrections,
        seed=args.seed,
        angle_step=args.phi,
        temperature=args.d,
        relevance_threshold=args.threshold,
        report_post_correction=args.post_corrections,
    )
    result = eval_protocol(embedding_set, config)
    out = Path(args.out)
    log = Path(args.log) if args.log else out.with_name(out.stem + "_records.csv")
    write_curve_csv(result.rows, out)
    write_records_csv(result.outcomes, log)
    if not args.no_plot:
        from .report import plot_eval_curves

        png = out.with_suffix(".png")
        plot_eval_curves({f"corrections={args.corrections}": result.rows}, png)
        print(f"figure: {png}")
    final = result.rows[-1]
    print(f"curve: {out}")
    print(f"records: {log}")
    print(
        f"final round: {final.correct}/{final.evaluated} correct "
        f"(accuracy {final.accuracy:.4f}) over {final.m} categories"
    )
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    embedding_set = _load_set(args.set_path)
    embedding_set.require_labels()
    if args.unknown is not None:
        unknown = [label.strip() for label in args.unknown.split(",") if label.strip()]
        if not unknown:
            raise UsageError("--unknown needs at least one label")
    else:
        if args.holdout < 1:
            raise UsageError("--holdout must be positive")
        import numpy as np

        labels = sorted(set(embedding_set.labels()))
        if args.holdout >= len(labels):
            raise NameThatError(
                f"cannot hold out {args.holdout} of {len(labels)} categories"
            )
        rng = np.random.default_rng(args.seed)
        rng.shuffle(labels)
        unknown = labels[-args.holdout:]
    result = calibrate_threshold(embedding_set, unknown, seed=args.seed)
    write_sweep_csv(result, args.out)
    if not args.no_plot:
        from .report import plot_threshold_sweep

        png = Path(args.out).with_suffix(".png")
        plot_threshold_sweep(result, png)
        print(f"figure: {png}")
    print(f"sweep: {args.out}")
    print(f"held-out unknown categories: {', '.join(sorted(unknown))}")
    print(
        f"recommended threshold: {result.recommended:.4f} "
        f"(balanced accuracy {result.best_balanced_accuracy:.4f})"
    )
    return EXIT_OK


def _load_engine(args, dim: int) -> NamingEngine:
    if args.session is not None:
        if not Path(args.session).exists():
            raise NameThatError(f"no such file: {args.session}")
        return load_session(args.session)
    return NamingEngine(
        NamingConfig(
            dim=dim,
            angle_step=args.phi,
            temperature=args.d,
            relevance_threshold=args.threshold,
        )
    )


def _cmd_replay(args) -> int:
    embedding_set = _load_set(args.set_path)
    script = load_scenario(args.script)
    config = PipelineConfig(
        angle_step=args.phi,
        temperature=args.d,
        relevance_threshold=args.threshold,
        seconds_per_word=args.speech_seconds_per_word,
        feedback=args.feedback,
    )
    engine = _load_engine(args, embedding_set.dim) if args.session else None
    result = run_pipeline(script, embedding_set, config, engine=engine)
    for line in result.transcript.lines():
        print(line)
    return EXIT_OK


def _cmd_repl(args) -> int:
    embedding_set = _load_set(args.set_path)
    engine = _load_engine(args, embedding_set.dim)
    features = None
    interactive = sys.stdin.isatty()
    if interactive:
        print(f"loaded {len(embedding_set)} embeddings (dim {embedding_set.dim}); "
              f"commands: show <id> | this is a <word> | what is this | "
              f"no, this is a <word> | save <path> | quit")
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered in ("quit", "exit"):
            break
        if lowered.startswith("show "):
            ref = line[5:].strip()
            if ref not in embedding_set:
                print(f"unknown id: {ref}")
                continue
            features = embedding_set.get(ref).vector
            continue
        if lowered.startswith("save "):
            target = line[5:].strip()
            save_session(engine, target)
            print(f"session saved to {target}")
            continue
        reply, _ = respond(engine, features, parse_command(line))
        if reply is not None:
            print(reply)
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "eval": _cmd_eval,
    "calibrate": _cmd_calibrate,
    "replay": _cmd_replay,
    "repl": _cmd_repl,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NameThatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
