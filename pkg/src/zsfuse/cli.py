"""Command-line front end.

Subcommands::

    run      full pipeline from a JSON config
    score    compute per-method score matrices to a directory
    fuse     calibrate + fuse previously computed scores
    eval     evaluate previously fused probabilities
    split    write a deterministic closed/open split
    prompts  emit reference-generation prompt text or a batch file
    synth    generate a synthetic dataset bundle
    report   convert a JSON report to CSV

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, pipeline, prompts, store
from .errors import ZsfuseError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zsfuse",
                     description="Confidence-weighted zero-shot fusion engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("score", help="compute per-method score matrices")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("fuse", help="calibrate and fuse score matrices")
    p.add_argument("--config", required=True)
    p.add_argument("--scores", required=True, help="directory from `score`")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="evaluate fused probabilities")
    p.add_argument("--config", required=True)
    p.add_argument("--probs", required=True, help="directory from `fuse`")

    p = sub.add_parser("split", help="write a deterministic closed/open split")
    p.add_argument("--catalog", required=True)
    p.add_argument("--m", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--dataset", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("prompts", help="emit prompt text")
    p.add_argument("--mode", required=True,
                   choices=["analysis", "grouping", "confirmation",
                            "similarity", "generation"])
    p.add_argument("--classes", help="comma-separated names (analysis mode)")
    p.add_argument("--class-a", dest="class_a")
    p.add_argument("--class-b", dest="class_b")
    p.add_argument("--class", dest="class_name")
    p.add_argument("--cc", help="shared appearance features (generation mode)")
    p.add_argument("--batch", help="write a JSON prompt batch instead of stdout")

    p = sub.add_parser("synth", help="generate a synthetic bundle")
    p.add_argument("--classes", required=True, type=int)
    p.add_argument("--samples-per-class", type=int, default=50)
    p.add_argument("--dim", required=True, type=int)
    p.add_argument("--noise", default="0.6,0.9,0.5",
                   help="three comma-separated per-method noise scales")
    p.add_argument("--refs", type=int, default=3, help="references per class")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="convert a JSON report to CSV")
    p.add_argument("--json", dest="json_path", required=True)
    p.add_argument("--out", required=True)

    return parser


def _cmd_prompts(args) -> None:
    if args.mode == "analysis":
        if not args.classes:
            raise ZsfuseError("analysis mode requires --classes")
        text = prompts.analysis_prompt([c for c in args.classes.split(",") if c])
    elif args.mode == "grouping":
        text = prompts.grouping_prompt()
    elif args.mode == "confirmation":
        text = prompts.confirmation_prompt()
    elif args.mode == "similarity":
        if not (args.class_a and args.class_b):
            raise ZsfuseError("similarity mode requires --class-a and --class-b")
        text = prompts.similarity_prompt(args.class_a, args.class_b)
    else:
        if not args.class_name:
            raise ZsfuseError("generation mode requires --class")
        text = prompts.generation_prompt(args.class_name, args.cc)
    if args.batch:
        entry = {"mode": args.mode, "prompt": text}
        if args.class_name:
            entry["class"] = args.class_name
        Path(args.batch).write_text(prompts.prompt_batch([entry]))
    else:
        print(text)


def _cmd_synth(args) -> None:
    noise = tuple(float(x) for x in args.noise.split(","))
    bundle = evaluation.generate_synthetic_bundle(
        args.classes, args.samples_per_class, args.dim, noise, args.refs,
        args.seed)
    path = store.save_bundle(bundle, args.out)
    print(path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = pipeline.load_config(args.config)
            report = pipeline.run_pipeline(cfg)
            if cfg.report_path is None:
                sys.stdout.write(evaluation.format_report_json(report))
        elif args.command == "score":
            pipeline.run_score_stage(pipeline.load_config(args.config), args.out)
        elif args.command == "fuse":
            pipeline.run_fuse_stage(pipeline.load_config(args.config),
                                    args.scores, args.out)
        elif args.command == "eval":
            cfg = pipeline.load_config(args.config)
            report = pipeline.run_eval_stage(cfg, args.probs)
            if cfg.report_path is None:
                sys.stdout.write(evaluation.format_report_json(report))
        elif args.command == "split":
            catalog = store.ClassCatalog.from_dict(
                json.loads(Path(args.catalog).read_text()))
            spec = evaluation.split_catalog(catalog, args.m, args.seed,
                                            args.dataset)
            Path(args.out).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
        elif args.command == "prompts":
            _cmd_prompts(args)
        elif args.command == "synth":
            _cmd_synth(args)
        elif args.command == "report":
            report = evaluation.parse_report_json(Path(args.json_path).read_text())
            evaluation.emit_report(report, "csv", args.out)
    except (ZsfuseError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
