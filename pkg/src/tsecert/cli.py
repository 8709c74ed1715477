"""Command-line interface: generate, train, certify, report.

Exit status is 0 whenever the requested stage ran to completion; a
Discard verdict is a result, not an error. Nonzero status is reserved for
broken inputs: unreadable files, bad magic bytes, invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

from .pipeline import cmd_certify, cmd_generate, cmd_report, cmd_train
from .runconfig import CONFIG_KEYS, default_config, load_config, with_output_dir

__all__ = ["main", "build_parser"]


def _config_help() -> str:
    lines = ["config file keys (line format: key = value, '#' comments):", ""]
    for key, (_, doc) in CONFIG_KEYS.items():
        lines.append(f"  {key:<28} {doc}")
    lines.append("")
    lines.append("omitted keys use the built-in defaults; an empty or missing")
    lines.append("--config reproduces the reference scenario end to end.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsecert",
        description="LWR ground-truth generation, density-estimator training, "
                    "and cross-environment model certification.",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text, epilog=_config_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if needs_config:
            p.add_argument("--config", metavar="PATH",
                           help="run configuration file (default: reference scenario)")
            p.add_argument("--output", metavar="DIR",
                           help="override the configured output directory")
        return p

    add("generate", "write ground-truth dataset files for every environment")
    p_train = add("train", "fit the density estimator on sparse samples")
    p_train.add_argument("--dataset", metavar="PATH",
                         help="training dataset (default: the training "
                              "environment's file in the output directory)")
    p_train.add_argument("--quiet", action="store_true",
                         help="suppress progress lines")
    p_cert = add("certify", "sweep the trained model across environments")
    p_cert.add_argument("--model", metavar="PATH",
                        help="model file (default: model.tsem in the output directory)")
    p_rep = add("report", "consolidate a finished run into summary and plot data",
                needs_config=False)
    p_rep.add_argument("run_dir", metavar="RUN_DIR",
                       help="output directory of a previous run")
    return parser


def _load(args) -> "RunConfig":
    config = load_config(args.config) if args.config else default_config()
    if args.output:
        config = with_output_dir(config, args.output)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            paths = cmd_generate(_load(args))
            print(f"wrote {len(paths)} dataset files to {paths[0].parent}")
        elif args.command == "train":
            progress = None
            if not args.quiet:
                def progress(phase, it, mse):
                    print(f"{phase} iteration {it}: mse {mse:.6e}", flush=True)
            model_path, report_path = cmd_train(
                _load(args), dataset_path=args.dataset, progress=progress)
            print(f"wrote {model_path} and {report_path}")
        elif args.command == "certify":
            csv_path, text_path = cmd_certify(_load(args), model_path=args.model)
            print(text_path.read_text(), end="")
            print(f"wrote {csv_path} and {text_path}")
        elif args.command == "report":
            summary_path, curve_path = cmd_report(args.run_dir)
            print(summary_path.read_text(), end="")
            print(f"wrote {summary_path} and {curve_path}")
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
