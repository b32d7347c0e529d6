"""Command-line entry point: ``vilayer {generate,train,evaluate,plot,run,suite}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from ..tensorio import FormatError
from . import pipeline, suite
from .config import METHODS, ConfigError, ExperimentConfig, config_from_dict, load_config


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment JSON (defaults to OUT/config.json, "
                        "then built-in defaults)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", type=Path, default=Path("run"), help="run directory")
    common.add_argument("--method", choices=METHODS + ("all",), default="all")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vilayer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("generate", "write the synthetic dataset and frozen network"),
                        ("train", "run the selected solver(s) and write traces"),
                        ("evaluate", "compute SSIM/PSNR/error metrics"),
                        ("plot", "render trace CSVs as SVG charts"),
                        ("run", "generate, train, evaluate and plot in one go"),
                        ("suite", "near-solvable instance comparison, writes OUT/suite.csv")):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def _config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif (args.out / "config.json").exists() and args.command != "generate":
        cfg = load_config(args.out / "config.json")
    else:
        cfg = ExperimentConfig().validate()
    if args.seed is not None:
        raw = cfg.to_dict()
        raw["seed"] = args.seed
        cfg = config_from_dict(raw)
    return cfg


def _suite(cfg, out):
    results = suite.run_suite(cfg, seeds=(cfg.seed, cfg.seed + 1, cfg.seed + 2))
    suite.write_suite(results, out / "suite.csv")
    for r in results:
        vi = " ".join(f"{f}:{v:.4g}" for f, v in r.vi.items())
        print(f"seed {r.seed}: vi[{vi}] best adam {r.best_adam:.4g} "
              f"sgd(lr={r.sgd_lr:g}) peak {r.sgd_peak:.4g}")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    methods = METHODS if args.method == "all" else (args.method,)
    try:
        cfg = _config(args)
        if args.command == "generate":
            pipeline.generate(cfg, args.out)
        elif args.command == "train":
            pipeline.train(cfg, args.out, methods)
        elif args.command == "evaluate":
            pipeline.evaluate(cfg, args.out)
        elif args.command == "plot":
            for path in pipeline.plot(args.out):
                print(path)
        elif args.command == "suite":
            _suite(cfg, args.out)
        else:
            for path in pipeline.run_all(cfg, args.out, methods):
                print(path)
    except (ConfigError, FormatError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"vilayer: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
