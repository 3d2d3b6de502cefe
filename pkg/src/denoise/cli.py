"""
Command-line interface.

    denoise corpus      --config desk.toml
    denoise mix         --config desk.toml [--split test] [--count 6]
    denoise train       --config desk.toml [--mode bed] [--loss ath] [--seed 3]
    denoise enhance     --config desk.toml [--baseline logmmse] [--input a.wav]
    denoise evaluate    --config desk.toml [--enhanced bd=enhanced/bd]
                        [--include-noisy]
    denoise spectrogram --config desk.toml --panel clean=a.wav --output fig.png

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

import argparse
import logging
import sys
from typing import Dict, Optional, Sequence, Tuple

from . import __version__
from .commands import (
    LOGMMSE,
    cmd_corpus,
    cmd_enhance,
    cmd_evaluate,
    cmd_mix,
    cmd_spectrogram,
    cmd_train,
)
from .config import ExperimentConfig, apply_overrides, load_config
from .errors import ConfigError, DenoiseError
from .features import INPUT_MODES, LOSS_NAMES
from .models import SPLITS

logger = logging.getLogger("denoise")


def _key_value(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise argparse.ArgumentTypeError(f"expected LABEL=PATH, got '{text}'")
    return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="denoise",
        description="DNN speech enhancement under multiple simultaneous noises.",
    )
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment TOML file")
    common.add_argument("--mode", choices=INPUT_MODES, help="network input mode")
    common.add_argument("--loss", choices=LOSS_NAMES, help="training objective")
    common.add_argument("--seed", type=int, help="training and manifest seed")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("corpus", parents=[common], help="write the synthetic corpus")

    mix = sub.add_parser("mix", parents=[common], help="synthesise noisy mixes")
    mix.add_argument("--split", choices=SPLITS, help="one split (default: all)")
    mix.add_argument("--count", type=int, help="entries (default: from config)")

    sub.add_parser("train", parents=[common], help="train a network")

    enhance = sub.add_parser("enhance", parents=[common], help="enhance audio")
    enhance.add_argument("--split", choices=SPLITS, default="test")
    enhance.add_argument("--baseline", choices=[LOGMMSE])
    enhance.add_argument(
        "--input", action="append", dest="inputs", help="WAV file (repeatable)"
    )
    enhance.add_argument("--out-dir", help="output directory")
    enhance.add_argument("--spectrograms", help="write comparison figures here")

    evaluate = sub.add_parser("evaluate", parents=[common], help="score systems")
    evaluate.add_argument("--split", choices=SPLITS, default="test")
    evaluate.add_argument("--baseline", choices=[LOGMMSE])
    evaluate.add_argument(
        "--enhanced",
        action="append",
        type=_key_value,
        help="LABEL=DIR of enhanced files (repeatable)",
    )
    evaluate.add_argument("--include-noisy", action="store_true")

    spectrogram = sub.add_parser(
        "spectrogram", parents=[common], help="render a spectrogram figure"
    )
    spectrogram.add_argument(
        "--panel",
        action="append",
        type=_key_value,
        required=True,
        help="TITLE=WAV, drawn top to bottom (repeatable)",
    )
    spectrogram.add_argument("--output", required=True, help="PNG file")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def _systems(
    args: argparse.Namespace, cfg: ExperimentConfig
) -> Optional[Dict[str, str]]:
    systems: Dict[str, str] = {}
    if args.baseline == LOGMMSE:
        systems[LOGMMSE] = str(cfg.paths.enhanced_dir(LOGMMSE))
    for label, directory in args.enhanced or []:
        if label in systems:
            raise ConfigError(f"system label '{label}' given twice")
        systems[label] = directory
    return systems or None


def run(args: argparse.Namespace) -> None:
    cfg = apply_overrides(
        load_config(args.config), mode=args.mode, loss=args.loss, seed=args.seed
    )
    if args.command == "corpus":
        cmd_corpus(cfg)
    elif args.command == "mix":
        for split in [args.split] if args.split else SPLITS:
            cmd_mix(cfg, split, args.count)
    elif args.command == "train":
        cmd_train(cfg)
    elif args.command == "enhance":
        cmd_enhance(
            cfg,
            split=args.split,
            baseline=args.baseline,
            inputs=args.inputs,
            out_dir=args.out_dir,
            spectrograms=args.spectrograms,
        )
    elif args.command == "evaluate":
        cmd_evaluate(
            cfg,
            split=args.split,
            systems=_systems(args, cfg),
            include_noisy=args.include_noisy,
        )
    elif args.command == "spectrogram":
        cmd_spectrogram(cfg, args.panel, args.output)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    _configure_logging(args)
    try:
        run(args)
    except DenoiseError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
