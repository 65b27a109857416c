"""
sigvc command line.

    sigvc make-toy-corpus --out data/toy_corpus --num-speakers 4 --utts-per-speaker 5
    sigvc pretrain-encoders --corpus data/toy_corpus/manifest.json --out runs/encoders
    sigvc train --config runs/encoders/sigvc_config.yaml --out runs/sigvc
    sigvc convert --config ... --checkpoint runs/sigvc/checkpoints/step_001000 \
        --source a.wav --target b1.wav b2.wav --out converted/a_to_b
    sigvc evaluate --config ... --checkpoint ... --corpus data/toy_corpus/manifest.json --out eval/

Any config value can be overridden with a dotted flag, e.g. --training.lambda_spk 0.
Exit codes: 0 success, 2 validation error, 3 runtime error, 4 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import yaml
from dotenv import load_dotenv

from sigvc.config import EncoderSpec, RunConfig, parse_and_validate
from sigvc.errors import EXIT_IO, EXIT_RUNTIME, ConfigValidationError, SigVCError
from sigvc.utils.runtime import configure_logging

logger = logging.getLogger("sigvc.cli")


def _add_global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=Path, default=None, help="YAML run config (defaults when omitted)")
    parser.add_argument('--seed', type=int, default=None, help="Seed (training.seed / corpus seed)")
    parser.add_argument('--out', type=Path, default=None, help="Output location of the subcommand")
    parser.add_argument('--log-level', default=None, help="DEBUG, INFO, WARNING (default: $SIGVC_LOG_LEVEL or INFO)")
    parser.add_argument('--print-config', action='store_true', help="Print the materialized config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigvc",
        description="SIG-VC zero-shot voice conversion toolkit",
        epilog="Config overrides: --<section>.<key> <value>, e.g. --training.lambda_spk 0",
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('make-toy-corpus', help="Write the synthetic multi-speaker corpus")
    _add_global_flags(p)
    p.add_argument('--num-speakers', type=int, default=4)
    p.add_argument('--utts-per-speaker', type=int, default=5)

    p = sub.add_parser('extract-features', help="Mel features for every utterance of a corpus")
    _add_global_flags(p)
    p.add_argument('--corpus', type=Path, required=True, help="Manifest JSON or <speaker>/*.wav directory")
    p.add_argument('--no-trim', action='store_true', help="Keep leading/trailing silence")

    p = sub.add_parser('pretrain-encoders', help="Pre-train the toy content and speaker encoders")
    _add_global_flags(p)
    p.add_argument('--corpus', type=Path, required=True)

    p = sub.add_parser('train', help="Train SIG-VC")
    _add_global_flags(p)
    p.add_argument('--resume', type=Path, default=None, help="Checkpoint to resume from")
    p.add_argument('--corpus', type=Path, default=None, help="Overrides training.dataset_manifest")

    p = sub.add_parser('convert', help="Zero-shot conversion of one utterance")
    _add_global_flags(p)
    p.add_argument('--checkpoint', type=Path, required=True)
    p.add_argument('--source', type=Path, required=True)
    p.add_argument('--target', type=Path, nargs='+', required=True, help="One or more target reference WAVs")
    p.add_argument('--vocoder', choices=['griffin_lim', 'external', 'none'], default=None)

    p = sub.add_parser('evaluate', help="Speaker-similarity evaluation")
    _add_global_flags(p)
    p.add_argument('--checkpoint', type=Path, default=None, help="Omit to score natural speech only")
    p.add_argument('--corpus', type=Path, required=True)
    p.add_argument('--encoder', type=Path, default=None, help="YAML speaker-encoder adapter spec used for scoring")
    p.add_argument('--compare', type=Path, nargs='*', default=[], help="Other systems' report.json files")

    return parser


def split_overrides(extra: Sequence[str]) -> List[Tuple[str, str]]:
    """['--training.lambda_spk', '0', '--dsp.n_mels=64'] -> [(key, value), ...]"""
    overrides = []
    tokens = list(extra)
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith('--') or '.' not in token.split('=', 1)[0]:
            raise ConfigValidationError(f"Unrecognised argument '{token}'", key=token.lstrip('-'))
        if '=' in token:
            key, value = token[2:].split('=', 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigValidationError(f"Override '{token}' has no value", key=token[2:])
            key, value = token[2:], tokens[i + 1]
            i += 2
        overrides.append((key, value))
    return overrides


def load_config(args: argparse.Namespace, extra: Sequence[str]) -> RunConfig:
    overrides = split_overrides(extra)
    if args.seed is not None:
        overrides.append(('training.seed', str(args.seed)))
    if args.command == 'train':
        if args.out is not None:
            overrides.append(('training.output_dir', str(args.out)))
        if args.corpus is not None:
            overrides.append(('training.dataset_manifest', str(args.corpus)))
    if args.command == 'convert' and args.vocoder is not None:
        overrides.append(('inference.vocoder', args.vocoder))
    return parse_and_validate(args.config, overrides)


def _require_out(args: argparse.Namespace) -> Path:
    if args.out is None:
        raise ConfigValidationError(f"{args.command} needs --out", key="out")
    return args.out


# ============================================================================
# Subcommands
# ============================================================================

def cmd_make_toy_corpus(args, config: RunConfig) -> int:
    from sigvc.dsp.toy_corpus import make_toy_corpus

    seed = args.seed if args.seed is not None else 0
    manifest = make_toy_corpus(
        _require_out(args), args.num_speakers, args.utts_per_speaker, seed, config.dsp.sample_rate
    )
    print(manifest)
    return 0


def cmd_extract_features(args, config: RunConfig) -> int:
    from sigvc.dsp.extraction import extract_features_for_manifest
    from sigvc.dsp.manifest import load_corpus

    entries = load_corpus(args.corpus)
    extract_features_for_manifest(entries, config.dsp, out_dir=_require_out(args), trim=not args.no_trim)
    return 0


def cmd_pretrain_encoders(args, config: RunConfig) -> int:
    from sigvc.dsp.manifest import load_corpus
    from sigvc.encoders.pretrain import pretrain_encoders

    out = _require_out(args)
    written = pretrain_encoders(load_corpus(args.corpus), config.encoders, config.dsp, out)

    # A ready-to-train config pointing at the new checkpoints
    raw = config.canonical()
    for role, path in written.items():
        raw['encoders'][role]['checkpoint_path'] = str(Path(path).resolve())
    config_path = out / "sigvc_config.yaml"
    config_path.write_text(yaml.safe_dump(raw, sort_keys=False), encoding="utf-8")
    logger.info("✓ Config with encoder checkpoints written to %s", config_path)
    print(config_path)
    return 0


def cmd_train(args, config: RunConfig) -> int:
    from sigvc.training.trainer import train

    print(train(config, resume=args.resume))
    return 0


def cmd_convert(args, config: RunConfig) -> int:
    from sigvc.inference.converter import ConversionRequest, convert

    request = ConversionRequest(
        source_wav=args.source,
        target_reference_wavs=args.target,
        output=_require_out(args),
        checkpoint=args.checkpoint,
        vocoder=config.inference.vocoder,
    )
    result = convert(request, config)
    print(result.wav_path or result.feature_path)
    return 0


def cmd_evaluate(args, config: RunConfig) -> int:
    from sigvc.encoders.registry import load_speaker_encoder
    from sigvc.evaluation.harness import run_evaluation

    scorer = None
    if args.encoder is not None:
        try:
            spec = EncoderSpec.model_validate(yaml.safe_load(args.encoder.read_text(encoding="utf-8")) or {})
        except (OSError, yaml.YAMLError, ValueError) as e:
            raise ConfigValidationError(f"Bad encoder spec {args.encoder}: {e}", key="encoder") from e
        scorer = load_speaker_encoder(spec, config.encoders, role="scoring")

    outcome = run_evaluation(
        config, args.corpus, _require_out(args),
        checkpoint=args.checkpoint, scoring_encoder=scorer, compare_reports=args.compare,
    )
    print(outcome.report_path)
    return 0


COMMANDS = {
    'make-toy-corpus': cmd_make_toy_corpus,
    'extract-features': cmd_extract_features,
    'pretrain-encoders': cmd_pretrain_encoders,
    'train': cmd_train,
    'convert': cmd_convert,
    'evaluate': cmd_evaluate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    configure_logging(args.log_level)

    try:
        config = load_config(args, extra)
        if args.print_config:
            print(config.to_yaml(), end="")
            print(f"# config_hash: {config.config_hash}")
            return 0
        return COMMANDS[args.command](args, config)
    except SigVCError as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO
    except Exception:  # noqa: BLE001
        logger.exception("Unexpected failure in %s", args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
