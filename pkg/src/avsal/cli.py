"""Command-line entry point.

Subcommands:
  saliency   compute per-frame audiovisual saliency maps for one video
  eval       score saliency maps against fixation ground truth
  synth      generate a synthetic benchmark clip with ground truth
  bench      report per-stage timing for one video

Exit codes: 0 success, 1 input/format error, 2 pipeline failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import media_io, metrics, pipeline, synth
from .config import load_config
from .errors import AvsalError, FormatError, InputError, ParameterError, PipelineError


def _parse_overrides(items: list[str] | None) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for item in items or []:
        if "=" not in item:
            raise ParameterError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key = value config file")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        dest="overrides",
        help="override one config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avsal", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sal = sub.add_parser("saliency", help="compute audiovisual saliency maps")
    p_sal.add_argument("--frames", type=Path, required=True, help="directory of numbered frames")
    p_sal.add_argument("--audio", type=Path, default=None, help="WAV soundtrack")
    p_sal.add_argument("--out", type=Path, required=True, help="output directory")
    p_sal.add_argument("--dump-intermediate", action="store_true")
    p_sal.add_argument("--no-audio", action="store_true", help="skip the audio saliency map")
    _add_config_args(p_sal)

    p_eval = sub.add_parser("eval", help="evaluate maps against fixations")
    p_eval.add_argument("--maps", type=Path, required=True, help="directory of saliency maps")
    p_eval.add_argument("--fixations", type=Path, required=True, help="frame,x,y CSV")
    p_eval.add_argument("--out", type=Path, required=True, help="report path (writes .csv and .json)")
    p_eval.add_argument("--frame-limit", type=int, default=None)
    _add_config_args(p_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark clip")
    p_synth.add_argument("--spec", type=Path, default=None, help="JSON spec (default: two discs)")
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.add_argument("--seed", type=int, default=42)

    p_bench = sub.add_parser("bench", help="per-stage seconds/frame table")
    p_bench.add_argument("--frames", type=Path, required=True)
    p_bench.add_argument("--audio", type=Path, default=None)
    _add_config_args(p_bench)
    return parser


def _cmd_saliency(args) -> int:
    config = load_config(args.config, _parse_overrides(args.overrides))
    wav = None if args.no_audio else args.audio
    if wav is None and not args.no_audio:
        raise InputError("either provide --audio or pass --no-audio")
    result = pipeline.run_pipeline(
        args.frames, wav, config, args.out, dump_intermediate=args.dump_intermediate
    )
    print(f"wrote {len(result.final_maps)} saliency maps to {args.out}")
    return 0


def _load_map_series(maps_dir: Path) -> list:
    if not maps_dir.is_dir():
        raise InputError(f"maps directory not found: {maps_dir}")
    files = sorted(maps_dir.glob("*.f32")) or sorted(maps_dir.glob("*.png"))
    if not files:
        raise InputError(f"no saliency maps (*.f32 or *.png) in {maps_dir}")
    return [media_io.read_saliency_map(path) for path in files]


def _cmd_eval(args) -> int:
    config = load_config(args.config, _parse_overrides(args.overrides))
    maps = _load_map_series(args.maps)
    height, width = maps[0].shape
    fixations = media_io.load_fixations(args.fixations, width=width, height=height)
    if fixations.total == 0:
        metrics.write_report_csv([], args.out.with_suffix(".csv"))
        metrics.write_report_json([], args.out.with_suffix(".json"))
        print("no usable fixations; empty report written", file=sys.stderr)
        return 1
    missing = [f for f in fixations.frames if f >= len(maps)]
    if missing:
        print(
            f"warning: fixations reference {len(missing)} frames without maps: "
            f"{missing[:10]}{'...' if len(missing) > 10 else ''}",
            file=sys.stderr,
        )
    limit = args.frame_limit if args.frame_limit is not None else config.frame_limit
    report = metrics.evaluate_video(
        maps,
        fixations,
        video=args.maps.name,
        frame_limit=limit,
        fixation_sigma_frac=config.fixation_sigma_frac,
        auc_repetitions=config.auc_repetitions,
        seed=config.metric_seed,
    )
    metrics.write_report_csv([report], args.out.with_suffix(".csv"))
    metrics.write_report_json([report], args.out.with_suffix(".json"))
    means = report.means()
    print(
        f"{report.video}: "
        + "  ".join(f"{name}={means[name]:.4f}" for name in metrics.METRIC_NAMES)
    )
    return 0


def _cmd_synth(args) -> int:
    spec = synth.load_spec(args.spec) if args.spec is not None else synth.two_disc_spec()
    result = synth.generate(spec, args.out, seed=args.seed)
    print(f"wrote {spec.frames} frames + audio + ground truth to {result.out_dir}")
    return 0


def _cmd_bench(args) -> int:
    config = load_config(args.config, _parse_overrides(args.overrides))
    result = pipeline.run_pipeline(args.frames, args.audio, config, out_dir=None)
    print(pipeline.stage_table(result))
    return 0


_COMMANDS = {
    "saliency": _cmd_saliency,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, FormatError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AvsalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
