"""Command-line entry point: ``trajcurate {gen,curate,pretext,eval,stats}``.

Exit codes: 0 on success, 1 on data errors (one ``error: <Kind>: <message>``
line on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, pipeline
from .errors import TrajCurateError
from .labeling import LabelConfig
from .metrics import CamMode, MetricsConfig
from .pretext import DEFAULT_EPS_D

# config-file keys and their defaults; command-line flags win over the file
DEFAULTS = {
    "threads": 1,
    "seed": 0,
    "n": 600,
    "noise_sigma": 0.05,
    "d_th": 5.0,
    "min_traj_len": 10,
    "eps_d": DEFAULT_EPS_D,
    "d_cam": 2.0,
    "miss_threshold": 2.0,
    "lambda": 1.0,
    "cam_mode": CamMode.ARGMAX_CONFIDENCE.value,
    "strong_only": False,
    "with_losses": False,
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, input_required: bool = True) -> None:
    p.add_argument("--input", type=Path, required=input_required, help="input directory")
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--config", type=Path, help="JSON file of option overrides")
    p.add_argument("--threads", type=int, help="worker processes (default 1)")
    p.add_argument("--seed", type=int, help="master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajcurate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic scenario suite with oracle labels")
    _common(p, input_required=False)
    p.add_argument("--n", type=int, help="number of scenes (default 600)")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--no-predictions", action="store_true", help="skip the baseline predictions file")

    p = sub.add_parser("curate", help="normalise scenes and select interacting pairs")
    _common(p)
    p.add_argument("--d-th", type=float, dest="d_th", help="interaction distance threshold (m)")
    p.add_argument("--min-traj-len", type=int, dest="min_traj_len")
    p.add_argument("--strict", action="store_true", help="exit 1 if any scene is rejected")

    p = sub.add_parser("pretext", help="compute pretext labels for curated pairs")
    _common(p)
    p.add_argument("--eps-d", type=float, dest="eps_d", help="strong-interaction distance (m)")

    p = sub.add_parser("eval", help="score predictions against curated scenes")
    _common(p)
    p.add_argument("--labels", type=Path, help="labels file or directory (default: --input)")
    p.add_argument("--predictions", type=Path, required=True, help="predictions file or directory")
    p.add_argument("--cam-mode", choices=[m.value for m in CamMode], dest="cam_mode")
    p.add_argument("--strong-only", action="store_true", default=None, dest="strong_only")
    p.add_argument("--with-losses", action="store_true", default=None, dest="with_losses")
    p.add_argument("--lambda", type=float, dest="lambda_")
    p.add_argument("--d-cam", type=float, dest="d_cam")
    p.add_argument("--miss-threshold", type=float, dest="miss_threshold")

    p = sub.add_parser("stats", help="summarise a stage directory")
    _common(p)
    p.add_argument("--render", action="store_true", help="also write one SVG per scene")
    p.add_argument("--limit", type=int, default=20, help="scenes to render")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the JSON config file and explicit flags (in that order)."""
    opts = dict(DEFAULTS)
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        opts.update(data)
    for key in DEFAULTS:
        attr = "lambda_" if key == "lambda" else key
        value = getattr(args, attr, None)
        if value is not None:
            opts[key] = value
    if not isinstance(opts["threads"], int) or opts["threads"] < 1:
        raise UsageError("--threads must be a positive integer")
    return opts


def _need_output(args) -> Path:
    if args.output is None:
        raise UsageError(f"{args.command}: --output is required")
    return args.output


def _run(args: argparse.Namespace) -> int:
    opts = resolve(args)
    workers = opts["threads"]
    if args.command == "gen":
        m = pipeline.run_gen(_need_output(args), int(opts["n"]), int(opts["seed"]), float(opts["noise_sigma"]),
                             predictions=not args.no_predictions, workers=workers)
        print(f"wrote {m['files'][pipeline.SCENES]['records']} scenes to {args.output}")
    elif args.command == "curate":
        cfg = LabelConfig(d_th=float(opts["d_th"]), min_traj_len=int(opts["min_traj_len"]))
        m = pipeline.run_curate(args.input, _need_output(args), cfg, workers)
        c = m["counts"]
        print(f"curated {c['scenes_out']}/{c['scenes_in']} scenes, {c['retained_pairs']} retained pairs")
        if args.strict and m["files"][pipeline.REJECTS]["records"]:
            print(f"error: Rejected: {m['files'][pipeline.REJECTS]['records']} scene(s) rejected, "
                  f"see {args.output / pipeline.REJECTS}", file=sys.stderr)
            return 1
    elif args.command == "pretext":
        m = pipeline.run_pretext(args.input, _need_output(args), float(opts["eps_d"]), workers)
        print(f"labelled {m['counts']['label_sets']} pairs in {m['counts']['scenes']} scenes")
    elif args.command == "eval":
        cfg = MetricsConfig(miss_threshold=float(opts["miss_threshold"]), d_cam=float(opts["d_cam"]),
                            strong_only=bool(opts["strong_only"]), cam_mode=CamMode(opts["cam_mode"]))
        out = _need_output(args)
        pipeline.run_eval(args.input, args.labels or args.input, args.predictions, out, cfg,
                          bool(opts["with_losses"]), float(opts["lambda"]), workers)
        sys.stdout.write((out / pipeline.REPORT_TXT).read_text(encoding="utf-8"))
    elif args.command == "stats":
        stats = pipeline.corpus_stats(args.input)
        text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
        if args.output is not None:
            args.output.mkdir(parents=True, exist_ok=True)
            (args.output / "stats.json").write_text(text, encoding="utf-8")
            if args.render:
                from .render import render_dir
                n = render_dir(args.input, args.output / "render", args.limit)
                print(f"rendered {n} scenes to {args.output / 'render'}")
        elif args.render:
            raise UsageError("stats --render needs --output")
        for key, value in pipeline.flatten(stats):
            print(f"{key}={value}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except TrajCurateError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1


def _one_line(exc: BaseException) -> str:
    msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
    return " ".join(msg.split()) or type(exc).__name__


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
