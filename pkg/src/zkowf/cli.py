"""Command-line entry point: ``zkowf <subcommand> --config FILE [flags]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .config import FORMATS, MODES, ExperimentConfig, load_config
from .dist import encode
from .errors import ZkowfError
from .experiment import DELTA, build_pipeline, build_protocol, run_experiment
from .inverters import measure_deviation
from .protocol import measure_error_profile
from .report import load_result, persist, render
from .rng import SeededRng, derive_seed


def _common(p: argparse.ArgumentParser, config_required: bool = True):
    p.add_argument("--config", required=config_required, help="experiment config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="trials per arm")
    p.add_argument("--mode", choices=MODES, help="exact enumeration or Monte Carlo")
    p.add_argument("--out", help="output directory (or file for construct)")
    p.add_argument("--format", choices=FORMATS, help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkowf", description="Zero-knowledge to one-way function experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("measure", help="exact error profile of the configured protocol"))
    p = sub.add_parser("construct", help="dump a candidate's truth table as CSV")
    _common(p)
    p.add_argument("--instance", choices=("yes", "no"), default="yes")
    p.add_argument("--level", type=int, default=1, help="level for the constant-round construction")
    p = sub.add_parser("invert", help="deviation report for the configured inverter")
    _common(p)
    p.add_argument("--instance", choices=("yes", "no"), default="yes")
    p.add_argument("--level", type=int, default=1)
    _common(sub.add_parser("reduce", help="run the reduction bound experiment"))
    _common(sub.add_parser("decide", help="run the one-sided decider experiment"))
    p = sub.add_parser("report", help="re-emit a persisted result")
    _common(p, config_required=False)
    p.add_argument("result", help="result directory or result.json")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    base = str(Path(args.config).resolve().parent)
    paths = {}
    if cfg.protocol == "graph-iso":
        for attr in ("yes_instance", "no_instance"):
            v = getattr(cfg, attr)
            if not v.startswith("pkg:") and not Path(v).is_absolute():
                paths[attr] = str(Path(base) / v)
    return cfg.with_overrides(seed=args.seed, trials=args.trials, mode=args.mode, out=args.out,
                              format=args.format, **paths)


def _write(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_measure(args) -> int:
    cfg = _config(args)
    inst = build_protocol(cfg)
    prof = measure_error_profile(inst.spec, inst.yes, inst.witness, inst.no, cfg.budget)
    data = {"protocol": inst.spec.name, "eps_c": str(prof.eps_c), "eps_s": str(prof.eps_s),
            "eps_z": str(prof.eps_z)}
    if cfg.format == "json":
        text = json.dumps(data, indent=2) + "\n"
    else:
        sep = "," if cfg.format == "csv" else "\t"
        text = sep.join(data) + "\n" + sep.join(data.values()) + "\n"
    _write(text, args.out)
    return 0


def _level(cfg: ExperimentConfig, args):
    pipe = build_pipeline(cfg)
    levels = pipe.arms[args.instance].levels
    if not 1 <= args.level <= len(levels):
        raise ZkowfError(f"--level must be in [1, {len(levels)}]")
    return levels[args.level - 1]


def cmd_construct(args) -> int:
    cfg = _config(args)
    f, _ = _level(cfg, args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"u{j}" for j in range(len(f.domain))] + ["output"])
    for u in f.inputs(cfg.budget):
        w.writerow([format(c, "x") for c in u] + [encode(f(u)).hex()])
    _write(buf.getvalue(), args.out)
    return 0


def cmd_invert(args) -> int:
    cfg = _config(args)
    f, inv = _level(cfg, args)
    if cfg.mode == "exact":
        rep = measure_deviation(f, inv, "exact", budget=cfg.budget)
    else:
        rng = SeededRng(derive_seed(cfg.seed, "invert", args.instance, args.level))
        rep = measure_deviation(f, inv, "mc", trials=cfg.deviation_trials, rng=rng, delta=DELTA)
    _write(json.dumps(rep.to_dict(), indent=2) + "\n", args.out)
    return 0


def _experiment(cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg)
    target = persist(result, cfg.out)
    sys.stdout.write(render(result, cfg.format))
    print(f"results: {target}", file=sys.stderr)
    return 0 if result.verdict != "bound-violated" else 1


def cmd_reduce(args) -> int:
    cfg = _config(args)
    if cfg.construction == "decider":
        raise ZkowfError("config selects the decider; use 'decide'")
    return _experiment(cfg)


def cmd_decide(args) -> int:
    cfg = _config(args)
    if cfg.construction != "decider":
        if cfg.construction not in ("nizk", "pc", "cr"):
            raise ZkowfError(f"no decider over the {cfg.construction} construction")
        cfg = cfg.with_overrides(construction="decider", decider_reduce=cfg.construction)
    return _experiment(cfg)


def cmd_report(args) -> int:
    result = load_result(args.result)
    text = render(result, args.format or "json")
    _write(text, args.out)
    return 0


COMMANDS = {"measure": cmd_measure, "construct": cmd_construct, "invert": cmd_invert,
            "reduce": cmd_reduce, "decide": cmd_decide, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        sys.stderr.close()
        return 0
    except (ZkowfError, ValueError, OSError) as exc:
        print(f"zkowf {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
