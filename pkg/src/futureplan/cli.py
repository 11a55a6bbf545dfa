"""Command-line entry point: ``futureplan <subcommand> ...``.

Exit status is 0 on success, 1 on a runtime failure (one ``error: <Type>: <message>``
line on stderr) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import FutureplanError

CACHE_ENV = "SEERDRIVE_CACHE"


def _train_config(args):
    from .config import TrainConfig, apply_overrides, load_config

    cfg = load_config(args.config) if getattr(args, "config", None) else TrainConfig()
    cfg = apply_overrides(cfg, args.set)
    cfg.validate()
    return cfg


def cmd_gen_data(args):
    from .scenario import GenConfig, generate_dataset, write_dataset

    gen = GenConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else GenConfig()
    gen.validate()
    scenarios = generate_dataset(range(args.seed, args.seed + args.count), gen)
    m = write_dataset(scenarios, args.out, gen, text_dump=args.text_dump)
    print(f"wrote {m.count} scenarios to {args.out}")


def cmd_fit_anchors(args):
    from .anchors import fit_anchors, save_anchors
    from .scenario import read_dataset

    scenarios = read_dataset(args.dataset)
    a = fit_anchors([s.ego_future for s in scenarios], args.modes, iters=args.iters, seed=args.seed)
    save_anchors(a, args.out)
    print(f"fit {a.num_modes} anchors (inertia {a.inertia:.4f}) -> {args.out}")


def cmd_train(args):
    from .anchors import load_anchors
    from .scenario import read_dataset
    from .training import save_checkpoint, train

    cfg = _train_config(args)
    anchors = load_anchors(args.anchors)
    if anchors.num_modes != cfg.num_modes:
        raise FutureplanError(f"anchor file has {anchors.num_modes} modes, config expects {cfg.num_modes}")
    result = train(read_dataset(args.dataset), anchors, cfg, log_path=args.log)
    last = result.history[-1]["total"]
    save_checkpoint(result.model, args.out, result.steps, last)
    print(f"trained {result.steps} steps, final loss {last:.4f} -> {args.out}")


def cmd_eval(args):
    from .config import load_config
    from .evaluation import evaluate, write_report
    from .scenario import read_dataset
    from .training import load_checkpoint

    cfg = load_config(args.config) if args.config else None
    model, _ = load_checkpoint(args.ckpt, cfg, strict=args.strict)
    report = evaluate(model, read_dataset(args.dataset))
    write_report(report, args.report)
    print(json.dumps(report.summary(), sort_keys=True))


def cmd_ablate(args):
    from .evaluation import run_ablation
    from .scenario import read_dataset

    cfg = _train_config(args)
    cache = args.cache or os.environ.get(CACHE_ENV)
    table = run_ablation(read_dataset(args.dataset), read_dataset(args.test_dataset), cfg, args.axes,
                         seeds=args.seeds, cache_dir=cache)
    text = table.to_text(delimiter=args.delimiter)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_render(args):
    from .render import RenderSpec, render
    from .scenario import read_dataset
    from .training import load_checkpoint

    spec = RenderSpec(args.scenario, tuple(args.panels.split(",")), args.out)
    spec.validate()
    model, _ = load_checkpoint(args.ckpt)
    render(spec, model, read_dataset(args.dataset))
    print(f"wrote {args.out} and {args.out}.json")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="futureplan", description="Joint future-BEV world model and planner.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    g = sub.add_parser("gen-data", help="generate a synthetic scenario dataset")
    g.add_argument("--seed", type=int, default=0, help="first scenario seed")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--config", help="generator config (JSON)")
    g.add_argument("--text-dump", action="store_true", help="also write a readable .txt per scenario")
    g.set_defaults(func=cmd_gen_data)

    a = sub.add_parser("fit-anchors", help="cluster ground-truth futures into anchors")
    a.add_argument("--dataset", required=True)
    a.add_argument("--modes", type=int, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--iters", type=int, default=100)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_fit_anchors)

    def config_flags(q):
        q.add_argument("--config", help="training config (JSON)")
        q.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")

    t = sub.add_parser("train", help="train a model")
    config_flags(t)
    t.add_argument("--dataset", required=True)
    t.add_argument("--anchors", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="per-step loss log (JSON lines)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--report", required=True)
    e.add_argument("--config", help="expected config; a hash mismatch warns, or fails with --strict")
    e.add_argument("--strict", action="store_true")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("ablate", help="train and compare ablation variants")
    config_flags(b)
    b.add_argument("--dataset", required=True, help="training split")
    b.add_argument("--test-dataset", required=True)
    b.add_argument("--axes", default="", help='e.g. "future_bev=off;iterations=1,3"')
    b.add_argument("--seeds", type=int, nargs="+", default=[0])
    b.add_argument("--cache", help=f"run cache directory (default: ${CACHE_ENV})")
    b.add_argument("--delimiter", default="\t")
    b.add_argument("--out", help="also write the table here")
    b.set_defaults(func=cmd_ablate)

    r = sub.add_parser("render", help="draw one scenario with model predictions")
    r.add_argument("--ckpt", required=True)
    r.add_argument("--dataset", required=True)
    r.add_argument("--scenario", type=int, required=True, help="scenario seed")
    r.add_argument("--panels", default="current_map,future_map,trajectory,modes")
    r.add_argument("--out", required=True, help="image path; the sidecar is <out>.json")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (FutureplanError, OSError, ValueError) as e:
        msg = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


cmd_dispatch = main

if __name__ == "__main__":
    sys.exit(main())
