"""Command line: ``symdetect generate | detect | report``.

Exit codes: 0 success, 1 data or I/O failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import envs, report
from .gru import TrainConfig
from .pipeline import ExperimentConfig, run_experiment, summarize
from .transforms import TransformError, load_candidates
from .trajectory import DatasetError, load_dataset, load_schema, save_dataset, save_schema


class UsageError(Exception):
    """Bad argument; maps to exit status 2."""


def _read_json(path: str, what: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} file {path} is not valid JSON: {e}")


def cmd_generate(args) -> int:
    if args.n <= 0:
        raise UsageError("n must be positive")
    overrides = _read_json(args.config, "--config") if args.config else {}
    if not isinstance(overrides, dict):
        raise UsageError("--config must hold a JSON object")
    overrides.update(n=args.n, seed=args.seed, policy=args.policy)
    try:
        if args.env == "box2d":
            cfg = envs.Box2DConfig.from_dict(overrides)
            ds = envs.gen_box2d(cfg)
        else:
            cfg = envs.Grav3DConfig.from_dict(overrides)
            ds = envs.gen_grav3d(cfg)
    except (envs.ConfigError, TypeError) as e:
        raise UsageError(str(e))
    out = Path(args.out)
    try:
        save_dataset(ds, out)
        save_schema(ds.schema, f"{out}.schema.json")
    except OSError as e:
        print(f"error: cannot write {out}: {e}", file=sys.stderr)
        return 1
    print(f"wrote {len(ds)} trajectories (state dim {ds.dim}) to {out}")
    return 0


def cmd_detect(args) -> int:
    if not 0 < args.delta < 0.5:
        raise UsageError("--delta must lie in (0, 0.5)")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    train_cfg = TrainConfig(seed=args.seed)
    if args.train_config:
        raw = _read_json(args.train_config, "--train-config")
        try:
            train_cfg = TrainConfig.from_dict({"seed": args.seed, **raw})
        except (ValueError, TypeError) as e:
            raise UsageError(f"--train-config: {e}")
    try:
        schema = load_schema(args.schema)
        data = load_dataset(args.data, schema)
        candidates = load_candidates(args.candidates)
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 1
    except (DatasetError, TransformError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    config = ExperimentConfig(
        candidates, mode=args.mode, train=train_cfg, delta=args.delta, seed=args.seed
    )

    def progress(i, result):
        print(summarize([result])[0], flush=True)

    try:
        results = run_experiment(data, config, jobs=args.jobs, on_result=progress)
    except DatasetError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        with open(args.out, "w") as f:
            json.dump([r.to_dict() for r in results], f, indent=2)
            f.write("\n")
    except OSError as e:
        print(f"error: cannot write {args.out}: {e}", file=sys.stderr)
        return 1
    return 0 if any(r.ok for r in results) or not results else 1


def cmd_report(args) -> int:
    try:
        with open(args.results) as f:
            results = json.load(f)
        if not isinstance(results, list):
            raise ValueError("results file must hold a JSON array")
        text = report.to_markdown(results) if args.format == "md" else report.to_csv(results)
    except (OSError, ValueError, KeyError, TransformError) as e:
        print(f"error: cannot read results {args.results}: {e}", file=sys.stderr)
        return 1
    try:
        Path(args.out).write_text(text)
    except OSError as e:
        print(f"error: cannot write {args.out}: {e}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symdetect", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic trajectory dataset")
    g.add_argument("--env", required=True, choices=["box2d", "grav3d"])
    g.add_argument("--policy", default="random", choices=list(envs.BOX2D_POLICIES))
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="JSON file with environment config overrides")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="score candidate symmetries on a dataset")
    d.add_argument("--data", required=True)
    d.add_argument("--schema", required=True)
    d.add_argument("--candidates", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--train-config")
    d.add_argument("--delta", type=float, default=0.02)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--mode", choices=["paired", "disjoint"], default="paired")
    d.add_argument("--jobs", type=int, default=1)
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("report", help="render a results file as a table")
    r.add_argument("--results", required=True)
    r.add_argument("--format", choices=["md", "csv"], default="md")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
