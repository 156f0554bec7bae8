"""Score the standard candidate suite on random-policy box2d rollouts.

    python3 scripts/box2d_sweep.py --n 2000 --out results/box2d.json
"""

import argparse
import json
from pathlib import Path

from symdetect.envs import Box2DConfig, gen_box2d
from symdetect.pipeline import ExperimentConfig, run_experiment, summarize
from symdetect.report import to_markdown
from symdetect.transforms import standard_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--policy", default="random", choices=["random", "goal", "goal_biased"])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/box2d.json")
    args = ap.parse_args()

    cfg = Box2DConfig(n=args.n, seed=args.seed, policy=args.policy)
    ds = gen_box2d(cfg)
    cands = standard_suite(2, translation_bound=0.5 * cfg.half_width)
    results = run_experiment(ds, ExperimentConfig(cands, seed=args.seed), jobs=args.jobs,
                             on_result=lambda i, r: print(summarize([r])[0], flush=True))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    print()
    print(to_markdown([r.to_dict() for r in results]))


if __name__ == "__main__":
    main()
