"""Score rotations, reflections and translations on grav3d rollouts.

Translations use the configured headroom as their bound. Writes a results
JSON and prints the markdown table.
"""

import argparse
import json
from pathlib import Path

from symdetect.envs import Grav3DConfig, gen_grav3d
from symdetect.pipeline import ExperimentConfig, run_experiment, summarize
from symdetect.report import to_markdown
from symdetect.transforms import CandidateTransform as C


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--policy", default="random", choices=["random", "goal"])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/grav3d.json")
    args = ap.parse_args()

    cfg = Grav3DConfig(n=args.n, seed=args.seed, policy=args.policy)
    w = cfg.translation_headroom
    cands = (
        [C.rotation(a) for a in "xyz"]
        + [C.reflection(a) for a in "xyz"]
        + [C.translation(a, w) for a in "xyz"]
    )
    results = run_experiment(gen_grav3d(cfg), ExperimentConfig(cands, seed=args.seed),
                             jobs=args.jobs,
                             on_result=lambda i, r: print(summarize([r])[0], flush=True))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    print()
    print(to_markdown([r.to_dict() for r in results]))


if __name__ == "__main__":
    main()
