"""How strong must a rotational bias in the goal policy be before the
discriminator notices that reflections stop being symmetries?

Sweeps the chirality gain and prints x-reflection and C4 accuracy per value.
"""

import argparse

from symdetect.envs import Box2DConfig, gen_box2d
from symdetect.pipeline import ExperimentConfig, run_experiment
from symdetect.transforms import CandidateTransform as C


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--gains", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    cands = [C.reflection("x"), C.cyclic(4)]
    print(f"{'gain':>6}  {'x-refl':>7}  {'C4':>7}")
    for gain in args.gains:
        policy = "goal_biased" if gain else "goal"
        ds = gen_box2d(Box2DConfig(n=args.n, seed=args.seed, policy=policy, chirality=gain))
        refl, c4 = run_experiment(ds, ExperimentConfig(cands, seed=args.seed))
        print(f"{gain:6.2f}  {refl.accuracy:7.3f}  {c4.accuracy:7.3f}", flush=True)


if __name__ == "__main__":
    main()
