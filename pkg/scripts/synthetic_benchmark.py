"""Per-task AUC of all four methods on the scaled-down fraud-shaped pairs.

    python3 scripts/synthetic_benchmark.py --scene scene2 --seeds 5
"""

import argparse

import numpy as np

from mtbt.config import Hyperparams
from mtbt.dataset import split_train_valid_test
from mtbt.metrics import evaluate
from mtbt.syndata import generate, scene_spec
from mtbt.trainer import METHODS, train_method


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="scene2")
    ap.add_argument("--scale", type=float, default=0.01)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--shared", type=float, default=2.0)
    ap.add_argument("--interaction", type=float, default=1.5)
    ap.add_argument("--specific", type=float, default=0.0)
    ap.add_argument("--rounds", type=int, default=200)
    ap.add_argument("--patience", type=int, default=20)
    args = ap.parse_args()

    hp = Hyperparams(eta=0.1, max_depth=3, common_rounds=args.rounds, specific_rounds=args.rounds,
                     patience=args.patience, valid_frac=0.2)
    scores = {m: [] for m in METHODS}
    for seed in range(args.seeds):
        spec = scene_spec(args.scene, args.scale, seed=seed, shared_strength=args.shared,
                          interaction_strength=args.interaction, specific_strength=args.specific)
        train, _, test = split_train_valid_test(generate(spec), 0.2, 0.0, seed)
        for m in METHODS:
            rep = evaluate(train_method(m, train, hp.replace(seed=seed)), test)
            scores[m].append([r.value for r in rep.per_task])
        print(f"seed {seed} done", flush=True)

    print(f"{'method':<14}" + "".join(f"{'task' + str(t):>18}" for t in range(len(scores[METHODS[0]][0]))))
    for m, v in scores.items():
        v = np.array(v)
        cells = "".join(f"{mu:>10.4f} ({sd:.4f})" for mu, sd in zip(v.mean(0), v.std(0, ddof=1)))
        print(f"{m:<14}{cells}")


if __name__ == "__main__":
    main()
