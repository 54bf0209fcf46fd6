#!/usr/bin/env python3
"""Train a pointing policy on the built-in toy arm with synthetic reference
clips and save a checkpoint plus learning curves.

Examples
--------
Pure task reward (no imitation)::

    python3 scripts/train_toy_arm.py --task-only --iterations 300 \
        --out runs/task_only

Combined reward with the phase-functioned discriminator::

    python3 scripts/train_toy_arm.py --disc pfnn --iterations 300 \
        --out runs/combined_pfnn
"""
from __future__ import annotations

import argparse
from pathlib import Path

from pointgen.geometry import RewardWeights, TargetPoint
from pointgen.skeleton import make_toy_arm
from pointgen.synthetic import make_library
from pointgen.training import (
    TrainConfig,
    export_curves,
    save_checkpoint,
    train_policy,
)

DEFAULT_TARGETS = [
    TargetPoint(0.25, 0.55, 0.35),
    TargetPoint(-0.2, 0.6, 0.2),
    TargetPoint(0.0, 0.65, 0.5),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--num-envs", type=int, default=32)
    ap.add_argument("--policy-lr", type=float, default=3e-4)
    ap.add_argument("--value-lr", type=float, default=1e-3)
    ap.add_argument("--init-log-std", type=float, default=-1.0)
    ap.add_argument("--task-only", action="store_true",
                    help="use reward weights (imitation=0, task=1)")
    ap.add_argument("--disc", choices=["plain", "pfnn"], default="plain")
    ap.add_argument("--out", type=Path, default=Path("runs/toy_arm"))
    args = ap.parse_args()

    weights = (RewardWeights(0.0, 1.0) if args.task_only
               else RewardWeights(0.5, 0.5))
    skeleton = make_toy_arm()
    library = make_library(skeleton, DEFAULT_TARGETS)
    config = TrainConfig(
        weights=weights,
        iterations=args.iterations,
        num_envs=args.num_envs,
        policy_lr=args.policy_lr,
        value_lr=args.value_lr,
        init_log_std=args.init_log_std,
        disc_variant=args.disc,
        seed=args.seed,
    )
    result = train_policy(skeleton, library.clips, config)

    args.out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(args.out / "checkpoint.pt", result)
    export_curves(result.curves, args.out / "curves.csv")
    last = result.curves[-1]
    print(f"saved {args.out}/checkpoint.pt"
          f"  final mean task reward {last['mean_rG']:.4f}"
          f"  imitation reward {last['mean_rI']:.4f}")


if __name__ == "__main__":
    main()
