"""Train / evaluate entry points: ``nsnet train ...`` and ``nsnet eval ...``."""

from __future__ import annotations

import argparse
import json
import sys

from .series import VARIANTS, NetworkConfig
from .training import TrainConfig, evaluate, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nsnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--dataset", required=True)
    p.add_argument("--test-dataset", default=None)
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lambda-pde", type=float, default=0.05)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--ns-blocks", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-json", default=None)

    args = parser.parse_args(argv)
    if args.command == "train":
        net_cfg = NetworkConfig(
            variant=args.variant, k_max=args.k_max, ns_blocks=args.ns_blocks
        )
        train_cfg = TrainConfig(
            epochs=args.epochs,
            initial_lr=args.lr,
            batch_size=args.batch_size,
            lambda_pde=args.lambda_pde,
            seed=args.seed,
        )
        metrics = train(
            net_cfg, train_cfg, args.dataset, args.out,
            test_dataset_path=args.test_dataset, log_every=10,
        )
        print(json.dumps({k: metrics[k] for k in ("variant", "epochs", "mean_rel_l2")}))
    else:
        metrics = evaluate(args.checkpoint, args.dataset, args.out_json)
        print(json.dumps({k: metrics[k] for k in ("variant", "mean_rel_l2")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
