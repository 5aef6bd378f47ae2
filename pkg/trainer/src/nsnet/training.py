"""Training and evaluation loops.

Adam with a step-decayed learning rate (halved on a fixed epoch
schedule), seeded shuffling, per-epoch loss logging, best-checkpoint
saving and a portable JSON metrics file
``{variant, epochs, mean_rel_l2, per_record}``.  With equal seeds and
single-threaded data order reruns are deterministic.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import torch

from .data import FieldTripleDataset
from .losses import relative_l2, total_loss
from .series import NetworkConfig, build_model


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    initial_lr: float = 1e-3
    lr_halve_every: int = 100
    batch_size: int = 20
    lambda_pde: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lambda_pde < 0:
            raise ValueError("lambda_pde must be >= 0")


def save_checkpoint(path, model, net_cfg: NetworkConfig, grid_hw, k: float) -> None:
    torch.save(
        {
            "state_dict": model.state_dict(),
            "net_cfg": dataclasses.asdict(net_cfg),
            "grid_hw": tuple(grid_hw),
            "k": float(k),
        },
        path,
    )


def load_checkpoint(path) -> torch.nn.Module:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg_dict = dict(payload["net_cfg"])
    cfg_dict["uno_channels"] = tuple(cfg_dict["uno_channels"])
    cfg = NetworkConfig(**cfg_dict)
    model = build_model(cfg, tuple(payload["grid_hw"]), payload["k"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


@torch.no_grad()
def evaluate_model(model, dataset: FieldTripleDataset) -> dict:
    """Per-record and mean relative L2 errors; deterministic."""
    model.eval()
    errors = []
    for start in range(0, len(dataset), 50):
        q = dataset.q[start : start + 50]
        f = dataset.f[start : start + 50]
        u = dataset.u[start : start + 50]
        u_hat = model(q, f)
        errors.extend(relative_l2(u_hat.double(), u.double()).tolist())
    return {"mean_rel_l2": float(sum(errors) / len(errors)), "per_record": errors}


def evaluate(checkpoint_path, dataset_path, out_json=None) -> dict:
    model = load_checkpoint(checkpoint_path)
    dataset = FieldTripleDataset(dataset_path)
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    metrics = {"variant": payload["net_cfg"]["variant"], **evaluate_model(model, dataset)}
    if out_json is not None:
        Path(out_json).write_text(json.dumps(metrics, indent=2))
    return metrics


def train(
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig,
    dataset_path,
    out_dir,
    test_dataset_path=None,
    log_every: int = 0,
) -> dict:
    """Train one variant on a dataset; returns the metrics dict.

    Saves ``best.pt`` (lowest selection metric: test error when a test
    set is given, else train loss) and ``metrics.json`` under out_dir.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(train_cfg.seed)

    dataset = FieldTripleDataset(dataset_path)
    test_set = FieldTripleDataset(test_dataset_path) if test_dataset_path else None
    grid = dataset.grid
    grid_hw = (grid.ny, grid.nx)
    model = build_model(net_cfg, grid_hw, dataset.k)

    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.initial_lr)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=train_cfg.lr_halve_every, gamma=0.5
    )
    shuffler = torch.Generator().manual_seed(train_cfg.seed)

    n = len(dataset)
    history = []
    best_metric = float("inf")
    t_start = time.perf_counter()
    for epoch in range(train_cfg.epochs):
        model.train()
        order = torch.randperm(n, generator=shuffler)
        epoch_loss = 0.0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            q, f, u = dataset.q[idx], dataset.f[idx], dataset.u[idx]
            optimizer.zero_grad()
            loss = total_loss(
                model(q, f), u, q, f, dataset.k, grid.hx, grid.hy, train_cfg.lambda_pde
            )
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
        scheduler.step()
        epoch_loss /= n
        history.append(epoch_loss)

        if test_set is not None:
            # select on held-out error, evaluated on a fixed cadence
            if (epoch + 1) % 10 == 0 or epoch + 1 == train_cfg.epochs:
                selection = evaluate_model(model, test_set)["mean_rel_l2"]
                if selection < best_metric:
                    best_metric = selection
                    save_checkpoint(out_dir / "best.pt", model, net_cfg, grid_hw, dataset.k)
        elif epoch_loss < best_metric:
            best_metric = epoch_loss
            save_checkpoint(out_dir / "best.pt", model, net_cfg, grid_hw, dataset.k)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1:4d}: train loss {epoch_loss:.4e}")

    save_checkpoint(out_dir / "last.pt", model, net_cfg, grid_hw, dataset.k)
    eval_set = test_set if test_set is not None else dataset
    metrics = {
        "variant": net_cfg.variant,
        "epochs": train_cfg.epochs,
        **evaluate_model(load_checkpoint(out_dir / "best.pt"), eval_set),
        "final_train_loss": history[-1],
        "train_loss_history": history,
        "wall_time": time.perf_counter() - t_start,
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))
    return metrics
