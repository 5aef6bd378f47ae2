"""Acceptance suite for the trainer package (S1..S4), one verdict line each.

S4 trains two full models on CPU at the 32x32 fallback scale and takes
around 15 minutes; deselect it with ``pytest -m "not slow"``.
"""

import sys
import time

import pytest
import torch

from nsnet import NetworkConfig, TrainConfig, train
from nsnet.data import FieldTripleDataset
from nsnet.losses import pde_residual_norm

from conftest import generate_dataset
from test_losses import primary_cli_residual
from test_spectral import dense_reference


def report(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    assert passed, line


def test_s1_spectral_layer_dense_oracle():
    from nsnet.spectral import FourierLayer

    torch.manual_seed(0)
    layer = FourierLayer(channels=2, modes1=4).double()
    z = torch.randn(1, 2, 16, 16, dtype=torch.float64)
    with torch.no_grad():
        gap = float((layer(z) - dense_reference(layer, z)).abs().max())
    report("S1 spectral-layer oracle", gap < 1e-5,
           f"FFT path vs dense spatial convolution: max abs diff {gap:.2e} (< 1e-5)")


def test_s2_residual_cross_check(small_dataset):
    ds = FieldTripleDataset(small_dataset, dtype=torch.float64)
    worst = 0.0
    for index in range(10):
        expected = primary_cli_residual(small_dataset, index)
        got = float(
            pde_residual_norm(
                ds.u[index : index + 1], ds.q[index : index + 1],
                ds.f[index : index + 1], ds.k, ds.grid.hx, ds.grid.hy,
            )[0]
        )
        worst = max(worst, abs(got - expected) / expected)
    report("S2 residual cross-check", worst < 1e-6,
           f"trainer loss vs solver CLI on 10 records: worst rel diff {worst:.2e} (< 1e-6)")


def test_s3_overfit_smoke(small_dataset, tmp_path):
    t0 = time.perf_counter()
    metrics = train(
        NetworkConfig("fno", k_max=12),
        TrainConfig(
            epochs=200, batch_size=2, initial_lr=6e-3, lr_halve_every=25,
            lambda_pde=0.0, seed=0,
        ),
        small_dataset,
        tmp_path / "overfit",
    )
    err = metrics["mean_rel_l2"]
    report("S3 overfit smoke", err < 0.02,
           f"train relative error {err:.2%} (< 2%) after 200 epochs on 10 records "
           f"in {time.perf_counter() - t0:.0f} s")


@pytest.mark.slow
def test_s4_directional_benchmark(tmp_path_factory):
    t0 = time.perf_counter()
    base = tmp_path_factory.mktemp("s4")
    train_ds = generate_dataset(base / "train", seed=1000, count=200)
    test_ds = generate_dataset(base / "test", seed=2000, count=40)
    cfg = TrainConfig(epochs=100, initial_lr=1e-3, lr_halve_every=100,
                      batch_size=20, lambda_pde=0.05, seed=0)
    errors = {}
    for variant in ("fno", "ns_uno"):
        metrics = train(
            NetworkConfig(variant, k_max=12), cfg, train_ds,
            base / f"run_{variant}", test_dataset_path=test_ds,
        )
        errors[variant] = metrics["mean_rel_l2"]
    elapsed = time.perf_counter() - t0
    report(
        "S4 directional benchmark",
        errors["ns_uno"] < errors["fno"] and errors["ns_uno"] < 0.10,
        f"test relative error ns_uno {errors['ns_uno']:.2%} < fno "
        f"{errors['fno']:.2%} and < 10% (32x32 CPU fallback, k = 10, "
        f"200 train / 40 test, 100 epochs) in {elapsed / 60:.0f} min",
    )
