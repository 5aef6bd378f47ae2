"""Shared fixtures: datasets are produced through the solver package's CLI,
which together with the .hfd byte layout is the interface between the
two packages."""

import json
import subprocess
import sys

import pytest


def generate_dataset(out_dir, *, nx=32, k=10.0, q_kind="t_shape", q_amp=0.1,
                     f_kind="gaussian_r", R=30.0, seed=100, count=10):
    config = {
        "grid": {"nx": nx, "ny": nx},
        "k": k,
        "q": {"kind": q_kind, "amplitude": q_amp},
        "f": {"kind": f_kind, "R": R},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_path = out_dir / "config.json"
    cfg_path.write_text(json.dumps(config))
    ds_path = out_dir / "data"
    subprocess.run(
        [
            sys.executable, "-m", "helmscat.cli",
            "gen-dataset", "--config", str(cfg_path),
            "--seed", str(seed), "--count", str(count), "--out", str(ds_path),
        ],
        check=True,
        capture_output=True,
    )
    return ds_path


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Ten 32x32 records at k = 10 (T-shaped q, Gaussian(30) f)."""
    return generate_dataset(tmp_path_factory.mktemp("ds_small"), seed=100, count=10)
