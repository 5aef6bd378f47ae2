import json

from nsnet.cli import main


def test_train_then_eval_round_trip(small_dataset, tmp_path, capsys):
    out = tmp_path / "run"
    code = main([
        "train", "--dataset", str(small_dataset), "--variant", "fno",
        "--epochs", "2", "--batch-size", "5", "--k-max", "4",
        "--seed", "0", "--out", str(out),
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["variant"] == "fno"
    assert (out / "best.pt").exists()

    code = main([
        "eval", "--checkpoint", str(out / "best.pt"),
        "--dataset", str(small_dataset),
        "--out-json", str(tmp_path / "metrics.json"),
    ])
    assert code == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["variant"] == "fno"
    assert len(metrics["per_record"]) == 10
