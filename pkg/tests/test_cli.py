import json

from click.testing import CliRunner

from recpoison.cli import main


def write_config(tmp_path, **overrides):
    raw = {
        "dataset": {"kind": "synthetic", "num_users": 40, "num_items": 25, "avg_items": 6, "seed": 1},
        "split": {"seed": 2},
        "targets": {"count": 2, "seed": 3},
        "attack": {
            "delta": 0.05,
            "epsilon": 0.05,
            "outer_iters": 1,
            "seed": 4,
            "surrogate": {"factors": 4, "steps": 10, "learning_rate": 0.005},
        },
        "attackers": ["clean", "random", "sharpap"],
        "victims": {"wrmf": {"model": "wrmf", "factors": 4, "steps": 15, "learning_rate": 0.005}},
        "metrics": ["hr"],
        "ks": [5],
        "repeats": 1,
        "eval_seed": 5,
        "output_dir": str(tmp_path / "out"),
    }
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def test_dry_run_prints_stages(tmp_path):
    cfg = write_config(tmp_path)
    result = CliRunner().invoke(main, ["run", "--config", str(cfg), "--dry-run"])
    assert result.exit_code == 0
    assert "planned stages" in result.output
    assert "evaluate" in result.output


def test_full_run_exit_zero(tmp_path):
    cfg = write_config(tmp_path)
    result = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "reports" / "transfer.csv").exists()


def test_validation_error_exit_one(tmp_path):
    cfg = write_config(tmp_path, attack={"delta": 0.05, "epsilon": -1.0, "surrogate": {}})
    result = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert result.exit_code == 1
    assert "attack.epsilon" in result.output


def test_runtime_failure_exit_two(tmp_path):
    cfg = write_config(
        tmp_path,
        attack={"delta": 0.05, "outer_iters": 1, "surrogate": {"factors": 4, "steps": 3000, "learning_rate": 99.0}},
    )
    result = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert result.exit_code == 2


def test_staged_pipeline(tmp_path):
    cfg = write_config(tmp_path)
    runner = CliRunner()
    for cmd in ("ingest", "attack", "evaluate"):
        result = runner.invoke(main, [cmd, "--config", str(cfg)])
        assert result.exit_code == 0, (cmd, result.output)
    assert (tmp_path / "out" / "data" / "train.csv").exists()
    assert (tmp_path / "out" / "attacks" / "sharpap" / "profiles.csv").exists()
    assert (tmp_path / "out" / "reports" / "transfer.csv").exists()


def test_evaluate_without_attack_stage_fails_cleanly(tmp_path):
    cfg = write_config(tmp_path, output_dir=str(tmp_path / "fresh"))
    result = CliRunner().invoke(main, ["evaluate", "--config", str(cfg)])
    assert result.exit_code == 1
    assert "attack stage" in result.output


def test_timing_command(tmp_path):
    cfg = write_config(tmp_path)
    result = CliRunner().invoke(main, ["timing", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    assert "overhead" in result.output


def test_seed_override_flag(tmp_path):
    cfg = write_config(tmp_path)
    r1 = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / "s1"), "--seed", "42"])
    r2 = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / "s2"), "--seed", "42"])
    assert r1.exit_code == 0 and r2.exit_code == 0
    a = (tmp_path / "s1" / "reports" / "transfer.csv").read_bytes()
    b = (tmp_path / "s2" / "reports" / "transfer.csv").read_bytes()
    assert a == b


def test_shipped_demo_config_validates():
    from recpoison.experiment import ExperimentConfig
    from pathlib import Path

    demo = Path(__file__).resolve().parent.parent / "configs" / "demo.json"
    cfg = ExperimentConfig.from_json(demo)
    assert cfg.data["attackers"] == ["clean", "random", "popular", "backbone", "sharpap"]
