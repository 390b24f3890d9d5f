"""Config parsing and validation, the runner, manifests, determinism."""
import csv
import json
from pathlib import Path

import pytest

from nlharnack import cli
from nlharnack.cli import (
    COMMANDS,
    ConfigError,
    config_digest,
    config_rng,
    parse_config,
    run,
    validate_config,
)

CONFIG_DIR = Path(cli.__file__).parent / "configs"


def write_config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def fast_bhp_config():
    return {
        "command": "bhp",
        "kernel": {"s": 0.5, "lambda": 1.0, "Lambda": 2.0,
                   "variant": "fractional_laplacian"},
        "domain": {"name": "half-space"},
        "data1": {"kind": "interval", "a": 1.0, "b": 1.5},
        "data2": {"kind": "interval", "a": 1.5, "b": 2.0},
        "grid_ladder": [0.03125, 0.015625],
    }


# ---------------------------------------------------------------------------
# digest and rng


def test_digest_ignores_key_order():
    assert config_digest({"a": 1, "b": [2, 3]}) == config_digest({"b": [2, 3],
                                                                  "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_rng_is_seeded_from_the_digest():
    draws = config_rng({"x": 1}).standard_normal(4)
    again = config_rng({"x": 1}).standard_normal(4)
    other = config_rng({"x": 2}).standard_normal(4)
    assert (draws == again).all()
    assert (draws != other).any()


# ---------------------------------------------------------------------------
# validation


def test_all_violations_collected_in_one_pass():
    bad = {
        "command": "bhp",
        "kernel": {"s": 1.5, "lambda": 2.0, "Lambda": 1.0},
        "domain": {"name": "moebius"},
        "grid_ladder": [0.1, 0.2],
        "delta": -1.0,
        "dim": 3,
    }
    violations = validate_config(bad)
    assert len(violations) == 8
    text = "\n".join(violations)
    for fragment in ("data1", "data2", "order out of range", "lambda <= Lambda",
                     "dim must be 1 or 2", "unknown domain",
                     "strictly decreasing", "nonnegative"):
        assert fragment in text, fragment


def test_unknown_command_rejected():
    violations = validate_config({"command": "simulate"})
    assert len(violations) == 1
    assert "simulate" in violations[0]
    assert set(COMMANDS) == {"solve", "pucci-solve", "verify-barrier", "bhp",
                             "holder", "half-harnack", "growth", "replay-thm12"}


def test_parse_raises_config_error_with_everything(tmp_path):
    p = write_config(tmp_path, {"command": "growth", "kernel": {"s": 0.0}})
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert len(err.value.violations) >= 3  # missing keys plus the bad order


def test_strict_rejects_unknown_keys_lax_tolerates(tmp_path):
    cfg = fast_bhp_config()
    cfg["future_flag"] = True
    p = write_config(tmp_path, cfg)
    parsed = parse_config(p)  # lax: unknown keys pass through
    assert parsed.get("future_flag") is True
    with pytest.raises(ConfigError, match="future_flag"):
        parse_config(p, strict=True)


def test_strict_rejects_duplicate_keys_and_nan(tmp_path):
    p = tmp_path / "dup.json"
    p.write_text('{"command": "solve", "command": "solve", '
                 '"kernel": {"s": 0.5}, "domain": {"name": "half-space"}, '
                 '"grid_ladder": [0.25], "data": {"kind": "constant", "value": 0.0}}')
    parse_config(p)  # lax accepts the round-trip hazard
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_config(p, strict=True)
    q = tmp_path / "nan.json"
    q.write_text('{"command": "solve", "kernel": {"s": 0.5}, '
                 '"domain": {"name": "half-space"}, "grid_ladder": [0.25], '
                 '"data": {"kind": "constant", "value": 0.0}, "delta": NaN}')
    with pytest.raises(ConfigError, match="non-finite"):
        parse_config(q, strict=True)


def test_rhs_and_delta_are_mutually_exclusive():
    cfg = {
        "command": "solve",
        "kernel": {"s": 0.5},
        "domain": {"name": "half-space"},
        "grid_ladder": [0.25],
        "data": {"kind": "constant", "value": 0.0},
        "rhs": {"kind": "constant", "value": -1.0},
        "delta": 1.0,
    }
    violations = validate_config(cfg)
    assert any("either rhs or a positive delta" in v for v in violations)


def test_shipped_configs_parse_strictly():
    paths = sorted(CONFIG_DIR.glob("*.json"))
    assert len(paths) == 10
    for p in paths:
        cfg = parse_config(p, strict=True)
        assert cfg.command in COMMANDS
        assert cfg.digest == config_digest(cfg.settings)


# ---------------------------------------------------------------------------
# runner and manifest


def test_zero_data_solve_end_to_end(tmp_path):
    cfg = parse_config(CONFIG_DIR / "solve_zero_data.json", strict=True)
    out = tmp_path / "out"
    code, manifest = run(cfg, out)
    assert code == 0
    assert manifest.exit_code == 0
    assert manifest.failed_stage is None
    assert set(manifest.outputs) == {"report.json", "solution.csv",
                                     "manifest.json"}
    for stage in ("build", "solve", "measure", "write"):
        assert stage in manifest.durations
    report = json.loads((out / "report.json").read_text())
    assert report["ok"] is True
    assert report["config_hash"] == cfg.digest
    assert report["sup_abs"] == 0.0
    with open(out / "solution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["value"]) == 0.0 for r in rows)
    saved = json.loads((out / "manifest.json").read_text())
    assert saved["exit_code"] == 0 and saved["command"] == "solve"


def test_runtime_failure_is_pinned_to_a_stage(tmp_path):
    # u2's data sits across the zero gap, so the comparability measurement
    # floors out and raises inside the pipeline stage
    cfg_dict = fast_bhp_config()
    cfg_dict["data2"] = {"kind": "interval", "a": -2.0, "b": -1.0}
    p = write_config(tmp_path, cfg_dict)
    cfg = parse_config(p, strict=True)
    out = tmp_path / "out"
    code, manifest = run(cfg, out)
    assert code == 1
    assert manifest.failed_stage == "pipeline"
    assert "empty after flooring" in manifest.error
    assert (out / "manifest.json").exists()
    assert not (out / "report.json").exists()


def test_parse_failure_manifest_and_exit_code(tmp_path):
    p = write_config(tmp_path, {"command": "orbit"})
    out = tmp_path / "out"
    rc = cli.main(["--config", str(p), "--out", str(out)])
    assert rc == 2
    saved = json.loads((out / "manifest.json").read_text())
    assert saved["failed_stage"] == "parse"
    assert saved["exit_code"] == 2
    assert "orbit" in saved["error"]


def test_cli_main_happy_path(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["--config", str(CONFIG_DIR / "solve_zero_data.json"),
                   "--out", str(out), "--strict"])
    assert rc == 0
    assert "solve: ok" in capsys.readouterr().out
    assert (out / "report.json").exists()


# ---------------------------------------------------------------------------
# determinism


def test_rerun_writes_identical_report_bytes(tmp_path):
    p = write_config(tmp_path, fast_bhp_config())
    cfg = parse_config(p, strict=True)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(cfg, out1)[0] == 0
    assert run(cfg, out2)[0] == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "ratio.csv").read_bytes() == (out2 / "ratio.csv").read_bytes()


def test_jobs_do_not_change_report_bytes(tmp_path):
    p = write_config(tmp_path, fast_bhp_config())
    cfg = parse_config(p, strict=True)
    out1, out2 = tmp_path / "j1", tmp_path / "j2"
    assert run(cfg, out1, jobs=1)[0] == 0
    assert run(cfg, out2, jobs=2)[0] == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
