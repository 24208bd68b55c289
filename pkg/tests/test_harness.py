import csv
import json
import subprocess

import jsonschema
import numpy as np
import pytest

from edgemob.cli import main
from edgemob.config import RunConfig
from edgemob.errors import ConfigError, SchemaError
from edgemob.harness import (emit, git_blob_hash, run_experiment, run_replication, summary_dict, sweep,
                             validate_summary)


@pytest.fixture(scope="module")
def small_config():
    return RunConfig.profile("desk", replications=2, schedule={"R": 5}, constants={"budget": 0.6},
                             psi={"K": 20})


@pytest.fixture(scope="module")
def small_result(small_config):
    return run_experiment(small_config)


def test_policies_share_one_trace(small_config):
    rep = run_replication(small_config, 0)
    assert set(rep.reports) == set(small_config.policies)
    sizes = {p: r.feasible_set_size.tolist() for p, r in rep.reports.items()}
    assert len({tuple(s) for s in sizes.values()}) == 1
    again = run_replication(small_config, 0)
    assert again.trace_hash == rep.trace_hash
    assert run_replication(small_config, 1).trace_hash != rep.trace_hash


def test_reruns_are_bit_identical(small_config, small_result):
    other = run_experiment(small_config)
    assert summary_dict(other) == summary_dict(small_result)
    for a, b in zip(small_result.replications, other.replications):
        for p in small_config.policies:
            assert np.array_equal(a.reports[p].energy, b.reports[p].energy)


def test_emit_writes_all_rows(small_result, tmp_path):
    paths = emit(small_result, tmp_path)
    names = {p.name for p in paths}
    assert {"chosen.csv", "delay.csv", "energy.csv", "queue.csv", "handovers.csv", "fallback.csv",
            "psi_convergence.csv", "summary.json"} <= names
    with (tmp_path / "delay.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "replication", "policy", "delay"]
    assert len(rows) - 1 == 20 * 2 * len(small_result.policies)
    with (tmp_path / "psi_convergence.csv").open() as fh:
        assert len(list(csv.reader(fh))) - 1 == 20
    doc = json.loads((tmp_path / "summary.json").read_text())
    validate_summary(doc)


def test_summary_hash_is_checked(small_result):
    doc = summary_dict(small_result)
    validate_summary(doc)
    doc["aggregates"]["fsi"]["mean_delay"]["mean"] += 1.0
    with pytest.raises(jsonschema.ValidationError):
        validate_summary(doc)


def test_summary_schema_rejects_missing_fields(small_result):
    doc = summary_dict(small_result)
    del doc["replications"]
    with pytest.raises(jsonschema.ValidationError):
        validate_summary(doc)


def test_git_blob_hash_matches_git(tmp_path):
    data = b"edge association\n"
    p = tmp_path / "blob"
    p.write_bytes(data)
    try:
        out = subprocess.run(["git", "hash-object", str(p)], capture_output=True, text=True, check=True).stdout
    except (OSError, subprocess.CalledProcessError):
        pytest.skip("git not available")
    assert git_blob_hash(data) == out.strip()


def test_sweep_rejects_unknown_parameter(small_config):
    with pytest.raises(ConfigError):
        sweep(small_config, "J", [2, 4])


def test_sweep_pairs_seeds(small_config):
    results = sweep(small_config.replace(replications=1), "budget", [0.4, 0.8])
    # the budget only changes the constants, so the traces differ only in their header
    a, b = (res.replications[0].reports["fsi"] for _, res in results)
    assert np.array_equal(a.feasible_set_size, b.feasible_set_size)
    da, db = (res.replications[0].reports["delay_optimal"] for _, res in results)
    assert np.array_equal(da.delay, db.delay)
    assert [res.config.constants().budget for _, res in results] == [0.4, 0.8]


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.profile("desk", policies=["fsi", "oracle"])
    with pytest.raises(ConfigError):
        RunConfig.profile("desk", constants={"budget_unit": "kJ"})
    with pytest.raises(ConfigError):
        RunConfig.profile("nope")
    with pytest.raises(SchemaError):
        RunConfig.from_dict({"schema": "edgemob.config", "version": 99})


def test_config_round_trip(tmp_path):
    cfg = RunConfig.profile("full")
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert RunConfig.load(p).to_dict() == cfg.to_dict()
    assert cfg.schedule().horizon == 1000
    assert cfg.constants().budget == 120.0


# -------------------------------------------------------------------- CLI


def test_cli_generate_and_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(RunConfig.profile("desk", replications=1, schedule={"R": 5},
                                                constants={"budget": 0.6}, psi={"K": 20}).to_dict()))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "t.json")]) == 0
    assert (tmp_path / "t.json").exists()
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "summary.json").exists()
    assert main(["bounds", str(out)]) in (0, 3)
    text = capsys.readouterr().out
    assert "mean delay" in text and "empirical" in text


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(RunConfig.profile("desk", replications=1, schedule={"R": 5},
                                                policies=["fsi"]).to_dict()))
    assert main(["sweep", "--config", str(cfg), "--parameter", "budget", "--values", "0.5,1.0",
                 "--out", str(tmp_path / "sw")]) == 0
    assert (tmp_path / "sw" / "budget=0.5" / "summary.json").exists()


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["bounds", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        main(["sweep", "--parameter", "J", "--values", "1"])
