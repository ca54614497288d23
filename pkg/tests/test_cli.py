"""Tests for config resolution, run artifacts, and the command line."""

import json

import numpy as np
import pytest

from neckdown.cli import main
from neckdown.evolve import SolverConfig
from neckdown.io import (
    LEDGER_HEADER,
    RunManifest,
    execute_run,
    load_checkpoint,
    read_snapshots_jsonl,
    resolve_config,
    write_checkpoint,
)


def quick_config(**overrides):
    base = dict(
        pressure=1.5, dt=1e-4, t_final=0.01, epsilon=1e-2, output_every=25
    )
    base.update(overrides)
    return SolverConfig(**base)


def test_resolve_config_precedence():
    cfg = resolve_config({"pressure": None, "dt": None}, {"pressure": 1.0})
    assert cfg.pressure == 1.0 and cfg.dt == 1e-5      # file + default
    cfg = resolve_config(
        {"pressure": 2.5, "dt": 5e-5}, {"pressure": 1.0, "dt": 1e-4}
    )
    assert cfg.pressure == 2.5 and cfg.dt == 5e-5      # flags win
    with pytest.raises(ValueError, match="unknown config file keys"):
        resolve_config({"pressure": 1.0}, {"presure": 1.0})
    with pytest.raises(ValueError, match="pressure is required"):
        resolve_config({"pressure": None}, {"dt": 1e-4})


def test_manifest_rejects_unknown_family(tmp_path):
    with pytest.raises(ValueError, match="unknown initial-condition family"):
        RunManifest(
            config=quick_config(),
            initial_condition="sine",
            out_dir=tmp_path,
        )


def test_execute_run_writes_parseable_artifacts(tmp_path):
    manifest = RunManifest(
        config=quick_config(flux_diagnostics=True),
        initial_condition="steady-perturbed-poly:0.05",
        out_dir=tmp_path / "out",
    )
    traj, report = execute_run(manifest)

    ledger_lines = manifest.ledger_path.read_text().splitlines()
    assert ledger_lines[0] == LEDGER_HEADER
    assert len(ledger_lines) == 1 + len(traj.ledger)
    first = ledger_lines[1].split(",")
    assert float(first[0]) == traj.ledger[0].time
    assert float(first[1]) == traj.ledger[0].energy     # %.17g round-trips
    assert float(first[4]) == traj.min_series[0, 2]
    assert int(first[6]) == 0

    rows = read_snapshots_jsonl(manifest.snapshots_path)
    assert len(rows) == len(traj.snapshots)
    assert rows[-1]["step"] == int(traj.snapshot_steps[-1])
    np.testing.assert_array_equal(
        np.array(rows[-1]["values"]), traj.final.values
    )

    assert report["termination"] == "reached-t-final"
    assert report["manifest"]["initial_condition"] == "steady-perturbed-poly:0.05"
    assert "out_dir" not in report["manifest"]
    on_disk = json.loads(manifest.report_path.read_text())
    assert on_disk == report

    flux_lines = manifest.flux_path.read_text().splitlines()
    assert flux_lines[0].startswith("t,")
    assert len(flux_lines) == 1 + len(traj.flux_reports)


def test_execute_run_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        manifest = RunManifest(
            config=quick_config(),
            initial_condition="steady-perturbed-random:0.05",
            out_dir=tmp_path / name,
            seed=7,
        )
        execute_run(manifest)
        outs.append(manifest)
    for attr in ("ledger_path", "snapshots_path", "report_path"):
        a = getattr(outs[0], attr).read_bytes()
        b = getattr(outs[1], attr).read_bytes()
        assert a == b, f"{attr} differs between identical runs"


def test_checkpoint_roundtrip_and_mismatch(tmp_path):
    cfg = quick_config()
    manifest = RunManifest(
        config=cfg,
        initial_condition="steady-perturbed-poly:0.05",
        out_dir=tmp_path / "run",
        checkpoint=tmp_path / "state.json",
    )
    traj, _ = execute_run(manifest)
    profile, start = load_checkpoint(manifest.checkpoint, cfg)
    np.testing.assert_array_equal(profile.values, traj.final.values)
    assert start.step == int(traj.snapshot_steps[-1])
    assert start.time == traj.ledger[-1].time
    assert start.cumulative_dissipation == traj.ledger[-1].cumulative_dissipation
    with pytest.raises(ValueError, match="does not match config"):
        load_checkpoint(manifest.checkpoint, quick_config(dt=5e-5))


def test_split_run_continues_bit_for_bit(tmp_path):
    whole = RunManifest(
        config=quick_config(t_final=0.02),
        initial_condition="steady-perturbed-poly:0.05",
        out_dir=tmp_path / "whole",
    )
    _, report_whole = execute_run(whole)

    first = RunManifest(
        config=quick_config(t_final=0.01),
        initial_condition="steady-perturbed-poly:0.05",
        out_dir=tmp_path / "first",
        checkpoint=tmp_path / "mid.json",
    )
    execute_run(first)
    second = RunManifest(
        config=quick_config(t_final=0.02),
        initial_condition="steady-perturbed-poly:0.05",
        out_dir=tmp_path / "second",
        restore=tmp_path / "mid.json",
    )
    traj2, report_second = execute_run(second)

    rows_whole = read_snapshots_jsonl(whole.snapshots_path)
    rows_second = read_snapshots_jsonl(second.snapshots_path)
    assert rows_whole[-1]["values"] == rows_second[-1]["values"]
    assert rows_whole[-1]["t"] == rows_second[-1]["t"]
    assert report_whole["energy_final"] == report_second["energy_final"]
    assert (
        report_whole["cumulative_dissipation"]
        == report_second["cumulative_dissipation"]
    )


def test_cli_run_writes_and_exits_zero(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--pressure", "1.5",
            "--dt", "1e-4",
            "--t-final", "0.005",
            "--epsilon", "1e-2",
            "--ic", "steady-perturbed-poly:0.05",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "termination: reached-t-final" in out
    assert (tmp_path / "out" / "ledger.csv").exists()
    assert (tmp_path / "out" / "snapshots.jsonl").exists()
    assert (tmp_path / "out" / "report.json").exists()


def test_cli_flags_override_config_file(tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(
        json.dumps({"pressure": 1.5, "dt": 1e-4, "t_final": 0.005, "epsilon": 1e-2})
    )
    rc = main(
        [
            "run",
            "--config", str(cfg_file),
            "--dt", "5e-5",
            "--ic", "steady",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 0
    echoed = capsys.readouterr().out.splitlines()[0]
    assert echoed.startswith("resolved config:")
    resolved = json.loads(echoed.partition("resolved config:")[2])
    assert resolved["dt"] == 5e-5
    assert resolved["pressure"] == 1.5


def test_cli_pinch_run_counts_as_success(tmp_path):
    rc = main(
        [
            "run",
            "--pressure", "4",
            "--dt", "1e-4",
            "--t-final", "0.5",
            "--epsilon", "1e-4",
            "--pinch-floor", "1e-3",
            "--ic", "steady-perturbed-poly:1.2",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["termination"] == "pinch-detected"
    assert report["pinch"]["pinched"] is True


def test_cli_solver_failure_exits_three(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--pressure", "1",
            "--dt", "10",
            "--t-final", "10",
            "--epsilon", "1e-2",
            "--picard-max", "2",
            "--ic", "steady-perturbed-poly:1.0",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 3
    assert "no convergence" in capsys.readouterr().err


def test_cli_bad_arguments_exit_two(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--pressure", "-1",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "P>0" in capsys.readouterr().err
    rc = main(
        [
            "run",
            "--pressure", "1",
            "--ic", "sine",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "unknown initial-condition family" in capsys.readouterr().err


def test_cli_steady_dump(tmp_path, capsys):
    rc = main(["steady", "--pressure", "8", "--n", "101"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["contact_point"] == pytest.approx(0.5)
    assert payload["energy"] == pytest.approx(16.0 / 3.0)
    assert len(payload["values"]) == 101

    out = tmp_path / "steady.json"
    rc = main(["steady", "--pressure", "1", "--n", "101", "--out", str(out)])
    assert rc == 0
    saved = json.loads(out.read_text())
    assert saved["values"][50] == pytest.approx(0.5)

    assert main(["steady"]) == 2
    capsys.readouterr()
    assert main(["steady", "--pressure", "-3"]) == 2


def test_cli_sweep_writes_summary(tmp_path, capsys):
    rc = main(
        [
            "sweep",
            "--pressures", "1.5,4",
            "--workers", "2",
            "--dt", "1e-4",
            "--t-final", "0.005",
            "--epsilon", "1e-2",
            "--ic", "steady-perturbed-poly",
            "--out-dir", str(tmp_path / "sweep"),
        ]
    )
    assert rc == 0
    summary = (tmp_path / "sweep" / "summary.csv").read_text().splitlines()
    assert summary[0] == "pressure,termination,t_end,energy_final,pinched,t_pinch"
    assert len(summary) == 3
    assert summary[1].startswith("1.5,reached-t-final")
    assert summary[2].startswith("4,reached-t-final")
    assert (tmp_path / "sweep" / "P1.5" / "report.json").exists()
    assert (tmp_path / "sweep" / "P4" / "report.json").exists()


def test_cli_continuation_writes_pairs(tmp_path, capsys):
    rc = main(
        [
            "continuation",
            "--pressure", "1",
            "--dt", "1e-4",
            "--t-final", "0.005",
            "--ic", "steady-perturbed-poly:0.05",
            "--eps-schedule", "1e-2,1e-3",
            "--out-dir", str(tmp_path / "cont"),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "max sup diff" in out and "cauchy:" in out
    saved = json.loads((tmp_path / "cont" / "continuation.json").read_text())
    assert saved["schedule"] == [1e-2, 1e-3]
    assert len(saved["pairs"]) == 1
    assert saved["pairs"][0]["max_sup_diff"] > 0.0


def test_cli_verify_quick(capsys):
    rc = main(["verify", "--quick"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_cli_default_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("NECKDOWN_OUT_DIR", str(tmp_path / "envout"))
    rc = main(
        [
            "run",
            "--pressure", "1.5",
            "--dt", "1e-4",
            "--t-final", "0.002",
            "--epsilon", "1e-2",
            "--ic", "steady",
        ]
    )
    assert rc == 0
    assert (tmp_path / "envout" / "report.json").exists()


def test_cli_checkpoint_restore_roundtrip(tmp_path):
    common = [
        "--pressure", "1.5",
        "--dt", "1e-4",
        "--epsilon", "1e-2",
        "--ic", "steady-perturbed-poly:0.05",
    ]
    rc = main(
        ["run", *common, "--t-final", "0.005",
         "--out-dir", str(tmp_path / "a"),
         "--checkpoint", str(tmp_path / "ck.json")]
    )
    assert rc == 0
    rc = main(
        ["run", *common, "--t-final", "0.01",
         "--out-dir", str(tmp_path / "b"),
         "--restore", str(tmp_path / "ck.json")]
    )
    assert rc == 0
    report = json.loads((tmp_path / "b" / "report.json").read_text())
    assert report["t_end"] == pytest.approx(0.01)
    assert report["steps"] == 100
