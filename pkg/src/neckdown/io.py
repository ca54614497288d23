"""Run manifests and file output: ledger CSV, snapshot JSON lines, report
JSON, checkpoints.

All floating-point text uses 17 significant digits, which round-trips IEEE
doubles exactly; identical manifests therefore produce byte-identical files,
and a checkpoint restores the solver state bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .evolve import (
    RunStart,
    SolverConfig,
    Termination,
    Trajectory,
    decay_rate,
    detect_pinch,
    relaxation_check,
    run,
)
from .grid import Profile, make_grid
from .initial import build_initial_condition

IC_FAMILIES = ("steady", "steady-perturbed-poly", "steady-perturbed-random", "file")

LEDGER_HEADER = "t,energy,dissipation,cum_dissipation,h_min,x_min,picard_iters"
FLUX_HEADER = "t,weighted_flux_norm,flux_curvature_norm,identity_residual"


def _g17(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run and locate its outputs."""

    config: SolverConfig
    initial_condition: str
    out_dir: Path
    seed: int = 0
    checkpoint: Path | None = None     # write final state here if set
    restore: Path | None = None        # resume from this checkpoint if set

    def __post_init__(self):
        family = self.initial_condition.partition(":")[0]
        if family not in IC_FAMILIES:
            raise ValueError(
                f"unknown initial-condition family {family!r}; "
                f"choose one of {', '.join(IC_FAMILIES)}"
            )

    @property
    def ledger_path(self) -> Path:
        return self.out_dir / "ledger.csv"

    @property
    def snapshots_path(self) -> Path:
        return self.out_dir / "snapshots.jsonl"

    @property
    def report_path(self) -> Path:
        return self.out_dir / "report.json"

    @property
    def flux_path(self) -> Path:
        return self.out_dir / "flux_diagnostics.csv"


def write_ledger_csv(traj: Trajectory, path: Path) -> None:
    lines = [LEDGER_HEADER]
    for row, mins, iters in zip(traj.ledger, traj.min_series, traj.picard_iters):
        lines.append(
            ",".join(
                [
                    _g17(row.time),
                    _g17(row.energy),
                    _g17(row.dissipation),
                    _g17(row.cumulative_dissipation),
                    _g17(mins[2]),
                    _g17(mins[1]),
                    str(int(iters)),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def write_flux_csv(traj: Trajectory, path: Path) -> None:
    lines = [FLUX_HEADER]
    for row in traj.flux_reports:
        lines.append(
            ",".join(
                _g17(v)
                for v in (
                    row.time,
                    row.weighted_flux_norm,
                    row.flux_curvature_norm,
                    row.identity_residual,
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")


def write_snapshots_jsonl(traj: Trajectory, path: Path) -> None:
    with path.open("w") as fh:
        for t, step, snap in zip(traj.times, traj.snapshot_steps, traj.snapshots):
            fh.write(
                '{"t": %s, "step": %d, "values": [%s]}\n'
                % (_g17(t), int(step), ", ".join(_g17(v) for v in snap.values))
            )


def read_snapshots_jsonl(path: Path) -> list[dict]:
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def build_report(traj: Trajectory) -> dict:
    """Summary dict with pinch / decay / relaxation sub-reports."""
    cfg = traj.config
    pinch = detect_pinch(traj)
    report = {
        "termination": traj.termination.value,
        "failure_message": traj.failure_message,
        "steps": int(traj.snapshot_steps[-1]),
        "t_end": float(traj.ledger[-1].time),
        "energy_initial": traj.ledger[0].energy,
        "energy_final": traj.ledger[-1].energy,
        "cumulative_dissipation": traj.ledger[-1].cumulative_dissipation,
        "max_solver_residual": traj.max_solver_residual,
        "picard_iters_max": int(traj.picard_iters.max()),
        "picard_iters_mean": float(traj.picard_iters[1:].mean())
        if len(traj.picard_iters) > 1
        else 0.0,
        "pinch": {
            "pinched": pinch.pinched,
            "t_pinch": pinch.t_pinch,
            "x_pinch": pinch.x_pinch,
            "log_slope": pinch.log_slope,
        },
        "decay": None,
        "relaxation": None,
    }
    if cfg.pressure < 2.0 and traj.termination is Termination.REACHED_T_FINAL:
        try:
            fit = decay_rate(traj)
            report["decay"] = {
                "rate": fit.rate,
                "prefactor": fit.prefactor,
                "r_squared": fit.r_squared,
            }
        except ValueError:
            pass
    relax = relaxation_check(traj)
    report["relaxation"] = {
        "h1_distance": relax.h1_distance,
        "h3_local_distance": relax.h3_local_distance,
        "dissipation_end": relax.dissipation_end,
        "delta_loc": relax.delta_loc,
    }
    return _jsonable(report)


def write_report_json(report: dict, path: Path) -> None:
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def write_checkpoint(traj: Trajectory, path: Path) -> None:
    """Final state of a run, sufficient to continue it bit for bit."""
    state = {
        "config": _jsonable(config_to_dict(traj.config)),
        "step": int(traj.snapshot_steps[-1]),
        "time": traj.ledger[-1].time,
        "cumulative_dissipation": traj.ledger[-1].cumulative_dissipation,
        "values": [float(v) for v in traj.final.values],
    }
    path.write_text(json.dumps(state) + "\n")


def load_checkpoint(path: Path, cfg: SolverConfig) -> tuple[Profile, RunStart]:
    state = json.loads(Path(path).read_text())
    saved = state["config"]
    for key in ("n", "pressure", "dt"):
        if saved[key] != getattr(cfg, key):
            raise ValueError(
                f"checkpoint {key}={saved[key]} does not match config "
                f"{key}={getattr(cfg, key)}"
            )
    grid = make_grid(cfg.n)
    profile = Profile(
        grid=grid, values=np.asarray(state["values"], dtype=float), pressure=cfg.pressure
    )
    start = RunStart(
        time=float(state["time"]),
        step=int(state["step"]),
        cumulative_dissipation=float(state["cumulative_dissipation"]),
    )
    return profile, start


def config_to_dict(cfg: SolverConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(SolverConfig)}


def resolve_config(flags: dict, file_values: dict | None = None) -> SolverConfig:
    """Merge flag values over config-file values over dataclass defaults.

    flags maps field names to values or None (absent); file_values comes from
    a JSON config file and may be None.  Unknown keys in the file are errors.
    """
    known = {f.name for f in fields(SolverConfig)}
    merged: dict = {}
    if file_values:
        unknown = set(file_values) - known
        if unknown:
            raise ValueError(f"unknown config file keys: {sorted(unknown)}")
        merged.update(file_values)
    for key, value in flags.items():
        if key in known and value is not None:
            merged[key] = value
    if "pressure" not in merged:
        raise ValueError("pressure is required (flag --pressure or config file)")
    return SolverConfig(**merged)


def default_out_dir() -> Path:
    return Path(os.environ.get("NECKDOWN_OUT_DIR", "runs"))


def execute_run(manifest: RunManifest) -> tuple[Trajectory, dict]:
    """Run a manifest and write its artifacts; returns trajectory + report."""
    cfg = manifest.config
    grid = make_grid(cfg.n)
    if manifest.restore is not None:
        h0, start = load_checkpoint(manifest.restore, cfg)
    else:
        values = build_initial_condition(
            manifest.initial_condition, cfg.pressure, grid, seed=manifest.seed
        )
        h0 = Profile(grid=grid, values=values, pressure=cfg.pressure)
        start = None

    traj = run(cfg, h0, start=start)

    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    write_ledger_csv(traj, manifest.ledger_path)
    write_snapshots_jsonl(traj, manifest.snapshots_path)
    report = build_report(traj)
    report["manifest"] = {
        "config": _jsonable(config_to_dict(cfg)),
        "initial_condition": manifest.initial_condition,
        "seed": manifest.seed,
    }
    write_report_json(report, manifest.report_path)
    if cfg.flux_diagnostics:
        write_flux_csv(traj, manifest.flux_path)
    if manifest.checkpoint is not None:
        write_checkpoint(traj, manifest.checkpoint)
    return traj, report
