"""Nonlinear time stepping, trajectories, and theorem-level diagnostics.

Each step freezes the mobility at the current Picard iterate, g = sqrt(h^2 +
eps^2) (or a floored copy of h when eps = 0), solves the implicit linear
problem, and repeats until the iterates settle in H^1.  Runs log an energy
ledger every step and snapshots on a stride, and stop on reaching the final
time, on the minimum height crossing the pinch floor, or on failure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .functionals import EnergyLedger, dissipation, energy
from .grid import Grid, Profile, derivative, h1_norm, make_grid, min_value
from .initial import bc_residuals
from .linear import FluxEnergyReport, LinearSolveError, StepResult, flux_energy_report, step_linear
from .steady import steady_profile

VALUE_ROW_TOL = 1e-9
CURVATURE_ROW_TOL = 1e-6


class PicardConvergenceError(RuntimeError):
    """The per-step fixed-point iteration failed to settle."""


class Termination(enum.Enum):
    REACHED_T_FINAL = "reached-t-final"
    PINCH_DETECTED = "pinch-detected"
    PICARD_FAILURE = "picard-failure"
    SOLVER_FAILURE = "solver-failure"


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    epsilon = 0 selects the unregularized mobility with a positivity floor
    pinch_floor/10 inside the coefficient only; such runs must stop at the
    pinch floor, hence pinch_floor must be positive.
    """

    pressure: float
    n: int = 201
    dt: float = 1e-5
    t_final: float = 1.0
    epsilon: float = 0.0
    picard_tol: float = 1e-8
    picard_max: int = 12
    pinch_floor: float = 1e-3
    output_every: int = 100
    flux_diagnostics: bool = False
    crank_nicolson: bool = False
    simpson: bool = False

    def __post_init__(self):
        if self.pressure <= 0:
            raise ValueError(f"pressure must satisfy P>0, got {self.pressure}")
        if self.n < 9 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 9, got {self.n}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not (0.0 < self.picard_tol <= 1e-2):
            raise ValueError(
                f"picard_tol must lie in (0, 1e-2], got {self.picard_tol}"
            )
        if self.picard_max < 2:
            raise ValueError(f"picard_max must be at least 2, got {self.picard_max}")
        if self.pinch_floor < 0:
            raise ValueError(f"pinch_floor must be nonnegative, got {self.pinch_floor}")
        if self.epsilon == 0.0 and self.pinch_floor <= 0.0:
            raise ValueError("epsilon = 0 runs need a positive pinch_floor")
        if self.output_every < 1:
            raise ValueError(f"output_every must be >= 1, got {self.output_every}")

    @property
    def rule(self) -> str:
        return "simpson" if self.simpson else "trapezoid"


@dataclass(frozen=True)
class RunStart:
    """Restart offsets (checkpoint restore); zeros for a fresh run."""

    time: float = 0.0
    step: int = 0
    cumulative_dissipation: float = 0.0


@dataclass
class Trajectory:
    """A completed (possibly truncated) run with its per-step diagnostics."""

    config: SolverConfig
    grid: Grid
    times: np.ndarray                 # snapshot times
    snapshots: list[Profile]
    snapshot_steps: np.ndarray
    ledger: list[EnergyLedger]        # one row per step, including the start state
    min_series: np.ndarray            # rows (t, x_m, h_m), aligned with ledger
    picard_iters: np.ndarray          # aligned with ledger; 0 for the start row
    termination: Termination
    failure_message: str | None = None
    flux_reports: list[FluxEnergyReport] = field(default_factory=list)
    max_solver_residual: float = 0.0
    start: RunStart = field(default_factory=RunStart)

    @property
    def final(self) -> Profile:
        return self.snapshots[-1]


def _mobility(values: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    if cfg.epsilon > 0.0:
        return np.sqrt(values * values + cfg.epsilon**2)
    return np.maximum(values, cfg.pinch_floor / 10.0)


def step_nonlinear(h_old: Profile, cfg: SolverConfig) -> tuple[StepResult, int]:
    """One implicit step with coefficient-lagged fixed-point iteration.

    Returns the accepted step and the number of iterations used.  Raises
    PicardConvergenceError when picard_max iterations do not settle to
    picard_tol relative in H^1, and LinearSolveError on solver trouble.
    """
    grid = h_old.grid
    if cfg.epsilon == 0.0 and float(np.min(h_old.values)) <= cfg.pinch_floor:
        raise ValueError(
            "unregularized step requires min(h) above the pinch floor"
        )
    scale = h1_norm(h_old.values, grid)
    prev = h_old.values
    result = None
    for iteration in range(1, cfg.picard_max + 1):
        g = _mobility(prev, cfg)
        result = step_linear(
            h_old, g, cfg.dt, cfg.pressure, crank_nicolson=cfg.crank_nicolson
        )
        delta = h1_norm(result.profile.values - prev, grid)
        prev = result.profile.values
        if delta <= cfg.picard_tol * scale:
            return result, iteration
    raise PicardConvergenceError(
        f"no convergence in {cfg.picard_max} iterations "
        f"(last H1 update {delta:.3e} vs tolerance {cfg.picard_tol * scale:.3e})"
    )


def _validate_initial(h0: Profile, cfg: SolverConfig, grid: Grid) -> None:
    if h0.grid.n != grid.n:
        raise ValueError(
            f"initial data lives on {h0.grid.n} nodes, config wants {grid.n}"
        )
    res = bc_residuals(h0.values, grid, cfg.pressure)
    if abs(res[0]) > VALUE_ROW_TOL or abs(res[3]) > VALUE_ROW_TOL:
        raise ValueError(
            f"initial data violates the boundary value rows: h(-1)-1 = {res[0]:.3e}, "
            f"h(1)-1 = {res[3]:.3e}"
        )
    ctol = CURVATURE_ROW_TOL * max(1.0, cfg.pressure)
    if abs(res[1]) > ctol or abs(res[2]) > ctol:
        raise ValueError(
            f"initial data violates the curvature rows (defects {res[1]:.3e}, "
            f"{res[2]:.3e}); project it onto the boundary rows first"
        )
    if float(np.min(h0.values)) <= 0.0:
        raise ValueError("initial data must be strictly positive")


def run(cfg: SolverConfig, h0: Profile, start: RunStart | None = None) -> Trajectory:
    """Advance the model from h0 until t_final, the pinch floor, or failure."""
    grid = h0.grid if h0.grid.n == cfg.n else make_grid(cfg.n)
    _validate_initial(h0, cfg, grid)
    start = start or RunStart()
    if h0.pressure != cfg.pressure:
        h0 = Profile(grid=grid, values=h0.values, pressure=cfg.pressure)

    rule = cfg.rule
    total_steps = int(round(cfg.t_final / cfg.dt))
    if total_steps < 1:
        raise ValueError("t_final must allow at least one step")
    if start.step >= total_steps and start.time < cfg.t_final:
        raise ValueError("restart point is already past the configured t_final")

    cum = start.cumulative_dissipation
    h = h0
    x_m, h_m = min_value(h)
    ledger = [
        EnergyLedger(
            time=start.time,
            energy=energy(h, cfg.pressure, rule),
            dissipation=dissipation(h, rule),
            cumulative_dissipation=cum,
        )
    ]
    mins = [(start.time, x_m, h_m)]
    iters_list = [0]
    snapshots = [h]
    snap_times = [start.time]
    snap_steps = [start.step]
    flux_rows: list[FluxEnergyReport] = []
    max_residual = 0.0
    termination = None
    failure_message = None

    k = start.step
    if cfg.pinch_floor > 0.0 and h_m <= cfg.pinch_floor:
        termination = Termination.PINCH_DETECTED
    while termination is None:
        if k >= total_steps:
            termination = Termination.REACHED_T_FINAL
            break
        try:
            result, iters = step_nonlinear(h, cfg)
        except PicardConvergenceError as exc:
            termination = Termination.PICARD_FAILURE
            failure_message = str(exc)
            break
        except LinearSolveError as exc:
            termination = Termination.SOLVER_FAILURE
            failure_message = str(exc)
            break
        k += 1
        t_new = start.time + (k - start.step) * cfg.dt
        h_new = result.profile
        max_residual = max(max_residual, result.solver_residual)

        mid = Profile(
            grid=grid,
            values=0.5 * (h.values + h_new.values),
            pressure=cfg.pressure,
        )
        cum += cfg.dt * dissipation(mid, rule)
        ledger.append(
            EnergyLedger(
                time=t_new,
                energy=energy(h_new, cfg.pressure, rule),
                dissipation=dissipation(h_new, rule),
                cumulative_dissipation=cum,
            )
        )
        x_m, h_m = min_value(h_new)
        mins.append((t_new, x_m, h_m))
        iters_list.append(iters)
        if cfg.flux_diagnostics:
            flux_rows.append(
                flux_energy_report(
                    h_new,
                    _mobility(h_new.values, cfg),
                    h,
                    _mobility(h.values, cfg),
                    cfg.dt,
                    time=t_new,
                )
            )
        h = h_new
        if k % cfg.output_every == 0:
            snapshots.append(h)
            snap_times.append(t_new)
            snap_steps.append(k)
        if cfg.pinch_floor > 0.0 and h_m <= cfg.pinch_floor:
            termination = Termination.PINCH_DETECTED
            break

    if snap_steps[-1] != k:
        snapshots.append(h)
        snap_times.append(start.time + (k - start.step) * cfg.dt)
        snap_steps.append(k)

    return Trajectory(
        config=cfg,
        grid=grid,
        times=np.asarray(snap_times),
        snapshots=snapshots,
        snapshot_steps=np.asarray(snap_steps, dtype=int),
        ledger=ledger,
        min_series=np.asarray(mins),
        picard_iters=np.asarray(iters_list, dtype=int),
        termination=termination,
        failure_message=failure_message,
        flux_reports=flux_rows,
        max_solver_residual=max_residual,
        start=start,
    )


@dataclass(frozen=True)
class EpsilonPair:
    """Sup-norm gap between two consecutive regularization levels."""

    eps_high: float
    eps_low: float
    times: np.ndarray
    sup_diffs: np.ndarray
    max_sup_diff: float


@dataclass(frozen=True)
class ContinuationReport:
    """Trajectories across an epsilon schedule and their Cauchy table."""

    trajectories: list[Trajectory]
    pairs: list[EpsilonPair]
    cauchy: bool


def epsilon_continuation(
    cfg: SolverConfig, h0: Profile, eps_schedule: list[float]
) -> ContinuationReport:
    """Run the same data across a decreasing epsilon schedule and compare.

    Consecutive trajectories are compared in sup norm at matched snapshot
    times; the report flags whether the maximal gaps decrease monotonically
    (discrete Cauchy behavior).  A failed run truncates its trajectory but
    does not abort the continuation.
    """
    schedule = [float(e) for e in eps_schedule]
    if not schedule:
        raise ValueError("epsilon schedule is empty")
    if any(e <= 0.0 for e in schedule):
        raise ValueError("epsilon schedule must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")

    trajectories = [run(replace(cfg, epsilon=e), h0) for e in schedule]

    pairs = []
    for hi, lo in zip(trajectories, trajectories[1:]):
        steps_hi = {int(s): i for i, s in enumerate(hi.snapshot_steps)}
        common = [
            (steps_hi[int(s)], j)
            for j, s in enumerate(lo.snapshot_steps)
            if int(s) in steps_hi
        ]
        times = np.array([hi.times[i] for i, _ in common])
        diffs = np.array(
            [
                float(np.max(np.abs(hi.snapshots[i].values - lo.snapshots[j].values)))
                for i, j in common
            ]
        )
        pairs.append(
            EpsilonPair(
                eps_high=hi.config.epsilon,
                eps_low=lo.config.epsilon,
                times=times,
                sup_diffs=diffs,
                max_sup_diff=float(diffs.max()) if len(diffs) else float("nan"),
            )
        )
    maxes = [p.max_sup_diff for p in pairs]
    cauchy = all(b < a for a, b in zip(maxes, maxes[1:])) if len(maxes) > 1 else True
    return ContinuationReport(trajectories=trajectories, pairs=pairs, cauchy=cauchy)


@dataclass(frozen=True)
class PinchReport:
    """Whether and where the minimum height crossed the pinch floor."""

    pinched: bool
    t_pinch: float | None
    x_pinch: float | None
    tail_times: np.ndarray
    tail_minima: np.ndarray
    log_slope: float | None


def detect_pinch(traj: Trajectory, tail_length: int = 50) -> PinchReport:
    """Scan the min-height series for a pinch-floor crossing.

    Reports the first crossing time and node, the final stretch of the
    series, and the least-squares slope of ln h_m over that stretch (the
    empirical contact rate; no finite-vs-infinite-time claim is made).
    """
    floor = traj.config.pinch_floor
    t = traj.min_series[:, 0]
    x_m = traj.min_series[:, 1]
    h_m = traj.min_series[:, 2]
    crossed = np.nonzero(h_m <= floor)[0] if floor > 0 else np.array([], dtype=int)

    tail = slice(max(0, len(t) - tail_length), None)
    tail_t = t[tail]
    tail_h = h_m[tail]
    positive = tail_h > 0
    log_slope = None
    if positive.sum() >= 2 and np.ptp(tail_t[positive]) > 0:
        coeffs = np.polyfit(tail_t[positive], np.log(tail_h[positive]), 1)
        log_slope = float(coeffs[0])

    if len(crossed) == 0:
        return PinchReport(
            pinched=False,
            t_pinch=None,
            x_pinch=None,
            tail_times=tail_t,
            tail_minima=tail_h,
            log_slope=log_slope,
        )
    first = int(crossed[0])
    return PinchReport(
        pinched=True,
        t_pinch=float(t[first]),
        x_pinch=float(x_m[first]),
        tail_times=tail_t,
        tail_minima=tail_h,
        log_slope=log_slope,
    )


@dataclass(frozen=True)
class MinLogSlopeSeries:
    """Residuals of the minimum-height log-derivative identity.

    At each snapshot midpoint, compares the finite difference of ln h_m with
    -d4 h at the minimum of the averaged profile; the identity holds because
    the first derivative vanishes at an interior minimum.
    """

    times: np.ndarray
    residuals: np.ndarray
    reference: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return self.residuals / np.maximum(self.reference, 1e-300)


def log_min_derivative_check(traj: Trajectory) -> MinLogSlopeSeries:
    """Residual series |d ln h_m / dt + d4 h(x_m)| at snapshot midpoints."""
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots")
    grid = traj.grid
    times, residuals, reference = [], [], []
    for j in range(len(traj.snapshots) - 1):
        t0, t1 = traj.times[j], traj.times[j + 1]
        if t1 <= t0:
            continue
        v0 = traj.snapshots[j].values
        v1 = traj.snapshots[j + 1].values
        m0 = float(np.min(v0))
        m1 = float(np.min(v1))
        if m0 <= 0 or m1 <= 0:
            continue
        rate = (np.log(m1) - np.log(m0)) / (t1 - t0)
        avg = 0.5 * (v0 + v1)
        i_m = int(np.argmin(avg))
        d4 = derivative(avg, grid.dx, 4)[i_m]
        times.append(0.5 * (t0 + t1))
        residuals.append(abs(rate + d4))
        reference.append(abs(d4))
    return MinLogSlopeSeries(
        times=np.asarray(times),
        residuals=np.asarray(residuals),
        reference=np.asarray(reference),
    )


@dataclass(frozen=True)
class DecayFit:
    """Exponential relaxation fit ln d(t) ~ ln(C d0) - c t."""

    rate: float
    prefactor: float
    r_squared: float
    window_times: np.ndarray
    window_distances: np.ndarray


def decay_rate(traj: Trajectory, min_points: int = 20) -> DecayFit:
    """Fit the H^1 distance to the steady profile over the last half-run.

    Only meaningful for subcritical pressure runs that reached their final
    time with a distance still above roundoff; raises otherwise.
    """
    cfg = traj.config
    if cfg.pressure >= 2.0:
        raise ValueError("decay fit applies to pressures below 2 only")
    if traj.termination is not Termination.REACHED_T_FINAL:
        raise ValueError(
            f"decay fit needs a completed run, got {traj.termination.value}"
        )
    grid = traj.grid
    target = steady_profile(cfg.pressure, grid).profile.values
    dist = np.array(
        [h1_norm(s.values - target, grid) for s in traj.snapshots]
    )
    scale = h1_norm(target, grid)
    if dist[-1] <= 1e-12 * scale:
        raise ValueError("distance at roundoff; fit meaningless")
    t = traj.times
    t_mid = t[0] + 0.5 * (t[-1] - t[0])
    window = t >= t_mid
    if window.sum() < min_points:
        raise ValueError(
            f"insufficient snapshots in the fit window: {int(window.sum())} "
            f"< {min_points}"
        )
    tw = t[window]
    dw = dist[window]
    logs = np.log(dw)
    slope, intercept = np.polyfit(tw, logs, 1)
    fitted = slope * tw + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(
        rate=float(-slope),
        prefactor=float(np.exp(intercept) / dist[0]) if dist[0] > 0 else float("inf"),
        r_squared=float(r2),
        window_times=tw,
        window_distances=dw,
    )


@dataclass(frozen=True)
class RelaxReport:
    """Distances of the final profile to the steady profile."""

    h1_distance: float
    h3_local_distance: float
    dissipation_end: float
    delta_loc: float


def relaxation_check(traj: Trajectory, delta_loc: float | None = None) -> RelaxReport:
    """Compare the final profile with the steady profile.

    The H^3 distance is measured on the region where the steady profile
    exceeds delta_loc (default a tenth of its maximum): convergence is only
    locally uniform away from the contact set when P >= 2, while for P < 2
    the region is the whole interval.
    """
    grid = traj.grid
    cfg = traj.config
    target = steady_profile(cfg.pressure, grid).profile.values
    if delta_loc is None:
        delta_loc = 0.1 * float(np.max(target))
    elif delta_loc <= 0.0:
        raise ValueError(f"delta_loc must be positive, got {delta_loc}")
    final = traj.final.values
    diff_vals = final - target

    h1_distance = h1_norm(diff_vals, grid)

    mask = target > delta_loc
    integrand = np.zeros(grid.n)
    fields = [diff_vals] + [derivative(diff_vals, grid.dx, j) for j in range(1, 4)]
    for f in fields:
        integrand += f * f
    total = 0.0
    i = 0
    while i < grid.n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < grid.n and mask[j + 1]:
            j += 1
        if j > i:
            seg = integrand[i : j + 1]
            total += grid.dx * (seg.sum() - 0.5 * (seg[0] + seg[-1]))
        i = j + 1
    return RelaxReport(
        h1_distance=float(h1_distance),
        h3_local_distance=float(np.sqrt(total)),
        dissipation_end=float(dissipation(traj.final, cfg.rule)),
        delta_loc=float(delta_loc),
    )
