"""Closed-loop protocol runs and ensembles.

A run alternates the qubit correlation window (records masked, damping
still active) with the measurement phase (full engine step + filter +
controller per step). The observer side is driven exclusively by record
increments and configuration: the true state never crosses that boundary,
which is what makes the estimator replayable from a stored record.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimator as flt
from .controller import MODE_NAMES, Controller, ControllerConfig
from .engine import Engine, JumpEvent, MeasurementRecord, RecorrelationEvent
from .errors import NumericalError
from .fock import QUBIT_PLUS, cat_state, with_qubit
from .params import PhysicalParams
from .records import RunConfig


@dataclass
class TrajectoryRecord:
    """Synchronized decimated series of truth and estimate, plus events."""

    seed: int
    config: dict
    t: np.ndarray
    x_true: np.ndarray        # |packet displacement|, sqrt(max(<x^2> - 1/2, 0))
    x2_true: np.ndarray
    n_true: np.ndarray
    parity_true: np.ndarray
    purity_true: np.ndarray   # oscillator reduced-state purity
    x_est: np.ndarray         # |xbar|
    x2_est: np.ndarray
    n_est: np.ndarray
    parity_est: np.ndarray    # 2p - 1
    mode: np.ndarray          # int8 controller mode codes
    mult: np.ndarray
    masked: np.ndarray        # True inside correlation windows
    jumps: list[JumpEvent] = field(default_factory=list)
    recorrelations: list[RecorrelationEvent] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    physical: dict = field(default_factory=dict)  # resolved parameter values

    SAMPLE_FIELDS = (
        "t", "x_true", "x_est", "x2_true", "x2_est", "parity_true",
        "parity_est", "n_true", "n_est", "purity_true", "mode", "mult",
        "masked",
    )

    def header_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "header",
            "units": "dimensionless: hbar=m=1, nu=1; time in 1/nu",
            "seed": self.seed,
            "config": self.config,
            "physical": self.physical,
            "events": {
                "jumps": [{"t": ev.t, "type": ev.kind} for ev in self.jumps],
                "recorrelations": [
                    {"t_start": ev.t_start, "t_end": ev.t_end, "outcome": ev.outcome}
                    for ev in self.recorrelations
                ],
            },
            "diagnostics": self.diagnostics,
        }

    def sample_dicts(self):
        mode = self.mode
        for i in range(len(self.t)):
            yield {
                "kind": "sample",
                "t": float(self.t[i]),
                "x_true": float(self.x_true[i]),
                "x_est": float(self.x_est[i]),
                "x2_true": float(self.x2_true[i]),
                "x2_est": float(self.x2_est[i]),
                "parity_true": float(self.parity_true[i]),
                "parity_est": float(self.parity_est[i]),
                "n_true": float(self.n_true[i]),
                "n_est": float(self.n_est[i]),
                "purity_true": float(self.purity_true[i]),
                "mode": MODE_NAMES[int(mode[i])],
                "mult": float(self.mult[i]),
                "masked": bool(self.masked[i]),
            }


class ObserverLoop:
    """Filter + controller stack; consumes only record increments.

    Shared verbatim by the live closed loop and by offline replay, so the
    estimate is a pure function of (config, record).
    """

    def __init__(self, params: PhysicalParams, config: RunConfig):
        self.params = params
        self.cfg = config
        self.est = flt.EstimatorState(
            xbar=config.est_xbar, pbar=0.0, vx=0.5, vp=0.5, c=0.0,
            p=config.est_p, p_plus=config.est_p, beta=0.0,
        )
        steps_per_period = round(1.0 / params.dt)
        self.controller = Controller(
            ControllerConfig.from_feedback(params.feedback, steps_per_period)
        )
        self.multiplier = 1.0
        self._v_reset = params.v_thermal
        self._k = params.k if config.measure_x2 else 0.0
        self._mu = params.mu

    def window_step(self, dt: float) -> None:
        flt.window_damping_step(self.est, self.params.gamma, self.params.n_T, dt)

    def window_end(self) -> None:
        flt.window_end_reset(self.est)

    def step(self, t: float, dr: float, dr_x: float) -> None:
        pars = self.params
        est = self.est
        dt = pars.dt_time
        omega_sq = pars.nu * pars.nu * self.multiplier
        dv = (
            flt.innovation_x2(dr, est, pars.k, dt, pars.chi_cut)
            if self._k > 0.0
            else 0.0
        )
        flt.update_filter(est, dv, self._k, dt, omega_sq, self._v_reset, pars.chi_cut)
        if self.cfg.measure_qubit:
            flt.update_qubit_channel(est, dr_x, self._mu, dt)
        flt.update_damping(est, pars.gamma, pars.n_T, dt)
        flt.robustness_pass(est, self._v_reset)
        if self.cfg.feedback_on:
            ctrl = self.controller
            ctrl.ingest(t, est.x2_est(pars.chi_cut), max(est.n_est, 0.0))
            event = ctrl.detect_extremum()
            self.multiplier = ctrl.command(event)


def run_trajectory(
    config: RunConfig, seed: int | None = None, keep_record: bool = False
):
    """Execute one closed-loop trajectory.

    Returns the TrajectoryRecord, or ``(record, measurement_record)`` when
    ``keep_record`` is set. Numerical failures carry the seed and time in
    their message.
    """
    params = config.physical()
    if seed is None:
        seed = config.seed
    rng = np.random.Generator(np.random.Philox(key=seed))
    engine = Engine(params)
    dt = params.dt_time

    # truth: an even/odd superposition sampled per trajectory, probe in |+>
    if config.true_parity == "random":
        parity0 = "even" if rng.random() < 0.5 else "odd"
    else:
        parity0 = config.true_parity
    alpha0 = config.true_xbar / math.sqrt(2.0)
    state = with_qubit(cat_state(alpha0, parity0, params.dim_osc), QUBIT_PLUS)

    observer = ObserverLoop(params, config)

    steps_per_period = round(1.0 / params.dt)
    total = round(config.duration * steps_per_period)
    decim = max(1, steps_per_period // config.decimation)
    windows_on = config.measure_qubit and params.corr_period > 0.0
    interval = round(params.corr_period * steps_per_period) if windows_on else total + 1
    win_steps = engine.win_steps if windows_on else 0

    n_samples = total // decim + 1
    cols = {
        name: np.zeros(n_samples)
        for name in (
            "t", "x_true", "x2_true", "n_true", "parity_true", "purity_true",
            "x_est", "x2_est", "n_est", "parity_est", "mult",
        )
    }
    mode_arr = np.zeros(n_samples, dtype=np.int8)
    masked_arr = np.zeros(n_samples, dtype=bool)
    meas = MeasurementRecord.empty(total, dt)
    max_norm_dev = 0.0

    def sample(idx_sample: int, t: float, masked: bool) -> None:
        engine.check_truncation(state, t)
        obs = engine.observables(state)
        est = observer.est
        cols["t"][idx_sample] = t
        cols["x_true"][idx_sample] = math.sqrt(max(obs.x2 - 0.5, 0.0))
        cols["x2_true"][idx_sample] = obs.x2
        cols["n_true"][idx_sample] = obs.n
        cols["parity_true"][idx_sample] = obs.parity
        cols["purity_true"][idx_sample] = obs.purity
        cols["x_est"][idx_sample] = abs(est.xbar)
        cols["x2_est"][idx_sample] = est.x2_est(params.chi_cut)
        cols["n_est"][idx_sample] = max(est.n_est, 0.0)
        cols["parity_est"][idx_sample] = est.parity
        cols["mult"][idx_sample] = observer.multiplier
        mode_arr[idx_sample] = observer.controller.mode
        masked_arr[idx_sample] = masked

    i = 0
    try:
        sample(0, 0.0, False)
        while i < total:
            in_window = windows_on and (i % interval == 0) and win_steps > 0
            if in_window:
                n = min(win_steps, total - i)
                ev = RecorrelationEvent(
                    t_start=i * dt,
                    t_end=(i + n) * dt,
                    outcome=engine.reset_qubit(state, rng),
                )
                meas.recorrelations.append(ev)
                us = rng.random(size=(n, 2))
                for j in range(n):
                    t = (i + j) * dt
                    engine.window_unitary_substep(state)
                    jump = engine.step_thermal(state, dt, us[j, 0], us[j, 1], rng, t)
                    if jump is not None:
                        meas.jumps.append(jump)
                    observer.window_step(dt)
                    max_norm_dev = max(max_norm_dev, abs(state.norm() - 1.0))
                    if (i + j + 1) % decim == 0:
                        sample((i + j + 1) // decim, t + dt, True)
                if n == win_steps:
                    observer.window_end()
                i += n
                continue

            n = min(interval - (i % interval), total - i) if windows_on else total - i
            dws = rng.normal(0.0, math.sqrt(dt), size=(n, 2))
            us = (
                rng.random(size=(n, 2))
                if params.gamma > 0.0
                else np.zeros((n, 2))
            )
            for j in range(n):
                t = (i + j) * dt
                dr, dr_x, jump = engine.measurement_step(
                    state,
                    observer.multiplier,
                    dws[j, 0],
                    dws[j, 1],
                    us[j, 0],
                    us[j, 1],
                    rng,
                    t,
                    config.measure_x2,
                    config.measure_qubit,
                )
                meas.dr[i + j] = dr
                meas.dr_x[i + j] = dr_x
                meas.active[i + j] = True
                if jump is not None:
                    meas.jumps.append(jump)
                observer.step(t, dr, dr_x)
                max_norm_dev = max(max_norm_dev, abs(state.norm() - 1.0))
                if (i + j + 1) % decim == 0:
                    sample((i + j + 1) // decim, t + dt, False)
            i += n
    except NumericalError as exc:
        raise NumericalError(f"seed {seed}, t = {i * dt:.4f}: {exc}") from exc

    record = TrajectoryRecord(
        seed=seed,
        config=config.to_dict(),
        physical={
            "nu": params.nu, "k": params.k, "mu": params.mu,
            "gamma": params.gamma, "n_T": params.n_T, "g": params.g,
            "corr_period": params.corr_period, "dt": params.dt,
            "dim_osc": params.dim_osc,
        },
        t=cols["t"],
        x_true=cols["x_true"],
        x2_true=cols["x2_true"],
        n_true=cols["n_true"],
        parity_true=cols["parity_true"],
        purity_true=cols["purity_true"],
        x_est=cols["x_est"],
        x2_est=cols["x2_est"],
        n_est=cols["n_est"],
        parity_est=cols["parity_est"],
        mode=mode_arr,
        mult=cols["mult"],
        masked=masked_arr,
        jumps=list(meas.jumps),
        recorrelations=list(meas.recorrelations),
        diagnostics={
            "max_norm_dev": max_norm_dev,
            "initial_parity": parity0,
            "n_var_resets": observer.est.n_resets,
            "n_nonfinite": observer.est.n_nonfinite,
        },
    )
    if keep_record:
        return record, meas
    return record


def replay_estimator(config: RunConfig, meas: MeasurementRecord) -> dict:
    """Re-run the observer stack from a stored measurement record.

    Returns the decimated estimator series; bit-identical to the live run
    because the observer code path is shared and sees nothing but the
    record. Used to verify the truth/observer information firewall.
    """
    params = config.physical()
    observer = ObserverLoop(params, config)
    steps_per_period = round(1.0 / params.dt)
    total = len(meas.dr)
    decim = max(1, steps_per_period // config.decimation)
    dt = params.dt_time
    windows_on = config.measure_qubit and params.corr_period > 0.0
    interval = round(params.corr_period * steps_per_period) if windows_on else total + 1
    win_steps = (
        max(1, round(params.tau_corr / dt)) if windows_on and params.g > 0 else 0
    )

    n_samples = total // decim + 1
    out = {
        name: np.zeros(n_samples)
        for name in ("x_est", "x2_est", "n_est", "parity_est", "mult")
    }
    mode_arr = np.zeros(n_samples, dtype=np.int8)

    def sample(idx: int) -> None:
        est = observer.est
        out["x_est"][idx] = abs(est.xbar)
        out["x2_est"][idx] = est.x2_est(params.chi_cut)
        out["n_est"][idx] = max(est.n_est, 0.0)
        out["parity_est"][idx] = est.parity
        out["mult"][idx] = observer.multiplier
        mode_arr[idx] = observer.controller.mode

    sample(0)
    i = 0
    while i < total:
        in_window = windows_on and (i % interval == 0) and win_steps > 0
        if in_window:
            n = min(win_steps, total - i)
            if meas.active[i : i + n].any():
                raise ValueError("record is active inside a scheduled window")
            for j in range(n):
                observer.window_step(dt)
                if (i + j + 1) % decim == 0:
                    sample((i + j + 1) // decim)
            if n == win_steps:
                observer.window_end()
            i += n
            continue
        n = min(interval - (i % interval), total - i) if windows_on else total - i
        for j in range(n):
            observer.step((i + j) * dt, meas.dr[i + j], meas.dr_x[i + j])
            if (i + j + 1) % decim == 0:
                sample((i + j + 1) // decim)
        i += n
    out["mode"] = mode_arr
    return out


# -- trajectory metrics ---------------------------------------------------------


def tracking_rms(
    rec: TrajectoryRecord, t_start: float = 0.0, include_masked: bool = False
) -> float:
    """RMS of the <x^2> estimate error, relative to the true mean.

    Masked samples are excluded by default: the records are off inside
    correlation windows, where the parity gate transiently rotates one
    qubit branch of the truth and no observer input exists.
    """
    sel = rec.t >= t_start
    if not include_masked:
        sel &= ~rec.masked
    err = rec.x2_est[sel] - rec.x2_true[sel]
    return float(np.sqrt(np.mean(err**2)) / np.mean(rec.x2_true[sel]))


def parity_agreement(rec: TrajectoryRecord, t_start: float = 0.0) -> float:
    """Fraction of samples where sign(2p - 1) matches sign(<parity>)."""
    sel = rec.t >= t_start
    return float(np.mean(rec.parity_est[sel] * rec.parity_true[sel] > 0.0))


def band_occupancy(
    rec: TrajectoryRecord, lo: float, hi: float, t_start: float = 0.0
) -> float:
    sel = rec.t >= t_start
    n = rec.n_est[sel]
    return float(np.mean((n >= lo) & (n <= hi)))


def mean_purity(rec: TrajectoryRecord, t_start: float = 0.0) -> float:
    sel = rec.t >= t_start
    return float(np.mean(rec.purity_true[sel]))


def lock_time(
    rec: TrajectoryRecord, tol: float = 0.1, window_periods: float = 1.0
) -> float:
    """Earliest time from which a one-period window tracks within ``tol``.

    Returns inf when the trajectory never locks.
    """
    t = rec.t
    period = 2.0 * math.pi
    win = window_periods * period
    err = rec.x2_est - rec.x2_true
    for start in range(len(t)):
        sel = (t >= t[start]) & (t < t[start] + win) & ~rec.masked
        if t[start] + win > t[-1] + 1e-9:
            break
        rel = np.sqrt(np.mean(err[sel] ** 2)) / np.mean(rec.x2_true[sel])
        if rel < tol:
            return float(t[start])
    return math.inf


@dataclass
class EnsembleResult:
    """Per-seed metrics plus aggregate statistics over an ensemble."""

    seeds: list[int]
    metrics: dict            # name -> np.ndarray over seeds
    aggregate: dict          # name -> {mean, median, q10, q90}
    failures: dict           # seed -> error message
    records: list = None     # TrajectoryRecords, when kept

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "metrics": {k: list(map(float, v)) for k, v in self.metrics.items()},
            "aggregate": self.aggregate,
            "failures": {str(k): v for k, v in self.failures.items()},
        }


def _run_one(args) -> TrajectoryRecord:
    config, seed = args
    return run_trajectory(config, seed=seed)


def ensemble_run(
    config: RunConfig,
    n_traj: int | None = None,
    parallelism: int = 1,
    keep_records: bool = False,
    settle_periods: float = 5.0,
) -> EnsembleResult:
    """Run ``n_traj`` independent trajectories and summarize them.

    Deterministic given the seed list; per-seed failures are reported and
    the rest of the ensemble continues.
    """
    if n_traj is None:
        n_traj = config.n_traj
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    seeds = config.seed_list(n_traj)
    jobs = [(config, s) for s in seeds]
    records: dict[int, TrajectoryRecord] = {}
    failures: dict[int, str] = {}
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for seed, result in zip(seeds, pool.map(_run_one, jobs)):
                records[seed] = result
    else:
        for job in jobs:
            try:
                records[job[1]] = _run_one(job)
            except NumericalError as exc:
                failures[job[1]] = str(exc)

    ok = [s for s in seeds if s in records]
    t_settle = settle_periods * 2.0 * math.pi
    fb = config.physical().feedback
    metrics = {
        "tracking_rms": np.array([tracking_rms(records[s]) for s in ok]),
        "parity_agreement": np.array([parity_agreement(records[s]) for s in ok]),
        "mean_purity": np.array([mean_purity(records[s]) for s in ok]),
        "band_occupancy": np.array(
            [
                band_occupancy(records[s], fb.n_lo - 6.0, fb.n_hi + 5.0, t_settle)
                for s in ok
            ]
        ),
    }
    aggregate = {
        name: {
            "mean": float(np.mean(vals)) if len(vals) else math.nan,
            "median": float(np.median(vals)) if len(vals) else math.nan,
            "q10": float(np.quantile(vals, 0.1)) if len(vals) else math.nan,
            "q90": float(np.quantile(vals, 0.9)) if len(vals) else math.nan,
        }
        for name, vals in metrics.items()
    }
    return EnsembleResult(
        seeds=ok,
        metrics=metrics,
        aggregate=aggregate,
        failures=failures,
        records=[records[s] for s in ok] if keep_records else None,
    )
