"""The "true" conditioned quantum trajectory.

One trajectory interleaves, per step: Hamiltonian split-step, thermal-jump
unraveling of the damping bath, then diffusive (homodyne-like) updates for
the x^2 and sigma_x measurement channels. The correlation step entangles a
freshly reset probe qubit with the oscillator parity while both continuous
records are masked off.

The diffusive update is the unit-efficiency pure-state unraveling

    d|psi> = [-k (O - <O>)^2 dt + sqrt(2k) (O - <O>) dW] |psi>,  renormalize,

whose record increment is dr = 4 k <O> dt + sqrt(2k) dW. Phonon emission
and absorption are explicit jump events, which is what makes parity flips
attributable in the output logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalError, TruncationError
from .fock import OperatorSet, TruncatedState, build_operators
from .params import PhysicalParams

TOP_POPULATION_LIMIT = 1.0e-6  # truncation-health bound on the top 4 levels


@dataclass(frozen=True)
class JumpEvent:
    t: float
    kind: str  # "emission" (a) or "absorption" (a†)


@dataclass(frozen=True)
class RecorrelationEvent:
    t_start: float
    t_end: float
    outcome: int  # ±1: sigma_x result of the qubit measure-and-reset


@dataclass
class MeasurementRecord:
    """Per-step record increments plus the event log of one trajectory."""

    dt: float
    dr: np.ndarray            # x^2 channel
    dr_x: np.ndarray          # sigma_x channel
    active: np.ndarray        # False exactly inside correlation windows
    jumps: list[JumpEvent] = field(default_factory=list)
    recorrelations: list[RecorrelationEvent] = field(default_factory=list)

    @classmethod
    def empty(cls, n_steps: int, dt: float) -> "MeasurementRecord":
        return cls(
            dt=dt,
            dr=np.zeros(n_steps),
            dr_x=np.zeros(n_steps),
            active=np.zeros(n_steps, dtype=bool),
        )


class TrueObservables(NamedTuple):
    x: float
    x2: float
    p2: float
    n: float
    parity: float
    purity: float
    sx: float


class Engine:
    """Stochastic propagator for one trajectory.

    Holds the operator set and per-step caches; not shared mutably between
    trajectories. The RNG is owned by the caller and passed in, so noise
    can be prescribed in tests.
    """

    def __init__(self, params: PhysicalParams, ops: OperatorSet | None = None):
        self.params = params
        self.ops = ops if ops is not None else build_operators(params.dim_osc)
        n = self.ops.dim_osc
        dt = params.dt_time

        # exact harmonic rotation over one step
        self._rot = np.exp(-1j * params.nu * self.ops.n_diag * dt)[:, None]
        # no-jump damping drift over one step (diagonal in the Fock basis)
        drift = 0.5 * (
            (params.n_T + 1.0) * self.ops.n_diag + params.n_T * self.ops.aad_diag
        )
        self._nojump_base = drift  # multiplied by gamma*dt when used
        self._nojump = np.exp(-params.gamma * dt * drift)[:, None]

        # x^2 eigenbasis per parity block, for the potential kick; blocking
        # by parity keeps the kick an exact parity conserver
        x2 = self.ops.x2.real
        self._eig = {}
        for par, sl in (("even", slice(0, n, 2)), ("odd", slice(1, n, 2))):
            w, u = np.linalg.eigh(x2[sl, sl])
            self._eig[par] = (w, u)
        self._kick_cache: dict[tuple[float, float], tuple[np.ndarray, np.ndarray]] = {}

        self.win_steps = max(1, round(params.tau_corr / dt)) if params.g > 0 else 0
        # phase increment of the parity-controlled gate: the |1> qubit branch
        # accumulates exactly pi per phonon across the window
        self._win_phase = np.exp(-1j * math.pi * self.ops.n_diag / max(self.win_steps, 1))

        self._scratch1 = np.empty((n, 2), dtype=complex)
        self._scratch2 = np.empty((n, 2), dtype=complex)

    # -- elementary steps ----------------------------------------------------

    def _kick_matrices(self, multiplier: float, dt: float):
        lam = 0.5 * self.params.nu * (multiplier - 1.0)
        key = (multiplier, dt)
        if key not in self._kick_cache:
            mats = []
            for par in ("even", "odd"):
                w, u = self._eig[par]
                mats.append((u * np.exp(-1j * lam * w * dt)) @ u.conj().T)
            self._kick_cache[key] = tuple(mats)
        return self._kick_cache[key]

    def step_hamiltonian(
        self, state: TruncatedState, multiplier: float = 1.0, dt: float | None = None
    ) -> TruncatedState:
        """Split-step evolution under H = nu*n + lam*x^2, lam = nu*(mult-1)/2.

        Exact diagonal rotation composed with an x^2 kick; multiplier 1 is a
        pure rotation and conserves <n> exactly.
        """
        psi = state.psi
        if dt is None or dt == self.params.dt_time:
            psi *= self._rot
            dt = self.params.dt_time
        else:
            psi *= np.exp(-1j * self.params.nu * self.ops.n_diag * dt)[:, None]
        if multiplier != 1.0:
            kick_e, kick_o = self._kick_matrices(multiplier, dt)
            psi[0::2] = kick_e @ psi[0::2]
            psi[1::2] = kick_o @ psi[1::2]
        return state

    def step_diffusive(
        self,
        state: TruncatedState,
        channel: str,
        strength: float,
        dt: float,
        dW: float,
    ) -> float:
        """Diffusive measurement update for one channel; returns dr.

        ``channel`` selects the measured operator: "x2" or "sx". ``dW`` is a
        Wiener increment drawn N(0, dt) by the caller.
        """
        if strength == 0.0:
            return 0.0
        psi = state.psi
        if channel == "x2":
            apply_op = self.ops.apply_x2
        elif channel == "sx":
            apply_op = self.ops.apply_sx
        else:
            raise ValueError(f"unknown channel {channel!r}")

        w = apply_op(psi, self._scratch1)
        m = float(np.vdot(psi, w).real)
        w -= m * psi                      # (O - <O>) psi
        v = apply_op(w, self._scratch2)
        v -= m * w                        # (O - <O>)^2 psi
        psi += math.sqrt(2.0 * strength) * dW * w - strength * dt * v
        nrm = np.linalg.norm(psi)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise NumericalError(
                f"non-finite amplitudes after {channel} diffusive step"
            )
        psi /= nrm
        return 4.0 * strength * m * dt + math.sqrt(2.0 * strength) * dW

    def step_thermal(
        self,
        state: TruncatedState,
        dt: float,
        u_em: float,
        u_abs: float,
        rng: np.random.Generator,
        t: float = 0.0,
        _depth: int = 0,
    ) -> JumpEvent | None:
        """Jump unraveling of the thermal bath over one step.

        Emission (a) fires with probability gamma*(n_T+1)*<n>*dt, absorption
        (a†) with gamma*n_T*<a a†>*dt; otherwise the diagonal no-jump drift
        acts. If both channels fire in the same step the step is halved and
        retried, which keeps the single-jump bookkeeping valid.
        """
        pars = self.params
        if pars.gamma == 0.0:
            return None
        psi = state.psi
        weights = self.ops.fock_weights(psi)
        p_em = pars.gamma * (pars.n_T + 1.0) * float(self.ops.n_diag @ weights) * dt
        p_abs = pars.gamma * pars.n_T * float(self.ops.aad_diag @ weights) * dt

        hit_em = u_em < p_em
        hit_abs = u_abs < p_abs
        if hit_em and hit_abs:
            if _depth > 24:
                raise NumericalError("thermal jump collision did not resolve")
            ev = None
            for _ in range(2):
                sub = self.step_thermal(
                    state, 0.5 * dt, rng.random(), rng.random(), rng, t, _depth + 1
                )
                ev = sub if sub is not None else ev
            return ev
        if hit_em:
            psi[:-1] = self.ops.sqrt_n1[:, None] * psi[1:]
            psi[-1] = 0.0
            state.normalize()
            return JumpEvent(t=t, kind="emission")
        if hit_abs:
            psi[1:] = self.ops.sqrt_n1[:, None] * psi[:-1]
            psi[0] = 0.0
            state.normalize()
            return JumpEvent(t=t, kind="absorption")
        if dt == pars.dt_time:
            psi *= self._nojump
        else:
            psi *= np.exp(-pars.gamma * dt * self._nojump_base)[:, None]
        state.normalize()
        return None

    # -- correlation step ------------------------------------------------------

    def reset_qubit(
        self, state: TruncatedState, rng: np.random.Generator
    ) -> int:
        """Measure the qubit along sigma_x and re-prepare |+>.

        Returns the measurement outcome ±1. Models an ideal, instantaneous
        measure-and-reset; the oscillator keeps the conditioned branch.
        """
        psi = state.psi
        plus = (psi[:, 0] + psi[:, 1]) / math.sqrt(2.0)
        minus = (psi[:, 0] - psi[:, 1]) / math.sqrt(2.0)
        w_plus = float(np.sum(np.abs(plus) ** 2))
        outcome = 1 if rng.random() < w_plus else -1
        osc = plus if outcome == 1 else minus
        nrm = np.linalg.norm(osc)
        if nrm == 0.0:
            osc, outcome = plus + minus, 1
            nrm = np.linalg.norm(osc)
        osc = osc / nrm
        inv_sqrt2 = 1.0 / math.sqrt(2.0)
        psi[:, 0] = osc * inv_sqrt2
        psi[:, 1] = osc * inv_sqrt2
        return outcome

    def window_unitary_substep(self, state: TruncatedState) -> TruncatedState:
        """One substep of the parity-controlled phase gate.

        Across the full window the |1> qubit branch acquires phase pi per
        phonon, flipping a |+> qubit to |-> iff the phonon number is odd.
        """
        state.psi[:, 1] *= self._win_phase
        return state

    def correlation_step(
        self,
        state: TruncatedState,
        rng: np.random.Generator,
        t: float = 0.0,
    ) -> tuple[RecorrelationEvent, list[JumpEvent]]:
        """Full correlation window: qubit reset, parity gate, interleaved damping.

        Both continuous measurements are off for the duration; thermal
        damping still acts. Returns the recorrelation event and any jumps
        that occurred inside the window.
        """
        pars = self.params
        dt = pars.dt_time
        outcome = self.reset_qubit(state, rng)
        jumps: list[JumpEvent] = []
        for i in range(self.win_steps):
            self.window_unitary_substep(state)
            ev = self.step_thermal(state, dt, rng.random(), rng.random(), rng, t + i * dt)
            if ev is not None:
                jumps.append(ev)
        t_end = t + self.win_steps * dt
        return RecorrelationEvent(t_start=t, t_end=t_end, outcome=outcome), jumps

    # -- composite stepping -----------------------------------------------------

    def measurement_step(
        self,
        state: TruncatedState,
        multiplier: float,
        dW_x2: float,
        dW_sx: float,
        u_em: float,
        u_abs: float,
        rng: np.random.Generator,
        t: float,
        measure_x2: bool = True,
        measure_qubit: bool = True,
    ) -> tuple[float, float, JumpEvent | None]:
        """One full step of the measurement phase; returns (dr, dr_x, jump)."""
        pars = self.params
        dt = pars.dt_time
        self.step_hamiltonian(state, multiplier)
        ev = self.step_thermal(state, dt, u_em, u_abs, rng, t)
        dr = (
            self.step_diffusive(state, "x2", pars.k, dt, dW_x2)
            if measure_x2
            else 0.0
        )
        dr_x = (
            self.step_diffusive(state, "sx", pars.mu, dt, dW_sx)
            if measure_qubit
            else 0.0
        )
        return dr, dr_x, ev

    def observables(self, state: TruncatedState) -> TrueObservables:
        psi = state.psi
        ops = self.ops
        return TrueObservables(
            x=ops.exp_x(psi),
            x2=ops.exp_x2(psi),
            p2=ops.exp_p2(psi),
            n=ops.exp_n(psi),
            parity=ops.exp_parity(psi),
            purity=ops.oscillator_purity(psi),
            sx=ops.exp_sx(psi),
        )

    def check_truncation(self, state: TruncatedState, t: float) -> None:
        tail = state.top_population()
        if tail > TOP_POPULATION_LIMIT:
            raise TruncationError(
                f"top-4 Fock population {tail:.2e} at t = {t:.3f} exceeds "
                f"{TOP_POPULATION_LIMIT:g}; increase dim_osc"
            )

    def run_segment(
        self,
        state: TruncatedState,
        n_steps: int,
        rng: np.random.Generator,
        multiplier: float = 1.0,
        noise: tuple[np.ndarray, np.ndarray] | None = None,
        sample_every: int = 0,
        measure_x2: bool = True,
        measure_qubit: bool = True,
        t0: float = 0.0,
    ) -> tuple[MeasurementRecord, list[tuple[float, TrueObservables]]]:
        """Open-loop measurement-phase run at a fixed multiplier.

        ``noise`` may prescribe the Wiener increments as two arrays of
        length ``n_steps`` (x^2 then sigma_x channel); otherwise they are
        drawn from ``rng``. Used by tests and convergence studies; the
        closed loop drives :meth:`measurement_step` directly.
        """
        pars = self.params
        dt = pars.dt_time
        if noise is None:
            dws = rng.normal(0.0, math.sqrt(dt), size=(n_steps, 2))
        else:
            dws = np.column_stack(noise)
        us = rng.random(size=(n_steps, 2)) if pars.gamma > 0 else np.zeros((n_steps, 2))
        record = MeasurementRecord.empty(n_steps, dt)
        record.active[:] = True
        samples = []
        if sample_every:
            samples.append((t0, self.observables(state)))
        for i in range(n_steps):
            t = t0 + i * dt
            dr, dr_x, ev = self.measurement_step(
                state,
                multiplier,
                dws[i, 0],
                dws[i, 1],
                us[i, 0],
                us[i, 1],
                rng,
                t,
                measure_x2,
                measure_qubit,
            )
            record.dr[i] = dr
            record.dr_x[i] = dr_x
            if ev is not None:
                record.jumps.append(ev)
            if sample_every and (i + 1) % sample_every == 0:
                self.check_truncation(state, t + dt)
                samples.append((t + dt, self.observables(state)))
        return record, samples
