"""Extremum-triggered parametric feedback.

The controller watches the estimated <x^2>, smooths it with a short moving
average, and least-squares fits a quadratic over a look-back window (one
twentieth of a period by default). A resolved vertex in the trailing half of
the window is an extremum: while cooling, the potential is stiffened at
minima and relaxed at maxima, which pumps energy out at twice the
oscillation frequency; heating runs the reverse pattern. Mode selection is
hysteretic on the estimated phonon number.

Samples arrive only while the measurement channels are live, and the
coherent dynamics is frozen during correlation windows, so the sample index
is the natural abscissa: the oscillation is continuous in it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import FeedbackParams

MODE_DORMANT = 0
MODE_COOLING = 1
MODE_HEATING = 2
MODE_NAMES = {MODE_DORMANT: "dormant", MODE_COOLING: "cooling", MODE_HEATING: "heating"}


@dataclass(frozen=True)
class ControllerConfig:
    lookback_steps: int     # quadratic-fit window, in samples
    smooth_steps: int       # moving-average width, in samples
    refractory_steps: int   # minimum samples between detections
    epsilon: float
    n_hi: float
    n_lo: float
    band_lo: float
    band_hi: float
    curvature_nsigma: float

    @classmethod
    def from_feedback(cls, fb: FeedbackParams, steps_per_period: int) -> "ControllerConfig":
        return cls(
            lookback_steps=max(8, round(fb.lookback * steps_per_period)),
            smooth_steps=max(1, round(fb.smooth * steps_per_period)),
            refractory_steps=max(1, round(fb.refractory * steps_per_period)),
            epsilon=fb.epsilon,
            n_hi=fb.n_hi,
            n_lo=fb.n_lo,
            band_lo=fb.band_lo,
            band_hi=fb.band_hi,
            curvature_nsigma=fb.curvature_nsigma,
        )


class Controller:
    """Causal sample-by-sample controller; output depends only on the past."""

    def __init__(self, config: ControllerConfig):
        self.config = config
        self.mode = MODE_DORMANT
        self.multiplier = 1.0
        w = config.lookback_steps
        # centered abscissa u in [-(w-1), 0]; precompute the LSQ projectors
        u = np.arange(w, dtype=float) - (w - 1)
        basis = np.column_stack([u * u, u, np.ones(w)])
        gram_inv = np.linalg.inv(basis.T @ basis)
        self._proj = gram_inv @ basis.T     # rows: coefficients of a, b, c
        self._gaa = gram_inv[0, 0]          # Var(a) = sigma^2 * gaa
        self._u = u
        self._basis = basis

        self._smooth_buf = np.zeros(config.smooth_steps)
        self._smooth_sum = 0.0
        self._window = np.zeros(w)
        self._count = 0
        self._refractory = 0
        self._t_last = -np.inf
        self.last_extremum_index: float | None = None  # lag-compensated, samples ago

    # -- threshold / hysteresis logic -----------------------------------------

    def _update_mode(self, n_est: float) -> None:
        cfg = self.config
        if n_est > cfg.n_hi:
            self.mode = MODE_COOLING
        elif n_est < cfg.n_lo:
            self.mode = MODE_HEATING
        elif cfg.band_lo < n_est < cfg.band_hi and self.mode != MODE_DORMANT:
            self.mode = MODE_DORMANT
            self.multiplier = 1.0

    def ingest(self, t: float, x2_est: float, n_est: float) -> None:
        """Push one sample; time must be monotone."""
        if t <= self._t_last:
            raise ValueError(f"samples must arrive in time order: {t} after {self._t_last}")
        self._t_last = t
        cfg = self.config
        i = self._count % cfg.smooth_steps
        self._smooth_sum += x2_est - self._smooth_buf[i]
        self._smooth_buf[i] = x2_est
        self._count += 1
        width = min(self._count, cfg.smooth_steps)
        smoothed = self._smooth_sum / width
        self._window[:-1] = self._window[1:]
        self._window[-1] = smoothed
        if self._refractory > 0:
            self._refractory -= 1
        self._update_mode(n_est)

    # -- extremum detection -----------------------------------------------------

    def detect_extremum(self) -> str | None:
        """Quadratic-fit vertex test over the look-back window.

        Returns "minimum", "maximum", or None. Requires a full window, a
        quadratic coefficient resolved above its fit uncertainty, and the
        vertex inside the trailing half of the window. At most one detection
        per refractory interval.
        """
        cfg = self.config
        w = cfg.lookback_steps
        if self._count < w + cfg.smooth_steps or self._refractory > 0:
            return None
        y = self._window
        coeffs = self._proj @ y
        a, b = coeffs[0], coeffs[1]
        resid = y - self._basis @ coeffs
        sigma_sq = float(resid @ resid) / max(w - 3, 1)
        # second term: curvature below fp dust at the data scale is flat
        floor = cfg.curvature_nsigma * np.sqrt(max(sigma_sq * self._gaa, 0.0))
        floor = max(floor, 1e-12 * (1.0 + float(np.max(np.abs(y)))))
        if abs(a) <= floor:
            return None
        vertex = -b / (2.0 * a)
        if not (-(w - 1) / 2.0 <= vertex <= 0.0):
            return None
        self._refractory = cfg.refractory_steps
        # report extremum position compensated for the moving-average lag
        self.last_extremum_index = vertex - (cfg.smooth_steps - 1) / 2.0
        return "minimum" if a > 0 else "maximum"

    def command(self, event: str | None) -> float:
        """Update and return the potential multiplier.

        Cooling: stiffen (1 + eps) at minima, relax (1 - eps) at maxima;
        heating is the mirror image; dormant pins the multiplier at 1. The
        multiplier holds between detections.
        """
        if self.mode == MODE_DORMANT:
            self.multiplier = 1.0
        elif event is not None:
            eps = self.config.epsilon
            if self.mode == MODE_COOLING:
                self.multiplier = 1.0 + eps if event == "minimum" else 1.0 - eps
            else:
                self.multiplier = 1.0 - eps if event == "minimum" else 1.0 + eps
        return self.multiplier
