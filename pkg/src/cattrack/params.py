"""Physical and protocol parameters, all dimensionless.

Conventions: hbar = m = 1 and the effective oscillator frequency ``nu`` is
the rate unit (nu = 1 by default, one period = 2*pi time units). All rates
(``k``, ``mu``, ``gamma``, ``g``) are multiples of nu. Position and momentum
are the dimensionless quadratures x = (a + a†)/√2, p = -i(a - a†)/√2, whose
ground-state variances are 1/2. In SI terms the regimes below correspond to
an effective frequency nu/2pi = 250 kHz seen by the measurement chain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

GROUND_VARIANCE = 0.5  # Var(x) = Var(p) of the oscillator ground state


@dataclass(frozen=True)
class FeedbackParams:
    """Extremum-triggered parametric controller settings.

    The controller raises the trap stiffness at minima of the estimated
    <x^2> and lowers it at maxima (cooling), or the reverse (heating),
    with hysteresis on the estimated phonon number.
    """

    epsilon: float = 0.2            # fractional modulation of omega^2
    n_hi: float = 25.0              # cooling engages above this <n>_e
    n_lo: float = 16.0              # heating engages below this <n>_e
    band_lo: float = 16.0           # dormant band, reached from an active mode
    band_hi: float = 20.0
    lookback: float = 1.0 / 20.0    # quadratic-fit window, in periods
    smooth: float = 1.0 / 100.0     # moving-average width, in periods
    refractory: float = 0.25        # min spacing between detections, in periods
    curvature_nsigma: float = 4.0   # quadratic coefficient must exceed this
                                    # many sigma of its fit uncertainty

    def validate(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not (self.n_lo <= self.band_lo < self.band_hi <= self.n_hi):
            raise ConfigError(
                "feedback thresholds must satisfy "
                f"n_lo <= band_lo < band_hi <= n_hi, got "
                f"{self.n_lo}, {self.band_lo}, {self.band_hi}, {self.n_hi}"
            )
        for name in ("lookback", "smooth", "refractory"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.smooth >= self.lookback:
            raise ConfigError("smoothing width must be below the look-back window")


@dataclass(frozen=True)
class PhysicalParams:
    """All rates and protocol constants for one run, in units of nu."""

    nu: float = 1.0          # effective frequency; the dimensionless anchor
    k: float = 1.0 / (200.0 * math.pi)   # x^2 measurement strength
    mu: float = 1.0          # sigma_x measurement strength
    gamma: float = 1.0 / 200.0           # damping rate (= nu / Q_eff)
    n_T: float = 0.0         # bath thermal occupancy
    g: float = 12.5          # dispersive qubit-oscillator coupling
    corr_period: float = 0.2  # interval between qubit re-correlations, periods
    dt: float = 2.0e-4       # integrator step, in periods
    dim_osc: int = 128       # Fock truncation
    chi_cut: float = 1.0e-8  # packet overlap below which cat moments collapse
    feedback: FeedbackParams = field(default_factory=FeedbackParams)

    # -- derived quantities ------------------------------------------------

    @property
    def tau_corr(self) -> float:
        """Correlation-step duration; tau_corr * g == pi by construction."""
        return math.pi / self.g

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.nu

    @property
    def dt_time(self) -> float:
        return self.dt * self.period

    @property
    def v_thermal(self) -> float:
        """Quadrature variance of the bath-equilibrated oscillator."""
        return (2.0 * self.n_T + 1.0) * GROUND_VARIANCE

    @property
    def omega_sq(self) -> float:
        return self.nu * self.nu

    @property
    def q_eff(self) -> float:
        return math.inf if self.gamma == 0.0 else self.nu / self.gamma

    def validate(self) -> "PhysicalParams":
        """Raise ConfigError on unusable values; warn on regime violations."""
        if self.dim_osc < 8:
            raise ConfigError(f"dim_osc must be >= 8, got {self.dim_osc}")
        for name in ("nu", "g", "dt"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        for name in ("k", "mu", "gamma", "n_T", "corr_period"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be non-negative")
        if self.corr_period > 0.0 and self.corr_period * self.period <= self.tau_corr:
            raise ConfigError(
                "corr_period leaves no measurement phase between correlation steps"
            )
        self.feedback.validate()
        if self.k > self.nu:
            warnings.warn(
                f"k = {self.k:g} exceeds nu; expect strong measurement heating",
                stacklevel=2,
            )
        if self.n_T > 0.0 and self.k < 5.0 * self.gamma * self.n_T:
            warnings.warn(
                f"k = {self.k:g} is not well above gamma*n_T = "
                f"{self.gamma * self.n_T:g}; tracking quality will degrade",
                stacklevel=2,
            )
        return self

    def with_overrides(self, **kwargs) -> "PhysicalParams":
        """Return a copy with the given fields replaced.

        Feedback fields may be addressed directly (e.g. ``epsilon=0.1``).
        Unknown keys raise ConfigError naming the key.
        """
        phys_names = {f.name for f in fields(PhysicalParams)}
        fb_names = {f.name for f in fields(FeedbackParams)}
        phys_kw, fb_kw = {}, {}
        for key, value in kwargs.items():
            if key in phys_names and key != "feedback":
                phys_kw[key] = type(getattr(self, key))(value)
            elif key in fb_names:
                fb_kw[key] = float(value)
            else:
                raise ConfigError(f"unknown parameter: {key!r}")
        out = replace(self, **phys_kw)
        if fb_kw:
            out = replace(out, feedback=replace(out.feedback, **fb_kw))
        return out


# The two reference regimes. Both share nu = 1, k = nu/(200 pi), g = 12.5 nu.
# "fig1a": Q_eff = 200 resonator at zero temperature.
# "fig1d": Q_eff = 500 resonator at n_T = 12 with the weaker qubit readout;
# its parity flips ~10x faster, so the qubit is re-correlated more often.
PRESETS: dict[str, PhysicalParams] = {
    "fig1a": PhysicalParams(gamma=1.0 / 200.0, n_T=0.0, mu=1.0, corr_period=0.2),
    "fig1d": PhysicalParams(gamma=1.0 / 500.0, n_T=12.0, mu=0.5, corr_period=0.1),
}


def preset(name: str) -> PhysicalParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
