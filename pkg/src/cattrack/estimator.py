"""The observer's real-time filter.

Six parameters describe the estimated state: packet centroids ±(xbar, pbar),
quadrature variances vx, vp, symmetrized covariance c, and the probability p
that the superposition is the even (symmetric) one. Qubit bookkeeping adds
p_plus (probability the probe qubit is in |+>) and beta (probability the
qubit has decorrelated from the oscillator parity since the last correlation
step). The filter sees only measurement-record increments, never the true
state.

All updates are plain Euler-Maruyama; stability comes from the 4-sigma
innovation truncation plus the variance-reset robustness pass, and
step-halving tests bound the discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

P_CLAMP = 1.0e-6           # keeps the logistic parity updates alive
UNCERTAINTY_SLACK = 0.9    # vx*vp must stay above SLACK*(c^2 + 1/4)
V_HI = 12.0 * 0.5          # variance ceiling: 12x the ground-state variance


def xi_of(k: float) -> float:
    """Innovation scale of the x^2 channel."""
    return 2.0 * math.sqrt(8.0 * k)


@dataclass
class EstimatorState:
    xbar: float = 6.0
    pbar: float = 0.0
    vx: float = 0.5
    vp: float = 0.5
    c: float = 0.0
    p: float = 0.5        # probability of the even superposition
    p_plus: float = 0.5   # probability the qubit is in |+>
    beta: float = 0.0     # qubit/parity decorrelation probability
    n_resets: int = 0     # robustness variance resets so far
    n_nonfinite: int = 0  # non-finite incidents recovered from

    @property
    def parity(self) -> float:
        return 2.0 * self.p - 1.0

    @property
    def n_est(self) -> float:
        """Estimated <a†a>; the well-separated Gaussian-mixture value."""
        return 0.5 * (self.vx + self.xbar**2 + self.vp + self.pbar**2 - 1.0)

    def x2_est(self, chi_cut: float = 1.0e-8) -> float:
        """Estimated <x^2>, p-weighted over the even/odd branches.

        Falls back to vx + xbar^2 once the packets no longer overlap.
        """
        chi, m_plus, m_minus = cat_moments(self.xbar, self.pbar, self.vx, self.vp, self.c)
        if chi <= chi_cut:
            return self.vx + self.xbar**2
        return self.p * m_plus + (1.0 - self.p) * m_minus

    def copy(self) -> "EstimatorState":
        return replace(self)


def cat_moments(
    xbar: float, pbar: float, vx: float, vp: float, c: float
) -> tuple[float, float, float]:
    """Packet overlap chi and <x^2> of the even/odd superpositions.

    For Gaussian packets psi_± centered at ±(xbar, pbar) with position
    variance vx and covariance c (the x-space wavefunction does not involve
    vp), the overlap and cross moment close in elementary form:

        chi            = exp(-xbar^2/(2 vx) - 2 (vx pbar - c xbar)^2 / vx)
        Re<G+|x^2|G->  = chi * (vx - 4 (vx pbar - c xbar)^2)

    and <±|x^2|±> = (vx + xbar^2 ± Re<G+|x^2|G->) / (1 ± chi). Validated
    against direct numerical quadrature over the wavefunctions.
    """
    if vx <= 0.0:
        raise ValueError(f"vx must be positive, got {vx}")
    s = vx * pbar - c * xbar
    expo = -xbar * xbar / (2.0 * vx) - 2.0 * s * s / vx
    chi = math.exp(expo) if expo > -700.0 else 0.0
    mean_x2 = vx + xbar * xbar
    if chi >= 1.0 - 1.0e-12:
        # coincident packets: both branches collapse to one Gaussian
        return chi, mean_x2, mean_x2
    cross = chi * (vx - 4.0 * s * s)
    m_plus = (mean_x2 + cross) / (1.0 + chi)
    m_minus = (mean_x2 - cross) / (1.0 - chi)
    return chi, m_plus, m_minus


def parity_info_coefficient(est: EstimatorState, k: float, chi_cut: float = 1.0e-8) -> float:
    """Rate coefficient of the parity update driven by the x^2 record.

    Proportional to the even/odd <x^2> split, so it vanishes once the
    packets are well separated: the position measurement then carries no
    parity information.
    """
    chi, m_plus, m_minus = cat_moments(est.xbar, est.pbar, est.vx, est.vp, est.c)
    if chi <= chi_cut:
        return 0.0
    return math.sqrt(8.0 * k) * (m_plus - m_minus) * est.p * (1.0 - est.p)


def truncate_noise(dv: float, dt: float) -> float:
    """Clamp an innovation to 4 standard deviations of its nominal N(0, dt)."""
    bound = 4.0 * math.sqrt(dt)
    if dv > bound:
        return bound
    if dv < -bound:
        return -bound
    return dv


def innovation_x2(
    dr: float, est: EstimatorState, k: float, dt: float, chi_cut: float = 1.0e-8
) -> float:
    """Innovation of the x^2 record against the filter's prediction."""
    if k <= 0.0:
        raise ValueError("innovation_x2 requires k > 0")
    dv = dr / math.sqrt(2.0 * k) - math.sqrt(8.0 * k) * est.x2_est(chi_cut) * dt
    return truncate_noise(dv, dt)


def update_filter(
    est: EstimatorState,
    dv: float,
    k: float,
    dt: float,
    omega_sq: float,
    v_reset: float = 0.5,
    chi_cut: float = 1.0e-8,
) -> EstimatorState:
    """One Euler-Maruyama step of the six-parameter SDEs.

    ``dv`` must already be noise-truncated. ``omega_sq`` is the controller's
    current potential curvature (nu^2 * multiplier). Ends with the
    robustness pass. Non-finite results reset the variances and zero the
    centroids rather than poisoning the run.
    """
    xi = xi_of(k)
    xb, pb, vx, vp, c, p = est.xbar, est.pbar, est.vx, est.vp, est.c, est.p

    dxb = pb * dt + xi * xb * vx * dv
    dpb = -omega_sq * xb * dt + xi * xb * c * dv
    dvx = (2.0 * c - xi * xi * xb * xb * vx * vx) * dt + xi * vx * vx * dv
    dc = (vp - omega_sq * vx - xi * xi * xb * xb * vx * c) * dt + xi * vx * c * dv
    dvp = (
        -2.0 * omega_sq * c * dt
        + xi * (c * c - 0.25) * dv
        + xi * xi * (0.25 * (vx + 2.0 * xb * xb) - c * c * xb * xb) * dt
    )
    dp = parity_info_coefficient(est, k, chi_cut) * dv

    est.xbar = xb + dxb
    est.pbar = pb + dpb
    est.vx = vx + dvx
    est.vp = vp + dvp
    est.c = c + dc
    est.p = p + dp

    if not all(
        map(math.isfinite, (est.xbar, est.pbar, est.vx, est.vp, est.c, est.p))
    ):
        est.n_nonfinite += 1
        if not (math.isfinite(est.xbar) and math.isfinite(est.pbar)):
            est.xbar, est.pbar = 0.0, 0.0
        est.vx, est.vp, est.c = v_reset, v_reset, 0.0
        if not math.isfinite(est.p):
            est.p = 0.5
    return robustness_pass(est, v_reset)


def update_qubit_channel(
    est: EstimatorState, dr_x: float, mu: float, dt: float
) -> EstimatorState:
    """Qubit-readout step: advance p_plus and recombine the parity belief.

    The record is a continuous sigma_x measurement of strength mu. The
    p_plus update is the two-outcome special case of the parity equation:
    the gain 2*sqrt(8 mu) is sqrt(8 mu) times the sigma_x split between
    the |+> and |-> hypotheses, which keeps the filter consistent with the
    record model dr_x = 4 mu <sigma_x> dt + sqrt(2 mu) dW. The parity
    estimate then mixes p_plus with the decorrelation probability:
    p = (1 - beta) p_plus + beta (1 - p_plus).
    """
    if mu <= 0.0:
        raise ValueError("update_qubit_channel requires mu > 0")
    sx_est = 2.0 * est.p_plus - 1.0
    du = dr_x / math.sqrt(2.0 * mu) - math.sqrt(8.0 * mu) * sx_est * dt
    du = truncate_noise(du, dt)
    gain = 2.0 * math.sqrt(8.0 * mu)
    est.p_plus += gain * est.p_plus * (1.0 - est.p_plus) * du
    est.p_plus = min(max(est.p_plus, P_CLAMP), 1.0 - P_CLAMP)
    est.p = (1.0 - est.beta) * est.p_plus + est.beta * (1.0 - est.p_plus)
    return est


def damping_bracket(est: EstimatorState) -> float:
    """2<a†a> in the well-separated regime; drives the decorrelation rate."""
    return est.vx + est.xbar**2 + est.vp + est.pbar**2 - 1.0


def parity_flip_rate(est: EstimatorState, gamma: float, n_T: float) -> float:
    """Estimated rate of thermal parity flips.

    Phonon emission at gamma*(n_T+1)*<n> plus absorption at
    gamma*n_T*(<n>+1), each of which toggles the superposition symmetry.
    At n_T = 0 this is gamma*<n>_e, half the damping bracket rate.
    """
    n_est = max(damping_bracket(est), 0.0) * 0.5
    return gamma * ((2.0 * n_T + 1.0) * n_est + n_T)


def update_damping(
    est: EstimatorState, gamma: float, n_T: float, dt: float
) -> EstimatorState:
    """Euler step of the approximate thermal-damping equations of motion."""
    if gamma == 0.0:
        return est
    v_th = (2.0 * n_T + 1.0) * 0.5
    # telegraph relaxation of the correlation at twice the flip rate; at
    # n_T = 0 the rate is gamma times the damping bracket
    rate = 2.0 * parity_flip_rate(est, gamma, n_T)
    est.xbar *= 1.0 - 0.5 * gamma * dt
    est.pbar *= 1.0 - 0.5 * gamma * dt
    est.vx -= gamma * (est.vx - v_th) * dt
    est.vp -= gamma * (est.vp - v_th) * dt
    est.c *= 1.0 - 2.0 * gamma * dt
    est.beta -= rate * (est.beta - 0.5) * dt
    est.beta = min(max(est.beta, 0.0), 0.5)
    return est


def window_damping_step(
    est: EstimatorState, gamma: float, n_T: float, dt: float
) -> EstimatorState:
    """One correlation-window substep: parity decay plus moment damping.

    While the qubit is being re-correlated both records are switched off;
    the parity belief relaxes toward 1/2 at twice the thermal flip rate,
    and the Gaussian moments damp as usual.
    """
    if gamma > 0.0:
        rate = 2.0 * parity_flip_rate(est, gamma, n_T)
        est.p = 0.5 + (est.p - 0.5) * math.exp(-rate * dt)
        update_damping(est, gamma, n_T, dt)
    return est


def window_end_reset(est: EstimatorState) -> EstimatorState:
    """Close a correlation window: the qubit now labels the parity exactly."""
    est.beta = 0.0
    est.p = min(max(est.p, P_CLAMP), 1.0 - P_CLAMP)
    est.p_plus = est.p
    return est


def recorrelate(
    est: EstimatorState, gamma: float, n_T: float, tau_corr: float, dt: float
) -> EstimatorState:
    """Full correlation-step update for the estimator.

    Integrates the window substeps over ``tau_corr`` and then resets the
    qubit bookkeeping (beta = 0, p_plus = p).
    """
    n_sub = max(1, round(tau_corr / dt))
    dt_sub = tau_corr / n_sub
    for _ in range(n_sub):
        window_damping_step(est, gamma, n_T, dt_sub)
    return window_end_reset(est)


def robustness_pass(est: EstimatorState, v_reset: float = 0.5) -> EstimatorState:
    """Reset the variances when they leave the trustworthy region.

    Triggers on negative variances, on the uncertainty product dropping
    below 0.9 (c^2 + 1/4), or on either variance exceeding 12x the
    ground-state value. The reset target is the thermal variance, capped
    just below the ceiling so a hot bath cannot re-trigger the reset
    forever. Probabilities are clamped away from the absorbing endpoints.
    """
    target = min(v_reset, 0.9 * V_HI)
    if (
        est.vx < 0.0
        or est.vp < 0.0
        or est.vx * est.vp < UNCERTAINTY_SLACK * (est.c * est.c + 0.25)
        or est.vx > V_HI
        or est.vp > V_HI
    ):
        est.vx, est.vp, est.c = target, target, 0.0
        est.n_resets += 1
    est.p = min(max(est.p, P_CLAMP), 1.0 - P_CLAMP)
    est.p_plus = min(max(est.p_plus, P_CLAMP), 1.0 - P_CLAMP)
    est.beta = min(max(est.beta, 0.0), 0.5)
    return est
