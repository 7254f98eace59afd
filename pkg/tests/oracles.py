"""Independent reference computations used to pin expected values.

These deliberately avoid the package's own fast paths: quadrature over
explicit wavefunctions, density-matrix Euler steps, classical moment ODEs,
and scalar ODE integration. Each oracle checks one side of a dual-route
contract and must stay independent of the code it validates.
"""

import math

import numpy as np


def quadrature_cat_moments(xbar, pbar, vx, c, n_points=400001):
    """chi and <x^2> of the even/odd packet superpositions by quadrature.

    Builds the two Gaussian wavefunctions on a grid and integrates
    directly. Returns (chi, m_plus, m_minus); the minus branch is nan when
    the packets coincide.
    """
    L = abs(xbar) + 30.0 * math.sqrt(vx) + abs(pbar)
    x = np.linspace(-L, L, n_points)
    a = (1.0 - 2.0j * c) / (4.0 * vx)
    norm = (2.0 * math.pi * vx) ** (-0.25)
    g_plus = norm * np.exp(-a * (x - xbar) ** 2 + 1j * pbar * (x - xbar))
    g_minus = norm * np.exp(-a * (x + xbar) ** 2 - 1j * pbar * (x + xbar))
    chi = float(np.trapezoid((g_plus.conj() * g_minus).real, x))
    out = [chi]
    for sign in (1.0, -1.0):
        psi = g_plus + sign * g_minus
        w = np.abs(psi) ** 2
        denom = np.trapezoid(w, x)
        out.append(float(np.trapezoid(x * x * w, x) / denom) if denom > 1e-30 else math.nan)
    return tuple(out)


def density_matrix_measurement_drift(rho, m_op, strength, dt):
    """Euler step of the ensemble-averaged measurement backaction.

    d rho = -k [M, [M, rho]] dt; the stochastic term averages to zero.
    """
    comm = m_op @ rho - rho @ m_op
    return rho - strength * (m_op @ comm - comm @ m_op) * dt


def thermal_lindblad_drift(rho, a_op, gamma, n_t, dt):
    """Euler step of the damped-oscillator master equation."""
    adag = a_op.conj().T

    def dissipator(c_op):
        cd = c_op.conj().T
        cdc = cd @ c_op
        return c_op @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)

    drho = gamma * (n_t + 1.0) * dissipator(a_op) + gamma * n_t * dissipator(adag)
    return rho + drho * dt


def classical_quadratic_moments(x0, p0, vx0, vp0, c0, omega_sq, times):
    """Exact first/second moments of a classical oscillator, stiffness omega_sq.

    Quadratic Hamiltonians propagate Gaussian moments exactly through the
    phase-space flow x' = p, p' = -omega_sq x.
    """
    omega = math.sqrt(omega_sq)
    out = []
    s0 = np.array([[vx0, c0], [c0, vp0]])
    for t in times:
        cth, sth = math.cos(omega * t), math.sin(omega * t)
        f = np.array([[cth, sth / omega], [-omega * sth, cth]])
        x, p = f @ (x0, p0)
        s = f @ s0 @ f.T
        out.append((x, p, s[0, 0], s[1, 1], s[0, 1]))
    return np.array(out)


def integrate_scalar_decay(p0, gamma, n_t, tau, n_sub=4000):
    """Joint damping + parity-decay integration used to pin recorrelation.

    Evolves (xbar, pbar, vx, vp, c) under the damping flow and p under
    dp/dt = -gamma * (vx + xbar^2 + vp + pbar^2 - 1) * (p - 1/2), starting
    from the packaged defaults (6, 0, 1/2, 1/2, 0).
    """
    xb, pb, vx, vp, c = 6.0, 0.0, 0.5, 0.5, 0.0
    v_th = (2.0 * n_t + 1.0) * 0.5
    p = p0
    dt = tau / n_sub
    for _ in range(n_sub):
        bracket = vx + xb * xb + vp + pb * pb - 1.0
        p += -gamma * bracket * (p - 0.5) * dt
        xb *= 1.0 - 0.5 * gamma * dt
        pb *= 1.0 - 0.5 * gamma * dt
        vx += -gamma * (vx - v_th) * dt
        vp += -gamma * (vp - v_th) * dt
        c *= 1.0 - 2.0 * gamma * dt
    return p


def gauss_hermite_expectation(v0, v1, a_op, n_nodes=80, dt=1.0):
    """E[<A>] of the normalized state v0 + w*v1 with w ~ N(0, dt).

    Exact in the Gaussian variable via Gauss-Hermite quadrature; used to
    compute one-step ensemble means of the diffusive unraveling without
    Monte-Carlo error.
    """
    nodes, weights = np.polynomial.hermite_e.hermegauss(n_nodes)
    weights = weights / math.sqrt(2.0 * math.pi)
    total = 0.0
    for h, wgt in zip(nodes, weights):
        w = h * math.sqrt(dt)
        psi = v0 + w * v1
        nrm2 = float(np.vdot(psi, psi).real)
        total += wgt * float(np.vdot(psi, a_op @ psi).real) / nrm2
    return total
