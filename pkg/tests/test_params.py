"""Parameter validation, presets, and regime warnings."""

import math

import pytest

from cattrack.errors import ConfigError
from cattrack.params import PRESETS, PhysicalParams, preset


def test_fig1a_regime():
    p = preset("fig1a")
    assert p.q_eff == pytest.approx(200.0)
    assert p.n_T == 0.0
    assert p.k == pytest.approx(1.0 / (200.0 * math.pi))
    assert p.mu == 1.0
    assert p.g == 12.5


def test_fig1d_regime():
    p = preset("fig1d")
    assert p.q_eff == pytest.approx(500.0)
    assert p.n_T == 12.0
    assert p.mu == 0.5


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("fig1z")


def test_tau_corr_times_g_is_pi():
    for p in PRESETS.values():
        assert p.tau_corr * p.g == pytest.approx(math.pi, abs=1e-15)


def test_override_applied():
    p = preset("fig1a").with_overrides(gamma=0.01)
    assert p.gamma == 0.01
    assert p.k == preset("fig1a").k


def test_feedback_override_addressable_directly():
    p = preset("fig1a").with_overrides(epsilon=0.1)
    assert p.feedback.epsilon == 0.1


def test_unknown_override_names_key():
    with pytest.raises(ConfigError, match="gamma_typo"):
        preset("fig1a").with_overrides(gamma_typo=1.0)


def test_dim_osc_floor():
    with pytest.raises(ConfigError):
        PhysicalParams(dim_osc=4).validate()


def test_negative_rate_rejected():
    with pytest.raises(ConfigError):
        PhysicalParams(gamma=-0.1).validate()


def test_corr_period_must_leave_measurement_time():
    with pytest.raises(ConfigError):
        PhysicalParams(corr_period=0.01).validate()  # window is 0.04 periods


def test_regime_warning_weak_k():
    with pytest.warns(UserWarning, match="not well above gamma"):
        preset("fig1d").validate()


def test_regime_warning_strong_k():
    with pytest.warns(UserWarning, match="exceeds nu"):
        PhysicalParams(k=2.0).validate()


def test_thermal_variance():
    assert PhysicalParams(n_T=12.0).v_thermal == pytest.approx(12.5)
    assert PhysicalParams(n_T=0.0).v_thermal == pytest.approx(0.5)
