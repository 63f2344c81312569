import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinboson.model import (
    ConvergenceError,
    ModelParams,
    SpectralDensity,
    fixed_point_residuals,
    lorentzian_j_eff,
    ohmic_j,
    solve_displacement,
)

finite = dict(allow_nan=False, allow_infinity=False)


def test_ohmic_values_match_arbitrary_precision():
    sd = SpectralDensity.ohmic(0.02, 10.0)
    assert sd(10.0) == pytest.approx(0.02 * 10 * math.exp(-1), rel=1e-15)
    for w in (1e-6, 0.3, 7.0, 123.0):
        exact = mp.mpf("0.02") * mp.mpf(w) * mp.exp(-mp.mpf(w) / 10)
        assert sd(w) == pytest.approx(float(exact), rel=1e-14)
    assert sd(0.0) == 0.0


def test_ohmic_is_vectorized_and_rejects_negative_frequency():
    sd = SpectralDensity.ohmic(0.1, 2.0)
    w = np.linspace(0, 5, 11)
    np.testing.assert_allclose(sd(w), 0.1 * w * np.exp(-w / 2.0), rtol=1e-15)
    with pytest.raises(ValueError):
        sd(-0.1)
    with pytest.raises(ValueError):
        sd(np.array([0.2, -1.0]))


def test_lorentzian_peak_value_and_zero():
    alpha, big, kappa = 0.05, 1.3, 0.02
    sd = SpectralDensity.lorentzian_effective(alpha, big, kappa)
    assert sd(big) == pytest.approx(alpha * big / (2 * math.pi**2 * kappa**2), rel=1e-12)
    assert sd(0.0) == 0.0
    w = np.linspace(0, 4, 401)
    assert np.all(sd(w) >= 0)
    assert np.argmax(sd(w)) == pytest.approx(np.argmin(abs(w - big)), abs=2)


def test_lorentzian_without_damping_has_a_pole():
    sd = SpectralDensity.lorentzian_effective(0.1, 1.0, 0.0)
    assert math.isinf(sd(1.0))
    assert math.isfinite(sd(0.9))


def test_density_kind_checks():
    with pytest.raises(TypeError):
        ohmic_j(SpectralDensity.lorentzian_effective(0.1, 1.0, 0.1), 1.0)
    with pytest.raises(TypeError):
        lorentzian_j_eff(SpectralDensity.ohmic(0.1, 1.0), 1.0)
    with pytest.raises(ValueError):
        SpectralDensity.ohmic(-0.1, 1.0)
    with pytest.raises(ValueError):
        SpectralDensity.ohmic(0.1, 0.0)
    assert SpectralDensity.ohmic(0.0, 1.0).is_zero


@pytest.mark.parametrize("bad", [
    dict(omega0=0.0), dict(omega0=-1.0), dict(omega_c=0.0), dict(kappa=-0.1),
    dict(temperature=-1.0), dict(delta=math.nan), dict(g=complex(math.inf, 0)),
])
def test_model_params_validation(bad):
    base = dict(delta=1.0, omega0=1.0, g=0.3)
    base.update(bad)
    with pytest.raises(ValueError):
        ModelParams(**base)


def test_model_params_beta_and_round_trip():
    p = ModelParams(delta=-0.7, omega0=1.2, g=0.3 - 0.1j, kappa=0.02, omega_c=10, temperature=0.25)
    assert p.beta == 4.0
    assert math.isinf(p.replace(temperature=0).beta)
    assert ModelParams.from_dict(p.to_dict()) == p
    assert ModelParams.from_dict({"delta": 1, "omega0": 1, "g": "0.3+0.1j"}).g == 0.3 + 0.1j
    with pytest.raises(KeyError):
        ModelParams.from_dict({"delta": 1, "omega0": 1, "bogus": 2})
    with pytest.raises(KeyError):
        ModelParams.from_dict({"delta": 1, "omega0": 1, "g": 0.1, "g_re": 0.1})


def test_displacement_closed_forms():
    p = ModelParams(delta=1.4, omega0=0.8, g=0.0)
    d = solve_displacement(p)
    assert d.s == 0 and d.delta_tilde == 1.4
    p = ModelParams(delta=0.0, omega0=0.8, g=0.3 + 0.2j)
    d = solve_displacement(p)
    assert d.s == -(0.3 + 0.2j) / 0.8 and d.delta_tilde == 0.0


@settings(max_examples=200, deadline=None)
@given(
    delta=st.floats(-3, 3, **finite),
    omega0=st.floats(0.2, 5, **finite),
    g_abs=st.floats(0, 0.5, **finite),
    phi=st.floats(0, 2 * math.pi, **finite),
)
def test_displacement_satisfies_both_relations(delta, omega0, g_abs, phi):
    p = ModelParams(delta=delta, omega0=omega0, g=g_abs * cmath.exp(1j * phi))
    d = solve_displacement(p)
    r_s, r_d = fixed_point_residuals(p, d)
    assert r_s <= 1e-10 and r_d <= 1e-10
    assert abs(d.delta_tilde) <= abs(delta)
    assert np.sign(d.delta_tilde) == np.sign(delta)


@settings(max_examples=100, deadline=None)
@given(
    delta=st.floats(-3, 3, **finite),
    g_abs=st.floats(0.01, 0.5, **finite),
    phi=st.floats(0, 2 * math.pi, **finite),
)
def test_displacement_phase_covariance(delta, g_abs, phi):
    p = ModelParams(delta=delta, omega0=1.0, g=g_abs)
    d0 = solve_displacement(p)
    d1 = solve_displacement(p.replace(g=g_abs * cmath.exp(1j * phi)))
    assert d1.s == pytest.approx(d0.s * cmath.exp(1j * phi), abs=1e-12)
    assert d1.delta_tilde == pytest.approx(d0.delta_tilde, abs=1e-12)


def test_displacement_reports_nonconvergence():
    p = ModelParams(delta=2.0, omega0=1.0, g=0.5)
    with pytest.raises(ConvergenceError) as info:
        solve_displacement(p, max_iter=2)
    assert info.value.iterations == 2 and info.value.residual > 0
    with pytest.raises(ValueError):
        solve_displacement(p, tol=0)
    with pytest.raises(ValueError):
        solve_displacement(p, max_iter=0)


def test_displacement_iteration_count_is_recorded():
    d = solve_displacement(ModelParams(delta=1.0, omega0=1.0, g=0.3))
    assert 1 <= d.iterations <= 200
    assert d.residual <= 1e-12
