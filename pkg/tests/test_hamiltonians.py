import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import transformed_truncation
from spinboson.hamiltonians import (
    BasisLabel,
    HermitianMatrix,
    Representation,
    bohr_deviations,
    bohr_frequencies,
    build_dsr_general,
    build_dsr_jc,
    build_exact,
    build_simple_truncation,
    dsr_eigensystem,
    lowest_levels,
    parity_sectors,
    tracked_levels,
)
from spinboson.model import ModelParams, solve_displacement
from spinboson.numerics import eigh

finite = dict(allow_nan=False, allow_infinity=False)


def params_strategy(g_max=0.5, delta_max=3.0):
    return st.builds(
        lambda d, w, ga, phi: ModelParams(delta=d, omega0=w, g=ga * cmath.exp(1j * phi)),
        st.floats(-delta_max, delta_max, **finite),
        st.floats(0.3, 3.0, **finite),
        st.floats(0, g_max, **finite),
        st.floats(0, 2 * math.pi, **finite),
    )


def test_exact_uncoupled_spectrum():
    p = ModelParams(delta=0.7, omega0=1.3, g=0.0)
    expected = sorted(s * 0.35 + n * 1.3 for n in range(5) for s in (-1, 1))
    np.testing.assert_allclose(build_exact(p, 5).eigenvalues(), expected, atol=1e-13)


def test_exact_structure():
    h = build_exact(ModelParams(delta=1.0, omega0=1.0, g=0.3 + 0.2j), 9)
    assert h.dim == 18 and h.n_fock == 9
    assert h.representation is Representation.BARE
    assert h.labels()[3] == BasisLabel(1, "down_z", Representation.BARE)
    assert h.labels()[3].index == 3
    np.testing.assert_array_equal(build_simple_truncation(ModelParams(1.0, 1.0, 0.3)).entries,
                                  build_exact(ModelParams(1.0, 1.0, 0.3), 2).entries)
    with pytest.raises(ValueError):
        build_exact(ModelParams(1.0, 1.0, 0.3), 1)
    with pytest.raises(ValueError):
        h.entries[0, 0] = 1.0


def test_hermitian_matrix_validation():
    with pytest.raises(ValueError):
        HermitianMatrix(np.eye(3))
    with pytest.raises(ValueError):
        HermitianMatrix(np.array([[0, 1], [0, 0]]))


def test_truncation_interlaces():
    p = ModelParams(delta=1.2, omega0=1.0, g=0.35)
    for n in range(2, 8):
        small = build_exact(p, n).eigenvalues()
        big = build_exact(p, n + 1).eigenvalues()
        assert np.all(big[: len(small)] <= small + 1e-12)
        assert np.all(small <= big[2:] + 1e-12)


def test_exact_reference_is_converged():
    p = ModelParams(delta=1.0, omega0=1.0, g=0.4)
    np.testing.assert_allclose(lowest_levels(build_exact(p, 9)), lowest_levels(build_exact(p, 18)), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(p=params_strategy())
def test_exact_spectrum_phase_and_sign_invariance(p):
    ref = build_exact(p.replace(g=abs(p.g)), 6).eigenvalues()
    np.testing.assert_allclose(build_exact(p, 6).eigenvalues(), ref, atol=1e-11)
    np.testing.assert_allclose(build_exact(p.replace(delta=-p.delta), 6).eigenvalues(), ref, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(p=params_strategy())
def test_parity_commutes(p):
    n = 6
    h = build_exact(p, n).entries
    sectors = parity_sectors(n)
    proj = sectors[1] @ sectors[1].T
    np.testing.assert_allclose(h @ proj, proj @ h, atol=1e-13)
    v = np.hstack([sectors[1], sectors[-1]])
    np.testing.assert_allclose(v.T @ v, np.eye(2 * n), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(p=params_strategy(), s_abs=st.floats(0, 0.6, **finite), phi=st.floats(0, 2 * math.pi, **finite))
def test_general_dsr_is_the_truncated_transform(p, s_abs, phi):
    s = s_abs * cmath.exp(1j * phi)
    ours = build_dsr_general(p, s).entries
    ref = transformed_truncation(p.delta, p.omega0, p.g, s)
    const = p.omega0 * abs(s) ** 2 + 2 * (p.g * s.conjugate()).real
    np.testing.assert_allclose(ours, ref - const * np.eye(4), atol=1e-11)


def test_general_dsr_without_displacement_is_simple_truncation():
    p = ModelParams(delta=-0.6, omega0=1.1, g=0.25 - 0.1j)
    bare = build_dsr_general(p, 0).in_bare_spin_basis()
    np.testing.assert_allclose(bare, build_simple_truncation(p).entries, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(p=params_strategy())
def test_jc_form_is_the_general_form_at_the_fixed_point(p):
    # with s = -g/(omega0 + |delta_tilde|) the counter-rotating amplitude cancels exactly;
    # what is left scales with the fixed-point tolerance (1e-12) times omega0 + |delta_tilde|
    d = solve_displacement(p)
    atol = 2e-12 * (p.omega0 + abs(d.delta_tilde))
    np.testing.assert_allclose(build_dsr_general(p, d.s).entries, build_dsr_jc(p, d).entries, atol=atol)


@settings(max_examples=200, deadline=None)
@given(p=params_strategy())
def test_analytic_eigensystem_matches_numeric(p):
    d = solve_displacement(p)
    eig = dsr_eigensystem(p, d)
    h = build_dsr_jc(p, d).entries
    spec = eigh(h)
    np.testing.assert_allclose(eig.sorted_energies, spec.values, atol=1e-10)
    v = eig.vectors()
    np.testing.assert_allclose(v.conj().T @ v, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(v.conj().T @ h @ v, np.diag(eig.energies), atol=1e-10)
    assert eig.a_coef**2 + eig.b_coef**2 == pytest.approx(1.0, abs=1e-14)
    assert eig.a_coef >= 0 and eig.b_coef <= 0


@settings(max_examples=200, deadline=None)
@given(p=params_strategy(g_max=0.5, delta_max=3.0).filter(lambda p: abs(p.g) <= 0.5 * p.omega0))
def test_labelled_order_is_ascending_at_moderate_coupling(p):
    eig = dsr_eigensystem(p, solve_displacement(p))
    assert np.all(np.diff(eig.energies) >= -1e-12)


def test_labelled_order_can_change_at_strong_coupling():
    # |g| = omega0: the one-quantum state |hi,1> drops below e2
    p = ModelParams(delta=1.0, omega0=0.5, g=0.5)
    eig = dsr_eigensystem(p, solve_displacement(p))
    assert eig.e3 < eig.e2
    np.testing.assert_allclose(eig.sorted_energies, eigh(build_dsr_jc(p, solve_displacement(p))).values, atol=1e-12)


def test_eigensystem_uncoupled():
    p = ModelParams(delta=0.6, omega0=1.0, g=0.0)
    eig = dsr_eigensystem(p, solve_displacement(p))
    assert (eig.a_coef, eig.b_coef) == (1.0, 0.0)
    assert eig.omega01 == pytest.approx(0.6) and eig.omega02 == pytest.approx(1.0)
    np.testing.assert_allclose(eig.bohr_table(), eig.energies[:, None] - eig.energies[None, :])


@settings(max_examples=50, deadline=None)
@given(p=params_strategy())
def test_dsr_spectrum_even_in_delta(p):
    e1 = dsr_eigensystem(p, solve_displacement(p)).energies
    q = p.replace(delta=-p.delta)
    e2 = dsr_eigensystem(q, solve_displacement(q)).energies
    np.testing.assert_allclose(e1, e2, atol=1e-13)


def test_tracked_levels_follow_parity_through_crossing():
    deltas = np.arange(0.05, 2.0001, 0.05)
    tracked = np.array([tracked_levels(ModelParams(delta=x, omega0=1.0, g=0.3), 9) for x in deltas])
    # away from crossings the tracked set is the four lowest levels
    p = ModelParams(delta=1.0, omega0=1.0, g=0.3)
    np.testing.assert_allclose(tracked_levels(p, 9), lowest_levels(build_exact(p, 9)), atol=1e-12)
    # e2 stays smooth in delta
    w02 = tracked[:, 2] - tracked[:, 0]
    assert np.max(np.abs(np.diff(w02, 2))) < 0.05


def test_bohr_helpers():
    assert bohr_frequencies([0.1, 0.6, 1.1, 2.0]) == pytest.approx((0.5, 1.0))
    assert bohr_deviations((1.01, 2.0), (1.0, 2.02)) == pytest.approx((0.01, -0.02))
    assert bohr_deviations((1.01, 2.0), (1.0, 2.5), percent=True) == pytest.approx((1.0, -20.0))
