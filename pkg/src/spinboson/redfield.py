"""Redfield rates for the DSR system-bath coupling and the secular 3-level dynamics.

Conventions (hbar = 1): levels are indexed 0..3 in the order of
:class:`~spinboson.hamiltonians.DsrEigensystem`, ``omega[n, k] = E_n - E_k``
and

    d rho_nm / dt = -i omega_nm rho_nm - sum_kl R_nmkl rho_kl
    R_nmkl = delta_lm sum_r G+_nrrk + delta_nk sum_r G-_lrrm - G+_lmnk - G-_lmnk

with G+_lmnk = h_lm h_nk F(omega_nk), G-_lmnk = h_lm h_nk conj(F(omega_ml)),
where F(w) = int_0^inf dt e^{-i w t} <B(t) B(0)> is the one-sided transform
of the bath correlation function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from spinboson.hamiltonians import (
    DsrEigensystem,
    Representation,
    annihilation,
    build_dsr_jc,
    build_exact,
    dsr_eigensystem,
    spin_operators,
)
from spinboson.model import DsrParams, ModelParams, SpectralDensity, SpectralKind, solve_displacement
from spinboson.numerics import eigh, principal_value, propagate_2x2

PREFACTORS = ("lm_nk", "lm_mk")


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0:
        raise ValueError(f"beta must be > 0 (use math.inf for zero temperature), got {beta}")
    return beta


def _real_response(sd: SpectralDensity, omega: float, beta: float) -> float:
    # J(|w|) e^{-beta w/2} / sinh(beta |w| / 2)
    if omega == 0.0:
        if math.isinf(beta):
            return 0.0
        if sd.kind is SpectralKind.OHMIC:
            return 2.0 * sd.kappa / beta
        eps = 1e-8
        return 2.0 * sd(eps) / (eps * beta)
    w = abs(omega)
    jw = sd(w)
    if math.isinf(beta):
        return 2.0 * jw if omega < 0 else 0.0
    x = beta * w
    occupation = 1.0 / -math.expm1(-x)
    if omega > 0:
        occupation *= math.exp(-x)
    return 2.0 * jw * occupation


def bath_response(sd: SpectralDensity, omega: float, beta: float, lamb_shift: bool = True,
                  tol: float = 1e-11) -> complex:
    """F(omega): real part is the golden-rule rate, imaginary part the Lamb shift."""
    beta = _check_beta(beta)
    re = _real_response(sd, float(omega), beta)
    im = 0.0
    if lamb_shift and not sd.is_zero:
        im = -2.0 / math.pi * principal_value(sd, float(omega), beta, tol=tol)
    return complex(re, im)


@dataclass(frozen=True)
class CouplingElements:
    """h_lm of the bath coupling operator c^dag + c - eta sigma_z in the eigenbasis."""

    h_tilde: np.ndarray
    correction: float
    correction_ratio: float


def coupling_operator(params: ModelParams, dsr: DsrParams) -> tuple[np.ndarray, np.ndarray]:
    """(c^dag + c, eta * sigma_z) in the DSR basis, eta = 2 Re(g) / (omega0 + |delta_tilde|)."""
    c = annihilation(2)
    sz = spin_operators(Representation.DSR)["z"]
    eta = 2.0 * params.g.real / (params.omega0 + abs(dsr.delta_tilde))
    return np.kron(c + c.conj().T, np.eye(2)), eta * np.kron(np.eye(2), sz)


def coupling_elements(eigensystem: DsrEigensystem, params: ModelParams, dsr: DsrParams) -> CouplingElements:
    x_op, corr_op = coupling_operator(params, dsr)
    v = eigensystem.vectors()
    h = v.conj().T @ (x_op - corr_op) @ v
    h = 0.5 * (h + h.conj().T)
    eta = 2.0 * params.g.real / (params.omega0 + abs(dsr.delta_tilde))
    ratio = float(np.linalg.norm(corr_op, 2) / np.linalg.norm(x_op, 2))
    return CouplingElements(h_tilde=h, correction=eta, correction_ratio=ratio)


def _h_matrix(h) -> np.ndarray:
    return np.asarray(getattr(h, "h_tilde", h), dtype=complex)


def _element_product(h: np.ndarray, l: int, m: int, n: int, k: int, prefactor: str) -> complex:
    if prefactor == "lm_nk":
        return h[l, m] * h[n, k]
    if prefactor == "lm_mk":
        # as printed in the closed-form rate; kept selectable for comparison only
        return h[l, m] * h[m, k]
    raise ValueError(f"prefactor must be one of {PREFACTORS}, got {prefactor!r}")


def gamma_plus_rate(h, l: int, m: int, n: int, k: int, freqs, sd: SpectralDensity, beta: float,
                    lamb_shift: bool = True, prefactor: str = "lm_nk") -> complex:
    """Single rate G+_lmnk = h_lm h_nk F(omega_nk)."""
    beta = _check_beta(beta)
    hm = _h_matrix(h)
    product = _element_product(hm, l, m, n, k, prefactor)
    if product == 0:
        return 0j
    return product * bath_response(sd, float(np.asarray(freqs)[n, k]), beta, lamb_shift)


@dataclass(frozen=True)
class GammaTensor:
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    response: np.ndarray = field(repr=False)


def response_table(energies, sd: SpectralDensity, beta: float, lamb_shift: bool = True) -> np.ndarray:
    """F(E_n - E_k) for every ordered pair, each distinct frequency evaluated once."""
    beta = _check_beta(beta)
    e = np.asarray(energies, dtype=float)
    freqs = e[:, None] - e[None, :]
    cache: dict[float, complex] = {}
    table = np.empty(freqs.shape, dtype=complex)
    for idx, w in np.ndenumerate(freqs):
        w = float(w)
        if w not in cache:
            cache[w] = bath_response(sd, w, beta, lamb_shift)
        table[idx] = cache[w]
    return table


def gamma_tensors(h, energies, sd: SpectralDensity, beta: float, lamb_shift: bool = True,
                  response: np.ndarray | None = None) -> GammaTensor:
    """Both rate tensors, each from its own definition.

    ``gamma_plus[l,m,n,k] = h_lm h_nk F(omega_nk)`` and
    ``gamma_minus[l,m,n,k] = h_lm h_nk conj(F(omega_ml))``.
    """
    hm = _h_matrix(h)
    if response is None:
        response = response_table(energies, sd, beta, lamb_shift)
    products = np.einsum("lm,nk->lmnk", hm, hm)
    gp = products * response[None, None, :, :]
    gm = products * np.conj(response.T)[:, :, None, None]
    return GammaTensor(gamma_plus=gp, gamma_minus=gm, response=response)


def redfield_tensor(gammas: GammaTensor, n: int, m: int, k: int, l: int) -> complex:
    gp, gm = gammas.gamma_plus, gammas.gamma_minus
    value = -gp[l, m, n, k] - gm[l, m, n, k]
    if l == m:
        value += sum(gp[n, r, r, k] for r in range(gp.shape[0]))
    if n == k:
        value += sum(gm[l, r, r, m] for r in range(gm.shape[0]))
    return complex(value)


def full_redfield_tensor(gammas: GammaTensor) -> np.ndarray:
    """R[n, m, k, l] for all indices at once."""
    gp, gm = gammas.gamma_plus, gammas.gamma_minus
    dim = gp.shape[0]
    eye = np.eye(dim)
    sum_plus = np.einsum("nrrk->nk", gp)
    sum_minus = np.einsum("lrrm->lm", gm)
    r = np.einsum("lm,nk->nmkl", eye, sum_plus)
    r += np.einsum("nk,lm->nmkl", eye, sum_minus)
    r -= np.einsum("lmnk->nmkl", gp + gm)
    return r


@dataclass(frozen=True)
class InitialState:
    rho01: complex
    rho02: complex

    @classmethod
    def spin_up(cls, eigensystem: DsrEigensystem) -> "InitialState":
        """sigma_z = +1 times the displaced oscillator ground state."""
        return cls(0.5 * eigensystem.a_coef, -0.5 * eigensystem.b_coef)


@dataclass(frozen=True)
class SecularDynamics:
    gamma1: complex
    gamma2: complex
    gamma3: complex
    gamma4: complex
    omega01: float
    omega02: float
    omega_plus: complex
    omega_minus: complex
    rho01_0: complex
    rho02_0: complex
    a_coef: float
    b_coef: float

    def generator(self) -> np.ndarray:
        return np.array([
            [1j * self.omega01 - self.gamma1, -self.gamma2],
            [-self.gamma3, 1j * self.omega02 - self.gamma4],
        ])

    def coherences(self, times) -> np.ndarray:
        """(rho01(t), rho02(t)) with shape (len(times), 2)."""
        return propagate_2x2(self.generator(), np.array([self.rho01_0, self.rho02_0]), np.asarray(times, dtype=float))

    def amplitudes(self) -> tuple[complex, complex]:
        """c_+, c_- with sigma_z(t) = 2 Re(c_+ e^{i w_+ t} + c_- e^{i w_- t}).

        Undefined at an exceptional point (w_+ == w_-).
        """
        m = self.generator()
        lp, lm = 1j * self.omega_plus, 1j * self.omega_minus
        if abs(lp - lm) < 1e-14 * max(1.0, abs(lp)):
            raise ZeroDivisionError("generator is defective; no two-exponential form")
        rho0 = np.array([self.rho01_0, self.rho02_0])
        readout = np.array([self.a_coef, -self.b_coef])
        eye = np.eye(2)
        cp = readout @ ((m - lm * eye) @ rho0) / (lp - lm)
        cm = readout @ ((m - lp * eye) @ rho0) / (lm - lp)
        return complex(cp), complex(cm)


def secular_dynamics(eigensystem: DsrEigensystem, h, sd: SpectralDensity, beta: float,
                     initial: InitialState | None = None, lamb_shift: bool = True) -> SecularDynamics:
    """Secular equations for rho01, rho02 and the complex frequencies w_+-."""
    gammas = gamma_tensors(h, eigensystem.energies, sd, beta, lamb_shift)
    g1 = redfield_tensor(gammas, 0, 1, 0, 1)
    g2 = redfield_tensor(gammas, 0, 1, 0, 2)
    g3 = redfield_tensor(gammas, 0, 2, 0, 1)
    g4 = redfield_tensor(gammas, 0, 2, 0, 2)
    w1, w2 = eigensystem.omega01, eigensystem.omega02
    mean = 0.5 * (w1 + w2) + 0.5j * (g1 + g4)
    root = np.sqrt((0.5 * (w1 - w2) + 0.5j * (g1 - g4)) ** 2 - g2 * g3 + 0j)
    if initial is None:
        initial = InitialState.spin_up(eigensystem)
    return SecularDynamics(
        gamma1=g1, gamma2=g2, gamma3=g3, gamma4=g4,
        omega01=w1, omega02=w2,
        omega_plus=complex(mean + root), omega_minus=complex(mean - root),
        rho01_0=complex(initial.rho01), rho02_0=complex(initial.rho02),
        a_coef=eigensystem.a_coef, b_coef=eigensystem.b_coef,
    )


def sigma_z_series(dyn: SecularDynamics, times) -> np.ndarray:
    """sigma_z(t) ~ 2 Re(A rho01(t) - B rho02(t))."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be nonnegative and ascending")
    rho = dyn.coherences(times)
    return 2.0 * np.real(dyn.a_coef * rho[:, 0] - dyn.b_coef * rho[:, 1])


def dsr_dynamics(params: ModelParams, lamb_shift: bool = True, dsr: DsrParams | None = None) -> SecularDynamics:
    """Secular dynamics for ``params`` with its Ohmic bath and temperature."""
    if dsr is None:
        dsr = solve_displacement(params)
    eig = dsr_eigensystem(params, dsr)
    h = coupling_elements(eig, params, dsr)
    return secular_dynamics(eig, h, params.spectral_density(), params.beta, lamb_shift=lamb_shift)


@dataclass(frozen=True)
class LevelSystem:
    """A few-level system in its eigenbasis, ready for Redfield propagation."""

    energies: np.ndarray
    coupling: np.ndarray
    sigma_z: np.ndarray
    rho0: np.ndarray
    captured_weight: float = 1.0


def _project(h_entries: np.ndarray, ops: dict[str, np.ndarray], psi0: np.ndarray, n_levels: int) -> LevelSystem:
    spec = eigh(h_entries)
    v = spec.vectors[:, :n_levels]
    amp = v.conj().T @ psi0
    weight = float(np.vdot(amp, amp).real)
    amp = amp / math.sqrt(weight)
    return LevelSystem(
        energies=spec.values[:n_levels].copy(),
        coupling=v.conj().T @ ops["coupling"] @ v,
        sigma_z=v.conj().T @ ops["sigma_z"] @ v,
        rho0=np.outer(amp, amp.conj()),
        captured_weight=weight,
    )


def dsr_level_system(params: ModelParams, dsr: DsrParams | None = None) -> LevelSystem:
    """DSR Hamiltonian diagonalized numerically; state sigma_z = +1 times |0~>."""
    if dsr is None:
        dsr = solve_displacement(params)
    h = build_dsr_jc(params, dsr)
    x_op, corr_op = coupling_operator(params, dsr)
    sz = np.kron(np.eye(2), spin_operators(Representation.DSR)["z"])
    psi0 = np.zeros(4, dtype=complex)
    psi0[0] = psi0[1] = 1.0 / math.sqrt(2.0)
    return _project(h.entries, {"coupling": x_op - corr_op, "sigma_z": sz}, psi0, 4)


def coherent_state(alpha: complex, n_fock: int) -> np.ndarray:
    """Truncated, renormalized coherent state amplitudes."""
    n = np.arange(n_fock)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        amp = (n == 0).astype(complex)
    else:
        amp = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact) + 0j
    return amp / np.linalg.norm(amp)


def exact_level_system(params: ModelParams, n_fock: int = 9, n_levels: int = 4,
                       dsr: DsrParams | None = None) -> LevelSystem:
    """Lowest ``n_levels`` exact eigenstates with bath coupling a^dag + a.

    The initial state is sigma_z = +1 times the coherent state of amplitude
    ``s`` (the lab-frame image of the DSR initial state), projected onto the
    retained levels and renormalized.
    """
    if dsr is None:
        dsr = solve_displacement(params)
    h = build_exact(params, n_fock)
    a = annihilation(n_fock)
    sz = np.kron(np.eye(n_fock), spin_operators(Representation.BARE)["z"])
    psi0 = np.kron(coherent_state(dsr.s, n_fock), np.array([1.0, 0.0]))
    return _project(h.entries, {"coupling": np.kron(a + a.conj().T, np.eye(2)), "sigma_z": sz}, psi0, n_levels)


def full_redfield_sigma_z(system: LevelSystem, sd: SpectralDensity, beta: float, times,
                          lamb_shift: bool = True, rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Explicit time stepping of the complete (non-secular) Redfield equation.

    Returns Tr(rho(t) sigma_z) on ``times``.
    """
    times = np.asarray(times, dtype=float)
    gammas = gamma_tensors(system.coupling, system.energies, sd, beta, lamb_shift)
    r = full_redfield_tensor(gammas)
    e = system.energies
    dim = len(e)
    bohr = e[:, None] - e[None, :]
    liouville = -r.reshape(dim * dim, dim * dim)
    liouville -= np.diag(1j * bohr.reshape(-1))

    def rhs(_t, y):
        return liouville @ y

    sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), system.rho0.reshape(-1).astype(complex),
                    method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"Redfield integration failed: {sol.message}")
    rho_t = sol.y.T.reshape(len(times), dim, dim)
    return np.real(np.einsum("tnm,mn->t", rho_t, system.sigma_z))
