"""Dense Hermitian eigensolver, principal-value quadrature and a 2x2 propagator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

HERMITIAN_ATOL = 1e-14


class NotHermitianError(ValueError):
    pass


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed; carries the last estimate and its error bound."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error:.3e})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in ascending order; column ``i`` of ``vectors`` belongs to ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.values)


def _as_matrix(h) -> np.ndarray:
    entries = getattr(h, "entries", h)
    a = np.array(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def check_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> None:
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    err = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if err > atol * scale:
        raise NotHermitianError(f"matrix is not Hermitian: max |H - H^dagger| = {err:.3e}")


def _fix_phases(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made real positive
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivots) / pivots)[None, :]


def eigh(h, tol: float = 1e-15, max_sweeps: int = 100) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies a real plane rotation that zeroes it. Sweeps stop once the
    off-diagonal Frobenius norm falls below ``tol`` times the matrix norm.
    Eigenvectors are phase-fixed so that their largest component is real
    and positive; equal eigenvalues keep their diagonal order.
    """
    a = _as_matrix(h)
    check_hermitian(a)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if n == 1 or norm == 0.0:
        return Spectrum(values=np.real(np.diag(a)).copy(), vectors=v)

    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r <= 1e-18 * norm:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # columns p, q of the unitary: diag(1, conj(phase)) @ [[c, s], [-s, c]]
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, cols] = v[:, cols] @ rot
    else:
        raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    values = np.real(np.diag(a))
    order = np.argsort(values, kind="stable")
    return Spectrum(values=values[order].copy(), vectors=_fix_phases(v[:, order]))


def _coth(x):
    return 1.0 / np.tanh(x)


def _pv_numerator(j, omega, omega_ref, beta):
    # J(w) (w - w_ref coth(beta w / 2))
    omega = np.asarray(omega, dtype=float)
    if math.isinf(beta):
        thermal = np.ones_like(omega)
    else:
        thermal = _coth(0.5 * beta * omega)
    return j(omega) * (omega - omega_ref * thermal)


def _quad(f, a, b, tol, points=None):
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info = integrate.quad(
            f, a, b, epsabs=tol, epsrel=0.0, limit=500, points=points, full_output=1
        )[:3]
    if err > max(tol, 1e-10 * abs(value)) * 10:
        raise QuadratureError("principal-value quadrature did not converge", value, err)
    return value


def principal_value(j, omega_ref: float, beta: float, omega_cut: float | None = None,
                    tol: float = 1e-11) -> float:
    """P int_0^inf dw J(w) (w - w_ref coth(beta w/2)) / (w^2 - w_ref^2).

    The pole at ``|omega_ref|`` is excised with a symmetric window of
    half-width ``max(1e-3 |omega_ref|, 1e-6)``. Inside the window the
    singular part is removed analytically (it is odd about the pole), and
    the remaining smooth part is integrated by Gauss-Legendre. Outside the
    window adaptive quadrature runs up to ``omega_cut``, by default
    ``50 * omega_c`` for an Ohmic density.

    ``beta = math.inf`` means zero temperature (coth -> 1).
    """
    if not (beta > 0):
        raise ValueError(f"beta must be > 0 (use math.inf for T = 0), got {beta}")
    if omega_cut is None:
        omega_c = getattr(j, "omega_c", math.inf)
        if not math.isfinite(omega_c):
            raise ValueError("omega_cut is required when J has no finite cutoff")
        omega_cut = 50.0 * omega_c
    if getattr(j, "is_zero", False):
        return 0.0

    pole = abs(float(omega_ref))

    def integrand(w):
        return _pv_numerator(j, w, omega_ref, beta) / (w * w - omega_ref * omega_ref)

    if pole == 0.0:
        return _quad(integrand, 0.0, omega_cut, tol)
    if pole >= omega_cut:
        raise ValueError("omega_ref lies beyond the integration cutoff")

    half = min(max(1e-3 * pole, 1e-6), 0.5 * pole)

    def smooth(w):
        # integrand = smooth(w) / (w - pole)
        return _pv_numerator(j, w, omega_ref, beta) / (w + pole)

    nodes, weights = np.polynomial.legendre.leggauss(16)
    x = pole + half * nodes
    f_pole = smooth(pole)
    window = half * float(np.sum(weights * (smooth(x) - f_pole) / (x - pole)))

    below = _quad(integrand, 0.0, pole - half, tol)
    upper_points = [p for p in (2.0 * pole, 4.0 * pole) if pole + half < p < omega_cut]
    above = _quad(integrand, pole + half, omega_cut, tol, points=upper_points or None)
    return below + window + above


def propagate_2x2(m, v0, t):
    """exp(m t) @ v0 for a complex 2x2 matrix, in closed form.

    With mu = tr(m)/2 and q^2 = ((m00 - m11)/2)^2 + m01 m10,
    exp(m t) = e^{mu t} [cosh(q t) I + sinh(q t)/q (m - mu I)], which stays
    valid for defective matrices (q -> 0 limit taken by series).
    ``t`` may be a scalar or a 1-D array; the result then has shape (len(t), 2).
    """
    m = np.asarray(m, dtype=complex)
    v0 = np.asarray(v0, dtype=complex)
    if m.shape != (2, 2) or v0.shape != (2,):
        raise ValueError("propagate_2x2 needs a 2x2 matrix and a 2-vector")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("propagation time must be >= 0")

    mu = 0.5 * (m[0, 0] + m[1, 1])
    q = np.sqrt((0.5 * (m[0, 0] - m[1, 1])) ** 2 + m[0, 1] * m[1, 0])
    qt = q * t_arr
    cosh_qt = np.cosh(qt)
    small = np.abs(qt) < 1e-4
    safe_q = q if q != 0 else 1.0
    sinhc = np.where(small, t_arr * (1.0 + qt**2 / 6.0 + qt**4 / 120.0), np.sinh(qt) / safe_q)
    n = m - mu * np.eye(2)
    nv = n @ v0
    out = np.exp(mu * t_arr)[..., None] * (cosh_qt[..., None] * v0 + sinhc[..., None] * nv)
    return out
