"""Physical parameters, bath spectral densities and the displacement fixed point.

Units: hbar = k_B = 1, every frequency in one user-chosen unit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve stops before reaching its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the TSS + oscillator + Ohmic bath problem.

    ``g`` is complex: its real part couples sigma_z to the oscillator
    coordinate, its imaginary part to the momentum.
    """

    delta: float
    omega0: float
    g: complex = 0.0
    kappa: float = 0.0
    omega_c: float = 10.0
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "g", complex(self.g))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "omega_c", float(self.omega_c))
        object.__setattr__(self, "temperature", float(self.temperature))
        values = (self.delta, self.omega0, self.g.real, self.g.imag,
                  self.kappa, self.omega_c, self.temperature)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite model parameter in {self}")
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def beta(self) -> float:
        """Inverse temperature; ``math.inf`` at zero temperature."""
        return math.inf if self.temperature == 0 else 1.0 / self.temperature

    def spectral_density(self) -> "SpectralDensity":
        return SpectralDensity.ohmic(self.kappa, self.omega_c)

    def replace(self, **changes: Any) -> "ModelParams":
        data = {
            "delta": self.delta, "omega0": self.omega0, "g": self.g,
            "kappa": self.kappa, "omega_c": self.omega_c,
            "temperature": self.temperature,
        }
        data.update(changes)
        return ModelParams(**data)

    def to_dict(self) -> dict[str, float]:
        """Flat key-value form; ``g`` is split into ``g_re`` and ``g_im``."""
        return {
            "delta": self.delta,
            "omega0": self.omega0,
            "g_re": self.g.real,
            "g_im": self.g.imag,
            "kappa": self.kappa,
            "omega_c": self.omega_c,
            "temperature": self.temperature,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelParams":
        known = {"delta", "omega0", "g", "g_re", "g_im", "kappa", "omega_c", "temperature"}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown model keys: {sorted(unknown)}")
        if "g" in data and ("g_re" in data or "g_im" in data):
            raise KeyError("give either g or g_re/g_im, not both")
        if "g" in data:
            g = complex(data["g"])
        else:
            g = complex(float(data.get("g_re", 0.0)), float(data.get("g_im", 0.0)))
        kwargs = {k: float(data[k]) for k in ("kappa", "omega_c", "temperature") if k in data}
        return cls(delta=float(data["delta"]), omega0=float(data["omega0"]), g=g, **kwargs)


@dataclass(frozen=True)
class DsrParams:
    """Converged displacement ``s`` and renormalized tunneling ``delta_tilde``."""

    s: complex
    delta_tilde: float
    residual: float
    iterations: int


class SpectralKind(enum.Enum):
    OHMIC = "ohmic"
    LORENTZIAN_EFFECTIVE = "lorentzian_effective"


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral density J(omega), defined for omega >= 0.

    Use the :meth:`ohmic` and :meth:`lorentzian_effective` constructors.
    ``kappa`` is shared: Ohmic strength, or the oscillator damping that sets
    the width of the effective Lorentzian.
    """

    kind: SpectralKind
    kappa: float
    omega_c: float = math.inf
    alpha: float = 0.0
    omega_peak: float = 1.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.kind is SpectralKind.OHMIC and not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.kind is SpectralKind.LORENTZIAN_EFFECTIVE:
            if self.alpha < 0:
                raise ValueError(f"alpha must be >= 0, got {self.alpha}")
            if not self.omega_peak > 0:
                raise ValueError(f"omega_peak must be > 0, got {self.omega_peak}")

    @classmethod
    def ohmic(cls, kappa: float, omega_c: float) -> "SpectralDensity":
        return cls(SpectralKind.OHMIC, kappa=float(kappa), omega_c=float(omega_c))

    @classmethod
    def lorentzian_effective(cls, alpha: float, omega_peak: float, kappa: float) -> "SpectralDensity":
        return cls(SpectralKind.LORENTZIAN_EFFECTIVE, kappa=float(kappa),
                   alpha=float(alpha), omega_peak=float(omega_peak))

    @property
    def is_zero(self) -> bool:
        if self.kind is SpectralKind.OHMIC:
            return self.kappa == 0
        return self.alpha == 0

    def __call__(self, omega):
        if self.kind is SpectralKind.OHMIC:
            return ohmic_j(self, omega)
        return lorentzian_j_eff(self, omega)


def _check_domain(omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise ValueError("spectral densities are defined for omega >= 0 only")
    return w


def _as_output(w, value):
    return float(value) if np.ndim(w) == 0 else value


def ohmic_j(sd: SpectralDensity, omega):
    """kappa * omega * exp(-omega / omega_c); accepts scalars or arrays."""
    if sd.kind is not SpectralKind.OHMIC:
        raise TypeError("ohmic_j needs an Ohmic spectral density")
    w = _check_domain(omega)
    return _as_output(w, sd.kappa * w * np.exp(-w / sd.omega_c))


def lorentzian_j_eff(sd: SpectralDensity, omega):
    """Effective Lorentzian density seen by the TSS (diagnostic only).

    2 alpha omega Omega^4 / ((Omega^2 - omega^2)^2 + (2 pi kappa omega Omega)^2)
    """
    if sd.kind is not SpectralKind.LORENTZIAN_EFFECTIVE:
        raise TypeError("lorentzian_j_eff needs a Lorentzian-effective spectral density")
    w = _check_domain(omega)
    big = sd.omega_peak
    num = 2.0 * sd.alpha * w * big**4
    den = (big**2 - w**2) ** 2 + (2.0 * np.pi * sd.kappa * w * big) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(num == 0, 0.0, num / np.where(den == 0, 1.0, den))
    # kappa == 0 leaves a true pole at omega == Omega
    out = np.where((den == 0) & (num != 0), np.inf, out)
    return _as_output(w, out)


def solve_displacement(params: ModelParams, tol: float = 1e-12, max_iter: int = 200) -> DsrParams:
    """Solve s = -g / (omega0 + |delta_tilde|), delta_tilde = delta exp(-2|s|^2).

    The two relations depend on each other, so they are iterated as a fixed
    point in ``s`` starting from s0 = -g / (omega0 + |delta|). Stops when
    consecutive iterates differ by at most ``tol``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    g, delta, omega0 = params.g, params.delta, params.omega0

    if delta == 0.0:
        return DsrParams(s=-g / omega0, delta_tilde=0.0, residual=0.0, iterations=0)

    s = -g / (omega0 + abs(delta))
    step = math.inf
    for it in range(1, max_iter + 1):
        s_next = -g / (omega0 + abs(delta) * math.exp(-2.0 * abs(s) ** 2))
        step = abs(s_next - s)
        s = s_next
        if step <= tol:
            delta_tilde = delta * math.exp(-2.0 * abs(s) ** 2)
            return DsrParams(s=complex(s), delta_tilde=delta_tilde, residual=step, iterations=it)
    raise ConvergenceError("displacement fixed point did not converge", step, max_iter)


def fixed_point_residuals(params: ModelParams, dsr: DsrParams) -> tuple[float, float]:
    """Residuals of the displacement relation and the renormalization relation."""
    r_s = abs(dsr.s + params.g / (params.omega0 + abs(dsr.delta_tilde)))
    r_d = abs(dsr.delta_tilde - params.delta * math.exp(-2.0 * abs(dsr.s) ** 2))
    return r_s, r_d
