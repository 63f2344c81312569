"""Matrix builders for the TSS-oscillator system and the analytic DSR eigensystem.

Basis convention for every matrix built here: ``index = 2 * fock + spin``.
In the bare representation spin 0/1 are sigma_z = +1/-1; in the displaced
state representation (DSR) they are sigma_x = +1/-1 and ``fock`` counts
quanta of the displaced oscillator.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from spinboson.model import DsrParams, ModelParams
from spinboson.numerics import check_hermitian, eigh


class Representation(enum.Enum):
    BARE = "bare"
    DSR = "dsr"


SPIN_LABELS = {
    Representation.BARE: ("up_z", "down_z"),
    Representation.DSR: ("plus_x", "minus_x"),
}


@dataclass(frozen=True)
class BasisLabel:
    fock: int
    spin: str
    representation: Representation

    @property
    def index(self) -> int:
        return 2 * self.fock + SPIN_LABELS[self.representation].index(self.spin)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A Hermitian operator on TSS x oscillator, tagged with its basis."""

    entries: np.ndarray
    representation: Representation = Representation.BARE

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2 or a.shape[0] % 2:
            raise ValueError(f"expected an even square matrix of size >= 2, got {a.shape}")
        check_hermitian(a)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_fock(self) -> int:
        return self.dim // 2

    def labels(self) -> list[BasisLabel]:
        spins = SPIN_LABELS[self.representation]
        return [BasisLabel(i // 2, spins[i % 2], self.representation) for i in range(self.dim)]

    def in_bare_spin_basis(self) -> np.ndarray:
        """Entries with the spin factor expressed in the sigma_z basis."""
        if self.representation is Representation.BARE:
            return self.entries.copy()
        u = np.kron(np.eye(self.n_fock), _X_TO_Z)
        return u @ self.entries @ u.conj().T

    def eigenvalues(self) -> np.ndarray:
        return eigh(self).values


# columns: |+x>, |-x> written in the sigma_z basis
_X_TO_Z = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def spin_operators(rep: Representation) -> dict[str, np.ndarray]:
    """Pauli matrices and sigma_x ladder operators in the spin basis of ``rep``."""
    if rep is Representation.BARE:
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
    else:
        sx = np.array([[1, 0], [0, -1]], dtype=complex)
        sy = np.array([[0, 1j], [-1j, 0]], dtype=complex)
        sz = np.array([[0, 1], [1, 0]], dtype=complex)
    # sigma_pm^(x) = (sigma_z -+ i sigma_y) / 2: raise/lower sigma_x
    return {
        "x": sx, "y": sy, "z": sz,
        "plus_x": 0.5 * (sz - 1j * sy),
        "minus_x": 0.5 * (sz + 1j * sy),
    }


def annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1).astype(complex)


def _op(ho: np.ndarray, spin: np.ndarray) -> np.ndarray:
    return np.kron(ho, spin)


def build_exact(params: ModelParams, n_fock: int) -> HermitianMatrix:
    """-(delta/2) sigma_x + omega0 a^dag a + sigma_z (g a^dag + g* a) on Fock levels 0..n_fock-1."""
    if n_fock < 2:
        raise ValueError(f"n_fock must be >= 2, got {n_fock}")
    s = spin_operators(Representation.BARE)
    a = annihilation(n_fock)
    ad = a.conj().T
    eye = np.eye(n_fock)
    h = (
        -0.5 * params.delta * _op(eye, s["x"])
        + params.omega0 * _op(ad @ a, np.eye(2))
        + _op(params.g * ad + params.g.conjugate() * a, s["z"])
    )
    return HermitianMatrix(h, Representation.BARE)


def build_simple_truncation(params: ModelParams) -> HermitianMatrix:
    """The exact operator restricted to oscillator levels 0 and 1."""
    return build_exact(params, 2)


def _ladder_2():
    c = annihilation(2)
    return c, c.conj().T, c.conj().T @ c


def build_dsr_general(params: ModelParams, s: complex) -> HermitianMatrix:
    """Conditionally displaced Hamiltonian truncated to displaced levels 0 and 1.

    Any displacement ``s`` is accepted. The constant shift
    omega0 |s|^2 + 2 Re(g s*) is dropped.
    """
    s = complex(s)
    sp = spin_operators(Representation.DSR)
    c, cd, n = _ladder_2()
    eye2 = np.eye(2)
    dt = params.delta * math.exp(-2.0 * abs(s) ** 2)
    g = params.g
    h = (
        -0.5 * dt * _op(eye2 - 4.0 * abs(s) ** 2 * n, sp["x"])
        + params.omega0 * _op(n, eye2)
        + _op(cd, (g + params.omega0 * s) * sp["z"] + 1j * s * dt * sp["y"])
        + _op(c, (g.conjugate() + params.omega0 * s.conjugate()) * sp["z"]
              - 1j * s.conjugate() * dt * sp["y"])
    )
    return HermitianMatrix(h, Representation.DSR)


def _lower_spin_is_plus(delta: float) -> bool:
    # delta > 0: |+x> is the lower Zeeman state; delta == 0 follows the delta <= 0 form
    return delta > 0


def jc_coupling(params: ModelParams, dsr: DsrParams) -> float:
    """Prefactor 2|delta_tilde| / (omega0 + |delta_tilde|) of the ladder term."""
    dt = abs(dsr.delta_tilde)
    return 2.0 * dt / (params.omega0 + dt)


def build_dsr_jc(params: ModelParams, dsr: DsrParams) -> HermitianMatrix:
    """Jaynes-Cummings form obtained with s = -g / (omega0 + |delta_tilde|)."""
    sp = spin_operators(Representation.DSR)
    c, cd, n = _ladder_2()
    eye2 = np.eye(2)
    dt = dsr.delta_tilde
    g = params.g
    shrink = 4.0 * abs(g) ** 2 / (params.omega0 + abs(dt)) ** 2
    k = jc_coupling(params, dsr)
    if _lower_spin_is_plus(params.delta):
        up, down = sp["plus_x"], sp["minus_x"]
    else:
        up, down = sp["minus_x"], sp["plus_x"]
    h = (
        -0.5 * dt * _op(eye2 - shrink * n, sp["x"])
        + params.omega0 * _op(n, eye2)
        + k * (g * _op(cd, up) + g.conjugate() * _op(c, down))
    )
    return HermitianMatrix(h, Representation.DSR)


@dataclass(frozen=True)
class DsrEigensystem:
    """Analytic eigenpairs of the DSR Jaynes-Cummings Hamiltonian.

    With ``lo``/``hi`` the lower/upper sigma_x state and ``u = g/|g|``:
    e0 = |lo,0>, e1 = A|hi,0> + B u|lo,1>, e2 = -B|hi,0> + A u|lo,1>,
    e3 = |hi,1>. ``b_coef`` is <= 0 in this convention.
    """

    e0: float
    e1: float
    e2: float
    e3: float
    a_coef: float
    b_coef: float
    phase: complex = 1.0
    lower_spin: str = "minus_x"

    @property
    def omega01(self) -> float:
        return self.e1 - self.e0

    @property
    def omega02(self) -> float:
        return self.e2 - self.e0

    @property
    def energies(self) -> np.ndarray:
        return np.array([self.e0, self.e1, self.e2, self.e3])

    @property
    def sorted_energies(self) -> np.ndarray:
        return np.sort(self.energies, kind="stable")

    def bohr_table(self) -> np.ndarray:
        """omega[n, k] = E_n - E_k."""
        e = self.energies
        return e[:, None] - e[None, :]

    def vectors(self) -> np.ndarray:
        """Columns e0..e3 in the DSR basis (index = 2 * fock + spin)."""
        lo = 0 if self.lower_spin == "plus_x" else 1
        hi = 1 - lo
        a, b, u = self.a_coef, self.b_coef, self.phase
        v = np.zeros((4, 4), dtype=complex)
        v[lo, 0] = 1.0
        v[hi, 1], v[2 + lo, 1] = a, b * u
        v[hi, 2], v[2 + lo, 2] = -b, a * u
        v[2 + hi, 3] = 1.0
        return v


def dsr_eigensystem(params: ModelParams, dsr: DsrParams) -> DsrEigensystem:
    dt = abs(dsr.delta_tilde)
    w0 = params.omega0
    gabs = abs(params.g)
    shrink = 4.0 * gabs**2 / (w0 + dt) ** 2
    e0 = -0.5 * dt
    e3 = 0.5 * dt * (1.0 - shrink) + w0
    cpl = 2.0 * dt * gabs / (w0 + dt)
    root = math.sqrt((e3 - e0 - 2.0 * w0) ** 2 + 4.0 * cpl**2)
    e1 = 0.5 * (2.0 * w0 - (e3 + e0) - root)
    e2 = 0.5 * (2.0 * w0 - (e3 + e0) + root)

    # mixing of |hi,0> (energy dt/2) and |lo,1> (energy w0 - dt(1-shrink)/2);
    # equivalent to A = (E0+E2)/sqrt((E0+E2)^2 + cpl^2) but stable when cpl -> 0
    half_split = 0.5 * (0.5 * dt - (w0 - 0.5 * dt * (1.0 - shrink)))
    r = math.hypot(half_split, cpl)
    if r == 0.0:
        a, b = 1.0, 0.0
    elif half_split >= 0.0:
        # the small coefficient from cpl directly; 1 - half_split/r would cancel
        b = -math.sqrt(0.5 * (1.0 + half_split / r))
        a = cpl / (math.sqrt(2.0 * r) * math.sqrt(r + half_split))
    else:
        a = math.sqrt(0.5 * (1.0 - half_split / r))
        b = -cpl / (math.sqrt(2.0 * r) * math.sqrt(r - half_split))
    norm = math.hypot(a, b)
    a, b = a / norm, b / norm
    phase = cmath.exp(1j * cmath.phase(params.g)) if gabs > 0 else 1.0 + 0j
    lower = "plus_x" if _lower_spin_is_plus(params.delta) else "minus_x"
    return DsrEigensystem(e0, e1, e2, e3, a, b, complex(phase), lower)


def parity_sectors(n_fock: int) -> dict[int, np.ndarray]:
    """Isometries onto the eigenspaces of sigma_x (-1)^(a^dag a), bare basis.

    The TSS-oscillator Hamiltonian commutes with this parity for any complex g.
    """
    out = {}
    for p in (1, -1):
        v = np.zeros((2 * n_fock, n_fock))
        for n in range(n_fock):
            sx = p * (-1) ** n
            v[2 * n, n] = 1.0 / math.sqrt(2.0)
            v[2 * n + 1, n] = sx / math.sqrt(2.0)
        out[p] = v
    return out


def tracked_levels(params: ModelParams, n_fock: int) -> np.ndarray:
    """Exact levels playing the roles of the DSR levels e0..e3.

    e0 and e3 are the two lowest levels in the parity sector of |lo,0>, e1 and
    e2 the two lowest in the other sector. Away from crossings this equals the
    four lowest levels; it follows the DSR states through symmetry-protected
    crossings with two-quantum states (e.g. delta >~ 1.6 omega0 at g = 0.3).
    """
    h = build_exact(params, n_fock).entries
    sectors = parity_sectors(n_fock)
    p0 = 1 if _lower_spin_is_plus(params.delta) else -1
    levels = {}
    for p, v in sectors.items():
        levels[p] = eigh(v.T @ h @ v).values
    return np.array([levels[p0][0], levels[-p0][0], levels[-p0][1], levels[p0][1]])


def lowest_levels(h: HermitianMatrix, count: int = 4) -> np.ndarray:
    return eigh(h).values[:count]


def bohr_frequencies(levels) -> tuple[float, float]:
    e = np.asarray(levels, dtype=float)
    return float(e[1] - e[0]), float(e[2] - e[0])


def bohr_deviations(scheme_freqs, reference_freqs, percent: bool = False) -> tuple[float, float]:
    """Signed deviations (scheme - reference) of (omega01, omega02).

    With ``percent=True`` each deviation is divided by its reference value
    and multiplied by 100.
    """
    out = []
    for s, r in zip(scheme_freqs, reference_freqs):
        d = float(s) - float(r)
        if percent:
            d = 100.0 * d / float(r)
        out.append(d)
    return out[0], out[1]
