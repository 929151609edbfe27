"""Single-mode Rabi model ``omega a^+a + (Omega/2) sigma_z + lam sigma_x (a + a^+)``.

Four treatments of the same Hamiltonian: exact diagonalization, the
Jaynes-Cummings (RWA) blocks, the adiabatic branches and the GRWA 2x2 blocks.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .model import ParameterError
from .polaron import displacement_overlap

DEFAULT_CUTOFF = 120
#: Levels must move less than this when the cutoff is doubled.
CONVERGENCE_TOL = 1e-10
#: Above this the exact spectrum is flagged as unconverged.
FLAG_TOL = 1e-8
MAX_CUTOFF = 8192


class RabiConvergenceWarning(UserWarning):
    """Exact Rabi levels did not converge under cutoff doubling."""


def cutoff_floor(omega: float, lam: float) -> int:
    """Smallest admissible Fock cutoff ``20 + ceil(10 (lam/omega)^2)``."""
    return 20 + math.ceil(10.0 * (lam / omega) ** 2)


@dataclass(frozen=True)
class RabiParams:
    """Rabi-model constants; ``cutoff=None`` picks ``max(120, floor)``."""

    omega: float = 1.0
    Omega: float = 1.0
    lam: float = 0.1
    cutoff: int | None = None

    def __post_init__(self):
        for name in ("omega", "Omega", "lam"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        floor = cutoff_floor(self.omega, self.lam)
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", max(DEFAULT_CUTOFF, floor))
        elif self.cutoff < floor:
            raise ParameterError(f"cutoff {self.cutoff} below the floor {floor} for lam/omega = "
                                 f"{self.lam / self.omega:.3g}")

    def as_dict(self) -> dict:
        return {"omega": self.omega, "Omega": self.Omega, "lambda": self.lam, "cutoff": self.cutoff}


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest levels of one treatment, ascending.

    ``convergence`` is the largest level change under cutoff doubling
    (zero for the closed-form treatments).
    """

    method: str
    levels: np.ndarray
    convergence: float
    cutoff: int

    @property
    def converged(self) -> bool:
        return self.convergence <= FLAG_TOL


def _check_levels(params: RabiParams, n_levels: int) -> None:
    if n_levels < 1:
        raise ParameterError(f"n_levels must be >= 1, got {n_levels}")
    if n_levels > params.cutoff // 2:
        raise ParameterError(f"n_levels {n_levels} exceeds cutoff/2 = {params.cutoff // 2}")


def _exact_levels(params: RabiParams, cutoff: int, n_levels: int) -> np.ndarray:
    # parity chains |g,0>,|e,1>,|g,2>,... and |e,0>,|g,1>,|e,2>,... over n = 0..cutoff
    n = np.arange(cutoff + 1)
    off = params.lam * np.sqrt(n[1:])
    levels = []
    for start in (-1.0, 1.0):
        spin = start * (-1.0) ** n
        diag = params.omega * n + 0.5 * params.Omega * spin
        levels.append(eigh_tridiagonal(diag, off, eigvals_only=True,
                                       select="i", select_range=(0, min(n_levels, cutoff) - 1)))
    return np.sort(np.concatenate(levels))[:n_levels]


def rabi_exact(params: RabiParams, n_levels: int) -> SpectrumResult:
    """Lowest ``n_levels`` exact levels, doubling the cutoff until they settle."""
    _check_levels(params, n_levels)
    cutoff = params.cutoff
    levels = _exact_levels(params, cutoff, n_levels)
    change = math.inf
    while cutoff < MAX_CUTOFF:
        finer = _exact_levels(params, 2 * cutoff, n_levels)
        change = float(np.max(np.abs(finer - levels)))
        levels = finer
        cutoff *= 2
        if change < CONVERGENCE_TOL:
            break
    if change > FLAG_TOL:
        warnings.warn(f"exact Rabi levels changed by {change:.2g} at cutoff {cutoff}",
                      RabiConvergenceWarning, stacklevel=2)
    return SpectrumResult("exact", levels, change, cutoff)


def rabi_jc(params: RabiParams, n_levels: int) -> SpectrumResult:
    """Jaynes-Cummings levels: ``|g,0>`` plus 2x2 blocks on ``|g,n>, |e,n-1>``."""
    _check_levels(params, n_levels)
    w, half = params.omega, 0.5 * params.Omega
    n = np.arange(1, params.cutoff + 1)
    a = n * w - half
    d = (n - 1) * w + half
    g = params.lam * np.sqrt(n)
    mean, rad = 0.5 * (a + d), np.hypot(0.5 * (a - d), g)
    levels = np.sort(np.concatenate([[-half], mean - rad, mean + rad]))
    return SpectrumResult("jc", levels[:n_levels], 0.0, params.cutoff)


def adiabatic_branches(params: RabiParams, nmax: int):
    """``E_{+,n}`` and ``E_{-,n}`` for ``n = 0..nmax``."""
    w = params.omega
    n = np.arange(nmax + 1)
    beta = -2.0 * params.lam / w
    ov = np.array([displacement_overlap(int(k), int(k), beta) for k in n])
    base = w * (n - params.lam ** 2 / w ** 2)
    return base + 0.5 * params.Omega * ov, base - 0.5 * params.Omega * ov


def rabi_adiabatic(params: RabiParams, n_levels: int) -> SpectrumResult:
    """Adiabatic branches ``omega (n - lam^2/omega^2) +- (Omega/2) <n|D(-2 lam/omega)|n>``."""
    _check_levels(params, n_levels)
    plus, minus = adiabatic_branches(params, params.cutoff)
    levels = np.sort(np.concatenate([plus, minus]))
    return SpectrumResult("adiabatic", levels[:n_levels], 0.0, params.cutoff)


def rabi_grwa(params: RabiParams, n_levels: int, couple: bool = True) -> SpectrumResult:
    """GRWA levels: 2x2 blocks on ``|Psi_{-,n}>, |Psi_{+,n-1}>`` plus ``E_{-,0}``.

    The block coupling is ``(Omega/2) <n|D(2 lam/omega)|n-1>``; ``couple=False``
    zeroes it, which reproduces the adiabatic levels.
    """
    _check_levels(params, n_levels)
    plus, minus = adiabatic_branches(params, params.cutoff)
    n = np.arange(1, params.cutoff + 1)
    beta = 2.0 * params.lam / params.omega
    g = np.array([0.5 * params.Omega * displacement_overlap(int(k), int(k) - 1, beta) for k in n])
    if not couple:
        g = np.zeros_like(g)
    a, d = minus[1:], plus[:-1]
    mean, rad = 0.5 * (a + d), np.hypot(0.5 * (a - d), g)
    levels = np.sort(np.concatenate([[minus[0]], mean - rad, mean + rad]))
    return SpectrumResult("grwa", levels[:n_levels], 0.0, params.cutoff)


RABI_METHODS = {"exact": rabi_exact, "jc": rabi_jc, "adiabatic": rabi_adiabatic, "grwa": rabi_grwa}
