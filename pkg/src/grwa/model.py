"""Physical parameters of the resonator array with embedded two-level systems,
and the free-photon band structure.

Energies are in units of the resonator frequency when ``omega=1``.  The
tight-binding chain has on-site energy ``omega`` and nearest-neighbour
hopping ``-xi``, so a right-moving plane wave ``exp(ikj)`` with ``0 < k < pi``
has energy ``omega - 2 xi cos(k)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """Raised when model parameters violate a hard validity condition."""


class WeakHoppingWarning(UserWarning):
    """Hopping is large enough that the small-``xi/omega`` series degrades."""


#: Above this ratio ``|xi|/omega`` a :class:`WeakHoppingWarning` is emitted.
XI_WARN_RATIO = 0.25


@dataclass(frozen=True)
class ModelParams:
    """Constants of one run.

    Parameters
    ----------
    omega : float
        Resonator frequency, ``omega > 0``.
    xi : float
        Inter-resonator hopping, ``|xi| < omega/2``.
    Omega : float
        Level splitting of the two-level systems, ``Omega >= 0``.
    lam : float
        Coupling between each two-level system and its resonator.
    tls_sites : tuple of int
        Strictly increasing resonator indices hosting a two-level system.
    """

    omega: float = 1.0
    xi: float = 0.04
    Omega: float = 1.0
    lam: float = 0.04
    tls_sites: tuple[int, ...] = field(default=(0,))

    def __post_init__(self):
        object.__setattr__(self, "tls_sites", tuple(int(c) for c in self.tls_sites))
        for name in ("omega", "xi", "Omega", "lam"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if abs(self.xi) >= 0.5 * self.omega:
            raise ParameterError(
                f"|xi| = {abs(self.xi)} >= omega/2 = {0.5 * self.omega}: "
                "the displacement decay constant becomes complex")
        if abs(self.xi) > XI_WARN_RATIO * self.omega:
            warnings.warn(
                f"|xi|/omega = {abs(self.xi) / self.omega:.3g} exceeds "
                f"{XI_WARN_RATIO}; weak-hopping expansions lose accuracy",
                WeakHoppingWarning, stacklevel=3)
        if self.Omega < 0:
            raise ParameterError(f"Omega must be >= 0, got {self.Omega}")
        if not self.tls_sites:
            raise ParameterError("at least one two-level system site is required")
        if any(b <= a for a, b in zip(self.tls_sites, self.tls_sites[1:])):
            raise ParameterError(
                f"tls_sites must be strictly increasing, got {self.tls_sites}")

    @property
    def single_tls(self) -> bool:
        return len(self.tls_sites) == 1

    def require_single_tls(self, what: str) -> None:
        if not self.single_tls:
            raise ParameterError(f"{what} is defined for a single two-level system only")

    def replace(self, **changes) -> "ModelParams":
        values = dict(omega=self.omega, xi=self.xi, Omega=self.Omega,
                      lam=self.lam, tls_sites=self.tls_sites)
        values.update(changes)
        return ModelParams(**values)

    def as_dict(self) -> dict:
        return {"omega": self.omega, "xi": self.xi, "Omega": self.Omega,
                "lambda": self.lam, "tls_sites": list(self.tls_sites)}


@dataclass(frozen=True)
class BandInfo:
    """The ``N``-photon band of the bare array."""

    N: int
    center: float
    half_width: float

    @property
    def width(self) -> float:
        return 2.0 * self.half_width

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width


def dispersion(params: ModelParams, k):
    """Single-photon energy ``omega - 2 xi cos(k)``; accepts arrays."""
    return params.omega - 2.0 * params.xi * np.cos(k)


def band_info(params: ModelParams, N: int) -> BandInfo:
    """Center ``N omega`` and half-width ``2 N |xi|`` of the ``N``-photon band."""
    if N < 0:
        raise ParameterError(f"photon number must be non-negative, got {N}")
    return BandInfo(N=int(N), center=N * params.omega, half_width=2.0 * N * abs(params.xi))
