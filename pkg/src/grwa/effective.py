"""Single-excitation effective Hamiltonians in the polaron frame.

Every builder returns a :class:`SingleExcitationHamiltonian` on the states
``|1_j, g>`` (one photon at site ``j``, dressed ground TLS) and ``|0, e>``.
Energies are relative to the dressed vacuum ``|0, g>`` whose energy is
``-(Omega/2) G`` with ``G = exp(-2 sum_j alpha_j^2)``.

With ``beta_j = -2 alpha_j`` the exact one-excitation block reads

    onsite(j)       = omega + (Omega/2) beta_j^2 G
    hop(j, l)       = -xi [|j-l| = 1] + (Omega/2) beta_j beta_l G
    tls_level       = Omega G
    tls_coupling(l) = (Omega/2) beta_l G
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ParameterError, dispersion
from .polaron import (PolaronAmplitudes, displacement_overlap, gaussian_factor,
                      omega1, solve_alpha_closed)

METHOD_TAGS = ("exact-grwa", "order0", "order1", "order2", "rwa", "strong-coupling")

#: Advisory threshold on ``(lam/omega)^2 exp(-2 lam^2/omega^2)``.
STRONG_COUPLING_LIMIT = 0.05

# contour radius (units of omega) and node count for the Taylor expansion in xi
_TAYLOR_RADIUS = 0.25
_TAYLOR_NODES = 64


class StrongCouplingWarning(UserWarning):
    """The strong-coupling reduction is used outside its regime of validity."""


@dataclass(frozen=True, eq=False)
class SingleExcitationHamiltonian:
    """One-excitation Hamiltonian with a finite scattering region.

    Arrays are indexed by ``sites = -range .. range``.  Beyond the window the
    chain is uniform with on-site energy ``lead_onsite`` and nearest-neighbour
    hopping ``lead_hop``; the bond between a window edge and the lead also
    carries ``lead_hop``.

    Attributes
    ----------
    onsite : ndarray, shape (n,)
    hop : ndarray, shape (n, n)
        Real symmetric with zero diagonal.
    tls_level : float or None
        ``None`` when the TLS channel has been eliminated.
    tls_coupling : ndarray, shape (n,)
    """

    sites: np.ndarray
    onsite: np.ndarray
    hop: np.ndarray
    tls_level: float | None
    tls_coupling: np.ndarray
    lead_onsite: float
    lead_hop: float
    range: int
    method_tag: str

    def __post_init__(self):
        n = 2 * self.range + 1
        if self.sites.shape != (n,) or self.onsite.shape != (n,) or self.hop.shape != (n, n) \
                or self.tls_coupling.shape != (n,):
            raise ParameterError("inconsistent array shapes for the scattering window")
        if not np.array_equal(self.hop, self.hop.T):
            raise ParameterError("hopping matrix must be exactly symmetric")
        if self.method_tag not in METHOD_TAGS:
            raise ParameterError(f"unknown method tag {self.method_tag!r}")

    @property
    def has_tls(self) -> bool:
        return self.tls_level is not None and bool(np.any(self.tls_coupling != 0.0))

    def index(self, j: int) -> int:
        return j + self.range

    def onsite_at(self, j: int) -> float:
        return float(self.onsite[j + self.range]) if abs(j) <= self.range else self.lead_onsite

    def coupling_at(self, j: int) -> float:
        return float(self.tls_coupling[j + self.range]) if abs(j) <= self.range else 0.0

    def hop_at(self, j: int, l: int) -> float:
        if abs(j) <= self.range and abs(l) <= self.range:
            return float(self.hop[j + self.range, l + self.range])
        return self.lead_hop if abs(j - l) == 1 else 0.0

    def energy(self, k):
        """Incoming energy ``lead_onsite - 2 |lead_hop| cos k``."""
        return self.lead_onsite - 2.0 * abs(self.lead_hop) * np.cos(k)

    def dense(self) -> np.ndarray:
        """Window matrix with the TLS state appended last (if present)."""
        n = len(self.sites)
        m = n + (self.tls_level is not None)
        h = np.zeros((m, m))
        h[:n, :n] = self.hop + np.diag(self.onsite)
        if self.tls_level is not None:
            h[n, n] = self.tls_level
            h[n, :n] = h[:n, n] = self.tls_coupling
        return h


@dataclass(frozen=True)
class Order1Coefficients:
    """Absolute energies and couplings of the first-order Hamiltonian."""

    w0g: float
    w0e: float
    w1g0: float
    j0: float
    w1g1: float
    j1: float


def _free_chain(params: ModelParams, R: int):
    n = 2 * R + 1
    hop = np.zeros((n, n))
    i = np.arange(n - 1)
    hop[i, i + 1] = hop[i + 1, i] = -params.xi
    return np.arange(-R, R + 1), np.full(n, params.omega), hop, np.zeros(n)


def order1_coefficients(params: ModelParams) -> Order1Coefficients:
    """Closed-form parameters of the Hamiltonian kept to first order in ``xi/omega``."""
    params.require_single_tls("order1_coefficients")
    w, xi, Om, lam = params.omega, params.xi, params.Omega, params.lam
    g0 = math.exp(-2.0 * lam * lam / (w * w))
    return Order1Coefficients(
        w0g=-0.5 * Om * g0,
        w0e=0.5 * Om * g0,
        w1g0=-0.5 * Om * g0 * (1.0 - 4.0 * lam * lam / (w * w)),
        j0=Om * lam / w * g0,
        w1g1=2.0 * Om * lam * lam * xi / w ** 3 * g0,
        j1=Om * lam * xi / (w * w) * g0,
    )


def build_exact_grwa(params: ModelParams, pa: PolaronAmplitudes | None = None
                     ) -> SingleExcitationHamiltonian:
    """Exact one-excitation block of the rotated Hamiltonian."""
    params.require_single_tls("build_exact_grwa")
    if pa is None:
        pa = solve_alpha_closed(params)
    R = pa.range
    c = params.tls_sites[0]
    sites, onsite, hop, _ = _free_chain(params, R)
    G = gaussian_factor(pa)
    beta = -2.0 * pa.on_sites(sites + c)
    half = 0.5 * params.Omega * G
    onsite = onsite + half * beta * beta
    extra = half * np.outer(beta, beta)
    np.fill_diagonal(extra, 0.0)
    hop = hop + extra
    return SingleExcitationHamiltonian(
        sites=sites, onsite=onsite, hop=hop, tls_level=params.Omega * G,
        tls_coupling=half * beta, lead_onsite=params.omega, lead_hop=-params.xi,
        range=R, method_tag="exact-grwa")


def _analytic_elements(params: ModelParams, xi, R: int):
    # exact elements (excluding the bare -xi bond) for a complex hopping value
    w, Om, lam = params.omega, params.Omega, params.lam
    w1 = omega1(w, xi)
    q = xi / w1
    a0 = lam * w1 / (2.0 * xi * xi - w * w1)
    G = np.exp(-2.0 * a0 * a0 * (1.0 + q * q) / (1.0 - q * q))
    d = np.abs(np.arange(-R, R + 1))
    alpha = a0 * q ** d
    return {
        "shift": 2.0 * Om * alpha * alpha * G,
        "pair": 2.0 * Om * np.outer(alpha, alpha) * G,
        "level": np.atleast_1d(Om * G),
        "coupling": -Om * alpha * G,
    }


def _taylor_elements(params: ModelParams, n: int):
    """Elements truncated at order ``xi^n``, via FFT on a circle in the xi plane."""
    R = n
    rho = _TAYLOR_RADIUS * params.omega
    theta = 2.0 * np.pi * np.arange(_TAYLOR_NODES) / _TAYLOR_NODES
    nodes = rho * np.exp(1j * theta)
    samples = [_analytic_elements(params, z, R) for z in nodes]
    out = {}
    powers = params.xi ** np.arange(n + 1)
    for key in samples[0]:
        stack = np.stack([s[key] for s in samples])
        coeffs = np.fft.fft(stack, axis=0) / _TAYLOR_NODES
        coeffs = coeffs[:n + 1].real
        scale = np.max(np.abs(stack))
        coeffs[np.abs(coeffs) * rho ** np.arange(n + 1).reshape((-1,) + (1,) * (stack.ndim - 1))
               < 1e-13 * scale] = 0.0
        coeffs = coeffs / (rho ** np.arange(n + 1)).reshape((-1,) + (1,) * (stack.ndim - 1))
        out[key] = np.tensordot(powers, coeffs, axes=1)
    return out


def build_order_n(params: ModelParams, n: int) -> SingleExcitationHamiltonian:
    """Effective Hamiltonian kept to order ``(xi/omega)^n``, ``n`` in {0, 1, 2}.

    Orders 0 and 1 use the closed-form coefficients of
    :func:`order1_coefficients`.  Order 2 is the Taylor truncation of the exact
    elements of :func:`build_exact_grwa`.  The bare ``-xi`` bond is kept at
    every order.
    """
    params.require_single_tls("build_order_n")
    if n not in (0, 1, 2):
        raise ParameterError(f"order must be 0, 1 or 2 (use build_exact_grwa), got {n}")
    if n == 2:
        el = _taylor_elements(params, 2)
        sites, onsite, hop, _ = _free_chain(params, 2)
        pair = el["pair"].copy()
        np.fill_diagonal(pair, 0.0)
        pair = 0.5 * (pair + pair.T)
        return SingleExcitationHamiltonian(
            sites=sites, onsite=onsite + el["shift"], hop=hop + pair,
            tls_level=float(el["level"][0]), tls_coupling=el["coupling"],
            lead_onsite=params.omega, lead_hop=-params.xi, range=2, method_tag="order2")
    co = order1_coefficients(params)
    sites, onsite, hop, coupling = _free_chain(params, 1)
    onsite[1] += co.w1g0 - co.w0g
    coupling[1] = co.j0
    if n == 1:
        hop[1, 0] = hop[0, 1] = hop[1, 2] = hop[2, 1] = -params.xi + co.w1g1
        coupling[0] = coupling[2] = co.j1
    return SingleExcitationHamiltonian(
        sites=sites, onsite=onsite, hop=hop, tls_level=co.w0e - co.w0g,
        tls_coupling=coupling, lead_onsite=params.omega, lead_hop=-params.xi,
        range=1, method_tag=f"order{n}")


def build_rwa(params: ModelParams) -> SingleExcitationHamiltonian:
    """Bare chain with the TLS coupled to site 0 by ``lam`` (no polaron frame)."""
    params.require_single_tls("build_rwa")
    sites, onsite, hop, coupling = _free_chain(params, 0)
    coupling[0] = params.lam
    return SingleExcitationHamiltonian(
        sites=sites, onsite=onsite, hop=hop, tls_level=params.Omega,
        tls_coupling=coupling, lead_onsite=params.omega, lead_hop=-params.xi,
        range=0, method_tag="rwa")


def strong_coupling_shift(params: ModelParams) -> float:
    """Leading site-0 shift ``(2 Omega lam^2/omega^2) exp(-2 lam^2/omega^2)``."""
    x = params.lam * params.lam / (params.omega * params.omega)
    return 2.0 * params.Omega * x * math.exp(-2.0 * x)


def check_strong_coupling(params: ModelParams) -> float:
    """Return ``(lam/omega)^2 exp(-2 lam^2/omega^2)``, warning above the limit."""
    x = params.lam * params.lam / (params.omega * params.omega)
    small = x * math.exp(-2.0 * x)
    if small > STRONG_COUPLING_LIMIT:
        warnings.warn(f"strong-coupling parameter {small:.3g} exceeds {STRONG_COUPLING_LIMIT}",
                      StrongCouplingWarning, stacklevel=3)
    return small


def strong_coupling_reduction(params: ModelParams) -> SingleExcitationHamiltonian:
    """Free chain with only the site-0 frequency shifted; the TLS drops out."""
    params.require_single_tls("strong_coupling_reduction")
    check_strong_coupling(params)
    sites, onsite, hop, coupling = _free_chain(params, 0)
    onsite[0] += strong_coupling_shift(params)
    return SingleExcitationHamiltonian(
        sites=sites, onsite=onsite, hop=hop, tls_level=None, tls_coupling=coupling,
        lead_onsite=params.omega, lead_hop=-params.xi, range=0,
        method_tag="strong-coupling")


def adiabatic_band_energies(params: ModelParams, pa: PolaronAmplitudes, k):
    """Adiabatic one-photon branches ``E_+(k)``, ``E_-(k)``.

    ``E_pm = omega - 2 xi cos k +- (Omega/2) F(k)`` with ``F`` the diagonal
    element of the even displacement part in the one-photon state along
    ``b(k) = sum_l beta_l e^{ikl}``, i.e. ``G <1|D(b)|1> / <0|D(b)|0>``.
    Energies are absolute (no ground-state offset).
    """
    params.require_single_tls("adiabatic_band_energies")
    k = np.asarray(k, dtype=float)
    c = params.tls_sites[0]
    G = gaussian_factor(pa)
    betas = -2.0 * pa.alphas
    phase = np.exp(1j * np.multiply.outer(k, pa.sites - c))
    b = np.abs(phase @ betas)
    F = np.vectorize(lambda x: G * displacement_overlap(1, 1, x) / displacement_overlap(0, 0, x))(b)
    base = dispersion(params, k)
    half = 0.5 * params.Omega * F
    return base + half, base - half
