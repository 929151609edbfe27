"""Single-photon scattering through a one-excitation Hamiltonian.

A photon ``e^{ikj}`` arrives from the left.  Outside the scattering window the
amplitude is ``e^{ikj} + r e^{-ikj}`` (left) and ``t e^{ikj}`` (right).  The
window amplitudes, the TLS amplitude, ``r`` and ``t`` follow from one small
dense linear system.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .effective import (SingleExcitationHamiltonian, build_exact_grwa, build_order_n,
                        build_rwa, check_strong_coupling, strong_coupling_reduction,
                        strong_coupling_shift)
from .model import ModelParams, ParameterError

#: Momenta closer than this to 0 or pi are rejected.
BAND_EDGE_GUARD = 1e-3
#: Extra matching sites beyond the Hamiltonian range.
MATCH_BUFFER = 8
#: Condition numbers above this are reported as singular.
MAX_CONDITION = 1e12

ANALYTIC_METHODS = ("order0", "order1", "order2", "exact-grwa", "rwa", "strong-coupling")
NUMERIC_METHODS = ("numeric-cp2", "numeric-cp3")
ALL_METHODS = ANALYTIC_METHODS + NUMERIC_METHODS


class ScatteringError(RuntimeError):
    """The scattering problem could not be solved at this momentum."""


@dataclass(frozen=True)
class ScatteringAmplitudes:
    """Reflection and transmission at one momentum.

    ``error`` is ``None`` for a successful point; failed sweep points carry
    the message and NaN amplitudes.
    """

    k: float
    r: complex
    t: complex
    method_tag: str
    flux_residual: float
    error: str | None = None

    @property
    def refl_prob(self) -> float:
        return self.r.real ** 2 + self.r.imag ** 2

    @property
    def trans_prob(self) -> float:
        return self.t.real ** 2 + self.t.imag ** 2

    @classmethod
    def make(cls, k, r, t, method_tag) -> "ScatteringAmplitudes":
        r, t = complex(r), complex(t)
        flux = abs(abs(r) ** 2 + abs(t) ** 2 - 1.0)
        return cls(k=float(k), r=r, t=t, method_tag=method_tag, flux_residual=flux)

    @classmethod
    def failed(cls, k, method_tag, message) -> "ScatteringAmplitudes":
        nan = complex(math.nan, math.nan)
        return cls(k=float(k), r=nan, t=nan, method_tag=method_tag,
                   flux_residual=math.nan, error=message)


def check_momentum(k: float) -> None:
    if not (BAND_EDGE_GUARD <= k <= math.pi - BAND_EDGE_GUARD):
        raise ScatteringError(
            f"k = {k!r} outside [{BAND_EDGE_GUARD}, pi - {BAND_EDGE_GUARD}] (band edge)")


def solve_scattering(h: SingleExcitationHamiltonian, k: float,
                     match: int | None = None) -> ScatteringAmplitudes:
    """Plane-wave matching solve for ``r`` and ``t`` at momentum ``k``.

    Parameters
    ----------
    h : SingleExcitationHamiltonian
    k : float
        Incoming momentum in ``(0, pi)``; requires ``h.lead_hop < 0``.
    match : int, optional
        Matching half-length ``M``; defaults to ``h.range + 8``.
    """
    check_momentum(k)
    if not h.lead_hop < 0:
        raise ScatteringError(f"lead hopping must be negative (xi > 0), got {h.lead_hop}")
    M = h.range + MATCH_BUFFER if match is None else match
    if M < h.range + 1:
        raise ParameterError(f"matching half-length {M} must exceed the range {h.range}")
    E = h.energy(k)
    n = 2 * M + 1
    tls = h.has_tls
    ir = n + tls
    it = ir + 1
    A = np.zeros((it + 1, it + 1), dtype=complex)
    b = np.zeros(it + 1, dtype=complex)

    # interior Hamiltonian on sites -M..M
    H = np.zeros((n, n))
    H[np.arange(n - 1), np.arange(1, n)] = H[np.arange(1, n), np.arange(n - 1)] = h.lead_hop
    np.fill_diagonal(H, h.lead_onsite)
    o = M - h.range
    w = slice(o, o + 2 * h.range + 1)
    H[w, w] = h.hop + np.diag(h.onsite)
    A[:n, :n] = E * np.eye(n) - H
    if tls:
        A[n, n] = E - h.tls_level
        A[w, n] = -h.tls_coupling
        A[n, w] = -h.tls_coupling

    # neighbours just outside: u_{-M-1} = e^{-ik(M+1)} + r e^{ik(M+1)}, u_{M+1} = t e^{ik(M+1)}
    ph = cmath.exp(1j * k * (M + 1))
    A[0, ir] = -h.lead_hop * ph
    b[0] = h.lead_hop / ph
    A[n - 1, it] = -h.lead_hop * ph
    # matching at the window edges
    pm = cmath.exp(1j * k * M)
    A[ir, 0] = 1.0
    A[ir, ir] = -pm
    b[ir] = 1.0 / pm
    A[it, n - 1] = 1.0
    A[it, it] = -pm

    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ScatteringError(f"singular scattering system at k={k:.6g} (condition number {cond:.3g})")
    x = np.linalg.solve(A, b)
    return ScatteringAmplitudes.make(k, x[ir], x[it], h.method_tag)


def _order1_terms(params: ModelParams, k: float):
    w, xi, Om, lam = params.omega, params.xi, params.Omega, params.lam
    E, c = cmath.exp, math.cos
    L2, w2 = lam * lam, w * w
    num = E(1j * k) * L2 * Om * (
        4 * L2 * xi * Om ** 2 * c(k)
        + 2 * E(4 * L2 / w2) * w ** 3 * (w2 + 2 * xi * w * c(k) - 4 * xi ** 2 - 4 * xi ** 2 * c(2 * k))
        + E(2 * L2 / w2) * Om * (8 * L2 * xi ** 2 + 2 * w2 * xi ** 2 - w ** 4
                                 - 4 * xi * w * (2 * L2 + w2) * c(k)
                                 + 2 * xi ** 2 * (4 * L2 + w2) * c(2 * k)))
    den = (-4 * E(2j * k) * L2 ** 2 * xi * Om ** 3
           + E(6 * L2 / w2) * (-1 + E(2j * k)) * xi * w ** 6 * (w - 2 * xi * c(k))
           + E(4 * L2 / w2) * w ** 3 * Om * (8 * E(3j * k) * L2 * xi ** 2
                                            + 2 * E(1j * k) * L2 * (4 * xi ** 2 - w2)
                                            + xi * w * (2 * L2 + w2)
                                            - E(2j * k) * xi * w * (6 * L2 + w2))
           + E(2j * k + 2 * L2 / w2) * L2 * Om ** 2 * (4 * xi * w * (2 * L2 + w2)
                                                      + (w ** 4 - 4 * xi ** 2 * w2 - 16 * L2 * xi ** 2) * c(k)
                                                      - 1j * w ** 4 * math.sin(k)))
    return num, den


def closed_form_order1(params: ModelParams, k: float) -> ScatteringAmplitudes:
    """Closed-form first-order amplitudes; ``t = r + 1``.

    The exponent of the last denominator term is ``2ik + 2 lam^2/omega^2``.
    """
    params.require_single_tls("closed_form_order1")
    check_momentum(k)
    num, den = _order1_terms(params, k)
    scale = abs(num) + params.omega ** 7 * 1e-300
    if den == 0 or abs(den) < 1e-14 * scale:
        raise ScatteringError(f"closed-form denominator vanishes at k={k!r}")
    r = num / den
    return ScatteringAmplitudes.make(k, r, r + 1.0, "order1")


def closed_form_strong(params: ModelParams, k: float, advisory: bool = True) -> ScatteringAmplitudes:
    """``r = -s/(s - 2i xi sin k)``, ``t = r + 1`` with the strong-coupling shift ``s``.

    ``advisory=False`` skips the regime warning (sweeps check it once).
    """
    params.require_single_tls("closed_form_strong")
    if advisory:
        check_strong_coupling(params)
    check_momentum(k)
    s = strong_coupling_shift(params)
    r = -s / (s - 2j * params.xi * math.sin(k))
    return ScatteringAmplitudes.make(k, r, r + 1.0, "strong-coupling")


def default_k_grid(n: int, lo: float = 0.0, hi: float = math.pi) -> np.ndarray:
    """``n`` cell midpoints of ``[lo, hi]`` (never hits the band edges)."""
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def hamiltonian_for(params: ModelParams, method: str) -> SingleExcitationHamiltonian:
    if method == "exact-grwa":
        return build_exact_grwa(params)
    if method in ("order0", "order1", "order2"):
        return build_order_n(params, int(method[-1]))
    if method == "rwa":
        return build_rwa(params)
    if method == "strong-coupling":
        return strong_coupling_reduction(params)
    raise ParameterError(f"no effective Hamiltonian for method {method!r}")


def _point_function(target, method: str, numeric_options: dict):
    if isinstance(target, SingleExcitationHamiltonian):
        return lambda k: solve_scattering(target, k)
    if not isinstance(target, ModelParams):
        raise ParameterError(f"sweep needs ModelParams or SingleExcitationHamiltonian, got {type(target)}")
    if method == "order1":
        return lambda k: closed_form_order1(target, k)
    if method == "strong-coupling":
        target.require_single_tls("closed_form_strong")
        check_strong_coupling(target)
        return lambda k: closed_form_strong(target, k, advisory=False)
    if method in NUMERIC_METHODS:
        from .fock import NumericScatterer
        solver = NumericScatterer(target, cp=int(method[-1]), **numeric_options)
        return solver.solve
    if method in ANALYTIC_METHODS:
        h = hamiltonian_for(target, method)
        return lambda k: solve_scattering(h, k)
    raise ParameterError(f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")


def sweep(target, method: str, k_grid, jobs: int = 1, **numeric_options) -> list[ScatteringAmplitudes]:
    """Amplitudes on ``k_grid`` in grid order.

    Parameters
    ----------
    target : ModelParams or SingleExcitationHamiltonian
        A Hamiltonian is solved directly; parameters are dispatched on
        ``method`` (``order1`` and ``strong-coupling`` use the closed forms).
    method : str
        One of :data:`ALL_METHODS`.
    k_grid : sequence of float
    jobs : int
        Worker threads; results do not depend on it.
    **numeric_options
        Passed to :class:`grwa.fock.NumericScatterer` (``chain_length``).

    Point failures become rows with ``error`` set; they do not abort the sweep.
    """
    ks = [float(k) for k in k_grid]
    if not ks:
        return []
    point = _point_function(target, method, numeric_options)
    tag = target.method_tag if isinstance(target, SingleExcitationHamiltonian) else method

    def run(k):
        try:
            if not math.isfinite(k):
                raise ScatteringError(f"non-finite momentum {k!r}")
            res = point(k)
            if res.method_tag != tag:
                res = ScatteringAmplitudes(res.k, res.r, res.t, tag, res.flux_residual)
            return res
        except (ScatteringError, ParameterError, np.linalg.LinAlgError) as exc:
            return ScatteringAmplitudes.failed(k, tag, str(exc))

    if jobs <= 1:
        return [run(k) for k in ks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, ks))
