"""Displacement (polaron) transform of the resonator array.

The unitary ``U = prod_j exp[alpha_j sigma_x (a_j^+ - a_j)]`` removes the
linear photon/two-level coupling from ``H_C + H_I``.  The coefficients solve

    omega alpha_j - xi (alpha_{j+1} + alpha_{j-1}) + lam * [j is a TLS site] = 0

which for a single two-level system at site ``c`` gives the geometric profile
``alpha_j = alpha_0 q^{|j-c|}`` with ``q = xi/omega_1`` and
``omega_1 = (omega + sqrt(omega^2 - 4 xi^2))/2``.

Also provides the single-mode displacement overlap ``<m|exp(beta(a^+ - a))|n>``
(Franck-Condon factor) from which every rotated-frame matrix element is built.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from .model import ModelParams, ParameterError

DEFAULT_TRUNC_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


@dataclass(frozen=True, eq=False)
class PolaronAmplitudes:
    """Displacement coefficients on the finite window ``sites``.

    ``alphas[i]`` is the coefficient of site ``sites[i]``; outside the window
    every coefficient is below ``trunc_tol * max|alpha|``.
    """

    sites: np.ndarray
    alphas: np.ndarray
    omega1: float
    decay_ratio: float
    range: int
    trunc_tol: float
    tls_sites: tuple[int, ...] = (0,)

    def alpha(self, j: int) -> float:
        i = j - int(self.sites[0])
        if 0 <= i < len(self.sites):
            return float(self.alphas[i])
        return 0.0

    def as_dict(self) -> dict[int, float]:
        return {int(j): float(a) for j, a in zip(self.sites, self.alphas)}

    def on_sites(self, sites) -> np.ndarray:
        """Coefficients on arbitrary ``sites`` (zero outside the window)."""
        return np.array([self.alpha(int(j)) for j in sites])


@dataclass(frozen=True, eq=False)
class DisplacementVector:
    """Multimode displacement amplitudes ``beta_j`` and ``exp(-sum beta^2/2)``."""

    sites: np.ndarray
    betas: np.ndarray
    gaussian_factor: float

    @classmethod
    def from_amplitudes(cls, pa: PolaronAmplitudes) -> "DisplacementVector":
        betas = -2.0 * pa.alphas
        return cls(sites=pa.sites.copy(), betas=betas,
                   gaussian_factor=float(np.exp(-0.5 * np.dot(betas, betas))))


def omega1(omega: float, xi):
    """``(omega + sqrt(omega^2 - 4 xi^2))/2``; complex ``xi`` is accepted."""
    disc = omega * omega - 4.0 * xi * xi
    if np.iscomplexobj(xi):
        return 0.5 * (omega + np.sqrt(disc + 0j))
    return 0.5 * (omega + math.sqrt(disc))


def _decay(omega: float, xi):
    w1 = omega1(omega, xi)
    return w1, xi / w1


def _peak(params: ModelParams, w1, q):
    # alpha at the TLS site itself
    return params.lam * w1 / (2.0 * params.xi ** 2 - params.omega * w1)


def _range(q: float, trunc_tol: float) -> int:
    if q == 0.0:
        return 0
    return max(0, int(math.ceil(math.log(trunc_tol) / math.log(abs(q)))))


def solve_alpha_closed(params: ModelParams, trunc_tol: float = DEFAULT_TRUNC_TOL) -> PolaronAmplitudes:
    """Closed-form coefficients for a single two-level system.

    Examples
    --------
    >>> pa = solve_alpha_closed(ModelParams(xi=0.0, lam=0.5))
    >>> pa.alpha(0), pa.alpha(1)
    (-0.5, 0.0)
    """
    params.require_single_tls("solve_alpha_closed (use solve_alpha_multi)")
    return solve_alpha_multi(params, trunc_tol)


def alpha_profile(params: ModelParams, sites) -> np.ndarray:
    """Closed-form coefficients evaluated on arbitrary ``sites`` (no truncation)."""
    w1, q = _decay(params.omega, params.xi)
    a0 = _peak(params, w1, q)
    sites = np.asarray(sites)
    dist = np.abs(sites[:, None] - np.asarray(params.tls_sites)[None, :])
    if q == 0.0:
        # explicit branch: 0**0 = 1 on the TLS sites, zero elsewhere
        profile = (dist == 0).astype(float)
    else:
        profile = q ** dist
    return a0 * profile.sum(axis=1)


def solve_alpha_multi(params: ModelParams, trunc_tol: float = DEFAULT_TRUNC_TOL) -> PolaronAmplitudes:
    """Superposed geometric profiles, one per two-level system site.

    The window extends ``range`` sites beyond the outermost TLS sites, where
    ``|q|**range < trunc_tol``.
    """
    w1, q = _decay(params.omega, params.xi)
    R = _range(q, trunc_tol)
    c = params.tls_sites
    sites = np.arange(c[0] - R, c[-1] + R + 1)
    return PolaronAmplitudes(sites=sites, alphas=alpha_profile(params, sites), omega1=w1,
                             decay_ratio=q, range=R, trunc_tol=trunc_tol,
                             tls_sites=params.tls_sites)


def solve_alpha_recursion(params: ModelParams, N: int) -> PolaronAmplitudes:
    """Solve the defining equations on ``|j| < N`` with ``alpha_{+-N} = 0``.

    The ``2N - 1`` unknowns form a symmetric tridiagonal system solved in
    banded form.  Used as an independent check of the closed form.
    """
    params.require_single_tls("solve_alpha_recursion")
    if N < 1:
        raise ParameterError(f"cut-off half-length must be >= 1, got {N}")
    c = params.tls_sites[0]
    n = 2 * N - 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -params.xi
    ab[1, :] = params.omega
    ab[2, :-1] = -params.xi
    rhs = np.zeros(n)
    rhs[N - 1] = -params.lam
    try:
        alphas = linalg.solve_banded((1, 1), ab, rhs)
    except linalg.LinAlgError as exc:
        raise ParameterError(f"singular cut-off system at N={N}: {exc}") from exc
    w1, q = _decay(params.omega, params.xi)
    return PolaronAmplitudes(sites=np.arange(c - N + 1, c + N), alphas=alphas, omega1=w1,
                             decay_ratio=q, range=N - 1, trunc_tol=0.0,
                             tls_sites=params.tls_sites)


def residuals(params: ModelParams, sites, alphas=None) -> np.ndarray:
    """Residuals of the defining equations at ``sites``.

    ``alphas`` is a callable ``sites -> coefficients``; by default the
    untruncated closed form.
    """
    alphas = alphas or (lambda s: alpha_profile(params, s))
    sites = np.asarray(sites)
    res = (params.omega * alphas(sites)
           - params.xi * (alphas(sites + 1) + alphas(sites - 1)))
    for c in params.tls_sites:
        res = res + params.lam * (sites == c)
    return res


def integral_identity_check(params: ModelParams, j: int, epsabs: float = 1e-14):
    """Compare the lattice Green-function integral with the closed form.

    ``lhs = sum_c (lam/2pi) int_{-pi}^{pi} dk e^{ik(j-c)} / (omega - 2 xi cos k)``
    equals ``-alpha_j``: the integral solves ``(omega - xi K) v = lam e_c`` while
    the displacement solves the same system with ``-lam``.

    Returns
    -------
    lhs, rhs, residual : float
    """
    lhs = 0.0
    for c in params.tls_sites:
        d = abs(j - c)
        with warnings.catch_warnings():
            # roundoff at this tolerance is expected; the error estimate is checked below
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(lambda k: 1.0 / (params.omega - 2.0 * params.xi * math.cos(k)),
                                      0.0, math.pi, weight="cos", wvar=d,
                                      epsabs=epsabs, epsrel=1e-13, limit=200)
        if err > 1e3 * epsabs + 1e-12 * abs(val):
            raise QuadratureError(f"quadrature at j={j} reached error estimate {err:.3g}")
        lhs += params.lam * val / math.pi
    w1, q = _decay(params.omega, params.xi)
    a0 = _peak(params, w1, q)
    rhs = 0.0
    for c in params.tls_sites:
        d = abs(j - c)
        rhs -= a0 * (1.0 if d == 0 else q ** d)
    return lhs, rhs, abs(lhs - rhs)


def gaussian_factor(pa: PolaronAmplitudes) -> float:
    """``exp(-2 sum_j alpha_j^2)``, the vacuum overlap of the doubled displacement."""
    return float(np.exp(-2.0 * math.fsum(pa.alphas ** 2)))


def _laguerre_integer(m: int, n: int, a: int, b: int) -> int:
    # n! b^n sum_i (-1)^i C(m, n-i) x^i / i!  with x = a/b, an exact integer
    total = 0
    fall = 1                      # n!/i! built from i = n downwards
    for i in range(n, -1, -1):
        total += (-1) ** i * math.comb(m, n - i) * fall * a ** i * b ** (n - i)
        fall *= i if i else 1
    return total


@lru_cache(maxsize=65536)
def _overlap_ordered(m: int, n: int, beta: float) -> float:
    # <m|D(beta)|n> for m >= n
    p = m - n
    a, b = Fraction(beta * beta).as_integer_ratio()
    s_int = _laguerre_integer(m, n, a, b)
    if s_int == 0:
        return 0.0
    s = Fraction(s_int, math.factorial(n) * b ** n)
    log_rest = 0.5 * (math.lgamma(n + 1) - math.lgamma(m + 1)) - 0.5 * beta * beta
    try:
        value = float(s) * beta ** p * math.exp(log_rest)
        if math.isfinite(value) and value != 0.0:
            return value
    except OverflowError:
        pass
    # magnitudes out of double range individually: combine in log space
    log_abs = (math.log(abs(s.numerator)) - math.log(s.denominator)
               + (p * math.log(abs(beta)) if p else 0.0) + log_rest)
    sign = (1 if s > 0 else -1) * (-1 if (beta < 0 and p % 2) else 1)
    return sign * math.exp(log_abs)


def displacement_overlap(m: int, n: int, beta: float) -> float:
    """Fock-space matrix element ``<m| exp(beta (a^+ - a)) |n>`` for real ``beta``.

    The finite (associated Laguerre) sum is evaluated exactly in integer
    arithmetic, so there is no cancellation even for large ``m, n``.
    Satisfies ``overlap(m, n, -beta) == (-1)**(m - n) * overlap(m, n, beta)``.

    Examples
    --------
    >>> round(displacement_overlap(0, 0, 1.0), 6)
    0.606531
    >>> displacement_overlap(1, 1, 1.0)
    0.0
    """
    if m < 0 or n < 0:
        raise ValueError("Fock indices must be non-negative")
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError(f"displacement must be finite, got {beta!r}")
    if beta == 0.0:
        return 1.0 if m == n else 0.0
    if m >= n:
        return _overlap_ordered(m, n, beta)
    return (-1.0) ** (n - m) * _overlap_ordered(n, m, beta)


def overlap_table(cutoff: int, beta: float) -> np.ndarray:
    """``T[m, n] = <m|D(beta)|n>`` for ``0 <= m, n <= cutoff``."""
    t = np.empty((cutoff + 1, cutoff + 1))
    for m in range(cutoff + 1):
        for n in range(cutoff + 1):
            t[m, n] = displacement_overlap(m, n, beta)
    return t
