"""Invariant suite behind ``grwa validate``.

Each check returns a :class:`CheckResult`; failures are data, not exceptions.
``quick`` skips the three-excitation numeric runs.
"""
from __future__ import annotations

import contextlib
import math
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import scattering
from .effective import (build_exact_grwa, build_order_n, order1_coefficients,
                        strong_coupling_shift)
from .fock import NumericScatterer, intraband_selection_check
from .model import ModelParams, band_info, dispersion
from .polaron import (displacement_overlap, integral_identity_check, residuals,
                      solve_alpha_closed, solve_alpha_recursion)
from .rabi import RabiParams, rabi_adiabatic, rabi_grwa, rabi_jc
from .scattering import closed_form_order1, closed_form_strong, default_k_grid, sweep

FIG3 = {"fig3a": (1.0, 0.04), "fig3b": (0.4, 1.0), "fig3c": (1.0, 1.6), "fig3d": (0.4, 2.0)}
FAULTS = ("closed-form-order1",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _fig3(name):
    Om, lam = FIG3[name]
    return ModelParams(xi=0.04, Omega=Om, lam=lam)


def check_band_structure():
    p = ModelParams()
    ks = np.linspace(-math.pi, math.pi, 101)
    e = dispersion(p, ks)
    dev = max(float(np.max(np.abs(e - dispersion(p, -ks)))),
              float(np.max(np.maximum(e - (p.omega + 2 * p.xi), (p.omega - 2 * p.xi) - e))),
              max(abs(band_info(p, N).width - 4 * N * p.xi) for N in range(4)))
    return max(dev, 0.0), 1e-15


def check_alpha_recursion():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        p = ModelParams(xi=float(rng.uniform(-0.2, 0.2)), lam=float(rng.uniform(-2, 2)),
                        Omega=float(rng.uniform(0, 2)))
        closed = solve_alpha_closed(p)
        rec = solve_alpha_recursion(p, 200)
        worst = max(worst, float(np.max(np.abs(rec.on_sites(closed.sites) - closed.alphas))))
        worst = max(worst, float(np.max(np.abs(residuals(p, np.arange(-40, 41))))))
    return worst, 1e-12


def check_integral_identity():
    worst = 0.0
    for p in (ModelParams(xi=0.04, lam=0.04), ModelParams(xi=0.2, lam=1.0)):
        for j in range(6):
            worst = max(worst, integral_identity_check(p, j)[2])
    return worst, 1e-10


def check_overlap_unitarity():
    worst = 0.0
    for n in (0, 1, 2):
        for beta in (0.3, 1.0):
            total = math.fsum(displacement_overlap(m, n, beta) ** 2 for m in range(60))
            worst = max(worst, abs(total - 1.0))
            worst = max(worst, max(abs(displacement_overlap(m, n, -beta)
                                       - (-1) ** (m - n) * displacement_overlap(m, n, beta))
                                   for m in range(10)))
    return worst, 1e-12


def check_closed_form_vs_solver():
    ks = default_k_grid(200)
    worst = 0.0
    for name in FIG3:
        p = _fig3(name)
        h = build_order_n(p, 1)
        for k in ks:
            worst = max(worst, abs(closed_form_order1(p, k).r - scattering.solve_scattering(h, k).r))
    return worst, 1e-8


def check_flux_conservation():
    ks = default_k_grid(60, 0.05 * math.pi, 0.95 * math.pi)
    worst = 0.0
    for name in FIG3:
        p = _fig3(name)
        for method in ("order0", "order1", "order2", "exact-grwa", "rwa"):
            for res in sweep(p, method, ks):
                worst = max(worst, res.flux_residual)
    return worst, 1e-8


def check_point_scatterer_relation():
    ks = default_k_grid(60, 0.05 * math.pi, 0.95 * math.pi)
    worst = 0.0
    p = _fig3("fig3b")
    for method in ("order1", "rwa", "strong-coupling"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rows = sweep(p, method, ks)
        worst = max(worst, max(abs(r.t - 1 - r.r) for r in rows))
    return worst, 1e-8


def check_strong_coupling_ratios():
    sets = [((1.0, 1.6, 0.002), 15.3, 0.05), ((0.4, 1.4, 0.03), 1.04, 0.01), ((1.0, 2.0, 0.04), 0.067, 0.002)]
    worst = 0.0
    for (Om, lam, xi), target, tol in sets:
        ratio = strong_coupling_shift(ModelParams(xi=xi, Omega=Om, lam=lam)) / xi
        worst = max(worst, abs(ratio - target) / tol)
    return worst, 1.0


def check_strong_coupling_limits():
    ks = default_k_grid(100, 0.2 * math.pi, 0.8 * math.pi)
    a = ModelParams(xi=0.002, Omega=1.0, lam=1.6)
    c = ModelParams(xi=0.04, Omega=1.0, lam=2.0)
    lo = min(closed_form_strong(a, k).refl_prob for k in ks)
    hi = max(closed_form_strong(c, k).refl_prob for k in ks)
    return max(0.9 - lo, hi - 0.05) + 1.0, 1.0


def check_order1_coefficients():
    p = ModelParams(xi=1e-4, Omega=1.0, lam=0.04)
    co = order1_coefficients(p)
    ex = build_exact_grwa(p)
    return abs(abs(ex.coupling_at(0)) - co.j0) / co.j0, 1e-3


def check_numeric_cp2_matches_grwa():
    p = _fig3("fig3c")
    ks = default_k_grid(8)
    solver = NumericScatterer(p, cp=2)
    h = build_exact_grwa(p)
    worst = max(abs(solver.solve(k).r - scattering.solve_scattering(h, k).r) for k in ks)
    return float(worst), 1e-9


def check_intraband_selection():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(2):
        p = ModelParams(xi=0.04, Omega=float(rng.uniform(0.2, 1.5)), lam=float(rng.uniform(0.1, 2.0)))
        worst = max(worst, intraband_selection_check(p).same_band_max)
    return worst, 1e-10


def check_rabi_limits():
    jc_p = RabiParams(1.0, 1.0, 0.01)
    g, j = rabi_grwa(jc_p, 10).levels, rabi_jc(jc_p, 10).levels
    rel = float(np.max(np.abs(g - j) / np.abs(j)))
    ad_p = RabiParams(1.0, 0.01, 1.0)
    dev = float(np.max(np.abs(rabi_grwa(ad_p, 10).levels - rabi_adiabatic(ad_p, 10).levels)))
    return max(rel / 1e-3, dev / 1e-2), 1.0


def check_fig3a_numeric_cp3():
    p = _fig3("fig3a")
    ks = default_k_grid(25)
    num = sweep(p, "numeric-cp3", ks)
    o1 = sweep(p, "order1", ks)
    return max(abs(a.refl_prob - b.refl_prob) for a, b in zip(num, o1)), 0.05


QUICK_CHECKS = {
    "band-structure": check_band_structure,
    "alpha-recursion": check_alpha_recursion,
    "integral-identity": check_integral_identity,
    "overlap-unitarity-parity": check_overlap_unitarity,
    "order1-closed-form-vs-solver": check_closed_form_vs_solver,
    "flux-conservation": check_flux_conservation,
    "point-scatterer-relation": check_point_scatterer_relation,
    "strong-coupling-ratios": check_strong_coupling_ratios,
    "strong-coupling-limits": check_strong_coupling_limits,
    "order1-coefficients": check_order1_coefficients,
    "numeric-cp2-equals-exact-grwa": check_numeric_cp2_matches_grwa,
    "intraband-selection": check_intraband_selection,
    "rabi-limits": check_rabi_limits,
}
FULL_CHECKS = {**QUICK_CHECKS, "fig3a-numeric-cp3-vs-order1": check_fig3a_numeric_cp3}


@contextlib.contextmanager
def injected_fault(name: str | None):
    """Temporarily perturb a closed-form coefficient (mutation canary)."""
    if name is None:
        yield
        return
    if name not in FAULTS:
        raise ValueError(f"unknown fault {name!r}; available: {', '.join(FAULTS)}")
    original = scattering._order1_terms

    def perturbed(params, k):
        num, den = original(params, k)
        return num * (1.0 + 1e-6), den

    scattering._order1_terms = perturbed
    try:
        yield
    finally:
        scattering._order1_terms = original


def run_validate(level: str = "quick", fault: str | None = None) -> list[CheckResult]:
    """Run the invariant suite; ``level`` is ``quick`` or ``full``."""
    if level not in ("quick", "full"):
        raise ValueError(f"level must be quick or full, got {level!r}")
    checks = QUICK_CHECKS if level == "quick" else FULL_CHECKS
    results = []
    with injected_fault(fault):
        for name, fn in checks.items():
            t0 = time.perf_counter()
            try:
                value, threshold = fn()
                passed = bool(value < threshold)
                detail = ""
            except Exception as exc:  # a crashing check is a failed check
                value, threshold, passed, detail = math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(name, passed, float(value), float(threshold),
                                       time.perf_counter() - t0, detail))
    return results
