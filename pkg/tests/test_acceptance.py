"""Acceptance criteria 1-12 at their stated tolerances.

Each test records a PASS/FAIL line printed in the terminal summary.  Criteria
the method cannot meet are marked ``xfail(strict=True)`` at the unchanged
tolerance, so they report honestly and an unexpected pass is flagged.
"""
import math
from functools import lru_cache

import numpy as np
import pytest

from grwa.effective import build_order_n, strong_coupling_shift
from grwa.fock import intraband_selection_check
from grwa.model import ModelParams
from grwa.polaron import (alpha_profile, integral_identity_check, residuals, solve_alpha_closed,
                          solve_alpha_multi, solve_alpha_recursion)
from grwa.rabi import RabiParams, rabi_adiabatic, rabi_exact, rabi_grwa, rabi_jc
from grwa.scattering import closed_form_order1, closed_form_strong, default_k_grid, solve_scattering, sweep

FIG3 = {"a": ModelParams(xi=0.04, Omega=1.0, lam=0.04), "b": ModelParams(xi=0.04, Omega=0.4, lam=1.0),
        "c": ModelParams(xi=0.04, Omega=1.0, lam=1.6), "d": ModelParams(xi=0.04, Omega=0.4, lam=2.0)}
FIG5 = {"a": ModelParams(xi=0.002, Omega=1.0, lam=1.6), "b": ModelParams(xi=0.03, Omega=0.4, lam=1.4),
        "c": ModelParams(xi=0.04, Omega=1.0, lam=2.0)}
WINDOW = default_k_grid(100, 0.2 * math.pi, 0.8 * math.pi)
NUMERIC_GRID = default_k_grid(50)     # ~1 s per point at cp = 3
FULL_GRID = default_k_grid(200)

# every sweep computed here, for the flux criterion: (label, rows, tolerance)
SWEEPS = []


@lru_cache(maxsize=None)
def run(params, method, grid_name):
    grid = {"window": WINDOW, "numeric": NUMERIC_GRID, "full": FULL_GRID}[grid_name]
    rows = sweep(params, method, grid)
    assert all(r.error is None for r in rows), [r.error for r in rows if r.error]
    tol = 1e-6 if method.startswith("numeric") else 1e-8
    SWEEPS.append((f"{method}@{params.Omega:g},{params.lam:g},{params.xi:g}", rows, tol))
    return rows


def probs(rows):
    return np.array([r.refl_prob for r in rows])


def max_gap(a, b):
    return float(np.max(np.abs(probs(a) - probs(b))))


def test_criterion_01_strong_coupling_ratios(record):
    targets = {"a": (15.3, 0.05), "b": (1.04, 0.01), "c": (0.067, 0.002)}
    ratios = {key: strong_coupling_shift(FIG5[key]) / FIG5[key].xi for key in targets}
    ok = all(abs(ratios[key] - t) <= tol for key, (t, tol) in targets.items())
    record(1, ok, "shift/xi = 15.3, 1.04, 0.067",
           ", ".join(f"{ratios[key]:.4g}" for key in "abc"))
    assert ok


def test_criterion_02_strong_coupling_limits(record):
    a_closed = probs([closed_form_strong(FIG5["a"], k) for k in WINDOW]).min()
    a_num = probs(run(FIG5["a"], "numeric-cp2", "window")).min()
    c_closed = probs([closed_form_strong(FIG5["c"], k) for k in WINDOW]).max()
    c_num = probs(run(FIG5["c"], "numeric-cp2", "window")).max()
    ok = a_closed > 0.9 and a_num > 0.9 and c_closed < 0.05 and c_num < 0.05
    record(2, ok, "set (a) min |r|^2 > 0.9, set (c) max |r|^2 < 0.05",
           f"a: {a_closed:.4f}/{a_num:.4f}, c: {c_closed:.2e}/{c_num:.2e}")
    assert ok


def test_criterion_03_closed_form_vs_solver(record):
    worst = 0.0
    for p in FIG3.values():
        h = build_order_n(p, 1)
        worst = max(worst, max(abs(closed_form_order1(p, k).r - solve_scattering(h, k).r) for k in FULL_GRID))
    record(3, worst < 1e-8, "|r_closed - r_solver| < 1e-8", f"{worst:.2e}")
    assert worst < 1e-8


def test_criterion_04_grwa_vs_numerics(record):
    p = FIG3["a"]
    num = run(p, "numeric-cp3", "numeric")
    d1 = max_gap(run(p, "order1", "numeric"), num)
    d2 = max_gap(run(p, "rwa", "numeric"), num)
    ok = d1 < 0.05 and d2 < 0.05
    record(4, ok, "fig3(a) order1 and rwa vs numeric-cp3 < 0.05", f"{d1:.4f}, {d2:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="cp2 and cp3 differ by more than the limits; see the decision ledger")
def test_criterion_05_cutoff_convergence(record):
    da = max_gap(run(FIG3["a"], "numeric-cp2", "numeric"), run(FIG3["a"], "numeric-cp3", "numeric"))
    dc = max_gap(run(FIG3["c"], "numeric-cp2", "numeric"), run(FIG3["c"], "numeric-cp3", "numeric"))
    ok = da < 0.02 and dc < 0.1
    record(5, ok, "|cp2 - cp3| < 0.02 at fig3(a), < 0.1 at fig3(c)", f"{da:.4f}, {dc:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="order1 and order2 differ by more than 0.02 at fig3(c,d); see ledger")
def test_criterion_06_order_consistency(record):
    gaps = {key: max_gap(run(p, "order1", "full"), run(p, "order2", "full")) for key, p in FIG3.items()}
    ok = all(g < 0.02 for g in gaps.values())
    record(6, ok, "|order1 - order2| < 0.02 at all fig3 sets",
           ", ".join(f"{key}: {g:.4f}" for key, g in gaps.items()))
    assert ok


def test_criterion_07_flux_conservation(record):
    # make sure the analytic sweeps exist even if earlier tests were deselected
    for p in FIG3.values():
        for method in ("order0", "order1", "order2", "exact-grwa", "rwa"):
            run(p, method, "full")
    for p in FIG5.values():
        run(p, "strong-coupling", "full")
        run(p, "numeric-cp2", "window")
    worst = {}
    bad = []
    for label, rows, tol in SWEEPS:
        m = max(r.flux_residual for r in rows)
        worst[tol] = max(worst.get(tol, 0.0), m)
        if m >= tol:
            bad.append(label)
    relation = 0.0
    for p in list(FIG3.values()) + list(FIG5.values()):
        for method in ("order1", "rwa", "strong-coupling"):
            relation = max(relation, max(abs(r.t - 1 - r.r) for r in run(p, method, "full")))
    ok = not bad and relation < 1e-8
    record(7, ok, "flux < 1e-8 (analytic) / 1e-6 (numeric); |t - 1 - r| < 1e-8",
           f"analytic {worst.get(1e-8, 0):.1e}, numeric {worst.get(1e-6, 0):.1e}, t-1-r {relation:.1e}")
    assert ok, bad


def test_criterion_08_polaron_recursion(record):
    rng = np.random.default_rng(2024)
    worst_rec = worst_res = 0.0
    for _ in range(5):
        p = ModelParams(xi=float(rng.uniform(-0.2, 0.2)), Omega=float(rng.uniform(0, 2)),
                        lam=float(rng.uniform(-2, 2)))
        rec = solve_alpha_recursion(p, 200)
        worst_rec = max(worst_rec, float(np.max(np.abs(rec.alphas - alpha_profile(p, rec.sites)))))
        worst_res = max(worst_res, float(np.max(np.abs(residuals(p, np.arange(-50, 51))))))
    ok = worst_rec < 1e-12 and worst_res < 1e-12
    record(8, ok, "recursion vs closed form < 1e-12, residuals < 1e-12", f"{worst_rec:.1e}, {worst_res:.1e}")
    assert ok


def test_criterion_09_intraband_selection(record):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(5):
        p = ModelParams(xi=float(rng.uniform(0.01, 0.1)), Omega=float(rng.uniform(0.2, 1.5)),
                        lam=float(rng.uniform(0.1, 2.0)))
        worst = max(worst, intraband_selection_check(p).same_band_max)
    record(9, worst < 1e-10, "same-band +/- elements < 1e-10", f"{worst:.1e}")
    assert worst < 1e-10


def test_criterion_10_integral_identity_and_multi_tls(record):
    worst = 0.0
    for p in (ModelParams(xi=0.04, lam=0.04), ModelParams(xi=0.2, Omega=0.4, lam=1.0)):
        for j in range(6):
            worst = max(worst, integral_identity_check(p, j)[2])
    p = ModelParams(xi=0.1, lam=0.7)
    same = np.array_equal(solve_alpha_multi(p).alphas, solve_alpha_closed(p).alphas)
    ok = worst < 1e-10 and same
    record(10, ok, "integral identity < 1e-10; one-TLS multi form exact", f"{worst:.1e}, exact={same}")
    assert ok


def _rabi_parts():
    p = RabiParams(1.0, 1.0, 0.01)
    g, j = rabi_grwa(p, 10).levels, rabi_jc(p, 10).levels
    jc_rel = float(np.max(np.abs(g - j) / np.abs(j)))
    p = RabiParams(1.0, 0.01, 1.0)
    ad = float(np.max(np.abs(rabi_grwa(p, 10).levels - rabi_adiabatic(p, 10).levels)))
    p = RabiParams(1.0, 1.0, 0.5)
    ex = float(np.max(np.abs(rabi_grwa(p, 6).levels - rabi_exact(p, 6).levels)))
    return jc_rel, ad, ex


def test_criterion_11_rabi_limits():
    jc_rel, ad, _ = _rabi_parts()
    assert jc_rel < 1e-3
    assert ad < 1e-2


@pytest.mark.xfail(strict=True, reason="GRWA ground level 0.08 above exact at lam = 0.5; see ledger")
def test_criterion_11_rabi_benchmark(record):
    jc_rel, ad, ex = _rabi_parts()
    ok = jc_rel < 1e-3 and ad < 1e-2 and ex < 0.05
    record(11, ok, "GRWA vs JC rel < 1e-3, vs adiabatic < 1e-2, vs exact (6 levels) < 0.05",
           f"{jc_rel:.1e}, {ad:.1e}, {ex:.4f}")
    assert ok


def test_criterion_12_very_strong_coupling_transparency(record):
    p = ModelParams(xi=0.04, Omega=1.0, lam=3.0)
    o1 = probs(run(p, "order1", "window")).max()
    num = probs(run(p, "numeric-cp2", "window")).max()
    ok = o1 < 0.05 and num < 0.05
    record(12, ok, "max |r|^2 < 0.05 at lam = 3", f"{o1:.1e}, {num:.1e}")
    assert ok
