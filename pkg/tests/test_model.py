import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grwa.model import ModelParams, ParameterError, WeakHoppingWarning, band_info, dispersion

omegas = st.floats(0.1, 10.0)
ratios = st.floats(-0.49, 0.49)


def test_defaults_are_valid():
    p = ModelParams()
    assert (p.omega, p.xi, p.Omega, p.lam, p.tls_sites) == (1.0, 0.04, 1.0, 0.04, (0,))
    assert p.single_tls


@pytest.mark.parametrize("kwargs", [
    {"omega": 0.0}, {"omega": -1.0}, {"xi": 0.5}, {"xi": -0.6}, {"Omega": -0.1},
    {"lam": math.nan}, {"xi": math.inf}, {"tls_sites": ()}, {"tls_sites": (2, 1)}, {"tls_sites": (0, 0)},
])
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ParameterError):
        ModelParams(**kwargs)


def test_large_hopping_warns():
    with pytest.warns(WeakHoppingWarning):
        ModelParams(xi=0.3)


def test_multi_tls_guard():
    p = ModelParams(tls_sites=(0, 3))
    assert not p.single_tls
    with pytest.raises(ParameterError):
        p.require_single_tls("thing")


def test_replace_and_dict():
    p = ModelParams().replace(lam=1.6)
    assert p.lam == 1.6
    assert p.as_dict()["lambda"] == 1.6


def test_band_widths_grow_linearly():
    p = ModelParams(xi=0.04)
    assert [band_info(p, N).width for N in range(4)] == pytest.approx([0, 0.16, 0.32, 0.48], abs=1e-15)
    b = band_info(p, 1)
    assert (b.lower, b.center, b.upper) == pytest.approx((0.92, 1.0, 1.08))
    with pytest.raises(ParameterError):
        band_info(p, -1)


@given(omegas, ratios, st.floats(-math.pi, math.pi))
def test_dispersion_inside_band_and_even(omega, r, k):
    p = ModelParams(omega=omega, xi=r * omega)
    e = dispersion(p, k)
    b = band_info(p, 1)
    assert b.lower - 1e-12 <= e <= b.upper + 1e-12
    assert dispersion(p, -k) == pytest.approx(e, abs=1e-14)
    assert dispersion(p, k + 2 * math.pi) == pytest.approx(e, abs=1e-12)


def test_dispersion_vectorised():
    p = ModelParams()
    ks = np.linspace(0, math.pi, 5)
    np.testing.assert_allclose(dispersion(p, ks), p.omega - 2 * p.xi * np.cos(ks))
