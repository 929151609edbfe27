"""Single-photon transport through a resonator array with a two-level system.

The light-matter coupling is treated by a polaron displacement followed by a
rotating-wave approximation (GRWA), and cross-checked against a truncated
Fock-space diagonalization and the single-mode Rabi model.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .model import BandInfo, ModelParams, ParameterError, band_info, dispersion  # noqa: E402
from .polaron import (PolaronAmplitudes, displacement_overlap, solve_alpha_closed,  # noqa: E402
                      solve_alpha_recursion)
from .effective import (SingleExcitationHamiltonian, build_exact_grwa, build_order_n,  # noqa: E402
                        build_rwa, strong_coupling_shift)
from .scattering import (ScatteringAmplitudes, closed_form_order1, closed_form_strong,  # noqa: E402
                         solve_scattering, sweep)

__all__ = [
    "__version__", "BandInfo", "ModelParams", "ParameterError", "band_info", "dispersion",
    "PolaronAmplitudes", "displacement_overlap", "solve_alpha_closed", "solve_alpha_recursion",
    "SingleExcitationHamiltonian", "build_exact_grwa", "build_order_n", "build_rwa",
    "strong_coupling_shift", "ScatteringAmplitudes", "closed_form_order1", "closed_form_strong",
    "solve_scattering", "sweep",
]
