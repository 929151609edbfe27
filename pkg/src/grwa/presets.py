"""Named parameter sets for the reflection-rate figures.

Each preset expands to a plain configuration mapping with the same schema as
a config file (see :mod:`grwa.config`).
"""
from __future__ import annotations

import copy

_FIG3_METHODS = ["order1", "rwa", "numeric-cp2", "numeric-cp3"]
_FIG5_METHODS = ["strong-coupling", "rwa", "numeric-cp2", "numeric-cp3"]


def _entry(description, xi, Omega, lam, methods):
    return {
        "description": description,
        "model": {"omega": 1.0, "xi": xi, "Omega": Omega, "lambda": lam, "tls_sites": [0]},
        "methods": list(methods),
        "grid": {"count": 200, "lo": 0.0, "hi": "pi"},
    }


PRESETS = {
    "fig3a": _entry("near resonance, weak coupling", 0.04, 1.0, 0.04, _FIG3_METHODS),
    "fig3b": _entry("detuned, strong coupling", 0.04, 0.4, 1.0, _FIG3_METHODS),
    "fig3c": _entry("resonant, strong coupling", 0.04, 1.0, 1.6, _FIG3_METHODS),
    "fig3d": _entry("detuned, very strong coupling", 0.04, 0.4, 2.0, _FIG3_METHODS),
    "fig5a": _entry("strong coupling, shift/xi ~ 15", 0.002, 1.0, 1.6, _FIG5_METHODS),
    "fig5b": _entry("strong coupling, shift/xi ~ 1", 0.03, 0.4, 1.4, _FIG5_METHODS),
    "fig5c": _entry("strong coupling, shift/xi ~ 0.07", 0.04, 1.0, 2.0, _FIG5_METHODS),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def expand_preset(name: str) -> dict:
    """Full configuration mapping for ``name`` (a fresh copy)."""
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
