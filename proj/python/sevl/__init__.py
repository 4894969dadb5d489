"""Python access to the sevl core library."""

from ._core import (
    LevyMeasure,
    PressureLaw,
    PressureTransform,
    default_config,
    divergence,
    leray_project,
    mollify,
    projected_advection,
    run,
    sobolev_norm,
    structural_residual,
    subcommands,
    taylor_green,
    wpinf_norm,
)

try:
    from ._core import __version__
except ImportError:  # built outside scikit-build
    __version__ = "0.0.0"

__all__ = [
    "LevyMeasure",
    "PressureLaw",
    "PressureTransform",
    "default_config",
    "divergence",
    "leray_project",
    "mollify",
    "projected_advection",
    "run",
    "sobolev_norm",
    "structural_residual",
    "subcommands",
    "taylor_green",
    "wpinf_norm",
]
