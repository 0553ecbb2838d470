"""Frequency-domain CNN layers and training harness (native core)."""

from ._fdnet import (
    ConfigError,
    IoError,
    NumericalAbort,
    NumericalInconsistency,
    ParseError,
    analyze_spectrum,
    describe_config,
    dft2,
    idft2,
    low_frequency_region,
    spectral_pool,
    train,
    tsrelu,
    tsrelu_adjoint,
)

__all__ = [
    "ConfigError",
    "IoError",
    "NumericalAbort",
    "NumericalInconsistency",
    "ParseError",
    "analyze_spectrum",
    "describe_config",
    "dft2",
    "idft2",
    "low_frequency_region",
    "spectral_pool",
    "train",
    "tsrelu",
    "tsrelu_adjoint",
]
