"""Online time-varying VAR estimation and spectral connectivity."""

from ._core import (
    InputError,
    NumericalError,
    band_connectivity,
    estimate,
    network_delta,
    quantile,
    simulate,
    spectrum,
    warmup_length,
)

__all__ = [
    "InputError",
    "NumericalError",
    "band_connectivity",
    "estimate",
    "network_delta",
    "quantile",
    "simulate",
    "spectrum",
    "warmup_length",
]
