"""Entropy-rate estimation for ideal quantum Gibbs sources."""

from .source import (
    Box,
    CoverageError,
    Dispersion,
    InvalidModelError,
    ModelParams,
    OccupationArray,
    Statistics,
    aep_region,
    aep_statistic,
    log_weight,
    sample_array,
    site_entropy,
    site_mean,
    site_parameter,
    window_box,
)

__version__ = "0.1.0"
