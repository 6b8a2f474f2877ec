"""Patch-ordering image denoiser.

Images are 2-D float64 arrays indexed (row, column) with values on the
0..255 scale.
"""

from ._core import (
    FILTER_TAPS,
    UNLIMITED_WINDOW,
    DenoiseConfig,
    FilterArityError,
    FilterBank,
    FilterMode,
    ImageIoError,
    MissingInputsError,
    Scenario,
    SingularSystemError,
    add_gaussian_noise,
    build_tour,
    convolve_same,
    delta_bank,
    denoise,
    learn_filters,
    load_filter_bank,
    load_image,
    parse_config,
    parse_filter_bank,
    psnr,
    save_filter_bank,
    save_image,
    scenario_cap,
    single_run,
)

__all__ = [name for name in dir() if not name.startswith("_")]
