"""Prior Pool: 고전 연산자 기반 고주파/저주파 prior"""
from priors.edges import canny, sobel
from priors.frequency import dct2, dct_lowpass
from priors.pool import PriorPool, PriorSettings, build_prior_batch, build_prior_pool, to_luminance, write_prior_pool
from priors.registry import PRIOR_CHANNELS, NUM_PRIOR_CHANNELS
from priors.smoothing import gaussian_filter, median_filter

__all__ = [
    "canny",
    "sobel",
    "dct2",
    "dct_lowpass",
    "PriorPool",
    "PriorSettings",
    "build_prior_pool",
    "build_prior_batch",
    "to_luminance",
    "write_prior_pool",
    "PRIOR_CHANNELS",
    "NUM_PRIOR_CHANNELS",
    "gaussian_filter",
    "median_filter",
]
