"""
Prior Registry - Prior Pool 채널 배치와 파일 이름
"""
from typing import List

PRIOR_CHANNELS: List[str] = [
    "sobelx",
    "sobely",
    "canny",
    "median_r",
    "median_g",
    "median_b",
    "gauss_r",
    "gauss_g",
    "gauss_b",
    "dctlow",
]

NUM_PRIOR_CHANNELS = len(PRIOR_CHANNELS)


def channel_filename(index: int) -> str:
    """priors CLI 출력 파일 이름 (예: prior_00_sobelx.pgm)"""
    return f"prior_{index:02d}_{PRIOR_CHANNELS[index]}.pgm"
