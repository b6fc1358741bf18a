"""결정적 합성 문서와 태스크별 열화 쌍"""
from synth.dataset import SYNTH_TASKS, make_pair, make_pairs, pair_seed, write_dataset
from synth.degradations import DEGRADATIONS, SamplePair, binarize_gt, degrade
from synth.documents import gen_clean_doc, ink_fraction
from synth.warps import gen_warp_pair

__all__ = [
    "SYNTH_TASKS",
    "make_pair",
    "make_pairs",
    "pair_seed",
    "write_dataset",
    "DEGRADATIONS",
    "SamplePair",
    "binarize_gt",
    "degrade",
    "gen_clean_doc",
    "ink_fraction",
    "gen_warp_pair",
]
