"""
합성 데이터 테스트
"""
import os

import numpy as np
import pytest

from core.errors import ShapeError, TaskError
from core.imageio import read_image
from core.utils import read_json
from evaluation.metrics import psnr
from models.cpb import BackwardMap, dewarp
from synth.dataset import SYNTH_TASKS, make_pair, write_dataset
from synth.degradations import DEGRADATIONS, binarize_gt, degrade
from synth.documents import INK_FRACTION_RANGE, gen_clean_doc, ink_fraction
from synth.warps import gen_warp_pair, warp_batch


class TestCleanDocuments:

    @pytest.mark.parametrize("seed", range(5))
    def test_ink_fraction_in_range(self, seed):
        page = gen_clean_doc(seed, 48, 64)
        assert page.shape == (3, 48, 64) and page.dtype == np.float32
        assert INK_FRACTION_RANGE[0] <= ink_fraction(page) <= INK_FRACTION_RANGE[1]
        assert page.min() >= 0.0 and page.max() <= 1.0

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_clean_doc(3, 32, 32), gen_clean_doc(3, 32, 32))
        assert not np.array_equal(gen_clean_doc(3, 32, 32), gen_clean_doc(4, 32, 32))

    def test_minimum_size(self):
        with pytest.raises(ShapeError):
            gen_clean_doc(0, 16, 64)


class TestDegradations:

    def test_task_list(self):
        assert set(DEGRADATIONS) == {"deblur", "deshadow", "illuminate", "binarize", "hw_remove", "denoise"}
        assert SYNTH_TASKS[-1] == "dewarp"

    @pytest.mark.parametrize("task", sorted(DEGRADATIONS))
    def test_pairs_are_deterministic_and_clamped(self, task, page):
        first = degrade(task, page, 11)
        second = degrade(task, page, 11)
        np.testing.assert_array_equal(first.input, second.input)
        assert first.input.shape == page.shape
        assert first.input.min() >= 0.0 and first.input.max() <= 1.0
        assert not np.array_equal(first.input, first.gt)
        assert first.task == task and first.bm_gt is None

    def test_binarize_gt_is_two_level(self, page):
        pair = degrade("binarize", page, 0)
        assert set(np.unique(pair.gt)) <= {0.0, 1.0}
        np.testing.assert_array_equal(pair.gt, binarize_gt(page))

    def test_shadow_only_darkens(self, page):
        pair = degrade("deshadow", page, 2)
        assert np.all(pair.input <= page + 1e-6)

    def test_unknown_and_dewarp_rejected(self, page):
        with pytest.raises(TaskError):
            degrade("dewarp", page, 0)
        with pytest.raises(TaskError):
            degrade("sharpen", page, 0)

    def test_make_pair_is_pure(self):
        a = make_pair("deblur", 5, 32)
        b = make_pair("deblur", 5, 32)
        np.testing.assert_array_equal(a.input, b.input)
        np.testing.assert_array_equal(a.gt, b.gt)


class TestWarps:

    @pytest.mark.parametrize("size", [32, 64])
    def test_pair_is_self_consistent(self, size):
        pair = gen_warp_pair(1, size, size, G=16)
        assert pair.task == "dewarp"
        assert pair.bm_gt.G == 16 and pair.bm_gt.is_valid()
        assert psnr(dewarp(pair.input, pair.bm_gt), pair.gt) > 25.0

    def test_zero_amplitude_is_identity(self):
        pair = gen_warp_pair(2, 32, 32, G=8, amplitude=0.0)
        np.testing.assert_allclose(pair.bm_gt.grid, BackwardMap.identity(8).grid, atol=1e-6)
        np.testing.assert_allclose(pair.input, pair.gt, atol=1e-5)

    def test_requires_multiple_of_16(self):
        with pytest.raises(ShapeError):
            gen_warp_pair(0, 40, 32)

    def test_batch_is_deterministic(self):
        first = warp_batch([0, 1], 32, G=4)
        second = warp_batch([0, 1], 32, G=4)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.input, b.input)
            np.testing.assert_array_equal(a.bm_gt.grid, b.bm_gt.grid)


class TestWriteDataset:

    def test_pixel_task_layout(self, tmp_path):
        manifest = write_dataset(str(tmp_path), "deblur", 2, 32, 7, progress=False)
        task_dir = tmp_path / "deblur"
        assert manifest == {"task": "deblur", "seed": 7, "count": 2, "size": 32}
        assert read_json(str(task_dir / "manifest.json")) == manifest
        assert sorted(os.listdir(task_dir)) == ["0000_gt.ppm", "0000_in.ppm", "0001_gt.ppm", "0001_in.ppm",
                                                "manifest.json"]
        assert read_image(str(task_dir / "0001_in.ppm")).shape == (3, 32, 32)

    def test_dewarp_layout_includes_backward_map(self, tmp_path):
        write_dataset(str(tmp_path), "dewarp", 1, 32, 0, G=4, progress=False)
        bm = BackwardMap.load(str(tmp_path / "dewarp" / "0000_bm.bin"))
        assert bm.G == 4
