"""
학습/추론/평가 파이프라인 테스트

대부분 tiny 설정(반복 1회)으로 동결 규약, 결정성, 오류 경로를 확인합니다.
기준 규모 학습(2000회)은 slow 표시 테스트로 분리되어 있습니다.
"""
import json
import os

import numpy as np
import pytest

from autograd.params import ParamStore
from autograd.tensor import Tensor
from core.errors import (
    CheckpointContentError,
    ConfigError,
    GradcheckError,
    TaskError,
    TrainingDivergedError,
)
from core.imageio import read_image, write_image
from core.utils import read_json
from evaluation.metrics import msssim
from models.builder import build_model
from models.denoiser import DenoiserConfig
from models.tasks import TaskRegistry
from pipeline.ablation import ablate, interference
from pipeline.checkpoint import read_checkpoint
from pipeline.config import RunConfig
from pipeline.evaluate import evaluate, json_lines
from pipeline.gradcheck_suite import CASES, TINY_CONFIG, run_case, run_suite
from pipeline.graph import create_initial_state, run_pipeline
from pipeline.inference import Restorer, dewarp_file, restore_file
from pipeline.routing import route_after_prepare, route_after_stage1, route_after_stage2
from pipeline.state import PipelineState
from pipeline.training import extend_task, loss_windows, run_training_loop, train_stage1, train_stage2
from synth.dataset import make_pair
from synth.warps import gen_warp_pair


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


# =============================================================================
# 학습 루프
# =============================================================================

class TestTrainingLoop:

    def test_loss_windows(self):
        assert loss_windows([4.0, 3.0, 2.0, 1.0], 100) == {"first": 3.5, "last": 1.5, "window": 2}
        assert loss_windows([5.0], 10)["window"] == 1
        assert loss_windows([], 10)["window"] == 0

    def test_nan_loss_writes_dump(self, tiny_config):
        store = ParamStore()
        store.add("encoder.w", Tensor(np.ones(2)))

        def step(i):
            return "deblur", [7, 8], (store["encoder.w"] * float("nan")).sum()

        with pytest.raises(TrainingDivergedError) as excinfo:
            run_training_loop("stage1", 3, tiny_config, store, step)
        assert excinfo.value.code == "NAN_LOSS"
        dump = read_json(tiny_config.output_path("nan_dump.json"))
        assert dump["iteration"] == 1 and dump["task"] == "deblur" and dump["pair_seeds"] == [7, 8]


class TestStage1:

    def test_groups_and_checkpoint(self, trained_checkpoints):
        data = read_checkpoint(trained_checkpoints["stage1"])
        assert data.stage == "stage1"
        for group in ("encoder", "mid", "decoder", "pfm"):
            assert data.has_group(group)
        assert not data.has_group("cpb")
        assert data.tasks.names == ["deblur", "deshadow"]

    def test_same_config_is_byte_identical(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "run", stage1_iters=2)
        first = train_stage1(cfg)
        first_bytes = read_bytes(first.checkpoint)
        second = train_stage1(cfg)
        assert second.losses == first.losses
        assert read_bytes(second.checkpoint) == first_bytes

    def test_loss_log_and_report(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "run", stage1_iters=3)
        result = train_stage1(cfg, save=False)
        assert result.checkpoint == ""
        assert len(result.losses) == 3 and set(result.tasks) <= {"deblur", "deshadow"}
        assert set(result.report["windows"]) == {"first", "last", "window"}
        assert read_json(cfg.output_path("stage1_losses.json"))["losses"] == result.losses

    def test_validation_records_psnr(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "run", stage1_iters=1, val_every=1)
        result = train_stage1(cfg, save=False)
        record = result.validation[0]
        assert record["iter"] == 1
        assert {"deblur", "deblur_input", "deshadow", "deshadow_input"} <= set(record)


class TestStage2:

    def test_encoder_is_frozen(self, trained_checkpoints):
        before = read_checkpoint(trained_checkpoints["stage1"]).arrays
        after = read_checkpoint(trained_checkpoints["stage2"])
        assert after.stage == "stage2" and after.has_group("cpb")
        for name, value in before.items():
            np.testing.assert_array_equal(after.arrays[name], value)

    def test_requires_checkpoint(self, tiny_config):
        with pytest.raises(CheckpointContentError):
            train_stage2(tiny_config)


class TestExtend:

    def test_only_pfm_changes(self, trained_checkpoints, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "extend")
        result = extend_task(cfg, trained_checkpoints["stage2"], "denoise")
        source = read_checkpoint(trained_checkpoints["stage2"]).arrays
        extended = read_checkpoint(result.checkpoint)
        assert extended.tasks.names == ["deblur", "deshadow", "denoise"]
        for name, value in source.items():
            if not name.startswith("pfm."):
                np.testing.assert_array_equal(extended.arrays[name], value)
        assert any(not np.array_equal(extended.arrays[n], source[n]) for n in source if n.startswith("pfm."))

        report = read_json(cfg.output_path("extend_report.json"))
        assert report["new_task"] == "denoise" and report["slot"] == 2
        assert set(report["drift"]) == {"deblur", "deshadow"}
        assert report["max_drift"] >= 0.0

    def test_registered_task_rejected(self, trained_checkpoints, make_tiny_config, tmp_path):
        with pytest.raises(TaskError, match="deblur"):
            extend_task(make_tiny_config(tmp_path / "dup"), trained_checkpoints["stage1"], "deblur")

    def test_task_without_degradation_rejected(self, trained_checkpoints, make_tiny_config, tmp_path):
        with pytest.raises(TaskError):
            extend_task(make_tiny_config(tmp_path / "x"), trained_checkpoints["stage1"], "dewarp")

    def test_no_spare_slot(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "full", task_slots=2)
        stage1 = train_stage1(cfg)
        with pytest.raises(TaskError, match="task_slots"):
            extend_task(cfg, stage1.checkpoint, "denoise")


# =============================================================================
# 추론
# =============================================================================

class TestInference:

    def test_restore_pads_and_crops(self, trained_checkpoints, rng):
        restorer = Restorer.from_checkpoint(trained_checkpoints["stage1"])
        image = rng.random((3, 70, 100)).astype(np.float32)
        out = restorer.restore(image, "deblur", steps=2, seed=4)
        assert out.shape == (3, 70, 100)
        assert out.min() >= 0.0 and out.max() <= 1.0
        np.testing.assert_array_equal(out, restorer.restore(image, "deblur", steps=2, seed=4))

    def test_unknown_task_lists_registered(self, trained_checkpoints, page):
        restorer = Restorer.from_checkpoint(trained_checkpoints["stage1"])
        with pytest.raises(TaskError, match="deshadow"):
            restorer.restore(page, "illuminate")

    def test_dewarp_requires_cpb(self, trained_checkpoints, page):
        restorer = Restorer.from_checkpoint(trained_checkpoints["stage1"])
        with pytest.raises(CheckpointContentError, match="cpb"):
            restorer.dewarp(page)

    @pytest.mark.parametrize("shape", [(32, 32), (64, 64), (40, 56)])
    def test_dewarp_any_size(self, trained_checkpoints, rng, shape):
        restorer = Restorer.from_checkpoint(trained_checkpoints["stage2"])
        image = rng.random((3,) + shape).astype(np.float32)
        flat, bm = restorer.dewarp(image)
        assert flat.shape == image.shape
        assert bm.G == 4 and bm.is_valid()

    def test_file_commands(self, trained_checkpoints, tmp_path):
        pair = make_pair("deblur", 0, 32)
        source = str(tmp_path / "in.ppm")
        write_image(source, pair.input)
        restore_file(trained_checkpoints["stage1"], source, "deblur", str(tmp_path / "out.ppm"), steps=2)
        assert read_image(str(tmp_path / "out.ppm")).shape == (3, 32, 32)

        dewarp_file(trained_checkpoints["stage2"], source, str(tmp_path / "flat.png"), str(tmp_path / "bm.bin"))
        assert os.path.exists(tmp_path / "flat.png") and os.path.exists(tmp_path / "bm.bin")


# =============================================================================
# 평가
# =============================================================================

class TestEvaluate:

    def test_per_sample_task_and_aggregate_lines(self, trained_checkpoints):
        records = evaluate(trained_checkpoints["stage2"], tasks=["deblur"], count=2, per_sample=True)
        assert [r["task"] for r in records] == ["deblur", "deblur", "deblur", "aggregate"]
        assert [r.get("index") for r in records[:2]] == [0, 1]
        summary = records[2]
        assert summary["count"] == 2
        assert summary["fm"] is None
        assert summary["psnr"] == pytest.approx(np.mean([records[0]["psnr"], records[1]["psnr"]]))
        for line in json_lines(records):
            json.loads(line)

    def test_default_tasks_include_dewarp_when_cpb(self, trained_checkpoints):
        records = evaluate(trained_checkpoints["stage2"], count=1)
        assert [r["task"] for r in records] == ["deblur", "deshadow", "dewarp", "aggregate"]
        assert records[-1]["tasks"] == ["deblur", "deshadow", "dewarp"]

    def test_deterministic(self, trained_checkpoints):
        first = evaluate(trained_checkpoints["stage1"], tasks=["deshadow"], count=1)
        second = evaluate(trained_checkpoints["stage1"], tasks=["deshadow"], count=1)
        assert list(json_lines(first)) == list(json_lines(second))


# =============================================================================
# run-all 그래프
# =============================================================================

class TestRunAll:

    def test_initial_state(self, tiny_config):
        state = create_initial_state(tiny_config)
        assert state["run_config"]["tasks"] == ["deblur", "deshadow"]
        assert state["completed"] == [] and state["reports"] == {}
        assert set(state) == set(PipelineState.__annotations__)
        assert "error" not in state

    def test_routing_skips_zero_iteration_stages(self):
        cfg = {"stage1_iters": 0, "stage2_iters": 0, "extend_iters": 5, "new_task": "denoise"}
        assert route_after_prepare({"run_config": cfg}) == "extend_node"
        assert route_after_stage1({"run_config": {**cfg, "stage2_iters": 1}}) == "stage2_node"
        assert route_after_stage2({"run_config": {**cfg, "new_task": None}}) == "eval_node"
        assert route_after_prepare({"run_config": {**cfg, "stage1_iters": 1}}) == "stage1_node"

    def test_full_pipeline(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "all")
        state = run_pipeline(cfg)
        assert state["completed"] == ["prepare", "stage1", "stage2", "extend", "eval"]
        assert state["extend_checkpoint"].endswith("extend_denoise.uddf")
        assert set(state["reports"]) == {"stage1", "stage2", "extend"}
        assert state["eval_records"][-1]["task"] == "aggregate"
        assert os.path.exists(cfg.output_path("eval.jsonl"))
        assert read_json(cfg.output_path("run_config.json"))["seed"] == 0

    def test_resume_from_checkpoint(self, trained_checkpoints, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "resume", stage1_iters=0, stage2_iters=0, extend_iters=0,
                               checkpoint=trained_checkpoints["stage2"])
        state = run_pipeline(cfg)
        assert state["completed"] == ["prepare", "eval"]

    def test_missing_start_checkpoint(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "bad", stage1_iters=0)
        with pytest.raises(CheckpointContentError):
            run_pipeline(cfg)


# =============================================================================
# gradcheck / ablation
# =============================================================================

class TestGradcheckSuite:

    @pytest.mark.parametrize("name", ["elementwise", "structural", "conv2d", "padding", "resampling",
                                      "attention", "losses", "resblock", "pfm", "denoiser", "cpb"])
    def test_small_cases_pass(self, name):
        result = run_case(name, 0)
        assert result.passed, result.max_rel_err

    def test_graph_cases_check_every_tensor(self):
        model = build_model(DenoiserConfig(**TINY_CONFIG), 0, TaskRegistry(slots=3, tasks=["deblur"]), with_cpb=True)
        cpb_count = sum(1 for name in model.store.names() if name.startswith("cpb."))
        _, tensors, samples = CASES["denoiser"](np.random.default_rng(0))
        assert samples == 8
        assert tensors[0].shape == (1, 3, 16, 16)
        assert len(tensors) == 1 + len(model.store) - cpb_count
        _, tensors, samples = CASES["cpb"](np.random.default_rng(0))
        assert samples == 8
        assert len(tensors) == 1 + cpb_count

    def test_suite_subset(self):
        results = run_suite(seeds=2, cases=["padding"], progress=False)
        assert [(r.name, r.seed) for r in results] == [("padding", 0), ("padding", 1)]

    def test_unknown_case(self):
        assert "denoiser" in CASES and "cpb" in CASES
        with pytest.raises(GradcheckError):
            run_suite(seeds=1, cases=["nope"], progress=False)


class TestAblation:

    def test_variants_share_seed(self, make_tiny_config, tmp_path):
        cfg = make_tiny_config(tmp_path / "ablate", stage1_iters=2)
        report = ablate(cfg, ["no-pfm", "no-freq-loss"])
        assert set(report["variants"]) == {"full", "no-pfm", "no-freq-loss"}
        assert report["variants"]["no-pfm"]["params"]["pfm"] != report["variants"]["full"]["params"]["pfm"]
        assert report["variants"]["no-freq-loss"]["params"] == report["variants"]["full"]["params"]
        assert os.path.exists(cfg.output_path("ablation_report.json"))

    def test_unknown_variant(self, tiny_config):
        with pytest.raises(ConfigError):
            ablate(tiny_config, ["none"])

    def test_interference_runs(self, make_tiny_config, tmp_path):
        report = interference(make_tiny_config(tmp_path / "interference", stage1_iters=2))
        assert set(report["runs"]) == {"deblur_only/prior_pool", "deblur_only/no_prior_pool",
                                       "deblur_deshadow/prior_pool", "deblur_deshadow/no_prior_pool"}
        assert len(report["runs"]["deblur_only/prior_pool"]["deblur_losses"]) == 2


# =============================================================================
# 기준 규모 학습 (--runslow)
# =============================================================================

@pytest.mark.slow
class TestDeskScale:

    @pytest.fixture(scope="class")
    def desk_run(self, tmp_path_factory):
        cfg = RunConfig(out_dir=str(tmp_path_factory.mktemp("desk")), quiet=True, val_every=2000)
        stage1 = train_stage1(cfg)
        stage2 = train_stage2(cfg, stage1.checkpoint)
        return cfg, stage1, stage2

    def test_stage1_loss_halves_and_deblur_improves(self, desk_run):
        _, stage1, _ = desk_run
        windows = stage1.windows(100)
        assert windows["last"] < 0.5 * windows["first"]
        last = stage1.validation[-1]
        assert last["deblur"] - last["deblur_input"] >= 3.0

    def test_stage2_loss_halves_and_dewarp_improves(self, desk_run):
        cfg, _, stage2 = desk_run
        windows = stage2.windows(100)
        assert windows["last"] < 0.5 * windows["first"]

        restorer = Restorer.from_checkpoint(stage2.checkpoint)
        gains = []
        for seed in range(5):
            pair = gen_warp_pair(10_000 + seed, 64, 64, G=cfg.G)
            flat, _ = restorer.dewarp(pair.input)
            gains.append(msssim(flat, pair.gt) - msssim(pair.input, pair.gt))
        assert np.mean(gains) > 0

    def test_extend_keeps_other_tensors(self, desk_run):
        cfg, _, stage2 = desk_run
        extended = extend_task(cfg, stage2.checkpoint, "denoise")
        windows = extended.windows(100)
        assert windows["last"] < windows["first"]
        source = read_checkpoint(stage2.checkpoint).arrays
        arrays = read_checkpoint(extended.checkpoint).arrays
        for name, value in source.items():
            if not name.startswith("pfm."):
                assert arrays[name].tobytes() == value.tobytes()
