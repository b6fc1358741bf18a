"""
Denoiser / 태스크 레지스트리 테스트
"""
import numpy as np
import pytest

from autograd.tensor import Tensor, concat
from core.errors import ShapeError, TaskError
from core.utils import make_rng
from models.builder import build_model
from models.denoiser import DenoiserConfig
from models.tasks import DEFAULT_TASKS, KNOWN_BANDS, TaskRegistry
from priors.pool import build_prior_pool


def tiny_registry(slots: int = 3) -> TaskRegistry:
    return TaskRegistry(slots=slots, tasks=["deblur", "deshadow"])


def forward_inputs(page, seed: int = 0):
    rng = make_rng(seed)
    x_d = (page * 2.0 - 1.0)[None].astype(np.float32)
    x_t = rng.standard_normal(x_d.shape).astype(np.float32)
    prior = build_prior_pool(page).maps[None]
    return x_t, x_d, prior


def zero_params(store, predicate) -> None:
    for name, value in store.items():
        if predicate(name):
            value.data[...] = 0.0


# =============================================================================
# TaskRegistry
# =============================================================================

class TestTaskRegistry:

    def test_default_tasks_fill_slots_in_order(self):
        registry = TaskRegistry()
        assert registry.names == DEFAULT_TASKS
        assert registry.spare_slots == 3
        vec = registry.get("binarize")
        assert vec.index == 3 and vec.band == "high"
        np.testing.assert_array_equal(vec.one_hot, np.eye(8, dtype=np.float32)[3])

    def test_bands(self):
        assert KNOWN_BANDS["deshadow"] == "low"
        assert KNOWN_BANDS["deblur"] == "high"

    def test_register_existing_returns_same_slot(self):
        registry = tiny_registry()
        assert registry.register("deshadow").index == 1
        assert len(registry) == 2

    def test_full_registry(self):
        registry = tiny_registry(slots=2)
        with pytest.raises(TaskError, match="task_slots"):
            registry.register("denoise")

    def test_dewarp_is_not_a_slot(self):
        with pytest.raises(TaskError, match="dewarp"):
            tiny_registry().register("dewarp")

    def test_unknown_band_requires_explicit_band(self):
        registry = tiny_registry()
        with pytest.raises(TaskError):
            registry.register("stain_remove")
        assert registry.register("stain_remove", "low").index == 2

    def test_unknown_task_lists_registered(self):
        with pytest.raises(TaskError) as excinfo:
            tiny_registry().get("illuminate")
        assert "deblur" in str(excinfo.value)
        assert excinfo.value.code == "TASK"

    def test_dict_round_trip_keeps_slots(self):
        registry = tiny_registry(slots=4)
        registry.register("denoise")
        restored = TaskRegistry.from_dict(registry.to_dict())
        assert restored.names == ["deblur", "deshadow", "denoise"]
        assert restored.get("denoise").index == 2
        assert restored.slots == 4


# =============================================================================
# DenoiserConfig
# =============================================================================

class TestDenoiserConfig:

    @pytest.mark.parametrize("channels", [[4, 3, 8, 8], [4, 8, 8], [0, 1, 2, 3]])
    def test_stage_channels_validated(self, channels):
        with pytest.raises(ValueError):
            DenoiserConfig(stage_channels=channels)

    def test_time_dim_must_be_even(self):
        with pytest.raises(ValueError):
            DenoiserConfig(time_dim=5)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            DenoiserConfig(variant="no-encoder")


# =============================================================================
# Denoiser
# =============================================================================

class TestDenoiser:

    def test_same_seed_same_parameters(self, tiny_denoiser_config):
        a = build_model(tiny_denoiser_config, 5, tiny_registry()).store.snapshot()
        b = build_model(tiny_denoiser_config, 5, tiny_registry()).store.snapshot()
        c = build_model(tiny_denoiser_config, 6, tiny_registry()).store.snapshot()
        assert list(a) == list(b)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])
        assert any(not np.array_equal(a[name], c[name]) for name in a)

    def test_parameter_groups(self, tiny_denoiser_config):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        assert set(model.group_sizes()) == {"encoder", "mid", "decoder", "pfm"}
        assert all(size > 0 for size in model.group_sizes().values())
        assert model.cpb is None

    def test_forward_shape(self, tiny_denoiser_config, page):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x_t, x_d, prior = forward_inputs(page)
        out = model.denoiser(x_t, x_d, model.tasks.get("deblur"), prior, 7)
        assert out.shape == (1, 3, 32, 32)
        assert np.all(np.isfinite(out.data))

    def test_predict_is_deterministic(self, tiny_denoiser_config, page):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x_t, x_d, prior = forward_inputs(page)
        task = model.tasks.get("deblur")
        first = model.denoiser.predict(x_t, x_d, task, prior, 3)
        second = model.denoiser.predict(x_t, x_d, task, prior, 3)
        np.testing.assert_array_equal(first, second)

    def test_task_changes_output(self, tiny_denoiser_config, page):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x_t, x_d, prior = forward_inputs(page)
        deblur = model.denoiser.predict(x_t, x_d, model.tasks.get("deblur"), prior, 3)
        deshadow = model.denoiser.predict(x_t, x_d, model.tasks.get("deshadow"), prior, 3)
        assert not np.allclose(deblur, deshadow)

    def test_size_must_be_multiple_of_16(self, tiny_denoiser_config):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x = np.zeros((1, 3, 40, 32), dtype=np.float32)
        with pytest.raises(ShapeError, match="16"):
            model.denoiser(x, x, model.tasks.get("deblur"), np.zeros((1, 10, 40, 32)), 1)

    def test_mismatched_inputs(self, tiny_denoiser_config):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        with pytest.raises(ShapeError):
            model.denoiser(np.zeros((1, 3, 32, 32)), np.zeros((1, 3, 16, 16)), model.tasks.get("deblur"), None, 1)

    def test_prior_required(self, tiny_denoiser_config):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x = np.zeros((1, 3, 32, 32), dtype=np.float32)
        with pytest.raises(ShapeError, match="Prior"):
            model.denoiser(x, x, model.tasks.get("deblur"), None, 1)

    def test_gradients_reach_all_groups(self, tiny_denoiser_config, page):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x_t, x_d, prior = forward_inputs(page)
        model.denoiser(x_t, x_d, model.tasks.get("deblur"), prior, 5).mean().backward()
        for name, value in model.store.items():
            assert value.grad is not None, name


class TestVariants:

    def test_no_prior_pool_uses_learned_constant(self, tiny_denoiser_config, page):
        config = tiny_denoiser_config.model_copy(update={"variant": "no-prior-pool"})
        model = build_model(config, 0, tiny_registry())
        assert "pfm.constant_prior" in model.store
        x_t, x_d, _ = forward_inputs(page)
        out = model.denoiser.predict(x_t, x_d, model.tasks.get("deblur"), None, 2)
        assert out.shape == (1, 3, 32, 32)

    def test_no_pfm_routes_through_task_blocks(self, tiny_denoiser_config, page):
        config = tiny_denoiser_config.model_copy(update={"variant": "no-pfm"})
        model = build_model(config, 0, tiny_registry())
        names = model.store.names()
        assert "pfm.stage1.task0.conv1.weight" in names
        assert not any(".refine." in n for n in names)
        x_t, x_d, _ = forward_inputs(page)
        deblur = model.denoiser.predict(x_t, x_d, model.tasks.get("deblur"), None, 2)
        deshadow = model.denoiser.predict(x_t, x_d, model.tasks.get("deshadow"), None, 2)
        assert not np.allclose(deblur, deshadow)

    def test_no_freq_loss_keeps_architecture(self, tiny_denoiser_config):
        base = build_model(tiny_denoiser_config, 0, tiny_registry())
        variant = build_model(tiny_denoiser_config.model_copy(update={"variant": "no-freq-loss"}), 0, tiny_registry())
        assert base.store.names() == variant.store.names()


# =============================================================================
# 퇴화 케이스
# =============================================================================

class TestDegenerateCases:

    def test_encoder_zero_input_zero_biases(self, tiny_denoiser_config):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        x6 = Tensor(np.zeros((1, 6, 32, 32)))
        temb = model.denoiser.time_features(5, 1)

        zero_params(model.store, lambda n: n.endswith(".bias"))
        shifted = model.denoiser.encoder_forward(x6, temb)
        assert max(np.abs(f.data).max() for f in shifted.stages) > 0

        # 시간 shift 투영도 bias로 취급
        zero_params(model.store, lambda n: n.startswith("encoder.") and ".time." in n)
        features = model.denoiser.encoder_forward(x6, temb)
        assert [f.shape[2] for f in features.stages] == [16, 8, 4, 2]
        for f in features.stages:
            np.testing.assert_array_equal(f.data, 0.0)

    def test_mid_without_attention_is_two_resblocks(self, tiny_denoiser_config, rng):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        zero_params(model.store, lambda n: n.startswith("mid.attn."))
        bottleneck = Tensor(rng.standard_normal((1, 4, 2, 2)))
        temb = model.denoiser.time_features(3, 1)
        mid = model.denoiser.mid
        out = model.denoiser.mid_forward(bottleneck, temb)
        expected = mid.res2(mid.res1(bottleneck, temb), temb)
        assert out.shape == bottleneck.shape
        np.testing.assert_allclose(out.data, expected.data, atol=1e-7)

    def test_zero_parameters_give_zero_output(self, tiny_denoiser_config, page):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        zero_params(model.store, lambda n: True)
        x_t, x_d, prior = forward_inputs(page)
        out = model.denoiser.predict(x_t, x_d, model.tasks.get("deblur"), prior, 4)
        assert out.shape == (1, 3, 32, 32)
        np.testing.assert_array_equal(out, 0.0)

    @pytest.mark.parametrize("level", [1, 2, 3, 4])
    def test_pfm_null_prior_ignores_prior(self, tiny_denoiser_config, rng, level):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        fusion = next(f for lvl, _, f in model.denoiser.decoder.levels if lvl == level)
        c = tiny_denoiser_config.stage_channels[level - 1]
        size = 32 // 2 ** level
        f = Tensor(rng.standard_normal((1, c, size, size)))
        task = Tensor(np.eye(3)[[0]])
        prior = rng.random((1, 10, 32, 32))
        perturbed = prior + rng.standard_normal(prior.shape)

        before = fusion(f, task, Tensor(prior)).data
        assert not np.allclose(before, fusion(f, task, Tensor(perturbed)).data)

        zero_params(model.store, lambda n: n.startswith(f"pfm.stage{level}.")
                    and (".task_mlp.fc1." in n or ".content_mlp.fc1." in n))
        out = fusion(f, task, Tensor(prior)).data
        np.testing.assert_array_equal(out, fusion(f, task, Tensor(perturbed)).data)
        null = fusion.fuse(concat([f, Tensor(np.zeros(f.shape))], axis=1)).data
        np.testing.assert_allclose(out, null, atol=1e-7)
        assert out.shape == f.shape

    def test_null_prior_model_ignores_prior(self, tiny_denoiser_config, page, rng):
        model = build_model(tiny_denoiser_config, 0, tiny_registry())
        zero_params(model.store, lambda n: n.startswith("pfm.") and (".task_mlp.fc1." in n or ".content_mlp.fc1." in n))
        x_t, x_d, prior = forward_inputs(page)
        task = model.tasks.get("deshadow")
        first = model.denoiser.predict(x_t, x_d, task, prior, 6)
        second = model.denoiser.predict(x_t, x_d, task, rng.random(prior.shape), 6)
        np.testing.assert_array_equal(first, second)
