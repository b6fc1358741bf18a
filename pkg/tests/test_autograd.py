"""
autograd 테스트

- Tensor 연산과 broadcasting gradient
- 연산자 oracle (conv2d, AAP, grid sample, attention): 명시적 루프 구현과 비교
- float64 gradcheck
- ParamStore 동결 / AdamW
"""
import math

import numpy as np
import pytest

from autograd import functional as F
from autograd.gradcheck import assert_gradcheck, gradcheck
from autograd.optim import OptimizerState, adamw_step
from autograd.params import ParamStore
from autograd.tensor import Tensor, concat, float64_mode, get_default_dtype, no_grad
from core.errors import GradcheckError, ShapeError
from core.utils import make_rng


# =============================================================================
# Oracles
# =============================================================================

def conv2d_oracle(x, w, b, stride, padding, dilation):
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    batch, _, h, wd = xp.shape
    cout, _, kh, kw = w.shape
    oh = (h - dilation * (kh - 1) - 1) // stride + 1
    ow = (wd - dilation * (kw - 1) - 1) // stride + 1
    out = np.zeros((batch, cout, oh, ow))
    for n in range(batch):
        for co in range(cout):
            for i in range(oh):
                for j in range(ow):
                    patch = xp[n, :,
                               i * stride:i * stride + dilation * (kh - 1) + 1:dilation,
                               j * stride:j * stride + dilation * (kw - 1) + 1:dilation]
                    out[n, co, i, j] = np.sum(patch * w[co]) + b[co]
    return out


def aap_oracle(x, out_h, out_w):
    _, _, h, w = x.shape
    out = np.zeros(x.shape[:2] + (out_h, out_w))
    for i in range(out_h):
        r0, r1 = (i * h) // out_h, math.ceil((i + 1) * h / out_h)
        for j in range(out_w):
            c0, c1 = (j * w) // out_w, math.ceil((j + 1) * w / out_w)
            out[:, :, i, j] = x[:, :, r0:r1, c0:c1].mean(axis=(2, 3))
    return out


def grid_sample_oracle(x, grid):
    batch, channels, h, w = x.shape
    _, _, gh, gw = grid.shape
    out = np.zeros((batch, channels, gh, gw))
    for n in range(batch):
        for i in range(gh):
            for j in range(gw):
                px = min(max((grid[n, 0, i, j] + 1) * 0.5 * (w - 1), 0.0), w - 1)
                py = min(max((grid[n, 1, i, j] + 1) * 0.5 * (h - 1), 0.0), h - 1)
                x0, y0 = int(math.floor(px)), int(math.floor(py))
                x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
                fx, fy = px - x0, py - y0
                out[n, :, i, j] = (x[n, :, y0, x0] * (1 - fx) * (1 - fy) + x[n, :, y0, x1] * fx * (1 - fy)
                                   + x[n, :, y1, x0] * (1 - fx) * fy + x[n, :, y1, x1] * fx * fy)
    return out


def attention_oracle(x, wq, bq, wk, bk, wv, bv, wo, bo):
    b, c, h, w = x.shape
    out = np.zeros_like(x)
    for n in range(b):
        tokens = x[n].reshape(c, h * w).T
        q = tokens @ wq.T + bq
        k = tokens @ wk.T + bk
        v = tokens @ wv.T + bv
        scores = q @ k.T / math.sqrt(c)
        scores -= scores.max(axis=1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=1, keepdims=True)
        out[n] = x[n] + ((attn @ v) @ wo.T + bo).T.reshape(c, h, w)
    return out


# =============================================================================
# Tensor 연산
# =============================================================================

class TestTensorOps:

    def test_broadcast_gradient_is_summed(self):
        a = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        b = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
        (a * b).sum().backward()
        np.testing.assert_allclose(b.grad.data, a.data.sum(axis=0))
        np.testing.assert_allclose(a.grad.data, np.broadcast_to(b.data, (2, 3)))

    def test_fan_out_gradient_accumulates(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        (x * x + x).sum().backward()
        assert x.grad.data[0] == pytest.approx(5.0)

    def test_softmax_rows_sum_to_one_for_large_inputs(self):
        x = Tensor(np.array([[1000.0, 1001.0, 1002.0], [-5.0, 0.0, 5.0]]))
        out = F.softmax(x, axis=-1).data
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_silu_at_zero(self):
        assert F.silu(Tensor(np.zeros(3))).data.tolist() == [0.0, 0.0, 0.0]

    def test_no_grad_skips_graph(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = x * 2.0
        assert not y.requires_grad

    def test_float64_mode_is_scoped(self):
        with float64_mode():
            assert Tensor([1.0]).dtype == np.float64
        assert get_default_dtype() == np.float32
        assert Tensor([1.0]).dtype == np.float32

    def test_backward_requires_scalar(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_concat_splits_gradient(self):
        a = Tensor(np.ones((1, 2)), requires_grad=True)
        b = Tensor(np.ones((1, 3)), requires_grad=True)
        (concat([a, b], axis=1) * Tensor(np.arange(5.0))).sum().backward()
        np.testing.assert_allclose(a.grad.data, [[0.0, 1.0]])
        np.testing.assert_allclose(b.grad.data, [[2.0, 3.0, 4.0]])


# =============================================================================
# 연산자 oracle
# =============================================================================

class TestOperatorOracles:

    @pytest.mark.parametrize("seed", range(20))
    def test_conv2d_matches_loop(self, seed):
        rng = make_rng(seed)
        stride = int(rng.integers(1, 3))
        dilation = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 3))
        with float64_mode():
            x = rng.standard_normal((2, 2, 7, 6))
            w = rng.standard_normal((3, 2, 3, 3))
            b = rng.standard_normal(3)
            out = F.conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding, dilation=dilation)
        np.testing.assert_allclose(out.data, conv2d_oracle(x, w, b, stride, padding, dilation), atol=1e-6)

    def test_conv2d_rejects_even_kernel(self):
        with pytest.raises(ShapeError, match="홀수"):
            F.conv2d(Tensor(np.zeros((1, 1, 4, 4))), Tensor(np.zeros((1, 1, 2, 2))))

    def test_conv2d_rejects_channel_mismatch(self):
        with pytest.raises(ShapeError, match="dim 1"):
            F.conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))

    @pytest.mark.parametrize("mode", ["reflect", "edge"])
    def test_pad2d_matches_numpy(self, rng, mode):
        x = rng.standard_normal((1, 2, 5, 4))
        out = F.pad2d(Tensor(x, dtype=np.float64), 2, 1, mode)
        expected = np.pad(x, ((0, 0), (0, 0), (2, 2), (1, 1)), mode=mode)
        np.testing.assert_allclose(out.data, expected)

    @pytest.mark.parametrize("seed", range(20))
    def test_adaptive_avg_pool_matches_loop(self, seed):
        rng = make_rng(seed)
        h, w = int(rng.integers(3, 12)), int(rng.integers(3, 12))
        out_h, out_w = int(rng.integers(1, h + 1)), int(rng.integers(1, w + 1))
        x = rng.standard_normal((1, 2, h, w))
        out = F.adaptive_avg_pool(Tensor(x, dtype=np.float64), out_h, out_w)
        np.testing.assert_allclose(out.data, aap_oracle(x, out_h, out_w), atol=1e-6)

    @pytest.mark.parametrize("seed", range(20))
    def test_grid_sample_matches_loop(self, seed):
        rng = make_rng(seed)
        x = rng.standard_normal((1, 2, 5, 6))
        grid = rng.uniform(-1.2, 1.2, size=(1, 2, 4, 3))
        out = F.bilinear_grid_sample(Tensor(x, dtype=np.float64), Tensor(grid, dtype=np.float64))
        np.testing.assert_allclose(out.data, grid_sample_oracle(x, grid), atol=1e-6)

    def test_identity_grid_reproduces_input(self, rng):
        x = rng.standard_normal((2, 3, 6, 5))
        grid = F.identity_grid(6, 5, batch=2, dtype=np.float64)
        out = F.bilinear_grid_sample(Tensor(x, dtype=np.float64), Tensor(grid, dtype=np.float64))
        np.testing.assert_allclose(out.data, x, atol=1e-9)

    def test_bilinear_resize_equals_grid_sample(self, rng):
        x = rng.standard_normal((1, 1, 4, 5))
        resized = F.bilinear_resize(Tensor(x, dtype=np.float64), 7, 9)
        sampled = F.bilinear_grid_sample(Tensor(x, dtype=np.float64),
                                         Tensor(F.identity_grid(7, 9, dtype=np.float64), dtype=np.float64))
        np.testing.assert_allclose(resized.data, sampled.data, atol=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_self_attention_matches_loop(self, seed):
        rng = make_rng(seed)
        c = 3
        x = rng.standard_normal((2, c, 2, 3))
        params = []
        for _ in range(4):
            params += [rng.standard_normal((c, c)) * 0.5, rng.standard_normal(c) * 0.1]
        with float64_mode():
            out = F.self_attention(Tensor(x), *[Tensor(p) for p in params])
        np.testing.assert_allclose(out.data, attention_oracle(x, *params), atol=1e-5)

    def test_upsample_nearest(self):
        x = Tensor(np.arange(4.0).reshape(1, 1, 2, 2))
        out = F.upsample_nearest(x, 2).data[0, 0]
        np.testing.assert_array_equal(out[:2, :2], 0.0)
        np.testing.assert_array_equal(out[2:, 2:], 3.0)

    def test_time_embedding_halves(self):
        emb = F.time_embedding(0, 8).data
        np.testing.assert_allclose(emb[:4], 0.0)
        np.testing.assert_allclose(emb[4:], 1.0)
        with pytest.raises(ShapeError):
            F.time_embedding(1, 5)


# =============================================================================
# Gradcheck
# =============================================================================

class TestGradcheck:

    def test_elementwise_chain(self, rng):
        with float64_mode():
            x = Tensor(rng.uniform(0.5, 1.5, size=(3, 4)), requires_grad=True)
            error = gradcheck(lambda: (x.exp() * x.log() + x.tanh() * x.sigmoid() + x.sqrt()).sum(), [x], eps=1e-6)
        assert error < 1e-4

    def test_conv2d_gradients(self, rng):
        with float64_mode():
            x = Tensor(rng.standard_normal((1, 2, 5, 5)), requires_grad=True)
            w = Tensor(rng.standard_normal((2, 2, 3, 3)), requires_grad=True)
            b = Tensor(rng.standard_normal(2), requires_grad=True)
            proj = Tensor(rng.standard_normal((1, 2, 3, 3)))
            error = gradcheck(lambda: (F.conv2d(x, w, b, stride=2, padding=1) * proj).sum(), [x, w, b], eps=1e-4)
        assert error < 1e-5

    def test_reflect_pad_gradients(self, rng):
        with float64_mode():
            x = Tensor(rng.standard_normal((1, 1, 4, 4)), requires_grad=True)
            proj = Tensor(rng.standard_normal((1, 1, 8, 6)))
            error = gradcheck(lambda: (F.pad2d(x, 2, 1, "reflect") * proj).sum(), [x], eps=1e-6)
        assert error < 1e-4

    def test_sampled_elements(self, rng):
        with float64_mode():
            x = Tensor(rng.standard_normal((10, 10)), requires_grad=True)
            error = gradcheck(lambda: (x * x).mean(), [x], eps=1e-6, samples_per_tensor=5, rng=rng)
        assert error < 1e-4

    def test_assert_gradcheck_reports_wrong_gradient(self):
        class Broken(F.Function):
            @staticmethod
            def forward(ctx, a):
                return a * a

            @staticmethod
            def backward(ctx, grad):
                return (grad,)

        with float64_mode():
            x = Tensor(np.array([1.5, -2.0]), requires_grad=True)
            with pytest.raises(GradcheckError, match="broken"):
                assert_gradcheck("broken", lambda: Broken.apply(x).sum(), [x], eps=1e-6)


# =============================================================================
# ParamStore / AdamW
# =============================================================================

def _store(**groups) -> ParamStore:
    store = ParamStore()
    for name, value in groups.items():
        store.add(name.replace("__", "."), Tensor(np.asarray(value, dtype=np.float64), dtype=np.float64))
    return store


class TestParamStore:

    def test_names_are_sorted_and_grouped(self):
        store = _store(pfm__b=[1.0, 2.0], encoder__a=[[1.0]], cpb__c=np.zeros((2, 2)))
        assert store.names() == ["cpb.c", "encoder.a", "pfm.b"]
        assert store.group_sizes() == {"cpb": 4, "encoder": 1, "pfm": 2}
        assert store.has_group("pfm") and not store.has_group("mid")

    def test_duplicate_name_rejected(self):
        store = _store(encoder__a=[1.0])
        with pytest.raises(KeyError):
            store.add("encoder.a", Tensor([2.0]))

    def test_freeze_all_except(self):
        store = _store(encoder__a=[1.0], pfm__b=[1.0], pfm__c=[1.0])
        store.freeze_all_except(["pfm"])
        assert [n for n, _ in store.trainable_items()] == ["pfm.b", "pfm.c"]
        assert not store["encoder.a"].requires_grad
        store.unfreeze()
        assert store.is_trainable("encoder.a")

    def test_prefix_match_respects_segments(self):
        store = _store(pfm__a=[1.0], pfmx__b=[1.0])
        store.freeze(["pfm"])
        assert not store.is_trainable("pfm.a")
        assert store.is_trainable("pfmx.b")

    def test_load_arrays_reports_missing(self):
        store = _store(encoder__a=[1.0, 2.0], pfm__b=[3.0])
        missing = store.load_arrays({"encoder.a": np.array([5.0, 6.0])})
        assert missing == ["pfm.b"]
        np.testing.assert_array_equal(store["encoder.a"].data, [5.0, 6.0])
        with pytest.raises(ShapeError):
            store.load_arrays({"encoder.a": np.zeros(3)})


class TestAdamW:

    def test_first_step_moves_by_lr(self):
        store = _store(encoder__p=[1.0, -2.0])
        p = store["encoder.p"]
        (p * p).sum().backward()
        adamw_step(store, OptimizerState(lr=0.1, weight_decay=0.0))
        np.testing.assert_allclose(p.data, [0.9, -1.9], atol=1e-6)

    def test_frozen_parameters_untouched(self):
        store = _store(encoder__a=[1.0, 1.0], pfm__b=[1.0, 1.0])
        store.freeze_all_except(["pfm"])
        before = store["encoder.a"].data.copy()
        ((store["encoder.a"] * store["pfm.b"]).sum()).backward()
        adamw_step(store, OptimizerState(lr=0.1))
        np.testing.assert_array_equal(store["encoder.a"].data, before)
        assert not np.array_equal(store["pfm.b"].data, [1.0, 1.0])

    def test_weight_decay_is_decoupled(self):
        store = _store(encoder__p=[2.0])
        p = store["encoder.p"]
        (p * 0.0).sum().backward()
        adamw_step(store, OptimizerState(lr=0.1, weight_decay=0.5))
        assert p.data[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)

    def test_missing_gradient_is_an_error(self):
        store = _store(encoder__p=[1.0], pfm__q=[1.0])
        (store["encoder.p"] * 2.0).sum().backward()
        with pytest.raises(ShapeError, match="pfm.q"):
            adamw_step(store, OptimizerState())
