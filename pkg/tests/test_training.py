"""Training tests: gradient contract vs finite differences, clipping,
warm-up, Adam arithmetic, and the end-to-end loop."""

import math

import numpy as np
import pytest

from pnflows.bases import DirichletBase, GaussianBase, VmfBase
from pnflows.errors import DomainError, NonFiniteError
from pnflows.flows import ActNorm, FlowModel, build_flow_model
from pnflows.training import (AdamState, TrainConfig, adam_step, clip_gradients,
                              gradient, gradient_check, train, warmup_factor)


def south_pole(d):
    mu = np.zeros(d + 1)
    mu[-1] = -1.0
    return mu


def perturbed_model(base, d, rng, steps=2, width=8):
    model = build_flow_model(d, base, levels=1, steps=steps, width=width,
                             seed=int(rng.integers(1 << 31)))
    flat = model.get_flat_params()
    model.set_flat_params(flat + 0.1 * rng.standard_normal(flat.size))
    return model


class TestTrainConfig:
    def test_defaults_follow_recipe(self):
        cfg = TrainConfig(epochs=100)
        assert cfg.learning_rate == 1e-3
        assert cfg.clip_norm == 50.0
        assert cfg.warmup_epochs == 10

    def test_validation(self):
        with pytest.raises(DomainError):
            TrainConfig(epochs=-1)
        with pytest.raises(DomainError):
            TrainConfig(epochs=20, learning_rate=0.0)
        with pytest.raises(DomainError):
            TrainConfig(epochs=5, warmup_epochs=10)
        TrainConfig(epochs=0)  # zero-epoch config stays legal


class TestGradient:
    def test_actnorm_bias_gradient_is_mean_latent(self, rng):
        # With an identity chain up to one ActNorm and a Gaussian base,
        # loss = mean ||z||^2 / 2 + const, so d loss / d bias = mean z.
        layer = ActNorm(3)
        layer.initialized = True
        model = FlowModel(3, [layer], GaussianBase(3))
        x = rng.standard_normal((50, 3))
        _, grads = gradient(model, x)
        spec = model.param_spec
        names = [name for _, name, _ in spec]
        bias_grad = np.split(grads, np.cumsum([int(np.prod(s)) for _, _, s in spec]))[
            names.index("bias")]
        np.testing.assert_allclose(bias_grad, x.mean(axis=0), rtol=1e-10)

    def test_zero_initialized_coupling_matches_finite_differences(self, rng):
        model = build_flow_model(4, GaussianBase(4), levels=1, steps=1, width=8, seed=7)
        report = gradient_check(model, 0.5 * rng.standard_normal((6, 4)))
        assert report.worst <= 1e-4

    @pytest.mark.parametrize("base_fn", [
        lambda d: GaussianBase(d),
        lambda d: VmfBase(d, south_pole(d), 2.0 * d),
        lambda d: DirichletBase(d, np.full(d + 1, 2.0)),
    ], ids=["gaussian", "vmf", "dirichlet"])
    @pytest.mark.parametrize("d", [2, 8])
    def test_all_bases_and_maps(self, base_fn, d, rng):
        model = perturbed_model(base_fn(d), d, rng)
        batch = 0.4 * rng.standard_normal((5, d))
        report = gradient_check(model, batch)
        assert report.worst <= 1e-4, report.per_param

    def test_duplicated_rows_leave_gradient_unchanged(self, rng):
        model = perturbed_model(GaussianBase(3), 3, rng)
        batch = rng.standard_normal((4, 3))
        loss_a, grad_a = gradient(model, batch)
        loss_b, grad_b = gradient(model, np.concatenate([batch, batch]))
        assert loss_a == pytest.approx(loss_b, rel=1e-12)
        np.testing.assert_allclose(grad_a, grad_b, rtol=1e-9, atol=1e-12)

    def test_deterministic_for_fixed_batch(self, rng):
        model = perturbed_model(GaussianBase(3), 3, rng)
        batch = rng.standard_normal((4, 3))
        _, a = gradient(model, batch)
        _, b = gradient(model, batch)
        np.testing.assert_array_equal(a, b)


class TestClipGradients:
    def test_below_threshold_unchanged(self):
        g = np.array([6.0, 8.0])  # norm 10
        np.testing.assert_array_equal(clip_gradients(g, 50.0), g)

    def test_above_threshold_scaled(self):
        g = np.full(4, 50.0)  # norm 100
        clipped = clip_gradients(g, 50.0)
        np.testing.assert_allclose(clipped, g * 0.5, rtol=1e-12)

    def test_zero_gradients(self):
        np.testing.assert_array_equal(clip_gradients(np.zeros(3), 50.0), np.zeros(3))

    def test_never_increases_norm_and_keeps_direction(self, rng):
        for _ in range(50):
            g = rng.standard_normal(10) * rng.uniform(0.1, 200.0)
            clipped = clip_gradients(g, 50.0)
            assert np.linalg.norm(clipped) <= max(np.linalg.norm(g), 50.0) + 1e-9
            cos = g @ clipped / (np.linalg.norm(g) * np.linalg.norm(clipped))
            assert cos == pytest.approx(1.0, abs=1e-12)


class TestWarmup:
    def test_ramp_values(self):
        assert warmup_factor(0, 10) == pytest.approx(0.1)
        assert warmup_factor(9, 10) == pytest.approx(1.0)
        assert warmup_factor(50, 10) == 1.0

    def test_monotone_in_epoch(self):
        factors = [warmup_factor(e, 10) for e in range(15)]
        assert factors == sorted(factors)
        assert all(0.0 < f <= 1.0 for f in factors)


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        cfg = TrainConfig(epochs=1, warmup_epochs=0)
        params = np.array([1.0, -2.0])
        new, _ = adam_step(params, np.zeros(2), AdamState.zeros(2), cfg)
        np.testing.assert_array_equal(new, params)

    def test_first_step_magnitude_is_learning_rate(self):
        # Bias correction makes m_hat = g and v_hat = g^2 at t=1, so the
        # step is lr * g / (|g| + eps) ~ lr * sign(g).
        cfg = TrainConfig(epochs=1, warmup_epochs=0)
        new, _ = adam_step(np.zeros(1), np.array([2.0]), AdamState.zeros(1), cfg)
        assert abs(abs(new[0]) - cfg.learning_rate) <= 1e-6 * cfg.learning_rate + 1e-12
        assert new[0] < 0

    def test_repeated_gradient_shrinks_update(self):
        cfg = TrainConfig(epochs=1, warmup_epochs=0)
        state = AdamState.zeros(1)
        p0 = np.zeros(1)
        p1, state = adam_step(p0, np.array([3.0]), state, cfg)
        p2, state = adam_step(p1, np.array([3.0]), state, cfg)
        assert abs(p2[0] - p1[0]) <= abs(p1[0] - p0[0]) + 1e-9


class TestTrain:
    def test_zero_epochs_leaves_model_unchanged(self, rng):
        model = build_flow_model(2, GaussianBase(2), seed=0)
        before = model.get_flat_params()
        model, trace = train(model, rng.standard_normal((100, 2)),
                             TrainConfig(epochs=0))
        assert trace == []
        np.testing.assert_array_equal(model.get_flat_params(), before)

    def test_seeded_determinism_bitwise(self, rng):
        data = rng.standard_normal((300, 2))
        traces = []
        for _ in range(2):
            model = build_flow_model(2, GaussianBase(2), levels=1, steps=2, seed=5)
            _, trace = train(model, data, TrainConfig(epochs=3, warmup_epochs=2, seed=9))
            traces.append([t.nll for t in trace])
        assert traces[0] == traces[1]

    def test_vmf_training_converges_with_valid_latents(self):
        from pnflows.datasets import two_moons
        data = two_moons(600, noise=0.05, seed=3).data
        d = 2
        model = build_flow_model(d, VmfBase(d, south_pole(d), 2.0 * d),
                                 levels=1, steps=4, width=32, seed=1)
        model, trace = train(model, data, TrainConfig(epochs=12, warmup_epochs=4,
                                                      seed=2))
        # after warm-up the loss should not climb back up beyond noise
        tail = [t.nll for t in trace[4:]]
        assert tail[-1] <= tail[0] + 0.1
        z, _ = model.forward(data)
        s = model.to_manifold(z).point
        np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-8)
        assert np.all(s[:, -1] < 1.0)

    def test_final_partial_batch_used(self, rng):
        # 130 points with batch 128 leaves a 2-row remainder batch
        data = rng.standard_normal((130, 2))
        model = build_flow_model(2, GaussianBase(2), levels=1, steps=1, seed=0)
        _, trace = train(model, data, TrainConfig(epochs=1, warmup_epochs=1, seed=0))
        assert len(trace) == 1 and math.isfinite(trace[0].nll)

    def test_divergence_reports_epoch_and_batch(self, rng):
        data = 10.0 * rng.standard_normal((256, 2))
        model = build_flow_model(2, GaussianBase(2), levels=1, steps=2, seed=0)
        # one step at this rate pushes ActNorm scales past 1e160, so the
        # next batch's squared norms overflow to inf
        cfg = TrainConfig(epochs=3, warmup_epochs=0, learning_rate=1e160,
                          clip_norm=1e9, batch_size=64, seed=0)
        with np.errstate(over="ignore"), pytest.raises(NonFiniteError) as info:
            train(model, data, cfg)
        assert info.value.epoch is not None
        assert info.value.batch is not None

    def test_empty_dataset_rejected(self):
        model = build_flow_model(2, GaussianBase(2), seed=0)
        with pytest.raises(DomainError):
            train(model, np.zeros((0, 2)), TrainConfig(epochs=1, warmup_epochs=1))