import math

import numpy as np
import pytest

from polypgan.core_types import make_batch
from polypgan.networks import (
    DiscriminatorConfig,
    GeneratorConfig,
)
from polypgan.training import (
    AdamMoments,
    TrainConfig,
    adam_update,
    discriminator_loss,
    feature_matching_loss,
    generator_loss,
    init_train_state,
    train_step,
)


def small_configs():
    gen_cfg = GeneratorConfig(base_filters=2, levels=3)
    disc_cfg = DiscriminatorConfig(base_filters=2)
    return gen_cfg, disc_cfg


def toy_batch(rng, n=2, size=16):
    from conftest import random_pair

    pairs = [random_pair(rng, size, size, f"p{i}") for i in range(n)]
    return make_batch(pairs)


class TestLossValues:
    def test_d_loss_at_half(self):
        half = np.full((1, 1, 3, 3), 0.5, dtype=np.float32)
        loss, gr, gf = discriminator_loss(half, half)
        assert loss == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_d_loss_perfect(self):
        r = np.full((1, 1, 2, 2), 1.0 - 1e-6, dtype=np.float64)
        f = np.full((1, 1, 2, 2), 1e-6, dtype=np.float64)
        loss, _, _ = discriminator_loss(r, f)
        assert loss == pytest.approx(-2 * math.log1p(-1e-6), abs=1e-12)

    def test_d_loss_finite_at_exact_bounds(self):
        r = np.zeros((1, 1, 2, 2), dtype=np.float32)
        f = np.ones((1, 1, 2, 2), dtype=np.float32)
        loss, gr, gf = discriminator_loss(r, f)
        assert np.isfinite(loss)
        # clamped values sit outside the differentiable interior
        assert not gr.any() and not gf.any()

    def test_g_loss_saturating_at_half(self):
        half = np.full((2, 1, 2, 2), 0.5, dtype=np.float64)
        loss, grad = generator_loss(half, "saturating")
        assert loss == pytest.approx(math.log(0.5), abs=1e-12)
        np.testing.assert_allclose(grad, -2.0 / half.size, atol=1e-12)

    def test_g_loss_non_saturating_at_half(self):
        half = np.full((2, 1, 2, 2), 0.5, dtype=np.float64)
        loss, grad = generator_loss(half, "non_saturating")
        assert loss == pytest.approx(math.log(2), abs=1e-12)
        np.testing.assert_allclose(grad, -2.0 / half.size, atol=1e-12)

    def test_loss_algebra(self, rng):
        """d_loss decomposes into its real and fake halves exactly."""
        r = rng.uniform(0.1, 0.9, (2, 1, 3, 3))
        f = rng.uniform(0.1, 0.9, (2, 1, 3, 3))
        loss, _, _ = discriminator_loss(r, f)
        real_part = -float(np.mean(np.log(r)))
        fake_part = -float(np.mean(np.log1p(-f)))
        assert loss == pytest.approx(real_part + fake_part, abs=1e-12)
        g_sat, _ = generator_loss(f, "saturating")
        assert g_sat == pytest.approx(-fake_part, abs=1e-12)

    def test_loss_gradients_fd(self, rng):
        f = rng.uniform(0.2, 0.8, (1, 1, 4, 4))
        for mode in ("saturating", "non_saturating"):
            loss, grad = generator_loss(f, mode)
            step = 1e-7
            idx = (0, 0, 1, 2)
            fp = f.copy()
            fp[idx] += step
            fm = f.copy()
            fm[idx] -= step
            fd = (generator_loss(fp, mode)[0] - generator_loss(fm, mode)[0]) / (
                2 * step
            )
            assert grad[idx] == pytest.approx(fd, rel=1e-5)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            generator_loss(np.full((1, 1, 1, 1), 0.5), "wasserstein")


class TestFeatureMatching:
    def test_identical_features_zero(self, rng):
        a = rng.standard_normal((1, 4, 5, 5))
        loss, grad = feature_matching_loss(a, a.copy())
        assert loss == 0.0
        assert not grad.any()

    def test_constant_offset(self):
        a = np.zeros((1, 2, 3, 3))
        b = np.full((1, 2, 3, 3), 0.25)
        loss, grad = feature_matching_loss(a, b)
        assert loss == pytest.approx(0.25, abs=1e-12)
        np.testing.assert_allclose(grad, 1.0 / b.size)

    def test_gradient_sign(self, rng):
        a = rng.standard_normal((1, 1, 2, 2))
        b = a + np.array([[[[1.0, -1.0], [2.0, -0.5]]]])
        _, grad = feature_matching_loss(a, b)
        np.testing.assert_allclose(grad, np.sign(b - a) / 4.0)


class TestAdam:
    def test_zero_grad_is_noop(self):
        p = np.ones((3,), dtype=np.float64)
        named = [("p", p)]
        opt = AdamMoments.zeros_like(named)
        adam_update(named, {"p": np.zeros(3)}, opt, 1, 0.1, 0.5, 0.999)
        np.testing.assert_array_equal(p, np.ones(3))

    def test_first_step_magnitude(self):
        # bias correction makes the first step lr * g / (|g| + eps)
        p = np.zeros((1,), dtype=np.float64)
        named = [("p", p)]
        opt = AdamMoments.zeros_like(named)
        adam_update(named, {"p": np.array([4.0])}, opt, 1, 0.01, 0.5, 0.999)
        assert p[0] == pytest.approx(-0.01, rel=1e-6)

    def test_descends_quadratic(self):
        p = np.array([5.0])
        named = [("p", p)]
        opt = AdamMoments.zeros_like(named)
        for step in range(1, 200):
            adam_update(named, {"p": 2 * p.copy()}, opt, step, 0.1, 0.5, 0.999)
        assert abs(p[0]) < 0.5


class TestTrainStep:
    def test_updates_both_networks(self, rng):
        gen_cfg, disc_cfg = small_configs()
        state = init_train_state(gen_cfg, disc_cfg, seed=0)
        before_g = [t.copy() for _, t in state.gen_params.named_tensors()]
        before_d = [t.copy() for _, t in state.disc_params.named_tensors()]
        rec = train_step(state, toy_batch(rng), TrainConfig(), gen_cfg, disc_cfg)
        assert state.step == 1
        assert np.isfinite(rec.d_loss) and np.isfinite(rec.g_loss)
        changed_g = any(
            not np.array_equal(a, b)
            for a, (_, b) in zip(before_g, state.gen_params.named_tensors())
        )
        changed_d = any(
            not np.array_equal(a, b)
            for a, (_, b) in zip(before_d, state.disc_params.named_tensors())
        )
        assert changed_g and changed_d

    def test_deterministic(self, rng):
        gen_cfg, disc_cfg = small_configs()
        batch = toy_batch(rng)
        recs = []
        finals = []
        for _ in range(2):
            state = init_train_state(gen_cfg, disc_cfg, seed=7)
            cfg = TrainConfig(seed=7)
            r = [train_step(state, batch, cfg, gen_cfg, disc_cfg) for _ in range(3)]
            recs.append(r)
            finals.append([t.copy() for _, t in state.gen_params.named_tensors()])
        assert recs[0] == recs[1]
        for a, b in zip(finals[0], finals[1]):
            np.testing.assert_array_equal(a, b)

    def test_feature_matching_mode_runs(self, rng):
        gen_cfg, disc_cfg = small_configs()
        state = init_train_state(gen_cfg, disc_cfg, seed=3)
        cfg = TrainConfig(feature_matching=True)
        rec = train_step(state, toy_batch(rng), cfg, gen_cfg, disc_cfg)
        assert rec.g_loss >= 0.0  # mean absolute difference

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(generator_loss_mode="hinge")


class TestDiscriminatorOnly:
    def test_separates_fixed_fakes(self, rng):
        """Trained alone against frozen fakes the discriminator finds a
        margin: mean(real) - mean(fake) grows past 0.3 within 50 steps."""
        from polypgan.training import discriminator_step

        gen_cfg, disc_cfg = small_configs()
        state = init_train_state(gen_cfg, disc_cfg, seed=0)
        batch = toy_batch(rng, n=4)
        fake = np.tanh(
            rng.standard_normal(batch.masks.data.shape).astype(np.float32)
        )
        cfg = TrainConfig()
        for _ in range(50):
            _, r_mean, f_mean = discriminator_step(
                state, batch, cfg, gen_cfg, disc_cfg, fake
            )
            state.step += 1
        assert r_mean - f_mean > 0.3
