"""Tests for the Adam optimizer: hand-checked steps, an independent
elementwise oracle, and input validation."""

import numpy as np
import pytest

from sencore.optim import Adam


def _reference_adam(params, grad_seq, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Plain-numpy Adam recurrence, one independent state per parameter."""
    p = {k: v.copy() for k, v in params.items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(x) for k, x in params.items()}
    t = 0
    for grads in grad_seq:
        t += 1
        for name in p:
            g = grads[name]
            m[name] = beta1 * m[name] + (1.0 - beta1) * g
            v[name] = beta2 * v[name] + (1.0 - beta2) * g * g
            m_hat = m[name] / (1.0 - beta1 ** t)
            v_hat = v[name] / (1.0 - beta2 ** t)
            p[name] = p[name] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return p, m, v


class TestFirstStep:
    def test_unit_gradient_moves_by_learning_rate(self):
        """From zero state, a unit gradient with lr=0.1 lands at -0.1.

        Bias correction makes the very first step lr * g / (|g| + eps).
        """
        w = np.array([0.0])
        opt = Adam({"w": w}, lr=0.1)
        opt.step({"w": np.array([1.0])})
        np.testing.assert_allclose(w, [-0.1], rtol=0, atol=1e-6)

    def test_first_step_opposes_gradient_sign(self):
        """Each element moves against its own gradient's sign."""
        rng = np.random.default_rng(11)
        w = rng.standard_normal(64)
        g = rng.standard_normal(64)
        g[g == 0] = 1.0
        before = w.copy()
        Adam({"w": w}, lr=0.01).step({"w": g})
        assert np.all(np.sign(w - before) == -np.sign(g))

    def test_first_step_magnitude_is_scale_free(self):
        """Gradients spanning six orders of magnitude all step by ~lr."""
        for mag in (1e-3, 1.0, 1e3):
            w = np.zeros(2)
            Adam({"w": w}, lr=0.05).step({"w": np.array([mag, -mag])})
            np.testing.assert_allclose(w, [-0.05, 0.05], rtol=1e-4)

    def test_zero_gradient_is_identity(self):
        """An all-zero gradient leaves the parameters bit-identical."""
        w = np.array([1.5, -2.25, 0.5])
        before = w.copy()
        opt = Adam({"w": w}, lr=0.3)
        opt.step({"w": np.zeros(3)})
        np.testing.assert_array_equal(w, before)


class TestTrajectory:
    def test_constant_gradient_walks_linearly(self):
        """Under a constant gradient, bias correction cancels the moment
        warm-up, so k steps travel k * lr."""
        w = np.array([0.0])
        opt = Adam({"w": w}, lr=0.1)
        for _ in range(10):
            opt.step({"w": np.array([1.0])})
        np.testing.assert_allclose(w, [-1.0], rtol=0, atol=1e-6)

    def test_matches_elementwise_oracle(self):
        """25 steps on random gradients agree with the plain-numpy
        recurrence to near machine precision, including the moments."""
        rng = np.random.default_rng(23)
        params = {
            "a": rng.standard_normal((4, 3)),
            "b": rng.standard_normal(7),
        }
        grad_seq = [
            {k: rng.standard_normal(v.shape) for k, v in params.items()}
            for _ in range(25)
        ]
        live = {k: v.copy() for k, v in params.items()}
        opt = Adam(live, lr=0.02, beta1=0.85, beta2=0.99, eps=1e-8)
        for grads in grad_seq:
            opt.step(grads)
        want_p, want_m, want_v = _reference_adam(
            params, grad_seq, lr=0.02, beta1=0.85, beta2=0.99, eps=1e-8
        )
        for name in params:
            np.testing.assert_allclose(live[name], want_p[name], rtol=1e-12)
            np.testing.assert_allclose(opt.m[name], want_m[name], rtol=1e-12)
            np.testing.assert_allclose(opt.v[name], want_v[name], rtol=1e-12)

    def test_step_counter_increments(self):
        w = np.zeros(1)
        opt = Adam({"w": w}, lr=0.1)
        assert opt.t == 0
        opt.step({"w": np.ones(1)})
        opt.step({"w": np.ones(1)})
        assert opt.t == 2

    def test_float32_params_stay_float32(self):
        """Single-precision parameters update in their own dtype."""
        w = np.zeros(5, dtype=np.float32)
        opt = Adam({"w": w}, lr=0.1)
        opt.step({"w": np.ones(5, dtype=np.float32)})
        assert w.dtype == np.float32
        assert opt.m["w"].dtype == np.float32
        np.testing.assert_allclose(w, np.full(5, -0.1), rtol=1e-5)


class TestValidation:
    def test_rejects_nonpositive_lr(self):
        with pytest.raises(ValueError):
            Adam({"w": np.zeros(1)}, lr=0.0)
        with pytest.raises(ValueError):
            Adam({"w": np.zeros(1)}, lr=-0.1)

    def test_rejects_betas_outside_unit_interval(self):
        with pytest.raises(ValueError):
            Adam({"w": np.zeros(1)}, lr=0.1, beta1=1.0)
        with pytest.raises(ValueError):
            Adam({"w": np.zeros(1)}, lr=0.1, beta2=-0.01)

    def test_rejects_mismatched_gradient_keys(self):
        opt = Adam({"w": np.zeros(1), "b": np.zeros(1)}, lr=0.1)
        with pytest.raises(KeyError):
            opt.step({"w": np.zeros(1)})
        with pytest.raises(KeyError):
            opt.step({"w": np.zeros(1), "b": np.zeros(1), "c": np.zeros(1)})

    def test_rejects_mismatched_gradient_shape(self):
        opt = Adam({"w": np.zeros((2, 3))}, lr=0.1)
        with pytest.raises(ValueError):
            opt.step({"w": np.zeros((3, 2))})
