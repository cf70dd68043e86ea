"""Tests for the finite-difference gradient checker: exactness on simple
functions, detection of a planted backward bug, and its guard rails."""

import numpy as np
import pytest

import sencore.autodiff as ad
from sencore.autodiff import Tensor
from sencore.gradcheck import grad_check
from sencore.rng import Rng


def _rand(shape, seed, scale=1.0):
    return scale * np.random.default_rng(seed).standard_normal(shape)


class TestExactness:
    def test_linear_loss_is_exact(self):
        """Central differences are exact for linear maps, so the reported
        error is pure roundoff."""
        c = _rand((8,), 1)
        params = {"x": _rand((8,), 2)}

        def builder(leaves):
            return ad.sum_all(ad.mul_const(leaves["x"], c))

        report = grad_check(params, builder)
        assert report.coords_checked + report.small_coords == 8
        assert report.max_rel_error < 1e-9, report.summary()

    def test_quadratic_loss_is_exact(self):
        """The third derivative of a quadratic vanishes, so truncation error
        is zero and only roundoff remains."""
        params = {"a": _rand((2, 3), 3)}

        def builder(leaves):
            a = leaves["a"]
            return ad.sum_all(ad.matmul(a, ad.transpose(a, (1, 0))))

        report = grad_check(params, builder)
        assert report.max_rel_error < 1e-8, report.summary()

    def test_detects_planted_backward_bug(self):
        """An op whose backward returns 0.9x the true gradient is flagged
        with a relative error near 0.1."""

        def buggy_tanh(t):
            y = np.tanh(t.value)
            return Tensor(y, parents=(t,), bwd=lambda g: (0.9 * g * (1.0 - y * y),))

        params = {"x": _rand((6,), 4, 0.5)}

        def builder(leaves):
            return ad.sum_all(buggy_tanh(leaves["x"]))

        report = grad_check(params, builder)
        assert report.max_rel_error > 0.05, report.summary()

    def test_does_not_mutate_params(self):
        """The sweep perturbs a private copy, never the caller's arrays."""
        params = {"x": _rand((5,), 5)}
        snapshot = params["x"].copy()

        def builder(leaves):
            return ad.sum_all(ad.tanh(leaves["x"]))

        grad_check(params, builder)
        np.testing.assert_array_equal(params["x"], snapshot)

    def test_unreached_leaf_counts_as_zero_gradient(self):
        """A parameter absent from the loss graph checks clean: analytic
        zero against a numerically flat function."""
        params = {"x": _rand((4,), 6), "unused": _rand((3,), 7)}

        def builder(leaves):
            return ad.sum_all(leaves["x"])

        report = grad_check(params, builder)
        assert report.max_rel_error < 1e-9, report.summary()
        assert report.per_param_max_rel["unused"] == 0.0

    def test_saturated_coords_use_absolute_floor(self):
        """Where both gradients sit below the zero floor, coordinates are
        compared absolutely and excluded from the relative maximum."""
        params = {"x": np.full(5, 20.0)}

        def builder(leaves):
            return ad.sum_all(ad.tanh(leaves["x"]))

        report = grad_check(params, builder)
        assert report.small_coords == 5
        assert report.max_rel_error == 0.0
        assert report.max_abs_error_small < 1e-8


class TestSampling:
    def test_spot_check_visits_requested_count(self):
        params = {"x": _rand((100,), 8)}

        def builder(leaves):
            return ad.sum_all(ad.tanh(leaves["x"]))

        report = grad_check(params, builder, rng=Rng(9), samples_per_param=7)
        assert report.coords_checked + report.small_coords == 7

    def test_sampling_without_rng_is_rejected(self):
        params = {"x": _rand((10,), 10)}
        with pytest.raises(ValueError):
            grad_check(params, lambda lv: ad.sum_all(lv["x"]), samples_per_param=3)


class TestGuards:
    def test_epsilon_outside_range_is_rejected(self):
        params = {"x": np.zeros(2)}
        builder = lambda lv: ad.sum_all(lv["x"])  # noqa: E731
        with pytest.raises(ValueError):
            grad_check(params, builder, epsilon=1e-8)
        with pytest.raises(ValueError):
            grad_check(params, builder, epsilon=1e-2)

    def test_float32_params_are_rejected(self):
        params = {"x": np.zeros(2, dtype=np.float32)}
        with pytest.raises(ValueError):
            grad_check(params, lambda lv: ad.sum_all(lv["x"]))

    def test_nonfinite_base_loss_raises(self):
        params = {"x": np.zeros(2)}

        def builder(leaves):
            return ad.add_const(ad.sum_all(leaves["x"]), np.array(np.inf))

        with pytest.raises(FloatingPointError):
            grad_check(params, builder)

    def test_nonfinite_probe_evals_are_counted(self):
        """A singularity one step away from the base point is recorded in
        nonfinite_evals instead of poisoning the error statistics."""
        epsilon = 1e-5

        def reciprocal_gap(t):
            with np.errstate(divide="ignore"):
                y = 1.0 / (epsilon - t.value)
            return Tensor(
                y, parents=(t,), bwd=lambda g: (g * y * y,)
            )

        params = {"x": np.zeros(1)}

        def builder(leaves):
            return ad.sum_all(reciprocal_gap(leaves["x"]))

        report = grad_check(params, builder, epsilon=epsilon)
        assert report.nonfinite_evals == 1

    def test_summary_mentions_worst_coordinate(self):
        params = {"x": _rand((3,), 12)}

        def builder(leaves):
            return ad.sum_all(ad.tanh(leaves["x"]))

        report = grad_check(params, builder)
        text = report.summary()
        assert "max relative error" in text
        assert "x[" in text
