"""Finite-difference verification of the backward pass.

``grad_check`` compares analytic gradients (one reverse sweep) against
central differences, coordinate by coordinate.  The loss must be rebuilt
from scratch for every evaluation, so the caller supplies a builder that
maps a dict of leaf tensors to a scalar loss tensor.  Builders that involve
dropout must construct their own rng with a fixed seed on every call; the
loss is then a fixed, differentiable function of the parameters and central
differences are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, backward
from .rng import Rng


@dataclass
class GradCheckReport:
    """Outcome of one finite-difference sweep."""

    coords_checked: int = 0
    max_rel_error: float = 0.0
    worst_param: str = ""
    worst_index: int = -1
    worst_analytic: float = 0.0
    worst_numeric: float = 0.0
    # coordinates where both gradients sit below the zero floor are compared
    # absolutely instead of relatively
    small_coords: int = 0
    max_abs_error_small: float = 0.0
    nonfinite_evals: int = 0
    per_param_max_rel: dict[str, float] = field(default_factory=dict)

    def summary(self) -> str:
        return (
            f"checked {self.coords_checked} coordinates: "
            f"max relative error {self.max_rel_error:.3e} "
            f"({self.worst_param}[{self.worst_index}]: "
            f"analytic {self.worst_analytic:.6e}, numeric {self.worst_numeric:.6e}); "
            f"{self.small_coords} near-zero coords, "
            f"max abs error there {self.max_abs_error_small:.3e}; "
            f"{self.nonfinite_evals} non-finite evaluations"
        )


def _loss_value(params: dict[str, np.ndarray], loss_builder) -> float:
    leaves = {name: Tensor(value) for name, value in params.items()}
    return float(loss_builder(leaves).value)


def grad_check(
    params: dict[str, np.ndarray],
    loss_builder,
    epsilon: float = 1e-5,
    rng: Rng | None = None,
    samples_per_param: int = 0,
    zero_floor: float = 1e-7,
) -> GradCheckReport:
    """Check analytic gradients of ``loss_builder`` against central differences.

    ``samples_per_param`` > 0 spot-checks that many coordinates per parameter
    (sampled via ``rng``); 0 sweeps every coordinate.  Parameters must be
    float64: float32 step sizes cannot resolve a central difference at the
    tolerances this check is meant to certify.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon {epsilon} outside the useful range [1e-7, 1e-3]")
    for name, value in params.items():
        if value.dtype != np.float64:
            raise ValueError(f"grad_check requires float64 params; {name!r} is {value.dtype}")
    if samples_per_param > 0 and rng is None:
        raise ValueError("sampling coordinates requires an rng")

    leaves = {name: Tensor(value.copy()) for name, value in params.items()}
    loss = loss_builder(leaves)
    if not np.isfinite(loss.value):
        raise FloatingPointError(f"loss is not finite at the base point: {loss.value}")
    backward(loss)
    analytic = {
        name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value))
        for name, leaf in leaves.items()
    }

    work = {name: value.copy() for name, value in params.items()}
    report = GradCheckReport()
    for name, value in params.items():
        flat = work[name].ravel()
        a_flat = analytic[name].ravel()
        n_coords = flat.size
        if samples_per_param > 0 and samples_per_param < n_coords:
            coords = rng.sample_without_replacement(n_coords, samples_per_param)
        else:
            coords = range(n_coords)
        param_max = 0.0
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            hi = _loss_value(work, loss_builder)
            flat[idx] = orig - epsilon
            lo = _loss_value(work, loss_builder)
            flat[idx] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                report.nonfinite_evals += 1
                continue
            numeric = (hi - lo) / (2.0 * epsilon)
            a = float(a_flat[idx])
            denom = max(abs(a), abs(numeric))
            report.coords_checked += 1
            if denom < zero_floor:
                report.small_coords += 1
                report.max_abs_error_small = max(
                    report.max_abs_error_small, abs(a - numeric)
                )
                continue
            rel = abs(a - numeric) / denom
            param_max = max(param_max, rel)
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst_param = name
                report.worst_index = int(idx)
                report.worst_analytic = a
                report.worst_numeric = numeric
        report.per_param_max_rel[name] = param_max
    return report
