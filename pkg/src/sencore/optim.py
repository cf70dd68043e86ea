"""Adam optimizer over a named parameter dict."""

from __future__ import annotations

import numpy as np

from . import kernels


class Adam:
    """Adam with bias correction, updating parameters in place.

    State (first and second moment estimates) is keyed by parameter name and
    allocated lazily at construction.  The per-element update is fused in
    :func:`sencore.kernels.adam_update`.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if not 0.0 < lr:
            raise ValueError(f"lr must be positive, got {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        """Apply one update from a full gradient dict (one entry per param)."""
        if grads.keys() != self.params.keys():
            missing = self.params.keys() - grads.keys()
            extra = grads.keys() - self.params.keys()
            raise KeyError(f"gradient dict mismatch: missing={missing}, extra={extra}")
        self.t += 1
        bc1 = 1.0 / (1.0 - self.beta1 ** self.t)
        bc2 = 1.0 / (1.0 - self.beta2 ** self.t)
        for name, p in self.params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(
                    f"gradient shape {g.shape} != param shape {p.shape} for {name!r}"
                )
            g = np.ascontiguousarray(g, dtype=p.dtype)
            kernels.adam_update(
                p, g, self.m[name], self.v[name],
                self.lr, self.beta1, self.beta2, bc1, bc2, self.eps,
            )
