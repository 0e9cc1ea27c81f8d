"""Reference receivers: conventional slicing and a decision-directed canceller."""

from dataclasses import dataclass

import numpy as np

from .transform import TransformPlan, admissible_mask
from .transmitter import bussgang_gain


def conventional_receive(y, constellation, plan=None, alpha=None):
    """Slice F^T y per dimension; with ``alpha`` the estimate is first divided by it."""
    y = np.asarray(y, dtype=float)
    plan = plan or TransformPlan(y.size)
    r = plan.adjoint(y)
    if alpha is not None:
        r = r / alpha
    return constellation.demap_coeffs(r)


@dataclass
class CancellerConfig:
    threshold: float
    constellation: object
    iterations: int = 3
    alpha: float = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("canceller needs at least one iteration")
        if self.alpha is None:
            self.alpha = bussgang_gain(self.threshold) if np.isfinite(self.threshold) else 1.0


def bussgang_cancel(y, config, plan=None, return_history=False):
    """Iterative Bussgang-noise cancellation.

    Each pass slices the current estimate, re-synthesises the clipped block,
    forms the distortion estimate ``f(z~) - alpha z~`` and removes its
    frequency-domain image from ``F^T y`` before rescaling by ``1/alpha``.
    """
    y = np.asarray(y, dtype=float)
    plan = plan or TransformPlan(y.size)
    const = config.constellation
    alpha = config.alpha
    T = config.threshold
    mask = admissible_mask(plan.size)
    ry = plan.adjoint(y)
    r = ry / alpha
    history = []
    for _ in range(config.iterations):
        xt = np.where(mask, const.hard_decide(r), 0.0)
        zt = plan.forward(xt)
        dist = np.clip(zt, -T, T) - alpha * zt
        r = (ry - plan.adjoint(dist)) / alpha
        if return_history:
            history.append({"x": xt, "z": zt, "distortion": dist, "r": r})
    bits = const.demap_coeffs(r)
    return (bits, history) if return_history else bits
