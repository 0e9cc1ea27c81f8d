"""Sum-product GAMP detector for clipped DMT blocks.

The model is ``y = f(F x) + w`` with ``f`` a symmetric clipper, ``F`` the
real IDFT of :mod:`clipgamp.transform` and ``x`` drawn from a per-dimension
square-QAM alphabet.  Each iteration runs an output half-step (posterior of
``z = F x`` under the clipped-Gaussian likelihood) and an input half-step
(posterior of ``x`` under the discrete prior).  The returned decisions come
from the iterate whose reconstruction ``f(F xhat)`` is closest to ``y``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .transform import TransformPlan, admissible_mask

VAR_FLOOR = kernels.VAR_FLOOR


class NumericalFailure(RuntimeError):
    pass


@dataclass
class GampConfig:
    noise_variance: float
    threshold: float
    constellation: object
    t_max: int = 30
    variance_mode: str = "scalar"
    # stop once the hard decisions have not changed over this many consecutive
    # iterations (early_stop + 1 identical decision vectors); 0 disables
    early_stop: int = 0
    # "hard": score each iterate by its sliced decisions; "soft": by xhat itself
    metric_on: str = "hard"
    keep_trace: bool = False

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if self.variance_mode not in ("scalar", "exact"):
            raise ValueError(f"unknown variance mode {self.variance_mode!r}")
        if self.early_stop < 0:
            raise ValueError("early_stop must be 0 (off) or positive")
        if self.metric_on not in ("hard", "soft"):
            raise ValueError(f"unknown metric input {self.metric_on!r}")
        if not self.noise_variance > 0:
            raise ValueError("GAMP needs a positive noise variance")


@dataclass
class GampState:
    xhat: np.ndarray
    vx: np.ndarray
    shat: np.ndarray
    t: int = 1
    phat: np.ndarray = None
    vp: np.ndarray = None
    zhat: np.ndarray = None
    vz: np.ndarray = None
    vs: np.ndarray = None
    rhat: np.ndarray = None
    vr: np.ndarray = None
    best_metric: float = np.inf
    best_x: np.ndarray = None
    best_t: int = 0


@dataclass
class GampResult:
    bits: np.ndarray
    x_best: np.ndarray
    iterations: int
    best_t: int
    metric_trace: list
    failed: bool = False
    # every input variance reached the floor: the recursion has nothing left
    # to update and stopped as converged
    collapsed: bool = False
    # samples, summed over iterations, with mu_z outside (0, mu_p]
    variance_violations: int = 0
    states: list = field(default_factory=list)

    @property
    def best_metric(self):
        return self.metric_trace[self.best_t - 1]


def init_state(N):
    """x = 0, unit variances, zero residual."""
    return GampState(xhat=np.zeros(N), vx=np.ones(N), shat=np.zeros(N))


def _abs2(plan):
    cached = getattr(plan, "_abs2_cache", None)
    if cached is None:
        cached = plan.abs2()
        object.__setattr__(plan, "_abs2_cache", cached)
    return cached


def output_step(state, y, plan, config):
    if config.variance_mode == "scalar":
        vp = np.full(plan.size, max(state.vx.mean(), VAR_FLOOR))
    else:
        vp = np.maximum(_abs2(plan) @ state.vx, VAR_FLOOR)
    phat = plan.forward(state.xhat) - vp * state.shat
    zhat, vz = kernels.output_moments(y, phat, vp, config.noise_variance, config.threshold)
    if not (np.all(np.isfinite(zhat)) and np.all(np.isfinite(vz))):
        raise NumericalFailure("non-finite output-node moments")
    state.phat, state.vp, state.zhat, state.vz = phat, vp, zhat, vz
    state.shat = (zhat - phat) / vp
    state.vs = (1.0 - vz / vp) / vp
    return state


def input_step(state, plan, config):
    mask = admissible_mask(plan.size)
    if config.variance_mode == "scalar":
        agg = np.full(plan.size, state.vs.mean())
    else:
        agg = _abs2(plan).T @ state.vs
    if not np.all(agg[mask] > 0) or not np.all(np.isfinite(agg[mask])):
        raise NumericalFailure("non-positive residual variance aggregate")
    vr = np.ones(plan.size)
    vr[mask] = np.maximum(1.0 / agg[mask], VAR_FLOOR)
    rhat = state.xhat + vr * plan.adjoint(state.shat)
    xhat, vx = kernels.input_moments(rhat, vr, config.constellation.points)
    xhat[~mask] = 0.0
    vx[~mask] = 0.0
    vx[mask] = np.maximum(vx[mask], VAR_FLOOR)
    state.rhat, state.vr = rhat, vr
    state.xhat, state.vx = xhat, vx
    state.t += 1
    return state


def euclidean_metric(y, xhat, plan, threshold):
    """sum_n (y_n - f([F xhat]_n))^2."""
    rec = np.clip(plan.forward(xhat), -threshold, threshold)
    return float(np.sum((np.asarray(y) - rec) ** 2))


def run(y, config, plan=None):
    """Detect one block.  Returns a :class:`GampResult`."""
    y = np.asarray(y, dtype=float)
    plan = plan or TransformPlan(y.size)
    if y.size != plan.size:
        raise ValueError(f"expected {plan.size} samples, got {y.size}")
    const = config.constellation
    mask = admissible_mask(plan.size)
    state = init_state(plan.size)
    trace = []
    states = []
    failed = collapsed = False
    violations = 0
    prev = None
    stable = 0
    for t in range(1, config.t_max + 1):
        try:
            output_step(state, y, plan, config)
            violations += int(np.count_nonzero(~((state.vz > 0) & (state.vz <= state.vp))))
            input_step(state, plan, config)
        except NumericalFailure:
            if np.all(state.vx[mask] <= VAR_FLOOR):
                collapsed = True
            else:
                failed = True
            break
        scored = state.xhat
        if config.metric_on == "hard":
            scored = np.where(mask, const.hard_decide(state.xhat), 0.0)
        metric = euclidean_metric(y, scored, plan, config.threshold)
        trace.append(metric)
        if metric < state.best_metric:
            state.best_metric = metric
            state.best_x = state.xhat.copy()
            state.best_t = t
        if config.keep_trace:
            states.append(_snapshot(state))
        if config.early_stop:
            dec = const.slice_levels(state.xhat[mask])
            stable = stable + 1 if prev is not None and np.array_equal(dec, prev) else 0
            prev = dec
            if stable >= config.early_stop:
                break
    x_best = state.best_x if state.best_x is not None else state.xhat
    return GampResult(
        bits=const.demap_coeffs(x_best),
        x_best=x_best,
        iterations=len(trace),
        best_t=state.best_t,
        metric_trace=trace,
        failed=failed,
        collapsed=collapsed,
        variance_violations=violations,
        states=states,
    )


def _snapshot(state):
    return {k: (v.copy() if isinstance(v, np.ndarray) else v)
            for k, v in vars(state).items() if k not in ("best_x",)}
