"""Loss assembly, reverse pass and the Adam training loop."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import buckets, moments
from .curves import reference_delta
from .errors import InvalidArgument, TrainingError
from .grid import NoisePmf, make_grid
from .model import (SigmoidStackParams, UtilitySchedule, init_params, model_backward, model_forward,
                    utility_and_grad)
from .worst_case import (mixture_arrays, mixture_arrays_adjoint, sensitivity_pair, shift_arrays,
                         shift_arrays_adjoint, subsampled_pair, swap)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
COLLAPSE_DELTA = 0.99


@dataclass
class TrainConfig:
    half_width: float = 5.0
    half_points: int = 1000
    bias: float = 1e-5
    k: int = 500
    slope: float = 500.0
    accountant: str = "adp"
    utility_order: int = 1
    eps: float = 0.3
    n: int = 1
    epochs: int = 5000
    lr: float = 0.01
    lr_decay: float = 0.99995
    schedule: UtilitySchedule = field(default_factory=UtilitySchedule)
    h: int = 250
    f: float = 1.002
    seed: int = 0
    scenario: str = "sensitivity"
    sensitivity: float = 1.0
    q: float = 0.1
    clip: float = 1.0
    direction: str | None = None
    grad_mode: str = "surrogate"
    lam_sq_init: float = 1.0
    check_collapse: bool = True

    def __post_init__(self):
        if self.accountant not in ("ma", "adp", "pdp"):
            raise InvalidArgument(f"accountant must be ma, adp or pdp, got {self.accountant!r}")
        if self.utility_order not in (1, 2):
            raise InvalidArgument("utility_order must be 1 or 2")
        if self.scenario not in ("sensitivity", "dpsgd"):
            raise InvalidArgument(f"unknown scenario {self.scenario!r}")
        if self.direction is None:
            self.direction = "ab" if self.scenario == "sensitivity" else "ba"
        if self.direction not in ("ab", "ba", "max"):
            raise InvalidArgument("direction must be ab, ba or max")
        if self.grad_mode not in ("exact", "surrogate"):
            raise InvalidArgument("grad_mode must be exact or surrogate")
        for name in ("half_width", "slope", "lr", "lr_decay", "sensitivity", "clip"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.eps < 0:
            raise InvalidArgument("eps must be nonnegative")
        for name in ("n", "epochs", "k", "half_points"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidArgument(f"{name} must be a positive integer")
        if self.scenario == "dpsgd" and not 0 < self.q < 1:
            raise InvalidArgument("q must lie in (0, 1)")
        self.bucket_config()  # validates h and f

    @property
    def grid(self):
        return make_grid(self.half_width, self.half_points, self.bias)

    def bucket_config(self):
        return buckets.BucketConfig(int(self.h), float(self.f))


@dataclass
class LossParts:
    total: float
    lx: float
    utility: float
    weight: float


class Objective:
    """Total loss ``l^X + w * U`` and its gradient in the flat parameter vector.

    The vector holds ``A``, the ``K + 1`` amplitudes, the ``K + 1`` centers and,
    for the moments accountant, the trailing ``lambda_sq``.
    """

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        self.points = self.grid.points
        self.bcfg = cfg.bucket_config()
        step_size = cfg.sensitivity if cfg.scenario == "sensitivity" else cfg.clip
        self.shift = self.grid.shift_cells(step_size)

    def params(self, theta):
        m = 1 + 2 * (self.cfg.k + 1)
        return SigmoidStackParams.from_vector(theta[:m], self.cfg.slope), (theta[m] if len(theta) > m else None)

    def initial_theta(self):
        p = init_params(self.grid, self.cfg.k, self.cfg.slope, self.cfg.seed)
        theta = p.to_vector()
        if self.cfg.accountant == "ma":
            theta = np.append(theta, self.cfg.lam_sq_init)
        return theta

    # pair construction on raw arrays, direction A || B
    def pair_arrays(self, p):
        if self.cfg.scenario == "sensitivity":
            return shift_arrays(p, self.shift)
        return mixture_arrays(p, self.shift, self.cfg.q)

    def pair_adjoint(self, ga, gb):
        if self.cfg.scenario == "sensitivity":
            return shift_arrays_adjoint(ga, gb, self.shift)
        return mixture_arrays_adjoint(ga, gb, self.shift, self.cfg.q)

    def bound(self, a, b, lam_sq):
        cfg = self.cfg
        if cfg.accountant == "ma":
            return moments.ma_bound_and_grad(a, b, cfg.n, cfg.eps, lam_sq)
        value, ga, gb = buckets.bucket_bound_and_grad(a, b, cfg.n, cfg.eps, self.bcfg, cfg.accountant, cfg.grad_mode)
        return value, ga, gb, 0.0

    def lx_and_grad(self, p, lam_sq):
        a, b = self.pair_arrays(p)
        options = []
        if self.cfg.direction in ("ab", "max"):
            value, ga, gb, gl = self.bound(a, b, lam_sq)
            options.append((value, ga, gb, gl))
        if self.cfg.direction in ("ba", "max"):
            value, gb, ga, gl = self.bound(b, a, lam_sq)
            options.append((value, ga, gb, gl))
        value, ga, gb, gl = max(options, key=lambda o: o[0])
        return value, self.pair_adjoint(ga, gb), gl

    def __call__(self, theta, epoch):
        """Return ``(LossParts, gradient)`` at ``theta``."""
        params, lam_sq = self.params(theta)
        pmf = model_forward(params, self.grid)
        lx, gp, gl = self.lx_and_grad(pmf.p, lam_sq)
        w = self.cfg.schedule.weight(epoch)
        u, gu = utility_and_grad(self.points, pmf.p, self.cfg.utility_order)
        grad = model_backward(params, self.grid, gp + w * gu)
        if lam_sq is not None:
            grad = np.append(grad, gl)
        return LossParts(lx + w * u, lx, u, w), grad


class Adam:
    def __init__(self, size, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, theta, grad, lr):
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        # overflow is reported by the caller's finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            return theta - lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    pmf: NoisePmf
    params: SigmoidStackParams
    trace: dict  # epoch-indexed arrays: total, lx, utility, w_t, lr
    lam_sq: float | None
    wall_clock: float
    seed: int
    collapsed: bool
    reference_delta: float | None
    meta: dict

    def metrics_csv(self):
        cols = ("total", "lx", "utility", "w_t", "lr")
        lines = ["epoch," + ",".join(cols)]
        for t in range(len(self.trace["total"])):
            lines.append(f"{t}," + ",".join(f"{float(self.trace[c][t]):.16e}" for c in cols))
        return "\n".join(lines) + "\n"


def scenario_pair(pmf, cfg: TrainConfig):
    """Worst-case pair of the configured scenario, oriented as trained (A || B)."""
    pair = sensitivity_pair(pmf, cfg.sensitivity) if cfg.scenario == "sensitivity" else \
        subsampled_pair(pmf, cfg.q, cfg.clip)
    return swap(pair) if cfg.direction == "ba" else pair


def evaluate_reference(pmf, cfg: TrainConfig):
    pair = scenario_pair(pmf, cfg)
    kind = "pdp" if cfg.accountant == "pdp" else "adp"
    return reference_delta(pair, cfg.n, cfg.eps, kind, both=cfg.direction == "max")


def train(cfg: TrainConfig, callback=None):
    """Adam on the total loss for ``cfg.epochs`` epochs with exponential learning-rate decay."""
    start = time.perf_counter()
    objective = Objective(cfg)
    theta = objective.initial_theta()
    adam = Adam(theta.size)
    keys = ("total", "lx", "utility", "w_t", "lr")
    trace = {k: np.empty(cfg.epochs) for k in keys}
    for t in range(cfg.epochs):
        parts, grad = objective(theta, t)
        if not (math.isfinite(parts.total) and np.all(np.isfinite(grad))):
            raise TrainingError(t, "non-finite loss or gradient", theta.copy())
        lr = cfg.lr * cfg.lr_decay ** t
        for key, val in zip(keys, (parts.total, parts.lx, parts.utility, parts.weight, lr)):
            trace[key][t] = val
        new = adam.step(theta, grad, lr)
        if not np.all(np.isfinite(new)):
            raise TrainingError(t, "non-finite parameters after the update", theta.copy())
        theta = new
        if callback is not None:
            callback(t, parts)
    params, lam_sq = objective.params(theta)
    pmf = model_forward(params, objective.grid)
    ref = None
    collapsed = False
    if cfg.check_collapse:
        ref = evaluate_reference(pmf, cfg)
        u1 = utility_and_grad(objective.points, pmf.p, cfg.utility_order)[0]
        collapsed = ref > COLLAPSE_DELTA and u1 < objective.grid.step
    meta = {"adam_beta1": ADAM_BETA1, "adam_beta2": ADAM_BETA2, "adam_eps": ADAM_EPS,
            "config": {k: v for k, v in asdict(cfg).items()}}
    pmf.meta.update({"accountant": cfg.accountant, "eps": repr(cfg.eps), "n": str(cfg.n),
                     "seed": str(cfg.seed), "epochs": str(cfg.epochs)})
    return TrainResult(pmf, params, trace, None if lam_sq is None else float(lam_sq),
                       time.perf_counter() - start, cfg.seed, collapsed, ref, meta)
