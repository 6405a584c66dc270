"""Stacked-sigmoid noise model and utility losses, with hand-written adjoints.

The model computes the left half of the pmf from one logit per grid point::

    s_i = A**2 + sum_j B_j**2 * sigmoid(C * (x_i - F_j))
    p_left = s / (2 * sum(s))

and mirrors it onto the right half. Since ``r_i = log s_i``, this equals half
a softmax over ``r``. Every row is summed in the same order and each term is
nondecreasing in ``x``, so the left half is monotone to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgument
from .grid import Grid, NoisePmf


@dataclass
class SigmoidStackParams:
    a: float
    b: np.ndarray  # K + 1 amplitudes
    f: np.ndarray  # K + 1 centers
    slope: float = 500.0

    def __post_init__(self):
        self.a = float(self.a)
        self.b = np.asarray(self.b, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.b.shape != self.f.shape or self.b.ndim != 1 or self.b.size < 2:
            raise InvalidArgument("b and f must be 1-d with K + 1 >= 2 entries")
        if not self.slope > 0:
            raise InvalidArgument("slope must be positive")

    @property
    def k(self):
        return self.b.size - 1

    def to_vector(self):
        return np.concatenate([[self.a], self.b, self.f])

    @classmethod
    def from_vector(cls, theta, slope):
        m = (len(theta) - 1) // 2
        return cls(theta[0], theta[1:1 + m].copy(), theta[1 + m:1 + 2 * m].copy(), slope)


def left_points(grid: Grid):
    if grid.size % 2:
        raise InvalidArgument("the model needs an even number of grid points")
    return grid.points[: grid.size // 2]


def init_params(grid: Grid, k, slope=500.0, seed=0):
    """``A = 10``, amplitudes uniform on [0, 1], centers evenly spread over the left half."""
    if int(k) != k or k < 1:
        raise InvalidArgument("K must be a positive integer")
    rng = np.random.default_rng(seed)
    r = grid.half_width if grid.half_width is not None else grid.center - grid.points[0]
    return SigmoidStackParams(10.0, rng.random(int(k) + 1), np.linspace(-r, 0.0, int(k) + 1), slope)


def _mirror(left):
    return np.concatenate([left, left[::-1]])


def _amplitude_scale(params):
    """Power of two near the largest amplitude.

    The pmf is invariant under a common rescaling of ``A`` and ``B``, and a
    power-of-two factor is exact, so dividing by it changes nothing except
    keeping the squares away from underflow and overflow.
    """
    top = max(abs(params.a), float(np.max(np.abs(params.b))))
    if top == 0.0 or not np.isfinite(top):
        raise InvalidArgument("amplitudes must be finite and not all zero")
    return math.ldexp(1.0, math.frexp(top)[1] - 1)


def model_forward(params: SigmoidStackParams, grid: Grid):
    m = _amplitude_scale(params)
    s = kernels.stack_forward(left_points(grid), params.a / m, params.b / m, params.f, params.slope)
    left = s / (2.0 * s.sum())
    return NoisePmf(grid, _mirror(left), {"generator": "sigmoid_stack", "K": str(params.k)})


def model_backward(params: SigmoidStackParams, grid: Grid, gp):
    """Parameter adjoint vector (A, B, F) for an upstream gradient ``gp`` on the full pmf."""
    x = left_points(grid)
    n = x.size
    m = _amplitude_scale(params)
    a, b = params.a / m, params.b / m
    s = kernels.stack_forward(x, a, b, params.f, params.slope)
    total = s.sum()
    g_left = gp[:n] + gp[::-1][:n]
    gs = g_left / (2.0 * total) - float(g_left @ s) / (2.0 * total * total)
    ga, gb, gf = kernels.stack_backward(x, a, b, params.f, params.slope, gs)
    # scale invariance makes the derivative through m vanish
    return np.concatenate([[ga / m], gb / m, gf])


def utility_loss(pmf: NoisePmf, order):
    """``sum |x| p`` for order 1, ``sqrt(sum x**2 p)`` for order 2, literal coordinates."""
    return utility_and_grad(pmf.points, pmf.p, order)[0]


def utility_and_grad(x, p, order):
    if order == 1:
        ax = np.abs(x)
        return float(ax @ p), ax
    if order == 2:
        x2 = x * x
        u = float(np.sqrt(x2 @ p))
        return u, (x2 / (2.0 * u) if u > 0 else np.zeros_like(x))
    raise InvalidArgument("utility order must be 1 or 2")


@dataclass(frozen=True)
class UtilitySchedule:
    start: float = 0.5
    half_life: float = 2500.0
    floor: float = 1e-7
    decay: bool = True

    def weight(self, t):
        return utility_weight(t, self)


def utility_weight(t, schedule: UtilitySchedule | None = None):
    """``max(start / 2**(t / half_life), floor)``; constant ``start`` when decay is off."""
    if t < 0:
        raise InvalidArgument("epoch must be nonnegative")
    schedule = schedule or UtilitySchedule()
    if not schedule.decay:
        return schedule.start
    return max(schedule.start * 2.0 ** -(t / schedule.half_life), schedule.floor)
