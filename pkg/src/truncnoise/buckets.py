"""Bucketed privacy-loss distributions: composition and ADP/PDP upper bounds.

A bucket ``j`` in ``-h+1..h`` holds the mass of outputs whose loss ``L``
satisfies ``(j-1) ln f < L <= j ln f``; bucket ``-h`` holds every loss at or
below ``-h ln f`` and the infinity bucket holds distinguishing events plus
losses above ``h ln f``. Treating each bucket as if all of its mass sat at its
upper edge keeps every delta computed from it an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgument

MAX_FACTOR = 1.01


@dataclass(frozen=True)
class BucketConfig:
    h: int
    f: float
    allow_coarse: bool = False  # permit f > MAX_FACTOR, e.g. for hand-checkable examples

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 1:
            raise InvalidArgument("h must be a positive integer")
        if not self.f > 1.0 or (self.f > MAX_FACTOR and not self.allow_coarse):
            raise InvalidArgument(f"factor f must satisfy 1 < f <= {MAX_FACTOR}, got {self.f!r}")

    @property
    def log_f(self):
        return math.log(self.f)

    @classmethod
    def covering(cls, max_loss, h, coverage=1.5, f_min=1.0 + 1e-9):
        """Config whose finite range ``h ln f`` spans ``coverage * max_loss`` (f capped)."""
        f = math.exp(coverage * max(max_loss, 1e-12) / h)
        return cls(int(h), float(min(max(f, f_min), MAX_FACTOR)))


@dataclass
class BucketedLoss:
    finite: np.ndarray  # 2h+1 masses for indices -h..h
    inf_mass: float
    config: BucketConfig
    n: int = 1

    @property
    def h(self):
        return self.config.h

    def total(self):
        return self.inf_mass + math.fsum(self.finite)


def bucket_indices(a, b, log_f):
    """Ceil bucket index per output with ``a > 0 and b > 0``; also returns that mask."""
    joint = (a > 0) & (b > 0)
    idx = np.ceil((np.log(a[joint]) - np.log(b[joint])) / log_f)
    return joint, idx


def bucketize_arrays(a, b, cfg):
    h = cfg.h
    live = a > 0
    inf_mass = float(a[live & (b == 0)].sum())
    joint, idx = bucket_indices(a, b, cfg.log_f)
    mass = a[joint]
    over = idx > h
    inf_mass += float(mass[over].sum())
    slot = np.clip(idx[~over], -h, h).astype(np.int64) + h
    finite = np.bincount(slot, weights=mass[~over], minlength=2 * h + 1).astype(float)
    return finite, inf_mass


def bucketize(pair, cfg):
    finite, inf_mass = bucketize_arrays(pair.a, pair.b, cfg)
    return BucketedLoss(finite, inf_mass, cfg, 1)


def _combine(x, y):
    """Clamped convolution of two bucketed losses over the same config."""
    h = x.h
    full = kernels.conv_full(x.finite, y.finite)  # indices -2h..2h
    finite = np.empty(2 * h + 1)
    finite[0] = math.fsum(full[: h + 1])
    finite[1:] = full[h + 1: 3 * h + 1]
    overflow = math.fsum(full[3 * h + 1:])
    inf_mass = x.inf_mass + y.inf_mass - x.inf_mass * y.inf_mass + overflow
    return BucketedLoss(finite, inf_mass, x.config, x.n + y.n)


def compose(bl, n):
    """n-fold independent composition by repeated squaring of the clamped convolution."""
    if int(n) != n or n < 1:
        raise InvalidArgument("n must be a positive integer")
    if bl.n != 1:
        raise InvalidArgument("compose expects a single-invocation bucketed loss")
    n = int(n)
    result, base = None, bl
    while n:
        if n & 1:
            result = base if result is None else _combine(result, base)
        n >>= 1
        if n:
            base = _combine(base, base)
    return result


def adp_weights(h, log_f, eps):
    j = np.arange(-h, h + 1)
    first = max(math.ceil(eps / log_f), -h + 1)
    w = np.clip(-np.expm1(eps - j * log_f), 0.0, 1.0)
    w[j < first] = 0.0
    return w


def pdp_weights(h, log_f, eps):
    j = np.arange(-h, h + 1)
    first = max(math.ceil(eps / log_f), -h + 1)
    return (j >= first).astype(float)


def delta_adp(bl, eps):
    w = adp_weights(bl.h, bl.config.log_f, eps)
    return bl.inf_mass + float(w @ bl.finite)


def delta_pdp(bl, eps):
    w = pdp_weights(bl.h, bl.config.log_f, eps)
    return bl.inf_mass + float(w @ bl.finite)


# ---------------------------------------------------------------------------
# differentiable path

def smaller(x, y):
    """Soft ``x < y``: ``sigmoid(-5 (x - y + 0.5))``."""
    return np.exp(-np.logaddexp(0.0, 5.0 * (np.asarray(x, dtype=float) - y + 0.5)))


def _smaller_dx(x, y):
    s = smaller(x, y)
    return -5.0 * s * (1.0 - s)


def equal_dx(d):
    """Surrogate derivative of ``equal(x, y)`` in ``x`` at offset ``d = x - y``."""
    return 1.0 / (1.0 + d * d / 0.01)


class _Tape:
    """Records the clamped convolutions of one repeated-squaring composition."""

    def __init__(self, finite, inf_mass, h):
        self.h = h
        self.nodes = [(finite, inf_mass)]
        self.ops = []  # (out, left, right)

    def combine(self, i, j):
        h = self.h
        (xf, xi), (yf, yi) = self.nodes[i], self.nodes[j]
        full = kernels.conv_full(xf, yf)
        finite = np.empty(2 * h + 1)
        finite[0] = full[: h + 1].sum()
        finite[1:] = full[h + 1: 3 * h + 1]
        inf_mass = xi + yi - xi * yi + full[3 * h + 1:].sum()
        self.nodes.append((finite, inf_mass))
        self.ops.append((len(self.nodes) - 1, i, j))
        return len(self.nodes) - 1

    def compose(self, n):
        result, base = None, 0
        while n:
            if n & 1:
                result = base if result is None else self.combine(result, base)
            n >>= 1
            if n:
                base = self.combine(base, base)
        return result

    def backward(self, out, g_finite, g_inf):
        h = self.h
        grads = {out: (np.array(g_finite, dtype=float), float(g_inf))}
        for node, i, j in reversed(self.ops):
            if node not in grads:
                continue
            gf, gi = grads.pop(node)
            g_full = np.empty(4 * h + 1)
            g_full[: h + 1] = gf[0]
            g_full[h + 1: 3 * h + 1] = gf[1:]
            g_full[3 * h + 1:] = gi
            (xf, xi), (yf, yi) = self.nodes[i], self.nodes[j]
            gx = np.correlate(g_full, yf, "valid")
            gy = np.correlate(g_full, xf, "valid")
            for idx, gfin, ginf in ((i, gx, gi * (1.0 - yi)), (j, gy, gi * (1.0 - xi))):
                if idx in grads:
                    pf, pi = grads[idx]
                    grads[idx] = (pf + gfin, pi + ginf)
                else:
                    grads[idx] = (gfin, ginf)
        return grads.get(0, (np.zeros(2 * h + 1), 0.0))


def bucket_bound_and_grad(a, b, n, eps, cfg, kind="adp", mode="exact"):
    """Differentiable bucket bound for direction A||B with adjoints in ``a`` and ``b``.

    ``mode="exact"`` differentiates the evaluation path as implemented: bucket
    indices are locally constant, so only masses carry gradient.
    ``mode="surrogate"`` routes overflow through the soft :func:`smaller` in the
    forward pass and adds straight-through derivatives for the index
    operations (``d ceil = 1``, ``d equal`` from :func:`equal_dx`), which lets
    the loss see how each output's privacy loss moves.

    Returns ``(value, grad_a, grad_b)``.
    """
    if kind not in ("adp", "pdp"):
        raise InvalidArgument(f"unknown bound {kind!r}")
    if mode not in ("exact", "surrogate"):
        raise InvalidArgument(f"unknown gradient mode {mode!r}")
    h, log_f = cfg.h, cfg.log_f
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    live = a > 0
    dist = live & (b == 0)
    joint = live & (b > 0)
    aj, bj = a[joint], b[joint]
    x = (np.log(aj) - np.log(bj)) / log_f
    j = np.ceil(x)
    slot = np.clip(j, -h, h).astype(np.int64) + h

    if mode == "exact":
        w_inf = (j > h).astype(float)
        w_low = np.zeros_like(j)
    else:
        w_inf = smaller(h, j)
        w_low = smaller(j, -h + 1)
    w_mid = 1.0 - w_inf - w_low

    finite = np.bincount(slot, weights=aj * w_mid, minlength=2 * h + 1)
    finite[0] += float((aj * w_low).sum())
    inf_mass = float(a[dist].sum()) + float((aj * w_inf).sum())

    tape = _Tape(finite, inf_mass, h)
    top = tape.compose(int(n))
    fin_n, inf_n = tape.nodes[top]
    weights = adp_weights(h, log_f, eps) if kind == "adp" else pdp_weights(h, log_f, eps)
    value = inf_n + float(weights @ fin_n)

    g_fin, g_inf = tape.backward(top, weights, 1.0)

    ga = np.zeros_like(a)
    gb = np.zeros_like(b)
    ga[dist] = g_inf
    ga_joint = w_mid * g_fin[slot] + w_low * g_fin[0] + w_inf * g_inf
    if mode == "surrogate":
        # straight-through index derivative, spread over neighbouring buckets
        offsets = np.arange(-2 * h, 2 * h + 1, dtype=float)
        spread = np.convolve(g_fin, equal_dx(offsets))[2 * h: 4 * h + 1]
        dw_inf = -_smaller_dx(h, j)  # d/dj of smaller(h, j)
        dw_low = _smaller_dx(j, -h + 1)
        g_j = aj * (w_mid * spread[slot] - (dw_inf + dw_low) * g_fin[slot]
                    + dw_low * g_fin[0] + dw_inf * g_inf)
        g_loss = g_j / log_f
        ga_joint = ga_joint + g_loss / aj
        gb[joint] = -g_loss / bj
    ga[joint] = ga_joint
    return value, ga, gb
