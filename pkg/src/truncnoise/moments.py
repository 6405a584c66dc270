"""Moments accountant extended by distinguishing events.

For a pair ``A || B`` the bound after ``n`` compositions is::

    delta = 1 - (1 - b_inf)**n + exp(n * gamma(lam) - lam * eps)

where ``b_inf`` is the mass of ``A`` on outputs impossible under ``B`` and
``gamma(lam) = log sum A (A / B)**lam`` runs over the joint support only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class LambdaSearchConfig:
    base: float = 1e-2
    k_max: int = 24
    refine_iters: int = 80

    def grid(self):
        return self.base * 2.0 ** np.arange(self.k_max + 1)


@dataclass
class MomentsProfile:
    b_inf: float
    log_a: np.ndarray  # joint support only
    log_ratio: np.ndarray
    direction: str = "A||B"
    n: int = 1

    def gamma(self, lam):
        if self.log_a.size == 0:
            return -math.inf
        return _logsumexp(self.log_a + lam * self.log_ratio)

    def objective(self, lam, eps):
        """``n * gamma(lam) - lam * eps``, the log of the tail term."""
        return self.n * self.gamma(lam) - lam * eps

    def delta_at(self, lam, eps):
        return _assemble(self.b_inf, self.n, self.objective(lam, eps))


def _logsumexp(t):
    m = float(np.max(t))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.exp(t - m).sum()))


def _assemble(b_inf, n, log_tail):
    head = 1.0 - (1.0 - b_inf) ** n
    tail = math.exp(log_tail) if log_tail < 709.0 else math.inf
    return min(max(head + tail, 0.0), 1.0)


def distinguishing_mass_arrays(a, b):
    return float(a[(a > 0) & (b == 0)].sum())


def distinguishing_mass(pair):
    """Mass of ``A`` on outputs that ``B`` cannot produce."""
    return distinguishing_mass_arrays(pair.a, pair.b)


def profile(pair, n=1, direction="A||B"):
    a, b = pair.a, pair.b
    joint = (a > 0) & (b > 0)
    la = np.log(a[joint])
    return MomentsProfile(distinguishing_mass_arrays(a, b), la, la - np.log(b[joint]), direction, int(n))


def gamma_divergence(pair, lam):
    """Log moment ``log sum A (A/B)**lam`` over outputs where both are positive."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    prof = profile(pair)
    if prof.log_a.size == 0:
        raise InvalidArgument("empty joint support: every output is distinguishing")
    return prof.gamma(lam)


def golden_section(fn, lo, hi, iters):
    """Minimizer and minimum of a unimodal ``fn`` on ``[lo, hi]``."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - inv * (hi - lo), lo + inv * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def best_lambda(prof, eps, search=LambdaSearchConfig()):
    """Minimize the log tail over a doubling grid, then refine by golden section."""
    grid = search.grid()
    values = np.array([prof.objective(lam, eps) for lam in grid])
    k = int(np.argmin(values))
    lam, val = float(grid[k]), float(values[k])
    lo = grid[k - 1] if k > 0 else 0.0
    hi = grid[k + 1] if k < len(grid) - 1 else grid[k]
    if hi > lo:
        lam_r, val_r = golden_section(lambda t: prof.objective(t, eps), lo, hi, search.refine_iters)
        if lam_r > 0 and val_r < val:
            lam, val = lam_r, val_r
    return lam, val


def delta_ma(pair, n, eps, search=LambdaSearchConfig()):
    """Moments-accountant delta for direction ``A || B``, minimized over lambda."""
    if int(n) != n or n < 1:
        raise InvalidArgument("n must be a positive integer")
    if eps < 0:
        raise InvalidArgument("eps must be nonnegative")
    prof = profile(pair, n)
    if prof.log_a.size == 0:
        return 1.0
    _, log_tail = best_lambda(prof, eps, search)
    return _assemble(prof.b_inf, prof.n, log_tail)


def direction_flips(pair_ab, pair_ba, n, eps, search=LambdaSearchConfig()):
    """True when the dominating direction of the per-lambda bound changes across the grid."""
    pa, pb = profile(pair_ab, n), profile(pair_ba, n)
    signs = set()
    for lam in search.grid():
        da, db = pa.delta_at(lam, eps), pb.delta_at(lam, eps)
        if da != db:
            signs.add(da > db)
    return len(signs) > 1


# ---------------------------------------------------------------------------
# differentiable path

LAMBDA_FLOOR = 1e-4


def lambda_from_sq(lam_sq):
    return lam_sq * lam_sq + LAMBDA_FLOOR


def ma_bound_and_grad(a, b, n, eps, lam_sq):
    """Unclamped bound at ``lambda = lam_sq**2 + 1e-4`` with adjoints.

    Returns ``(value, grad_a, grad_b, grad_lam_sq)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lam = lambda_from_sq(lam_sq)
    live = a > 0
    dist = live & (b == 0)
    joint = live & (b > 0)
    ga = np.zeros_like(a)
    gb = np.zeros_like(b)

    b_inf = float(a[dist].sum())
    head = 1.0 - (1.0 - b_inf) ** n
    ga[dist] = n * (1.0 - b_inf) ** (n - 1)

    la = np.log(a[joint])
    lr = la - np.log(b[joint])
    if la.size == 0:
        return head, ga, gb, 0.0
    t = la + lam * lr
    gamma = _logsumexp(t)
    w = np.exp(t - gamma)
    log_tail = n * gamma - lam * eps
    tail = math.exp(log_tail)
    ga[joint] = tail * n * w * (1.0 + lam) / a[joint]
    gb[joint] = -tail * n * w * lam / b[joint]
    g_lam = tail * (n * float(w @ lr) - eps)
    return head + tail, ga, gb, g_lam * 2.0 * lam_sq
