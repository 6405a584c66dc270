"""Match analytic baselines to a generated noise and measure how far apart they are."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .curves import reference_delta
from .errors import BracketError, InvalidArgument
from .grid import NoisePmf, staircase_pmf, truncated_gaussian_pmf
from .moments import golden_section
from .model import utility_loss
from .worst_case import sensitivity_pair, subsampled_pair


def kl_divergence(p, q):
    """``sum p log(p / q)`` over the support of ``p``; infinite if ``q`` misses any of it."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    live = p > 0
    if np.any(q[live] == 0):
        return math.inf
    return float(np.sum(p[live] * (np.log(p[live]) - np.log(q[live]))))


@dataclass(frozen=True)
class Scenario:
    kind: str = "sensitivity"
    sensitivity: float = 1.0
    q: float = 0.1
    clip: float = 1.0

    def pair(self, pmf):
        if self.kind == "sensitivity":
            return sensitivity_pair(pmf, self.sensitivity)
        if self.kind == "dpsgd":
            return subsampled_pair(pmf, self.q, self.clip)
        raise InvalidArgument(f"unknown scenario {self.kind!r}")


def scenario_delta(pmf, scenario, n, eps, kind="adp"):
    return reference_delta(scenario.pair(pmf), n, eps, kind, both=True)


def bisect(fn, lo, hi, target, rel_tol=1e-12, max_iter=200):
    """Root of ``fn(x) = target`` on ``[lo, hi]`` for monotone ``fn``."""
    flo, fhi = fn(lo) - target, fn(hi) - target
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(lo, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid) - target
        if fmid == 0 or hi - lo <= rel_tol * abs(mid):
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_bracket(fn, params, target):
    """First pair of consecutive scan points where ``fn - target`` changes sign."""
    prev_t, prev_v = None, None
    for t in params:
        v = fn(t) - target
        if v == 0:
            return t, t
        if prev_v is not None and (v > 0) != (prev_v > 0):
            return prev_t, t
        prev_t, prev_v = t, v
    raise BracketError(params[0], params[-1])


def _scan(kind, grid, points=48):
    width = grid.points[-1] - grid.center
    if kind == "gaussian":
        return np.geomspace(1e-2 * grid.step, 4.0 * width, points)
    return np.linspace(1e-6, 1.0 - 1e-6, points)


def _baseline(kind, grid, eps):
    if kind == "gaussian":
        return lambda sigma: truncated_gaussian_pmf(grid, sigma)
    if kind == "staircase":
        return lambda gamma: staircase_pmf(grid, eps, gamma=gamma)
    raise InvalidArgument(f"unknown baseline {kind!r}")


def gaussian_delta_branch(grid, scenario, n, eps, kind="adp", points=40):
    """Interval ``[sigma_lo, sigma_best]`` on which the Gaussian delta decreases in sigma.

    A coarse scan locates the minimum and golden-section search pins it down.
    """
    sigmas = np.geomspace(grid.step, 2.0 * (grid.points[-1] - grid.center), points)
    delta = lambda s: scenario_delta(truncated_gaussian_pmf(grid, s), scenario, n, eps, kind)  # noqa: E731
    best = int(np.argmin([delta(s) for s in sigmas]))
    lo, hi = sigmas[max(best - 1, 0)], sigmas[min(best + 1, points - 1)]
    sigma_best, _ = golden_section(delta, lo, hi, 60)
    return float(sigmas[0]), float(sigma_best)


@dataclass
class ComparisonReport:
    baseline: str
    matching: str
    parameter: float
    generated_delta: float
    baseline_delta: float
    generated_utility: float
    baseline_utility: float
    kl: float

    def to_dict(self):
        return asdict(self)


def match_baseline(pmf: NoisePmf, baseline="gaussian", matching="utility", eps=0.3, n=1,
                   scenario=Scenario(), utility_order=2, kind="adp"):
    """Fit the baseline's free parameter and report ``KL(baseline || generated)``.

    The Gaussian's parameter is ``sigma``; the staircase keeps ``eps`` and
    fits its inner fraction ``gamma``. Neither target is monotone over the
    whole range (the Gaussian delta turns up again once mass piles against
    the truncation edge), so a scan from the narrow end finds the first
    crossing and bisection refines it.
    """
    grid = pmf.grid
    make = _baseline(baseline, grid, eps)
    if matching == "utility":
        target = utility_loss(pmf, utility_order)
        fn = lambda t: utility_loss(make(t), utility_order)  # noqa: E731
    elif matching == "delta":
        target = scenario_delta(pmf, scenario, n, eps, kind)
        fn = lambda t: scenario_delta(make(t), scenario, n, eps, kind)  # noqa: E731
    else:
        raise InvalidArgument(f"unknown matching {matching!r}")
    lo, hi = scan_bracket(fn, _scan(baseline, grid), target)
    param = lo if lo == hi else bisect(fn, lo, hi, target, rel_tol=1e-10)
    base = make(param)
    return ComparisonReport(
        baseline, matching, float(param),
        scenario_delta(pmf, scenario, n, eps, kind), scenario_delta(base, scenario, n, eps, kind),
        utility_loss(pmf, utility_order), utility_loss(base, utility_order),
        kl_divergence(base.p, pmf.p))

