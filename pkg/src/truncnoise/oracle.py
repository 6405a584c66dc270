"""Exact privacy-loss distributions and deltas for small discrete pairs.

This is the reference the bucket and moments accountants are tested against;
it never approximates and refuses work beyond its term budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ResourceLimitError

DEFAULT_TERM_BUDGET = 10**7


@dataclass
class LossDistribution:
    losses: np.ndarray  # strictly increasing finite loss values (nats)
    masses: np.ndarray  # probability of each loss under the numerator distribution
    inf_mass: float
    direction: str = "A||B"

    def total(self):
        return self.inf_mass + math.fsum(self.masses)


def exact_delta_arrays(a, b, eps):
    return float(np.maximum(a - math.exp(eps) * b, 0.0).sum())


def exact_delta(pair, eps):
    """Smallest delta with ``A(S) <= e^eps B(S) + delta`` for every event ``S``."""
    return exact_delta_arrays(pair.a, pair.b, eps)


def loss_distribution(pair, direction="A||B"):
    a, b = pair.a, pair.b
    live = a > 0
    dist = live & (b == 0)
    joint = live & (b > 0)
    grouped = {}
    for loss, mass in zip(np.log(a[joint] / b[joint]), a[joint]):
        grouped[loss] = grouped.get(loss, 0.0) + mass
    keys = sorted(grouped)
    return LossDistribution(np.array(keys, dtype=float), np.array([grouped[k] for k in keys], dtype=float),
                            float(a[dist].sum()), direction)


def exact_pdp_delta(pair, eps):
    ld = loss_distribution(pair)
    return ld.inf_mass + float(ld.masses[ld.losses > eps].sum())


def exact_compose(ld, n, budget=DEFAULT_TERM_BUDGET):
    """n-fold self-convolution of a loss distribution, grouping equal loss sums."""
    if int(n) != n or n < 1:
        raise InvalidArgument("n must be a positive integer")
    base = dict(zip(ld.losses.tolist(), ld.masses.tolist()))
    current = dict(base)
    terms = 0
    for _ in range(int(n) - 1):
        terms += len(current) * len(base)
        if terms > budget:
            raise ResourceLimitError(f"exact composition exceeds the term budget of {budget} products")
        nxt = {}
        for l1, m1 in current.items():
            for l2, m2 in base.items():
                key = l1 + l2
                nxt[key] = nxt.get(key, 0.0) + m1 * m2
        current = nxt
    keys = sorted(current)
    inf_mass = 1.0 - (1.0 - ld.inf_mass) ** int(n)
    return LossDistribution(np.array(keys, dtype=float), np.array([current[k] for k in keys], dtype=float),
                            inf_mass, ld.direction)


def delta_from_loss(ld, eps):
    """``(adp, pdp)`` deltas at ``eps`` from a loss distribution."""
    above = ld.losses > eps
    weights = -np.expm1(eps - ld.losses[above])
    adp = ld.inf_mass + float((weights * ld.masses[above]).sum())
    pdp = ld.inf_mass + float(ld.masses[above].sum())
    return adp, pdp


def exact_deltas(pair, n, eps_list, budget=DEFAULT_TERM_BUDGET):
    """Exact ``(adp, pdp)`` per eps after ``n`` compositions, direction A||B."""
    ld = exact_compose(loss_distribution(pair), n, budget) if n > 1 else loss_distribution(pair)
    return [delta_from_loss(ld, e) for e in eps_list]
