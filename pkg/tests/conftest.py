import math

import numpy as np
import pytest
from hypothesis import settings

from truncnoise.worst_case import WorstCasePair

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def worked_pair():
    """p = (1/4, 1/2, 1/4) against its unit shift."""
    return WorstCasePair(np.array([-1.0, 0.0, 1.0, 2.0]), np.array([0.25, 0.5, 0.25, 0.0]),
                         np.array([0.0, 0.25, 0.5, 0.25]), {"kind": "sensitivity", "s": 1.0})


def random_pair(rng, max_support=20, zero_prob=0.2):
    """Random aligned pair with exact structural zeros on either side."""
    m = int(rng.integers(2, max_support + 1))
    a = rng.random(m) ** 2
    b = rng.random(m) ** 2
    a[rng.random(m) < zero_prob] = 0.0
    b[rng.random(m) < zero_prob] = 0.0
    if a.sum() == 0:
        a[0] = 1.0
    if b.sum() == 0:
        b[-1] = 1.0
    return WorstCasePair(np.arange(m, dtype=float), a / a.sum(), b / b.sum(), {"kind": "random"})


BOUNDARY_MARGIN = 1e-4


def small_objective_draw(objective, rng):
    """Well-conditioned parameters for finite-difference checks on a small model."""
    k = objective.cfg.k + 1
    theta = objective.initial_theta()
    r = objective.cfg.half_width
    theta[0] = rng.uniform(0.3, 1.0)
    theta[1:1 + k] = rng.uniform(0.5, 1.5, k)
    theta[1 + k:1 + 2 * k] = np.sort(rng.uniform(-r, 0.0, k))
    return theta


def near_bucket_boundary(objective, theta, margin=BOUNDARY_MARGIN):
    """True when some composed-free bucket index of the pair sits within ``margin`` of an integer."""
    from truncnoise.model import model_forward

    if objective.cfg.accountant == "ma":
        return False
    params, _ = objective.params(theta)
    a, b = objective.pair_arrays(model_forward(params, objective.grid).p)
    joint = (a > 0) & (b > 0)
    x = (np.log(a[joint]) - np.log(b[joint])) / objective.bcfg.log_f
    return bool(np.any(np.abs(x - np.round(x)) < margin))


def gradient_error(objective, theta, epoch=10, step=1e-6):
    """Max relative error between the reverse-mode gradient and central differences."""
    _, grad = objective(theta, epoch)
    eye = np.eye(theta.size)
    numeric = np.array([(objective(theta + step * e, epoch)[0].total - objective(theta - step * e, epoch)[0].total)
                        / (2 * step) for e in eye])
    scale = np.maximum(np.abs(grad), np.abs(numeric))
    rel = np.where(scale > 0, np.abs(numeric - grad) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(rel.max())


def direct_pairwise(x, y):
    """Reference clamped convolution written as plain loops."""
    h = x.h
    fin = [0.0] * (2 * h + 1)
    low = []
    over = []
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            prod = x.finite[i + h] * y.finite[j + h]
            if prod == 0.0:
                continue
            s = i + j
            if s > h:
                over.append(prod)
            elif s <= -h:
                low.append(prod)
    # interior sums in ascending order of the left index, like the kernels
    for s in range(-h + 1, h + 1):
        acc = 0.0
        for i in range(-h, h + 1):
            j = s - i
            if -h <= j <= h:
                acc = acc + x.finite[i + h] * y.finite[j + h]
        fin[s + h] = acc
    full_low = [0.0] * (h + 1)
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            s = i + j
            if s <= -h:
                full_low[s + 2 * h] = full_low[s + 2 * h] + x.finite[i + h] * y.finite[j + h]
    fin[0] = math.fsum(full_low)
    full_over = [0.0] * (h)
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            s = i + j
            if s > h:
                full_over[s - h - 1] = full_over[s - h - 1] + x.finite[i + h] * y.finite[j + h]
    inf = x.inf_mass + y.inf_mass - x.inf_mass * y.inf_mass + math.fsum(full_over)
    return np.array(fin), inf


# ---------------------------------------------------------------------------
# acceptance summary

ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
