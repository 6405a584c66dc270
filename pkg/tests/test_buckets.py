import math

import numpy as np
import pytest

from truncnoise import buckets
from truncnoise.buckets import (BucketConfig, bucket_bound_and_grad, bucketize, compose, delta_adp, delta_pdp,
                                equal_dx, smaller)
from truncnoise.curves import max_abs_loss
from truncnoise.errors import InvalidArgument
from truncnoise.oracle import exact_delta, exact_deltas
from truncnoise.worst_case import WorstCasePair, swap

from conftest import direct_pairwise, random_pair

E_CFG = BucketConfig(3, math.e, allow_coarse=True)


def covering_h(pair, f, n=1):
    # each component rounds up by less than one bucket, so leave n spare buckets
    return n * (math.ceil(max(max_abs_loss(pair), max_abs_loss(swap(pair))) / math.log(f)) + 1)


def test_config_guard():
    with pytest.raises(InvalidArgument):
        BucketConfig(10, 1.5)
    with pytest.raises(InvalidArgument):
        BucketConfig(0, 1.001)
    with pytest.raises(InvalidArgument):
        BucketConfig(10, 1.0)
    assert BucketConfig(10, 1.01).f == 1.01
    assert BucketConfig(3, math.e, allow_coarse=True).log_f == 1.0


def test_bucketize_worked(worked_pair):
    bl = bucketize(worked_pair, E_CFG)
    assert bl.inf_mass == 0.25
    assert bl.finite.tolist() == [0, 0, 0, 0.25, 0.5, 0, 0]


def test_bucketize_identical_and_underflow():
    same = WorstCasePair([0, 1], [0.5, 0.5], [0.5, 0.5], {})
    assert bucketize(same, E_CFG).finite.tolist() == [0, 0, 0, 1, 0, 0, 0]
    tiny = WorstCasePair([0, 1], [0.5, 0.5], [0.5 * math.exp(20), 0.5 * 1e-300], {})
    bl = bucketize(tiny, E_CFG)
    assert bl.finite[0] == 0.5 and bl.inf_mass == 0.5


def test_ratio_on_boundary_goes_to_that_bucket():
    cfg = BucketConfig(3, 2.0, allow_coarse=True)
    pair = WorstCasePair([0, 1], [0.5, 0.5], [0.25, 0.75], {})
    bl = bucketize(pair, cfg)
    # ratio exactly 2 = f**1 goes to bucket 1
    assert bl.finite[3 + 1] == 0.5


def test_compose_worked(worked_pair):
    bl = compose(bucketize(worked_pair, E_CFG), 2)
    assert bl.inf_mass == 0.4375
    assert bl.finite.tolist() == [0, 0, 0, 0.0625, 0.25, 0.25, 0]
    assert bl.n == 2
    assert compose(bucketize(worked_pair, E_CFG), 1).finite.tolist() == bucketize(worked_pair, E_CFG).finite.tolist()
    with pytest.raises(InvalidArgument):
        compose(bucketize(worked_pair, E_CFG), 0)


def test_delta_spot_values(worked_pair):
    bl = bucketize(worked_pair, E_CFG)
    assert delta_adp(bl, 0.0) == pytest.approx(0.25 + (1 - math.exp(-1)) * 0.5, abs=1e-15)
    assert delta_adp(bl, 0.0) == pytest.approx(0.566060, abs=1e-6)
    assert delta_pdp(bl, 0.1) == 0.75
    assert delta_adp(bl, 3.0) == 0.25 and delta_pdp(bl, 3.0) == 0.25
    # bucket 0 may hold losses at or below 0; counting it at eps = 0 keeps the bound an upper bound
    assert delta_pdp(bl, 0.0) == 1.0
    assert delta_pdp(bl, 0.0) >= 0.75


def test_refinement_converges_to_exact(worked_pair):
    f = 1.00001
    cfg = BucketConfig(covering_h(worked_pair, f), f)
    for eps in (0.0, 0.3, math.log(2)):
        assert abs(delta_adp(bucketize(worked_pair, cfg), eps) - exact_delta(worked_pair, eps)) < 1e-4


@pytest.mark.parametrize("f", [1.001, 1.0001])
def test_soundness_and_tightness(f):
    rng = np.random.default_rng(int(f * 1e4))
    eps_list = (0.0, 0.1, 0.3, 1.0)
    for _ in range(25):
        pair = random_pair(rng, 10)
        h = covering_h(pair, f, 4)
        for pp in (pair, swap(pair)):
            cfg = BucketConfig(h, f)
            base = bucketize(pp, cfg)
            for n in (1, 2, 4):
                bl = compose(base, n)
                assert abs(bl.total() - 1) <= 1e-9
                exact = exact_deltas(pp, n, eps_list)
                loose = exact_deltas(pp, n, [e - n * cfg.log_f for e in eps_list])
                for eps, (adp, pdp), (adp_lo, _) in zip(eps_list, exact, loose):
                    assert delta_adp(bl, eps) >= adp - 1e-12
                    assert delta_pdp(bl, eps) >= pdp - 1e-12
                    # no clamping happened, so the only slack is the bucket width
                    assert delta_adp(bl, eps) <= adp_lo + 1e-12


def test_soundness_with_clamping():
    rng = np.random.default_rng(3)
    for _ in range(40):
        pair = random_pair(rng, 12)
        cfg = BucketConfig(4, 1.01)
        bl = bucketize(pair, cfg)
        for n in (1, 2, 4):
            comp = compose(bl, n)
            assert abs(comp.total() - 1) <= 1e-9
            for eps, (adp, pdp) in zip((0.0, 0.02, 0.3), exact_deltas(pair, n, (0.0, 0.02, 0.3))):
                assert delta_adp(comp, eps) >= adp - 1e-12
                assert delta_pdp(comp, eps) >= pdp - 1e-12


def test_pdp_dominates_adp():
    rng = np.random.default_rng(8)
    for _ in range(100):
        bl = bucketize(random_pair(rng, 15), BucketConfig(50, 1.01))
        for eps in (0.0, 0.1, 0.5):
            assert delta_pdp(bl, eps) >= delta_adp(bl, eps)


def test_compose_matches_direct_pairwise():
    rng = np.random.default_rng(12)
    for _ in range(10):
        bl = bucketize(random_pair(rng, 15), BucketConfig(6, 1.01))
        fin, inf = direct_pairwise(bl, bl)
        two = compose(bl, 2)
        assert np.array_equal(two.finite, fin)
        assert two.inf_mass == inf


def test_compose_deterministic_and_inf_algebra():
    rng = np.random.default_rng(13)
    pair = random_pair(rng, 12)
    bl = bucketize(pair, BucketConfig(400, 1.01))
    for n in (2, 3, 5, 8):
        a, b = compose(bl, n), compose(bl, n)
        assert np.array_equal(a.finite, b.finite) and a.inf_mass == b.inf_mass
        if a.inf_mass - (1 - (1 - bl.inf_mass) ** n) > 1e-12:
            # any excess must come from overflow past +h
            assert max_abs_loss(pair) * n > 400 * math.log(1.01)


def test_bucket_helpers():
    assert smaller(np.array([0.0]), 10.0)[0] == pytest.approx(1.0, abs=1e-15)
    assert smaller(np.array([10.0]), 0.0)[0] < 1e-20
    assert smaller(np.array([2.0]), 2.0)[0] == pytest.approx(1 / (1 + math.exp(2.5)))
    assert equal_dx(np.array([0.0, 0.1]))[0] == 1.0
    assert equal_dx(np.array([0.1]))[0] == pytest.approx(0.5)


def _off_boundary_pair(rng, cfg, m=8, margin=0.01):
    while True:
        pair = random_pair(rng, m, 0.15)
        joint = (pair.a > 0) & (pair.b > 0)
        x = (np.log(pair.a[joint]) - np.log(pair.b[joint])) / cfg.log_f
        frac = x - np.floor(x)
        if np.all((frac > margin) & (frac < 1 - margin)) and np.all(np.abs(x) < cfg.h - 5):
            return pair


@pytest.mark.parametrize("kind", ["adp", "pdp"])
@pytest.mark.parametrize("mode", ["exact", "surrogate"])
def test_differentiable_value_matches_evaluation(kind, mode):
    rng = np.random.default_rng(21)
    cfg = BucketConfig(300, 1.01)
    fn = delta_adp if kind == "adp" else delta_pdp
    for _ in range(15):
        pair = _off_boundary_pair(rng, cfg)
        for n in (1, 2, 3):
            value, _, _ = bucket_bound_and_grad(pair.a, pair.b, n, 0.3, cfg, kind, mode)
            assert value == pytest.approx(fn(compose(bucketize(pair, cfg), n), 0.3), abs=1e-6)
            if mode == "exact":
                assert value == pytest.approx(fn(compose(bucketize(pair, cfg), n), 0.3), abs=1e-13)


@pytest.mark.parametrize("kind", ["adp", "pdp"])
def test_exact_mode_gradient_matches_finite_differences(kind):
    rng = np.random.default_rng(22)
    cfg = BucketConfig(60, 1.01)
    step = 1e-6
    for _ in range(6):
        pair = _off_boundary_pair(rng, cfg, margin=0.05)
        for n in (1, 2, 4):
            _, ga, gb = bucket_bound_and_grad(pair.a, pair.b, n, 0.1, cfg, kind, "exact")
            for arr, grad in ((pair.a, ga), (pair.b, gb)):
                for i in np.flatnonzero(arr):
                    hi, lo = arr.copy(), arr.copy()
                    hi[i] += step
                    lo[i] -= step
                    args = (hi, pair.b) if arr is pair.a else (pair.a, hi)
                    args_lo = (lo, pair.b) if arr is pair.a else (pair.a, lo)
                    fd = (bucket_bound_and_grad(*args, n, 0.1, cfg, kind, "exact")[0]
                          - bucket_bound_and_grad(*args_lo, n, 0.1, cfg, kind, "exact")[0]) / (2 * step)
                    assert fd == pytest.approx(grad[i], rel=1e-5, abs=1e-9)


def test_surrogate_gradient_pushes_losses_down():
    cfg = BucketConfig(100, 1.01)
    # one joint output with loss well above eps; raising b lowers the loss and the bound
    a = np.array([0.5, 0.5, 0.0])
    b = np.array([0.0, 0.2, 0.8])
    _, ga, gb = bucket_bound_and_grad(a, b, 1, 0.3, cfg, "adp", "surrogate")
    _, _, gb_exact = bucket_bound_and_grad(a, b, 1, 0.3, cfg, "adp", "exact")
    assert gb[1] < 0
    assert gb_exact[1] == 0.0


def test_differentiable_rejects_unknown():
    with pytest.raises(InvalidArgument):
        bucket_bound_and_grad(np.ones(2) / 2, np.ones(2) / 2, 1, 0.3, BucketConfig(5, 1.01), "xyz")
    with pytest.raises(InvalidArgument):
        bucket_bound_and_grad(np.ones(2) / 2, np.ones(2) / 2, 1, 0.3, BucketConfig(5, 1.01), "adp", "fancy")


def test_weights_clamped():
    w = buckets.adp_weights(5, math.log(1.01), 0.0)
    assert np.all((w >= 0) & (w <= 1))
    assert np.all(w[:6] == 0)


def test_narrow_range_reduces_adp_to_infinity_mass():
    """With h ln f below eps no finite bucket can exceed eps, so only the infinity mass is left."""
    cfg = BucketConfig(250, 1.0001)
    assert cfg.h * cfg.log_f < 0.3
    assert not np.any(buckets.adp_weights(cfg.h, cfg.log_f, 0.3))
    rng = np.random.default_rng(31)
    for _ in range(20):
        bl = bucketize(random_pair(rng, 10), cfg)
        assert delta_adp(bl, 0.3) == bl.inf_mass
