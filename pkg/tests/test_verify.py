import json

import numpy as np

from truncnoise.grid import Grid, NoisePmf, make_grid, staircase_pmf, truncated_gaussian_pmf
from truncnoise.verify import check_normalization, check_soundness, verify
from truncnoise.worst_case import WorstCasePair

SMALL = make_grid(2.0, 8)


def test_gaussian_passes_everything():
    report = verify(truncated_gaussian_pmf(SMALL, 0.8), shift=1.0, eps=0.3)
    assert report["passed"]
    assert set(report["checks"]) == {"normalization", "structure", "shift_invariance", "soundness"}
    assert report["checks"]["soundness"]["status"] == "pass"
    json.dumps(report)  # machine readable


def test_large_grid_skips_soundness():
    report = verify(staircase_pmf(make_grid(5.0, 100), 0.3), 1.0, 0.3)
    assert report["passed"]
    assert report["checks"]["soundness"]["status"] == "not-applicable"


def test_non_monotone_fails_structure():
    p = np.array([0.1, 0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1])
    pmf = NoisePmf(make_grid(2.0, 4), p[[0, 1, 2, 3, 3, 2, 1, 0]] / p[[0, 1, 2, 3, 3, 2, 1, 0]].sum())
    report = verify(pmf, 1.0, 0.3)
    assert not report["passed"]
    assert report["checks"]["structure"]["status"] == "fail"
    assert report["checks"]["shift_invariance"]["status"] == "not-applicable"


def test_mass_deficit_is_named():
    base = truncated_gaussian_pmf(SMALL, 0.8)
    short = NoisePmf(SMALL, base.p * 0.999)
    out = check_normalization(short)
    assert out["status"] == "fail"
    assert abs(out["deficit"] - 0.001) < 1e-12
    assert "deficit" in out["reason"]
    assert not verify(short)["passed"]


def test_negative_and_nan_entries():
    p = truncated_gaussian_pmf(SMALL, 0.8).p.copy()
    p[0] = -p[0]
    assert check_normalization(NoisePmf(SMALL, p))["reason"] == "negative entries"
    p[0] = np.nan
    assert check_normalization(NoisePmf(SMALL, p))["reason"] == "non-finite entries"


def test_soundness_report_on_pair(worked_pair):
    assert check_soundness(worked_pair)["status"] == "pass"
    big = WorstCasePair(np.arange(30.0), np.full(30, 1 / 30), np.full(30, 1 / 30), {})
    assert check_soundness(big)["status"] == "not-applicable"


def test_point_grid_verify():
    pmf = NoisePmf(Grid.from_points([-1.0, 0.0, 1.0]), np.array([0.25, 0.5, 0.25]))
    report = verify(pmf, 1.0, 0.3)
    assert report["checks"]["normalization"]["status"] == "pass"
    assert report["checks"]["structure"]["status"] == "pass"
