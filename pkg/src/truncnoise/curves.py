"""delta(eps) curves over both directions of a worst-case pair, and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import buckets, moments
from .errors import InvalidArgument
from .worst_case import swap

REFERENCE_H = 12500
REFERENCE_COVERAGE = 1.5
ACCOUNTANTS = ("adp", "pdp", "ma")
CSV_COLUMNS = ("accountant", "n", "eps", "delta_ab", "delta_ba", "delta")


def max_abs_loss(pair):
    joint = (pair.a > 0) & (pair.b > 0)
    if not joint.any():
        return 0.0
    return float(np.max(np.abs(np.log(pair.a[joint]) - np.log(pair.b[joint]))))


def reference_config(pair, n=1, h=REFERENCE_H, coverage=REFERENCE_COVERAGE):
    """High-resolution buckets whose finite range covers ``coverage`` times the largest ``n``-fold loss.

    An ``n``-fold composed loss can reach ``n`` times the largest single-run
    loss, so the range ``h ln f`` grows with ``n``. Anything that still
    overflows (once ``f`` hits ``buckets.MAX_FACTOR``) lands in the infinity
    bucket, which keeps the result an upper bound.
    """
    return buckets.BucketConfig.covering(n * max_abs_loss(pair), h, coverage)


@dataclass
class CurveRow:
    accountant: str
    n: int
    eps: float
    delta_ab: float
    delta_ba: float

    @property
    def delta(self):
        return max(self.delta_ab, self.delta_ba)


@dataclass
class DeltaCurve:
    rows: list = field(default_factory=list)

    def select(self, accountant, n):
        return [r for r in self.rows if r.accountant == accountant and r.n == n]

    def to_csv(self, extra=None):
        """CSV text with 17 significant digits; ``extra`` maps column name to per-row values."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        extra = extra or {}
        writer.writerow(list(CSV_COLUMNS) + list(extra))
        for k, r in enumerate(self.rows):
            vals = [r.accountant, r.n, _fmt(r.eps), _fmt(r.delta_ab), _fmt(r.delta_ba), _fmt(r.delta)]
            writer.writerow(vals + [_fmt(col[k]) for col in extra.values()])
        return out.getvalue()


def _fmt(v):
    return f"{float(v):.16e}"


def _curve_rows(pair, other, n, eps_list, accountants, cfg, search, h):
    rows = []
    composed = {}
    if any(acc != "ma" for acc in accountants):
        c = cfg if cfg is not None else reference_config(pair, n, h)
        composed = {d: buckets.compose(buckets.bucketize(pp, c), n) for d, pp in (("ab", pair), ("ba", other))}
    for acc in accountants:
        for eps in eps_list:
            if acc == "ma":
                vals = [moments.delta_ma(pp, n, eps, search) for pp in (pair, other)]
            else:
                fn = buckets.delta_adp if acc == "adp" else buckets.delta_pdp
                vals = [fn(composed[d], eps) for d in ("ab", "ba")]
            rows.append(CurveRow(acc, int(n), float(eps), *[min(max(v, 0.0), 1.0) for v in vals]))
    return rows


def delta_curve(pair, n_list, eps_list, accountants=ACCOUNTANTS, cfg=None, search=moments.LambdaSearchConfig(),
                workers=1, h=REFERENCE_H):
    """Evaluate every accountant in both directions.

    ``cfg=None`` picks reference buckets with ``h`` half-count for each ``n``.

    ``workers > 1`` evaluates the composition counts on a thread pool; row
    order and values do not depend on it.
    """
    for acc in accountants:
        if acc not in ACCOUNTANTS:
            raise InvalidArgument(f"unknown accountant {acc!r}")
    other = swap(pair)
    job = partial(_curve_rows, pair, other, eps_list=eps_list, accountants=accountants, cfg=cfg, search=search,
                  h=h)
    if workers > 1 and len(n_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, n_list))
    else:
        parts = [job(n) for n in n_list]
    return DeltaCurve([row for part in parts for row in part])


def reference_delta(pair, n, eps, kind="adp", both=True):
    """Single high-resolution bucket bound; ``both`` takes the max over directions."""
    pairs = (pair, swap(pair)) if both else (pair,)
    fn = buckets.delta_adp if kind == "adp" else buckets.delta_pdp
    out = -math.inf
    for pp in pairs:
        bl = buckets.compose(buckets.bucketize(pp, reference_config(pp, n)), n)
        out = max(out, fn(bl, eps))
    return min(max(out, 0.0), 1.0)
