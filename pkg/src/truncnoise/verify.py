"""Machine-readable health checks for a noise pmf."""

from __future__ import annotations

import math

import numpy as np

from . import buckets, moments, oracle
from .curves import max_abs_loss
from .grid import NoisePmf, check_structure
from .worst_case import sensitivity_pair, shift_invariance_check, swap

ORACLE_MAX_SUPPORT = 20
NORMALIZATION_TOL = 1e-12
SOUNDNESS_SLACK = 1e-12


def _status(ok):
    return "pass" if ok else "fail"


def check_normalization(pmf: NoisePmf, tol=NORMALIZATION_TOL):
    total = math.fsum(pmf.p)
    finite = bool(np.all(np.isfinite(pmf.p)))
    nonneg = bool(np.all(pmf.p >= 0))
    out = {"status": _status(finite and nonneg and abs(total - 1.0) <= tol), "sum": total,
           "deficit": 1.0 - total}
    if not finite:
        out["reason"] = "non-finite entries"
    elif not nonneg:
        out["reason"] = "negative entries"
    elif abs(total - 1.0) > tol:
        out["reason"] = f"mass deficit {1.0 - total:.3e}"
    return out


def check_soundness(pair, eps_list=(0.0, 0.1, 0.3, 1.0), n_list=(1, 2), f=1.001):
    """Compare each accountant with the exact oracle on a small pair, both directions."""
    if pair.support.size > ORACLE_MAX_SUPPORT:
        return {"status": "not-applicable", "reason": f"support larger than {ORACLE_MAX_SUPPORT}"}
    violations = []
    for direction, pp in (("ab", pair), ("ba", swap(pair))):
        h = max(1, math.ceil(max(n_list) * max_abs_loss(pp) / math.log(f)) + 1)
        cfg = buckets.BucketConfig(h, f)
        bl = buckets.bucketize(pp, cfg)
        for n in n_list:
            comp = buckets.compose(bl, n)
            exact = oracle.exact_deltas(pp, n, eps_list)
            for eps, (adp, pdp) in zip(eps_list, exact):
                checks = (("adp", buckets.delta_adp(comp, eps), adp), ("pdp", buckets.delta_pdp(comp, eps), pdp),
                          ("ma", moments.delta_ma(pp, n, eps), adp))
                for name, bound, ref in checks:
                    if bound < ref - SOUNDNESS_SLACK:
                        violations.append({"direction": direction, "n": n, "eps": eps, "accountant": name,
                                           "bound": bound, "exact": ref})
    return {"status": _status(not violations), "violations": violations}


def verify(pmf: NoisePmf, shift=1.0, eps=0.3):
    """Structure, normalization, shift invariance and (for small grids) accountant soundness."""
    struct = check_structure(pmf)
    checks = {
        "normalization": check_normalization(pmf),
        "structure": {"status": _status(struct.ok), "symmetric": struct.is_symmetric,
                      "max_asymmetry": struct.max_asymmetry, "monotone": struct.is_monotone_from_center,
                      "max_violation": struct.max_violation},
    }
    inv = shift_invariance_check(pmf, shift, eps)
    checks["shift_invariance"] = {"status": inv.status, "argmax_shift": inv.argmax_shift,
                                  "reason": inv.reason,
                                  "deltas": {repr(k): v for k, v in sorted(inv.deltas.items())}}
    checks["soundness"] = check_soundness(sensitivity_pair(pmf, shift))
    passed = all(c["status"] != "fail" for c in checks.values())
    return {"passed": passed, "eps": eps, "shift": shift, "checks": checks}
