"""Worst-case output distribution pairs for additive noise."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, SchemaError
from .grid import NoisePmf, check_structure
from .oracle import exact_delta_arrays

STRUCTURE_TOL = 0.0


@dataclass
class WorstCasePair:
    """Aligned distributions ``a`` (input D0) and ``b`` (input D1) over ``support``."""

    support: np.ndarray
    a: np.ndarray
    b: np.ndarray
    label: dict
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if not (self.support.shape == self.a.shape == self.b.shape) or self.a.ndim != 1:
            raise InvalidArgument("support, a and b must be 1-d arrays of equal length")

    def to_dict(self):
        return {"support": self.support.tolist(), "a": self.a.tolist(), "b": self.b.tolist(),
                "label": dict(self.label)}

    @classmethod
    def from_dict(cls, d):
        for key in ("support", "a", "b", "label"):
            if key not in d:
                raise SchemaError(key, "missing")
        try:
            return cls(d["support"], d["a"], d["b"], dict(d["label"]))
        except (InvalidArgument, TypeError, ValueError) as exc:
            raise SchemaError("pair", str(exc)) from exc


def dumps_pair(pair):
    return json.dumps(pair.to_dict())


def loads_pair(text):
    return WorstCasePair.from_dict(json.loads(text))


# array-level builders, shared with the learner's reverse pass

def shift_arrays(p, k):
    """``(p, 0..0)`` and ``(0..0, p)`` with ``k`` structural zeros each."""
    z = np.zeros(k)
    return np.concatenate([p, z]), np.concatenate([z, p])


def shift_arrays_adjoint(ga, gb, k):
    m = len(ga) - k
    return ga[:m] + gb[k:]


def mixture_arrays(p, k, q):
    """``A = p`` and ``B = (1 - q) p + q p shifted by k``, on the extended support."""
    a, shifted = shift_arrays(p, k)
    return a, (1.0 - q) * a + q * shifted


def mixture_arrays_adjoint(ga, gb, k, q):
    m = len(ga) - k
    return ga[:m] + (1.0 - q) * gb[:m] + q * gb[k:]


def _hypotheses(pmf, pair):
    report = check_structure(pmf, STRUCTURE_TOL)
    if not report.ok:
        pair.warnings.append(
            "noise is not symmetric and monotone: reduction to the maximal shift is unproven "
            f"(asymmetry {report.max_asymmetry:.3g}, monotonicity violation {report.max_violation:.3g})")
    return pair


def sensitivity_pair(pmf: NoisePmf, s):
    """Noise ``p`` against ``p`` shifted right by the sensitivity ``s``."""
    if not s > 0:
        raise InvalidArgument("sensitivity must be positive")
    k = pmf.grid.shift_cells(s)
    a, b = shift_arrays(pmf.p, k)
    pair = WorstCasePair(pmf.grid.extended(k), a, b, {"kind": "sensitivity", "s": float(s)})
    return _hypotheses(pmf, pair)


def subsampled_pair(pmf: NoisePmf, q, clip):
    """Sub-sampled pair of DP-SGD: ``p`` against the mixture ``(1-q) p + q p(. - clip)``."""
    if not 0 < q < 1:
        raise InvalidArgument("q must lie in (0, 1)")
    k = pmf.grid.shift_cells(clip)
    a, b = mixture_arrays(pmf.p, k, q)
    pair = WorstCasePair(pmf.grid.extended(k), a, b, {"kind": "subsampled", "q": float(q), "C": float(clip)})
    pair.warnings.append("shift reduction is unproven for the sub-sampled mixture")
    return _hypotheses(pmf, pair)


def identity_pair(pmf: NoisePmf):
    """Degenerate pair ``A = B = p``; useful as a zero-leakage control."""
    return WorstCasePair(pmf.points, pmf.p.copy(), pmf.p.copy(), {"kind": "identity"})


def swap(pair: WorstCasePair):
    """Exchange the roles of ``a`` and ``b``; applying it twice restores the pair exactly."""
    label = dict(pair.label)
    if label.pop("swapped", False) is False:
        label["swapped"] = True
    return WorstCasePair(pair.support, pair.b, pair.a, label, list(pair.warnings))


@dataclass
class ShiftInvarianceReport:
    status: str  # "pass", "fail" or "not-applicable"
    deltas: dict
    argmax_shift: float | None
    reason: str = ""

    @property
    def passed(self):
        return self.status == "pass"


def shift_invariance_check(pmf: NoisePmf, s, eps, tol=1e-12):
    """Check that no shift smaller than ``s`` leaks more than ``s`` itself (exact deltas)."""
    report = check_structure(pmf, STRUCTURE_TOL)
    if not report.ok:
        return ShiftInvarianceReport("not-applicable", {}, None,
                                     "noise is not symmetric and monotone from the center")
    k = pmf.grid.shift_cells(s)
    deltas = {}
    for j in range(1, k + 1):
        a, b = shift_arrays(pmf.p, j)
        deltas[j * pmf.grid.step] = max(exact_delta_arrays(a, b, eps), exact_delta_arrays(b, a, eps))
    top = deltas[k * pmf.grid.step]
    argmax = max(deltas, key=lambda key: (deltas[key], key))
    ok = all(v <= top + tol for v in deltas.values())
    return ShiftInvarianceReport("pass" if ok else "fail", deltas, argmax)
