"""Discretization grids, noise pmfs, analytic baselines and samplers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, SchemaError

DEFAULT_BIAS = 1e-5


@dataclass(frozen=True)
class Grid:
    """Equidistant points ``start + i * step`` for ``i = 0..size-1``.

    Grids built by :func:`make_grid` also remember ``half_width``,
    ``half_points`` and ``bias`` and compute their points as
    ``i * step - half_width + bias`` for ``i = 1..2N``.
    """

    start: float
    step: float
    size: int
    half_width: float | None = None
    half_points: int | None = None
    bias: float | None = None

    @property
    def points(self):
        if self.half_points is not None:
            return np.arange(1, self.size + 1) * self.step - self.half_width + self.bias
        return self.start + np.arange(self.size) * self.step

    @property
    def center(self):
        """Point of mirror symmetry, midway between the first and last point."""
        pts = self.points
        return 0.5 * (pts[0] + pts[-1])

    def mirror_distance(self):
        """Distance of each point from :attr:`center`, symmetric bit for bit."""
        idx = np.arange(self.size)
        twice = np.abs(2 * idx - (self.size - 1))  # integer, mirror-symmetric
        return twice * (0.5 * self.step)

    def shift_cells(self, s):
        """Number of cells ``k`` with ``k * step == s``; raises if ``s`` is off-grid."""
        k = int(round(s / self.step))
        if k < 1 or abs(k * self.step - s) > 1e-9 * max(1.0, abs(s)):
            raise InvalidArgument(f"shift {s!r} is not a positive multiple of step {self.step!r}")
        return k

    def extended(self, extra):
        """Equidistant support extended by ``extra`` cells on the right."""
        pts = self.points
        tail = pts[-1] + np.arange(1, extra + 1) * self.step
        return np.concatenate([pts, tail])

    def to_dict(self):
        if self.half_points is not None:
            return {"half_width": self.half_width, "half_points": self.half_points, "bias": self.bias}
        return {"start": self.start, "step": self.step, "size": self.size}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("grid", "expected an object")
        if set(d) == {"half_width", "half_points", "bias"}:
            try:
                return make_grid(float(d["half_width"]), int(d["half_points"]), float(d["bias"]))
            except (TypeError, ValueError) as exc:
                raise SchemaError("grid", str(exc)) from exc
        if set(d) == {"start", "step", "size"}:
            return Grid(float(d["start"]), float(d["step"]), int(d["size"]))
        raise SchemaError("grid", f"unexpected keys {sorted(d)}")

    @classmethod
    def from_points(cls, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or len(pts) < 1:
            raise InvalidArgument("need at least one point")
        if len(pts) == 1:
            return cls(float(pts[0]), 1.0, 1)
        step = float(pts[1] - pts[0])
        if step <= 0 or not np.allclose(np.diff(pts), step, rtol=1e-12, atol=1e-12):
            raise InvalidArgument("points must be increasing and equidistant")
        return cls(float(pts[0]), step, len(pts))


def make_grid(half_width, half_points, bias=DEFAULT_BIAS):
    """Symmetric grid of ``2 * half_points`` points covering ``(-r + a, r + a]``."""
    if not half_width > 0:
        raise InvalidArgument("half_width must be positive")
    if int(half_points) != half_points or half_points < 2:
        raise InvalidArgument("half_points must be an integer >= 2")
    half_points = int(half_points)
    step = half_width / half_points
    return Grid(step - half_width + bias, step, 2 * half_points, float(half_width), half_points, float(bias))


@dataclass
class NoisePmf:
    grid: Grid
    p: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.shape != (self.grid.size,):
            raise InvalidArgument(f"pmf has {self.p.size} entries, grid has {self.grid.size}")

    def validate(self, tol=1e-12):
        if np.any(~np.isfinite(self.p)) or np.any(self.p < 0):
            raise InvalidArgument("pmf entries must be finite and nonnegative")
        total = math.fsum(self.p)
        if abs(total - 1.0) > tol:
            raise InvalidArgument(f"pmf sums to {total!r}, deficit {1.0 - total:.3e}")
        return self

    @property
    def points(self):
        return self.grid.points

    def to_dict(self):
        return {
            "grid": self.grid.to_dict(),
            "pmf": [float(v) for v in self.p],
            "meta": {str(k): str(v) for k, v in self.meta.items()},
        }

    @classmethod
    def from_dict(cls, d, validate=True):
        if not isinstance(d, dict):
            raise SchemaError("<root>", "expected an object")
        for key in ("grid", "pmf"):
            if key not in d:
                raise SchemaError(key, "missing")
        unknown = set(d) - {"grid", "pmf", "meta"}
        if unknown:
            raise SchemaError(sorted(unknown)[0], "unknown key")
        grid = Grid.from_dict(d["grid"])
        pmf = d["pmf"]
        if not isinstance(pmf, list) or not all(isinstance(v, (int, float)) for v in pmf):
            raise SchemaError("pmf", "expected a list of numbers")
        if len(pmf) != grid.size:
            raise SchemaError("pmf", f"length {len(pmf)} != 2*half_points = {grid.size}")
        meta = d.get("meta", {})
        if not isinstance(meta, dict) or not all(isinstance(v, str) for v in meta.values()):
            raise SchemaError("meta", "expected a string-to-string object")
        out = cls(grid, np.array(pmf, dtype=np.float64), dict(meta))
        if validate:
            try:
                out.validate()
            except InvalidArgument as exc:
                raise SchemaError("pmf", str(exc)) from exc
        return out


def dumps_pmf(pmf):
    return json.dumps(pmf.to_dict(), indent=1)


def loads_pmf(text, validate=True):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from exc
    return NoisePmf.from_dict(data, validate=validate)


def truncated_gaussian_pmf(grid, sigma):
    """Gaussian weights around the grid center, renormalized over the grid."""
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    d = grid.mirror_distance()
    # relative to the closest point, so tiny sigma cannot underflow every weight
    w = np.exp(-(d * d - d.min() ** 2) / (2.0 * sigma * sigma))
    return NoisePmf(grid, w / w.sum(), {"generator": "truncated_gaussian", "sigma": repr(float(sigma))})


def staircase_gamma(eps):
    return 1.0 / (1.0 + math.exp(eps / 2.0))


def staircase_pmf(grid, eps, sensitivity=1.0, gamma=None):
    """Staircase density with period ``sensitivity`` sampled on the grid and renormalized.

    Within the k-th period away from the center the density is ``exp(-k*eps)``
    on the inner fraction ``gamma`` and ``exp(-(k+1)*eps)`` on the rest.
    """
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    if gamma is None:
        gamma = staircase_gamma(eps)
    if not 0 < gamma < 1:
        raise InvalidArgument("gamma must lie in (0, 1)")
    k = grid.shift_cells(sensitivity)
    # twice the distance to the center, in cells: exact integers
    twice = np.abs(2 * np.arange(grid.size) - (grid.size - 1))
    period = 2 * k
    step_idx = twice // period
    inner = (twice - step_idx * period) < gamma * period
    level = np.where(inner, step_idx, step_idx + 1)
    w = np.exp(-eps * level.astype(float))
    meta = {"generator": "staircase", "eps": repr(float(eps)), "gamma": repr(float(gamma)),
            "sensitivity": repr(float(sensitivity))}
    return NoisePmf(grid, w / w.sum(), meta)


def _cell_samples(pmf, rng, count):
    idx = rng.choice(pmf.grid.size, size=count, p=pmf.p / pmf.p.sum())
    centers = pmf.points[idx]
    u = rng.random(count)
    return centers + (u - 0.5) * pmf.grid.step


def sample_noise(pmf, seed, count):
    """Pick grid point ``i`` with probability ``p_i``, then draw uniformly from its cell.

    Cells are ``[x_i - step/2, x_i + step/2)`` for every point, edges included.
    """
    if count < 0:
        raise InvalidArgument("count must be nonnegative")
    rng = np.random.default_rng(seed)
    return _cell_samples(pmf, rng, int(count))


def sample_radial(pmf, dim, seed, count=None):
    """Rotation-symmetric draw in ``dim`` dimensions with radius ``|x|``, ``x ~ pmf``.

    Returns one vector, or a ``(count, dim)`` array when ``count`` is given.
    """
    if int(dim) != dim or dim < 1:
        raise InvalidArgument("dim must be a positive integer")
    rng = np.random.default_rng(seed)
    m = 1 if count is None else int(count)
    if m < 0:
        raise InvalidArgument("count must be nonnegative")
    direction = rng.standard_normal((m, int(dim)))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.abs(_cell_samples(pmf, rng, m))
    out = radius[:, None] * direction
    return out[0] if count is None else out


@dataclass
class StructureReport:
    is_symmetric: bool
    max_asymmetry: float
    is_monotone_from_center: bool
    max_violation: float
    mass_total: float

    @property
    def ok(self):
        return self.is_symmetric and self.is_monotone_from_center


def check_structure(pmf, tol=0.0):
    """Mirror symmetry and monotone increase towards the center, within ``tol``."""
    p = np.asarray(pmf.p if isinstance(pmf, NoisePmf) else pmf, dtype=float)
    asym = float(np.max(np.abs(p - p[::-1]))) if p.size else 0.0
    left = p[: (p.size + 1) // 2]
    drops = left[:-1] - left[1:]
    violation = float(max(0.0, drops.max())) if drops.size else 0.0
    return StructureReport(asym <= tol, asym, violation <= tol, violation, math.fsum(p))
