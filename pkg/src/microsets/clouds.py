"""Finite point clouds standing in for compact subsets of R^d.

A cloud carries a resolution ``delta``: every point of the underlying
compact set lies within delta of some cloud point.  Statements about the
set below scale ~delta are not recoverable from the cloud, so downstream
scale sweeps floor out at 2*delta.  A cloud that is itself the object of
study is exact and has delta = 0.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError

__all__ = [
    "PointCloud",
    "single_point",
    "grid_cloud",
    "cantor_cloud",
    "random_cloud",
]


def _dedupe_rows(pts: np.ndarray) -> np.ndarray:
    # keep first occurrence, preserve order (order feeds greedy nets)
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


@dataclass(frozen=True)
class PointCloud:
    """Deduplicated finite set of points with a resolution tag."""

    points: np.ndarray
    delta: float = 0.0
    diameter: float = field(init=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            raise PreconditionError("point cloud must be non-empty")
        if pts.ndim != 2:
            raise PreconditionError("points must form an (n, d) array")
        if not np.isfinite(pts).all():
            raise PreconditionError("points must have finite coordinates")
        if self.delta < 0:
            raise PreconditionError(f"delta must be >= 0, got {self.delta}")
        pts = _dedupe_rows(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "diameter", _diameter(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def rescaled(self, target_diameter: float = 1.0) -> tuple:
        """Homothety onto diameter <= target; returns (cloud, scale)."""
        if self.diameter <= target_diameter:
            return self, 1.0
        scale = target_diameter / self.diameter
        return PointCloud(self.points * scale, delta=self.delta * scale), scale

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, delta: float = 0.0) -> "PointCloud":
        pts = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(pts, delta=delta)


def _diameter(pts: np.ndarray) -> float:
    n = pts.shape[0]
    if n == 1:
        return 0.0
    best = 0.0
    chunk = max(1, int(4e6) // max(n, 1))
    for s in range(0, n, chunk):
        block = pts[s:s + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def single_point(d: int = 1) -> PointCloud:
    return PointCloud(np.zeros((1, d)))


def grid_cloud(spacing: float, d: int = 1) -> PointCloud:
    """Uniform grid on [0,1]^d; a (spacing*sqrt(d)/2)-net of the cube."""
    if not (0 < spacing <= 1):
        raise PreconditionError(f"spacing must lie in (0, 1], got {spacing}")
    axis = np.arange(0.0, 1.0 + spacing / 2, spacing)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return PointCloud(pts, delta=spacing * np.sqrt(d) / 2)


def cantor_cloud(depth: int) -> PointCloud:
    """Midpoints of the 2^depth ternary-Cantor intervals of length 3^-depth.

    Every point of the Cantor set lies in one such interval, hence within
    3^-depth / 2 of a midpoint.
    """
    if depth < 0:
        raise PreconditionError(f"depth must be >= 0, got {depth}")
    lefts = np.zeros(1)
    for j in range(1, depth + 1):
        step = 2.0 / 3 ** j
        lefts = np.concatenate([lefts, lefts + step])
    lefts.sort()
    mids = lefts + 0.5 / 3 ** depth
    return PointCloud(mids[:, None], delta=0.5 / 3 ** depth)


def random_cloud(n: int, d: int, seed: int, side: Optional[float] = None) -> PointCloud:
    """Uniform sample of [0, side]^d; side defaults to 1/sqrt(d) so the
    diameter stays <= 1 (partition-ready).  The sample is taken as exact
    (delta = 0): it is the compact set, not a net of something finer.
    """
    if n < 1:
        raise PreconditionError(f"need n >= 1 points, got {n}")
    if side is None:
        side = 1.0 / np.sqrt(d)
    rng = np.random.default_rng(seed)
    return PointCloud(rng.uniform(0.0, side, size=(n, d)))
