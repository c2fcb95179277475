"""Inner regular partitions (generalized dyadic cubes) over point clouds.

Construction: greedy maximal rho^k-separated nets, level by level, each
net seeded with the previous level's centers so centers nest by
construction.  Points are assigned by chains: each point to its nearest
finest-level center, each center to its nearest center one level up
(ties broken by lowest index).  The chain yields the member sets of
every cube, so disjoint covering and the tree structure hold by
construction; the two ball constants are measured and checked per run.

The guaranteed outer constant is the geometric series 1/(1 - rho) (each
chain hop moves at most rho^k).  No useful inner constant is guaranteed
by the construction itself; the inner ball property is verified against
the target constant on every build and the measured value reported.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .clouds import PointCloud
from .errors import (
    ConstructionFailure,
    InsufficientDepth,
    PreconditionError,
)
from .symtree import SymbolTree

__all__ = [
    "Cube",
    "InnerPartition",
    "ValidationReport",
    "CloudLowerDim",
    "build_partition",
    "validate_partition",
    "partition_to_tree",
    "cloud_lower_dim_estimate",
]

DEFAULT_RHO = Fraction(1, 4)
DEFAULT_C_TARGET = 0.125  # 1/8
DEFAULT_C_OUTER_TARGET = 1.5  # 3/2


def _greedy_net(pts: np.ndarray, kd: cKDTree, r: float,
                seeds: np.ndarray) -> np.ndarray:
    """Maximal set with pairwise separation > r, covering radius <= r.

    Seeds are accepted unconditionally and first (they are separated at
    the coarser scale); remaining points are scanned in index order.
    """
    covered = np.zeros(pts.shape[0], dtype=bool)
    out = []
    for i in seeds:
        out.append(int(i))
        covered[kd.query_ball_point(pts[i], r)] = True
    for i in range(pts.shape[0]):
        if not covered[i]:
            out.append(i)
            covered[kd.query_ball_point(pts[i], r)] = True
    return np.asarray(out, dtype=np.int64)


def _nearest_lowest(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Index of the nearest ref row per query row; ties -> lowest index.

    Exact float ties (and near-ties within 1e-12 relative) are resolved
    to the lowest reference index so symmetric configurations assign
    deterministically.
    """
    kd = cKDTree(ref)
    dist, _ = kd.query(query, k=1, workers=-1)
    radius = dist * (1 + 1e-12) + 1e-300
    balls = kd.query_ball_point(query, radius)
    return np.asarray([min(b) for b in balls], dtype=np.int64)


@dataclass(frozen=True)
class Cube:
    """One cube of an inner partition, materialized for inspection."""

    id: str
    level: int
    index: int
    center_index: int
    center: tuple
    parent: Optional[int]
    members: np.ndarray


@dataclass(frozen=True)
class InnerPartition:
    cloud: PointCloud
    rho: Fraction
    k_max: int
    centers: tuple  # per level: point indices into the cloud
    parents: tuple  # per level k>=1: position into centers[k-1]; level 0 -> (-1,)
    owners: tuple   # per level: owning cube position for every cloud point
    c_target: float
    C_target: float
    c_meas: float
    C_meas: float
    M_meas: int

    def level_size(self, k: int) -> int:
        return len(self.centers[k])

    def cubes_at(self, k: int) -> list:
        pts = self.cloud.points
        out = []
        for i, ci in enumerate(self.centers[k]):
            parent = None if k == 0 else int(self.parents[k][i])
            out.append(Cube(
                id=f"{k}:{i}", level=k, index=i, center_index=int(ci),
                center=tuple(float(v) for v in pts[ci]),
                parent=parent,
                members=np.flatnonzero(self.owners[k] == i),
            ))
        return out

    def to_json_dict(self) -> dict:
        return {
            "kind": "inner_partition",
            "rho": str(self.rho),
            "k_max": self.k_max,
            "delta": self.cloud.delta,
            "points": self.cloud.points.tolist(),
            "centers": [c.tolist() for c in self.centers],
            "parents": [p.tolist() for p in self.parents],
            "owners": [o.tolist() for o in self.owners],
            "constants": {
                "c_target": self.c_target, "C_target": self.C_target,
                "c_meas": self.c_meas, "C_meas": self.C_meas,
                "M_meas": self.M_meas,
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "InnerPartition":
        if data.get("kind") != "inner_partition":
            raise PreconditionError(f"not an inner partition: {data.get('kind')!r}")
        cloud = PointCloud(np.asarray(data["points"], dtype=np.float64),
                           delta=float(data["delta"]))
        cons = data["constants"]
        return cls(
            cloud=cloud, rho=Fraction(data["rho"]), k_max=int(data["k_max"]),
            centers=tuple(np.asarray(c, dtype=np.int64) for c in data["centers"]),
            parents=tuple(np.asarray(p, dtype=np.int64) for p in data["parents"]),
            owners=tuple(np.asarray(o, dtype=np.int64) for o in data["owners"]),
            c_target=float(cons["c_target"]), C_target=float(cons["C_target"]),
            c_meas=float(cons["c_meas"]), C_meas=float(cons["C_meas"]),
            M_meas=int(cons["M_meas"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "InnerPartition":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _measured_constants(cloud, rho_f, centers, parents, owners):
    """(c_meas, C_meas, M_meas): worst inner radius, outer radius, branching."""
    pts = cloud.points
    kd = cKDTree(pts)
    n = pts.shape[0]
    C_meas = 0.0
    c_meas = math.inf
    for k in range(len(centers)):
        center_pts = pts[centers[k]]
        own = owners[k]
        scale = rho_f ** k
        dists = np.sqrt(((pts - center_pts[own]) ** 2).sum(axis=1))
        C_meas = max(C_meas, float(dists.max()) / scale)
        m = len(centers[k])
        if m < 2:
            continue  # no foreign points, any c works at this level
        # nearest point owned by a different cube, per center
        kk = min(n, 32)
        dd, ii = kd.query(center_pts, k=kk, workers=-1)
        dd = np.atleast_2d(dd)
        ii = np.atleast_2d(ii)
        foreign = own[ii] != np.arange(m)[:, None]
        found = foreign.any(axis=1)
        first = np.argmax(foreign, axis=1)
        best = np.where(found, dd[np.arange(m), first], np.inf)
        for i in np.flatnonzero(~found):
            dfull = np.sqrt(((pts - center_pts[i]) ** 2).sum(axis=1))
            fmask = own != i
            if fmask.any():
                best[i] = dfull[fmask].min()
        c_meas = min(c_meas, float(best.min()) / scale)
    M_meas = 1
    for k in range(1, len(centers)):
        M_meas = max(M_meas, int(np.bincount(parents[k]).max()))
    return c_meas, C_meas, M_meas


@dataclass(frozen=True)
class ValidationReport:
    properties: dict
    c_meas: float
    C_meas: float
    M_meas: int
    failures: tuple

    @property
    def ok(self) -> bool:
        return all(self.properties.values())


def validate_partition(p: InnerPartition) -> ValidationReport:
    """Recheck the five partition properties from the raw arrays."""
    pts = p.cloud.points
    n = pts.shape[0]
    rho_f = float(p.rho)
    failures = []

    single_root = len(p.centers[0]) == 1
    if not single_root:
        failures.append(f"level 0 has {len(p.centers[0])} cubes")

    disjoint_cover = True
    for k in range(p.k_max + 1):
        own = p.owners[k]
        m = len(p.centers[k])
        if own.shape != (n,) or own.min() < 0 or own.max() >= m:
            disjoint_cover = False
            failures.append(f"level {k}: owner array malformed")
            continue
        sizes = np.bincount(own, minlength=m)
        if (sizes == 0).any():
            disjoint_cover = False
            empty = int(np.flatnonzero(sizes == 0)[0])
            failures.append(f"level {k}: cube {k}:{empty} is empty")

    nested = True
    for k in range(p.k_max):
        if not np.array_equal(p.owners[k], p.parents[k + 1][p.owners[k + 1]]):
            nested = False
            bad = int(np.flatnonzero(
                p.owners[k] != p.parents[k + 1][p.owners[k + 1]])[0])
            failures.append(f"point {bad}: level-{k + 1} cube not inside its "
                            f"level-{k} cube")
            break

    c_meas, C_meas, M_meas = _measured_constants(
        p.cloud, rho_f, p.centers, p.parents, p.owners)

    sandwich = C_meas <= p.C_target and c_meas > p.c_target
    if C_meas > p.C_target:
        failures.append(f"outer constant {C_meas:.6f} exceeds target {p.C_target}")
    if c_meas <= p.c_target:
        failures.append(f"inner constant {c_meas:.6f} at or below target "
                        f"{p.c_target}: some foreign point sits inside an "
                        f"inner ball")

    center_nesting = all(
        set(p.centers[k].tolist()) <= set(p.centers[k + 1].tolist())
        for k in range(p.k_max)
    )
    if not center_nesting:
        failures.append("center sets do not nest across levels")

    return ValidationReport(
        properties={
            "single_root": single_root,
            "disjoint_cover": disjoint_cover,
            "tree_structure": nested,
            "ball_sandwich": sandwich,
            "center_nesting": center_nesting,
        },
        c_meas=c_meas, C_meas=C_meas, M_meas=M_meas,
        failures=tuple(failures),
    )


def build_partition(cloud: PointCloud, rho=DEFAULT_RHO, k_max: int = 5,
                    c_target: float = DEFAULT_C_TARGET,
                    C_target: float = DEFAULT_C_OUTER_TARGET) -> InnerPartition:
    rho = Fraction(rho)
    if not (0 < rho < 1):
        raise PreconditionError(f"rho must lie in (0, 1), got {rho}")
    if k_max < 1:
        raise PreconditionError(f"k_max must be >= 1, got {k_max}")
    if cloud.diameter > 1:
        raise PreconditionError(
            f"cloud diameter {cloud.diameter:.6f} exceeds 1; rescale first")
    rho_f = float(rho)
    if rho_f ** k_max < 2 * cloud.delta:
        raise InsufficientDepth(
            f"rho^k_max = {rho_f ** k_max:.3g} is below the resolution floor "
            f"2*delta = {2 * cloud.delta:.3g}")

    pts = cloud.points
    kd = cKDTree(pts)
    centers = [np.array([0], dtype=np.int64)]
    for k in range(1, k_max + 1):
        centers.append(_greedy_net(pts, kd, rho_f ** k, centers[-1]))

    parents = [np.array([-1], dtype=np.int64)]
    for k in range(1, k_max + 1):
        parents.append(_nearest_lowest(pts[centers[k]], pts[centers[k - 1]]))

    owners = [None] * (k_max + 1)
    owners[k_max] = _nearest_lowest(pts, pts[centers[k_max]])
    for k in range(k_max - 1, -1, -1):
        owners[k] = parents[k + 1][owners[k + 1]]

    c_meas, C_meas, M_meas = _measured_constants(
        cloud, rho_f, centers, parents, owners)
    part = InnerPartition(
        cloud=cloud, rho=rho, k_max=k_max,
        centers=tuple(centers), parents=tuple(parents), owners=tuple(owners),
        c_target=c_target, C_target=C_target,
        c_meas=c_meas, C_meas=C_meas, M_meas=M_meas,
    )
    report = validate_partition(part)
    if not report.ok:
        raise ConstructionFailure(
            "constructed partition violates its invariants: "
            + "; ".join(report.failures))
    return part


def partition_to_tree(p: InnerPartition) -> SymbolTree:
    """The (rho, M)-tree of the partition: children numbered 1..j per parent
    in center order.  Labels carry cube id, center index and coordinates.
    """
    M = max(1, p.M_meas)
    pts = p.cloud.points

    def label(k, pos):
        ci = int(p.centers[k][pos])
        return {"id": f"{k}:{pos}", "center_index": ci,
                "center": [float(v) for v in pts[ci]]}

    packed_prev = np.zeros(1, dtype=np.int64)
    levels = [packed_prev]
    labels = [{0: label(0, 0)}]
    for k in range(1, p.k_max + 1):
        par = p.parents[k]
        order = np.argsort(par, kind="stable")  # groups siblings, keeps center order
        ranks = np.empty(len(par), dtype=np.int64)
        _, starts = np.unique(par[order], return_index=True)
        ranks[order] = np.arange(len(par)) - np.repeat(
            starts, np.diff(np.append(starts, len(par))))
        packed = packed_prev[par] * M + ranks
        levels.append(np.sort(packed))
        labels.append({int(packed[pos]): label(k, pos) for pos in range(len(par))})
        packed_prev = packed
    return SymbolTree(M=M, rho=p.rho, levels=levels, labels=labels)


@dataclass(frozen=True)
class CloudLowerDim:
    """min over sampled (x, R, r) of log(net count) / log(R/r)."""

    value: float
    scale_gap: int
    r_floor: float
    samples: int
    # per radius rung: (R, r, min count, min estimate)
    profile: tuple


def _net_count(sub: np.ndarray, r: float) -> int:
    """Greedy maximal (> r)-separated subset size, index order.

    Brackets the covering number: N_r <= count <= N_{r/2}.
    """
    count = 0
    kept = np.empty_like(sub)
    r2 = r * r
    for row in sub:
        if count == 0 or (((kept[:count] - row) ** 2).sum(axis=1) > r2).all():
            kept[count] = row
            count += 1
    return count


def cloud_lower_dim_estimate(cloud: PointCloud, scale_gap: int,
                             samples: int = 64, seed: int = 0,
                             r_min: Optional[float] = None) -> CloudLowerDim:
    """Worst-case covering exponent of the cloud across location and scale.

    For sampled centers x and a dyadic ladder of radii R, counts a greedy
    r-net of B(x, R) with r = R / 2^scale_gap and takes the minimum of
    log(count) / log(R/r).  Scales stop at max(2*delta, r_min, smallest
    positive nearest-neighbour distance): below that the cloud carries no
    geometry.
    """
    if scale_gap < 1:
        raise PreconditionError(f"scale_gap must be >= 1, got {scale_gap}")
    if cloud.n == 1:
        return CloudLowerDim(0.0, scale_gap, 0.0, 1, ())
    pts = cloud.points
    kd = cKDTree(pts)
    nn = kd.query(pts, k=2, workers=-1)[0][:, 1]
    r_floor = max(2 * cloud.delta, float(nn[nn > 0].min()))
    if r_min is not None:
        r_floor = max(r_floor, r_min)
    if cloud.diameter / 2 < r_floor * 2 ** scale_gap:
        raise InsufficientDepth(
            f"cloud spans {cloud.diameter:.3g} but the radius ladder needs "
            f"{scale_gap} octaves above the resolution floor {r_floor:.3g}")

    rng = np.random.default_rng(seed)
    if cloud.n <= samples:
        xs = np.arange(cloud.n)
    else:
        xs = np.sort(rng.choice(cloud.n, size=samples, replace=False))

    denom = scale_gap * math.log(2)
    best = math.inf
    profile = []
    R = cloud.diameter / 2
    while R / 2 ** scale_gap >= r_floor:
        r = R / 2 ** scale_gap
        rung_best = math.inf
        rung_count = None
        for x in xs:
            ball = np.sort(kd.query_ball_point(pts[x], R))
            count = _net_count(pts[ball], r)
            est = math.log(count) / denom
            if est < rung_best:
                rung_best = est
                rung_count = count
        profile.append((R, r, rung_count, rung_best))
        best = min(best, rung_best)
        R /= 2
    return CloudLowerDim(value=best, scale_gap=scale_gap, r_floor=r_floor,
                         samples=len(xs), profile=tuple(profile))
