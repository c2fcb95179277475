"""Discrete measures, Frostman checks, packing estimates, tangent pipeline.

The dual Frostman principle drives everything here: a probability measure
with mu(B(x,r)) >= c r^s for all centers in a set forces every disjoint
packing by balls centered in that set to satisfy sum (2 r_i)^s <= c^{-1} 2^s,
because 1 = mu(R^d) >= sum mu(B(x_i, r_i)) >= c 2^{-s} sum (2 r_i)^s.

``tangent_pipeline`` builds such a measure on a magnified window of a point
cloud: a good cylinder Q of the cloud's nested partition supplies uniformly
spread centers, the counting measure on those centers is pushed through the
homothety normalizing Q's inner ball, and the resulting measure satisfies
the Frostman bound at every resolvable scale, with constants measured from
the partition itself.  The packing pre-measure of the magnified window is
then bounded by (8C/(c rho))^beta, which the greedy packing sweep
cross-checks numerically.

Weights are exact rationals throughout; ball masses are exact counts (up to
float rounding of distances at ball boundaries, which the tests avoid by
using generic radii).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, isfinite, log
from typing import Optional, Sequence, Union

import numpy as np

from .clouds import PointCloud
from .cubes import (
    DEFAULT_C_TARGET,
    DEFAULT_C_OUTER_TARGET,
    DEFAULT_RHO,
    InnerPartition,
    build_partition,
    partition_to_tree,
)
from .errors import (
    InternalConsistencyError,
    PreconditionError,
    WitnessNotFound,
)
from .pigeonhole import good_cylinder
from .symtree import SymbolTree, branch_count, lower_dim_estimate, pack_code, unpack_code

RhoLike = Union[Fraction, float, str]


# -- measures ----------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many weighted atoms; weights are exact Fractions summing to 1."""

    points: np.ndarray
    weights: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise PreconditionError("measure needs a non-empty 2-d atom array")
        if not np.all(np.isfinite(pts)):
            raise PreconditionError("atom coordinates must be finite")
        w = tuple(Fraction(x) for x in self.weights)
        if len(w) != pts.shape[0]:
            raise PreconditionError("one weight per atom required")
        if any(x <= 0 for x in w):
            raise PreconditionError("weights must be positive")
        if sum(w) != 1:
            raise PreconditionError(f"weights must sum to exactly 1, got {sum(w)}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        pts.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def ball_mass(self, center, r: float) -> Fraction:
        """Exact total weight inside the closed ball B(center, r)."""
        c = np.asarray(center, dtype=float).reshape(-1)
        if c.size != self.d:
            raise PreconditionError(f"center must have dimension {self.d}")
        dist = np.sqrt(((self.points - c) ** 2).sum(axis=1))
        inside = np.flatnonzero(dist <= r)
        return sum((self.weights[i] for i in inside), Fraction(0))

    def to_json_dict(self) -> dict:
        return {
            "kind": "discrete_measure",
            "atoms": [
                {"point": [float(v) for v in p], "weight": str(w)}
                for p, w in zip(self.points, self.weights)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DiscreteMeasure":
        if data.get("kind") != "discrete_measure":
            raise PreconditionError("not a discrete_measure payload")
        pts = np.array([a["point"] for a in data["atoms"]], dtype=float)
        w = tuple(Fraction(a["weight"]) for a in data["atoms"])
        return cls(points=pts, weights=w)


def counting_measure(centers) -> DiscreteMeasure:
    """Uniform probability measure: weight 1/#centers on each center."""
    pts = np.asarray(centers, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise PreconditionError("counting measure needs at least one center")
    n = pts.shape[0]
    return DiscreteMeasure(points=pts, weights=(Fraction(1, n),) * n)


@dataclass(frozen=True)
class Homothety:
    """x -> scale * x + translation; maps B(x, r) to B(f(x), scale * r)."""

    scale: float
    translation: tuple

    def __post_init__(self):
        if not (self.scale > 0 and isfinite(self.scale)):
            raise PreconditionError("homothety scale must be positive and finite")
        t = tuple(float(v) for v in np.asarray(self.translation, dtype=float).reshape(-1))
        object.__setattr__(self, "translation", t)

    @property
    def d(self) -> int:
        return len(self.translation)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.scale * pts + np.asarray(self.translation)

    def map_ball(self, center, r: float) -> tuple:
        return self.apply(np.asarray(center, dtype=float)), self.scale * r

    def inverse(self) -> "Homothety":
        t = -np.asarray(self.translation) / self.scale
        return Homothety(scale=1.0 / self.scale, translation=tuple(t))


def pushforward(m: DiscreteMeasure, f: Homothety) -> DiscreteMeasure:
    """Transport atoms through f; weights (hence all ball masses) unchanged."""
    return DiscreteMeasure(points=f.apply(m.points), weights=m.weights)


# -- Frostman lower bound ------------------------------------------------------


@dataclass(frozen=True)
class FrostmanCheck:
    ok: bool
    s: float
    c: float
    worst_point: tuple
    worst_r: float
    worst_ratio: float  # min over (x, r) of mass / r^s; ok iff >= c


def frostman_lower_check(
    m: DiscreteMeasure,
    support_sample,
    s: float,
    c: float,
    radii: Sequence[float],
    r0: float = 1.0,
) -> FrostmanCheck:
    """Does m(B(x,r)) >= c r^s hold at every sampled center and radius?

    Reports the minimizing (x, r, mass/r^s) so a failure comes with its
    witness.
    """
    pts = np.asarray(support_sample, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    radii = [float(r) for r in radii]
    if not radii or min(radii) <= 0 or max(radii) >= r0:
        raise PreconditionError(f"radii must lie strictly inside (0, {r0})")
    worst = None
    for x in pts:
        for r in radii:
            ratio = float(m.ball_mass(x, r)) / r**s
            if worst is None or ratio < worst[2]:
                worst = (tuple(float(v) for v in x), r, ratio)
    return FrostmanCheck(
        ok=worst[2] >= c,
        s=s,
        c=c,
        worst_point=worst[0],
        worst_r=worst[1],
        worst_ratio=worst[2],
    )


def packing_upper_bound(c: Union[float, Fraction], s: float) -> float:
    """The dual-Frostman packing bound c^{-1} 2^s."""
    if not c > 0:
        raise PreconditionError("Frostman constant must be positive")
    return float(2.0**s / float(c))


def frostman_base(c: Fraction, C: Fraction, rho: Fraction) -> Fraction:
    """Exact base 8C/(c rho) of the tangent packing bound (8C/(c rho))^beta."""
    c, C, rho = Fraction(c), Fraction(C), Fraction(rho)
    if not (c > 0 and C > 0 and 0 < rho < 1):
        raise PreconditionError("need c, C > 0 and rho in (0, 1)")
    return 8 * C / (c * rho)


# -- packing estimates ---------------------------------------------------------


@dataclass(frozen=True)
class PackingEstimate:
    """Greedy fixed-radius packing value sum (2 delta)^s at one scale."""

    s: float
    delta: float
    count: int
    lower_sum: float
    upper_bound: Optional[float] = None
    slack: Optional[float] = None


def _greedy_packing_indices(pts: np.ndarray, delta: float) -> list:
    """Maximal family of pairwise disjoint closed balls B(x_i, delta).

    Greedy in point-index order; disjointness means center distance
    strictly greater than 2*delta.
    """
    from scipy.spatial import cKDTree

    kd = cKDTree(pts)
    taken: list = []
    blocked = np.zeros(pts.shape[0], dtype=bool)
    for i in range(pts.shape[0]):
        if blocked[i]:
            continue
        taken.append(i)
        blocked[kd.query_ball_point(pts[i], 2.0 * delta)] = True
    return taken


def greedy_packing_sum(
    cloud: PointCloud, s: float, delta: float, upper_bound: Optional[float] = None
) -> PackingEstimate:
    """Deterministic greedy packing of the cloud at fixed radius delta."""
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    if delta < 2 * cloud.delta:
        raise PreconditionError(
            f"delta {delta} below the cloud resolution floor {2 * cloud.delta}"
        )
    taken = _greedy_packing_indices(cloud.points, delta)
    lower = len(taken) * (2.0 * delta) ** s
    slack = None
    if upper_bound is not None:
        slack = max(0.0, lower - upper_bound)
    return PackingEstimate(
        s=s, delta=delta, count=len(taken), lower_sum=lower,
        upper_bound=upper_bound, slack=slack,
    )


def max_packing_sum_exhaustive(points, s: float, delta: float) -> PackingEstimate:
    """Optimal fixed-radius packing by exhaustive subset enumeration.

    Exponential in the number of points; guarded to small instances.  Used
    to confirm that the greedy value and the Frostman bound genuinely cap
    every packing, not just the greedy one.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n > 16:
        raise PreconditionError("exhaustive packing enumeration capped at 16 points")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    compatible = dist > 2.0 * delta
    best = 0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if all(compatible[i, j] for a, i in enumerate(idx) for j in idx[a + 1:]):
            best = max(best, len(idx))
    return PackingEstimate(
        s=s, delta=delta, count=best, lower_sum=best * (2.0 * delta) ** s
    )


# -- tangent pipeline ----------------------------------------------------------


@dataclass(frozen=True)
class TangentBlock:
    """Per-magnification record of the tangent-measure verification."""

    ell: int
    t: float
    status: str  # "verified" | "scale_starved" | "witness_gap"
    message: str = ""
    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    code: Optional[tuple] = None
    frostman_constant: Optional[float] = None
    r_range: Optional[tuple] = None
    samples: tuple = ()  # (r, mass, threshold) triples
    worst_ratio: Optional[float] = None
    samples_ok: bool = True
    mass_law_cylinders: int = 0
    support_radius: Optional[float] = None
    support_bound: Optional[float] = None
    support_ok: bool = True
    packing: tuple = ()
    packing_bound: Optional[float] = None
    packing_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.samples_ok and self.support_ok and self.packing_ok

    def to_json_dict(self) -> dict:
        d = {
            "ell": self.ell,
            "t": self.t,
            "status": self.status,
            "ok": self.ok,
        }
        if self.message:
            d["message"] = self.message
        if self.n is not None:
            d.update(
                n=self.n, m=self.m, k=self.k,
                code=",".join(str(c) for c in self.code),
                frostman_constant=self.frostman_constant,
                r_range=list(self.r_range),
                worst_ratio=self.worst_ratio,
                samples_ok=self.samples_ok,
                n_samples=len(self.samples),
                samples=[list(t) for t in self.samples],
                mass_law_cylinders=self.mass_law_cylinders,
                support_radius=self.support_radius,
                support_bound=self.support_bound,
                packing_bound=self.packing_bound,
                packing=[
                    {
                        "delta": p.delta, "count": p.count,
                        "lower_sum": p.lower_sum, "upper_bound": p.upper_bound,
                        "slack": p.slack,
                    }
                    for p in self.packing
                ],
            )
        return d


@dataclass(frozen=True)
class TangentReport:
    beta: float
    beta_source: str
    rho: Fraction
    k_max: int
    c: float
    C: float
    c_raw: float
    C_raw: float
    M_meas: int
    blocks: tuple
    symbolic: dict

    @property
    def ok(self) -> bool:
        return all(b.ok for b in self.blocks)

    @property
    def gaps(self) -> tuple:
        return tuple(b.ell for b in self.blocks if b.status == "witness_gap")

    def to_json_dict(self) -> dict:
        return {
            "kind": "tangent_report",
            "beta": self.beta,
            "beta_source": self.beta_source,
            "rho": str(self.rho),
            "k_max": self.k_max,
            "c": self.c,
            "C": self.C,
            "c_raw": self.c_raw,
            "C_raw": self.C_raw,
            "M_meas": self.M_meas,
            "ok": self.ok,
            "gaps": list(self.gaps),
            "blocks": [b.to_json_dict() for b in self.blocks],
            "symbolic": dict(self.symbolic),
        }


def _resolution_cap(rho: Fraction, delta: float, hard_cap: int = 60) -> int:
    """Deepest level k with rho^k >= 2*delta (cubes stay resolvable)."""
    if delta <= 0:
        return hard_cap
    k = 0
    while k < hard_cap and float(rho ** (k + 1)) >= 2 * delta:
        k += 1
    return k


def _position_maps(tree: SymbolTree) -> list:
    """Per level: cube position -> packed code, inverted from tree labels."""
    maps = []
    for lvl, lab in zip(tree.levels, tree.labels):
        pos2packed = np.empty(lvl.size, dtype=np.int64)
        for packed in lvl:
            entry = lab[int(packed)]
            pos = int(entry["id"].split(":")[1])
            pos2packed[pos] = packed
        maps.append(pos2packed)
    return maps


def _tree_counts(tree: SymbolTree, level: int, k: int, lo: int, hi: int) -> np.ndarray:
    nodes = tree.levels[level][lo:hi]
    span = tree.M ** (k - level)
    lvl = tree.levels[k]
    return np.searchsorted(lvl, (nodes + 1) * span) - np.searchsorted(lvl, nodes * span)


def _check_mass_law(
    part: InnerPartition,
    tree: SymbolTree,
    pos_maps: list,
    q_packed: int,
    n: int,
    k: int,
    centre_idx: np.ndarray,
) -> int:
    """Geometric centre counts must equal tree branch counts, cylinder by cylinder.

    For every cylinder below the chosen Q (all relative levels down to the
    centre level), the number of centre points the partition assigns to it
    must match the subtree's own count of level-k descendants.
    """
    checked = 0
    for lvl in range(n, k + 1):
        span = tree.M ** (lvl - n)
        arr = tree.levels[lvl]
        lo = int(np.searchsorted(arr, q_packed * span))
        hi = int(np.searchsorted(arr, (q_packed + 1) * span))
        tree_counts = _tree_counts(tree, lvl, k, lo, hi)
        packed2pos = {int(p): i for i, p in enumerate(pos_maps[lvl])}
        positions = np.array([packed2pos[int(p)] for p in arr[lo:hi]], dtype=np.int64)
        owners = part.owners[lvl][centre_idx]
        geo = np.bincount(owners, minlength=len(pos_maps[lvl]))[positions]
        if not np.array_equal(geo, tree_counts):
            bad = int(np.flatnonzero(geo != tree_counts)[0])
            raise InternalConsistencyError(
                f"cylinder mass law broke at level {lvl}, cube position "
                f"{int(positions[bad])}: geometric {int(geo[bad])} != tree {int(tree_counts[bad])}"
            )
        checked += hi - lo
    return checked


def _minimal_j(r: float, c: float, C: float, rho_f: float) -> int:
    """Smallest j >= 0 with C * rho^j <= r*c/4."""
    q = r * c / (4.0 * C)
    if q >= 1.0:
        return 0
    j = int(ceil(log(q) / log(rho_f) - 1e-12))
    while rho_f**j > q:  # guard float rounding of the ceil
        j += 1
    return j


def _run_block(
    cloud: PointCloud,
    part: InnerPartition,
    tree: SymbolTree,
    pos_maps: list,
    ell: int,
    beta: float,
    c: float,
    C: float,
    samples: int,
    seed: int,
    packing_deltas: Optional[Sequence[float]],
) -> TangentBlock:
    rho_f = float(part.rho)
    t_exp = beta + 1.0 / ell
    try:
        res = good_cylinder(tree, t_exp, ell, gap=2)
    except WitnessNotFound as e:
        return TangentBlock(ell=ell, t=t_exp, status="witness_gap", message=str(e))

    n, k = res.n, res.k
    m = k - n
    q_packed = pack_code(res.code, tree.M)
    q_label = tree.labels[n][q_packed]
    q_pos = int(q_label["id"].split(":")[1])
    x_centre = np.asarray(q_label["center"], dtype=float)

    # centre set: centres of the level-k cubes below Q
    span = tree.M**m
    arr = tree.levels[k]
    lo = int(np.searchsorted(arr, q_packed * span))
    hi = int(np.searchsorted(arr, (q_packed + 1) * span))
    centre_idx = np.array(
        [int(tree.labels[k][int(p)]["center_index"]) for p in arr[lo:hi]],
        dtype=np.int64,
    )
    total = centre_idx.size
    if total != branch_count(tree, res.code, k):
        raise InternalConsistencyError("centre set does not match the branch count")
    mass_law_cylinders = _check_mass_law(part, tree, pos_maps, q_packed, n, k, centre_idx)

    mu = counting_measure(cloud.points[centre_idx])
    lam = 2.0 / (c * rho_f**n)
    f = Homothety(scale=lam, translation=tuple(-lam * x_centre))
    nu = pushforward(mu, f)

    support_radius = float(np.sqrt((nu.points**2).sum(axis=1)).max())
    support_bound = 2.0 * C / c
    support_ok = support_radius <= support_bound * (1 + 1e-9)

    mapped = f.apply(cloud.points)
    inside = np.flatnonzero(np.sqrt((mapped**2).sum(axis=1)) <= 1.0)

    fro_const = (c * rho_f / (4.0 * C)) ** t_exp
    r_lo = 4.0 * C * rho_f**ell / c
    sample_triples = []
    if r_lo < 1.0 and inside.size:
        rng = np.random.default_rng([seed, ell])
        xs = rng.integers(0, inside.size, size=samples)
        rs = np.exp(rng.uniform(log(r_lo), 0.0, size=samples))
        for xi, r in zip(xs, rs):
            p_idx = int(inside[xi])
            x = mapped[p_idx]
            j = _minimal_j(r, c, C, rho_f)
            if j > ell:
                raise InternalConsistencyError(
                    f"scale law broke: j={j} > ell={ell} at r={r}"
                )
            if int(part.owners[n][p_idx]) != q_pos:
                raise InternalConsistencyError(
                    "sampled point escaped the chosen cylinder's cube"
                )
            cyl_pos = int(part.owners[n + j][p_idx])
            cyl_packed = int(pos_maps[n + j][cyl_pos])
            if cyl_packed // tree.M**j != q_packed:
                raise InternalConsistencyError(
                    "owner cube is not a descendant of the chosen cylinder"
                )
            mu_q = Fraction(
                branch_count(tree, unpack_code(cyl_packed, n + j, tree.M), k), total
            )
            if float(mu_q) < rho_f ** (t_exp * j) * (1 - 1e-12):
                raise InternalConsistencyError(
                    f"cylinder mass {mu_q} below rho^(t j) at j={j}"
                )
            if lam * C * rho_f ** (n + j) > r / 2 * (1 + 1e-9):
                raise InternalConsistencyError(
                    "magnified cube does not fit in half the sampled ball"
                )
            mass = nu.ball_mass(x, float(r))
            if mass < mu_q and nu.ball_mass(x, float(r) * (1 + 1e-9)) < mu_q:
                raise InternalConsistencyError(
                    "ball mass fell below the contained cylinder's mass"
                )
            sample_triples.append((float(r), float(mass), float(r**t_exp * fro_const)))
    starved = not sample_triples

    worst = None
    samples_ok = True
    for r, mass, thr in sample_triples:
        ratio = mass / thr if thr > 0 else float("inf")
        samples_ok &= mass >= thr
        worst = ratio if worst is None else min(worst, ratio)

    # packing sweep on the magnified window
    F_cloud = PointCloud(points=mapped[inside], delta=lam * cloud.delta)
    pack_bound = (8.0 * C / (c * rho_f)) ** beta
    if packing_deltas is None:
        packing_deltas = []
        dlt = 0.25
        while dlt >= 2 * F_cloud.delta and len(packing_deltas) < 8:
            packing_deltas.append(dlt)
            dlt /= 2.0
    packing = tuple(
        greedy_packing_sum(F_cloud, beta, dlt, upper_bound=pack_bound)
        for dlt in packing_deltas
    )
    packing_ok = all(p.lower_sum <= pack_bound * 1.1 + 1e-12 for p in packing)

    return TangentBlock(
        ell=ell,
        t=t_exp,
        status="scale_starved" if starved else "verified",
        message="" if not starved else (
            f"no resolvable radii: the scale law needs r >= {r_lo:.6g}"
        ),
        n=n,
        m=m,
        k=k,
        code=res.code,
        frostman_constant=fro_const,
        r_range=(r_lo, 1.0),
        samples=tuple(sample_triples),
        worst_ratio=worst,
        samples_ok=samples_ok,
        mass_law_cylinders=mass_law_cylinders,
        support_radius=support_radius,
        support_bound=support_bound,
        support_ok=support_ok,
        packing=packing,
        packing_bound=pack_bound,
        packing_ok=packing_ok,
    )


def tangent_pipeline(
    cloud: PointCloud,
    ell_schedule: Sequence[int] = (1, 2, 3, 4),
    beta: Union[str, float] = "auto",
    *,
    rho: RhoLike = DEFAULT_RHO,
    k_max: Optional[int] = None,
    c_target: float = DEFAULT_C_TARGET,
    C_target: float = DEFAULT_C_OUTER_TARGET,
    samples: int = 100,
    seed: int = 0,
    packing_deltas: Optional[Sequence[float]] = None,
    jobs: int = 1,
) -> TangentReport:
    """Verify the tangent-measure Frostman bound on magnified cloud windows.

    For each ell in the schedule: picks a good cylinder at exponent
    t = beta + 1/ell, builds the uniform measure on its deepest centre set,
    magnifies by the homothety normalizing the cylinder's inner ball, and
    checks nu(B(x, r)) >= r^t (c rho / 4C)^t on seeded samples at the scales
    the j <= ell law resolves.  Constants c, C are the partition's measured
    values (target fallbacks only where a degenerate cloud makes the
    measured value infinite or zero).  A greedy packing sweep on each
    magnified window cross-checks the (8C/(c rho))^beta packing bound.

    Witness failures and scale starvation do not abort the run; the report
    carries the per-ell gap explicitly.
    """
    ells = [int(e) for e in ell_schedule]
    if not ells or min(ells) < 1:
        raise PreconditionError("ell schedule must be positive integers")
    rho = Fraction(rho)
    if k_max is None:
        cap = _resolution_cap(rho, cloud.delta)
        k_max = min(cap, max(2 * max(ells), 4))
    if k_max < 4:
        raise PreconditionError(
            f"cloud resolution admits only k_max={k_max} < 4 partition levels"
        )
    part = build_partition(
        cloud, rho=rho, k_max=k_max, c_target=c_target, C_target=C_target
    )
    tree = partition_to_tree(part)
    pos_maps = _position_maps(tree)

    c_eff = part.c_meas if isfinite(part.c_meas) else part.c_target
    C_eff = part.C_meas if part.C_meas > 0 else c_eff
    C_eff = max(C_eff, c_eff)  # keep c <= C so the bound base exceeds 1

    gap = min(4, tree.depth // 2)
    if beta == "auto":
        beta_val = lower_dim_estimate(tree, gap).value
        beta_source = f"auto: tree lower-dim estimate at gap {gap}"
    else:
        beta_val = float(beta)
        beta_source = "given"

    def run(ell: int) -> TangentBlock:
        return _run_block(
            cloud, part, tree, pos_maps, ell, beta_val, c_eff, C_eff,
            samples, seed, packing_deltas,
        )

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = tuple(pool.map(run, ells))  # merged in schedule order
    else:
        blocks = tuple(run(ell) for ell in ells)

    base_nominal = frostman_base(Fraction(1, 6), Fraction(4, 3), Fraction(1, 4))
    symbolic = {
        "nominal_constants": {"c": "1/6", "C": "4/3", "rho": "1/4"},
        "base": str(base_nominal),
        "bound": f"{base_nominal}^beta",
        "majorant": "257^beta",
        "holds": base_nominal <= 257,
    }
    return TangentReport(
        beta=beta_val,
        beta_source=beta_source,
        rho=rho,
        k_max=k_max,
        c=c_eff,
        C=C_eff,
        c_raw=part.c_meas,
        C_raw=part.C_meas,
        M_meas=part.M_meas,
        blocks=blocks,
        symbolic=symbolic,
    )
