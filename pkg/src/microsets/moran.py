"""Uniformly branching Moran constructions on the unit cube.

A 0/1 sequence drives a nested family of axis-parallel cubes: starting
from [0,1]^d, every level-n cube of side rho^n splits into all 2^d
corner-anchored children of side rho^(n+1) when the n-th bit is 1, and
keeps only the child at the lower corner when the bit is 0.  The
attractor contains the lower corner of every surviving cube, which is
what makes covering counts against corner points exactly computable.

Two tree representations cooperate here:

* ``UniformCubeTree`` never materialises nodes.  Level sizes are big
  integers, subtrees at a cube are just bit-shifts of the driving
  sequence, and leaf sampling draws digits independently at branching
  levels.  This is the only way to reach depths in the thousands.
* ``CubeTree`` is an explicit packed-code tree (see ``symtree``) with
  cube geometry attached; it exists for small depths, validation and
  interop with trees read from JSON.

The covering check walks a per-axis offset automaton instead of
enumerating cubes: the normalised corner offset between a candidate
cube and the reference point is an integer in {-1, 0, +1} for rho = 1/2
(a short float orbit for general rho), so the number of level-n cubes
meeting a tripled cube around a point is a product of per-axis state
counts.  That is what keeps the 9^d bound checkable at depth 2000+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    InfeasibleTarget,
    InsufficientDepth,
    InternalConsistencyError,
    PreconditionError,
)
from .seqgen import BranchingSeq, window_schedule, window_sup_mean
from .symtree import SymbolTree, pack_code
from .symtree import subtree as symtree_subtree

RhoLike = Union[Fraction, float, str, int]

__all__ = [
    "MoranSpec",
    "UniformCubeTree",
    "CubeTree",
    "uniform_view",
    "build_moran",
    "subtree_explicit",
    "random_code",
    "dyadic_microset_prefix",
    "AssouadFormula",
    "assouad_from_formula",
    "DyadicEstimate",
    "assouad_dyadic_estimator",
    "Calibration",
    "calibrate_rho",
    "CoveringReport",
    "check_small_microset",
    "hausdorff_distance",
]


def _as_rho(rho: RhoLike) -> Fraction:
    r = Fraction(rho)
    if not (0 < r <= Fraction(1, 2)):
        raise PreconditionError(f"contraction ratio must lie in (0, 1/2], got {rho}")
    return r


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise PreconditionError("bit sequence must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise PreconditionError("bit sequence entries must be 0 or 1")
    return arr


@dataclass(frozen=True)
class MoranSpec:
    """Parameters that determine a uniformly branching Moran set.

    ``keep_rule`` names the canonical child kept at non-branching levels;
    only the smallest-code (lower corner) child is supported, which pins
    the construction down so runs are reproducible.
    """

    d: int
    rho: Fraction
    seq: BranchingSeq
    keep_rule: str = "smallest_code"

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError(f"ambient dimension must be >= 1, got {self.d}")
        if self.keep_rule != "smallest_code":
            raise PreconditionError(
                f"unsupported keep rule {self.keep_rule!r}; only 'smallest_code'")
        object.__setattr__(self, "rho", _as_rho(self.rho))

    @property
    def branch_factor(self) -> int:
        return 2 ** self.d


class UniformCubeTree:
    """Implicit cube tree driven by a 0/1 sequence.

    ``bits[i]`` (0-based) says whether level i+1 branches into all 2^d
    children (1) or keeps only the lower-corner child (0).  No node set
    is ever stored; everything is derived from the bits.

    ``origin_code``/``origin_level`` record where this tree sits inside
    a larger construction when it was produced by magnification.
    """

    def __init__(self, d: int, rho: RhoLike, bits, depth: Optional[int] = None,
                 origin_code: tuple = (), origin_level: int = 0):
        if d < 1:
            raise PreconditionError(f"ambient dimension must be >= 1, got {d}")
        self.d = int(d)
        self.rho = _as_rho(rho)
        self.bits = _as_bits(bits)
        self.depth = self.bits.size if depth is None else int(depth)
        if not (0 <= self.depth <= self.bits.size):
            raise PreconditionError(
                f"depth {depth} exceeds available bits ({self.bits.size})")
        self.origin_code = tuple(int(c) for c in origin_code)
        self.origin_level = int(origin_level)

    @property
    def M(self) -> int:
        return 2 ** self.d

    def branches_at(self, n: int) -> bool:
        """Whether level n (1-based) multiplies its parent's children."""
        if not (1 <= n <= self.bits.size):
            raise InsufficientDepth(f"level {n} outside stored bits (1..{self.bits.size})")
        return bool(self.bits[n - 1])

    def level_count(self, n: int) -> int:
        """Exact number of level-n cubes (big integer)."""
        if not (0 <= n <= self.bits.size):
            raise InsufficientDepth(f"level {n} outside stored bits (0..{self.bits.size})")
        return 2 ** (self.d * int(self.bits[:n].sum()))

    def side(self, n: int) -> Fraction:
        return self.rho ** n

    def magnification(self) -> Fraction:
        """Scale factor of the homothety that produced this subtree view."""
        return (1 / self.rho) ** self.origin_level

    # -- geometry ---------------------------------------------------------

    def digit_offsets(self, digit: int) -> tuple:
        """Per-axis 0/1 corner offsets encoded by a child digit in 1..2^d."""
        if not (1 <= digit <= self.M):
            raise PreconditionError(f"digit {digit} outside 1..{self.M}")
        return tuple((digit - 1) >> a & 1 for a in range(self.d))

    def corner(self, code: Sequence[int]) -> tuple:
        """Exact lower corner of the cube addressed by a digit string."""
        self._validate_code(code)
        step = 1 - self.rho
        out = [Fraction(0)] * self.d
        scale = Fraction(1)
        for c in code:
            offs = self.digit_offsets(int(c))
            for a in range(self.d):
                if offs[a]:
                    out[a] += scale * step
            scale *= self.rho
        return tuple(out)

    def _validate_code(self, code: Sequence[int]) -> None:
        if len(code) > self.depth:
            raise InsufficientDepth(
                f"code length {len(code)} exceeds tree depth {self.depth}")
        for i, c in enumerate(code, start=1):
            c = int(c)
            if not (1 <= c <= self.M):
                raise PreconditionError(f"digit {c} at level {i} outside 1..{self.M}")
            if not self.bits[i - 1] and c != 1:
                raise PreconditionError(
                    f"level {i} does not branch; only the corner child (digit 1) exists")

    # -- enumeration / sampling -------------------------------------------

    def materialize(self, depth: Optional[int] = None, max_nodes: int = 2_000_000):
        """Explicit ``CubeTree`` of this construction down to ``depth``."""
        depth = self.depth if depth is None else int(depth)
        if depth > self.depth:
            raise InsufficientDepth(f"requested depth {depth} > available {self.depth}")
        total = sum(self.level_count(n) for n in range(depth + 1))
        if total > max_nodes:
            raise PreconditionError(
                f"materializing needs {total} nodes > cap {max_nodes}")
        levels = [np.zeros(1, dtype=np.int64)]
        for n in range(1, depth + 1):
            prev = levels[-1]
            if self.bits[n - 1]:
                nxt = (prev[:, None] * self.M + np.arange(self.M, dtype=np.int64)).ravel()
            else:
                nxt = prev * self.M
            levels.append(nxt)
        return CubeTree(M=self.M, rho=self.rho, levels=levels, d=self.d)

    def leaf_digit_samples(self, depth: int, samples: int, seed=None):
        """Digit matrices for leaves at ``depth``: (count, depth, d) 0/1 offsets.

        Enumerates every leaf exactly when there are at most ``samples``
        of them, otherwise draws uniformly (branching digits i.i.d.).
        Returns (matrix, exhaustive_flag).
        """
        if depth > self.depth:
            raise InsufficientDepth(f"depth {depth} > available {self.depth}")
        branch_idx = np.flatnonzero(self.bits[:depth]).astype(np.int64)
        nbits = self.d * branch_idx.size
        out_of = self.level_count(depth)
        if out_of <= samples:
            ids = np.arange(out_of, dtype=np.int64)
            exhaustive = True
        else:
            rng = np.random.default_rng(seed)
            ids = None
            exhaustive = False
        mat = np.zeros((int(out_of) if exhaustive else samples, depth, self.d),
                       dtype=np.uint8)
        if nbits == 0:
            return mat, exhaustive
        if exhaustive:
            # bit t of the leaf id = axis a offset at the t//d-th branching level
            for t in range(nbits):
                lvl = branch_idx[t // self.d]
                axis = t % self.d
                mat[:, lvl, axis] = (ids >> t) & 1
        else:
            draws = rng.integers(0, 2, size=(samples, branch_idx.size, self.d),
                                 dtype=np.uint8)
            mat[:, branch_idx, :] = draws
        return mat, exhaustive

    def to_json_dict(self) -> dict:
        return {
            "kind": "uniform_cube_tree",
            "d": self.d,
            "rho": str(self.rho),
            "depth": self.depth,
            "bits": self.bits.tolist(),
            "origin_level": self.origin_level,
            "origin_code": list(self.origin_code),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "UniformCubeTree":
        return cls(
            d=int(payload["d"]),
            rho=Fraction(payload["rho"]),
            bits=payload["bits"],
            depth=payload.get("depth"),
            origin_code=tuple(payload.get("origin_code", ())),
            origin_level=int(payload.get("origin_level", 0)),
        )


@dataclass
class CubeTree(SymbolTree):
    """Explicit symbolic tree whose digits carry cube geometry in [0,1]^d."""

    d: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError(f"ambient dimension must be >= 1, got {self.d}")
        if self.M != 2 ** self.d:
            raise PreconditionError(
                f"cube tree needs M = 2^d = {2 ** self.d}, got M = {self.M}")
        super().__post_init__()

    def digit_offsets(self, digit: int) -> tuple:
        if not (1 <= digit <= self.M):
            raise PreconditionError(f"digit {digit} outside 1..{self.M}")
        return tuple((digit - 1) >> a & 1 for a in range(self.d))

    def corner(self, code: Sequence[int]) -> tuple:
        """Exact lower corner of the cube addressed by a digit string."""
        rho = Fraction(self.rho)
        step = 1 - rho
        out = [Fraction(0)] * self.d
        scale = Fraction(1)
        for c in code:
            offs = self.digit_offsets(int(c))
            for a in range(self.d):
                if offs[a]:
                    out[a] += scale * step
            scale *= rho
        return tuple(out)

    def level_corners(self, n: int) -> list:
        """Exact lower corners of every level-n cube, in code order."""
        from .symtree import unpack_code

        return [self.corner(unpack_code(int(p), n, self.M)) for p in self.levels[n]]

    def to_json_dict(self) -> dict:
        payload = super().to_json_dict()
        payload["kind"] = "cube_tree"
        payload["d"] = self.d
        payload["geometry"] = {"anchor": "lower_corner", "rho": str(Fraction(self.rho))}
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CubeTree":
        base = SymbolTree.from_json_dict(payload)
        return cls(M=base.M, rho=base.rho, levels=base.levels, labels=base.labels,
                   d=int(payload["d"]))


def uniform_view(tree: CubeTree) -> UniformCubeTree:
    """Recover the driving bit sequence from an explicit uniformly branching tree.

    Requires every level to either keep exactly the corner child of each
    parent or branch fully; anything else is not a uniformly branching
    construction and raises ``PreconditionError``.
    """
    bits = np.zeros(tree.depth, dtype=np.uint8)
    for n in range(1, tree.depth + 1):
        prev, cur = tree.levels[n - 1], tree.levels[n]
        if cur.size == prev.size * tree.M:
            full = (prev[:, None] * tree.M
                    + np.arange(tree.M, dtype=np.int64)).ravel()
            if not np.array_equal(cur, full):
                raise PreconditionError(f"level {n} is not a full branching level")
            bits[n - 1] = 1
        elif cur.size == prev.size:
            if not np.array_equal(cur, prev * tree.M):
                raise PreconditionError(
                    f"level {n} keeps a child other than the corner child")
        else:
            raise PreconditionError(
                f"level {n} has {cur.size} nodes under {prev.size} parents; "
                f"not uniformly branching")
    return UniformCubeTree(tree.d, Fraction(tree.rho), bits)


def build_moran(spec: MoranSpec, depth: Optional[int] = None) -> UniformCubeTree:
    """Implicit cube tree for a Moran spec, using the spec's full sequence."""
    bits = spec.seq.bits
    depth = bits.size if depth is None else int(depth)
    if depth > bits.size:
        raise InsufficientDepth(
            f"requested depth {depth} exceeds sequence length {bits.size}")
    return UniformCubeTree(spec.d, spec.rho, bits, depth=depth)


def dyadic_microset_prefix(tree, code: Sequence[int], depth: Optional[int] = None):
    """Magnified view of the construction inside the cube addressed by ``code``.

    The subtree below a level-j cube is again uniformly branching, driven
    by the original bits shifted left by j.  The returned tree records the
    source cube so the homothety (scale rho^-j, translating the cube onto
    the unit cube) can be reconstructed.  Accepts implicit or explicit
    trees and returns the same kind.
    """
    if isinstance(tree, CubeTree):
        sub = subtree_explicit(tree, code)
        if depth is not None:
            if depth > sub.depth:
                raise InsufficientDepth(
                    f"requested microset depth {depth} exceeds remaining {sub.depth}")
            sub = CubeTree(M=sub.M, rho=sub.rho, levels=sub.levels[:depth + 1],
                           labels=None if sub.labels is None else sub.labels[:depth + 1],
                           d=sub.d)
        return sub
    tree._validate_code(code)
    j = len(code)
    bits = tree.bits[j:]
    if depth is not None and depth > bits.size:
        raise InsufficientDepth(
            f"requested microset depth {depth} exceeds remaining bits {bits.size}")
    return UniformCubeTree(
        tree.d, tree.rho, bits,
        depth=bits.size if depth is None else depth,
        origin_code=tuple(tree.origin_code) + tuple(int(c) for c in code),
        origin_level=tree.origin_level + j,
    )


def subtree_explicit(tree: CubeTree, code: Sequence[int]) -> CubeTree:
    """Explicit-tree magnification preserving cube geometry."""
    base = symtree_subtree(tree, code)
    return CubeTree(M=base.M, rho=base.rho, levels=base.levels,
                    labels=base.labels, d=tree.d)


def random_code(tree: UniformCubeTree, level: int, rng) -> tuple:
    """Uniform random valid digit string of the given length.

    Branching levels draw a digit in 1..2^d; keep levels are pinned to the
    corner child.
    """
    if level > tree.depth:
        raise InsufficientDepth(f"level {level} > tree depth {tree.depth}")
    return tuple(
        int(rng.integers(1, tree.M + 1)) if tree.bits[i] else 1
        for i in range(level)
    )


# -- dimension formulas ----------------------------------------------------


@dataclass(frozen=True)
class AssouadFormula:
    """Closed-form dimension value plus its finite-depth profile."""

    value: float
    sup_mean: Fraction
    n_max: int
    profile: tuple  # ((n, value_at_n), ...)


def _profile_points(n_max: int, cap: int = 200) -> np.ndarray:
    if n_max <= cap:
        return np.arange(1, n_max + 1)
    pts = np.unique(np.geomspace(1, n_max, cap).astype(np.int64))
    if pts[-1] != n_max:
        pts = np.append(pts, n_max)
    return pts


def assouad_from_formula(seq: BranchingSeq, rho: RhoLike, d: int,
                         n_max: int) -> AssouadFormula:
    """Dimension of the Moran set via the window sup-mean of the sequence.

    Evaluates d * log(2) / log(1/rho) times the largest window mean of the
    bits over windows of width n_max, together with the same quantity at
    smaller widths for convergence plots.
    """
    if d < 1:
        raise PreconditionError(f"ambient dimension must be >= 1, got {d}")
    rho = _as_rho(rho)
    if not (1 <= n_max <= len(seq)):
        raise InsufficientDepth(f"n_max must lie in 1..{len(seq)}, got {n_max}")
    scale = d * math.log(2) / math.log(1 / rho)
    sup = window_sup_mean(seq, n_max)
    prof = tuple(
        (int(n), scale * float(window_sup_mean(seq, int(n))))
        for n in _profile_points(n_max)
    )
    return AssouadFormula(value=scale * float(sup), sup_mean=sup,
                          n_max=n_max, profile=prof)


@dataclass(frozen=True)
class DyadicEstimate:
    """Empirical dimension estimate from branch counts across level gaps."""

    value: float
    min_gap: int
    best_gap: int
    profile: tuple  # ((gap, estimate_at_gap), ...)


def assouad_dyadic_estimator(tree: UniformCubeTree, min_gap: int = 100) -> DyadicEstimate:
    """Estimate the dimension from maximal branch counts over deep windows.

    For each gap g >= min_gap the largest number of level-(k+g) descendants
    of a level-k cube is 2^(d * W) with W the largest bit sum over a width-g
    window; the estimate at gap g is d*log2*W/(g*log(1/rho)).  Short gaps
    are excluded because a single branching level already saturates them
    (a width-1 window of mean 1 would report the ambient dimension).
    """
    if min_gap < 1:
        raise PreconditionError(f"min_gap must be >= 1, got {min_gap}")
    depth = tree.depth
    if depth < min_gap:
        raise InsufficientDepth(
            f"tree depth {depth} is below the minimum window {min_gap}")
    bits = tree.bits[:depth].astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(bits)))
    scale = tree.d * math.log(2) / math.log(1 / tree.rho)
    gaps = np.arange(min_gap, depth + 1)
    best_w = np.empty(gaps.size, dtype=np.int64)
    for i, g in enumerate(gaps):
        best_w[i] = int(np.max(csum[g:] - csum[:-g]))
    est = scale * best_w / gaps
    k = int(np.argmax(est))
    pts = _profile_points(gaps.size)
    prof = tuple((int(gaps[p - 1]), float(est[p - 1])) for p in pts)
    return DyadicEstimate(value=float(est[k]), min_gap=min_gap,
                          best_gap=int(gaps[k]), profile=prof)


@dataclass(frozen=True)
class Calibration:
    """Contraction ratio hitting a dimension target, with the value reached."""

    rho: float
    achieved: float
    target: float
    sup_mean: Fraction
    max_dimension: float  # value at rho = 1/2, the feasibility ceiling


def calibrate_rho(seq: BranchingSeq, d: int, alpha: float,
                  n_max: Optional[int] = None, tol: float = 1e-12) -> Calibration:
    """Bisect for the contraction ratio whose dimension formula equals alpha.

    The formula value d*log2*L/log(1/rho) increases from 0 to d*L as rho
    goes from 0 to 1/2, so a target above d*L is infeasible for this
    sequence and raises ``InfeasibleTarget``.
    """
    if d < 1:
        raise PreconditionError(f"ambient dimension must be >= 1, got {d}")
    if not (0 < alpha):
        raise PreconditionError(f"dimension target must be positive, got {alpha}")
    n_max = len(seq) if n_max is None else int(n_max)
    sup = window_sup_mean(seq, n_max)
    ceiling = d * float(sup)
    if alpha > ceiling + 1e-15:
        raise InfeasibleTarget(
            f"target {alpha} exceeds d * sup-mean = {ceiling}; largest reachable "
            f"dimension at rho = 1/2 for this sequence")
    coeff = d * math.log(2) * float(sup)

    def value(r: float) -> float:
        return coeff / math.log(1 / r)

    lo, hi = 1e-300, 0.5
    if value(hi) <= alpha:
        lo = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if value(mid) < alpha:
            lo = mid
        else:
            hi = mid
    rho = hi  # upper end: value(rho) >= alpha up to rounding
    achieved = value(rho)
    if abs(achieved - alpha) > tol:
        raise InternalConsistencyError(
            f"bisection stalled: |{achieved} - {alpha}| > tol {tol}")
    return Calibration(rho=rho, achieved=achieved, target=float(alpha),
                       sup_mean=sup, max_dimension=ceiling)


# -- covering check --------------------------------------------------------

# Exact offset automaton for rho = 1/2.  States are subsets of {-1, 0, +1}
# encoded as 3-bit masks (bit 0: delta = -1, bit 1: delta = 0, bit 2: +1).
# One descent step maps delta to 2*delta + (f - g) with f the candidate's
# axis bit and g the reference leaf's axis bit; f ranges over {0,1} at a
# branching level and is pinned to 0 at a keep level.  Any state leaving
# {-1,0,+1} can never return (|2*delta + e| >= 3 for |delta| >= 2), and the
# final acceptance window after the zero run is again {-1,0,+1}, so pruning
# to three states is exact.


def _build_halving_lut() -> np.ndarray:
    lut = np.zeros((2, 2, 8), dtype=np.uint8)
    deltas = (-1, 0, 1)
    for branch in (0, 1):
        for g in (0, 1):
            for state in range(8):
                nxt = 0
                for bit, delta in enumerate(deltas):
                    if not state >> bit & 1:
                        continue
                    for f in ((0, 1) if branch else (0,)):
                        nd = 2 * delta + (f - g)
                        if -1 <= nd <= 1:
                            nxt |= 1 << (nd + 1)
                lut[branch, g, state] = nxt
    return lut


_HALVING_LUT = _build_halving_lut()
_POPCOUNT3 = np.array([bin(s).count("1") for s in range(8)], dtype=np.int64)


def _axis_counts_halving(bits: np.ndarray, digits: np.ndarray) -> np.ndarray:
    """Per-sample surviving-offset counts for rho = 1/2 on one axis.

    ``digits`` has shape (samples, levels) with the reference leaf's axis
    bits; levels where ``bits`` is 0 must carry digit 0.
    """
    state = np.full(digits.shape[0], 0b010, dtype=np.uint8)
    for i in range(bits.size):
        state = _HALVING_LUT[int(bits[i]), digits[:, i], state]
    return _POPCOUNT3[state]


_SLOTS = 6  # distinct offsets are >= 1 apart inside |delta| <= 1 + rho, so 4 fit; 6 is headroom


def _axis_counts_general(bits: np.ndarray, digits: np.ndarray, rho: float,
                         m: int) -> np.ndarray:
    """Float-orbit version of the offset automaton for general rho.

    Tracks every normalised offset with |delta| <= 1 + rho (all ancestors
    of final survivors satisfy this) in a fixed number of slots; the final
    window after the m-step zero run is [-1 - rho^m, 1].
    """
    eps = 1e-9
    samples = digits.shape[0]
    state = np.full((samples, _SLOTS), np.inf)
    state[:, 0] = 0.0
    prune = 1.0 + rho + eps
    for i in range(bits.size):
        g = digits[:, i].astype(np.float64)
        if bits[i]:
            cand = np.empty((samples, 2 * _SLOTS))
            cand[:, :_SLOTS] = (state + (0.0 - g)[:, None] * (1.0 - rho)) / rho
            cand[:, _SLOTS:] = (state + (1.0 - g)[:, None] * (1.0 - rho)) / rho
        else:
            cand = (state + (0.0 - g)[:, None] * (1.0 - rho)) / rho
        cand[np.abs(cand) > prune] = np.inf
        cand = np.sort(cand, axis=1)
        if cand.shape[1] > _SLOTS:
            if not np.isinf(cand[:, _SLOTS:]).all():
                raise InternalConsistencyError(
                    "offset automaton overflowed its slot capacity")
            cand = cand[:, :_SLOTS]
        state = cand
    lo, hi = -1.0 - rho ** m - eps, 1.0 + eps
    return ((state >= lo) & (state <= hi)).sum(axis=1)


@dataclass(frozen=True)
class CoveringReport:
    """Outcome of the small-microset covering check."""

    max_count: int
    bound: int
    m: int
    window_len: int          # N_m + m - 1, the run-complete window
    zero_run_start: int      # 1-based level after which the run begins
    check_depth: int         # levels consumed: zero_run_start + m
    samples_used: int
    exhaustive: bool
    counts_histogram: tuple  # ((count, frequency), ...)

    @property
    def ok(self) -> bool:
        return self.max_count <= self.bound


def check_small_microset(spec: MoranSpec, microset: UniformCubeTree, m: int,
                         samples: int = 10_000, seed=None) -> CoveringReport:
    """Verify the covering bound 9^d for a magnified view of the Moran set.

    Locates the guaranteed run of m consecutive keep-levels inside the
    first N_m + m - 1 levels of the microset (the run-complete window of
    the driving sequence), then counts, for reference points at the lower
    corners of cubes at the run-end depth, how many same-depth cubes meet
    the axis-aligned neighbourhood of one run-start side length around
    the point.  The count must not exceed 9^d no matter where the view
    was taken.

    Reference points are all such corners when there are at most
    ``samples`` of them, otherwise a seeded uniform draw.
    """
    if m < 1:
        raise PreconditionError(f"run length m must be >= 1, got {m}")
    if isinstance(microset, CubeTree):
        microset = uniform_view(microset)
    if microset.d != spec.d or Fraction(microset.rho) != Fraction(spec.rho):
        raise PreconditionError("microset geometry does not match the spec")
    n_window = window_schedule(spec.seq.gamma, m) + m - 1
    bits = microset.bits
    if bits.size < n_window:
        raise InsufficientDepth(
            f"covering check at m={m} needs {n_window} levels below the view; "
            f"only {bits.size} available")
    run_start = -1
    for s in range(n_window - m + 1):
        if not bits[s:s + m].any():
            run_start = s
            break
    if run_start < 0:
        raise PreconditionError(
            f"no run of {m} keep-levels inside the first {n_window} levels; "
            f"the driving sequence does not satisfy the window guarantee")
    check_depth = run_start + m

    digit_mat, exhaustive = microset.leaf_digit_samples(check_depth, samples, seed)
    n_samples = digit_mat.shape[0]
    counts = np.ones(n_samples, dtype=np.int64)
    rho_f = float(microset.rho)
    exact_half = Fraction(microset.rho) == Fraction(1, 2)
    head_bits = bits[:run_start]
    for axis in range(microset.d):
        digits = digit_mat[:, :run_start, axis]
        if exact_half:
            axis_counts = _axis_counts_halving(head_bits, digits)
        else:
            axis_counts = _axis_counts_general(head_bits, digits, rho_f, m)
        counts *= axis_counts

    values, freq = np.unique(counts, return_counts=True)
    return CoveringReport(
        max_count=int(counts.max()),
        bound=9 ** microset.d,
        m=m,
        window_len=n_window,
        zero_run_start=run_start + 1,
        check_depth=check_depth,
        samples_used=n_samples,
        exhaustive=exhaustive,
        counts_histogram=tuple((int(v), int(f)) for v, f in zip(values, freq)),
    )


# -- distances -------------------------------------------------------------


def hausdorff_distance(a: CubeTree, b: CubeTree, n: int,
                       max_pairs: int = 4_000_000) -> float:
    """Hausdorff distance between the level-n cube unions of two trees.

    Works on cube centres: for congruent axis-parallel cubes the distance
    between two cubes equals the distance between their centres, and both
    trees use the same side rho^n at level n, so the centre-set Hausdorff
    distance equals the cube-union Hausdorff distance computed with
    single nearest cubes.  Exact rational arithmetic throughout, rounded
    only on return.
    """
    if a.d != b.d or Fraction(a.rho) != Fraction(b.rho):
        raise PreconditionError("trees must share ambient dimension and ratio")
    if n > a.depth or n > b.depth:
        raise InsufficientDepth(f"both trees must reach level {n}")
    ca = a.level_corners(n)
    cb = b.level_corners(n)
    if len(ca) * len(cb) > max_pairs:
        raise PreconditionError(
            f"{len(ca)} x {len(cb)} centre pairs exceed cap {max_pairs}")

    def directed(src, dst):
        worst = Fraction(0)
        for p in src:
            best = None
            for q in dst:
                d2 = sum((pi - qi) ** 2 for pi, qi in zip(p, q))
                if best is None or d2 < best:
                    best = d2
            if best > worst:
                worst = best
        return worst

    # centre = corner + side/2 on every axis; the shift cancels in
    # differences, so corners stand in for centres here
    return math.sqrt(float(max(directed(ca, cb), directed(cb, ca))))
