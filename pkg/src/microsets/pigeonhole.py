"""Cylinder selection with large relative branching.

Fix a reference depth k and exponents 0 < s < t.  If the whole tree has at
most rho^{-k s} nodes at level k, some cylinder Q at a level n <= k - ell
keeps, for every descendant cylinder Q' at relative level j <= ell, at least
a rho^{t j} share of Q's level-k descendants.  The search tests the current
root, and on failure descends into a violating cylinder; each step shrinks
the available level-k count by a factor rho^{t j}, and since counts cannot
drop below 1 the descent must stop by level k - ell (this is where the
depth bound k >= ell*t/(t - s) enters).

Parameter ordering note: an alternative rendering of the same statement
swaps the exponents ("0 < t < s" with k >= ell*t/(s - t)).  Only the
ordering s < t makes the descent's count argument terminate and matches the
midpoint construction in ``good_cylinder``, so that is what this module
implements; both readings are recorded in result metadata.

``good_cylinder`` upgrades the search: given only a target exponent t above
the tree's lower-dimension estimate, it finds a cylinder with the ratio
property *and* positive level (n >= ell, k >= n + ell).  The exponent s is
the midpoint between the estimate and t; a witness cylinder P_0 with
anomalously few descendants seeds the search, which then runs on the
subtree rooted ell levels below P_0.  Shallow trees that cannot exhibit a
witness are handled by a documented exhaustive fallback scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .errors import (
    InternalConsistencyError,
    PreconditionError,
    WitnessNotFound,
)
from .symtree import (
    SymbolTree,
    branch_count,
    lower_dim_estimate,
    subtree,
    unpack_code,
)

ORDERING_IMPLEMENTED = "0 < s < t with k >= ell*t/(t-s)"
ORDERING_REJECTED = "0 < t < s with k >= ell*t/(s-t) (descent does not terminate)"


@dataclass(frozen=True)
class PigeonholeResult:
    """A cylinder whose near descendants all keep a rho^{t j} share.

    ratio_profile[j] is the minimum over cylinders Q' at relative level j of
    #(Q' cap T^Q_{k-n}) / #T^Q_{k-n}, for j = 0..ell.  The search guarantees
    ratio_profile[j] >= rho^{t j}; ``verify_antifrostman`` rechecks that from
    scratch.
    """

    n: int
    code: tuple
    k: int
    s: float
    t: float
    ell: int
    ratio_profile: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 <= self.n <= self.k - self.ell):
            raise ValueError(f"need 0 <= n <= k - ell, got n={self.n}, k={self.k}, ell={self.ell}")
        if len(self.code) != self.n:
            raise ValueError("code length must equal the cylinder level n")
        if len(self.ratio_profile) != self.ell + 1:
            raise ValueError("ratio_profile must have ell + 1 entries")
        if self.ratio_profile[0] != 1.0:
            raise ValueError("ratio_profile[0] must be exactly 1")

    def to_json_dict(self) -> dict:
        return {
            "kind": "pigeonhole_result",
            "n": self.n,
            "code": ",".join(str(c) for c in self.code),
            "k": self.k,
            "s": self.s,
            "t": self.t,
            "ell": self.ell,
            "ratio_profile": list(self.ratio_profile),
            "metadata": _jsonable(self.metadata),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _block(t: SymbolTree, packed: int, level: int, target: int) -> tuple[int, int]:
    """Index range in t.levels[target] of the descendants of a node."""
    span = t.M ** (target - level)
    lvl = t.levels[target]
    lo = int(np.searchsorted(lvl, packed * span))
    hi = int(np.searchsorted(lvl, (packed + 1) * span))
    return lo, hi


def _counts_at(t: SymbolTree, level: int, k: int, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """Level-k descendant count for each node in t.levels[level][lo:hi]."""
    nodes = t.levels[level][lo:hi]
    span = t.M ** (k - level)
    lvl = t.levels[k]
    los = np.searchsorted(lvl, nodes * span)
    his = np.searchsorted(lvl, (nodes + 1) * span)
    return his - los


def _ratio_profile(t: SymbolTree, packed: int, n: int, k: int, ell: int) -> tuple:
    lo, hi = _block(t, packed, n, k)
    denom = hi - lo
    if denom < 1:
        raise InternalConsistencyError("cylinder has no level-k descendants")
    prof = [1.0]
    for j in range(1, ell + 1):
        blo, bhi = _block(t, packed, n, n + j)
        cnts = _counts_at(t, n + j, k, blo, bhi)
        prof.append(float(cnts.min()) / denom)
    return tuple(prof)


def reverse_furstenberg(
    t: SymbolTree, s: float, tt: float, ell: int, k: int
) -> PigeonholeResult:
    """Descend to a cylinder whose ratio profile clears rho^{t j}.

    Preconditions: 0 < s < tt, k >= ell*tt/(tt - s), #T_k <= rho^{-k s}, and
    the tree is at least k deep.  The result sits at a level n <= k - ell.

    When several cylinders fail the ratio test the descent takes the
    smallest relative level, then the lexicographically smallest code.  Each
    step asserts the count bookkeeping (the failing cylinder's share counted
    inside the parent equals its own branch count) and the geometrically
    tightened bound on the remaining level-k population.
    """
    if ell < 0 or int(ell) != ell:
        raise PreconditionError("ell must be a nonnegative integer")
    if not (0 < s < tt):
        raise PreconditionError(
            f"need 0 < s < t, got s={s}, t={tt} ({ORDERING_IMPLEMENTED})"
        )
    if ell > 0 and k < ell * tt / (tt - s) - 1e-9:
        raise PreconditionError(
            f"k={k} below the depth bound ell*t/(t-s) = {ell * tt / (tt - s):.6g}"
        )
    if not (0 <= k <= t.depth):
        raise PreconditionError(f"need 0 <= k <= tree depth {t.depth}, got k={k}")
    rho_f = float(t.rho)
    total = t.level_size(k)
    bound = rho_f ** (-k * s)
    if total > bound * (1 + 1e-12):
        raise PreconditionError(
            f"level-{k} population {total} exceeds rho^(-k s) = {bound:.6g}"
        )

    n = 0
    packed = 0
    descent: list[tuple[int, tuple]] = []
    while True:
        if n > k - ell:
            raise InternalConsistencyError(
                f"descent reached level {n} > k - ell = {k - ell}; "
                "impossible under the stated preconditions"
            )
        if len(descent) > k:
            raise InternalConsistencyError("descent exceeded k failure steps")
        lo, hi = _block(t, packed, n, k)
        denom = hi - lo
        fail = None
        for j in range(1, ell + 1):
            blo, bhi = _block(t, packed, n, n + j)
            cnts = _counts_at(t, n + j, k, blo, bhi)
            bad = np.flatnonzero(cnts < rho_f ** (tt * j) * denom)
            if bad.size:
                i = int(bad[0])  # level arrays are sorted: lex smallest code
                fail = (j, int(t.levels[n + j][blo + i]), int(cnts[i]))
                break
        if fail is None:
            profile = _ratio_profile(t, packed, n, k, ell)
            return PigeonholeResult(
                n=n,
                code=unpack_code(packed, n, t.M),
                k=k,
                s=s,
                t=tt,
                ell=ell,
                ratio_profile=profile,
                metadata={
                    "method": "reverse_furstenberg",
                    "ordering": ORDERING_IMPLEMENTED,
                    "ordering_rejected": ORDERING_REJECTED,
                    "descent": tuple(descent),
                },
            )
        j, fpacked, fcount = fail
        fcode = unpack_code(fpacked, n + j, t.M)
        # bookkeeping: the share counted inside the parent must equal the
        # failing cylinder's own branch count
        fresh = branch_count(t, fcode, k)
        if fresh != fcount:
            raise InternalConsistencyError(
                f"count bookkeeping broke at {fcode}: {fcount} != {fresh}"
            )
        bound *= rho_f ** (j * tt)
        if not fcount < bound * (1 + 1e-9):
            raise InternalConsistencyError(
                f"descent count {fcount} not below the tightened bound {bound:.6g}"
            )
        descent.append((n + j, fcode))
        n += j
        packed = fpacked


def verify_antifrostman(t: SymbolTree, result: PigeonholeResult) -> bool:
    """Recompute every ratio from scratch, independent of the search path.

    Works on the explicit subtree rooted at the result's cylinder, so none
    of the search bookkeeping is reused.  True iff every cylinder at every
    relative level j = 0..ell keeps at least a rho^{t j} share of the
    level-(k-n) population.
    """
    if result.k > t.depth or result.n + result.ell > t.depth:
        raise PreconditionError("result levels exceed the tree depth")
    sub = subtree(t, result.code)
    k_rel = result.k - result.n
    rho_f = float(t.rho)
    denom = sub.level_size(k_rel)
    for j in range(result.ell + 1):
        cnts = _counts_at(sub, j, k_rel)
        if np.any(cnts < rho_f ** (result.t * j) * denom):
            return False
    return True


def _antif_mask(t: SymbolTree, n: int, k: int, tt: float, ell: int) -> np.ndarray:
    """For every cylinder at level n: does the ratio profile clear rho^{t j}?

    Vectorized over the whole level: per relative level j, descendant counts
    are grouped by level-n ancestor (sorted packed codes make groups
    contiguous) and reduced with a group minimum.
    """
    rho_f = float(t.rho)
    size = t.level_size(n)
    denom = _counts_at(t, n, k)
    ok = np.ones(size, dtype=bool)
    for j in range(1, ell + 1):
        nodes = t.levels[n + j]
        cnts = _counts_at(t, n + j, k)
        anc_pos = np.searchsorted(t.levels[n], nodes // t.M**j)
        starts = np.r_[0, np.flatnonzero(np.diff(anc_pos)) + 1]
        if starts.size != size:
            raise InternalConsistencyError(
                f"level {n} node without level {n + j} descendants"
            )
        gmin = np.minimum.reduceat(cnts, starts)
        ok &= gmin >= rho_f ** (tt * j) * denom
    return ok


def good_cylinder(
    t: SymbolTree, tt: float, ell: int, gap: int = 2
) -> PigeonholeResult:
    """Find a cylinder at a strictly positive level with the ratio property.

    Requires tt strictly above the tree's lower-dimension estimate at the
    configured level gap.  Puts s at the midpoint, k_0 = ceil(ell*tt/(tt-s)),
    delta = rho^{(k_0+ell)s}, then scans (increasing reference level m, then
    increasing witness level n_0, then lexicographic P_0) for a witness with
    1 <= #T^{P_0}_{m-n_0} < delta * rho^{-(m-n_0)s}.  The search then runs on
    the subtree rooted ell levels below P_0 and the returned cylinder is the
    composed word, so n >= ell and k >= n + ell always hold.

    Trees too shallow for any witness (the inequality needs m - n_0 to reach
    k_0 + ell) fall back to an exhaustive scan over (n, Q, k) with
    ell <= n <= k - ell, smallest n first, then lexicographic Q, then
    smallest k; metadata records which method produced the result.  If the
    fallback finds nothing either, raises WitnessNotFound with the deepest
    scan performed.
    """
    if ell < 1:
        raise PreconditionError("ell must be a positive integer")
    est = lower_dim_estimate(t, gap).value
    if not tt > est:
        raise PreconditionError(
            f"need tt above the lower-dimension estimate {est:.6g} (gap={gap}), got {tt}"
        )
    rho_f = float(t.rho)
    s = (est + tt) / 2
    k0 = ceil(ell * tt / (tt - s))
    delta = rho_f ** ((k0 + ell) * s)

    witness = None
    for m in range(k0 + ell, t.depth + 1):
        for n0 in range(0, m - (k0 + ell) + 1):
            thr = delta * rho_f ** (-(m - n0) * s)
            if thr <= 1.0:
                continue  # counts are >= 1, no witness possible here
            cnts = _counts_at(t, n0, m)
            hit = np.flatnonzero(cnts < thr)
            if hit.size:
                witness = (m, n0, int(t.levels[n0][hit[0]]))
                break
        if witness is not None:
            break

    if witness is not None:
        m, n0, p0 = witness
        if m - n0 < k0 + ell:
            raise InternalConsistencyError(
                "witness shallower than k_0 + ell despite the count inequality"
            )
        n1 = n0 + ell
        lo, _ = _block(t, p0, n0, n1)
        p_packed = int(t.levels[n1][lo])  # lex smallest descendant ell below
        p_code = unpack_code(p_packed, n1, t.M)
        k_rel = m - n1
        cnt_p = branch_count(t, p_code, m)
        if cnt_p > rho_f ** (-k_rel * s) * (1 + 1e-9):
            raise InternalConsistencyError(
                "shifted subtree violates the tightened count bound"
            )
        inner = reverse_furstenberg(subtree(t, p_code), s, tt, ell, k_rel)
        result = PigeonholeResult(
            n=n1 + inner.n,
            code=p_code + inner.code,
            k=m,
            s=s,
            t=tt,
            ell=ell,
            ratio_profile=inner.ratio_profile,
            metadata={
                "method": "witness_descent",
                "gap": gap,
                "estimate": est,
                "k0": k0,
                "delta": delta,
                "witness": {"m": m, "n0": n0, "p0": unpack_code(p0, n0, t.M)},
                "ordering": ORDERING_IMPLEMENTED,
                "ordering_rejected": ORDERING_REJECTED,
            },
        )
    else:
        result = _direct_scan(t, tt, ell, gap, est, s, k0)

    if not (result.n >= ell and result.k >= result.n + ell):
        raise InternalConsistencyError("good cylinder landed at a forbidden level")
    if not verify_antifrostman(t, result):
        raise InternalConsistencyError("good cylinder failed independent recheck")
    return result


def _direct_scan(
    t: SymbolTree, tt: float, ell: int, gap: int, est: float, s: float, k0: int
) -> PigeonholeResult:
    """Exhaustive fallback for trees too shallow to exhibit a witness."""
    for n in range(ell, t.depth - ell + 1):
        nodes = t.levels[n]
        first_k = np.full(nodes.size, -1, dtype=np.int64)
        for k in range(n + ell, t.depth + 1):
            ok = _antif_mask(t, n, k, tt, ell)
            newly = ok & (first_k < 0)
            first_k[newly] = k
        hit = np.flatnonzero(first_k >= 0)
        if hit.size:
            i = int(hit[0])  # lex smallest cylinder, then its smallest k
            packed = int(nodes[i])
            k = int(first_k[i])
            return PigeonholeResult(
                n=n,
                code=unpack_code(packed, n, t.M),
                k=k,
                s=s,
                t=tt,
                ell=ell,
                ratio_profile=_ratio_profile(t, packed, n, k, ell),
                metadata={
                    "method": "direct_scan",
                    "gap": gap,
                    "estimate": est,
                    "k0": k0,
                    "ordering": ORDERING_IMPLEMENTED,
                    "ordering_rejected": ORDERING_REJECTED,
                },
            )
    raise WitnessNotFound(
        f"no cylinder with the rho^(t j) ratio property for t={tt}, ell={ell}: "
        f"witness scan reached depth {t.depth} (needs m - n_0 >= {k0 + ell}) and "
        f"the exhaustive scan covered every (n, Q, k) with {ell} <= n <= k - {ell} "
        f"<= {t.depth - ell}; deepen the tree"
    )
