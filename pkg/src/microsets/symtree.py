"""Symbolic trees over a finite alphabet with scale rho per level.

A tree is stored as one sorted int64 array per level; a node with digits
(c_1, ..., c_n), c_i in 1..M, packs to sum (c_i - 1) * M^(n-i).  Packing makes
the two hot operations cheap: descendants of a node occupy a contiguous packed
range, so branch counts are two binary searches, and subtree extraction is a
range slice minus an offset.

Digits are 1-based everywhere in the public API; the root is the empty tuple.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import log
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SymbolTree",
    "LowerDimEstimate",
    "subtree",
    "branch_count",
    "lower_dim_estimate",
]

# int64 packing limit: M^depth must stay below 2^62
_PACK_BITS = 62


def _check_packable(m_alpha: int, depth: int) -> None:
    if depth * log(m_alpha, 2) > _PACK_BITS:
        raise ValueError(
            f"explicit tree with M={m_alpha} and depth={depth} exceeds the "
            "packed-code range; keep such trees in their implicit form"
        )


def pack_code(code: Sequence[int], m_alpha: int) -> int:
    p = 0
    for c in code:
        if not (1 <= c <= m_alpha):
            raise ValueError(f"digit {c} outside 1..{m_alpha}")
        p = p * m_alpha + (c - 1)
    return p


def unpack_code(packed: int, level: int, m_alpha: int) -> tuple[int, ...]:
    digits = []
    for _ in range(level):
        digits.append(int(packed % m_alpha) + 1)
        packed //= m_alpha
    return tuple(reversed(digits))


@dataclass
class SymbolTree:
    """Prefix-closed node sets per level, each a sorted packed int64 array.

    labels, when present, carries one dict per level mapping packed code to an
    arbitrary payload (partition cube ids, centers, ...).
    """

    M: int
    rho: Fraction
    levels: list[np.ndarray]
    labels: Optional[list[dict]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("alphabet size must be >= 1")
        rho = self.rho if isinstance(self.rho, float) else Fraction(self.rho)
        if not (0 < float(rho) <= 0.5):
            raise ValueError("rho must lie in (0, 1/2]")
        self.rho = rho
        if not self.levels:
            raise ValueError("tree needs at least the root level")
        _check_packable(self.M, len(self.levels) - 1)
        norm = []
        for arr in self.levels:
            a = np.asarray(arr, dtype=np.int64)
            a = np.sort(a)
            norm.append(a)
        self.levels = norm
        self.validate()

    # -- structure ---------------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level_size(self, n: int) -> int:
        return int(self.levels[n].size)

    def validate(self) -> None:
        """Prefix closure and at-least-one-child, loudly."""
        if self.levels[0].size != 1 or self.levels[0][0] != 0:
            raise ValueError("level 0 must be exactly the root")
        for n in range(1, len(self.levels)):
            lvl = self.levels[n]
            if lvl.size == 0:
                raise ValueError(f"level {n} is empty")
            if np.any(lvl[1:] == lvl[:-1]):
                raise ValueError(f"duplicate codes at level {n}")
            parents = lvl // self.M
            missing = ~np.isin(parents, self.levels[n - 1])
            if np.any(missing):
                bad = unpack_code(int(lvl[np.flatnonzero(missing)[0]]), n, self.M)
                raise ValueError(f"node {bad} at level {n} has no parent")
            # every node on the previous level must keep a child
            if np.unique(parents).size != self.levels[n - 1].size:
                raise ValueError(f"a node at level {n - 1} has no child")

    def has_code(self, code: Sequence[int]) -> bool:
        n = len(code)
        if n > self.depth:
            return False
        p = pack_code(code, self.M)
        i = np.searchsorted(self.levels[n], p)
        return bool(i < self.levels[n].size and self.levels[n][i] == p)

    def children_digits(self, code: Sequence[int]) -> list[int]:
        n = len(code)
        if n + 1 > self.depth:
            return []
        p = pack_code(code, self.M)
        lvl = self.levels[n + 1]
        lo = np.searchsorted(lvl, p * self.M)
        hi = np.searchsorted(lvl, (p + 1) * self.M)
        return [int(v - p * self.M) + 1 for v in lvl[lo:hi]]

    def level_codes(self, n: int) -> list[tuple[int, ...]]:
        return [unpack_code(int(p), n, self.M) for p in self.levels[n]]

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        levels = []
        for n, lvl in enumerate(self.levels):
            levels.append([",".join(map(str, unpack_code(int(p), n, self.M))) for p in lvl])
        return {"M": self.M, "rho": str(self.rho), "levels": levels, "geometry": None}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SymbolTree":
        m_alpha = int(data["M"])
        rho = Fraction(data["rho"])
        levels = []
        for n, lvl in enumerate(data["levels"]):
            packed = []
            for s in lvl:
                code = tuple(int(x) for x in s.split(",")) if s else ()
                if len(code) != n:
                    raise ValueError(f"code {s!r} at level {n} has wrong length")
                packed.append(pack_code(code, m_alpha))
            levels.append(np.asarray(packed, dtype=np.int64))
        return cls(M=m_alpha, rho=rho, levels=levels)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def subtree(t: SymbolTree, code: Sequence[int]) -> SymbolTree:
    """Magnify: strip the prefix ``code`` and renumber levels from 0.

    Composition law: subtree(subtree(t, a), b) == subtree(t, a + b).
    """
    code = tuple(code)
    if not t.has_code(code):
        raise KeyError(f"code {code} not in tree")
    n0 = len(code)
    p = pack_code(code, t.M)
    out_levels = []
    out_labels = [] if t.labels is not None else None
    for k in range(n0, t.depth + 1):
        span = t.M ** (k - n0)
        lvl = t.levels[k]
        lo = np.searchsorted(lvl, p * span)
        hi = np.searchsorted(lvl, (p + 1) * span)
        sliced = lvl[lo:hi] - p * span
        out_levels.append(sliced)
        if out_labels is not None:
            src = t.labels[k]
            out_labels.append({int(q - p * span): src[int(q)] for q in lvl[lo:hi] if int(q) in src})
    return SymbolTree(M=t.M, rho=t.rho, levels=out_levels, labels=out_labels)


def branch_count(t: SymbolTree, code: Sequence[int], k: int) -> int:
    """Number of level-k descendants of the node ``code``."""
    code = tuple(code)
    n = len(code)
    if not (n <= k <= t.depth):
        raise ValueError(f"need level(code)={n} <= k <= depth={t.depth}")
    if not t.has_code(code):
        raise KeyError(f"code {code} not in tree")
    p = pack_code(code, t.M)
    span = t.M ** (k - n)
    lvl = t.levels[k]
    lo = np.searchsorted(lvl, p * span)
    hi = np.searchsorted(lvl, (p + 1) * span)
    return int(hi - lo)


@dataclass(frozen=True)
class LowerDimEstimate:
    """Worst log branch count per level gap, normalized by log(1/rho)."""

    value: float
    min_gap: int
    # (ancestor level m, descendant level k, min count, ratio)
    profile: list[tuple[int, int, int, float]]


def lower_dim_estimate(t: SymbolTree, min_gap: int) -> LowerDimEstimate:
    """min over (node at level m, k with k - m >= min_gap) of
    log(#descendants at k) / ((k - m) log(1/rho)).

    Vectorized per level pair: descendant counts for a whole level are two
    searchsorted passes.
    """
    if min_gap < 1:
        raise ValueError("min_gap must be >= 1")
    if t.depth < 2 * min_gap:
        raise ValueError(
            f"tree depth {t.depth} too shallow for min_gap {min_gap} (need >= {2 * min_gap})"
        )
    log_inv_rho = log(1 / float(t.rho))
    best = None
    profile = []
    for m in range(0, t.depth - min_gap + 1):
        anc = t.levels[m]
        for k in range(m + min_gap, t.depth + 1):
            span = t.M ** (k - m)
            lvl = t.levels[k]
            lo = np.searchsorted(lvl, anc * span)
            hi = np.searchsorted(lvl, (anc + 1) * span)
            min_count = int(np.min(hi - lo))
            ratio = log(min_count) / ((k - m) * log_inv_rho)
            profile.append((m, k, min_count, ratio))
            if best is None or ratio < best:
                best = ratio
    return LowerDimEstimate(value=float(best), min_gap=min_gap, profile=profile)
