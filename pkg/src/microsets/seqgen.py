"""Binary branching sequences with dense ones and guaranteed zero runs.

For a density parameter gamma in (0, 1) the generator overlays periodic
component sequences: for each m >= 1 let N_m = floor(m^3 / gamma) and let the
m-th component repeat the pattern of N_m - m ones followed by m zeros.  A
position carries a 1 exactly when every component does.  Two facts drive
everything downstream:

  * the lower Cesaro mean of the result is at least 1 - gamma * pi^2 / 6
    (each component removes an m/N_m <= ~gamma/m^2 share of ones), and
  * every window of N_m + m - 1 consecutive positions contains m
    consecutive zeros.  The m-th component plants one m-block per period
    N_m, so any N_m consecutive positions contain a block START, and the
    extra m - 1 positions guarantee the whole block fits; windows of
    exactly N_m positions can cut the block at both alignments and do
    fail for some gamma (overlay zeros never break a block, they only
    extend it, so the widened window is always sufficient).

All means and thresholds are kept as exact ``fractions.Fraction`` values;
floats appear only in reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "BranchingSeq",
    "WindowCheck",
    "window_schedule",
    "active_levels",
    "build_sequence",
    "lower_cesaro",
    "cesaro_slack",
    "verify_zero_windows",
    "window_sup_mean",
    "sup_mean_profile",
]


def _as_gamma(gamma) -> Fraction:
    g = Fraction(gamma)
    if not (0 < g < 1):
        raise ValueError(f"gamma must lie in (0, 1), got {g}")
    return g


def window_schedule(gamma, m: int) -> int:
    """N_m = floor(m^3 / gamma), computed exactly."""
    g = _as_gamma(gamma)
    if m < 1:
        raise ValueError("m must be >= 1")
    return int(Fraction(m**3, 1) / g)


def active_levels(gamma, length: int) -> list[int]:
    """Component indices m whose first zero block starts within the prefix.

    The m-th component first emits a zero at position N_m - m + 1, so only
    these m can influence a prefix of the given length.
    """
    g = _as_gamma(gamma)
    out = []
    m = 1
    while True:
        n_m = window_schedule(g, m)
        if n_m - m + 1 > length:
            break
        out.append(m)
        m += 1
    return out


@dataclass(frozen=True)
class BranchingSeq:
    """A finite 0/1 prefix together with its window schedule.

    bits            0/1 prefix (uint8 array, 1-based positions in the math)
    gamma           exact density parameter in (0, 1)
    window_schedule N_m for every component active on this prefix
    """

    bits: np.ndarray
    gamma: Fraction
    window_schedule: tuple[int, ...] = field(default=())

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("bits must be a nonempty 1-d array")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "gamma", _as_gamma(self.gamma))
        sched = tuple(int(n) for n in self.window_schedule)
        # Schedule entries must match the defining formula and be strictly
        # increasing with N_m >= m (automatic for gamma < 1).
        for m, n_m in enumerate(sched, start=1):
            expect = window_schedule(self.gamma, m)
            if n_m != expect:
                raise ValueError(f"schedule entry N_{m}={n_m}, expected {expect}")
            if n_m < m:
                raise ValueError(f"N_{m}={n_m} < m")
            if m >= 2 and n_m <= sched[m - 2]:
                raise ValueError("window schedule must be strictly increasing")
        object.__setattr__(self, "window_schedule", sched)

    def __len__(self) -> int:
        return int(self.bits.size)

    @classmethod
    def from_bits(cls, bits: Sequence[int], gamma=Fraction(1, 2)) -> "BranchingSeq":
        """Wrap explicit bits (tests, periodic inputs) with a consistent schedule."""
        g = _as_gamma(gamma)
        bits = np.asarray(bits, dtype=np.uint8)
        sched = tuple(window_schedule(g, m) for m in active_levels(g, bits.size))
        return cls(bits=bits, gamma=g, window_schedule=sched)

    def to_json_dict(self) -> dict:
        return {
            "gamma": str(self.gamma),
            "bits": [int(b) for b in self.bits],
            "schedule": list(self.window_schedule),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BranchingSeq":
        return cls(
            bits=np.asarray(data["bits"], dtype=np.uint8),
            gamma=Fraction(data["gamma"]),
            window_schedule=tuple(data.get("schedule", ())),
        )


def build_sequence(gamma, length: int) -> BranchingSeq:
    """Overlay the periodic components on a prefix of the given length.

    Position n (1-based) is zero iff (n-1) mod N_m falls in the trailing
    m-zero block for some active m.
    """
    g = _as_gamma(gamma)
    if length < 1:
        raise ValueError("length must be >= 1")
    n = np.arange(1, length + 1, dtype=np.int64)
    zero = np.zeros(length, dtype=bool)
    active = active_levels(g, length)
    for m in active:
        n_m = window_schedule(g, m)
        zero |= ((n - 1) % n_m) >= (n_m - m)
    bits = (~zero).astype(np.uint8)
    sched = tuple(window_schedule(g, m) for m in active)
    return BranchingSeq(bits=bits, gamma=g, window_schedule=sched)


def lower_cesaro(seq: BranchingSeq, n_start: int = 1) -> Fraction:
    """Exact min over n >= n_start of (a_1 + ... + a_n) / n.

    Floats locate the minimizing prefix, exact cross-multiplication settles
    near-ties, so the result is an exact Fraction at array speed.
    """
    length = len(seq)
    if not (1 <= n_start <= length):
        raise ValueError("n_start out of range")
    sums = np.cumsum(seq.bits, dtype=np.int64)
    n = np.arange(1, length + 1, dtype=np.int64)
    ratios = sums[n_start - 1:] / n[n_start - 1:]
    near = np.flatnonzero(ratios <= ratios.min() + 1e-12) + (n_start - 1)
    best = Fraction(int(sums[near[0]]), int(n[near[0]]))
    for i in near[1:]:
        cand = Fraction(int(sums[i]), int(n[i]))
        if cand < best:
            best = cand
    return best


def cesaro_slack(seq: BranchingSeq) -> Fraction:
    """Finite-prefix slack 10 * N_{m*} / length for the largest active m*.

    This is the documented guard for comparing a finite lower Cesaro proxy
    against the asymptotic bound 1 - gamma * pi^2 / 6.  It is deliberately
    conservative; at moderate lengths it can exceed 1.
    """
    if not seq.window_schedule:
        return Fraction(0)
    return Fraction(10 * seq.window_schedule[-1], len(seq))


@dataclass(frozen=True)
class WindowCheck:
    """Outcome of a zero-run window scan: ok, else the first violating start."""

    ok: bool
    m: int
    n_m: int
    window: int
    first_violation: Optional[int] = None


def verify_zero_windows(seq: BranchingSeq, m: int,
                        window: Optional[int] = None) -> WindowCheck:
    """Check every window of N_m + m - 1 positions for m consecutive zeros.

    The widened default is the window length the construction actually
    guarantees (see the module docstring); pass ``window`` explicitly to
    scan other lengths, e.g. the bare period N_m.  Returns the first
    violating window start (1-based) on failure.  The scan is O(length)
    per m: mark positions where a zero run of length m begins, then ask
    each window whether it contains such a start.
    """
    n_m = window_schedule(seq.gamma, m)
    win = n_m + m - 1 if window is None else int(window)
    if win < m:
        raise ValueError(f"window {win} cannot contain a run of {m} zeros")
    length = len(seq)
    if length < win:
        raise ValueError(f"sequence of length {length} shorter than window {win}")
    zeros = (seq.bits == 0).astype(np.int64)
    zsum = np.concatenate(([0], np.cumsum(zeros)))
    # run_start[i] == 1 iff bits[i .. i+m-1] are all zero (0-based i)
    run_start = (zsum[m:] - zsum[:-m]) == m
    starts = np.concatenate(([0], np.cumsum(run_start.astype(np.int64))))
    # window starting at 0-based j spans j .. j+win-1; a run must begin in
    # j .. j+win-m, i.e. the count of starts in that range must be positive
    j = np.arange(0, length - win + 1, dtype=np.int64)
    ok = (starts[j + win - m + 1] - starts[j]) > 0
    if bool(np.all(ok)):
        return WindowCheck(ok=True, m=m, n_m=n_m, window=win)
    first = int(np.flatnonzero(~ok)[0]) + 1
    return WindowCheck(ok=False, m=m, n_m=n_m, window=win, first_violation=first)


def window_sup_mean(seq: BranchingSeq, n: int) -> Fraction:
    """Exact sup over k of (a_{k+1} + ... + a_{k+n}) / n for windows inside the prefix."""
    length = len(seq)
    if not (1 <= n <= length):
        raise ValueError("window length out of range")
    sums = np.concatenate(([0], np.cumsum(seq.bits, dtype=np.int64)))
    best = int(np.max(sums[n:] - sums[:-n]))
    return Fraction(best, n)


def sup_mean_profile(seq: BranchingSeq, n_values: Sequence[int]) -> list[tuple[int, Fraction]]:
    return [(int(n), window_sup_mean(seq, int(n))) for n in n_values]
