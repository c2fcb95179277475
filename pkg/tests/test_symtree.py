"""Tests for packed symbolic trees, magnification, and branch statistics."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microsets.symtree import (
    SymbolTree,
    branch_count,
    lower_dim_estimate,
    pack_code,
    subtree,
    unpack_code,
)


def full_tree(m_alpha: int, depth: int, rho=Fraction(1, 2)) -> SymbolTree:
    levels = [np.arange(m_alpha ** n, dtype=np.int64) for n in range(depth + 1)]
    return SymbolTree(M=m_alpha, rho=rho, levels=levels)


def single_branch_tree(m_alpha: int, depth: int, rho=Fraction(1, 2)) -> SymbolTree:
    levels = [np.zeros(1, dtype=np.int64) for _ in range(depth + 1)]
    return SymbolTree(M=m_alpha, rho=rho, levels=levels)


def cantor_tree(depth: int) -> SymbolTree:
    # M = 3, children 1 and 3 everywhere (packed offsets 0 and 2), rho = 1/3
    levels = [np.zeros(1, dtype=np.int64)]
    for _ in range(depth):
        prev = levels[-1]
        levels.append(np.sort(np.concatenate([prev * 3, prev * 3 + 2])))
    return SymbolTree(M=3, rho=Fraction(1, 3), levels=levels)


@st.composite
def random_tree(draw, max_m=4, max_depth=6):
    m_alpha = draw(st.integers(2, max_m))
    depth = draw(st.integers(1, max_depth))
    seed = draw(st.integers(0, 2 ** 31 - 1))
    rng = np.random.RandomState(seed)
    levels = [np.zeros(1, dtype=np.int64)]
    for _ in range(depth):
        prev = levels[-1]
        children = []
        for p in prev:
            n_kids = rng.randint(1, m_alpha + 1)
            digits = rng.choice(m_alpha, size=n_kids, replace=False)
            children.extend(int(p) * m_alpha + digits)
        levels.append(np.sort(np.asarray(children, dtype=np.int64)))
    return SymbolTree(M=m_alpha, rho=Fraction(1, 2), levels=levels)


# -- packing -----------------------------------------------------------------


def test_pack_round_trip():
    assert pack_code((), 3) == 0
    assert unpack_code(pack_code((1, 2, 3), 3), 3, 3) == (1, 2, 3)
    assert pack_code((2,), 5) == 1
    with pytest.raises(ValueError):
        pack_code((0,), 3)
    with pytest.raises(ValueError):
        pack_code((4,), 3)


def test_depth_guard():
    with pytest.raises(ValueError):
        single_branch_tree(2, 70)


# -- validation --------------------------------------------------------------


def test_rejects_orphan_node():
    # level-2 packed code 3 = digits (2, 2), but level 1 holds only digit 1
    with pytest.raises(ValueError):
        SymbolTree(M=2, rho=Fraction(1, 2),
                   levels=[np.array([0]), np.array([0]), np.array([3])])


def test_rejects_childless_parent():
    # level 1 has both children of root, level 2 extends only one of them
    with pytest.raises(ValueError):
        SymbolTree(M=2, rho=Fraction(1, 2),
                   levels=[np.array([0]), np.array([0, 1]), np.array([0, 1])])


def test_rejects_duplicates_and_bad_root():
    with pytest.raises(ValueError):
        SymbolTree(M=2, rho=Fraction(1, 2), levels=[np.array([0]), np.array([0, 0])])
    with pytest.raises(ValueError):
        SymbolTree(M=2, rho=Fraction(1, 2), levels=[np.array([1])])


def test_children_digits_and_has_code():
    t = cantor_tree(3)
    assert t.has_code((1, 3))
    assert not t.has_code((1, 2))
    assert t.children_digits((1, 1)) == [1, 3]
    assert t.children_digits((1, 1, 1)) == []  # at depth


# -- subtree -----------------------------------------------------------------


def test_subtree_empty_code_is_identity():
    t = cantor_tree(4)
    s = subtree(t, ())
    assert s.depth == t.depth
    for n in range(t.depth + 1):
        assert np.array_equal(s.levels[n], t.levels[n])


def test_subtree_of_full_binary_is_full_binary():
    t = full_tree(2, 8)
    s = subtree(t, (1, 2, 1))
    assert s.depth == 5
    for n in range(6):
        assert s.level_size(n) == 2 ** n


def test_subtree_missing_code():
    t = cantor_tree(3)
    with pytest.raises(KeyError):
        subtree(t, (2,))


@given(random_tree(), st.data())
@settings(max_examples=60, deadline=None)
def test_subtree_composition(t, data):
    # walk two random valid segments a then b; composed extraction must match
    code = []
    for _ in range(data.draw(st.integers(0, t.depth))):
        kids = t.children_digits(code)
        if not kids:
            break
        code.append(data.draw(st.sampled_from(kids)))
    cut = data.draw(st.integers(0, len(code)))
    a, b = tuple(code[:cut]), tuple(code[cut:])
    lhs = subtree(subtree(t, a), b)
    rhs = subtree(t, tuple(code))
    assert lhs.depth == rhs.depth
    for n in range(rhs.depth + 1):
        assert np.array_equal(lhs.levels[n], rhs.levels[n])


# -- branch_count ------------------------------------------------------------


def test_branch_count_examples():
    assert branch_count(full_tree(2, 6), (), 5) == 32
    t = single_branch_tree(3, 6)
    assert branch_count(t, (1, 1), 6) == 1


def test_branch_count_range_checks():
    t = full_tree(2, 4)
    with pytest.raises(ValueError):
        branch_count(t, (1, 1), 1)
    with pytest.raises(KeyError):
        branch_count(cantor_tree(3), (2,), 3)


@given(random_tree())
@settings(max_examples=40, deadline=None)
def test_branch_count_supermultiplicative(t):
    k = t.depth
    for m in range(k + 1):
        worst = min(branch_count(t, c, k) for c in t.level_codes(m))
        assert branch_count(t, (), k) >= branch_count(t, (), m) * worst


# -- lower_dim_estimate --------------------------------------------------------


def test_lower_dim_full_binary_is_one():
    est = lower_dim_estimate(full_tree(2, 8), min_gap=2)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_lower_dim_single_branch_is_zero():
    est = lower_dim_estimate(single_branch_tree(2, 8), min_gap=2)
    assert est.value == 0.0


def test_lower_dim_cantor():
    est = lower_dim_estimate(cantor_tree(8), min_gap=2)
    assert est.value == pytest.approx(math.log(2) / math.log(3), abs=1e-12)


def test_lower_dim_needs_depth():
    with pytest.raises(ValueError):
        lower_dim_estimate(full_tree(2, 3), min_gap=2)


@given(random_tree(max_depth=6))
@settings(max_examples=40, deadline=None)
def test_lower_dim_bounded_by_full_branching(t):
    if t.depth < 2:
        return
    est = lower_dim_estimate(t, min_gap=1)
    assert est.value <= math.log(t.M) / math.log(1 / float(t.rho)) + 1e-12


def test_lower_dim_gap_monotone_on_self_similar():
    t = cantor_tree(8)
    vals = [lower_dim_estimate(t, min_gap=g).value for g in (1, 2, 3, 4)]
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-12


# -- serialization -----------------------------------------------------------


def test_json_round_trip():
    t = cantor_tree(4)
    back = SymbolTree.from_json_dict(t.to_json_dict())
    assert back.M == t.M and Fraction(back.rho) == Fraction(t.rho)
    for n in range(t.depth + 1):
        assert np.array_equal(back.levels[n], t.levels[n])


@given(random_tree())
@settings(max_examples=30, deadline=None)
def test_json_round_trip_random(t):
    back = SymbolTree.from_json_dict(t.to_json_dict())
    for n in range(t.depth + 1):
        assert np.array_equal(back.levels[n], t.levels[n])
