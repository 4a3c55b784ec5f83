# -*- encoding: utf-8 -*-
"""
k 元子集的 colex 排序编号（组合数系统）
"""

from math import comb
from typing import Iterable, List, Tuple

from .run_utils import DomainError


def rank_colex(subset: Iterable[int]) -> int:
    """0-based 元素的 colex 排名: sum C(a_i, i)"""
    items = sorted(subset)
    rank = 0
    for i, a in enumerate(items, start=1):
        if a < 0:
            raise DomainError(f"Subset elements must be non-negative, got {a}")
        rank += comb(a, i)
    return rank


def unrank_colex(rank: int, k: int) -> Tuple[int, ...]:
    if rank < 0 or k < 0:
        raise DomainError(f"Cannot unrank rank={rank}, k={k}")
    out = []
    for i in range(k, 0, -1):
        # largest a with C(a, i) <= rank
        a = i - 1
        while comb(a + 1, i) <= rank:
            a += 1
        rank -= comb(a, i)
        out.append(a)
    return tuple(reversed(out))


def colex_subsets(n: int, k: int) -> List[Tuple[int, ...]]:
    """[0, n) 的全部 k 元子集，下标即 colex 排名"""
    if k < 0 or k > n:
        raise DomainError(f"No {k}-subsets of a {n}-set")
    return [unrank_colex(i, k) for i in range(comb(n, k))]
