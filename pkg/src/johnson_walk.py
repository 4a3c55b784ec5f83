"""
集合上的量子游走（精确模拟）以及精确层的 Generic Algorithm

基底为合法的 (A, x) 对：|A| = r 且 x 不在 A 中（r 扇区），或 |A| = r+1 且 x 在 A 中（r+1 扇区）。
数据寄存器 D(A) 由 A 和 f 唯一决定，所以只模拟 (A, x)。
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from statevector import StateVector
from utils.combinatorics import colex_subsets, rank_colex
from utils.run_utils import CapabilityError, DomainError, get_logger

logger = get_logger(__name__)

MAX_EXACT_N = 14
MAX_EXACT_R = 6


def _reflect_rows(block: np.ndarray) -> np.ndarray:
    # 每行: x -> -x + (2/|T|) sum
    return -block + 2 * block.mean(axis=1, keepdims=True)


class WalkBasis:
    """(A, x) 对的编号；集合按 colex 排名，元素 0-based"""

    def __init__(self, n: int, r: int):
        if r < 1 or r + 1 > n:
            raise DomainError(f"Walk needs 1 <= r and r+1 <= n, got n={n}, r={r}")
        if n > MAX_EXACT_N or r > MAX_EXACT_R:
            raise CapabilityError(f"Exact walk limited to n <= {MAX_EXACT_N}, r <= {MAX_EXACT_R}")
        self.n = n
        self.r = r
        self.small_sets = colex_subsets(n, r)
        self.large_sets = colex_subsets(n, r + 1)
        self.low_size = len(self.small_sets) * (n - r)
        self.high_size = len(self.large_sets) * (r + 1)
        self.size = self.low_size + self.high_size

    def low_slice(self) -> slice:
        return slice(0, self.low_size)

    def high_slice(self) -> slice:
        return slice(self.low_size, self.size)

    def encode(self, A: Iterable[int], x: int) -> int:
        A = tuple(sorted(A))
        if len(A) == self.r:
            if x in A:
                raise DomainError(f"Coin {x} must lie outside {A} in the r-sector")
            complement = [y for y in range(self.n) if y not in A]
            return rank_colex(A) * (self.n - self.r) + complement.index(x)
        if len(A) == self.r + 1:
            if x not in A:
                raise DomainError(f"Coin {x} must lie inside {A} in the (r+1)-sector")
            return self.low_size + rank_colex(A) * (self.r + 1) + A.index(x)
        raise DomainError(f"Set size {len(A)} is not r={self.r} or r+1")

    def decode(self, index: int) -> Tuple[Tuple[int, ...], int]:
        if not 0 <= index < self.size:
            raise DomainError(f"Basis index {index} out of range")
        if index < self.low_size:
            rank, pos = divmod(index, self.n - self.r)
            A = self.small_sets[rank]
            complement = [y for y in range(self.n) if y not in A]
            return A, complement[pos]
        rank, pos = divmod(index - self.low_size, self.r + 1)
        A = self.large_sets[rank]
        return A, A[pos]

    @cached_property
    def insert_permutation(self) -> np.ndarray:
        """r 扇区下标 -> (A ∪ {x}, x) 的 r+1 扇区下标（全局编号）"""
        up = np.empty(self.low_size, dtype=np.int64)
        for index in range(self.low_size):
            A, x = self.decode(index)
            up[index] = self.encode(A + (x,), x)
        return up


def walk_step(state: StateVector, basis: WalkBasis) -> StateVector:
    """
    一步游走: coin 在 S-A 上扩散; (A,x)->(A∪{x},x); coin 在 A 上扩散; (A,x)->(A\\{x},x)
    两次置换是同一个对合，整步是酉的
    """
    if state.basis_size != basis.size:
        raise DomainError(f"State size {state.basis_size} does not match basis size {basis.size}")
    amp = state.amp.copy()
    low, high = basis.low_slice(), basis.high_slice()
    up = basis.insert_permutation

    amp[low] = _reflect_rows(amp[low].reshape(-1, basis.n - basis.r)).ravel()
    amp = _swap_sectors(amp, basis, up)
    amp[high] = _reflect_rows(amp[high].reshape(-1, basis.r + 1)).ravel()
    amp = _swap_sectors(amp, basis, up)
    return StateVector(amp)


def _swap_sectors(amp: np.ndarray, basis: WalkBasis, up: np.ndarray) -> np.ndarray:
    out = np.empty_like(amp)
    out[up] = amp[: basis.low_size]
    out[: basis.low_size] = amp[up]
    return out


def walk_operator_matrix(basis: WalkBasis) -> np.ndarray:
    """一步游走的稠密矩阵，仅用于很小的 (n, r)"""
    columns = [walk_step(StateVector.basis(basis.size, i), basis).amp for i in range(basis.size)]
    return np.stack(columns, axis=1)


@dataclass(frozen=True)
class ExactCollisionInstance:
    """f 在 [n] 上的取值与碰撞关系；碰撞以 0-based 升序 k 元组保存"""

    n: int
    k: int
    values: Tuple[int, ...]
    collisions: FrozenSet[Tuple[int, ...]]
    relation: str = "custom"

    def marked(self, A: Sequence[int]) -> bool:
        members = set(A)
        return any(members.issuperset(c) for c in self.collisions)

    def witness(self, A: Sequence[int]) -> Optional[Tuple[int, ...]]:
        """Φ: A 内字典序最小的碰撞"""
        members = set(A)
        inside = sorted(c for c in self.collisions if members.issuperset(c))
        return inside[0] if inside else None


def element_distinctness_instance(values: Sequence[int]) -> ExactCollisionInstance:
    values = tuple(int(v) for v in values)
    collisions = frozenset(
        (i, j) for i, j in combinations(range(len(values)), 2) if values[i] == values[j]
    )
    return ExactCollisionInstance(len(values), 2, values, collisions, "element-distinctness")


def marked_sets(instance: ExactCollisionInstance, basis: WalkBasis) -> np.ndarray:
    return np.array([instance.marked(A) for A in basis.small_sets], dtype=bool)


@dataclass
class ExactWalkResult:
    success_probability: float
    witnesses: Dict[Tuple[int, ...], float] = field(default_factory=dict)


def _prepare(instance: ExactCollisionInstance, r: int) -> Tuple[WalkBasis, np.ndarray, StateVector]:
    if r < instance.k:
        raise DomainError(f"Set size r={r} below collision arity k={instance.k}")
    if r >= instance.n:
        raise DomainError(f"Set size r={r} must be below n={instance.n}")
    basis = WalkBasis(instance.n, r)
    marked_low = np.repeat(marked_sets(instance, basis), basis.n - basis.r)
    state = StateVector.uniform(basis.size, support=np.arange(basis.low_size))
    return basis, marked_low, state


def _measure(instance: ExactCollisionInstance, basis: WalkBasis, marked_low: np.ndarray,
             state: StateVector) -> ExactWalkResult:
    probs = state.probabilities()[: basis.low_size]
    success = float(probs[marked_low].sum())
    witnesses: Dict[Tuple[int, ...], float] = {}
    if success > 0:
        per_set = probs.reshape(-1, basis.n - basis.r).sum(axis=1)
        for rank, A in enumerate(basis.small_sets):
            w = instance.witness(A)
            if w is not None and per_set[rank] > 0:
                key = tuple(i + 1 for i in w)
                witnesses[key] = witnesses.get(key, 0.0) + float(per_set[rank]) / success
    return ExactWalkResult(success, witnesses)


def _iterate(state: StateVector, basis: WalkBasis, marked_low: np.ndarray, t2: int) -> StateVector:
    amp = state.amp.copy()
    amp[: basis.low_size][marked_low] *= -1
    state = StateVector(amp)
    for _ in range(t2):
        state = walk_step(state, basis)
    return state


def generic_exact(instance: ExactCollisionInstance, r: int, t1: int, t2: int) -> ExactWalkResult:
    """从 r 扇区均匀态出发，重复 t1 次 [标记集合相位翻转, t2 步游走]，返回成功概率与见证分布"""
    if t1 < 0 or t2 < 0:
        raise DomainError(f"Iteration counts must be non-negative, got t1={t1}, t2={t2}")
    basis, marked_low, state = _prepare(instance, r)
    for _ in range(t1):
        state = _iterate(state, basis, marked_low, t2)
    return _measure(instance, basis, marked_low, state)


def sweep_exact(instance: ExactCollisionInstance, r: int, t1_values: Sequence[int],
                t2_values: Sequence[int]) -> pd.DataFrame:
    """(t1, t2) 网格上的成功概率表，包含 (0, 0) 基线；t1 方向增量演化"""
    basis, marked_low, start = _prepare(instance, r)
    baseline = _measure(instance, basis, marked_low, start).success_probability
    rows = [{"t1": 0, "t2": 0, "success_probability": baseline}]
    wanted = set(t1_values)
    last = max(wanted) if wanted else 0
    for t2 in t2_values:
        state = start
        for t1 in range(1, last + 1):
            state = _iterate(state, basis, marked_low, t2)
            if t1 in wanted:
                p = _measure(instance, basis, marked_low, state).success_probability
                rows.append({"t1": t1, "t2": t2, "success_probability": p})
    table = pd.DataFrame(rows)
    best = table.loc[table["success_probability"].idxmax()]
    logger.info(
        f"Exact walk sweep n={instance.n}, r={r}: best p={best['success_probability']:.4f} "
        f"at t1={int(best['t1'])}, t2={int(best['t2'])} (baseline {baseline:.4f})"
    )
    return table
