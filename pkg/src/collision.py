"""
碰撞框架（计费模型）
Generic Algorithm 的代价公式、计费运行器、Collision -> Unique Collision 随机约化
"""

import hashlib
import math
from dataclasses import dataclass, replace
from itertools import combinations, islice
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from graph_core import OracleSession
from utils.run_utils import (
    DomainError,
    InvariantError,
    PromiseError,
    get_logger,
    iceil,
    ilog2,
)

logger = get_logger(__name__)

Tup = Tuple[int, ...]

# Collision -> Unique Collision 的整套隔离轮次最多重复几遍
ISOLATION_ATTEMPTS = 4


@dataclass(frozen=True)
class CollisionSpec:
    """
    地面集 [n]、元数 k、碰撞关系 C 与可选限制 R
    collisions() 按参考输入枚举 C 中的规范（升序）k 元组
    """

    n: int
    k: int
    relation: Callable[[Tup], bool]
    collisions: Callable[[], Iterable[Tup]]
    restriction: Optional[Callable[[Tup], bool]] = None

    def holds(self, tup: Tup) -> bool:
        tup = tuple(sorted(tup))
        if not self.relation(tup):
            return False
        return self.restriction is None or bool(self.restriction(tup))

    def effective(self) -> Iterator[Tup]:
        """C ∩ R"""
        for tup in self.collisions():
            tup = tuple(sorted(tup))
            if self.restriction is None or self.restriction(tup):
                yield tup

    def restricted(self, restriction: Callable[[Tup], bool]) -> "CollisionSpec":
        if self.restriction is None:
            return replace(self, restriction=restriction)
        outer = self.restriction
        return replace(self, restriction=lambda t: outer(t) and restriction(t))


def relation_spec(n: int, k: int, collisions: Sequence[Tup]) -> CollisionSpec:
    """用显式碰撞列表构造 CollisionSpec"""
    canonical = sorted({tuple(sorted(c)) for c in collisions})
    members = set(canonical)
    for c in canonical:
        if len(c) != k or len(set(c)) != k or not all(1 <= x <= n for x in c):
            raise DomainError(f"Collision {c} is not a {k}-subset of [1, {n}]")
    return CollisionSpec(n, k, relation=lambda t: t in members, collisions=lambda: iter(canonical))


def element_distinctness_spec(values: Sequence[int]) -> CollisionSpec:
    n = len(values)
    pairs = [(i + 1, j + 1) for i, j in combinations(range(n), 2) if values[i] == values[j]]
    return relation_spec(n, 2, pairs)


@dataclass(frozen=True)
class DatabaseModel:
    """
    数据结构代价 s(r), u(r), c(r)（实数，用于公式）
    charged_check 可覆盖检查代价的整数计费（带 log 因子时）
    """

    name: str
    setup: Callable[[float], float]
    update: Callable[[float], float]
    check: Callable[[float], float]
    charged_check: Optional[Callable[[int], int]] = None
    checker: Optional[Callable[[CollisionSpec], Iterator[Tup]]] = None

    def charged_costs(self, r: int) -> Tuple[int, int, int]:
        s = iceil(self.setup(r))
        u = iceil(self.update(r))
        c = self.charged_check(r) if self.charged_check is not None else iceil(self.check(r))
        return s, u, c

    def find(self, spec: CollisionSpec) -> Iterator[Tup]:
        if self.checker is not None:
            return self.checker(spec)
        return spec.effective()


def element_distinctness_model() -> DatabaseModel:
    return DatabaseModel("element-distinctness", setup=lambda r: r, update=lambda r: 1, check=lambda r: 0)


def graph_collision_model() -> DatabaseModel:
    return DatabaseModel("graph-collision", setup=lambda r: r, update=lambda r: 1, check=lambda r: 0)


def triangle_model(n: int) -> DatabaseModel:
    return DatabaseModel(
        "triangle",
        setup=lambda r: r ** 2,
        update=lambda r: r,
        check=lambda r: math.sqrt(n) * r ** (2 / 3),
        charged_check=lambda r: iceil(math.sqrt(n)) * iceil(r ** (2 / 3)) * ilog2(n),
    )


def h_copy_model(n: int, d: int) -> DatabaseModel:
    if d < 1:
        raise DomainError(f"Distinguished vertex degree must be positive, got {d}")
    return DatabaseModel(
        f"h-copy(d={d})",
        setup=lambda r: r ** 2,
        update=lambda r: r,
        check=lambda r: math.sqrt(n) * r ** (d / (d + 1)),
        charged_check=lambda r: iceil(math.sqrt(n)) * iceil(r ** (d / (d + 1))) * ilog2(n),
    )


def _check_r(n: int, r: float):
    if not 1 <= r < n:
        raise DomainError(f"Walk set size r={r} must satisfy 1 <= r < n={n}")


def generic_cost(n: int, k: int, r: float, db: DatabaseModel) -> float:
    """s(r) + (n/r)^{k/2} (c(r) + sqrt(r) u(r))"""
    _check_r(n, r)
    return db.setup(r) + (n / r) ** (k / 2) * (db.check(r) + math.sqrt(r) * db.update(r))


def walk_rounds(n: int, k: int, r: int) -> int:
    return iceil((n / r) ** (k / 2))


def charged_generic_cost(n: int, k: int, r: int, db: DatabaseModel) -> int:
    """generic_cost 的取整版本，等于运行器的账本总额"""
    _check_r(n, r)
    s, u, c = db.charged_costs(r)
    return s + walk_rounds(n, k, r) * (c + iceil(math.sqrt(r)) * u)


def charge_generic_run(session: OracleSession, n: int, k: int, r: int, db: DatabaseModel,
                       prefix: str = ""):
    _check_r(n, r)
    s, u, c = db.charged_costs(r)
    session.charge(f"{prefix}setup", s)
    per_round = c + iceil(math.sqrt(r)) * u
    for _ in range(walk_rounds(n, k, r)):
        session.charge(f"{prefix}walk-round", per_round)


def run_generic_cost_model(
    session: OracleSession,
    spec: CollisionSpec,
    db: DatabaseModel,
    r: int,
    require_unique: bool = True,
    prefix: str = "",
) -> Optional[Tup]:
    """
    计费版 Generic Algorithm（概率 1 的放大版本）
    唯一碰撞存在时返回它，否则拒绝（None）；违反唯一性承诺时抛 PromiseError
    """
    _check_r(spec.n, r)
    found = list(islice(db.find(spec), 2))
    if require_unique and len(found) > 1:
        raise PromiseError(f"Relation has at least two collisions: {found}")
    charge_generic_run(session, spec.n, spec.k, r, db, prefix)
    if not found:
        return None
    witness = found[0]
    if not spec.holds(witness):
        raise InvariantError(f"Checker returned {witness}, which is not in the effective relation")
    return witness


def _isolation_key(seed: int, round_index: int) -> bytes:
    return (int(seed) % 2**64).to_bytes(8, "little") + round_index.to_bytes(4, "little")


def isolation_rounds(n: int, k: int) -> int:
    return iceil(k * math.log2(max(n, 2)))


def reduce_to_unique(spec: CollisionSpec, seed: int) -> List[CollisionSpec]:
    """
    第 i 轮以密度 2^-i 随机保留元组（带密钥的 BLAKE2b 哈希），i = 0..ceil(log2 n^k)
    第 0 轮就是原关系
    """
    specs = [spec]
    for i in range(1, isolation_rounds(spec.n, spec.k) + 1):
        key = _isolation_key(seed, i)
        bound = 2 ** (64 - i) if i < 64 else 1

        def keep(tup: Tup, key=key, bound=bound) -> bool:
            payload = ",".join(str(int(x)) for x in tup).encode()
            digest = hashlib.blake2b(payload, digest_size=8, key=key).digest()
            return int.from_bytes(digest, "little") < bound

        specs.append(spec.restricted(keep))
    return specs


def solve_collision(
    session: OracleSession,
    spec: CollisionSpec,
    db: DatabaseModel,
    r: int,
    seed: Optional[int] = None,
    attempts: int = ISOLATION_ATTEMPTS,
) -> Optional[Tup]:
    """
    一般碰撞问题：依次在 reduce_to_unique 的各轮上运行唯一碰撞算法
    有 >= 2 个碰撞的轮次照常计费，但视为无结论
    """
    seed = session.rng_seed if seed is None else seed
    for attempt in range(attempts):
        for i, restricted in enumerate(reduce_to_unique(spec, seed + attempt * 1_000_003)):
            try:
                witness = run_generic_cost_model(session, restricted, db, r, prefix=f"iso{i}:")
            except PromiseError:
                charge_generic_run(session, spec.n, spec.k, r, db, prefix=f"iso{i}:")
                logger.debug(f"Isolation round {i} (attempt {attempt}) kept several collisions")
                continue
            if witness is not None:
                return witness
        logger.debug(f"Isolation attempt {attempt} ended without a witness")
    return None


# ---------------------------------------------------------------------------
# 指数分析
# ---------------------------------------------------------------------------

Line = Tuple[float, float]  # exponent = a + b * rho, 其中 r = n^rho


def cost_exponent(lines: Sequence[Line], rho: float) -> float:
    return max(a + b * rho for a, b in lines)


def optimal_exponent(lines: Sequence[Line], lo: float = 0.0, hi: float = 1.0) -> Tuple[float, float]:
    """凸分段线性函数 max(lines) 在 [lo, hi] 上的最小值及取到它的 rho"""
    candidates = {lo, hi}
    for (a1, b1), (a2, b2) in combinations(lines, 2):
        if b1 != b2:
            rho = (a2 - a1) / (b1 - b2)
            if lo <= rho <= hi:
                candidates.add(rho)
    best = min(sorted(candidates), key=lambda rho: (cost_exponent(lines, rho), rho))
    return cost_exponent(lines, best), best


def generic_lines(k: float, setup: Line, update: Line, check: Optional[Line]) -> List[Line]:
    """把 s, u, c 的指数（各为关于 rho 的线性式）代入 Generic Algorithm 的各项；c = 0 时传 None"""
    walk = (k / 2, -k / 2)
    lines = [setup, (walk[0] + update[0], walk[1] + update[1] + 0.5)]
    if check is not None:
        lines.append((walk[0] + check[0], walk[1] + check[1]))
    return lines


COST_TABLE_LINES = {
    "element-distinctness": generic_lines(2, (0.0, 1.0), (0.0, 0.0), None),
    "graph-collision": generic_lines(2, (0.0, 1.0), (0.0, 0.0), None),
    "triangle": generic_lines(2, (0.0, 2.0), (0.0, 1.0), (0.5, 2 / 3)),
}


def h_copy_exponent(k: int, d: int) -> Tuple[float, float]:
    """H 有 k 个顶点、根度数 d 时的最优指数，游走元数为 k-1"""
    return optimal_exponent(generic_lines(k - 1, (0.0, 2.0), (0.0, 1.0), (0.5, d / (d + 1))))


def fitted_exponent(cost: Callable[[float], float], ns: Sequence[float]) -> float:
    """log-log 最小二乘斜率"""
    x = np.log2(np.asarray(ns, dtype=float))
    y = np.log2(np.asarray([cost(n) for n in ns], dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def best_r_on_grid(n: int, k: int, db: DatabaseModel, grid: Sequence[float]) -> float:
    rs = [r for r in grid if 1 <= r < n]
    if not rs:
        raise DomainError("Empty r grid")
    return min(rs, key=lambda r: generic_cost(n, k, r, db))
