"""
基于量子游走的算法（计费模型）
Graph Collision、游走三角形算法、H-copy 以及单调性质的证书包装
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from collision import (
    CollisionSpec,
    graph_collision_model,
    h_copy_model,
    run_generic_cost_model,
    solve_collision,
    triangle_model,
)
from graph_core import (
    COPY_GUARD,
    Graph,
    KnownGraph,
    OracleSession,
    Pair,
    Triangle,
    brute_find_copy,
    iter_copies,
    query_edge,
    query_value,
    triangle_edge_mask,
)
from utils.run_utils import (
    CapabilityError,
    DomainError,
    InvariantError,
    Stream,
    get_logger,
    iceil,
    ilog2,
    make_rng,
)

logger = get_logger(__name__)


def clamp_r(n: int, r: int, low: int = 1) -> int:
    return max(low, min(r, n - 1))


# ---------------------------------------------------------------------------
# Graph Collision
# ---------------------------------------------------------------------------


def graph_collision_r(n: int) -> int:
    return clamp_r(n, iceil(n ** (2 / 3)))


def graph_collision(session: OracleSession, known: Union[Graph, KnownGraph]) -> Optional[Pair]:
    """
    已知图 G 上找 f(u) = f(u') = 1 的边 (u, u')
    s(r)=r, u(r)=1, c(r)=0, r = ceil(n^{2/3})，经 reduce_to_unique 处理唯一性承诺
    """
    if session.values is None:
        raise DomainError("Graph collision needs a session over a boolean function")
    if isinstance(known, Graph):
        known = KnownGraph.from_graph(known)
    n = known.n
    if len(session.values) != n:
        raise DomainError(f"f has {len(session.values)} values but the known graph has n={n}")
    f = session.values
    edges = known.edges
    hot = edges[f[edges[:, 0] - 1] & f[edges[:, 1] - 1]]

    def collisions() -> Iterator[Pair]:
        for a, b in hot:
            yield (int(a), int(b))

    def relation(t) -> bool:
        a, b = t
        return known.has_edge(a, b) and bool(f[a - 1]) and bool(f[b - 1])

    spec = CollisionSpec(n, 2, relation=relation, collisions=collisions)
    witness = solve_collision(session, spec, graph_collision_model(), graph_collision_r(n))
    if witness is None:
        return None
    a, b = witness
    if not (query_value(session, a) and query_value(session, b) and known.has_edge(a, b)):
        raise InvariantError(f"Graph collision witness {witness} failed verification")
    return (a, b)


def planted_graph_collision(n: int, seed: int) -> Tuple[KnownGraph, np.ndarray]:
    """
    恰有一个碰撞的实例：已知图为随机完美匹配，f 在每条匹配边的一个端点取 1，
    另选一条边两端都取 1
    """
    if n < 2:
        raise DomainError(f"Planted graph collision needs n >= 2, got {n}")
    rng = make_rng(seed, Stream.INSTANCE)
    perm = rng.permutation(n)
    pairs = perm[: 2 * (n // 2)].reshape(-1, 2)
    values = np.zeros(n, dtype=bool)
    pick = rng.integers(0, 2, size=len(pairs))
    values[pairs[np.arange(len(pairs)), pick]] = True
    planted = int(rng.integers(len(pairs)))
    values[pairs[planted]] = True
    return KnownGraph(n, pairs + 1), values


# ---------------------------------------------------------------------------
# 三角形
# ---------------------------------------------------------------------------


def walk_triangle_r(n: int) -> int:
    return clamp_r(n, iceil(n ** (3 / 5)))


def walk_triangle(session: OracleSession) -> Optional[Triangle]:
    """
    k=2 的碰撞框架：碰撞为落在三角形上的边，D(U)=G|_U，
    检查代价按 ceil(sqrt n) ceil(r^{2/3}) ceil(log n) 计费；找到边后再为第三个顶点计费
    """
    g = session.graph
    if g is None:
        raise DomainError("Walk triangle needs a graph session")
    n = g.n
    mask = np.triu(triangle_edge_mask(g.adj), k=1)

    def collisions() -> Iterator[Pair]:
        for a, b in zip(*np.nonzero(mask)):
            yield (int(a) + 1, int(b) + 1)

    spec = CollisionSpec(n, 2, relation=lambda t: bool(mask[t[0] - 1, t[1] - 1]), collisions=collisions)
    r = walk_triangle_r(n)
    edge = run_generic_cost_model(session, spec, triangle_model(n), r, require_unique=False)
    if edge is None:
        return None

    session.charge("third-vertex", iceil(math.sqrt(n)) * ilog2(n))
    # 内层放大搜索的多项式小误差折算为一次外层 Bernoulli
    if session.rng(Stream.BERNOULLI).random() >= 1 - 1 / n:
        logger.debug("walk triangle: simulated failure of the amplified inner search")
        return None

    a, b = edge
    c = int(np.flatnonzero(g.adj[a - 1] & g.adj[b - 1])[0]) + 1
    tri = tuple(sorted((a, b, c)))
    if not (query_edge(session, tri[0], tri[1]) and query_edge(session, tri[1], tri[2])
            and query_edge(session, tri[0], tri[2])):
        raise InvariantError(f"Walk triangle emitted {tri}, which failed direct verification")
    return tri


# ---------------------------------------------------------------------------
# H-copy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HPattern:
    """k 个顶点的模式图 H 与其区分顶点 root"""

    h: Graph
    root: int

    def __post_init__(self):
        if self.h.n > COPY_GUARD:
            raise CapabilityError(f"Pattern has {self.h.n} vertices, guard is {COPY_GUARD}")
        if self.h.n <= 3:
            raise DomainError(f"Pattern needs more than 3 vertices, got {self.h.n}")
        if not 1 <= self.root <= self.h.n:
            raise DomainError(f"Root {self.root} is not a vertex of the pattern")
        if self.d < 1:
            raise DomainError("Distinguished vertex must have positive degree")

    @property
    def k(self) -> int:
        return self.h.n

    @cached_property
    def d(self) -> int:
        return self.h.degree(self.root)


def complete_candidate(g: Graph, pattern: HPattern, K: Sequence[int]) -> Optional[Dict[int, int]]:
    """找 v 使 K ∪ {v} 含以 v 为根的 H 拷贝，返回 H 顶点到 G 顶点的映射"""
    members = sorted(int(x) for x in K)
    if len(members) != pattern.k - 1:
        return None
    outside = np.setdiff1d(np.arange(1, g.n + 1), members)
    for v in outside:
        labels = members + [int(v)]
        found = brute_find_copy(g.induced(labels), pattern.h, rooted=(pattern.root, len(labels)))
        if found is not None:
            return {hv: labels[gv - 1] for hv, gv in found.items()}
    return None


def direct_walk_exponent(k: int) -> float:
    """直接当作 k-碰撞求解的基线指数 2 - 2/(k+1)"""
    if k < 1:
        raise DomainError(f"Pattern size must be positive, got {k}")
    return 2 - 2 / (k + 1)


def h_copy_r(n: int, k: int) -> int:
    return clamp_r(n, iceil(n ** (1 - 1 / k)), low=k - 1)


def h_copy(session: OracleSession, pattern: HPattern) -> Optional[Dict[int, int]]:
    """
    (k-1)-碰撞：K 是 H-candidate 当且仅当存在 v 使 K ∪ {v} 含以 v 为根的 H 拷贝
    s(r)=r^2, u(r)=r, 检查按 ceil(sqrt n) ceil(r^{d/(d+1)}) ceil(log n) 计费
    """
    g = session.graph
    if g is None:
        raise DomainError("H-copy needs a graph session")
    n, k, h = g.n, pattern.k, pattern.h
    if n < k:
        logger.debug(f"Graph with n={n} cannot contain a pattern on {k} vertices")
        return None

    def candidates() -> Iterator[Tuple[int, ...]]:
        for mapping in iter_copies(g, h):
            yield tuple(sorted(mapping[x] for x in range(1, k + 1) if x != pattern.root))

    spec = CollisionSpec(
        n, k - 1,
        relation=lambda t: complete_candidate(g, pattern, t) is not None,
        collisions=candidates,
    )
    r = h_copy_r(n, k)
    db = h_copy_model(n, pattern.d)
    K = run_generic_cost_model(session, spec, db, r, require_unique=False)
    if K is None:
        return None

    # 提取根顶点时重做一次数据结构检查
    session.charge("root-vertex", db.charged_costs(r)[2])
    if session.rng(Stream.BERNOULLI).random() >= 1 - 1 / n:
        logger.debug("h-copy: simulated failure of the amplified inner search")
        return None

    mapping = complete_candidate(g, pattern, K)
    if mapping is None:
        raise InvariantError(f"Candidate set {K} has no extending vertex")
    for a, b in h.edges():
        if not query_edge(session, mapping[a], mapping[b]):
            raise InvariantError(f"H-copy mapping {mapping} failed direct verification on ({a}, {b})")
    return mapping


def monotone_property(
    session: OracleSession, certificates: Sequence[HPattern]
) -> Optional[Tuple[int, Dict[int, int]]]:
    """依次对每个 1-证书运行 h_copy；子会话账本逐条并入父会话"""
    if not certificates:
        raise DomainError("Monotone property needs at least one certificate")
    for i, pattern in enumerate(certificates):
        child = session.spawn(i)
        found = h_copy(child, pattern)
        session.exact_queries += child.exact_queries
        session.ledger.extend(child.ledger, prefix=f"cert[{i}]:")
        if found is not None:
            logger.info(f"Certificate {i} (k={pattern.k}) found: {found}")
            return i, found
    return None
