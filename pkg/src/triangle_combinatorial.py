"""
组合三角形算法（计费模型）
邻域扫描、度数假设检验、Classification、T 与 E 上的搜索，以及整体流程
"""

import math
from dataclasses import asdict, dataclass
from enum import Enum
from math import comb
from typing import Any, Dict, Iterable, Optional, Set, Union

import numpy as np
from scipy import sparse

from graph_core import (
    Graph,
    OracleSession,
    Pair,
    Triangle,
    count_triangles,
    paths_matrix,
    query_edge,
    sample_triangle,
)
from statevector import SAFE_GROVER_C, LazyMarked, grover_charge, safe_grover_charged
from utils.run_utils import (
    DomainError,
    InvariantError,
    Stream,
    ThresholdExceeded,
    get_logger,
    iceil,
    ilog2,
)

logger = get_logger(__name__)

PairSet = Union[np.ndarray, Iterable[Pair]]


class Hypothesis(Enum):
    """度数假设"""
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class ComboParams:
    epsilon: float = 3 / 7
    delta: float = 1 / 7
    epsilon_prime: float = 1 / 7
    c0: float = 8.0
    grover_c: float = SAFE_GROVER_C
    threshold_cap: Optional[float] = None

    def __post_init__(self):
        for name in ("epsilon", "delta", "epsilon_prime"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise DomainError(f"{name} must lie in (0, 1), got {value}")
        if self.c0 <= 0 or self.grover_c <= 0:
            raise DomainError("c0 and grover_c must be positive")

    def cap_for(self, n: int) -> float:
        if self.threshold_cap is not None:
            return self.threshold_cap
        return combo_threshold_cap(n, self)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Partition:
    """Classification 的结果；找到三角形时 triangle 非空，T/E 为中途状态"""

    T: np.ndarray
    E: np.ndarray
    low_steps: int = 0
    high_steps: int = 0
    triangle: Optional[Triangle] = None

    def pairs(self, which: str) -> Set[Pair]:
        mask = {"T": self.T, "E": self.E}[which]
        a, b = np.nonzero(np.triu(mask, k=1))
        return {(int(x) + 1, int(y) + 1) for x, y in zip(a, b)}


@dataclass
class ComboOutcome:
    triangle: Optional[Triangle] = None
    found_in: Optional[str] = None
    sample_size: int = 0
    low_steps: int = 0
    high_steps: int = 0
    gprime_size: int = 0
    t_T: int = 0
    T_size: int = 0
    E_size: int = 0
    E_and_G: int = 0
    threshold_abort: bool = False

    @property
    def rejected(self) -> bool:
        return self.triangle is None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def sample_size(n: int, epsilon: float) -> int:
    return min(n, iceil(4 * n ** epsilon * math.log2(n)))


def hypothesis_rounds(n: int, c0: float) -> int:
    return max(1, iceil(c0 * math.log2(n)))


def hypothesis_samples(n: int, delta: float) -> int:
    return iceil(n ** delta)


def combo_threshold_cap(n: int, params: ComboParams) -> float:
    """正确执行下的解析最大计费，再乘 4"""
    c = params.grover_c
    scan = (n - 1) + grover_charge(max(1, comb(n - 1, 2)), c)
    hypothesis = hypothesis_rounds(n, params.c0) * hypothesis_samples(n, params.delta)
    pairs = comb(n, 2)
    total = (
        sample_size(n, params.epsilon) * scan
        + 2 * n * (hypothesis + scan)
        + grover_charge(max(1, comb(n, 3)), c)
        + iceil(math.sqrt(pairs)) * ilog2(n)
        + iceil(math.sqrt(n * pairs)) * ilog2(n)
    )
    return 4 * total


def theorem1_exponent(epsilon: float, delta: float, epsilon_prime: float) -> float:
    return max(
        1 + epsilon,
        1 + delta + epsilon_prime,
        (3 - epsilon_prime) / 2,
        (3 - min(delta, epsilon - delta - epsilon_prime)) / 2,
    )


def _as_mask(n: int, pairs: PairSet) -> np.ndarray:
    if isinstance(pairs, np.ndarray):
        mask = np.array(pairs, dtype=bool)
        if mask.shape != (n, n):
            raise DomainError(f"Pair mask shape {mask.shape} does not match n={n}")
        if mask.diagonal().any() or not np.array_equal(mask, mask.T):
            raise DomainError("Pair mask must be symmetric with an empty diagonal")
        return mask
    mask = np.zeros((n, n), dtype=bool)
    for a, b in pairs:
        if a == b or not (1 <= a <= n and 1 <= b <= n):
            raise DomainError(f"({a}, {b}) is not a pair of [1, {n}]")
        mask[a - 1, b - 1] = mask[b - 1, a - 1] = True
    return mask


def _pair_count(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask)) // 2


def _require_graph(session: OracleSession) -> Graph:
    if session.graph is None:
        raise DomainError("Triangle search needs a graph session")
    return session.graph


def scan_vertex(
    session: OracleSession,
    v: int,
    c: float = SAFE_GROVER_C,
    neighbourhood_known: bool = False,
) -> Optional[Triangle]:
    """
    经典扫描 v 的全部关联边（n-1 次），再在 ν(v)^2 上做 Safe Grover 找 G 的边
    返回 v 诱导的三角形，None 表示确认 G ⊆ [n]^2 \\ ν(v)^2
    """
    g = _require_graph(session)
    if not neighbourhood_known:
        session.charge(f"lemma-trivi({v})", g.n - 1)
    nbrs = g.neighbors(v)
    inside = np.triu(g.adj[np.ix_(nbrs - 1, nbrs - 1)], k=1)
    count = int(np.count_nonzero(inside))

    def draw(rng: np.random.Generator) -> Triangle:
        a, b = np.nonzero(inside)
        i = int(rng.integers(len(a)))
        return tuple(sorted((int(v), int(nbrs[a[i]]), int(nbrs[b[i]]))))

    N = max(1, comb(len(nbrs), 2))
    return safe_grover_charged(session, N, LazyMarked(count, draw), c, label=f"grover:lemma-trivi({v})")


def degree_hypothesis(session: OracleSession, v: int, delta: float, c0: float) -> Hypothesis:
    """K 轮、每轮 ceil(n^delta) 个 v×[n] 中的候选；计数 C < K/2 时接受低度数假设"""
    g = _require_graph(session)
    n = g.n
    K = hypothesis_rounds(n, c0)
    s = hypothesis_samples(n, delta)
    session.charge(f"hypothesis({v})", K * s)
    samples = session.rng(Stream.SAMPLE).integers(0, n, size=(K, s))
    hits = int(g.adj[v - 1, samples].any(axis=1).sum())
    return Hypothesis.LOW if hits < K / 2 else Hypothesis.HIGH


def _remove_pairs(gp: np.ndarray, paths: np.ndarray, batch: np.ndarray) -> np.ndarray:
    """从 G' 删掉对称批 B，并增量更新 t(G',.,.): (G-B)^2 = G^2 - (G-B)B - B(G-B) - B^2"""
    gp &= ~batch
    if np.count_nonzero(batch) * 8 > batch.size:
        return paths_matrix(gp)
    b = sparse.csr_matrix(batch.astype(np.int32))
    bg = np.asarray(b @ gp.astype(np.int32))
    return paths - (bg + bg.T + (b @ b).toarray()).astype(np.int32)


def _star(gp: np.ndarray, v: int) -> np.ndarray:
    batch = np.zeros_like(gp)
    batch[v] = gp[v]
    batch[:, v] = gp[:, v]
    return batch


def check_triangle_bound(T: np.ndarray, epsilon_prime: float) -> int:
    """t(T) <= C(n,2) n^(1-ε')，违反时抛 InvariantError"""
    n = T.shape[0]
    t_T = count_triangles(T)
    bound = comb(n, 2) * n ** (1 - epsilon_prime)
    if t_T > bound:
        raise InvariantError(f"t(T)={t_T} exceeds C(n,2)*n^(1-eps')={bound:.1f}")
    return t_T


def classify(
    session: OracleSession,
    gprime: PairSet,
    delta: float,
    epsilon_prime: float,
    c0: float = 8.0,
    grover_c: float = SAFE_GROVER_C,
    searched: Optional[Set[int]] = None,
) -> Partition:
    """
    Classification(G', δ, ε')
    searched 中的顶点已经扫描过邻域并搜索过 ν(v)^2，高度数分支不再重复计费
    """
    g = _require_graph(session)
    n = g.n
    gp = _as_mask(n, gprime).copy()
    T = np.zeros_like(gp)
    E = np.zeros_like(gp)
    searched = set() if searched is None else searched
    part = Partition(T, E)
    if not gp.any():
        return part

    tau = n ** (1 - epsilon_prime)
    paths = paths_matrix(gp)
    while gp.any():
        while True:
            drain = gp & (paths < tau)
            if not drain.any():
                break
            T |= drain
            paths = _remove_pairs(gp, paths, drain)
        if not gp.any():
            break

        v = int(np.flatnonzero(gp.any(axis=1))[0])
        if degree_hypothesis(session, v + 1, delta, c0) is Hypothesis.LOW:
            part.low_steps += 1
            batch = _star(gp, v)
        else:
            part.high_steps += 1
            if v + 1 not in searched:
                found = scan_vertex(session, v + 1, grover_c)
                searched.add(v + 1)
                if found is not None:
                    part.triangle = found
                    logger.info(f"Classification found triangle {found} at high-degree vertex {v + 1}")
                    return part
            batch = gp & np.outer(g.adj[v], gp[v])
            batch |= batch.T
            if not batch.any():
                batch = _star(gp, v)
        E |= batch
        paths = _remove_pairs(gp, paths, batch)

    check_triangle_bound(T, epsilon_prime)
    logger.debug(
        f"Classification done: |T|={_pair_count(T)}, |E|={_pair_count(E)}, "
        f"low={part.low_steps}, high={part.high_steps}"
    )
    return part


def search_T(
    session: OracleSession,
    T: PairSet,
    epsilon_prime: Optional[float] = None,
    c: float = SAFE_GROVER_C,
) -> Optional[Triangle]:
    """在 T 的全部三角形上做 Safe Grover，标记为三边都在 G 中的三角形"""
    g = _require_graph(session)
    T = _as_mask(g.n, T)
    t_T = check_triangle_bound(T, epsilon_prime) if epsilon_prime is not None else count_triangles(T)
    inside = T & g.adj
    marked = LazyMarked(count_triangles(inside), lambda rng: sample_triangle(inside, rng))
    return safe_grover_charged(session, max(1, t_T), marked, c, label="search-T")


def search_E(session: OracleSession, E: PairSet) -> Optional[Triangle]:
    """与 E 相交的三角形；计费 ceil(sqrt|E|)ceil(log n) + ceil(sqrt(n max(1,|G∩E|)))ceil(log n)"""
    g = _require_graph(session)
    n = g.n
    E = _as_mask(n, E)
    size = _pair_count(E)
    if size == 0:
        return None
    in_graph = E & g.adj
    log_n = ilog2(n)
    session.charge(
        "lemma-many",
        iceil(math.sqrt(size)) * log_n + iceil(math.sqrt(n * max(1, _pair_count(in_graph)))) * log_n,
    )
    candidates = np.triu(in_graph & (paths_matrix(g.adj) > 0), k=1)
    if not candidates.any():
        return None
    rng = session.rng(Stream.BERNOULLI)
    if rng.random() >= 1 - 1 / n:
        logger.debug("search-E: simulated amplitude amplification failure")
        return None
    a, b = np.nonzero(candidates)
    i = int(rng.integers(len(a)))
    third = int(np.flatnonzero(g.adj[a[i]] & g.adj[b[i]])[0])
    return tuple(sorted((int(a[i]) + 1, int(b[i]) + 1, third + 1)))


def sample_cover(g: Graph, vertices: Iterable[int]) -> np.ndarray:
    """G' = [n]^2 \\ ∪ ν(v_i)^2"""
    idx = np.asarray(list(vertices), dtype=int) - 1
    rows = g.adj[idx].astype(np.float32)
    covered = (rows.T @ rows) > 0
    np.fill_diagonal(covered, True)
    return ~covered


def lemma3_event(g: Graph, gprime: np.ndarray, epsilon: float) -> bool:
    """G' ⊆ G^<n^(1-ε)>"""
    if not gprime.any():
        return True
    paths = paths_matrix(g.adj)
    return bool((paths[gprime] <= g.n ** (1 - epsilon)).all())


def verify_triangle(session: OracleSession, tri: Triangle) -> bool:
    a, b, c = tri
    return bool(query_edge(session, a, b) and query_edge(session, b, c) and query_edge(session, a, c))


def _run_steps(session: OracleSession, params: ComboParams, out: ComboOutcome) -> Optional[Triangle]:
    g = session.graph
    n = g.n
    k = sample_size(n, params.epsilon)
    out.sample_size = k
    sampled = [int(v) + 1 for v in session.rng(Stream.SAMPLE).choice(n, size=k, replace=False)]

    for v in sampled:
        session.charge(f"lemma-trivi({v})", n - 1)
    for v in sampled:
        found = scan_vertex(session, v, params.grover_c, neighbourhood_known=True)
        if found is not None:
            out.found_in = "neighbourhood"
            return found

    gprime = sample_cover(g, sampled)
    out.gprime_size = _pair_count(gprime)
    part = classify(
        session, gprime, params.delta, params.epsilon_prime, params.c0, params.grover_c, set(sampled)
    )
    out.low_steps, out.high_steps = part.low_steps, part.high_steps
    if part.triangle is not None:
        out.found_in = "classification"
        return part.triangle

    out.T_size, out.E_size = _pair_count(part.T), _pair_count(part.E)
    out.E_and_G = _pair_count(part.E & g.adj)
    out.t_T = count_triangles(part.T)
    found = search_T(session, part.T, params.epsilon_prime, params.grover_c)
    if found is not None:
        out.found_in = "search-T"
        return found
    found = search_E(session, part.E)
    if found is not None:
        out.found_in = "search-E"
    return found


def combinatorial_triangle(session: OracleSession, params: ComboParams = ComboParams()) -> ComboOutcome:
    """Combinatorial Algorithm(ε, δ, ε')：返回已用 3 次探测验证的三角形，或拒绝"""
    g = _require_graph(session)
    out = ComboOutcome()
    ledger = session.ledger
    saved_cap = ledger.cap
    ledger.cap = ledger.total() + params.cap_for(g.n)
    try:
        found = _run_steps(session, params, out)
    except ThresholdExceeded as e:
        logger.warning(f"Combinatorial algorithm stopped by its counter: {e}")
        out.threshold_abort = True
        found = None
    finally:
        ledger.cap = saved_cap

    if found is not None:
        if not verify_triangle(session, found):
            raise InvariantError(f"Emitted triple {found} failed direct verification")
        out.triangle = found
    logger.info(
        f"Combinatorial algorithm on n={g.n}: "
        f"{'triangle ' + str(out.triangle) if out.triangle else 'reject'}, charged {ledger.total()}"
    )
    return out
