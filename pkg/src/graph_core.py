"""
图与预言机会话
无向简单图、查询计数会话、参考判定（不计费）以及随机实例生成
"""

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from utils.run_utils import (
    CapabilityError,
    DomainError,
    ParseError,
    Stream,
    ThresholdExceeded,
    derive_seed,
    get_logger,
    make_rng,
)

logger = get_logger(__name__)

Pair = Tuple[int, int]
Triangle = Tuple[int, int, int]

COPY_GUARD = 8
FAMILIES = ("erdos_renyi", "planted_triangle", "triangle_free_bipartite", "complete", "c5_blowup")


def _check_vertex(n: int, v: int):
    if not 1 <= int(v) <= n:
        raise DomainError(f"Vertex {v} out of range [1, {n}]")


def _check_pair(n: int, a: int, b: int):
    _check_vertex(n, a)
    _check_vertex(n, b)
    if a == b:
        raise DomainError(f"Pair ({a}, {b}) is not a pair of distinct vertices")


@dataclass(frozen=True, eq=False)
class Graph:
    """无向简单图，顶点编号 1..n，内部用 0-based 布尔矩阵"""

    n: int
    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.shape != (self.n, self.n):
            raise DomainError(f"Adjacency shape {adj.shape} does not match n={self.n}")
        if adj.diagonal().any():
            raise DomainError("Self-loops are not allowed")
        if not np.array_equal(adj, adj.T):
            raise DomainError("Adjacency must be symmetric")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, ~np.eye(n, dtype=bool))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Pair]) -> "Graph":
        adj = np.zeros((n, n), dtype=bool)
        for a, b in edges:
            _check_pair(n, a, b)
            adj[a - 1, b - 1] = adj[b - 1, a - 1] = True
        return cls(n, adj)

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, i + 1) for i in range(1, n)])

    @cached_property
    def rows(self) -> List[int]:
        """每行打包成 Python 整数位集，bit i 对应 0-based 顶点 i"""
        packed = np.packbits(self.adj, axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed]

    @cached_property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.adj)) // 2

    def has_edge(self, a: int, b: int) -> bool:
        _check_pair(self.n, a, b)
        return bool(self.adj[a - 1, b - 1])

    def neighbors(self, v: int) -> np.ndarray:
        _check_vertex(self.n, v)
        return np.flatnonzero(self.adj[v - 1]) + 1

    def degree(self, v: int) -> int:
        _check_vertex(self.n, v)
        return self.rows[v - 1].bit_count()

    def edges(self) -> List[Pair]:
        a, b = np.nonzero(np.triu(self.adj, k=1))
        return [(int(x) + 1, int(y) + 1) for x, y in zip(a, b)]

    def edge_array(self) -> np.ndarray:
        a, b = np.nonzero(np.triu(self.adj, k=1))
        return np.stack([a + 1, b + 1], axis=1)

    def induced(self, vertices: Sequence[int]) -> "Graph":
        idx = np.asarray(vertices, dtype=int) - 1
        return Graph(len(idx), self.adj[np.ix_(idx, idx)])

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n + 1))
        g.add_edges_from(self.edges())
        return g

    def digest(self) -> str:
        h = hashlib.sha256(str(self.n).encode())
        h.update(np.packbits(self.adj).tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adj, other.adj)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KnownGraph:
    """只以边表形式保存的已知图，供大规模 Graph Collision 使用"""

    n: int
    edges: np.ndarray  # (m, 2), 1-based, a < b

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 1 or edges.max() > self.n):
            raise DomainError(f"Known graph edge out of range [1, {self.n}]")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise DomainError("Self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise DomainError("Duplicate edges are not allowed")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_graph(cls, g: Graph) -> "KnownGraph":
        return cls(g.n, g.edge_array())

    @cached_property
    def edge_set(self) -> Set[Pair]:
        return {(int(a), int(b)) for a, b in self.edges}

    def has_edge(self, a: int, b: int) -> bool:
        _check_pair(self.n, a, b)
        return (min(a, b), max(a, b)) in self.edge_set


@dataclass
class CostLedger:
    """计费账本：有序的 (标签, 数量) 列表，可选上限"""

    entries: List[Tuple[str, float]] = field(default_factory=list)
    cap: Optional[float] = None
    _running: float = field(default=0, repr=False)

    def charge(self, label: str, amount: float):
        if amount < 0:
            raise DomainError(f"Negative charge {amount} for {label!r}")
        self.entries.append((label, amount))
        self._running += amount
        logger.debug(f"charge {label}: {amount}")
        if self.cap is not None and self._running > self.cap:
            raise ThresholdExceeded(f"Charged total {self._running} exceeded cap {self.cap} at {label!r}")

    def extend(self, other: "CostLedger", prefix: str = ""):
        for label, amount in other.entries:
            self.charge(f"{prefix}{label}", amount)

    def total(self) -> float:
        return sum(amount for _, amount in self.entries)

    def by_label(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for label, amount in self.entries:
            out[label] = out.get(label, 0) + amount
        return out


class OracleSession:
    """
    一次运行的预言机会话

    持有输入（图或布尔函数）、精确层查询计数器和计费账本；
    一个会话只服务一次运行，并行扫描时每个 (实例, 种子) 各建一个。
    """

    def __init__(
        self,
        graph: Optional[Graph] = None,
        values: Optional[Sequence[int]] = None,
        rng_seed: int = 0,
        cap: Optional[float] = None,
    ):
        if graph is None and values is None:
            raise DomainError("A session needs a graph or a boolean function")
        self.graph = graph
        self.values = None if values is None else np.asarray(values, dtype=bool)
        self.exact_queries = 0
        self.ledger = CostLedger(cap=cap)
        self.rng_seed = int(rng_seed)
        self._rngs: Dict[int, np.random.Generator] = {}

    @property
    def n(self) -> int:
        return self.graph.n if self.graph is not None else len(self.values)

    def rng(self, stream: int) -> np.random.Generator:
        if stream not in self._rngs:
            self._rngs[stream] = make_rng(self.rng_seed, stream)
        return self._rngs[stream]

    def charge(self, label: str, amount: float):
        self.ledger.charge(label, amount)

    def spawn(self, tag: int) -> "OracleSession":
        """同一输入上的子会话，种子由 (rng_seed, tag) 派生"""
        return OracleSession(
            graph=self.graph,
            values=self.values,
            rng_seed=derive_seed(self.rng_seed, Stream.SPAWN, tag),
        )

    @contextmanager
    def unmetered(self):
        """参考计算用：退出时恢复精确层计数器"""
        saved = self.exact_queries
        try:
            yield self
        finally:
            self.exact_queries = saved


def query_edge(session: OracleSession, a: int, b: int) -> int:
    g = session.graph
    if g is None:
        raise DomainError("Session has no graph to probe")
    _check_pair(g.n, a, b)
    session.exact_queries += 1
    return int(g.adj[a - 1, b - 1])


def query_value(session: OracleSession, u: int) -> int:
    if session.values is None:
        raise DomainError("Session has no boolean function to probe")
    _check_vertex(len(session.values), u)
    session.exact_queries += 1
    return int(session.values[u - 1])


# ---------------------------------------------------------------------------
# 参考判定：不触碰会话计数器
# ---------------------------------------------------------------------------


def paths_matrix(adj: np.ndarray) -> np.ndarray:
    """t(G,a,b) 的整矩阵；float32 乘法对 n < 2**24 精确"""
    m = np.asarray(adj, dtype=np.float32)
    return np.rint(m @ m).astype(np.int32)


def two_path_count(g: Graph, a: int, b: int) -> int:
    _check_pair(g.n, a, b)
    return (g.rows[a - 1] & g.rows[b - 1]).bit_count()


def threshold_graph(g: Graph, k: float) -> Set[Pair]:
    """G^<k>: 公共邻居数不超过 k 的点对"""
    paths = paths_matrix(g.adj)
    a, b = np.triu_indices(g.n, k=1)
    keep = paths[a, b] <= k
    return {(int(x) + 1, int(y) + 1) for x, y in zip(a[keep], b[keep])}


def count_triangles(adj: np.ndarray) -> int:
    adj = np.asarray(adj, dtype=bool)
    paths = paths_matrix(adj)
    return int(paths[adj].sum()) // 6


def triangle_count(g: Graph) -> int:
    return count_triangles(g.adj)


def list_triangles(adj: np.ndarray) -> List[Triangle]:
    """全部三角形，升序三元组按字典序排列"""
    adj = np.asarray(adj, dtype=bool)
    out: List[Triangle] = []
    for a, b in zip(*np.nonzero(np.triu(adj, k=1))):
        for c in np.flatnonzero(adj[a] & adj[b]):
            if c > b:
                out.append((int(a) + 1, int(b) + 1, int(c) + 1))
    return sorted(out)


def triangle_edge_mask(adj: np.ndarray) -> np.ndarray:
    """落在某个三角形上的边"""
    adj = np.asarray(adj, dtype=bool)
    return adj & (paths_matrix(adj) > 0)


def brute_find_triangle(g: Graph) -> Optional[Triangle]:
    """字典序最小的三角形"""
    on_triangle = triangle_edge_mask(g.adj)
    if not on_triangle.any():
        return None
    a = int(np.flatnonzero(on_triangle.any(axis=1))[0])
    rows = g.rows
    for b in np.flatnonzero(on_triangle[a]):
        b = int(b)
        if b < a:
            continue
        common = rows[a] & rows[b] & ~((1 << (b + 1)) - 1)
        if common:
            c = (common & -common).bit_length() - 1
            return (a + 1, b + 1, c + 1)
    raise AssertionError("triangle mask and bit rows disagree")


def sample_triangle(adj: np.ndarray, rng: np.random.Generator) -> Optional[Triangle]:
    """均匀抽取一个三角形：按穿过的三角形数给有序边加权，再均匀取第三个顶点"""
    adj = np.asarray(adj, dtype=bool)
    paths = paths_matrix(adj)
    weights = np.where(adj, paths, 0).astype(np.float64).ravel()
    total = weights.sum()
    if total == 0:
        return None
    flat = int(rng.choice(weights.size, p=weights / total))
    a, b = divmod(flat, adj.shape[0])
    common = np.flatnonzero(adj[a] & adj[b])
    c = int(common[rng.integers(len(common))])
    return tuple(sorted((a + 1, b + 1, c + 1)))


def _pattern_networkx(h: Graph, root: Optional[int]) -> nx.Graph:
    gh = h.to_networkx()
    nx.set_node_attributes(gh, False, "root")
    if root is not None:
        gh.nodes[root]["root"] = True
    return gh


def iter_copies(g: Graph, h: Graph, rooted: Optional[Pair] = None) -> Iterator[Dict[int, int]]:
    """
    枚举 H 在 G 中的拷贝（子图单态，不要求诱导）
    rooted=(h_root, g_vertex) 时要求 h_root 映到 g_vertex
    """
    if h.n > COPY_GUARD:
        raise CapabilityError(f"Pattern has {h.n} vertices, guard is {COPY_GUARD}")
    if h.n > g.n:
        return
    gg = g.to_networkx()
    nx.set_node_attributes(gg, False, "root")
    h_root = None
    if rooted is not None:
        h_root, g_vertex = rooted
        _check_vertex(h.n, h_root)
        _check_vertex(g.n, g_vertex)
        gg.nodes[g_vertex]["root"] = True
    gh = _pattern_networkx(h, h_root)
    matcher = isomorphism.GraphMatcher(
        gg, gh, node_match=isomorphism.categorical_node_match("root", False)
    )
    for mapping in matcher.subgraph_monomorphisms_iter():
        yield {hv: gv for gv, hv in sorted(mapping.items())}


def brute_find_copy(g: Graph, h: Graph, rooted: Optional[Pair] = None) -> Optional[Dict[int, int]]:
    return next(iter_copies(g, h, rooted), None)


def is_copy(g: Graph, h: Graph, mapping: Dict[int, int]) -> bool:
    if sorted(mapping) != list(range(1, h.n + 1)) or len(set(mapping.values())) != h.n:
        return False
    return all(g.has_edge(mapping[a], mapping[b]) for a, b in h.edges())


# ---------------------------------------------------------------------------
# 实例生成
# ---------------------------------------------------------------------------


def _symmetric_from_upper(upper: np.ndarray) -> np.ndarray:
    upper = np.triu(upper, k=1)
    return upper | upper.T


def gen_graph(family: str, n: int, seed: int, p: float = 0.5) -> Graph:
    if n < 3:
        raise DomainError(f"Instances need n >= 3, got {n}")
    if not 0 <= p <= 1:
        raise DomainError(f"Edge probability must lie in [0, 1], got {p}")
    rng = make_rng(seed, Stream.INSTANCE)

    if family == "complete":
        return Graph.complete(n)

    if family in ("erdos_renyi", "planted_triangle"):
        adj = _symmetric_from_upper(rng.random((n, n)) < p)
        if family == "planted_triangle":
            a, b, c = rng.choice(n, size=3, replace=False)
            for x, y in ((a, b), (b, c), (a, c)):
                adj[x, y] = adj[y, x] = True
        return Graph(n, adj)

    if family == "triangle_free_bipartite":
        side = np.zeros(n, dtype=bool)
        side[rng.permutation(n)[: n // 2]] = True
        cross = side[:, None] != side[None, :]
        return Graph(n, _symmetric_from_upper((rng.random((n, n)) < p) & cross))

    if family == "c5_blowup":
        # 每个 C5 顶点膨胀成独立集，只连相邻类
        cls = np.empty(n, dtype=int)
        cls[rng.permutation(n)] = np.arange(n) % 5
        diff = (cls[:, None] - cls[None, :]) % 5
        allowed = (diff == 1) | (diff == 4)
        return Graph(n, _symmetric_from_upper((rng.random((n, n)) < p) & allowed))

    raise DomainError(f"Unknown graph family {family!r}, expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# 边表文件
# ---------------------------------------------------------------------------


def _parse_ints(line: str, lineno: int, count: int) -> List[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} integers, got {line!r}", lineno)
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise ParseError(f"non-integer token in {line!r}", lineno)


def _parse_edges(text: str, allow_root: bool) -> Tuple[Graph, Optional[int]]:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty input", 1)
    n, m = _parse_ints(lines[0], 1, 2)
    if n < 1 or m < 0:
        raise ParseError(f"bad header n={n} m={m}", 1)

    root = None
    seen: Set[Pair] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if allow_root and parts[:1] == ["root"]:
            if root is not None:
                raise ParseError("duplicate root line", lineno)
            (root,) = _parse_ints(" ".join(parts[1:]), lineno, 1)
            if not 1 <= root <= n:
                raise ParseError(f"root {root} out of range [1, {n}]", lineno)
            continue
        a, b = _parse_ints(line, lineno, 2)
        if a == b:
            raise ParseError(f"self-loop ({a}, {b})", lineno)
        if not 1 <= a < b <= n:
            raise ParseError(f"edge ({a}, {b}) must satisfy 1 <= a < b <= {n}", lineno)
        if (a, b) in seen:
            raise ParseError(f"duplicate edge ({a}, {b})", lineno)
        seen.add((a, b))

    if len(seen) != m:
        raise ParseError(f"header announces {m} edges, found {len(seen)}", 1)
    if allow_root and root is None:
        raise ParseError("pattern file needs a 'root v' line", len(lines))
    return Graph.from_edges(n, sorted(seen)), root


def parse_edge_list(text: str) -> Graph:
    graph, _ = _parse_edges(text, allow_root=False)
    return graph


def parse_pattern(text: str) -> Tuple[Graph, int]:
    return _parse_edges(text, allow_root=True)


def format_edge_list(g: Graph, root: Optional[int] = None) -> str:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"] + [f"{a} {b}" for a, b in edges]
    if root is not None:
        lines.append(f"root {root}")
    return "\n".join(lines) + "\n"


def read_edge_list(path: Union[str, Path]) -> Graph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def read_pattern(path: Union[str, Path]) -> Tuple[Graph, int]:
    return parse_pattern(Path(path).read_text(encoding="utf-8"))


def write_edge_list(g: Graph, path: Union[str, Path], root: Optional[int] = None):
    Path(path).write_text(format_edge_list(g, root), encoding="utf-8")
    logger.info(f"Wrote graph with n={g.n}, m={g.edge_count} to {path}")
