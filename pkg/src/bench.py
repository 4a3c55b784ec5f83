"""
实验基准
单次运行报告、(n, seed) 网格扫描、log-log 斜率拟合以及精确超几何判定
"""

import hashlib
import json
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import gammaln

from graph_core import Graph, KnownGraph, OracleSession, gen_graph, query_edge
from run_pool import CellStatus, SweepCell, SweepPool
from statevector import safe_grover_exact
from triangle_combinatorial import ComboParams, combinatorial_triangle, theorem1_exponent
from triangle_walk import (
    HPattern,
    graph_collision,
    graph_collision_r,
    h_copy,
    h_copy_r,
    monotone_property,
    planted_graph_collision,
    walk_triangle,
    walk_triangle_r,
)
from utils.run_utils import (
    CapabilityError,
    DomainError,
    HarnessConfig,
    ParseError,
    RunFailed,
    get_logger,
)

logger = get_logger(__name__)

SCHEMA_VERSION = 1
ALGORITHMS = ("combo", "walk", "gc", "hcopy", "monotone", "grover")
SWEEP_ALGORITHMS = ("combo", "walk", "gc")
CSV_COLUMNS = ["algorithm", "n", "seed", "charged_total", "exact_queries", "outcome"]

# 精确层 Grover 在 C(n,2) 个点对上做态矢量模拟
GROVER_MAX_N = 256


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class RunReport:
    """一次运行的输出单元"""

    algorithm: str
    n: int
    seed: int
    params: Dict[str, Any]
    instance: str
    witness: Any = None
    ledger: List[Tuple[str, float]] = field(default_factory=list)
    exact_queries: int = 0
    details: Dict[str, Any] = field(default_factory=dict)
    wall_time_ms: float = 0

    @property
    def outcome(self) -> str:
        return "reject" if self.witness is None else "witness"

    @property
    def charged_total(self) -> float:
        return sum(amount for _, amount in self.ledger)

    @property
    def run_id(self) -> str:
        key = json.dumps(
            _jsonable({"algorithm": self.algorithm, "params": self.params,
                       "seed": self.seed, "instance": self.instance}),
            sort_keys=True,
        )
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "schema": SCHEMA_VERSION,
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "n": self.n,
            "seed": self.seed,
            "params": self.params,
            "instance": self.instance,
            "outcome": self.outcome,
            "witness": self.witness,
            "ledger": {"entries": self.ledger, "total": self.charged_total},
            "exact_queries": self.exact_queries,
            "details": self.details,
            "wall_time_ms": self.wall_time_ms,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _values_digest(known: KnownGraph, values: np.ndarray) -> str:
    h = hashlib.sha256(str(known.n).encode())
    h.update(np.ascontiguousarray(known.edges, dtype=np.int64).tobytes())
    h.update(np.packbits(np.asarray(values, dtype=bool)).tobytes())
    return h.hexdigest()


def _find_edge_exact(session: OracleSession, grover_c: float) -> Optional[Tuple[int, int]]:
    n = session.graph.n
    if n > GROVER_MAX_N:
        raise CapabilityError(f"Exact Grover run limited to n <= {GROVER_MAX_N}, got {n}")
    pairs = [(a + 1, b + 1) for a, b in combinations(range(n), 2)]
    return safe_grover_exact(session, pairs, lambda s, p: query_edge(s, *p), grover_c)


def run_algorithm(
    name: str,
    n: int,
    seed: int,
    config: Optional[HarnessConfig] = None,
    graph: Optional[Graph] = None,
    known: Optional[KnownGraph] = None,
    values: Optional[Sequence[int]] = None,
    patterns: Sequence[HPattern] = (),
    timing: bool = False,
) -> RunReport:
    """
    运行一个算法并生成报告

    Args:
        name: combo / walk / gc / hcopy / monotone / grover
        n: 顶点数；给定 graph 或 known 时以实例为准
        seed: 会话种子；未给实例时也作为实例种子
        config: 实验配置（ε, δ, ε', c0, grover_c, 图族）
        graph: 图算法的输入图
        known, values: Graph Collision 的已知图与布尔函数
        patterns: hcopy 用第一个模式，monotone 用全部
        timing: 记录墙钟时间（报告将不再逐字节可复现）
    """
    if name not in ALGORITHMS:
        raise DomainError(f"Unknown algorithm {name!r}, expected one of {ALGORITHMS}")
    config = config or HarnessConfig()
    params: Dict[str, Any] = {"grover_c": config.grover_c}
    details: Dict[str, Any] = {}

    if name == "gc":
        if known is None:
            known, values = planted_graph_collision(n, seed)
        elif values is None:
            raise DomainError("Graph collision on a given known graph needs f values")
        values = np.asarray(values, dtype=bool)
        session = OracleSession(values=values, rng_seed=seed)
        instance = _values_digest(known, values)
        n = known.n
        params["r"] = graph_collision_r(n)
    else:
        if graph is None:
            graph = gen_graph(config.family, n, seed, config.p)
        session = OracleSession(graph=graph, rng_seed=seed)
        instance = graph.digest()
        n = graph.n

    if name in ("hcopy", "monotone") and not patterns:
        raise DomainError(f"Algorithm {name!r} needs at least one pattern")

    start = time.perf_counter()
    if name == "combo":
        combo = ComboParams(config.epsilon, config.delta, config.epsilon_prime, config.c0, config.grover_c)
        params.update(combo.to_dict())
        params["exponent"] = theorem1_exponent(config.epsilon, config.delta, config.epsilon_prime)
        outcome = combinatorial_triangle(session, combo)
        witness = outcome.triangle
        details = {k: v for k, v in outcome.to_dict().items() if k != "triangle"}
    elif name == "walk":
        params["r"] = walk_triangle_r(n)
        witness = walk_triangle(session)
    elif name == "gc":
        witness = graph_collision(session, known)
    elif name == "hcopy":
        pattern = patterns[0]
        params.update({"k": pattern.k, "d": pattern.d, "r": h_copy_r(n, pattern.k)})
        witness = h_copy(session, pattern)
    elif name == "monotone":
        params["certificates"] = [{"k": p.k, "d": p.d} for p in patterns]
        found = monotone_property(session, patterns)
        witness = None if found is None else {"certificate": found[0], "mapping": found[1]}
    else:
        params["N"] = n * (n - 1) // 2
        witness = _find_edge_exact(session, config.grover_c)
    elapsed = (time.perf_counter() - start) * 1000

    report = RunReport(
        algorithm=name,
        n=n,
        seed=seed,
        params=params,
        instance=instance,
        witness=witness,
        ledger=list(session.ledger.entries),
        exact_queries=session.exact_queries,
        details=details,
        wall_time_ms=round(elapsed, 3) if timing else 0,
    )
    logger.info(
        f"{name} n={n} seed={seed}: {report.outcome}, charged {report.charged_total}, "
        f"exact queries {report.exact_queries}"
    )
    return report


# ---------------------------------------------------------------------------
# 扫描与拟合
# ---------------------------------------------------------------------------


def sweep(
    algorithm: str,
    grid: Sequence[int],
    seeds: int,
    config: Optional[HarnessConfig] = None,
    pool: Optional[SweepPool] = None,
    csv_path: Optional[Union[str, Path]] = None,
    allow_partial: bool = False,
) -> pd.DataFrame:
    """
    在 grid × range(seeds) 上并发运行，结果按 (n, seed) 排序

    有单元格失败时抛出 RunFailed，且不写 CSV；allow_partial=True 时记日志后跳过失败单元格
    """
    if algorithm not in SWEEP_ALGORITHMS:
        raise DomainError(f"Sweeps support {SWEEP_ALGORITHMS}, got {algorithm!r}")
    if seeds < 1 or not grid:
        raise DomainError("A sweep needs a non-empty grid and at least one seed")
    config = config or HarnessConfig()
    pool = pool or SweepPool(config.threads)
    cells = [SweepCell(algorithm, int(n), seed) for n in grid for seed in range(seeds)]
    done = pool.run(cells, lambda cell: run_algorithm(cell.algorithm, cell.n, cell.seed, config))
    failed = [cell for cell in done if cell.status is not CellStatus.DONE]
    for cell in failed:
        logger.warning(f"Failed cell n={cell.n} seed={cell.seed}: {cell.error}")
    if failed and not allow_partial:
        raise RunFailed(
            f"Sweep {algorithm}: {len(failed)} of {len(cells)} cells failed, stats {pool.get_stats()}"
        )

    rows = []
    for cell in done:
        if cell.status is not CellStatus.DONE:
            continue
        report: RunReport = cell.result
        rows.append({
            "algorithm": algorithm,
            "n": report.n,
            "seed": report.seed,
            "charged_total": report.charged_total,
            "exact_queries": report.exact_queries,
            "outcome": report.outcome,
        })
    table = pd.DataFrame(rows, columns=CSV_COLUMNS)
    logger.info(f"Sweep {algorithm}: {len(table)} of {len(cells)} cells, stats {pool.get_stats()}")
    if csv_path is not None:
        write_sweep_csv(table, csv_path)
    return table


def write_sweep_csv(table: pd.DataFrame, path: Union[str, Path]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table[CSV_COLUMNS].to_csv(path, index=False)
    logger.info(f"Sweep CSV saved to {path}")


def read_sweep_csv(path: Union[str, Path]) -> pd.DataFrame:
    table = pd.read_csv(path)
    missing = [c for c in CSV_COLUMNS if c not in table.columns]
    if missing:
        raise ParseError(f"missing columns {missing}", 1)
    for column in ("n", "seed", "charged_total", "exact_queries"):
        numeric = pd.to_numeric(table[column], errors="coerce")
        bad = numeric.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"non-numeric {column} value {table[column].iloc[row]!r}", row + 2)
        table[column] = numeric
    return table


@dataclass
class ScalingFit:
    """(log2 n, log2 cost) 上的最小二乘直线"""

    points: List[Tuple[float, float]]
    slope: float
    intercept: float
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": [list(p) for p in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
        }


def fit_slope(points: Sequence[Tuple[float, float]]) -> ScalingFit:
    pts = [(float(n), float(cost)) for n, cost in points]
    if len({n for n, _ in pts}) < 3:
        raise DomainError("A slope fit needs at least 3 distinct n values")
    if any(n <= 0 or cost <= 0 for n, cost in pts):
        raise DomainError("Log-log fit needs positive n and cost")
    x = np.log2([n for n, _ in pts])
    y = np.log2([cost for _, cost in pts])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ScalingFit(pts, float(slope), float(intercept), residual)


def fit_sweep(table: pd.DataFrame, algorithm: Optional[str] = None) -> Dict[str, ScalingFit]:
    fits = {}
    for name, group in table.groupby("algorithm", sort=True):
        if algorithm is not None and name != algorithm:
            continue
        fits[name] = fit_slope(list(zip(group["n"], group["charged_total"])))
        logger.info(f"Fitted {name}: slope {fits[name].slope:.4f} over {len(group)} points")
    if algorithm is not None and algorithm not in fits:
        raise DomainError(f"No rows for algorithm {algorithm!r}")
    return fits


# ---------------------------------------------------------------------------
# X ∩ Y = ∅ 的精确概率
# ---------------------------------------------------------------------------


def _log_comb(a: int, b: int) -> float:
    return float(gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1))


def log_hypergeom_disjoint(n: int, p: float, q: float) -> float:
    """log C(n(1-p), nq) / C(n, nq)，pn 与 qn 取最近整数"""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if p < 0 or q < 0:
        raise DomainError(f"Densities must be non-negative, got p={p}, q={q}")
    if p + q >= 1:
        raise DomainError(f"Need p + q < 1, got p={p}, q={q}")
    x, y = int(round(p * n)), int(round(q * n))
    if y > n - x:
        return float("-inf")
    return _log_comb(n - x, y) - _log_comb(n, y)


def hypergeom_disjoint(n: int, p: float, q: float) -> float:
    return float(np.exp(log_hypergeom_disjoint(n, p, q)))


def useful_envelope(n: int, p: float, q: float, slack: float = 2.0) -> float:
    """|log 精确值 - n log(1-pq)| 的允许上界 slack * n (p^3 + q^3 + 1/n)"""
    return slack * n * (p ** 3 + q ** 3 + 1 / n)


# ---------------------------------------------------------------------------
# 文件
# ---------------------------------------------------------------------------


def read_values(path: Union[str, Path]) -> np.ndarray:
    """布尔函数文件：以空白分隔的 0/1"""
    values = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        for token in line.split():
            if token not in ("0", "1"):
                raise ParseError(f"expected 0 or 1, got {token!r}", lineno)
            values.append(token == "1")
    if not values:
        raise ParseError("empty value file", 1)
    return np.array(values, dtype=bool)


def save_report(report: RunReport, filename: Union[str, Path], readable: bool = True):
    """保存运行报告"""
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding="utf-8")
    logger.info(f"Run report saved to {path}")

    # 同时保存可读版本
    if readable:
        readable_path = path.with_name(path.stem + "_readable.txt")
        readable_path.write_text(generate_readable_report(report.to_dict()), encoding="utf-8")
        logger.info(f"Readable report saved to {readable_path}")


def generate_readable_report(report: Dict[str, Any]) -> str:
    """生成可读的运行报告"""
    params = "\n".join(f"- {k}: {v}" for k, v in sorted(report["params"].items()))
    readable = f"""
Query Complexity Run Report
===========================

Run:
- Run ID: {report['run_id']}
- Algorithm: {report['algorithm']}
- n: {report['n']}
- Seed: {report['seed']}
- Instance: {report['instance']}

Parameters:
{params}

Outcome:
- Result: {report['outcome']}
- Witness: {report['witness']}
- Exact Queries: {report['exact_queries']}
- Charged Total: {report['ledger']['total']}
- Ledger Entries: {len(report['ledger']['entries'])}

Charges by Label:
"""
    totals: Dict[str, float] = {}
    for label, amount in report["ledger"]["entries"]:
        totals[label.split("(")[0]] = totals.get(label.split("(")[0], 0) + amount
    for label, amount in sorted(totals.items(), key=lambda kv: -kv[1]):
        readable += f"- {label}: {amount}\n"

    if report.get("details"):
        readable += "\nDetails:\n"
        for key, value in sorted(report["details"].items()):
            readable += f"- {key}: {value}\n"
    return readable
