"""
精确态矢量模拟
扩散算子、Grover 迭代、Safe Grover Search（精确模式与计费模式）
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from graph_core import OracleSession
from utils.run_utils import DomainError, Stream, get_logger, iceil

logger = get_logger(__name__)

# Θ(c log N) 中的常数 c，记录进每份运行报告
SAFE_GROVER_C = 2.0
NORM_TOL = 1e-10


@dataclass
class StateVector:
    amp: np.ndarray

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=np.complex128)

    @property
    def basis_size(self) -> int:
        return len(self.amp)

    @classmethod
    def uniform(cls, size: int, support: Optional[Sequence[int]] = None) -> "StateVector":
        amp = np.zeros(size, dtype=np.complex128)
        idx = np.arange(size) if support is None else np.asarray(support)
        amp[idx] = 1 / math.sqrt(len(idx))
        return cls(amp)

    @classmethod
    def basis(cls, size: int, index: int) -> "StateVector":
        amp = np.zeros(size, dtype=np.complex128)
        amp[index] = 1
        return cls(amp)

    @classmethod
    def random(cls, size: int, rng: np.random.Generator) -> "StateVector":
        amp = rng.normal(size=size) + 1j * rng.normal(size=size)
        return cls(amp / np.linalg.norm(amp))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.amp.copy())


@dataclass(frozen=True)
class GroverParams:
    N: int
    marked: frozenset
    iterations: int = 0
    c: float = SAFE_GROVER_C

    def __post_init__(self):
        if self.N < 1:
            raise DomainError(f"Domain size must be positive, got {self.N}")
        if any(not 0 <= i < self.N for i in self.marked):
            raise DomainError("Marked indices must lie in the domain")

    def distribution(self) -> np.ndarray:
        """从均匀态出发迭代 iterations 次后的测量分布"""
        probs = _grover_state(self.N, sorted(self.marked), self.iterations).probabilities()
        return probs / probs.sum()


def diffusion(state: StateVector, T: Sequence[int]) -> StateVector:
    """对 T 上的均匀叠加做反射，T 之外的振幅不变"""
    T = np.asarray(T, dtype=np.int64)
    if T.size == 0:
        raise DomainError("Diffusion over an empty set")
    if np.unique(T).size != T.size:
        raise DomainError("Diffusion set has repeated indices")
    amp = state.amp.copy()
    sub = amp[T]
    amp[T] = -sub + 2 * sub.mean()
    return StateVector(amp)


def phase_flip(state: StateVector, marked: Sequence[int]) -> StateVector:
    amp = state.amp.copy()
    amp[np.asarray(marked, dtype=np.int64)] *= -1
    return StateVector(amp)


def grover_closed_form(N: int, m: int, j: int) -> float:
    theta = math.asin(math.sqrt(m / N))
    return math.sin((2 * j + 1) * theta) ** 2


def _grover_state(N: int, marked: Sequence[int], j: int) -> StateVector:
    state = StateVector.uniform(N)
    everything = np.arange(N)
    for _ in range(j):
        state = diffusion(phase_flip(state, marked), everything)
    return state


def grover_success_prob(N: int, m: int, j: int) -> float:
    if N < 1 or m < 0 or m > N or j < 0:
        raise DomainError(f"Invalid Grover parameters N={N}, m={m}, j={j}")
    if m == 0:
        return 0.0
    state = _grover_state(N, np.arange(m), j)
    return float(state.probabilities()[:m].sum())


def grover_schedule(N: int, c: float = SAFE_GROVER_C) -> List[Tuple[int, int]]:
    """
    重复调度：ceil(c*log2 N) 次，第 i 次假设 m = 2**(i mod (floor(log2 N)+1)) 个标记项
    返回 [(m_hat, iterations), ...]
    """
    if N < 1:
        raise DomainError(f"Domain size must be positive, got {N}")
    repetitions = max(1, iceil(c * math.log2(N)))
    levels = int(math.floor(math.log2(N))) + 1
    schedule = []
    for i in range(repetitions):
        m_hat = 2 ** (i % levels)
        theta = math.asin(math.sqrt(m_hat / N))
        schedule.append((m_hat, int(math.floor(math.pi / (4 * theta)))))
    return schedule


Predicate = Callable[[OracleSession, Any], Union[bool, int]]


def safe_grover_exact(
    session: OracleSession,
    domain: Sequence[Any],
    predicate: Predicate,
    c: float = SAFE_GROVER_C,
) -> Optional[Any]:
    """
    精确模拟的 Safe Grover Search
    谓词通过 query_edge 探测；抽到的候选项再用直接探测验证，
    因此永远不会返回未标记项。无标记项时返回 None（拒绝）。
    """
    if len(domain) == 0:
        raise DomainError("Safe Grover Search over an empty domain")
    N = len(domain)

    # 制表求预言机：不计入计数器，只记录单次调用的探测数
    probes_per_call = 0
    marks = np.zeros(N, dtype=bool)
    with session.unmetered():
        for i, item in enumerate(domain):
            before = session.exact_queries
            marks[i] = bool(predicate(session, item))
            probes_per_call = max(probes_per_call, session.exact_queries - before)
    marked = frozenset(int(i) for i in np.flatnonzero(marks))

    rng = session.rng(Stream.GROVER)
    cache = {}
    for m_hat, iterations in grover_schedule(N, c):
        if iterations not in cache:
            cache[iterations] = GroverParams(N, marked, iterations, c).distribution()
        session.exact_queries += iterations * probes_per_call
        idx = int(rng.choice(N, p=cache[iterations]))
        if predicate(session, domain[idx]):
            logger.debug(f"Safe Grover accepted item {idx} after {iterations} iterations (m_hat={m_hat})")
            return domain[idx]
    return None


@dataclass(frozen=True)
class LazyMarked:
    """只知道大小、能均匀抽样的标记集合（避免显式列举）"""

    count: int
    draw: Callable[[np.random.Generator], Any]

    def __len__(self) -> int:
        return self.count


def grover_charge(N: int, c: float = SAFE_GROVER_C) -> int:
    return iceil(c * math.sqrt(N) * math.log2(max(N, 2)))


def safe_grover_charged(
    session: OracleSession,
    N: int,
    marked: Union[Sequence[Any], LazyMarked],
    c: float = SAFE_GROVER_C,
    label: str = "grover",
) -> Optional[Any]:
    """计费模式：按公式记账，成功与否用 Bernoulli(1 - max(N,2)^-c) 抽取"""
    if N < 1:
        raise DomainError(f"Domain size must be positive, got {N}")
    session.charge(label, grover_charge(N, c))
    if len(marked) == 0:
        return None
    rng = session.rng(Stream.BERNOULLI)
    if rng.random() >= 1 - max(N, 2) ** (-c):
        logger.debug(f"{label}: simulated Grover failure (N={N})")
        return None
    if isinstance(marked, LazyMarked):
        return marked.draw(rng)
    return marked[int(rng.integers(len(marked)))]
