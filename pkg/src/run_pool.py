"""
扫描任务池
在 (n, seed) 网格上并发执行独立运行，每个单元格自带会话；结果按 (n, seed) 排序返回
"""

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

from utils.run_utils import get_logger

logger = get_logger(__name__)


class CellStatus(Enum):
    """单元格状态"""
    PENDING = "pending"     # 等待
    RUNNING = "running"     # 运行中
    DONE = "done"           # 完成
    ERROR = "error"         # 错误


@dataclass
class SweepCell:
    """一个 (算法, n, seed) 运行单元"""
    algorithm: str
    n: int
    seed: int
    status: CellStatus = CellStatus.PENDING
    result: Any = None
    error: Optional[str] = None
    start_time: float = 0
    end_time: float = 0

    def mark_running(self):
        self.status = CellStatus.RUNNING
        self.start_time = time.time()

    def mark_done(self, result: Any):
        self.status = CellStatus.DONE
        self.result = result
        self.end_time = time.time()

    def mark_error(self, error: Exception):
        self.status = CellStatus.ERROR
        self.error = f"{type(error).__name__}: {error}"
        self.end_time = time.time()


def resolve_threads(threads: Optional[int] = None) -> int:
    # 显式参数优先于环境变量
    if threads:
        return max(1, threads)
    env = os.getenv("QTRI_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class SweepPool:
    """扫描池管理器"""

    def __init__(self, max_workers: Optional[int] = None):
        """
        初始化扫描池

        Args:
            max_workers: 并发线程数，None 时读取 QTRI_THREADS 或 CPU 数
        """
        self.max_workers = resolve_threads(max_workers)

        # 线程安全的锁
        self._lock = threading.Lock()

        # 统计
        self.total_cells = 0
        self.completed_cells = 0
        self.failed_cells = 0

        logger.info(f"Sweep pool initialized with {self.max_workers} workers")

    def _run_cell(self, cell: SweepCell, fn: Callable[[SweepCell], Any]) -> SweepCell:
        cell.mark_running()
        try:
            cell.mark_done(fn(cell))
            with self._lock:
                self.completed_cells += 1
        except Exception as e:
            logger.error(f"Cell {cell.algorithm} n={cell.n} seed={cell.seed} failed: {e}")
            cell.mark_error(e)
            with self._lock:
                self.failed_cells += 1
        return cell

    def run(self, cells: Sequence[SweepCell], fn: Callable[[SweepCell], Any]) -> List[SweepCell]:
        """并发执行全部单元格，返回按 (n, seed) 排序的结果，与完成顺序无关"""
        with self._lock:
            self.total_cells += len(cells)
        done: List[SweepCell] = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [executor.submit(self._run_cell, cell, fn) for cell in cells]
            for future in as_completed(futures):
                cell = future.result()
                done.append(cell)
                logger.debug(f"Cell n={cell.n} seed={cell.seed} -> {cell.status.value}")
        return sorted(done, key=lambda c: (c.n, c.seed))

    def get_stats(self) -> Dict[str, Any]:
        """获取扫描池统计信息"""
        with self._lock:
            return {
                "max_workers": self.max_workers,
                "total_cells": self.total_cells,
                "completed_cells": self.completed_cells,
                "failed_cells": self.failed_cells,
            }
