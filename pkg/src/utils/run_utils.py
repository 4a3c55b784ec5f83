# -*- encoding: utf-8 -*-

import enum
import functools
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

root_dir = Path(__file__).resolve().parent

logger_initialized = {}

DEFAULT_LOG_LEVEL = os.getenv("QTRI_LOG_LEVEL", "INFO").upper()


class QtriError(Exception):
    pass


class DomainError(QtriError, ValueError):
    pass


class CapabilityError(QtriError):
    pass


class PromiseError(QtriError):
    pass


class ThresholdExceeded(QtriError):
    pass


class InvariantError(QtriError, AssertionError):
    pass


class RunFailed(QtriError):
    """扫描中有单元格失败"""


class ParseError(QtriError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Stream(enum.IntEnum):
    """随机数子流编号，同一个种子下各用途互不干扰"""

    INSTANCE = 0
    SAMPLE = 1
    BERNOULLI = 2
    ISOLATION = 3
    GROVER = 4
    SPAWN = 5


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """由 64 位种子和子流编号构造 Philox 计数器生成器"""
    entropy = [int(seed) % 2**64, *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream: int) -> int:
    entropy = [int(seed) % 2**64, *(int(s) for s in stream)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def iceil(x: float) -> int:
    # float noise such as 512 ** (2 / 3) == 63.99999999999999 must not bump a ceiling
    return int(math.ceil(x - 1e-9))


def ilog2(n: int) -> int:
    return max(1, iceil(math.log2(max(n, 2))))


def read_yaml(yaml_path: Union[str, Path]) -> Dict:
    if not Path(yaml_path).exists():
        raise FileNotFoundError(f"The {yaml_path} does not exist.")

    with open(str(yaml_path), "rb") as f:
        data = yaml.safe_load(f)
    return data or {}


@functools.lru_cache()
def get_logger(name="qtri"):
    """Initialize and get a logger by name.
    If the logger has not been initialized, this method will initialize the
    logger by adding one StreamHandler, otherwise the initialized logger will
    be directly returned.
    Args:
        name (str): Logger name.
    Returns:
        logging.Logger: The expected logger.
    """
    logger = logging.getLogger(name)
    if name in logger_initialized:
        return logger

    for logger_name in logger_initialized:
        if name.startswith(logger_name):
            return logger

    formatter = logging.Formatter(
        "[%(asctime)s] %(name)s %(levelname)s: %(message)s", datefmt="%Y/%m/%d %H:%M:%S"
    )

    sh = logging.StreamHandler()
    sh.setFormatter(formatter)
    logger.addHandler(sh)
    logger_initialized[name] = True
    logger.setLevel(DEFAULT_LOG_LEVEL)
    logger.propagate = False
    return logger


def set_log_level(level: Union[str, int]):
    if isinstance(level, str):
        level = level.upper()
    for name in logger_initialized:
        logging.getLogger(name).setLevel(level)


@dataclass
class HarnessConfig:
    """实验配置，默认值即推荐设置"""

    threads: int = 4
    seeds: int = 10
    family: str = "erdos_renyi"
    p: float = 0.5
    grover_c: float = 2.0
    c0: float = 8.0
    epsilon: float = 3 / 7
    delta: float = 1 / 7
    epsilon_prime: float = 1 / 7
    combo_grid: List[int] = field(default_factory=lambda: [512, 1024, 2048, 4096])
    walk_grid: List[int] = field(default_factory=lambda: [512, 1024, 2048, 4096])
    gc_grid: List[int] = field(default_factory=lambda: [1000, 3162, 10000, 31623, 100000])
    output_dir: str = "reports"
    log_level: str = DEFAULT_LOG_LEVEL

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path: Optional[Union[str, Path]] = None) -> HarnessConfig:
    config = HarnessConfig()
    if path is not None:
        data = read_yaml(path)
        known = {f.name for f in fields(HarnessConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DomainError(f"Unknown config keys in {path}: {unknown}")
        config = replace(config, **data)

    threads = os.getenv("QTRI_THREADS")
    if threads:
        try:
            config.threads = max(1, int(threads))
        except ValueError:
            raise DomainError(f"QTRI_THREADS must be an integer, got {threads!r}")
    return config
