# -*- coding: utf-8 -*-
"""
共享内存并行评估

一步中 N 个样本的生成与评估被切分为固定大小的工作单元（chunk）。每个单元有自己的随机流，
由 (seed, step, chunk) 唯一确定，因此不论用多少个线程、按什么顺序执行，生成的样本集合都与
串行执行逐位相同。

- dynamic: 空闲线程从共享计数器领取下一个单元
- static: 线程 w 依次处理单元 w, w+N_P, w+2N_P, …

每个线程只维护自己处理过的样本中 f^M 的最大/最小值，串行阶段只比较各线程的极值。
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import InvalidArgumentError
from ..model import Candidate, Problem, evaluate_batch
from ..sampler import ProbabilityVector, generate_batch

logger = logging.getLogger(__name__)


def chunk_generator(seed: int, step: int, chunk: int) -> np.random.Generator:
    """工作单元 (step, chunk) 的独立随机流"""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(step, chunk)))


@dataclass
class WorkerExtrema:
    """一个线程在本批中见到的最好/最差样本（按 f^M，同值取最小下标）"""
    worker: int
    best_index: int = -1
    best_value: float = -np.inf
    worst_index: int = -1
    worst_value: float = np.inf
    chunks: int = 0

    def offer(self, index: int, value: float, worst_index: int, worst_value: float) -> None:
        if value > self.best_value or (value == self.best_value and index < self.best_index):
            self.best_index, self.best_value = index, value
        if worst_value < self.worst_value or (
            worst_value == self.worst_value and worst_index < self.worst_index
        ):
            self.worst_index, self.worst_value = worst_index, worst_value
        self.chunks += 1

    @property
    def empty(self) -> bool:
        return self.chunks == 0


@dataclass
class BatchResult:
    """一批样本及归约后的最好/最差下标"""
    X: np.ndarray
    f: np.ndarray
    f_p: np.ndarray
    f_m: np.ndarray
    best_index: int
    worst_index: int
    worker_extrema: List[WorkerExtrema] = field(default_factory=list)

    def candidate(self, index: int) -> Candidate:
        return Candidate(
            x=self.X[index].copy(),
            f=float(self.f[index]),
            f_p=float(self.f_p[index]),
            f_m=float(self.f_m[index]),
        )

    @property
    def best(self) -> Candidate:
        return self.candidate(self.best_index)

    @property
    def worst(self) -> Candidate:
        return self.candidate(self.worst_index)

    def feasible_best_index(self) -> Optional[int]:
        """可行样本中 f 最大者的下标（没有可行样本时为 None）"""
        feasible = self.f_p == 0.0
        if not feasible.any():
            return None
        return int(np.argmax(np.where(feasible, self.f, -np.inf)))

    def min_penalty_index(self) -> int:
        return int(np.argmin(self.f_p))


class _ChunkCounter:
    """动态调度用的共享计数器"""

    def __init__(self, total: int):
        self._next = 0
        self._total = total
        self._lock = threading.Lock()

    def claim(self) -> Optional[int]:
        with self._lock:
            if self._next >= self._total:
                return None
            chunk = self._next
            self._next += 1
            return chunk


class ParallelEvaluator:
    """按工作单元并行生成并评估样本

    线程池在第一次使用时创建，在 close() 时关闭；可作为上下文管理器使用。
    """

    def __init__(
        self,
        problem: Problem,
        c_penalty: float,
        workers: int = 1,
        chunk_size: int = 8,
        schedule: str = "dynamic",
        seed: int = 0,
    ):
        if workers < 1:
            raise InvalidArgumentError(f"workers 至少为 1，得到 {workers}")
        if chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size 至少为 1，得到 {chunk_size}")
        if schedule not in ("dynamic", "static"):
            raise InvalidArgumentError(f"未知调度方式 {schedule}")
        self.problem = problem
        self.c_penalty = c_penalty
        self.workers = workers
        self.chunk_size = chunk_size
        self.schedule = schedule
        self.seed = seed
        self._executor: Optional[ThreadPoolExecutor] = None
        self._lock = threading.Lock()

    def __enter__(self) -> "ParallelEvaluator":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def close(self) -> None:
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None

    def _get_executor(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(
                    max_workers=self.workers, thread_name_prefix='miver-eval'
                )
                logger.debug("🚀 评估线程池已创建: %d 个线程, 调度 %s", self.workers, self.schedule)
            return self._executor

    def evaluate(self, pv: ProbabilityVector, step: int, count: int) -> BatchResult:
        """生成并评估 count 个样本"""
        if count < 1:
            raise InvalidArgumentError(f"count 至少为 1，得到 {count}")
        dim = self.problem.dim
        n_chunks = -(-count // self.chunk_size)
        X = np.empty((count, dim), dtype=np.uint8)
        f = np.empty(count, dtype=np.float64)
        f_p = np.empty(count, dtype=np.float64)
        f_m = np.empty(count, dtype=np.float64)
        lanes = min(self.workers, n_chunks)

        def run_chunk(chunk: int, extrema: WorkerExtrema) -> None:
            start = chunk * self.chunk_size
            stop = min(start + self.chunk_size, count)
            rng = chunk_generator(self.seed, step, chunk)
            block = generate_batch(pv, rng, stop - start)
            result = evaluate_batch(self.problem, block, self.c_penalty)
            X[start:stop] = block
            f[start:stop] = result.f
            f_p[start:stop] = result.f_p
            f_m[start:stop] = result.f_m
            hi = int(np.argmax(result.f_m))
            lo = int(np.argmin(result.f_m))
            extrema.offer(start + hi, float(result.f_m[hi]), start + lo, float(result.f_m[lo]))

        counter = _ChunkCounter(n_chunks)

        def worker(lane: int) -> WorkerExtrema:
            extrema = WorkerExtrema(worker=lane)
            if self.schedule == "static":
                for chunk in range(lane, n_chunks, lanes):
                    run_chunk(chunk, extrema)
            else:
                while True:
                    chunk = counter.claim()
                    if chunk is None:
                        break
                    run_chunk(chunk, extrema)
            return extrema

        if lanes == 1:
            extrema_list = [worker(0)]
        else:
            executor = self._get_executor()
            futures = [executor.submit(worker, lane) for lane in range(lanes)]
            extrema_list = [future.result() for future in futures]

        best_index, worst_index = reduce_extrema(extrema_list)
        return BatchResult(
            X=X, f=f, f_p=f_p, f_m=f_m,
            best_index=best_index, worst_index=worst_index,
            worker_extrema=extrema_list,
        )


def reduce_extrema(extrema_list: List[WorkerExtrema]) -> tuple:
    """只比较各线程的极值，得到整批的最好/最差下标"""
    active = [e for e in extrema_list if not e.empty]
    if not active:
        raise InvalidArgumentError("没有任何线程处理过样本")
    best = max(active, key=lambda e: (e.best_value, -e.best_index))
    worst = min(active, key=lambda e: (e.worst_value, e.worst_index))
    return best.best_index, worst.worst_index


def parallel_evaluate(
    problem: Problem,
    pv: ProbabilityVector,
    count: int,
    workers: int,
    seed: int,
    c_penalty: float,
    step: int = 0,
    chunk_size: int = 8,
    schedule: str = "dynamic",
) -> BatchResult:
    """一次性的并行评估（内部创建并关闭线程池）"""
    with ParallelEvaluator(problem, c_penalty, workers, chunk_size, schedule, seed) as evaluator:
        return evaluator.evaluate(pv, step, count)
