"""
求解器：串行主循环与共享内存并行评估
"""

from .config import SolverConfig
from .engine import (MiverSolver, Solution, SolverState, StepReport, TracePoint, solve,
                     write_solution, write_trace)
from .parallel import BatchResult, ParallelEvaluator, chunk_generator, parallel_evaluate

__all__ = [
    'SolverConfig',
    'MiverSolver',
    'Solution',
    'SolverState',
    'StepReport',
    'TracePoint',
    'solve',
    'write_solution',
    'write_trace',
    'BatchResult',
    'ParallelEvaluator',
    'chunk_generator',
    'parallel_evaluate',
]
