"""
仿真服务 - 求解、按帧序列与蒙特卡洛重复仿真
"""
import asyncio
import functools
from typing import Any, List, Mapping, Optional, Tuple

from ..config import EngineConfig
from ..core.factory import ComponentFactory
from ..core.hypergraph import Hypergraph
from ..core.solver import (
    MonteCarloSummary,
    QueryResult,
    SolverConfig,
    monte_carlo,
    run_replica,
    solve,
    solve_series,
    summarize,
)
from ..exceptions import SolverError
from ..utils.decorators import async_operation_handler, operation_handler
from ..utils.logger import logger


class SimulationService:
    """仿真服务 - 共享一张不可变超图，每次调用独占求解状态"""

    def __init__(self, config: Optional[EngineConfig] = None, registry=None):
        self.config = config or EngineConfig.create_default()
        self.registry = registry or ComponentFactory.create_registry()
        logger.debug("仿真服务初始化完成")

    def solver_config(self, seed: Optional[int] = None) -> SolverConfig:
        overrides = {} if seed is None else {"rng_seed": seed}
        return ComponentFactory.create_solver_config(self.config, **overrides)

    @operation_handler("求解")
    def solve(self, graph: Hypergraph, target: str, inputs: Optional[Mapping[str, Any]] = None,
              seed: Optional[int] = None) -> QueryResult:
        return solve(graph, target, inputs, self.solver_config(seed), self.registry)

    @operation_handler("序列求解")
    def series(self, graph: Hypergraph, target: str, frames: int,
               inputs: Optional[Mapping[str, Any]] = None, seed: Optional[int] = None) -> List[Tuple[int, Any]]:
        return solve_series(graph, target, inputs, self.solver_config(seed), frames, self.registry)

    @operation_handler("蒙特卡洛仿真")
    def monte_carlo(self, graph: Hypergraph, target: str, runs: int,
                    inputs: Optional[Mapping[str, Any]] = None, seed: Optional[int] = None) -> MonteCarloSummary:
        return monte_carlo(graph, target, inputs, self.solver_config(seed), runs, self.registry)

    @async_operation_handler("并行蒙特卡洛仿真")
    async def monte_carlo_async(self, graph: Hypergraph, target: str, runs: int,
                                inputs: Optional[Mapping[str, Any]] = None,
                                seed: Optional[int] = None) -> MonteCarloSummary:
        """
        在线程池中并行执行各次运行

        汇总按运行序号进行，结果与顺序执行相同
        """
        if runs < 1:
            raise SolverError(f"运行次数必须不小于 1，实际为 {runs}")
        graph.node(target)
        config = self.solver_config(seed)
        loop = asyncio.get_running_loop()
        tasks = [
            loop.run_in_executor(None, functools.partial(run_replica, graph, target, inputs, config, k, self.registry))
            for k in range(runs)
        ]
        samples = await asyncio.gather(*tasks)
        return summarize(list(samples))
