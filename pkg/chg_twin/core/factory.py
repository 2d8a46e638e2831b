"""
组件工厂 - 使用工厂模式管理组件之间的依赖关系
"""
from typing import Any, Mapping, Optional

from ..config import EngineConfig
from ..utils.logger import logger


class ComponentFactory:
    """
    组件工厂类 - 负责按引擎配置创建核心组件
    """

    @classmethod
    def create_registry(cls, include_microgrid: bool = True):
        """
        创建冻结的内置函数注册表

        Args:
            include_microgrid: 是否注册微电网物理函数

        Returns:
            BuiltinRegistry: 注册表实例
        """
        try:
            from .builtins import BuiltinRegistry, register_core_builtins
            registry = register_core_builtins(BuiltinRegistry())
            if include_microgrid:
                from ..microgrid.builtins import register_microgrid_builtins
                register_microgrid_builtins(registry)
            logger.debug(f"工厂创建注册表成功，共 {len(list(registry.names()))} 个内置函数")
            return registry.freeze()
        except Exception as e:
            logger.error(f"工厂创建注册表失败: {e}")
            raise

    @classmethod
    def create_solver_config(cls, config: Optional[EngineConfig] = None, **overrides):
        """按引擎配置中的求解器设置创建求解参数"""
        from .solver import SolverConfig
        config = config or EngineConfig.create_default()
        return SolverConfig.from_settings(config.solver, **overrides)

    @classmethod
    def create_solver(cls, graph, inputs: Optional[Mapping[str, Any]] = None,
                      config: Optional[EngineConfig] = None, registry=None, **overrides):
        """
        创建一次查询使用的求解器

        Args:
            graph: 超图
            inputs: 测量值
            config: 引擎配置
            registry: 内置函数注册表，为 None 时创建完整注册表
        """
        try:
            from .solver import HyperpathSolver
            solver_config = cls.create_solver_config(config, **overrides)
            instance = HyperpathSolver(graph, inputs, solver_config, registry or cls.create_registry())
            logger.debug("工厂创建求解器成功")
            return instance
        except Exception as e:
            logger.error(f"工厂创建求解器失败: {e}")
            raise

    @classmethod
    def create_relation_manager(cls):
        from .relations import RelationStrategyManager
        return RelationStrategyManager()
