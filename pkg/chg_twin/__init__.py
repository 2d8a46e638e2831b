"""
chg_twin - 约束超图数字孪生引擎与微电网案例库
"""

# 导入命令行应用
from .main import ChgTwinApp, main

# 导入配置和异常处理
from .config import EngineConfig
from .exceptions import (
    ChgError,
    GraphError,
    ExpressionError,
    SolverError,
    NoPath,
    ModelIOError,
    MicrogridError,
)

# 导入核心组件
from .core import ComponentFactory, Hypergraph, HypergraphBuilder, solve, solve_series, explain

# 导入服务
from .services import ModelService, SimulationService

__all__ = [
    # 命令行
    'ChgTwinApp',
    'main',

    # 配置管理
    'EngineConfig',

    # 异常类
    'ChgError',
    'GraphError',
    'ExpressionError',
    'SolverError',
    'NoPath',
    'ModelIOError',
    'MicrogridError',

    # 核心
    'ComponentFactory',
    'Hypergraph',
    'HypergraphBuilder',
    'solve',
    'solve_series',
    'explain',

    # 服务
    'ModelService',
    'SimulationService',
]

__version__ = "1.0.0"
__description__ = "约束超图数字孪生引擎：超路径求解、模型合并与微电网仿真"
__license__ = "MIT"
__min_python_version__ = "3.9"
