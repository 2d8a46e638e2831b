"""
工具模块 - 日志、装饰器与键控随机流
"""

from .decorators import (
    async_operation_handler,
    operation_handler,
    cache_result
)
from .logger import configure_logging, logger
from .rng import KeyedStream, keyed_uniform

__all__ = [
    'async_operation_handler',
    'operation_handler',
    'cache_result',
    'configure_logging',
    'logger',
    'KeyedStream',
    'keyed_uniform',
]
