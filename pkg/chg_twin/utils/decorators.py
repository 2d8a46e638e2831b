"""
装饰器工具模块 - 操作日志、异常归一化与带过期时间的结果缓存
"""
import functools
import time
from contextlib import contextmanager
from typing import Any, Callable, Dict, Hashable, Iterator, Optional, Tuple

from .logger import logger, performance_logging_enabled
from ..exceptions import ChgError


@contextmanager
def _operation(operation_name: str, log_performance: bool) -> Iterator[None]:
    """
    记录一次操作的开始、结果与耗时

    领域异常原样抛出，其他异常包装为 ChgError
    """
    started = time.perf_counter() if log_performance and performance_logging_enabled() else None
    logger.debug(f"开始{operation_name}")
    try:
        yield
    except ChgError as e:
        logger.warning(f"{operation_name}失败: {type(e).__name__}: {e}")
        raise
    except Exception as e:
        logger.error(f"{operation_name}失败: {e}")
        raise ChgError(f"{operation_name}失败: {e}") from e
    if started is None:
        logger.info(f"{operation_name}成功")
    else:
        logger.info(f"{operation_name}成功 - 耗时: {time.perf_counter() - started:.3f}秒")


def operation_handler(operation_name: str, log_performance: bool = True):
    """同步操作处理装饰器"""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with _operation(operation_name, log_performance):
                return func(*args, **kwargs)
        return wrapper
    return decorator


def async_operation_handler(operation_name: str, log_performance: bool = True):
    """异步操作处理装饰器，日志与异常约定同 operation_handler"""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        async def wrapper(*args, **kwargs):
            with _operation(operation_name, log_performance):
                return await func(*args, **kwargs)
        return wrapper
    return decorator


class _ExpiringCache:
    """键 → (结果, 写入时刻)；每次写入时顺带清理过期项"""

    def __init__(self, ttl_seconds: float):
        self.ttl_seconds = ttl_seconds
        self._entries: Dict[Hashable, Tuple[Any, float]] = {}

    def get(self, key: Hashable, now: float) -> Tuple[bool, Any]:
        entry = self._entries.get(key)
        if entry is None or now - entry[1] >= self.ttl_seconds:
            return False, None
        return True, entry[0]

    def put(self, key: Hashable, value: Any, now: float) -> None:
        self._entries[key] = (value, now)
        for stale in [k for k, (_, t) in self._entries.items() if now - t >= self.ttl_seconds]:
            del self._entries[stale]

    def clear(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


def cache_result(cache_key_func: Optional[Callable[..., Hashable]] = None, ttl_seconds: float = 300):
    """
    同步函数的结果缓存，缓存对象需为不可变值

    Args:
        cache_key_func: 由调用参数生成缓存键，缺省时使用函数名与参数的文本
        ttl_seconds: 缓存有效期
    """
    def decorator(func: Callable) -> Callable:
        cache = _ExpiringCache(ttl_seconds)

        def key_of(args, kwargs) -> Hashable:
            if cache_key_func is not None:
                return cache_key_func(*args, **kwargs)
            return (func.__name__, repr(args), repr(sorted(kwargs.items())))

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            key = key_of(args, kwargs)
            now = time.monotonic()
            hit, value = cache.get(key, now)
            if hit:
                logger.debug(f"使用缓存结果: {key}")
                return value
            value = func(*args, **kwargs)
            cache.put(key, value, now)
            return value

        wrapper.cache_clear = cache.clear
        wrapper.cache_size = cache.__len__
        return wrapper
    return decorator
