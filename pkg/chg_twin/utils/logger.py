"""
日志模块 - 全包共享一个记录器
"""
import logging
import sys

logger = logging.getLogger("chg_twin")
logger.addHandler(logging.NullHandler())

_HANDLER_NAME = "chg_twin.stderr"
_performance_logging = True


def performance_logging_enabled() -> bool:
    return _performance_logging


def configure_logging(logging_config=None) -> None:
    """按日志配置安装标准错误输出处理器，结果输出保留给标准输出"""
    global _performance_logging
    from ..config import LoggingConfig

    logging_config = logging_config or LoggingConfig()
    _performance_logging = logging_config.ENABLE_PERFORMANCE_LOGGING
    level = logging.DEBUG if logging_config.ENABLE_DEBUG else getattr(
        logging, logging_config.LOG_LEVEL.upper(), logging.WARNING
    )
    logger.setLevel(level)

    for handler in list(logger.handlers):
        if handler.get_name() == _HANDLER_NAME:
            logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s"))
    logger.addHandler(handler)
