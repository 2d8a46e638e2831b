import asyncio
import logging

import pytest

from chg_twin.config import LoggingConfig
from chg_twin.exceptions import ChgError, NoPath
from chg_twin.utils.decorators import async_operation_handler, cache_result, operation_handler
from chg_twin.utils.logger import configure_logging, performance_logging_enabled


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    configure_logging(LoggingConfig())


def test_success_is_logged_with_duration(caplog):
    caplog.set_level(logging.INFO, logger="chg_twin")

    @operation_handler("加法")
    def add(a, b):
        return a + b

    assert add(1, 2) == 3
    assert any("加法成功 - 耗时" in record.message for record in caplog.records)


def test_performance_logging_can_be_disabled(caplog):
    configure_logging(LoggingConfig(ENABLE_PERFORMANCE_LOGGING=False))
    assert not performance_logging_enabled()
    caplog.set_level(logging.INFO, logger="chg_twin")

    @operation_handler("加法")
    def add(a, b):
        return a + b

    add(1, 2)
    messages = [record.message for record in caplog.records]
    assert "加法成功" in messages
    assert not any("耗时" in message for message in messages)


def test_domain_errors_pass_through():
    @operation_handler("查询")
    def query():
        raise NoPath("无路径")

    with pytest.raises(NoPath):
        query()


def test_foreign_errors_are_wrapped():
    @operation_handler("读取")
    def read():
        raise KeyError("x")

    with pytest.raises(ChgError) as info:
        read()
    assert isinstance(info.value.__cause__, KeyError)
    assert "读取失败" in str(info.value)


def test_async_handler():
    @async_operation_handler("异步加法")
    async def add(a, b):
        await asyncio.sleep(0)
        return a + b

    @async_operation_handler("异步失败")
    async def fail():
        raise ValueError("bad")

    assert asyncio.run(add(2, 3)) == 5
    with pytest.raises(ChgError):
        asyncio.run(fail())


def test_cache_result_reuses_and_expires():
    calls = []

    @cache_result(cache_key_func=lambda x: x, ttl_seconds=60)
    def square(x):
        calls.append(x)
        return x * x

    assert square(3) == 9
    assert square(3) == 9
    assert square(4) == 16
    assert calls == [3, 4]
    assert square.cache_size() == 2
    square.cache_clear()
    square(3)
    assert calls == [3, 4, 3]

    @cache_result(ttl_seconds=0)
    def stamp(x):
        calls.append(x)
        return x

    stamp(1)
    stamp(1)
    assert calls[-2:] == [1, 1]
