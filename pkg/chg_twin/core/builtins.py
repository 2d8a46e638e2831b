"""
内置函数注册表与算术/比较语义

表达式求值器与 builtin 类关系共用这里的运算规则。
"""
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Optional, Tuple

from ..exceptions import (
    ArityMismatch,
    DivisionByZero,
    DuplicateBuiltin,
    EvaluationError,
    NumericOverflow,
    TableLookupError,
    TypeMismatch,
    UnknownBuiltin,
)
from .values import TableHandle, check_value, is_numeric, values_equal

_INT_POW_LIMIT = 64


@dataclass(frozen=True)
class Builtin:
    """注册表条目；arity 为 None 表示可变参数（至少一个）"""
    name: str
    arity: Optional[int]
    func: Callable[..., Any]
    doc: str = ""
    uses_context: bool = False

    def check_arity(self, count: int) -> None:
        if self.arity is None:
            if count < 1:
                raise ArityMismatch(f"{self.name} 至少需要 1 个参数")
        elif count != self.arity:
            raise ArityMismatch(f"{self.name} 需要 {self.arity} 个参数，实际 {count} 个")

    def invoke(self, call_context, args: Tuple[Any, ...]) -> Any:
        self.check_arity(len(args))
        if self.uses_context:
            result = self.func(call_context, *args)
        else:
            result = self.func(*args)
        return check_value(result)


class BuiltinRegistry:
    """内置函数注册表，冻结后不可再注册"""

    def __init__(self):
        self._entries: Dict[str, Builtin] = {}
        self._frozen = False

    def register_builtin(self, name: str, arity: Optional[int], semantics: Callable[..., Any],
                         doc: str = "", uses_context: bool = False) -> Builtin:
        if self._frozen:
            raise DuplicateBuiltin(f"注册表已冻结，无法注册 {name}")
        if name in self._entries:
            raise DuplicateBuiltin(f"内置函数 {name} 已注册")
        entry = Builtin(name, arity, semantics, doc or (semantics.__doc__ or "").strip(), uses_context)
        self._entries[name] = entry
        return entry

    def freeze(self) -> "BuiltinRegistry":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def get(self, name: str) -> Builtin:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownBuiltin(f"未注册的内置函数: {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def names(self) -> Iterable[str]:
        return sorted(self._entries)

    def call(self, name: str, args: Tuple[Any, ...], call_context=None) -> Any:
        return self.get(name).invoke(call_context, args)


# ---- 运算规则 ----

def require_numeric(value: Any, where: str) -> Any:
    if not is_numeric(value):
        raise TypeMismatch(f"{where} 需要数值，实际为 {value!r}")
    return value


def require_boolean(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise TypeMismatch(f"{where} 需要布尔值，实际为 {value!r}")
    return value


def require_text(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise TypeMismatch(f"{where} 需要文本，实际为 {value!r}")
    return value


def require_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeMismatch(f"{where} 需要整数，实际为 {value!r}")
    return value


def arithmetic(op: str, left: Any, right: Any) -> Any:
    """二元算术；整数与实数混合时提升为实数，'/' 总是得到实数"""
    if op == "+" and isinstance(left, str) and isinstance(right, str):
        return left + right
    require_numeric(left, f"运算 '{op}'")
    require_numeric(right, f"运算 '{op}'")
    both_int = isinstance(left, int) and isinstance(right, int)

    try:
        if op == "+":
            result = left + right
        elif op == "-":
            result = left - right
        elif op == "*":
            result = left * right
        elif op == "/":
            if right == 0:
                raise DivisionByZero("除以零")
            result = left / right
        elif op == "%":
            if right == 0:
                raise DivisionByZero("对零取模")
            result = left % right
        elif op == "^":
            result = _power(left, right, both_int)
        else:
            raise EvaluationError(f"未知运算符: {op}")
    except OverflowError as e:
        raise NumericOverflow(f"运算 '{op}' 溢出") from e

    if not both_int and op != "^":
        result = float(result)
    return check_value(result)


def _power(base: Any, exponent: Any, both_int: bool) -> Any:
    if both_int and exponent >= 0:
        if abs(base) > 1 and exponent > _INT_POW_LIMIT:
            raise NumericOverflow(f"整数幂溢出: {base} ^ {exponent}")
        return base ** exponent
    if base == 0 and exponent < 0:
        raise DivisionByZero("零的负数次幂")
    try:
        return math.pow(float(base), float(exponent))
    except ValueError as e:
        raise TypeMismatch(f"幂运算无实数结果: {base} ^ {exponent}") from e


def compare(op: str, left: Any, right: Any) -> bool:
    """比较运算；数值跨整数/实数比较，其余按值种类精确比较"""
    if op in ("==", "!="):
        if is_numeric(left) and is_numeric(right):
            equal = left == right
        else:
            equal = values_equal(left, right)
        return equal if op == "==" else not equal

    ordered = (is_numeric(left) and is_numeric(right)) or (isinstance(left, str) and isinstance(right, str))
    if not ordered:
        raise TypeMismatch(f"无法比较 {left!r} {op} {right!r}")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise EvaluationError(f"未知比较运算符: {op}")


def negate(value: Any) -> Any:
    require_numeric(value, "取负")
    return check_value(-value)


# ---- 核心内置函数 ----

def _abs(x):
    """绝对值"""
    return abs(require_numeric(x, "abs"))


def _min(*xs):
    """最小值"""
    return min(require_numeric(x, "min") for x in xs)


def _max(*xs):
    """最大值"""
    return max(require_numeric(x, "max") for x in xs)


def _floor(x):
    """向下取整，结果为整数"""
    try:
        return math.floor(require_numeric(x, "floor"))
    except (OverflowError, ValueError) as e:
        raise NumericOverflow(f"floor 溢出: {x}") from e


def _mod(a, b):
    """取模（结果与除数同号）"""
    return arithmetic("%", a, b)


def _clamp(x, lo, hi):
    """把 x 限制在 [lo, hi]"""
    require_numeric(x, "clamp")
    require_numeric(lo, "clamp")
    require_numeric(hi, "clamp")
    if lo > hi:
        raise TypeMismatch(f"clamp 下界 {lo} 大于上界 {hi}")
    return min(max(x, lo), hi)


def _if(c, a, b):
    """条件选择（参数已全部求值）"""
    return a if require_boolean(c, "if") else b


def _and(a, b):
    return require_boolean(a, "and") and require_boolean(b, "and")


def _or(a, b):
    return require_boolean(a, "or") or require_boolean(b, "or")


def _not(a):
    return not require_boolean(a, "not")


def _probability(p, where: str) -> float:
    require_numeric(p, where)
    if not 0 <= p <= 1:
        raise TypeMismatch(f"{where} 的概率必须在 [0, 1] 内，实际为 {p}")
    return p


def _bernoulli(call, p):
    """以概率 p 返回 true"""
    return call.stream.bernoulli(_probability(p, "bernoulli"))


def _uniform(call, lo, hi):
    """[lo, hi) 上的均匀抽样"""
    require_numeric(lo, "uniform")
    require_numeric(hi, "uniform")
    return float(call.stream.uniform(float(lo), float(hi)))


def _randint(call, lo, hi):
    """[lo, hi] 上的均匀整数抽样"""
    require_int(lo, "randint")
    require_int(hi, "randint")
    if lo > hi:
        raise TypeMismatch(f"randint 下界 {lo} 大于上界 {hi}")
    return call.stream.randint(lo, hi)


def _lookup(call, table, key_col, key, val_col):
    """在数据表中按键列精确匹配并返回值列"""
    if not isinstance(table, TableHandle):
        raise TypeMismatch(f"lookup 的第一个参数必须是数据表句柄，实际为 {table!r}")
    require_text(key_col, "lookup")
    require_text(val_col, "lookup")
    return call.resolve_table(table).lookup(key_col, key, val_col)


def _sqrt(x):
    """平方根"""
    require_numeric(x, "sqrt")
    if x < 0:
        raise TypeMismatch(f"sqrt 的参数为负: {x}")
    return math.sqrt(x)


def _round(x):
    """四舍五入到整数"""
    try:
        return int(round(require_numeric(x, "round")))
    except (OverflowError, ValueError) as e:
        raise NumericOverflow(f"round 溢出: {x}") from e


def _real(x):
    return float(require_numeric(x, "real"))


def _integer(x):
    """向零取整"""
    try:
        return int(require_numeric(x, "integer"))
    except (OverflowError, ValueError) as e:
        raise NumericOverflow(f"integer 溢出: {x}") from e


def _tuple(*xs):
    return tuple(xs)


def _at(t, i):
    """元组下标访问（从 0 开始）"""
    if not isinstance(t, tuple):
        raise TypeMismatch(f"at 的第一个参数必须是元组，实际为 {t!r}")
    require_int(i, "at")
    if not 0 <= i < len(t):
        raise EvaluationError(f"元组下标 {i} 越界（长度 {len(t)}）")
    return t[i]


def _len(t):
    if not isinstance(t, tuple):
        raise TypeMismatch(f"len 的参数必须是元组，实际为 {t!r}")
    return len(t)


def _sum(t):
    if not isinstance(t, tuple):
        raise TypeMismatch(f"sum 的参数必须是元组，实际为 {t!r}")
    total = 0
    for item in t:
        total = arithmetic("+", total, item)
    return total


def is_leap_year(year: int) -> bool:
    """公历闰年规则：能被4整除，整百年须能被400整除"""
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _is_leap_year(y):
    return is_leap_year(require_int(y, "is_leap_year"))


def _comparison(op: str):
    def builtin(a, b):
        return compare(op, a, b)
    builtin.__doc__ = f"比较 a {op} b"
    return builtin


CORE_BUILTINS = (
    ("abs", 1, _abs, False),
    ("min", None, _min, False),
    ("max", None, _max, False),
    ("floor", 1, _floor, False),
    ("mod", 2, _mod, False),
    ("clamp", 3, _clamp, False),
    ("if", 3, _if, False),
    ("eq", 2, _comparison("=="), False),
    ("ne", 2, _comparison("!="), False),
    ("lt", 2, _comparison("<"), False),
    ("le", 2, _comparison("<="), False),
    ("gt", 2, _comparison(">"), False),
    ("ge", 2, _comparison(">="), False),
    ("and", 2, _and, False),
    ("or", 2, _or, False),
    ("not", 1, _not, False),
    ("bernoulli", 1, _bernoulli, True),
    ("uniform", 2, _uniform, True),
    ("randint", 2, _randint, True),
    ("lookup", 4, _lookup, True),
    ("sqrt", 1, _sqrt, False),
    ("round", 1, _round, False),
    ("real", 1, _real, False),
    ("integer", 1, _integer, False),
    ("tuple", None, _tuple, False),
    ("at", 2, _at, False),
    ("len", 1, _len, False),
    ("sum", 1, _sum, False),
    ("is_leap_year", 1, _is_leap_year, False),
)


def register_core_builtins(registry: BuiltinRegistry) -> BuiltinRegistry:
    for name, arity, func, uses_context in CORE_BUILTINS:
        registry.register_builtin(name, arity, func, uses_context=uses_context)
    return registry


def create_core_registry() -> BuiltinRegistry:
    """只含核心内置函数的冻结注册表"""
    return register_core_builtins(BuiltinRegistry()).freeze()


__all__ = [
    "Builtin",
    "BuiltinRegistry",
    "TableLookupError",
    "arithmetic",
    "compare",
    "create_core_registry",
    "is_leap_year",
    "negate",
    "register_core_builtins",
    "require_boolean",
    "require_int",
    "require_numeric",
]
