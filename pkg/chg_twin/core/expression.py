"""
表达式语言 - 词法分析、递归下降语法分析、规范打印与求值

文法（优先级由低到高）：
    expr  := or
    or    := and { "or" and }
    and   := cmp { "and" cmp }
    cmp   := add [ ("=="|"!="|"<"|"<="|">"|">=") add ]
    add   := mul { ("+"|"-") mul }
    mul   := unary { ("*"|"/"|"%") unary }
    unary := ("not"|"-") unary | pow
    pow   := atom [ "^" unary ]
    atom  := number | "true" | "false" | string | ident
           | ident "(" [expr {"," expr}] ")" | "(" expr ")"
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, FrozenSet, List, Mapping, Optional, Tuple

from ..exceptions import LexError, ParseError, TableLookupError, TypeMismatch, UnboundParameter
from ..utils.rng import KeyedStream
from .builtins import (
    BuiltinRegistry,
    arithmetic,
    compare,
    create_core_registry,
    negate,
    require_boolean,
)
from .values import TableHandle, check_value, values_equal

ITERATION_IDENTIFIER = "__iteration__"
KEYWORDS = frozenset({"not", "and", "or", "true", "false"})
_TWO_CHAR_OPERATORS = ("==", "!=", "<=", ">=")
_ONE_CHAR_OPERATORS = "<>+-*/%^"
_PUNCTUATION = "(),"
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


def _is_digit(char: str) -> bool:
    return "0" <= char <= "9"


class TokenKind(str, Enum):
    NUMBER = "number"
    IDENTIFIER = "identifier"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"
    KEYWORD = "keyword"
    STRING = "string"
    END = "end"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    position: int  # UTF-8 字节偏移
    offset: int = 0  # 字符偏移


def tokenize(text: str) -> List[Token]:
    """把源文本切分为记号；未知字符抛出带位置的 LexError"""
    tokens: List[Token] = []
    index = 0
    byte_position = 0
    length = len(text)

    def emit(kind: TokenKind, start: int, end: int, start_byte: int) -> None:
        tokens.append(Token(kind, text[start:end], start_byte, start))

    while index < length:
        char = text[index]
        start, start_byte = index, byte_position

        if char.isspace():
            index += 1
        elif _is_digit(char):
            index = _scan_number(text, index)
            emit(TokenKind.NUMBER, start, index, start_byte)
        elif char.isalpha() or char == "_":
            while index < length and (text[index].isalnum() or text[index] == "_") and text[index].isascii():
                index += 1
            if index == start:
                raise LexError(start_byte, f"无法识别的字符 {char!r}")
            word = text[start:index]
            emit(TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENTIFIER, start, index, start_byte)
        elif char == '"':
            index = _scan_string(text, index, start_byte)
            emit(TokenKind.STRING, start, index, start_byte)
        elif text.startswith(_TWO_CHAR_OPERATORS, index):
            index += 2
            emit(TokenKind.OPERATOR, start, index, start_byte)
        elif char in _ONE_CHAR_OPERATORS:
            index += 1
            emit(TokenKind.OPERATOR, start, index, start_byte)
        elif char in _PUNCTUATION:
            index += 1
            emit(TokenKind.PUNCTUATION, start, index, start_byte)
        else:
            raise LexError(start_byte, f"无法识别的字符 {char!r}")

        byte_position += len(text[start:index].encode("utf-8"))

    return tokens


def _scan_number(text: str, index: int) -> int:
    length = len(text)
    while index < length and _is_digit(text[index]):
        index += 1
    if index + 1 < length and text[index] == "." and _is_digit(text[index + 1]):
        index += 1
        while index < length and _is_digit(text[index]):
            index += 1
    if index < length and text[index] in "eE":
        lookahead = index + 1
        if lookahead < length and text[lookahead] in "+-":
            lookahead += 1
        if lookahead < length and _is_digit(text[lookahead]):
            index = lookahead
            while index < length and _is_digit(text[index]):
                index += 1
    return index


def _scan_string(text: str, index: int, start_byte: int) -> int:
    index += 1
    while index < len(text):
        char = text[index]
        if char == "\\":
            if index + 1 >= len(text) or text[index + 1] not in _ESCAPES:
                raise LexError(start_byte, "无效的转义序列")
            index += 2
        elif char == '"':
            return index + 1
        else:
            index += 1
    raise LexError(start_byte, "字符串缺少结束引号")


def _unescape(literal: str) -> str:
    body = literal[1:-1]
    out = []
    index = 0
    while index < len(body):
        if body[index] == "\\":
            out.append(_ESCAPES[body[index + 1]])
            index += 2
        else:
            out.append(body[index])
            index += 1
    return "".join(out)


# ---- 语法树 ----

class Expr:
    """语法树节点基类"""
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Literal(Expr):
    value: Any

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Literal) and values_equal(self.value, other.value)

    def __hash__(self) -> int:
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class ParamRef(Expr):
    name: str


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Conditional(Expr):
    test: Expr
    then: Expr
    otherwise: Expr


class _Parser:
    """递归下降分析器，每个文法规则一个方法"""

    _COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")

    def __init__(self, text: str):
        self._tokens = tokenize(text)
        end_position = len(text.encode("utf-8"))
        self._tokens.append(Token(TokenKind.END, "", end_position, len(text)))
        self._index = 0

    @property
    def token(self) -> Token:
        return self._tokens[self._index]

    def _advance(self) -> Token:
        token = self.token
        if token.kind is not TokenKind.END:
            self._index += 1
        return token

    def _check(self, kind: TokenKind, *texts: str) -> bool:
        token = self.token
        return token.kind is kind and (not texts or token.text in texts)

    def _expect(self, kind: TokenKind, text: str) -> Token:
        if not self._check(kind, text):
            raise ParseError(self.token.position, f"'{text}'", self.token.text)
        return self._advance()

    def parse(self) -> Expr:
        tree = self._or()
        if self.token.kind is not TokenKind.END:
            raise ParseError(self.token.position, "表达式结束", self.token.text)
        return tree

    def _or(self) -> Expr:
        node = self._and()
        while self._check(TokenKind.KEYWORD, "or"):
            self._advance()
            node = BinaryOp("or", node, self._and())
        return node

    def _and(self) -> Expr:
        node = self._cmp()
        while self._check(TokenKind.KEYWORD, "and"):
            self._advance()
            node = BinaryOp("and", node, self._cmp())
        return node

    def _cmp(self) -> Expr:
        node = self._add()
        if self._check(TokenKind.OPERATOR, *self._COMPARISONS):
            op = self._advance().text
            node = BinaryOp(op, node, self._add())
        return node

    def _add(self) -> Expr:
        node = self._mul()
        while self._check(TokenKind.OPERATOR, "+", "-"):
            op = self._advance().text
            node = BinaryOp(op, node, self._mul())
        return node

    def _mul(self) -> Expr:
        node = self._unary()
        while self._check(TokenKind.OPERATOR, "*", "/", "%"):
            op = self._advance().text
            node = BinaryOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self._check(TokenKind.KEYWORD, "not"):
            self._advance()
            return UnaryOp("not", self._unary())
        if self._check(TokenKind.OPERATOR, "-"):
            self._advance()
            return UnaryOp("-", self._unary())
        return self._pow()

    def _pow(self) -> Expr:
        node = self._atom()
        if self._check(TokenKind.OPERATOR, "^"):
            self._advance()
            node = BinaryOp("^", node, self._unary())
        return node

    def _atom(self) -> Expr:
        token = self.token
        if token.kind is TokenKind.NUMBER:
            self._advance()
            if any(mark in token.text for mark in ".eE"):
                return Literal(float(token.text))
            return Literal(int(token.text))
        if token.kind is TokenKind.KEYWORD and token.text in ("true", "false"):
            self._advance()
            return Literal(token.text == "true")
        if token.kind is TokenKind.STRING:
            self._advance()
            return Literal(_unescape(token.text))
        if token.kind is TokenKind.IDENTIFIER:
            self._advance()
            if self._check(TokenKind.PUNCTUATION, "("):
                return self._call(token.text)
            return ParamRef(token.text)
        if self._check(TokenKind.PUNCTUATION, "("):
            self._advance()
            node = self._or()
            self._expect(TokenKind.PUNCTUATION, ")")
            return node
        raise ParseError(token.position, "数字、字符串、标识符或 '('", token.text)

    def _call(self, name: str) -> Expr:
        self._expect(TokenKind.PUNCTUATION, "(")
        args: List[Expr] = []
        if not self._check(TokenKind.PUNCTUATION, ")"):
            args.append(self._or())
            while self._check(TokenKind.PUNCTUATION, ","):
                self._advance()
                args.append(self._or())
        self._expect(TokenKind.PUNCTUATION, ")")
        if name == "if" and len(args) == 3:
            return Conditional(*args)
        return Call(name, tuple(args))


def parse_expression(text: str) -> Expr:
    """解析表达式文本为语法树"""
    return _Parser(text).parse()


def _format_literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
        return f'"{escaped}"'
    return str(value)


def format_expression(node: Expr) -> str:
    """完全加括号的规范形式，重新解析得到结构相同的语法树"""
    if isinstance(node, Literal):
        return _format_literal(node.value)
    if isinstance(node, ParamRef):
        return node.name
    if isinstance(node, UnaryOp):
        separator = " " if node.op == "not" else ""
        return f"({node.op}{separator}{format_expression(node.operand)})"
    if isinstance(node, BinaryOp):
        return f"({format_expression(node.left)} {node.op} {format_expression(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}(" + ", ".join(format_expression(arg) for arg in node.args) + ")"
    if isinstance(node, Conditional):
        parts = (node.test, node.then, node.otherwise)
        return "if(" + ", ".join(format_expression(part) for part in parts) + ")"
    raise TypeError(f"不是语法树节点: {node!r}")


def parameter_names(node: Expr) -> FrozenSet[str]:
    """表达式引用的参数名（不含保留的迭代帧标识）"""
    names = set()
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, ParamRef):
            if current.name != ITERATION_IDENTIFIER:
                names.add(current.name)
        elif isinstance(current, UnaryOp):
            stack.append(current.operand)
        elif isinstance(current, BinaryOp):
            stack.extend((current.left, current.right))
        elif isinstance(current, Call):
            stack.extend(current.args)
        elif isinstance(current, Conditional):
            stack.extend((current.test, current.then, current.otherwise))
    return frozenset(names)


def called_builtins(node: Expr) -> FrozenSet[str]:
    names = set()
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Call):
            names.add(current.name)
            stack.extend(current.args)
        elif isinstance(current, UnaryOp):
            stack.append(current.operand)
        elif isinstance(current, BinaryOp):
            stack.extend((current.left, current.right))
        elif isinstance(current, Conditional):
            stack.extend((current.test, current.then, current.otherwise))
    return frozenset(names)


# ---- 求值 ----

_DEFAULT_REGISTRY: Optional[BuiltinRegistry] = None


def _default_registry() -> BuiltinRegistry:
    global _DEFAULT_REGISTRY
    if _DEFAULT_REGISTRY is None:
        _DEFAULT_REGISTRY = create_core_registry()
    return _DEFAULT_REGISTRY


@dataclass(frozen=True)
class EvalContext:
    """一次边求值的上下文；随机抽样由 (rng_seed, edge_id, iteration, 序号) 决定"""
    bindings: Mapping[str, Any] = field(default_factory=dict)
    rng_seed: int = 0
    edge_id: str = ""
    iteration: int = 0
    tables: Mapping[str, Any] = field(default_factory=dict)
    registry: Optional[BuiltinRegistry] = None

    def resolve_table(self, handle: TableHandle):
        table = self.tables.get(handle.name)
        if table is None:
            raise TableLookupError(f"未加载的数据表: {handle.name}")
        return table

    def builtins(self) -> BuiltinRegistry:
        return self.registry or _default_registry()


class CallContext:
    """传给需要上下文的内置函数：随机流与数据表解析"""

    def __init__(self, context: EvalContext, stream: KeyedStream):
        self.context = context
        self.stream = stream

    @property
    def iteration(self) -> int:
        return self.context.iteration

    def resolve_table(self, handle: TableHandle):
        return self.context.resolve_table(handle)


def open_call_context(ctx: EvalContext, salt: str = "") -> CallContext:
    return CallContext(ctx, KeyedStream(ctx.rng_seed, ctx.edge_id + salt, ctx.iteration))


def evaluate(ast: Expr, ctx: EvalContext, call_context: Optional[CallContext] = None) -> Any:
    """对语法树求值，得到唯一的值"""
    call_context = call_context or open_call_context(ctx)
    registry = ctx.builtins()
    return check_value(_evaluate(ast, ctx, registry, call_context))


def _evaluate(node: Expr, ctx: EvalContext, registry: BuiltinRegistry, call: CallContext) -> Any:
    if isinstance(node, Literal):
        return node.value

    if isinstance(node, ParamRef):
        if node.name == ITERATION_IDENTIFIER:
            return ctx.iteration
        try:
            return ctx.bindings[node.name]
        except KeyError:
            raise UnboundParameter(f"参数未绑定: {node.name}") from None

    if isinstance(node, UnaryOp):
        operand = _evaluate(node.operand, ctx, registry, call)
        if node.op == "not":
            return not require_boolean(operand, "not")
        return negate(operand)

    if isinstance(node, BinaryOp):
        if node.op in ("and", "or"):
            left = require_boolean(_evaluate(node.left, ctx, registry, call), node.op)
            if node.op == "and" and not left:
                return False
            if node.op == "or" and left:
                return True
            return require_boolean(_evaluate(node.right, ctx, registry, call), node.op)
        left = _evaluate(node.left, ctx, registry, call)
        right = _evaluate(node.right, ctx, registry, call)
        if node.op in ("==", "!=", "<", "<=", ">", ">="):
            return compare(node.op, left, right)
        return arithmetic(node.op, left, right)

    if isinstance(node, Conditional):
        test = _evaluate(node.test, ctx, registry, call)
        if not isinstance(test, bool):
            raise TypeMismatch(f"if 的条件必须是布尔值，实际为 {test!r}")
        return _evaluate(node.then if test else node.otherwise, ctx, registry, call)

    if isinstance(node, Call):
        builtin = registry.get(node.name)
        args = tuple(_evaluate(arg, ctx, registry, call) for arg in node.args)
        return builtin.invoke(call, args)

    raise TypeError(f"不是语法树节点: {node!r}")

