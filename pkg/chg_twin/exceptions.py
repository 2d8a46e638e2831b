"""
约束超图引擎专用异常类定义
"""
from typing import Optional


class ChgError(Exception):
    """约束超图引擎基础异常"""
    pass


# ---- 图结构 ----

class GraphError(ChgError):
    """超图结构异常"""
    pass


class DuplicateId(GraphError):
    """节点或边的标识重复"""
    pass


class UnknownNode(GraphError):
    """引用了不存在的节点"""

    def __init__(self, node_id: str, message: Optional[str] = None):
        self.node_id = node_id
        super().__init__(message or f"未知节点: '{node_id}'")


class NegativeWeight(GraphError):
    """边权重为负"""
    pass


class SelfTargetWithoutAdvance(GraphError):
    """边的目标出现在源集合中却没有推进迭代帧"""
    pass


class DomainViolation(GraphError):
    """输入值不在节点的取值范围内"""
    pass


class IncompatibleSharedNode(GraphError):
    """合并时共享节点的单位或取值范围不兼容"""
    pass


class ConflictingInitials(GraphError):
    """合并时共享节点在两张图中带有不同的初始值"""
    pass


class ConflictingTables(GraphError):
    """合并时同名数据表内容不一致"""
    pass


# ---- 表达式 ----

class ExpressionError(ChgError):
    """表达式语言异常"""
    pass


class LexError(ExpressionError):
    """词法分析失败"""

    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"{message} (位置 {position})")


class ParseError(ExpressionError):
    """语法分析失败"""

    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        detail = f"，实际为 '{found}'" if found else ""
        super().__init__(f"期望 {expected}{detail} (位置 {position})")


class DuplicateBuiltin(ExpressionError):
    """内置函数重复注册"""
    pass


class EvaluationError(ExpressionError):
    """表达式求值异常"""
    pass


class UnboundParameter(EvaluationError, GraphError):
    """参数未绑定到边的源节点"""
    pass


class TypeMismatch(EvaluationError):
    """值类型不匹配"""
    pass


class DivisionByZero(EvaluationError):
    """除以零"""
    pass


class UnknownBuiltin(EvaluationError):
    """未注册的内置函数"""
    pass


class ArityMismatch(EvaluationError):
    """内置函数参数个数不匹配"""
    pass


class NumericOverflow(EvaluationError):
    """数值超出64位范围或不是有限值"""
    pass


class TableLookupError(EvaluationError):
    """数据表查询失败"""
    pass


# ---- 求解器 ----

class SolverError(ChgError):
    """求解异常"""
    pass


class NoPath(SolverError):
    """候选边耗尽，目标不可达"""
    pass


class IterationLimit(SolverError):
    """超过迭代帧上限"""
    pass


class FiringLimit(SolverError):
    """超过边求值次数上限"""
    pass


class AllRunsFailed(SolverError):
    """蒙特卡洛所有运行都失败"""
    pass


class ReplayMismatch(SolverError):
    """解树重放结果与记录不一致"""
    pass


# ---- 模型读写 ----

class ModelIOError(ChgError):
    """模型文件读写异常"""
    pass


class DocumentParseError(ModelIOError):
    """模型文档无法解析"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (行 {line}, 列 {column})")


class SchemaError(ModelIOError):
    """模型文档字段或类型不符合格式"""
    pass


class IncludeCycle(ModelIOError):
    """模型文档循环包含"""
    pass


class ValidationError(ModelIOError):
    """模型校验失败"""

    def __init__(self, report):
        self.report = report
        super().__init__(report.render())


class IoError(ModelIOError):
    """文件读写失败"""
    pass


class RaggedRow(ModelIOError):
    """CSV行的单元格数与表头不一致"""
    pass


class EmptyFile(ModelIOError):
    """CSV文件为空"""
    pass


class TypeInferenceConflict(ModelIOError):
    """CSV列类型推断冲突"""
    pass


# ---- 微电网 ----

class MicrogridError(ChgError):
    """微电网领域异常"""
    pass


class SpecInvariantViolation(MicrogridError):
    """电网描述违反约束"""
    pass


class ContractViolation(MicrogridError):
    """物理计算的前置条件不成立"""
    pass


# ---- 配置与命令行 ----

class ConfigurationError(ChgError):
    """配置异常"""
    pass


class UsageError(ChgError):
    """命令行用法错误"""
    pass
