"""
超路径求解器 - 按代价排序的前向推理，搜索过程中即时求值每条遇到的边

迭代帧模型：从推进边目标前向可达的节点随帧变化，其余节点只存在于第 0 帧、
可被任意帧读取。推进边读取第 f 帧写入第 f+1 帧；其他含变化源的边在同一帧内读写；
只含静态源的边写入第 0 帧。
"""
import heapq
import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from ..exceptions import (
    AllRunsFailed,
    ChgError,
    ConfigurationError,
    FiringLimit,
    IterationLimit,
    NoPath,
    ReplayMismatch,
    SolverError,
    TypeMismatch,
)
from ..utils.logger import logger
from .builtins import BuiltinRegistry
from .expression import EvalContext, open_call_context
from .hypergraph import Hyperedge, Hypergraph, dependency_graph
from .values import check_value, format_value, values_equal

VIABILITY_SALT = "?viability"

Slot = Tuple[str, int]


class TraceLevel(str, Enum):
    NONE = "none"
    VALUES = "values"
    FULL = "full"


@dataclass(frozen=True)
class SolverConfig:
    """求解参数；两个上限都严格执行"""
    rng_seed: int = 0
    max_iterations: int = 10_000
    max_firings: int = 1_000_000
    trace_level: TraceLevel = TraceLevel.NONE

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations 必须不小于 1，实际为 {self.max_iterations}")
        if self.max_firings < 1:
            raise ConfigurationError(f"max_firings 必须不小于 1，实际为 {self.max_firings}")
        try:
            object.__setattr__(self, "trace_level", TraceLevel(self.trace_level))
        except ValueError:
            raise ConfigurationError(f"未知的追踪级别: {self.trace_level!r}") from None

    @classmethod
    def from_settings(cls, settings, **overrides) -> "SolverConfig":
        config = cls(
            rng_seed=settings.DEFAULT_SEED,
            max_iterations=settings.MAX_ITERATIONS,
            max_firings=settings.MAX_FIRINGS,
            trace_level=settings.TRACE_LEVEL,
        )
        return replace(config, **overrides) if overrides else config

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, rng_seed=seed)


@dataclass(frozen=True)
class FiringRecord:
    """一次成功的边求值"""
    edge_id: str
    target: str
    iteration: int  # 写入帧
    read_iteration: int
    sources: Tuple[Tuple[str, str, int], ...]  # (参数名, 节点, 帧)
    bindings: Tuple[Tuple[str, Any], ...]
    output: Any
    weight: float

    @property
    def slot(self) -> Slot:
        return (self.target, self.iteration)


@dataclass(frozen=True)
class CacheEntry:
    value: Any
    cost: float
    producer: str  # 边标识、"input" 或 "initial"
    firing: Optional[FiringRecord] = None


@dataclass(frozen=True)
class LeafRecord:
    node: str
    value: Any
    measured: bool

    @property
    def annotation(self) -> str:
        return "measured" if self.measured else "initial"


@dataclass(frozen=True)
class TraceRecord:
    edge_id: str
    iteration: int
    status: str  # fired | not-viable | eval-error | cache-occupied
    cost: float
    detail: str = ""

    def to_json(self) -> str:
        record = {"edge": self.edge_id, "iteration": self.iteration, "status": self.status, "cost": self.cost}
        if self.detail:
            record["detail"] = self.detail
        return json.dumps(record, sort_keys=True, ensure_ascii=False)


@dataclass(frozen=True)
class SolutionTree:
    """以输入为叶子的推导树；firings 按后序（先子后父）排列，共用的子推导随每个父节点重复出现"""
    root: Slot
    value: Any
    total_cost: float
    firings: Tuple[FiringRecord, ...] = ()
    leaves: Tuple[LeafRecord, ...] = ()

    def firing_at(self, slot: Slot) -> Optional[FiringRecord]:
        for firing in self.firings:
            if firing.slot == slot:
                return firing
        return None

    def leaf_of(self, node_id: str) -> Optional[LeafRecord]:
        for leaf in self.leaves:
            if leaf.node == node_id:
                return leaf
        return None


@dataclass(frozen=True)
class QueryResult:
    value: Any
    tree: SolutionTree
    trace: Optional[Tuple[TraceRecord, ...]] = None

    @property
    def total_cost(self) -> float:
        return self.tree.total_cost

    def trace_lines(self) -> List[str]:
        return [record.to_json() for record in self.trace or ()]


@dataclass(frozen=True)
class MonteCarloSummary:
    mean: float
    variance: float
    min: float
    max: float
    samples: Tuple[float, ...]
    runs: int
    failures: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "min": self.min,
            "max": self.max,
            "samples": len(self.samples),
            "runs": self.runs,
            "failures": self.failures,
        }


def _slot_text(slot: Slot) -> str:
    node, iteration = slot
    return f"{node}[{iteration}]" if iteration > 0 else node


def varying_nodes(graph: Hypergraph) -> Set[str]:
    """从推进边目标前向可达的节点（含目标本身）"""
    digraph = dependency_graph(graph)
    result: Set[str] = set()
    for edge in graph.edges.values():
        if edge.advances and edge.target not in result:
            result.add(edge.target)
            result |= nx.descendants(digraph, edge.target)
    return result


class FrameRun:
    """按帧运行的结果，可按 (节点, 帧) 取值"""

    def __init__(self, solver: "HyperpathSolver", frames: int):
        self._solver = solver
        self.frames = frames

    def has(self, node_id: str, iteration: int) -> bool:
        return self._solver.lookup(node_id, iteration) is not None

    def value(self, node_id: str, iteration: int) -> Any:
        entry = self._solver.lookup(node_id, iteration)
        if entry is None:
            raise NoPath(f"节点 '{node_id}' 在第 {iteration} 帧无法求得")
        return entry.value

    def series(self, node_id: str) -> List[Tuple[int, Any]]:
        return [(k, self.value(node_id, k)) for k in range(self.frames)]

    def tree(self, node_id: str, iteration: int) -> SolutionTree:
        return self._solver.build_tree(self._solver.slot_of(node_id, iteration))

    @property
    def firings(self) -> int:
        return self._solver.firings

    @property
    def trace(self) -> Tuple[TraceRecord, ...]:
        return tuple(self._solver.trace)


class HyperpathSolver:
    """
    一次查询独占的求解器状态

    值缓存以 (节点, 帧) 为键，每个位置至多一个条目，先写入者保留。
    候选触发按 (代价, 边标识, 读取帧) 排序，代价 = 不同源条目代价之和 + 边权重。
    """

    def __init__(self, graph: Hypergraph, inputs: Optional[Mapping[str, Any]] = None,
                 config: Optional[SolverConfig] = None, registry: Optional[BuiltinRegistry] = None):
        self.graph = graph
        self.config = config or SolverConfig()
        self.registry = registry
        self.inputs = dict(inputs or {})
        for node_id, value in self.inputs.items():
            graph.node(node_id)
            check_value(value)

        self.varying = varying_nodes(graph)
        self._consumers: Dict[str, List[Hyperedge]] = {}
        for edge_id in sorted(graph.edges):
            edge = graph.edges[edge_id]
            for node_id in edge.source_nodes:
                self._consumers.setdefault(node_id, []).append(edge)

        self.cache: Dict[Slot, CacheEntry] = {}
        self._frames: Dict[str, List[int]] = {}
        self._heap: List[Tuple[float, str, int]] = []
        self._pushed: Set[Tuple[str, int]] = set()
        self._horizon: Optional[int] = None
        self.firings = 0
        self.trace: List[TraceRecord] = []

    # ---- 帧与缓存 ----

    def slot_of(self, node_id: str, iteration: int) -> Slot:
        return (node_id, iteration if node_id in self.varying else 0)

    def lookup(self, node_id: str, iteration: int) -> Optional[CacheEntry]:
        return self.cache.get(self.slot_of(node_id, iteration))

    def _has_varying_source(self, edge: Hyperedge) -> bool:
        return any(node in self.varying for node in edge.source_nodes)

    def _write_iteration(self, edge: Hyperedge, read_iteration: int) -> int:
        return read_iteration + 1 if edge.advances else read_iteration

    def _seed(self) -> None:
        for node_id in sorted(self.graph.nodes):
            if node_id in self.inputs:
                self._insert((node_id, 0), CacheEntry(self.inputs[node_id], 0.0, "input"))
            elif self.graph.nodes[node_id].has_initial:
                self._insert((node_id, 0), CacheEntry(self.graph.nodes[node_id].initial, 0.0, "initial"))

    def _insert(self, slot: Slot, entry: CacheEntry) -> None:
        self.cache[slot] = entry
        node_id, iteration = slot
        self._frames.setdefault(node_id, []).append(iteration)
        for edge in self._consumers.get(node_id, ()):
            for read_iteration in self._candidate_frames(edge, node_id, iteration):
                self._offer(edge, read_iteration)

    def _candidate_frames(self, edge: Hyperedge, node_id: str, iteration: int) -> Iterable[int]:
        if node_id in self.varying:
            return (iteration,)
        if not self._has_varying_source(edge):
            return (0,)
        first_varying = next(node for node in edge.source_nodes if node in self.varying)
        return tuple(self._frames.get(first_varying, ()))

    def _offer(self, edge: Hyperedge, read_iteration: int) -> None:
        key = (edge.id, read_iteration)
        if key in self._pushed:
            return
        cost = edge.weight
        for node_id in edge.source_nodes:
            entry = self.lookup(node_id, read_iteration)
            if entry is None:
                return
            cost += entry.cost
        if self._horizon is not None and self._write_iteration(edge, read_iteration) >= self._horizon:
            return
        self._pushed.add(key)
        heapq.heappush(self._heap, (cost, edge.id, read_iteration))

    # ---- 搜索 ----

    def _record(self, edge_id: str, iteration: int, status: str, cost: float, detail: str = "") -> None:
        level = self.config.trace_level
        if level is TraceLevel.FULL or (level is TraceLevel.VALUES and status == "fired"):
            self.trace.append(TraceRecord(edge_id, iteration, status, cost, detail))

    def _context(self, edge: Hyperedge, bindings: Mapping[str, Any], read_iteration: int) -> EvalContext:
        return EvalContext(
            bindings=bindings,
            rng_seed=self.config.rng_seed,
            edge_id=edge.id,
            iteration=read_iteration,
            tables=self.graph.tables,
            registry=self.registry,
        )

    def _step(self) -> Optional[Slot]:
        """弹出并处理一个候选；返回新写入的位置"""
        cost, edge_id, read_iteration = heapq.heappop(self._heap)
        edge = self.graph.edges[edge_id]
        write_iteration = self._write_iteration(edge, read_iteration)
        if write_iteration > self.config.max_iterations:
            raise IterationLimit(f"边 '{edge_id}' 需要第 {write_iteration} 帧，超过上限 {self.config.max_iterations}")

        slot = self.slot_of(edge.target, write_iteration)
        if slot in self.cache:
            self._record(edge_id, write_iteration, "cache-occupied", cost)
            return None

        self.firings += 1
        if self.firings > self.config.max_firings:
            raise FiringLimit(f"边求值次数超过上限 {self.config.max_firings}")

        sources = tuple(
            (param, node_id, self.slot_of(node_id, read_iteration)[1])
            for param, node_id in edge.sources.items()
        )
        bindings = {param: self.cache[(node_id, it)].value for param, node_id, it in sources}
        ctx = self._context(edge, bindings, read_iteration)

        if edge.viability is not None:
            try:
                viable = edge.viability.evaluate(ctx, open_call_context(ctx, VIABILITY_SALT))
            except ChgError as e:
                self._record(edge_id, write_iteration, "not-viable", cost, f"{type(e).__name__}: {e}")
                return None
            if viable is not True:
                self._record(edge_id, write_iteration, "not-viable", cost)
                return None

        try:
            output = check_value(edge.relation.evaluate(ctx, open_call_context(ctx)))
        except ChgError as e:
            self._record(edge_id, write_iteration, "eval-error", cost, f"{type(e).__name__}: {e}")
            return None

        firing = FiringRecord(
            edge_id=edge_id,
            target=edge.target,
            iteration=write_iteration,
            read_iteration=read_iteration,
            sources=sources,
            bindings=tuple(sorted(bindings.items())),
            output=output,
            weight=edge.weight,
        )
        self._record(edge_id, write_iteration, "fired", cost)
        self._insert(slot, CacheEntry(output, cost, edge_id, firing))
        return slot

    def solve(self, target: str) -> QueryResult:
        self.graph.node(target)
        if target in self.inputs or self.graph.nodes[target].has_initial:
            trivial = target in self.inputs
            value = self.inputs[target] if trivial else self.graph.nodes[target].initial
            tree = SolutionTree((target, 0), value, 0.0, (), (LeafRecord(target, value, trivial),))
            return self._result(tree)

        self._seed()
        while self._heap:
            slot = self._step()
            if slot is not None and slot[0] == target:
                logger.debug(f"求得 {_slot_text(slot)}，共求值 {self.firings} 次")
                return self._result(self.build_tree(slot))
        raise NoPath(f"没有可行路径求得 '{target}'")

    def run_frames(self, frames: int) -> FrameRun:
        """在 [0, frames) 帧内穷尽所有候选"""
        if frames < 1:
            raise SolverError(f"帧数必须不小于 1，实际为 {frames}")
        if frames - 1 > self.config.max_iterations:
            raise IterationLimit(f"需要 {frames} 帧，超过上限 {self.config.max_iterations}")
        self._horizon = frames
        self._seed()
        while self._heap:
            self._step()
        logger.debug(f"按帧运行完成: {frames} 帧，共求值 {self.firings} 次")
        return FrameRun(self, frames)

    def _result(self, tree: SolutionTree) -> QueryResult:
        trace = None if self.config.trace_level is TraceLevel.NONE else tuple(self.trace)
        return QueryResult(tree.value, tree, trace)

    def _children(self, firing: FiringRecord) -> List[Slot]:
        return sorted({(node, it) for _, node, it in firing.sources})

    def _tree_sizes(self, root: Slot) -> Dict[Slot, int]:
        """每个位置的子树求值次数；共用的子推导按每次使用计数"""
        sizes: Dict[Slot, int] = {}
        stack: List[Slot] = [root]
        while stack:
            slot = stack[-1]
            if slot in sizes:
                stack.pop()
                continue
            firing = self.cache[slot].firing
            if firing is None:
                sizes[slot] = 0
                stack.pop()
                continue
            children = self._children(firing)
            pending = [child for child in children if child not in sizes]
            if pending:
                stack.extend(pending)
                continue
            sizes[slot] = 1 + sum(sizes[child] for child in children)
            stack.pop()
        return sizes

    def build_tree(self, root: Slot) -> SolutionTree:
        """
        从缓存回溯推导树（迭代式后序遍历）

        被多个父节点读取的子推导在每个父节点下各出现一次，
        因此 total_cost 恰为 firings 的权重之和。
        """
        root_entry = self.cache.get(root)
        if root_entry is None:
            raise NoPath(f"'{_slot_text(root)}' 未求得")
        size = self._tree_sizes(root)[root]
        if size > self.config.max_firings:
            raise FiringLimit(f"'{_slot_text(root)}' 的推导树有 {size} 次求值，超过上限 {self.config.max_firings}")

        firings: List[FiringRecord] = []
        leaves: Dict[str, LeafRecord] = {}
        stack: List[Tuple[Slot, bool]] = [(root, False)]
        while stack:
            slot, expanded = stack.pop()
            entry = self.cache[slot]
            if expanded:
                firings.append(entry.firing)
                continue
            if entry.firing is None:
                leaves[slot[0]] = LeafRecord(slot[0], entry.value, entry.producer == "input")
                continue
            stack.append((slot, True))
            stack.extend((child, False) for child in reversed(self._children(entry.firing)))

        return SolutionTree(
            root=root,
            value=root_entry.value,
            total_cost=root_entry.cost,
            firings=tuple(firings),
            leaves=tuple(leaves[name] for name in sorted(leaves)),
        )


# ---- 模块级操作 ----

def solve(graph: Hypergraph, target: str, inputs: Optional[Mapping[str, Any]] = None,
          config: Optional[SolverConfig] = None, registry: Optional[BuiltinRegistry] = None) -> QueryResult:
    """求解目标节点的最小代价推导"""
    return HyperpathSolver(graph, inputs, config, registry).solve(target)


def run_frames(graph: Hypergraph, frames: int, inputs: Optional[Mapping[str, Any]] = None,
               config: Optional[SolverConfig] = None, registry: Optional[BuiltinRegistry] = None) -> FrameRun:
    return HyperpathSolver(graph, inputs, config, registry).run_frames(frames)


def solve_series(graph: Hypergraph, target: str, inputs: Optional[Mapping[str, Any]] = None,
                 config: Optional[SolverConfig] = None, frames: int = 1,
                 registry: Optional[BuiltinRegistry] = None) -> List[Tuple[int, Any]]:
    """目标节点在第 0..frames-1 帧的取值"""
    graph.node(target)
    return run_frames(graph, frames, inputs, config, registry).series(target)


def explain(result: QueryResult) -> str:
    """把推导树渲染为缩进文本，共享的子推导只展开一次"""
    tree = result.tree
    firings = {firing.slot: firing for firing in tree.firings}
    leaves = {leaf.node: leaf for leaf in tree.leaves}
    lines: List[str] = []
    shown: Set[Slot] = set()
    stack: List[Tuple[Slot, int]] = [(tree.root, 0)]
    while stack:
        slot, depth = stack.pop()
        indent = "  " * depth
        firing = firings.get(slot)
        if firing is None:
            leaf = leaves[slot[0]]
            lines.append(f"{indent}{leaf.node} = {format_value(leaf.value)} ({leaf.annotation}, cost 0)")
            continue
        if slot in shown:
            lines.append(f"{indent}{_slot_text(slot)} = {format_value(firing.output)} (shared, see above)")
            continue
        shown.add(slot)
        bound = ", ".join(f"{name} = {format_value(value)}" for name, value in firing.bindings)
        edge_text = f"{firing.edge_id}[{firing.read_iteration}]" if firing.read_iteration > 0 else firing.edge_id
        cost = tree.total_cost if slot == tree.root else None
        suffix = f"weight {firing.weight:g}" + (f", total {cost:g}" if cost is not None else "")
        lines.append(f"{indent}{_slot_text(slot)} = {format_value(firing.output)} <- {edge_text}({bound}) [{suffix}]")
        children = sorted({(node, it) for _, node, it in firing.sources}, reverse=True)
        stack.extend((child, depth + 1) for child in children)
    return "\n".join(lines)


def replay(tree: SolutionTree, graph: Hypergraph, rng_seed: int = 0,
           registry: Optional[BuiltinRegistry] = None) -> Any:
    """按拓扑顺序重新执行推导树中的每次求值，返回根节点的值"""
    values: Dict[Slot, Any] = {(leaf.node, 0): leaf.value for leaf in tree.leaves}
    for firing in tree.firings:
        edge = graph.edges.get(firing.edge_id)
        if edge is None:
            raise ReplayMismatch(f"图中没有边 '{firing.edge_id}'")
        bindings = {}
        for param, node_id, iteration in firing.sources:
            if (node_id, iteration) not in values:
                raise ReplayMismatch(f"'{_slot_text((node_id, iteration))}' 在使用前未求得")
            bindings[param] = values[(node_id, iteration)]
        if not all(values_equal(bindings[name], value) for name, value in firing.bindings):
            raise ReplayMismatch(f"边 '{firing.edge_id}' 的绑定值与记录不符")
        ctx = EvalContext(bindings, rng_seed, edge.id, firing.read_iteration, graph.tables, registry)
        if edge.viability is not None:
            if edge.viability.evaluate(ctx, open_call_context(ctx, VIABILITY_SALT)) is not True:
                raise ReplayMismatch(f"边 '{firing.edge_id}' 重放时不可行")
        output = edge.relation.evaluate(ctx, open_call_context(ctx))
        if not values_equal(output, firing.output):
            raise ReplayMismatch(
                f"边 '{firing.edge_id}' 重放得到 {format_value(output)}，记录为 {format_value(firing.output)}"
            )
        values[firing.slot] = output
    if tree.root not in values:
        raise ReplayMismatch(f"根节点 '{_slot_text(tree.root)}' 未被重放")
    return values[tree.root]


def sample_value(value: Any) -> float:
    """数值原样，布尔编码为 0/1"""
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    raise TypeMismatch(f"蒙特卡洛目标必须是数值或布尔值，实际为 {value!r}")


def run_replica(graph: Hypergraph, target: str, inputs: Optional[Mapping[str, Any]],
                config: SolverConfig, run_index: int,
                registry: Optional[BuiltinRegistry] = None) -> Optional[float]:
    """第 k 次运行使用种子 seed + k；求解失败时返回 None"""
    try:
        result = solve(graph, target, inputs, config.with_seed(config.rng_seed + run_index), registry)
    except SolverError as e:
        logger.debug(f"第 {run_index} 次运行失败: {type(e).__name__}: {e}")
        return None
    return sample_value(result.value)


def summarize(samples: Sequence[Optional[float]]) -> MonteCarloSummary:
    succeeded = [s for s in samples if s is not None]
    if not succeeded:
        raise AllRunsFailed(f"{len(samples)} 次运行全部失败")
    data = np.asarray(succeeded, dtype=float)
    return MonteCarloSummary(
        mean=float(np.mean(data)),
        variance=float(np.var(data)),
        min=float(np.min(data)),
        max=float(np.max(data)),
        samples=tuple(succeeded),
        runs=len(samples),
        failures=len(samples) - len(succeeded),
    )


def monte_carlo(graph: Hypergraph, target: str, inputs: Optional[Mapping[str, Any]] = None,
                config: Optional[SolverConfig] = None, runs: int = 1,
                registry: Optional[BuiltinRegistry] = None) -> MonteCarloSummary:
    """重复求解并汇总均值、总体方差与极值"""
    if runs < 1:
        raise SolverError(f"运行次数必须不小于 1，实际为 {runs}")
    config = config or SolverConfig()
    graph.node(target)
    return summarize([run_replica(graph, target, inputs, config, k, registry) for k in range(runs)])
