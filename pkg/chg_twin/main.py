"""
命令行入口 - 查询、校验、合并模型与运行微电网场景
"""
import argparse
import csv
import io
import json
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

from .config import EngineConfig
from .core.factory import ComponentFactory
from .core.hypergraph import Hypergraph
from .core.solver import QueryResult, TraceLevel, explain
from .core.tables import Table, column_type_of
from .core.values import TableHandle, format_value, parse_cli_value, value_kind
from .exceptions import (
    ChgError,
    ConfigurationError,
    EvaluationError,
    GraphError,
    MicrogridError,
    ModelIOError,
    NoPath,
    SolverError,
    SpecInvariantViolation,
    UnknownNode,
    UsageError,
    ValidationError,
)
from .microgrid.actors import GridSpec, load_grid_spec, scenario_spec
from .microgrid.scenario import run_scenario
from .services.model_service import ModelService
from .services.plot_service import plot_series
from .services.simulation_service import SimulationService
from .services.table_service import load_csv_table, table_from_columns, write_csv_table
from .utils.logger import configure_logging, logger

EXIT_OK = 0
EXIT_NO_PATH = 2
EXIT_INVALID_MODEL = 3
EXIT_EVALUATION = 4
EXIT_USAGE = 5


def exit_code_for(error: ChgError) -> int:
    """异常类型 → 退出码"""
    if isinstance(error, (NoPath, UnknownNode)):
        return EXIT_NO_PATH
    if isinstance(error, (UsageError, ConfigurationError)):
        return EXIT_USAGE
    if isinstance(error, (ModelIOError, SpecInvariantViolation)):
        return EXIT_INVALID_MODEL
    if isinstance(error, (EvaluationError, SolverError, MicrogridError)):
        return EXIT_EVALUATION
    if isinstance(error, GraphError):
        return EXIT_INVALID_MODEL
    return EXIT_EVALUATION


class _ArgumentParser(argparse.ArgumentParser):
    """用法错误改为抛出 UsageError，由统一的退出码映射处理"""

    def error(self, message: str):
        raise UsageError(message)


def _key_value(text: str, flag: str) -> List[str]:
    if "=" not in text:
        raise UsageError(f"{flag} 的格式应为 key=value，实际为 {text!r}")
    key, value = text.split("=", 1)
    if not key:
        raise UsageError(f"{flag} 缺少键: {text!r}")
    return [key, value]


def parse_inputs(pairs: Sequence[str], type_pairs: Sequence[str] = ()) -> Dict[str, Any]:
    """解析 --input k=v 与 --input-type k=type"""
    overrides = dict(_key_value(text, "--input-type") for text in type_pairs)
    inputs: Dict[str, Any] = {}
    for text in pairs:
        key, raw = _key_value(text, "--input")
        inputs[key] = parse_cli_value(raw, overrides.get(key))
    unknown = set(overrides) - set(inputs)
    if unknown:
        raise UsageError(f"--input-type 指定了没有输入值的节点: {sorted(unknown)}")
    return inputs


def _json_value(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_json_value(item) for item in value]
    if isinstance(value, TableHandle):
        return str(value)
    return value


def _csv_text(rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow([format_value(cell) if not isinstance(cell, str) else cell for cell in row])
    return buffer.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="chg-twin", description="约束超图数字孪生引擎")
    parser.add_argument("--config", help="JSON 配置文件")
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    sub.required = True

    def model_query(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True)
        p.add_argument("--target", required=True)
        p.add_argument("--input", action="append", default=[], metavar="K=V")
        p.add_argument("--input-type", action="append", default=[], metavar="K=TYPE")
        p.add_argument("--seed", type=int)
        return p

    solve = model_query("solve", "求解一个节点")
    solve.add_argument("--format", choices=("text", "csv", "structured"), default="text")
    solve.add_argument("--explain", action="store_true")
    solve.add_argument("--trace", metavar="PATH", help="把全部求值尝试写成 JSON 行")

    series = model_query("series", "逐帧求解一个节点")
    series.add_argument("--frames", type=int, required=True)
    series.add_argument("--out", help="CSV 输出路径，缺省时写到标准输出")
    series.add_argument("--plot", help="SVG 输出路径")

    montecarlo = model_query("montecarlo", "重复随机求解并汇总")
    montecarlo.add_argument("--runs", type=int, required=True)
    montecarlo.add_argument("--format", choices=("text", "structured"), default="text")

    validate = sub.add_parser("validate", help="校验模型")
    validate.add_argument("--model", required=True)

    merge = sub.add_parser("merge", help="按标识合并模型")
    merge.add_argument("models", nargs="+")
    merge.add_argument("-o", "--output", required=True)

    microgrid = sub.add_parser("microgrid", help="微电网场景")
    microgrid_sub = microgrid.add_subparsers(dest="action", parser_class=_ArgumentParser)
    microgrid_sub.required = True
    run = microgrid_sub.add_parser("run", help="运行场景")
    run.add_argument("--scenario", choices=("islanded", "connected"), default="islanded")
    run.add_argument("--hours", type=int, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--spec", help="电网描述 JSON，或带 metadata.microgrid 的模型文档")
    run.add_argument("--solar-csv")
    run.add_argument("--load-csv", action="append", default=[], metavar="BUILDING=PATH")
    run.add_argument("--out", help="CSV 输出路径，缺省时写到标准输出")
    run.add_argument("--plot", help="SVG 输出路径")
    return parser


class ChgTwinApp:
    """命令行应用 - 持有配置与服务，每个子命令一个处理方法"""

    def __init__(self, config: Optional[EngineConfig] = None, stdout: Optional[TextIO] = None):
        self.config = config or EngineConfig.create_default()
        self.stdout = stdout or sys.stdout
        self._initialize_services()

    def _initialize_services(self):
        self.registry = ComponentFactory.create_registry()
        self.model_service = ModelService(self.config)
        self.simulation_service = SimulationService(self.config, self.registry)
        logger.debug("命令行服务初始化完成")

    def _write(self, text: str) -> None:
        self.stdout.write(text if text.endswith("\n") else text + "\n")

    def _load_for_query(self, args) -> Hypergraph:
        graph = self.model_service.load(args.model)
        if args.target not in graph.nodes:
            raise NoPath(f"目标节点 '{args.target}' 不在模型中")
        return graph

    def run(self, args) -> int:
        handler = getattr(self, f"cmd_{args.command}")
        return handler(args)

    # ---- 子命令 ----

    def cmd_solve(self, args) -> int:
        inputs = parse_inputs(args.input, args.input_type)
        graph = self._load_for_query(args)
        overrides: Dict[str, Any] = {}
        if args.seed is not None:
            overrides["rng_seed"] = args.seed
        if args.trace:
            overrides["trace_level"] = TraceLevel.FULL
        solver = ComponentFactory.create_solver(graph, inputs, self.config, self.registry, **overrides)
        try:
            result = solver.solve(args.target)
        finally:
            if args.trace:
                self._write_trace(args.trace, solver.trace)
        self._write(self._render_result(args, result))
        return EXIT_OK

    def _write_trace(self, path: str, records) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                for record in records:
                    handle.write(record.to_json() + "\n")
        except OSError as e:
            raise UsageError(f"无法写入追踪文件 {path}: {e}") from e

    def _render_result(self, args, result: QueryResult) -> str:
        if args.format == "structured":
            document = {
                "target": args.target,
                "value": _json_value(result.value),
                "total_cost": result.total_cost,
                "firings": len(result.tree.firings),
            }
            if args.explain:
                document["explain"] = explain(result)
            return json.dumps(document, sort_keys=True, ensure_ascii=False)
        if args.format == "csv":
            text = _csv_text([("node", "value", "cost"), (args.target, result.value, result.total_cost)])
        else:
            text = format_value(result.value)
        if args.explain:
            text = text.rstrip("\n") + "\n" + explain(result)
        return text

    def cmd_series(self, args) -> int:
        if args.frames < 1:
            raise UsageError(f"--frames 必须不小于 1，实际为 {args.frames}")
        inputs = parse_inputs(args.input, args.input_type)
        graph = self._load_for_query(args)
        points = self.simulation_service.series(graph, args.target, args.frames, inputs, args.seed)
        table = self._series_table(args.target, points)
        if args.out:
            write_csv_table(table, args.out)
        else:
            self.stdout.write(_csv_text([table.column_names, *table.rows]))
        if args.plot:
            numeric = [(k, float(v)) for k, v in points if not isinstance(v, (str, tuple, TableHandle))]
            if len(numeric) != len(points):
                raise UsageError(f"节点 '{args.target}' 的取值不是数值，无法绘图")
            plot_series(args.plot, args.target, numeric, self.config.plot)
        return EXIT_OK

    @staticmethod
    def _series_table(target: str, points) -> Table:
        kinds = {value_kind(value) for _, value in points}
        value_type = column_type_of(kinds.pop()) if len(kinds) == 1 else "text"
        values = [value if value_type != "text" else format_value(value) for _, value in points]
        return table_from_columns(
            target,
            {"iteration": [k for k, _ in points], "value": values},
            {"iteration": "integer", "value": value_type},
        )

    def cmd_montecarlo(self, args) -> int:
        if args.runs < 1:
            raise UsageError(f"--runs 必须不小于 1，实际为 {args.runs}")
        inputs = parse_inputs(args.input, args.input_type)
        graph = self._load_for_query(args)
        summary = self.simulation_service.monte_carlo(graph, args.target, args.runs, inputs, args.seed)
        if args.format == "structured":
            record = summary.as_dict()
            self._write(json.dumps(record, sort_keys=True))
        else:
            lines = [f"{key}: {format_value(value)}" for key, value in summary.as_dict().items()]
            self._write("\n".join(lines))
        return EXIT_OK

    def cmd_validate(self, args) -> int:
        try:
            report = self.model_service.validate_file(args.model, self.registry)
        except ValidationError as e:
            report = e.report
        self._write(report.render())
        return EXIT_OK if report.ok else EXIT_INVALID_MODEL

    def cmd_merge(self, args) -> int:
        if len(args.models) < 2:
            raise UsageError("merge 至少需要两个模型")
        graph = self.model_service.merge_files(args.models, args.output)
        self._write(graph.summary())
        return EXIT_OK

    def cmd_microgrid(self, args) -> int:
        if args.hours < 1:
            raise UsageError(f"--hours 必须不小于 1，实际为 {args.hours}")
        base: Optional[GridSpec] = load_grid_spec(args.spec) if args.spec else None
        spec = scenario_spec(args.scenario, base)
        solar = load_csv_table(args.solar_csv, "solar") if args.solar_csv else None
        buildings = {}
        for text in args.load_csv:
            name, path = _key_value(text, "--load-csv")
            buildings[name] = load_csv_table(path, f"building {name}")

        result = run_scenario(spec, args.hours, args.seed, self.config, solar, buildings, self.registry)
        table = result.to_table(f"microgrid {args.scenario}")
        if args.out:
            write_csv_table(table, args.out)
            self._write(f"{args.scenario}: {len(table)} 行 -> {args.out}")
        else:
            self.stdout.write(_csv_text([table.column_names, *table.rows]))
        if args.plot:
            result.plot(args.plot, self.config)
        return EXIT_OK


def load_config(path: Optional[str]) -> EngineConfig:
    config = EngineConfig.from_file(path) if path else EngineConfig.create_default()
    return config.apply_environment()


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
         stderr: Optional[TextIO] = None) -> int:
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config)
        configure_logging(config.logging)
        return ChgTwinApp(config, stdout).run(args)
    except ChgError as e:
        stderr.write(f"{type(e).__name__}: {e}\n")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
