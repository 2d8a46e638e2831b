"""
绘图服务 - 输出可复现的静态 SVG 折线图
"""
from typing import Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..config import PlotConfig  # noqa: E402
from ..exceptions import IoError  # noqa: E402
from ..utils.logger import logger  # noqa: E402

_DPI = 72


def _figure(config: PlotConfig):
    return plt.subplots(figsize=(config.WIDTH_PX / _DPI, config.HEIGHT_PX / _DPI), dpi=_DPI)


def _save(fig, path: str, config: PlotConfig) -> None:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise IoError(f"无法写入图像 {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.debug(f"已写出图像 {path}")


def plot_lines(path: str, series: Mapping[str, Sequence[Tuple[float, float]]], title: str = "",
               xlabel: str = "iteration", ylabel: str = "value", config: Optional[PlotConfig] = None) -> None:
    """
    把若干条 (x, y) 序列画在同一坐标系中

    Args:
        path: 输出 SVG 路径
        series: 图例名 → 点序列
    """
    config = config or PlotConfig()
    with matplotlib.rc_context({"svg.hashsalt": config.SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = _figure(config)
        for label in series:
            points = series[label]
            ax.plot([x for x, _ in points], [y for _, y in points], label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(loc="upper right", fontsize="small")
        ax.grid(True, ls=":", alpha=0.4)
        fig.tight_layout()
        _save(fig, path, config)


def plot_series(path: str, node_id: str, points: Sequence[Tuple[int, float]],
                config: Optional[PlotConfig] = None) -> None:
    """单个节点随迭代帧变化的折线图"""
    plot_lines(path, {node_id: points}, title=node_id, ylabel=node_id, config=config)
