"""
服务层模块 - 模型读写、数据表、仿真与绘图
"""

from .model_service import ModelService, load_model, save_model
from .simulation_service import SimulationService
from .table_service import (
    generate_synthetic_building_load,
    generate_synthetic_solar,
    load_csv_table,
    write_csv_table,
)
from .plot_service import plot_lines, plot_series

__all__ = [
    'ModelService',
    'SimulationService',
    'generate_synthetic_building_load',
    'generate_synthetic_solar',
    'load_csv_table',
    'load_model',
    'plot_lines',
    'plot_series',
    'save_model',
    'write_csv_table',
]
