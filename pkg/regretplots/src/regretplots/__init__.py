from .figures import (
    LoadError,
    RegretSeries,
    build_regret_figure,
    load_aggregate,
    load_runs,
    render_regret_figure,
)

__all__ = [
    "LoadError",
    "RegretSeries",
    "build_regret_figure",
    "load_aggregate",
    "load_runs",
    "render_regret_figure",
]
