"""Rolling-window backtest and its report writers"""

from .engine import (
    BacktestReport,
    ConfigKey,
    WindowFit,
    WindowRecord,
    annualize,
    configuration_keys,
    fit_window,
    run_backtest,
)
from .reports import (
    assortativity_statistics,
    load_report_document,
    performance_table,
    report_document,
    write_report,
)

__all__ = [
    "BacktestReport",
    "ConfigKey",
    "WindowFit",
    "WindowRecord",
    "annualize",
    "configuration_keys",
    "fit_window",
    "run_backtest",
    "assortativity_statistics",
    "load_report_document",
    "performance_table",
    "report_document",
    "write_report",
]
