"""Understandability metrics for spreadsheet formulas.

Static analysis of workbook JSON documents: a formula parser, a
precedent (dependency) graph, nine per-formula metrics, and rank
statistics for relating the metrics to reader-study scores.
"""

from .graph import (
    CircularReferenceError,
    GraphBuildError,
    PrecedentGraph,
    build_graph,
    chain_length,
    detect_cycles,
)
from .metrics import (
    DEFAULT_CONDITIONAL_FUNCTIONS,
    METRIC_KEYS,
    FormulaMetrics,
    MetricsConfig,
    compute_all,
)
from .parser import (
    FormulaError,
    RefOccurrence,
    ast_height,
    function_calls,
    parse_formula,
    reference_occurrences,
)
from .references import ReferenceGroup, expand, resolve
from .stats import (
    CorrelationCell,
    ScoreRecord,
    correlation_matrix,
    median,
    medians_by_formula,
    rank_with_ties,
    significance,
    spearman_rho,
)
from .workbook import (
    AddressError,
    Cell,
    CellAddress,
    Sheet,
    UnknownSheetError,
    Workbook,
    WorkbookError,
    column_index_to_name,
    column_name_to_index,
    load_workbook,
    parse_address,
)

__version__ = "0.1.0"

__all__ = [
    "AddressError",
    "Cell",
    "CellAddress",
    "CircularReferenceError",
    "CorrelationCell",
    "DEFAULT_CONDITIONAL_FUNCTIONS",
    "FormulaError",
    "FormulaMetrics",
    "GraphBuildError",
    "METRIC_KEYS",
    "MetricsConfig",
    "PrecedentGraph",
    "RefOccurrence",
    "ReferenceGroup",
    "ScoreRecord",
    "Sheet",
    "UnknownSheetError",
    "Workbook",
    "WorkbookError",
    "ast_height",
    "build_graph",
    "chain_length",
    "column_index_to_name",
    "column_name_to_index",
    "compute_all",
    "correlation_matrix",
    "detect_cycles",
    "expand",
    "function_calls",
    "load_workbook",
    "median",
    "medians_by_formula",
    "parse_address",
    "parse_formula",
    "rank_with_ties",
    "reference_occurrences",
    "resolve",
    "significance",
    "spearman_rho",
]
