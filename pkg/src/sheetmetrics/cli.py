"""Command-line interface.

Four subcommands over canonical workbook JSON and score CSVs::

    sheetmetrics analyze WORKBOOK        per-formula metric table
    sheetmetrics flag WORKBOOK POLICY    threshold violations
    sheetmetrics medians SCORES          per-formula score medians
    sheetmetrics correlate METRICS MEDIANS   score/metric correlation matrix

Data goes to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 analysis error (formula parse failures, circular references),
2 input error (unreadable or malformed files, bad ids), 3 policy
violations found.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from .graph import GraphBuildError, PrecedentGraph, build_graph, detect_cycles
from .metrics import (
    COUNT_KEYS,
    METRIC_KEYS,
    FormulaMetrics,
    MetricsConfig,
    compute_all,
)
from .stats import (
    MEASURE_KEYS,
    correlation_matrix,
    load_scores,
    medians_by_formula,
)
from .workbook import (
    AddressError,
    CellAddress,
    Workbook,
    WorkbookError,
    load_workbook,
    parse_address,
)

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2
EXIT_POLICY = 3

ANALYZE_COLUMNS = ["sheet", "cell", "formula", *METRIC_KEYS]
FLAG_COLUMNS = ["sheet", "cell", "metric", "value", "bound"]
MEDIANS_COLUMNS = ["formula_id", *MEASURE_KEYS]
CORRELATE_COLUMNS = ["measure", *METRIC_KEYS]

_MAX_BOUND_METRICS = frozenset({"m1_1", "m1_2", "m1_3", "m1_4", "m1_5", "m2_1", "m2_4"})
_MIN_BOUND_METRICS = frozenset({"m2_2", "m2_3"})

METRICS_HEADER = ["formula_id", *METRIC_KEYS]
MEDIANS_HEADER = ["formula_id", *MEASURE_KEYS]


class CliError(Exception):
    """Carries an exit code and the diagnostic lines to print."""

    def __init__(self, code: int, lines: list[str] | str):
        self.code = code
        self.lines = [lines] if isinstance(lines, str) else list(lines)
        super().__init__("\n".join(self.lines))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-metric bounds: ``max`` caps a metric, ``min`` demands a floor.

    ``m1_3`` participates as a max bound; a bound of 0 flags every
    formula that uses a conditional function.
    """

    bounds: dict[str, tuple[str, float]]

    def __post_init__(self) -> None:
        if not self.bounds:
            raise ValueError("policy must set at least one bound")
        for metric, (kind, bound) in self.bounds.items():
            if metric not in METRIC_KEYS:
                raise ValueError(f"unknown metric {metric!r}")
            expected = "max" if metric in _MAX_BOUND_METRICS else "min"
            if kind != expected:
                raise ValueError(f"{metric} takes a {expected!r} bound, not {kind!r}")
            if bound < 0:
                raise ValueError(f"{metric} bound must be non-negative")

    def violations(self, metrics: FormulaMetrics) -> list[tuple[str, int | Fraction, float]]:
        found = []
        for metric in METRIC_KEYS:
            if metric not in self.bounds:
                continue
            kind, bound = self.bounds[metric]
            value = metrics.value(metric)
            if (kind == "max" and value > bound) or (kind == "min" and value < bound):
                found.append((metric, value, bound))
        return found


def load_policy(text: str) -> ThresholdPolicy:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid policy JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError("policy must be a JSON object")
    bounds: dict[str, tuple[str, float]] = {}
    for metric, entry in payload.items():
        if not isinstance(entry, dict) or len(entry) != 1:
            raise ValueError(f"{metric}: expected an object with one of 'max'/'min'")
        (kind, bound), = entry.items()
        if kind not in ("max", "min"):
            raise ValueError(f"{metric}: expected 'max' or 'min', got {kind!r}")
        if isinstance(bound, bool) or not isinstance(bound, (int, float)):
            raise ValueError(f"{metric}: bound must be a number")
        bounds[metric] = (kind, bound)
    return ThresholdPolicy(bounds)


# --- formatting -----------------------------------------------------------

def _percent_out(value: Fraction, paper_compat: bool) -> int | float:
    """Truncate toward zero in compat mode, else round to 2 decimals."""
    if paper_compat:
        return int(value)
    return _number_out(round(float(value), 2))


def _number_out(value: float) -> int | float:
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def _metric_out(metric: str, metrics: FormulaMetrics, paper_compat: bool) -> int | float:
    value = metrics.value(metric)
    if metric in COUNT_KEYS:
        return int(value)
    return _percent_out(value, paper_compat)


def _emit(rows: list[dict[str, object]], columns: list[str], fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
        return
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_field(row[column]) for column in columns])
    sys.stdout.write(buffer.getvalue())


def _csv_field(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


# --- shared loading -------------------------------------------------------

def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc}") from exc


def _load_workbook_file(path: str) -> Workbook:
    try:
        return load_workbook(_read_file(path))
    except WorkbookError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from exc


def _config_from(args: argparse.Namespace) -> MetricsConfig:
    try:
        config = MetricsConfig.paper_compatible() if args.paper_compat else MetricsConfig()
        overrides = {}
        if args.row_threshold is not None:
            overrides["distant_row_threshold"] = args.row_threshold
        if args.col_threshold is not None:
            overrides["distant_column_threshold"] = args.col_threshold
        if args.conditional_functions is not None:
            names = [name.strip() for name in args.conditional_functions.split(",")]
            overrides["conditional_functions"] = frozenset(name for name in names if name)
        if overrides:
            config = dataclasses.replace(config, **overrides)
        return config
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc


def _build_graph_checked(workbook: Workbook) -> PrecedentGraph:
    try:
        graph = build_graph(workbook)
    except GraphBuildError as exc:
        raise CliError(
            EXIT_ANALYSIS,
            [f"{address}: {reason}" for address, reason in exc.failures],
        ) from exc
    cycles = detect_cycles(graph)
    if cycles:
        lines = []
        for cycle in cycles:
            path = " -> ".join(str(address) for address in cycle)
            lines.append(f"circular reference: {path} -> {cycle[0]}")
        raise CliError(EXIT_ANALYSIS, lines)
    return graph


def _metric_rows(
    workbook: Workbook, config: MetricsConfig, selected: list[CellAddress] | None
) -> list[tuple[CellAddress, str, FormulaMetrics]]:
    graph = _build_graph_checked(workbook)
    wanted = set(selected) if selected is not None else None
    rows = []
    for cell in workbook.formula_cells():
        if wanted is not None and cell.address not in wanted:
            continue
        assert cell.formula is not None
        rows.append((cell.address, cell.formula, compute_all(workbook, graph, cell.address, config)))
    return rows


def _selected_addresses(args: argparse.Namespace, workbook: Workbook) -> list[CellAddress] | None:
    if not args.formula:
        return None
    addresses = []
    default_sheet = workbook.sheet_names[0]
    for text in args.formula:
        try:
            address = parse_address(text, default_sheet=default_sheet)
        except AddressError as exc:
            raise CliError(EXIT_INPUT, f"--formula {text}: {exc}") from exc
        if not workbook.has_sheet(address.sheet):
            raise CliError(EXIT_INPUT, f"--formula {text}: no sheet named {address.sheet!r}")
        cell = workbook.cell(address)
        if cell is None or not cell.is_formula:
            raise CliError(EXIT_INPUT, f"--formula {text}: not a formula cell")
        addresses.append(address)
    return addresses


# --- subcommands ----------------------------------------------------------

def cmd_analyze(args: argparse.Namespace) -> int:
    workbook = _load_workbook_file(args.workbook)
    config = _config_from(args)
    selected = _selected_addresses(args, workbook)
    rows = []
    for address, formula, metrics in _metric_rows(workbook, config, selected):
        row: dict[str, object] = {
            "sheet": address.sheet,
            "cell": address.a1(),
            "formula": formula,
        }
        for metric in METRIC_KEYS:
            row[metric] = _metric_out(metric, metrics, config.paper_compat)
        rows.append(row)
    _emit(rows, ANALYZE_COLUMNS, args.format)
    return EXIT_OK


def cmd_flag(args: argparse.Namespace) -> int:
    workbook = _load_workbook_file(args.workbook)
    config = _config_from(args)
    try:
        policy = load_policy(_read_file(args.policy))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"{args.policy}: {exc}") from exc
    rows = []
    for address, _formula, metrics in _metric_rows(workbook, config, None):
        for metric, value, bound in policy.violations(metrics):
            shown = (
                int(value)
                if metric in COUNT_KEYS
                else _percent_out(value, config.paper_compat)
            )
            rows.append(
                {
                    "sheet": address.sheet,
                    "cell": address.a1(),
                    "metric": metric,
                    "value": shown,
                    "bound": _number_out(float(bound)),
                }
            )
    _emit(rows, FLAG_COLUMNS, args.format)
    return EXIT_POLICY if rows else EXIT_OK


def cmd_medians(args: argparse.Namespace) -> int:
    try:
        records = load_scores(_read_file(args.scores))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"{args.scores}: {exc}") from exc
    medians = medians_by_formula(records)
    rows = []
    for formula_id in sorted(medians):
        u1, u2, u3 = medians[formula_id]
        rows.append(
            {
                "formula_id": formula_id,
                "u1": _number_out(float(u1)),
                "u2": _number_out(float(u2)),
                "u3": _number_out(float(u3)),
            }
        )
    _emit(rows, MEDIANS_COLUMNS, args.format)
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    metrics_table = _load_metrics_csv(args.metrics)
    medians = _load_medians_csv(args.medians)
    try:
        matrix = correlation_matrix(metrics_table, medians)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    rows = []
    for measure in MEASURE_KEYS:
        row: dict[str, object] = {"measure": measure}
        for metric in METRIC_KEYS:
            cell = matrix[measure][metric]
            row[metric] = f"{cell.rho:.3f}{cell.mark}"
        rows.append(row)
    _emit(rows, CORRELATE_COLUMNS, args.format)
    return EXIT_OK


def _load_metrics_csv(path: str) -> dict[str, FormulaMetrics]:
    reader = csv.reader(io.StringIO(_read_file(path)))
    header = next(reader, None)
    if header != METRICS_HEADER:
        raise CliError(EXIT_INPUT, f"{path}: expected header {','.join(METRICS_HEADER)}")
    table: dict[str, FormulaMetrics] = {}
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(METRICS_HEADER):
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: expected {len(METRICS_HEADER)} fields")
        formula_id = row[0]
        if formula_id in table:
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: duplicate formula id {formula_id!r}")
        try:
            counts = [int(field) for field in row[1:6]]
            percents = [Fraction(field) for field in row[6:]]
            table[formula_id] = FormulaMetrics(*counts, *percents)
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: {exc}") from exc
    return table


def _load_medians_csv(path: str) -> dict[str, tuple[float, float, float]]:
    reader = csv.reader(io.StringIO(_read_file(path)))
    header = next(reader, None)
    if header != MEDIANS_HEADER:
        raise CliError(EXIT_INPUT, f"{path}: expected header {','.join(MEDIANS_HEADER)}")
    medians: dict[str, tuple[float, float, float]] = {}
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(MEDIANS_HEADER):
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: expected {len(MEDIANS_HEADER)} fields")
        formula_id = row[0]
        if formula_id in medians:
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: duplicate formula id {formula_id!r}")
        try:
            medians[formula_id] = (float(row[1]), float(row[2]), float(row[3]))
        except ValueError as exc:
            raise CliError(EXIT_INPUT, f"{path}: row {row_number}: {exc}") from exc
    return medians


# --- entry point ----------------------------------------------------------

def _add_format_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format (default csv)"
    )


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--paper-compat",
        action="store_true",
        help="integer-truncated percentages and distant-row threshold 20",
    )
    parser.add_argument("--row-threshold", type=int, help="distant-reference row threshold")
    parser.add_argument("--col-threshold", type=int, help="distant-reference column threshold")
    parser.add_argument(
        "--conditional-functions",
        metavar="NAME,NAME,...",
        help="replace the set of function names counted as conditional",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheetmetrics",
        description="Understandability metrics for spreadsheet formulas.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    analyze = subparsers.add_parser("analyze", help="metric table for every formula cell")
    analyze.add_argument("workbook", help="workbook JSON file")
    analyze.add_argument(
        "--formula",
        action="append",
        metavar="SHEET!CELL",
        help="restrict output to this formula cell (repeatable)",
    )
    _add_format_flag(analyze)
    _add_metric_flags(analyze)
    analyze.set_defaults(handler=cmd_analyze)

    flag = subparsers.add_parser("flag", help="list cells whose metrics violate a policy")
    flag.add_argument("workbook", help="workbook JSON file")
    flag.add_argument("policy", help="policy JSON file")
    _add_format_flag(flag)
    _add_metric_flags(flag)
    flag.set_defaults(handler=cmd_flag)

    medians = subparsers.add_parser("medians", help="per-formula medians of reader scores")
    medians.add_argument("scores", help="score CSV file")
    _add_format_flag(medians)
    medians.set_defaults(handler=cmd_medians)

    correlate = subparsers.add_parser(
        "correlate", help="correlation matrix of score medians against metrics"
    )
    correlate.add_argument("metrics", help="per-formula metrics CSV file")
    correlate.add_argument("medians", help="per-formula medians CSV file")
    _add_format_flag(correlate)
    correlate.set_defaults(handler=cmd_correlate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as error:
        for line in error.lines:
            print(line, file=sys.stderr)
        return error.code


if __name__ == "__main__":
    sys.exit(main())
