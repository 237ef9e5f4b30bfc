"""Per-formula understandability metrics.

Two families are computed for each formula cell:

* complexity — how much is going on inside the formula: referenced-cell
  count (``m1_1``), reference-group count (``m1_2``), presence of a
  conditional function (``m1_3``), operation nesting depth (``m1_4``),
  and the length of the longest dependency chain hanging off the cell
  (``m1_5``);
* placement — where the referenced cells sit relative to the formula:
  percentage referenced against the left-to-right / top-to-bottom
  reading direction (``m2_1``), in the same row (``m2_2``), in the same
  column (``m2_3``), or far away (``m2_4``).

Percentages are kept as exact rationals; rendering (rounding or
truncation) is the output layer's concern.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .graph import PrecedentGraph, chain_length
from .parser import FormulaAst, ast_height, function_calls, parse_formula, reference_occurrences
from .references import ReferenceGroup, expand, resolve
from .workbook import CellAddress, Workbook

DEFAULT_CONDITIONAL_FUNCTIONS = frozenset(
    {"IF", "COUNTIF", "SUMIF", "VLOOKUP", "HLOOKUP", "LOOKUP", "CHOOSE", "IFERROR"}
)

METRIC_KEYS = ("m1_1", "m1_2", "m1_3", "m1_4", "m1_5", "m2_1", "m2_2", "m2_3", "m2_4")
COUNT_KEYS = ("m1_1", "m1_2", "m1_3", "m1_4", "m1_5")
PERCENT_KEYS = ("m2_1", "m2_2", "m2_3", "m2_4")


@dataclass(frozen=True)
class MetricsConfig:
    """Tunable knobs for the metric definitions.

    ``paper_compat`` selects integer-truncated percentage rendering in
    the output layer; build compat configurations through
    :meth:`paper_compatible` so the distant-row threshold drops to 20 as
    well.
    """

    conditional_functions: frozenset[str] = DEFAULT_CONDITIONAL_FUNCTIONS
    distant_column_threshold: int = 10
    distant_row_threshold: int = 25
    paper_compat: bool = False

    def __post_init__(self) -> None:
        if not self.conditional_functions:
            raise ValueError("conditional function set must not be empty")
        normalized = frozenset(name.upper() for name in self.conditional_functions)
        object.__setattr__(self, "conditional_functions", normalized)
        if self.distant_column_threshold < 1:
            raise ValueError("distant column threshold must be >= 1")
        if self.distant_row_threshold < 1:
            raise ValueError("distant row threshold must be >= 1")

    @classmethod
    def paper_compatible(cls, **overrides) -> MetricsConfig:
        settings = {"distant_row_threshold": 20, "paper_compat": True}
        settings.update(overrides)
        return cls(**settings)


@dataclass(frozen=True)
class FormulaMetrics:
    """The nine metric values for one formula cell.

    Count metrics are non-negative integers (``m1_3`` is 0 or 1);
    placement metrics are exact percentages in ``[0, 100]``.  When the
    formula references no cells the percentages are reported as 0 and
    ``note`` says so.
    """

    m1_1: int
    m1_2: int
    m1_3: int
    m1_4: int
    m1_5: int
    m2_1: Fraction
    m2_2: Fraction
    m2_3: Fraction
    m2_4: Fraction
    note: str | None = None

    def __post_init__(self) -> None:
        for key in COUNT_KEYS:
            if getattr(self, key) < 0:
                raise ValueError(f"{key} must be non-negative")
        if self.m1_3 not in (0, 1):
            raise ValueError("m1_3 must be 0 or 1")
        for key in PERCENT_KEYS:
            value = getattr(self, key)
            if not 0 <= value <= 100:
                raise ValueError(f"{key} must lie in [0, 100]")

    def value(self, key: str) -> int | Fraction:
        if key not in METRIC_KEYS:
            raise KeyError(key)
        return getattr(self, key)


def m1_1_reference_count(groups: list[ReferenceGroup]) -> int:
    """Total referenced cells, counting every occurrence's expansion."""
    return sum(group.size for group in groups)


def m1_2_range_count(groups: list[ReferenceGroup]) -> int:
    """Number of reference occurrences; adjacent groups never merge."""
    return len(groups)


def m1_3_conditional(ast: FormulaAst, config: MetricsConfig) -> int:
    """1 when any called function is in the conditional set, else 0."""
    names = set(function_calls(ast))
    return 1 if names & config.conditional_functions else 0


def m1_4_nesting(ast: FormulaAst) -> int:
    """Height of the parse tree; a bare reference or literal is 0."""
    return ast_height(ast)


def m1_5_chain_length(graph: PrecedentGraph, address: CellAddress) -> int:
    """Longest dependency chain starting at the cell, in edges."""
    return chain_length(graph, address)


def _percentage(matching: int, total: int) -> Fraction:
    if total == 0:
        return Fraction(0)
    return Fraction(100 * matching, total)


def m2_1_reverse_pct(
    cells: list[CellAddress], formula: CellAddress, workbook: Workbook
) -> Fraction:
    """Percentage of referenced cells that read against natural order.

    On the formula's own sheet a reference is reverse when it lies right
    of the formula's column or below its row; across sheets it is
    reverse when the referenced sheet sits right of the formula's sheet
    in tab order.
    """
    formula_ordinal = workbook.sheet_ordinal(formula.sheet)
    reverse = 0
    for cell in cells:
        if cell.sheet.casefold() == formula.sheet.casefold():
            if cell.column > formula.column or cell.row > formula.row:
                reverse += 1
        elif workbook.sheet_ordinal(cell.sheet) > formula_ordinal:
            reverse += 1
    return _percentage(reverse, len(cells))


def m2_2_same_row_pct(cells: list[CellAddress], formula: CellAddress) -> Fraction:
    """Percentage of referenced cells in the formula's sheet and row."""
    matching = sum(
        1
        for cell in cells
        if cell.sheet.casefold() == formula.sheet.casefold() and cell.row == formula.row
    )
    return _percentage(matching, len(cells))


def m2_3_same_column_pct(cells: list[CellAddress], formula: CellAddress) -> Fraction:
    """Percentage of referenced cells in the formula's sheet and column."""
    matching = sum(
        1
        for cell in cells
        if cell.sheet.casefold() == formula.sheet.casefold()
        and cell.column == formula.column
    )
    return _percentage(matching, len(cells))


def m2_4_distant_pct(
    cells: list[CellAddress], formula: CellAddress, config: MetricsConfig
) -> Fraction:
    """Percentage of referenced cells beyond the configured distance.

    A referenced cell is distant when it is on another sheet, or more
    than the column threshold away horizontally, or more than the row
    threshold away vertically.
    """
    distant = 0
    for cell in cells:
        if cell.sheet.casefold() != formula.sheet.casefold():
            distant += 1
        elif (
            abs(cell.column - formula.column) > config.distant_column_threshold
            or abs(cell.row - formula.row) > config.distant_row_threshold
        ):
            distant += 1
    return _percentage(distant, len(cells))


def compute_all(
    workbook: Workbook,
    graph: PrecedentGraph,
    formula_address: CellAddress,
    config: MetricsConfig | None = None,
) -> FormulaMetrics:
    """All nine metrics for the formula cell at ``formula_address``.

    Raises ``ValueError`` if the address does not hold a formula, if a
    reference names an unknown sheet, or (via the graph) on a cycle.
    """
    if config is None:
        config = MetricsConfig()
    cell = workbook.cell(formula_address)
    if cell is None or not cell.is_formula:
        raise ValueError(f"{formula_address} does not hold a formula")
    assert cell.formula is not None
    ast = parse_formula(cell.formula)
    groups = [resolve(occurrence, cell.address) for occurrence in reference_occurrences(ast)]
    for group in groups:
        if not workbook.has_sheet(group.sheet):
            raise ValueError(f"{formula_address}: reference to unknown sheet {group.sheet!r}")
    cells = [address for group in groups for address in expand(group)]
    total = m1_1_reference_count(groups)
    return FormulaMetrics(
        m1_1=total,
        m1_2=m1_2_range_count(groups),
        m1_3=m1_3_conditional(ast, config),
        m1_4=m1_4_nesting(ast),
        m1_5=m1_5_chain_length(graph, formula_address),
        m2_1=m2_1_reverse_pct(cells, cell.address, workbook),
        m2_2=m2_2_same_row_pct(cells, cell.address),
        m2_3=m2_3_same_column_pct(cells, cell.address),
        m2_4=m2_4_distant_pct(cells, cell.address, config),
        note="no references" if total == 0 else None,
    )
