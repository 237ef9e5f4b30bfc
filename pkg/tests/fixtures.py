"""Shared test fixtures and helpers.

``CASES`` is a catalog of fifteen formula cells with pinned expected
metric values (in integer-truncated display form).  Each case builds a
small workbook document with every referenced cell populated as a plain
value, so the dependency chain of each formula is exactly 1.
"""

from __future__ import annotations

import io
import json
import random
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import dataclass

from hypothesis import strategies as st

from sheetmetrics.cli import main as cli_main
from sheetmetrics.parser import (
    Boolean,
    Call,
    CellRef,
    EmptyArg,
    FormulaAst,
    Number,
    Op,
    RangeRef,
    Text,
    Unary,
    parse_formula,
)
from sheetmetrics.workbook import column_index_to_name, quote_sheet_name


@dataclass(frozen=True)
class FormulaCase:
    case_id: str
    sheet: str
    cell: str
    formula: str
    value_cells: dict[str, list[str]]  # sheet name -> plain-value addresses
    expected: dict[str, int]  # truncated display values, m1_5 excluded


def _case(case_id, sheet, cell, formula, value_cells, expected):
    keys = ("m1_1", "m1_2", "m1_3", "m1_4", "m2_1", "m2_2", "m2_3", "m2_4")
    return FormulaCase(
        case_id=case_id,
        sheet=sheet,
        cell=cell,
        formula=formula,
        value_cells=value_cells,
        expected=dict(zip(keys, expected)),
    )


CASES = [
    _case(
        "f1", "S1", "D29",
        "((C4+C5)+C24)+(E15-E14)-(C15-C14)",
        {"S1": ["C4", "C5", "C24", "E15", "E14", "C15", "C14"]},
        (7, 7, 0, 4, 28, 0, 0, 28),
    ),
    _case(
        "f2", "Output", "D4",
        "IF(('Input Information'!E19=0), \"Must input data\", "
        "((('Input Information'!C32+'Input Information'!C30)"
        "-'Input Information'!C26)/'Input Information'!E19))",
        {"Input Information": ["E19", "C32", "C30", "C26"]},
        (5, 5, 1, 4, 100, 0, 0, 100),
    ),
    _case(
        "f3", "S1", "C17",
        'IF((C5=0), "Must input data", ((C10+C13)/C5))',
        {"S1": ["C5", "C10", "C13"]},
        (4, 4, 1, 3, 0, 0, 100, 0),
    ),
    _case(
        "f4", "S1", "N38",
        "SUM(N31:N37)",
        {"S1": [f"N{row}" for row in range(31, 38)]},
        (7, 1, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f5", "S1", "D21",
        "SUM(D18:D19)",
        {"S1": ["D18", "D19"]},
        (2, 1, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f6", "S1", "N42",
        "SUM(N40:N41)",
        {"S1": ["N40", "N41"]},
        (2, 1, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f7", "S1", "G16",
        "G11+G15",
        {"S1": ["G11", "G15"]},
        (2, 2, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f8", "S1", "C46",
        "C23+C33+C44+C45",
        {"S1": ["C23", "C33", "C44", "C45"]},
        (4, 4, 0, 1, 0, 0, 100, 25),
    ),
    _case(
        "f9", "S1", "D40",
        "D36/D38",
        {"S1": ["D36", "D38"]},
        (2, 2, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f10", "S1", "F18",
        "SUM(D10:D17)",
        {"S1": [f"D{row}" for row in range(10, 18)]},
        (8, 1, 0, 1, 0, 0, 0, 0),
    ),
    _case(
        "f11", "S1", "F33",
        "F29-F31",
        {"S1": ["F29", "F31"]},
        (2, 2, 0, 1, 0, 0, 100, 0),
    ),
    _case(
        "f12", "S1", "D94",
        "SUM(C54:C94)",
        {"S1": [f"C{row}" for row in range(54, 95)]},
        (41, 1, 0, 1, 0, 2, 0, 48),
    ),
    _case(
        "f13", "S1", "E11",
        "IF(B11>0, LN(D11),)",
        {"S1": ["B11", "D11"]},
        (2, 2, 1, 2, 0, 100, 0, 0),
    ),
    _case(
        "f14", "S1", "E47",
        "(((EXP((0-G36)*C36))*C34*C42-C35*(EXP((0-G34)*C36))*C45)"
        "-((EXP((0-G36)*C36))*C34*F42-C38*(EXP((0-G34)*C36))*F45))*C37/G37",
        {"S1": ["G36", "C36", "C34", "C42", "C35", "G34", "C45",
                "F42", "C38", "F45", "C37", "G37"]},
        (18, 18, 0, 8, 38, 0, 0, 0),
    ),
    _case(
        "f15", "S1", "C41",
        "(LN(C34/C35)+(G34-G36+(G35/2))*C36)/(((G35)^(0.5))*(C36^0.5))",
        {"S1": ["C34", "C35", "G34", "G36", "G35", "C36"]},
        (8, 8, 0, 5, 50, 0, 50, 0),
    ),
]


def case_by_id(case_id: str) -> FormulaCase:
    (case,) = [case for case in CASES if case.case_id == case_id]
    return case


def workbook_doc(case: FormulaCase) -> dict:
    """Workbook document holding one case, formula sheet first."""
    sheet_names = [case.sheet] + [name for name in case.value_cells if name != case.sheet]
    sheets = []
    for name in sheet_names:
        cells = {address: {"value": 1} for address in case.value_cells.get(name, [])}
        if name == case.sheet:
            cells[case.cell] = {"formula": case.formula}
        sheets.append({"name": name, "cells": cells})
    return {"sheets": sheets}


def write_workbook(tmp_path, case: FormulaCase) -> str:
    path = tmp_path / f"{case.case_id}.json"
    path.write_text(json.dumps(workbook_doc(case)))
    return str(path)


# --- formula rendering and shifting ---------------------------------------

def render_formula(node: FormulaAst, spaced: bool = False) -> str:
    """Re-emit an AST as source, fully parenthesized.

    Reparsing the output yields a structurally identical AST: wrapping
    every composite node in parentheses prevents operator runs from
    merging across operand boundaries.  With ``spaced`` set, whitespace
    is inserted between every pair of tokens.
    """
    pad = " " if spaced else ""
    if isinstance(node, Number):
        value = node.value
        return repr(int(value)) if float(value).is_integer() else repr(value)
    if isinstance(node, Text):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, Boolean):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, CellRef):
        return _ref_text(node.sheet, node.column, node.row)
    if isinstance(node, RangeRef):
        start = _ref_text(node.sheet, node.start_column, node.start_row)
        end = f"{column_index_to_name(node.end_column)}{node.end_row}"
        return f"{start}{pad}:{pad}{end}"
    if isinstance(node, EmptyArg):
        return ""
    if isinstance(node, Call):
        args = f",{pad}".join(render_formula(arg, spaced) for arg in node.args)
        return f"{node.name}({pad}{args}{pad})" if node.args else f"{node.name}()"
    if isinstance(node, Unary):
        if node.op == "%":
            return f"({pad}{render_formula(node.operand, spaced)}{pad}%{pad})"
        return f"({pad}{node.op}{pad}{render_formula(node.operand, spaced)}{pad})"
    assert isinstance(node, Op)
    joiner = f"{pad}{node.op}{pad}"
    body = joiner.join(render_formula(operand, spaced) for operand in node.operands)
    return f"({pad}{body}{pad})"


def _ref_text(sheet: str | None, column: int, row: int) -> str:
    cell = f"{column_index_to_name(column)}{row}"
    if sheet is None:
        return cell
    return f"{quote_sheet_name(sheet)}!{cell}"


def shift_node(node: FormulaAst, d_col: int, d_row: int) -> FormulaAst:
    if isinstance(node, CellRef):
        return CellRef(node.sheet, node.column + d_col, node.row + d_row)
    if isinstance(node, RangeRef):
        return RangeRef(
            node.sheet,
            node.start_column + d_col,
            node.start_row + d_row,
            node.end_column + d_col,
            node.end_row + d_row,
        )
    if isinstance(node, Call):
        return Call(node.name, tuple(shift_node(arg, d_col, d_row) for arg in node.args))
    if isinstance(node, Unary):
        return Unary(node.op, shift_node(node.operand, d_col, d_row))
    if isinstance(node, Op):
        return Op(node.op, tuple(shift_node(operand, d_col, d_row) for operand in node.operands))
    return node


def shift_formula(text: str, d_col: int, d_row: int) -> str:
    return render_formula(shift_node(parse_formula(text), d_col, d_row))


def shift_address(address: str, d_col: int, d_row: int) -> str:
    import re

    match = re.fullmatch(r"([A-Za-z]+)([0-9]+)", address)
    assert match is not None
    from sheetmetrics.workbook import column_name_to_index

    column = column_name_to_index(match.group(1)) + d_col
    row = int(match.group(2)) + d_row
    return f"{column_index_to_name(column)}{row}"


def shifted_doc(case: FormulaCase, d_col: int, d_row: int) -> dict:
    """The case's workbook with every cell and reference translated."""
    doc = workbook_doc(case)
    shifted_sheets = []
    for sheet in doc["sheets"]:
        cells = {}
        for address, content in sheet["cells"].items():
            new_address = shift_address(address, d_col, d_row)
            if "formula" in content:
                cells[new_address] = {"formula": shift_formula(content["formula"], d_col, d_row)}
            else:
                cells[new_address] = content
        shifted_sheets.append({"name": sheet["name"], "cells": cells})
    return {"sheets": shifted_sheets}


# --- generated formula ASTs -----------------------------------------------

_AST_LEAVES = st.one_of(
    st.integers(min_value=0, max_value=999).map(lambda n: Number(float(n))),
    st.text(alphabet='ab "', max_size=5).map(Text),
    st.booleans().map(Boolean),
    st.builds(
        CellRef,
        st.none() | st.sampled_from(["S", "Data", "My Sheet", "it's"]),
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=40),
    ),
    st.builds(
        lambda sheet, c1, r1, c2, r2: RangeRef(
            sheet, min(c1, c2), min(r1, r2), max(c1, c2), max(r1, r2)
        ),
        st.none() | st.sampled_from(["S", "My Sheet"]),
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=40),
    ),
)


def _ast_composites(children: st.SearchStrategy) -> st.SearchStrategy:
    # a lone empty argument has no source spelling, so empty arguments
    # only appear in argument lists of length two or more
    args_with_empties = st.lists(children | st.just(EmptyArg()), min_size=2, max_size=4)
    plain_args = st.lists(children, max_size=3)
    return st.one_of(
        st.builds(
            Call,
            st.sampled_from(["SUM", "IF", "LN", "NORM.DIST", "F9X"]),
            st.one_of(plain_args, args_with_empties).map(tuple),
        ),
        st.builds(Unary, st.sampled_from(["-", "%"]), children),
        st.builds(
            Op,
            st.sampled_from(["+", "-", "*", "/", "^", "&", "=", "<>", "<", ">", "<=", ">="]),
            st.lists(children, min_size=2, max_size=4).map(tuple),
        ),
    )


def ast_strategy(max_depth: int = 6) -> st.SearchStrategy:
    """Formula ASTs of height at most ``max_depth``, built layer by layer."""
    strategy = _AST_LEAVES
    for _ in range(max_depth):
        strategy = st.one_of(_AST_LEAVES, _ast_composites(strategy))
    return strategy


# --- random acyclic workbooks ---------------------------------------------

def random_acyclic_doc(rng: random.Random, max_formulas: int = 12) -> dict:
    """A single-sheet workbook whose formula cells form a random DAG.

    Formulas live in column A and may reference only later formula rows,
    value cells in column B, never-populated cells in column C, or a
    small value range, so the precedent graph is acyclic by construction.
    """
    formula_count = rng.randint(1, max_formulas)
    value_rows = list(range(1, 9))
    cells: dict[str, dict] = {f"B{row}": {"value": row} for row in value_rows}
    for row in range(1, formula_count + 1):
        terms = []
        later = list(range(row + 1, formula_count + 1))
        rng.shuffle(later)
        for target in later[: rng.randint(0, min(3, len(later)))]:
            terms.append(f"A{target}")
        for _ in range(rng.randint(0, 2)):
            terms.append(f"B{rng.choice(value_rows)}")
        if rng.random() < 0.3:
            terms.append(f"C{rng.randint(1, 5)}")
        if rng.random() < 0.3:
            start = rng.randint(1, 4)
            terms.append(f"SUM(B{start}:B{start + rng.randint(1, 3)})")
        if not terms:
            terms.append(f"B{rng.choice(value_rows)}")
        cells[f"A{row}"] = {"formula": "+".join(terms)}
    return {"sheets": [{"name": "S", "cells": cells}]}


def brute_force_longest_path(graph, node) -> int:
    """Exhaustive path enumeration; the oracle for chain lengths."""
    best = 0
    for successor in graph.successors(node):
        best = max(best, 1 + brute_force_longest_path(graph, successor))
    return best


# --- CLI runner -----------------------------------------------------------

def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Run the CLI in-process, capturing exit code, stdout, stderr."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = cli_main(argv)
        except SystemExit as exc:
            code = exc.code if isinstance(exc.code, int) else 2
    return code, out.getvalue(), err.getvalue()
