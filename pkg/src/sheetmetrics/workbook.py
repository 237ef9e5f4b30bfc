"""Workbook model: sheets, cells, and A1-style addresses.

Workbooks are loaded from a canonical JSON document::

    {"sheets": [{"name": "...", "cells": {"A1": {"value": 1} | {"formula": "..."}}}]}

Sheet order in the document is tab order.  Cell keys are unqualified A1
addresses; each cell holds exactly one of ``value`` or ``formula``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

MAX_COLUMNS = 16384
MAX_ROWS = 1048576

CellValue = float | int | str | bool

_ADDRESS_RE = re.compile(r"^\$?([A-Za-z]+)\$?([0-9]+)$")
_BARE_SHEET_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class AddressError(ValueError):
    """Raised for text that cannot be read as an A1 address."""


class WorkbookError(ValueError):
    """Raised when a workbook document cannot be loaded."""


class UnknownSheetError(ValueError):
    """Raised when a sheet name does not exist in the workbook."""


def column_name_to_index(name: str) -> int:
    """Convert column letters to a 1-based index (``A`` -> 1, ``AA`` -> 27).

    Letters are bijective base 26; case is ignored.
    """
    if not name or not name.isalpha():
        raise AddressError(f"invalid column letters {name!r}")
    index = 0
    for char in name.upper():
        index = index * 26 + (ord(char) - ord("A") + 1)
    return index


def column_index_to_name(index: int) -> str:
    """Convert a 1-based column index back to letters (27 -> ``AA``)."""
    if index < 1:
        raise AddressError(f"column index must be >= 1, got {index}")
    letters = []
    while index:
        index, rem = divmod(index - 1, 26)
        letters.append(chr(ord("A") + rem))
    return "".join(reversed(letters))


@dataclass(frozen=True, eq=False)
class CellAddress:
    """A single cell position: sheet name plus 1-based column and row.

    Sheet names compare case-insensitively, so ``Sheet1!A1`` and
    ``SHEET1!A1`` are the same address.
    """

    sheet: str
    column: int
    row: int

    def __post_init__(self) -> None:
        if not self.sheet:
            raise AddressError("sheet name must be non-empty")
        if not 1 <= self.column <= MAX_COLUMNS:
            raise AddressError(f"column {self.column} outside 1..{MAX_COLUMNS}")
        if not 1 <= self.row <= MAX_ROWS:
            raise AddressError(f"row {self.row} outside 1..{MAX_ROWS}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CellAddress):
            return NotImplemented
        return (
            self.sheet.casefold() == other.sheet.casefold()
            and self.column == other.column
            and self.row == other.row
        )

    def __hash__(self) -> int:
        return hash((self.sheet.casefold(), self.column, self.row))

    def a1(self) -> str:
        """Unqualified A1 text, e.g. ``D29``."""
        return f"{column_index_to_name(self.column)}{self.row}"

    def qualified(self) -> str:
        """Sheet-qualified A1 text, quoting the sheet name when needed."""
        return f"{quote_sheet_name(self.sheet)}!{self.a1()}"

    def __str__(self) -> str:
        return self.qualified()

    def __repr__(self) -> str:
        return f"CellAddress({self.qualified()!r})"


def quote_sheet_name(name: str) -> str:
    """Render a sheet name for use in a qualified reference."""
    if _BARE_SHEET_RE.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def parse_address(text: str, default_sheet: str) -> CellAddress:
    """Parse optionally sheet-qualified A1 text into a :class:`CellAddress`.

    ``$`` absolute markers are accepted and discarded.  The sheet part may
    be single-quoted (``'Input Information'!E19``, with ``''`` for a
    literal quote); unqualified text is placed on ``default_sheet``.
    """
    sheet, rest = _split_sheet(text)
    if sheet is None:
        sheet = default_sheet
    match = _ADDRESS_RE.match(rest)
    if not match:
        raise AddressError(f"malformed cell address {rest!r}")
    column = column_name_to_index(match.group(1))
    row = int(match.group(2))
    if column > MAX_COLUMNS:
        raise AddressError(f"column {match.group(1)!r} beyond grid limit")
    if row < 1 or row > MAX_ROWS:
        raise AddressError(f"row {row} beyond grid limit")
    return CellAddress(sheet=sheet, column=column, row=row)


def _split_sheet(text: str) -> tuple[str | None, str]:
    """Split ``Sheet!A1`` text into (sheet or None, cell part)."""
    if text.startswith("'"):
        name = []
        i = 1
        while True:
            if i >= len(text):
                raise AddressError(f"unterminated sheet quote in {text!r}")
            if text[i] == "'":
                if i + 1 < len(text) and text[i + 1] == "'":
                    name.append("'")
                    i += 2
                    continue
                break
            name.append(text[i])
            i += 1
        if i + 1 >= len(text) or text[i + 1] != "!":
            raise AddressError(f"expected '!' after sheet name in {text!r}")
        if not name:
            raise AddressError(f"empty sheet name in {text!r}")
        return "".join(name), text[i + 2 :]
    if "!" in text:
        sheet, _, rest = text.partition("!")
        if not sheet:
            raise AddressError(f"empty sheet name in {text!r}")
        return sheet, rest
    return None, text


@dataclass(frozen=True)
class Cell:
    """One populated cell: exactly one of ``value`` or ``formula`` is set.

    ``formula`` holds the source text with any leading ``=`` already
    stripped at load time.
    """

    address: CellAddress
    value: CellValue | None = None
    formula: str | None = None

    def __post_init__(self) -> None:
        if (self.value is None) == (self.formula is None):
            raise WorkbookError(
                f"cell {self.address} must hold exactly one of value or formula"
            )

    @property
    def is_formula(self) -> bool:
        return self.formula is not None


@dataclass(frozen=True)
class Sheet:
    name: str
    cells: dict[tuple[int, int], Cell] = field(default_factory=dict)

    def cell(self, column: int, row: int) -> Cell | None:
        return self.cells.get((column, row))


class Workbook:
    """An ordered collection of sheets with case-insensitive name lookup."""

    def __init__(self, sheets: list[Sheet]):
        self.sheets = list(sheets)
        self._ordinals: dict[str, int] = {}
        for position, sheet in enumerate(self.sheets, start=1):
            key = sheet.name.casefold()
            if key in self._ordinals:
                raise WorkbookError(f"duplicate sheet name {sheet.name!r}")
            self._ordinals[key] = position

    @property
    def sheet_names(self) -> list[str]:
        return [sheet.name for sheet in self.sheets]

    def has_sheet(self, name: str) -> bool:
        return name.casefold() in self._ordinals

    def sheet_ordinal(self, name: str) -> int:
        """1-based tab position of a sheet."""
        try:
            return self._ordinals[name.casefold()]
        except KeyError:
            raise UnknownSheetError(f"no sheet named {name!r}") from None

    def sheet(self, name: str) -> Sheet:
        return self.sheets[self.sheet_ordinal(name) - 1]

    def cell(self, address: CellAddress) -> Cell | None:
        """The cell at ``address``, or None for empty/never-set positions."""
        if not self.has_sheet(address.sheet):
            raise UnknownSheetError(f"no sheet named {address.sheet!r}")
        return self.sheet(address.sheet).cell(address.column, address.row)

    def formula_cells(self) -> list[Cell]:
        """All formula cells in sheet-ordinal, then row, then column order."""
        found = []
        for sheet in self.sheets:
            for (column, row) in sorted(sheet.cells, key=lambda cr: (cr[1], cr[0])):
                cell = sheet.cells[(column, row)]
                if cell.is_formula:
                    found.append(cell)
        return found


def load_workbook(document: str) -> Workbook:
    """Load a workbook from canonical JSON text.

    Raises :class:`WorkbookError` with a document location for malformed
    input: bad JSON, duplicate sheet names, duplicate or malformed cell
    keys, or cells that do not hold exactly one of value/formula.
    """
    try:
        payload = json.loads(document, object_pairs_hook=_checked_object)
    except json.JSONDecodeError as exc:
        raise WorkbookError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise WorkbookError("top level must be an object")
    if "sheets" not in payload:
        raise WorkbookError("top level is missing 'sheets'")
    stray = set(payload) - {"sheets"}
    if stray:
        raise WorkbookError(f"top level has unknown keys {sorted(stray)}")
    raw_sheets = payload["sheets"]
    if not isinstance(raw_sheets, list):
        raise WorkbookError("'sheets' must be an array")

    sheets = []
    seen_names: dict[str, int] = {}
    for index, raw_sheet in enumerate(raw_sheets):
        where = f"sheets[{index}]"
        if not isinstance(raw_sheet, dict):
            raise WorkbookError(f"{where} must be an object")
        name = raw_sheet.get("name")
        if not isinstance(name, str) or not name:
            raise WorkbookError(f"{where}.name must be a non-empty string")
        if name.casefold() in seen_names:
            first = seen_names[name.casefold()]
            raise WorkbookError(
                f"{where}.name duplicates sheets[{first}] (names are case-insensitive)"
            )
        seen_names[name.casefold()] = index
        if "cells" not in raw_sheet:
            raise WorkbookError(f"{where} is missing 'cells'")
        raw_cells = raw_sheet["cells"]
        if not isinstance(raw_cells, dict):
            raise WorkbookError(f"{where}.cells must be an object")
        unknown = set(raw_sheet) - {"name", "cells"}
        if unknown:
            raise WorkbookError(f"{where} has unknown keys {sorted(unknown)}")
        cells: dict[tuple[int, int], Cell] = {}
        for key, raw_cell in raw_cells.items():
            cell_where = f"{where}.cells[{key!r}]"
            if "!" in key or key.startswith("'"):
                raise WorkbookError(f"{cell_where}: cell keys must be unqualified")
            try:
                address = parse_address(key, default_sheet=name)
            except AddressError as exc:
                raise WorkbookError(f"{cell_where}: {exc}") from exc
            position = (address.column, address.row)
            if position in cells:
                raise WorkbookError(f"{cell_where}: duplicate cell address")
            cells[position] = _load_cell(address, raw_cell, cell_where)
        sheets.append(Sheet(name=name, cells=cells))
    return Workbook(sheets)


def _load_cell(address: CellAddress, raw: object, where: str) -> Cell:
    if not isinstance(raw, dict):
        raise WorkbookError(f"{where} must be an object")
    keys = set(raw)
    if keys == {"value"}:
        value = raw["value"]
        if isinstance(value, bool) or isinstance(value, (int, float)) or isinstance(value, str):
            return Cell(address=address, value=value)
        raise WorkbookError(f"{where}: value must be a number, string, or boolean")
    if keys == {"formula"}:
        formula = raw["formula"]
        if not isinstance(formula, str):
            raise WorkbookError(f"{where}: formula must be a string")
        if formula.startswith("="):
            formula = formula[1:]
        return Cell(address=address, formula=formula)
    raise WorkbookError(f"{where} must hold exactly one of 'value' or 'formula'")


def _checked_object(pairs: list[tuple[str, object]]) -> dict[str, object]:
    """dict builder for json.loads that rejects duplicate keys."""
    result: dict[str, object] = {}
    for key, value in pairs:
        if key in result:
            raise WorkbookError(f"duplicate key {key!r} in document object")
        result[key] = value
    return result
