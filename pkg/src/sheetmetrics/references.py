"""Resolution of parsed reference occurrences against a formula's cell.

An occurrence straight out of the parser may lack a sheet; resolving it
against the formula's own address fills that in and yields a concrete
rectangular group that can be expanded to individual cell addresses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parser import RefOccurrence
from .workbook import CellAddress


@dataclass(frozen=True)
class ReferenceGroup:
    """A resolved rectangle of referenced cells on one sheet.

    ``origin`` keeps the occurrence this group came from, so group lists
    can be traced back to formula text positions.
    """

    sheet: str
    start_column: int
    start_row: int
    end_column: int
    end_row: int
    origin: RefOccurrence

    @property
    def size(self) -> int:
        width = self.end_column - self.start_column + 1
        height = self.end_row - self.start_row + 1
        return width * height


def resolve(occurrence: RefOccurrence, context: CellAddress) -> ReferenceGroup:
    """Attach a concrete sheet to an occurrence.

    Unqualified occurrences resolve to the sheet of ``context`` (the cell
    holding the formula).  Corner order is normalized defensively even
    though the parser already normalizes it.
    """
    sheet = occurrence.sheet if occurrence.sheet is not None else context.sheet
    return ReferenceGroup(
        sheet=sheet,
        start_column=min(occurrence.start_column, occurrence.end_column),
        start_row=min(occurrence.start_row, occurrence.end_row),
        end_column=max(occurrence.start_column, occurrence.end_column),
        end_row=max(occurrence.start_row, occurrence.end_row),
        origin=occurrence,
    )


def expand(group: ReferenceGroup) -> list[CellAddress]:
    """All cell addresses in the group, row-major."""
    return [
        CellAddress(sheet=group.sheet, column=column, row=row)
        for row in range(group.start_row, group.end_row + 1)
        for column in range(group.start_column, group.end_column + 1)
    ]
