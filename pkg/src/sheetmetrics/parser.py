"""Formula tokenizer and parser.

Produces a small immutable AST used by the metrics.  Operator precedence,
highest binding first::

    range ':'   (recognized inside references)
    %           (postfix)
    -           (unary)
    ^
    * /
    + -
    &
    = <> < > <= >=

Parentheses group only; they never create a node.  A run of the same
operator written consecutively at one level extends a single node
(``A+B+C`` is one three-child ``+`` node), while a parenthesized operand
always stays a separate subtree (``(A+B)+C`` nests).  Function arguments
may be empty placeholders (``IF(A1>0, LN(B1),)``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .workbook import MAX_COLUMNS, MAX_ROWS, column_name_to_index


class FormulaError(ValueError):
    """A formula that cannot be tokenized or parsed.

    ``offset`` is the 0-based character position of the problem; for
    truncated input it equals the formula length.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


# --- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Boolean:
    value: bool


@dataclass(frozen=True)
class CellRef:
    """A single-cell reference; ``sheet`` is None when unqualified."""

    sheet: str | None
    column: int
    row: int


@dataclass(frozen=True)
class RangeRef:
    """A rectangular range with normalized corners (start <= end per axis)."""

    sheet: str | None
    start_column: int
    start_row: int
    end_column: int
    end_row: int


@dataclass(frozen=True)
class EmptyArg:
    """An omitted function argument."""


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[FormulaAst, ...]


@dataclass(frozen=True)
class Unary:
    op: str
    operand: FormulaAst


@dataclass(frozen=True)
class Op:
    """An operator application with two or more operands in source order."""

    op: str
    operands: tuple[FormulaAst, ...]


FormulaAst = Number | Text | Boolean | CellRef | RangeRef | EmptyArg | Call | Unary | Op


def children(node: FormulaAst) -> tuple[FormulaAst, ...]:
    if isinstance(node, Call):
        return node.args
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Op):
        return node.operands
    return ()


def walk(node: FormulaAst):
    """Yield ``node`` and all descendants in document (pre-)order."""
    yield node
    for child in children(node):
        yield from walk(child)


def ast_height(node: FormulaAst) -> int:
    """Height of the tree: leaves (and empty placeholders) are 0."""
    child_nodes = children(node)
    if not child_nodes:
        return 0
    return 1 + max(ast_height(child) for child in child_nodes)


def function_calls(ast: FormulaAst) -> list[str]:
    """Upper-case function names in document order, repeats kept."""
    return [node.name for node in walk(ast) if isinstance(node, Call)]


@dataclass(frozen=True)
class RefOccurrence:
    """One textual reference occurrence inside a formula.

    Single cells have equal start/end corners and ``is_range`` False.
    ``position`` is the 0-based order of appearance.
    """

    sheet: str | None
    start_column: int
    start_row: int
    end_column: int
    end_row: int
    is_range: bool
    position: int


def reference_occurrences(ast: FormulaAst) -> list[RefOccurrence]:
    """Every reference in the formula, in document order.

    Repeated mentions of the same cell or range stay separate occurrences.
    """
    found: list[RefOccurrence] = []
    for node in walk(ast):
        if isinstance(node, CellRef):
            found.append(
                RefOccurrence(
                    sheet=node.sheet,
                    start_column=node.column,
                    start_row=node.row,
                    end_column=node.column,
                    end_row=node.row,
                    is_range=False,
                    position=len(found),
                )
            )
        elif isinstance(node, RangeRef):
            found.append(
                RefOccurrence(
                    sheet=node.sheet,
                    start_column=node.start_column,
                    start_row=node.start_row,
                    end_column=node.end_column,
                    end_row=node.end_row,
                    is_range=True,
                    position=len(found),
                )
            )
    return found


# --- Tokenizer ------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_WORD_RE = re.compile(r"[$A-Za-z_][$A-Za-z0-9_.]*")
_CELL_RE = re.compile(r"^\$?([A-Za-z]{1,3})\$?([1-9][0-9]*)$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

_TWO_CHAR_OPS = ("<=", ">=", "<>")
_SINGLE_CHARS = set("+-*/^&=<>%(),:!")


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER STRING BOOLEAN REF NAME SHEET op-text EOF
    text: str
    offset: int
    value: object = None


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    length = len(text)
    while i < length:
        char = text[i]
        if char.isspace():
            i += 1
            continue
        if char == '"':
            token, i = _scan_string(text, i)
            tokens.append(token)
            continue
        if char == "'":
            token, i = _scan_quoted_sheet(text, i)
            tokens.append(token)
            continue
        if char.isdigit() or (char == "." and i + 1 < length and text[i + 1].isdigit()):
            match = _NUMBER_RE.match(text, i)
            assert match is not None
            tokens.append(Token("NUMBER", match.group(), i, float(match.group())))
            i = match.end()
            continue
        if char.isalpha() or char in "_$":
            match = _WORD_RE.match(text, i)
            assert match is not None
            tokens.append(_classify_word(text, match.group(), i, match.end()))
            i = match.end()
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token(two, two, i))
            i += 2
            continue
        if char in _SINGLE_CHARS:
            tokens.append(Token(char, char, i))
            i += 1
            continue
        raise FormulaError(f"unknown token {char!r}", i)
    tokens.append(Token("EOF", "", length))
    return tokens


def _scan_string(text: str, start: int) -> tuple[Token, int]:
    chars = []
    i = start + 1
    while i < len(text):
        if text[i] == '"':
            if i + 1 < len(text) and text[i + 1] == '"':
                chars.append('"')
                i += 2
                continue
            return Token("STRING", text[start : i + 1], start, "".join(chars)), i + 1
        chars.append(text[i])
        i += 1
    raise FormulaError("unterminated string literal", start)


def _scan_quoted_sheet(text: str, start: int) -> tuple[Token, int]:
    chars = []
    i = start + 1
    while i < len(text):
        if text[i] == "'":
            if i + 1 < len(text) and text[i + 1] == "'":
                chars.append("'")
                i += 2
                continue
            if not chars:
                raise FormulaError("empty sheet name", start)
            return Token("SHEET", text[start : i + 1], start, "".join(chars)), i + 1
        chars.append(text[i])
        i += 1
    raise FormulaError("unterminated sheet name quote", start)


def _next_solid(text: str, index: int) -> str:
    while index < len(text) and text[index].isspace():
        index += 1
    return text[index] if index < len(text) else ""


def _classify_word(text: str, word: str, start: int, end: int) -> Token:
    following = _next_solid(text, end)
    if following == "(":
        if not _NAME_RE.match(word):
            raise FormulaError(f"invalid function name {word!r}", start)
        return Token("NAME", word, start, word.upper())
    if following == "!":
        return Token("SHEET", word, start, word)
    cell = _CELL_RE.match(word)
    if cell:
        column = column_name_to_index(cell.group(1))
        row = int(cell.group(2))
        if column <= MAX_COLUMNS and row <= MAX_ROWS:
            return Token("REF", word, start, (column, row))
    if word.upper() in ("TRUE", "FALSE"):
        return Token("BOOLEAN", word, start, word.upper() == "TRUE")
    raise FormulaError(f"unknown token {word!r}", start)


# --- Parser ---------------------------------------------------------------

_COMPARISON_OPS = ("=", "<>", "<", ">", "<=", ">=")
_LEVELS: tuple[tuple[str, ...], ...] = (
    _COMPARISON_OPS,
    ("&",),
    ("+", "-"),
    ("*", "/"),
    ("^",),
)


def parse_formula(text: str) -> FormulaAst:
    """Parse formula source (without a leading ``=``) into an AST."""
    return _Parser(tokenize(text)).parse()


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def take(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, kind: str) -> Token:
        if self.current.kind != kind:
            raise self._unexpected(f"expected {kind!r}")
        return self.take()

    def _unexpected(self, context: str) -> FormulaError:
        token = self.current
        if token.kind == "EOF":
            return FormulaError(f"{context}, found end of formula", token.offset)
        return FormulaError(f"{context}, found {token.text!r}", token.offset)

    def parse(self) -> FormulaAst:
        node = self._level(0)
        if self.current.kind != "EOF":
            raise self._unexpected("expected end of formula")
        return node

    def _level(self, depth: int) -> FormulaAst:
        if depth == len(_LEVELS):
            return self._unary()
        ops = _LEVELS[depth]
        node = self._level(depth + 1)
        chained = False
        while self.current.kind in ops:
            op = self.take().kind
            rhs = self._level(depth + 1)
            if chained and isinstance(node, Op) and node.op == op:
                node = Op(op, node.operands + (rhs,))
            else:
                node = Op(op, (node, rhs))
                chained = True
        return node

    def _unary(self) -> FormulaAst:
        if self.current.kind == "-":
            self.take()
            return Unary("-", self._unary())
        return self._postfix()

    def _postfix(self) -> FormulaAst:
        node = self._primary()
        while self.current.kind == "%":
            self.take()
            node = Unary("%", node)
        return node

    def _primary(self) -> FormulaAst:
        token = self.current
        if token.kind == "NUMBER":
            self.take()
            return Number(token.value)
        if token.kind == "STRING":
            self.take()
            return Text(token.value)
        if token.kind == "BOOLEAN":
            self.take()
            return Boolean(token.value)
        if token.kind == "NAME":
            return self._call()
        if token.kind in ("SHEET", "REF"):
            return self._reference()
        if token.kind == "(":
            self.take()
            node = self._level(0)
            self.expect(")")
            return node
        raise self._unexpected("expected a value, reference, or '('")

    def _call(self) -> FormulaAst:
        name = self.take().value
        self.expect("(")
        args: list[FormulaAst] = []
        if self.current.kind == ")":
            self.take()
            return Call(name, ())
        while True:
            if self.current.kind in (",", ")"):
                args.append(EmptyArg())
            else:
                args.append(self._level(0))
            if self.current.kind == ",":
                self.take()
                continue
            self.expect(")")
            return Call(name, tuple(args))

    def _endpoint(self) -> tuple[str | None, int, int]:
        sheet = None
        if self.current.kind == "SHEET":
            sheet = self.take().value
            self.expect("!")
        token = self.expect("REF")
        column, row = token.value
        return sheet, column, row

    def _reference(self) -> FormulaAst:
        start_offset = self.current.offset
        sheet, column, row = self._endpoint()
        if self.current.kind != ":":
            return CellRef(sheet=sheet, column=column, row=row)
        self.take()
        end_sheet, end_column, end_row = self._endpoint()
        if sheet is not None and end_sheet is not None and sheet.casefold() != end_sheet.casefold():
            raise FormulaError("range endpoints must be on one sheet", start_offset)
        return RangeRef(
            sheet=sheet if sheet is not None else end_sheet,
            start_column=min(column, end_column),
            start_row=min(row, end_row),
            end_column=max(column, end_column),
            end_row=max(row, end_row),
        )
