"""Precedent graph over workbook cells and longest-chain computation.

Edges point from a formula cell to each distinct cell it references.
Referenced cells that are empty or hold plain values are leaf nodes.
All traversals are iterative so that very deep chains cannot exhaust the
interpreter call stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .parser import FormulaError, parse_formula, reference_occurrences
from .references import expand, resolve
from .workbook import Cell, CellAddress, Workbook


class GraphBuildError(ValueError):
    """One or more formula cells could not be wired into the graph.

    ``failures`` lists every failing cell with its reason.
    """

    def __init__(self, failures: list[tuple[CellAddress, str]]):
        self.failures = list(failures)
        lines = ", ".join(f"{address}: {reason}" for address, reason in self.failures)
        super().__init__(f"cannot build dependency graph: {lines}")


class CircularReferenceError(ValueError):
    """A dependency cycle; ``cycle`` lists the addresses on it in order."""

    def __init__(self, cycle: list[CellAddress]):
        self.cycle = list(cycle)
        path = " -> ".join(str(address) for address in cycle)
        super().__init__(f"circular reference: {path} -> {self.cycle[0]}")


@dataclass(frozen=True)
class PrecedentGraph:
    """Cells as nodes, formula-to-precedent edges; structurally immutable."""

    edges: dict[CellAddress, tuple[CellAddress, ...]]
    formula_cells: frozenset[CellAddress]

    def successors(self, address: CellAddress) -> tuple[CellAddress, ...]:
        return self.edges.get(address, ())

    @property
    def nodes(self) -> list[CellAddress]:
        seen: dict[CellAddress, None] = {}
        for source in self.edges:
            seen.setdefault(source)
            for target in self.edges[source]:
                seen.setdefault(target)
        return list(seen)


def _sort_key(address: CellAddress):
    return (address.sheet.casefold(), address.row, address.column)


def build_graph(workbook: Workbook) -> PrecedentGraph:
    """Parse every formula cell and record its referenced cells.

    Duplicate references from one formula collapse to a single edge.
    Parse failures and references to unknown sheets are collected across
    the whole workbook and raised together as :class:`GraphBuildError`.
    """
    edges: dict[CellAddress, tuple[CellAddress, ...]] = {}
    formula_cells: list[CellAddress] = []
    failures: list[tuple[CellAddress, str]] = []
    for cell in workbook.formula_cells():
        formula_cells.append(cell.address)
        try:
            edges[cell.address] = _cell_targets(workbook, cell)
        except FormulaError as exc:
            failures.append((cell.address, str(exc)))
        except GraphBuildError:
            raise
        except ValueError as exc:
            failures.append((cell.address, str(exc)))
    if failures:
        raise GraphBuildError(failures)
    return PrecedentGraph(edges=edges, formula_cells=frozenset(formula_cells))


def _cell_targets(workbook: Workbook, cell: Cell) -> tuple[CellAddress, ...]:
    assert cell.formula is not None
    ast = parse_formula(cell.formula)
    targets: dict[CellAddress, None] = {}
    for occurrence in reference_occurrences(ast):
        group = resolve(occurrence, cell.address)
        if not workbook.has_sheet(group.sheet):
            raise ValueError(f"reference to unknown sheet {group.sheet!r}")
        for address in expand(group):
            targets.setdefault(address)
    return tuple(sorted(targets, key=_sort_key))


def detect_cycles(graph: PrecedentGraph) -> list[list[CellAddress]]:
    """One representative cycle per strongly connected cyclic region.

    Returns the empty list exactly when the graph is acyclic; every
    reported list is a genuine directed cycle in order (the last cell
    links back to the first).
    """
    components = _strongly_connected_components(graph)
    cycles = []
    for component in components:
        members = set(component)
        if len(component) > 1:
            cycles.append(_cycle_within(graph, component[0], members))
        else:
            node = component[0]
            if node in graph.successors(node):
                cycles.append([node])
    return cycles


def _strongly_connected_components(graph: PrecedentGraph) -> list[list[CellAddress]]:
    """Iterative Tarjan; components are returned in deterministic order."""
    index_of: dict[CellAddress, int] = {}
    lowlink: dict[CellAddress, int] = {}
    on_stack: set[CellAddress] = set()
    stack: list[CellAddress] = []
    components: list[list[CellAddress]] = []
    counter = 0

    for root in sorted(graph.nodes, key=_sort_key):
        if root in index_of:
            continue
        work = [(root, 0)]
        while work:
            node, child_index = work.pop()
            if child_index == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            successors = graph.successors(node)
            advanced = False
            for position in range(child_index, len(successors)):
                successor = successors[position]
                if successor not in index_of:
                    work.append((node, position + 1))
                    work.append((successor, 0))
                    advanced = True
                    break
                if successor in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[successor])
            if advanced:
                continue
            if lowlink[node] == index_of[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                components.append(sorted(component, key=_sort_key))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return components


def _cycle_within(
    graph: PrecedentGraph, start: CellAddress, members: set[CellAddress]
) -> list[CellAddress]:
    """A concrete directed cycle inside one nontrivial component.

    Every member of a strongly connected component with more than one
    node has a successor inside the component, so a walk that stays in
    the component must revisit a walked node within ``len(members)``
    steps; the walk from that node is the cycle.
    """
    walk = [start]
    seen = {start: 0}
    while True:
        current = walk[-1]
        successor = next(s for s in graph.successors(current) if s in members)
        if successor in seen:
            return walk[seen[successor] :]
        seen[successor] = len(walk)
        walk.append(successor)


def chain_length(graph: PrecedentGraph, cell: CellAddress) -> int:
    """Length in edges of the longest directed path starting at ``cell``.

    Memoized iterative depth-first search; a formula over plain values
    yields 1 and non-formula cells yield 0.  A cycle reachable from
    ``cell`` raises :class:`CircularReferenceError` naming the cycle.
    """
    memo: dict[CellAddress, int] = {}
    GRAY, DONE = 1, 2
    state: dict[CellAddress, int] = {}
    stack: list[tuple[CellAddress, int]] = [(cell, 0)]
    path: list[CellAddress] = []
    while stack:
        node, child_index = stack.pop()
        if child_index == 0:
            if state.get(node) == DONE:
                continue
            state[node] = GRAY
            path.append(node)
        successors = graph.successors(node)
        advanced = False
        for position in range(child_index, len(successors)):
            successor = successors[position]
            successor_state = state.get(successor)
            if successor_state == GRAY:
                cycle_start = path.index(successor)
                raise CircularReferenceError(path[cycle_start:])
            if successor_state != DONE:
                stack.append((node, position + 1))
                stack.append((successor, 0))
                advanced = True
                break
        if advanced:
            continue
        best = -1
        for successor in successors:
            best = max(best, memo[successor])
        memo[node] = best + 1
        state[node] = DONE
        path.pop()
    return memo[cell]
