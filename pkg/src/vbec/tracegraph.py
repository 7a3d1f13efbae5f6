"""Traceability graph over the value chain and its canonical numbering.

Edges run strictly downward through the layers::

    corevalue -> quality -> evr -> measure
                        |      \\-> threat -> control -> sysreq
                        \\-> monitor

Chain numbers are dotted paths (``1.2.1``); measures get an ``mN`` suffix
under their EVR (``1.2.1.m1``). Entities reached through more than one
parent keep a single primary number and are cross-referenced elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from vbec.model import Register, kind_of

CHAIN_KINDS = ("corevalue", "quality", "evr", "measure", "threat", "control", "sysreq", "monitor")


class CycleError(ValueError):
    def __init__(self, cycle: list[str]) -> None:
        self.cycle = cycle
        super().__init__("cycle in trace graph: " + " -> ".join(cycle))


@dataclass(frozen=True, order=True)
class ChainNumber:
    parts: tuple[int, ...]
    measure: int | None = None

    def __str__(self) -> str:
        base = ".".join(map(str, self.parts))
        return f"{base}.m{self.measure}" if self.measure is not None else base

    def sort_key(self) -> tuple:
        # a measure sorts after its EVR's threats
        return self.parts + ((1_000_000, self.measure) if self.measure is not None else ())


class TraceGraph:
    """Immutable DAG of chain entities, adjacency kept in insertion order."""

    def __init__(self, nodes: Mapping[str, str], edges: Iterable[tuple[str, str]],
                 order: Mapping[str, tuple] | None = None) -> None:
        self.nodes: dict[str, str] = dict(nodes)
        # presentation order used by trace(); defaults to insertion order
        self.order: dict[str, tuple] = dict(order) if order else {
            n: (i,) for i, n in enumerate(self.nodes)}
        self.succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        self.pred: dict[str, list[str]] = {n: [] for n in self.nodes}
        self.edges: list[tuple[str, str]] = []
        for a, b in edges:
            if a not in self.nodes or b not in self.nodes:
                raise KeyError(f"edge {a}->{b} references an unknown node")
            if b in self.succ[a]:
                continue
            self.succ[a].append(b)
            self.pred[b].append(a)
            self.edges.append((a, b))
        cycle = self.find_cycle()
        if cycle:
            raise CycleError(cycle)

    def __len__(self) -> int:
        return len(self.nodes)

    def find_cycle(self) -> list[str] | None:
        WHITE, GREY, BLACK = 0, 1, 2
        color = dict.fromkeys(self.nodes, WHITE)
        for root in self.nodes:
            if color[root] != WHITE:
                continue
            stack = [(root, iter(self.succ[root]))]
            path = [root]
            color[root] = GREY
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    path.pop()
                    color[node] = BLACK
                elif color[nxt] == GREY:
                    return path[path.index(nxt):] + [nxt]
                elif color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, iter(self.succ[nxt])))
                    path.append(nxt)
        return None

    def descendants(self, node: str) -> set[str]:
        seen: set[str] = set()
        todo = [node]
        while todo:
            for nxt in self.succ[todo.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen


def build(register: Register, extra_edges: Iterable[tuple[str, str]] = ()) -> TraceGraph:
    """Build the trace graph; raises :class:`CycleError` (E005) on a cycle.

    ``extra_edges`` lets future layer extensions add links beyond the fixed
    layering, which is where a cycle could come from.
    """
    nodes: dict[str, str] = {}
    for group in (register.corevalues, register.qualities, register.evrs, register.measures,
                  register.threats, register.controls, register.sysreqs, register.monitors):
        for ent in group:
            nodes[ent.id] = kind_of(ent)
    edges: list[tuple[str, str]] = []
    edges += [(q.core, q.id) for q in register.qualities]
    edges += [(c.quality, e.id) for e in register.evrs for c in e.covers]
    edges += [(m.evr, m.id) for m in register.measures]
    edges += [(t.evr, t.id) for t in register.threats]
    edges += [(t, c.id) for c in register.controls for t in c.threats]
    edges += [(r.control, r.id) for r in register.sysreqs if r.control]
    edges += [(m.quality, m.id) for m in register.monitors if m.quality]
    edges += list(extra_edges)
    key = number_sort_key(canonical_numbers(register), register)
    return TraceGraph(nodes, edges, {n: key(n) for n in nodes})


# ---------------------------------------------------------------------------
# Numbering
# ---------------------------------------------------------------------------


def core_value_order(register: Register) -> list[str]:
    """Ranked core values first, then unranked ones in declaration order."""
    declared = [c.id for c in register.corevalues]
    ranked = [c for c in dict.fromkeys(register.ranking.order if register.ranking else ()) if c in declared]
    return ranked + [c for c in declared if c not in ranked]


def _numbering(register: Register) -> tuple[dict[str, ChainNumber], dict[str, list[ChainNumber]]]:
    numbers: dict[str, ChainNumber] = {}
    xrefs: dict[str, list[ChainNumber]] = {}

    def place(child: str, parent_number: ChainNumber, index: int) -> ChainNumber:
        num = ChainNumber(parent_number.parts + (index,))
        numbers[child] = num
        return num

    for ci, cv in enumerate(core_value_order(register), 1):
        numbers[cv] = ChainNumber((ci,))
        for qi, q in enumerate(register[cv].qualities, 1):
            place(q, numbers[cv], qi)

    # EVRs hang under their first covering tuple; later tuples cross-reference.
    slots: dict[str, int] = {}
    for evr in register.evrs:
        first, *rest = evr.covers
        parent = numbers[first.quality]
        slots[first.quality] = slots.get(first.quality, 0) + 1
        place(evr.id, parent, slots[first.quality])
        for c in rest:
            if c.quality != first.quality:
                xrefs.setdefault(evr.id, []).append(numbers[c.quality])

    evr_order = sorted(register.evrs, key=lambda e: numbers[e.id].sort_key())
    for evr in evr_order:
        for ti, t in enumerate(register.threats_of.get(evr.id, ()), 1):
            place(t, numbers[evr.id], ti)
        for mi, m in enumerate(register.measures_of.get(evr.id, ()), 1):
            numbers[m] = ChainNumber(numbers[evr.id].parts, mi)

    # Controls hang under the first threat they list.
    slots = {}
    placed: list[str] = []
    for ctl in register.controls:
        first = ctl.threats[0]
        slots[first] = slots.get(first, 0) + 1
        place(ctl.id, numbers[first], slots[first])
        placed.append(ctl.id)
        for t in dict.fromkeys(ctl.threats[1:]):
            if t != first:
                xrefs.setdefault(ctl.id, []).append(numbers[t])
    for ctl in placed:
        for ri, r in enumerate(register.sysreqs_of.get(ctl, ()), 1):
            place(r, numbers[ctl], ri)
    return numbers, xrefs


def canonical_numbers(register: Register) -> dict[str, ChainNumber]:
    """Map every numbered chain entity to its primary chain number.

    Monitors and functional requirements sit outside the chain and are not
    numbered. The result is ordered by number.
    """
    numbers, _ = _numbering(register)
    return dict(sorted(numbers.items(), key=lambda kv: kv[1].sort_key()))


def cross_references(register: Register) -> dict[str, list[ChainNumber]]:
    """Secondary parent numbers for EVRs and controls with several parents."""
    _, xrefs = _numbering(register)
    return xrefs


def number_sort_key(numbers: Mapping[str, ChainNumber], register: Register):
    """Sort key for ids: numbered entities by number, the rest after, by declaration."""
    position = {eid: i for i, eid in enumerate(register.by_id)}

    def key(entity_id: str) -> tuple:
        num = numbers.get(entity_id)
        if num is None:
            return (1, (), position.get(entity_id, 0))
        return (0, num.sort_key(), 0)

    return key


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def _paths(graph: TraceGraph, start: str, step: Mapping[str, list[str]]) -> list[list[str]]:
    out: list[list[str]] = []
    stack: list[list[str]] = [[start]]
    while stack:
        path = stack.pop()
        nxt = step[path[-1]]
        if not nxt:
            out.append(path)
            continue
        for n in reversed(nxt):
            stack.append(path + [n])
    return out


def trace(graph: TraceGraph, entity_id: str, direction: str) -> list[list[str]]:
    """All chains from ``entity_id`` up to roots or down to leaves.

    Chains are listed in canonical-number order, comparing from the root end
    for upward traces.
    """
    if entity_id not in graph.nodes:
        raise KeyError(f"unknown entity {entity_id!r}")
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    step = graph.pred if direction == "up" else graph.succ
    paths = _paths(graph, entity_id, step)

    def path_key(path: list[str]) -> tuple:
        nodes = reversed(path) if direction == "up" else path
        return tuple(graph.order[n] for n in nodes)

    return sorted(paths, key=path_key)


@dataclass(frozen=True)
class CoverageRow:
    core: str
    qualities: int
    evrs: int
    controls: int


def coverage_matrix(register: Register, graph: TraceGraph | None = None) -> list[CoverageRow]:
    """Count reachable qualities, EVRs and controls per core value."""
    graph = graph or build(register)
    rows = []
    for cv in core_value_order(register):
        kinds = [graph.nodes[n] for n in graph.descendants(cv)]
        rows.append(CoverageRow(cv, kinds.count("quality"), kinds.count("evr"), kinds.count("control")))
    return rows
