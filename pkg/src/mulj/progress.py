"""Deciding the progressing criterion of regular coderivations.

The decision procedure is the Ramsey-style trace-matrix method.  Each edge
of the proof graph (a node and one of its premises) carries a relation
between formula positions of the conclusion and of the premise, labelled by
the highest-priority principal formula met along the way and whether that
formula was a least fixed point on the left or a greatest one on the right.
Closing those relations under composition along paths inside a strongly
connected component, the coderivation is progressing exactly when every
idempotent loop matrix has a good self-pair.

:func:`lasso_oracle` is an independent brute-force check over closed walks
used for cross-validation on small graphs.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import networkx as nx

from .calculus import SUCC, Coderivation, ancestry_edges
from .types import Mu, Nat, Nu, fl_order

try:  # pragma: no cover - depends on the build
    from ._kernel import compose
    KERNEL = "cython"
except ImportError:  # pragma: no cover
    from ._kernel_py import compose
    KERNEL = "python"


Step = tuple  # (node id, premise index)


@dataclass(frozen=True)
class TraceAtom:
    """One immediate-ancestry edge with its progress flag."""

    source: tuple
    target: tuple
    principal: bool
    progress: bool


@dataclass(frozen=True)
class Lasso:
    """An ultimately periodic branch: ``prefix`` then ``cycle`` forever.

    Both are sequences of ``(node, premise index)`` steps; the cycle starts
    and ends at ``cycle[0][0]``.
    """

    prefix: tuple[Step, ...]
    cycle: tuple[Step, ...]

    @property
    def node_ids(self) -> tuple[list, list]:
        return [s[0] for s in self.prefix], [s[0] for s in self.cycle]

    def __str__(self):
        pre, cyc = self.node_ids
        return f"prefix {pre} cycle {cyc}"


@dataclass(frozen=True)
class ProgressVerdict:
    progressing: bool
    witness: Lasso | None = None

    def __bool__(self):
        return self.progressing

    def report(self) -> str:
        if self.progressing:
            return "progressing"
        return f"not progressing; witness {self.witness}"


class SizeExceeded(ValueError):
    """Raised by :func:`lasso_oracle` on graphs above its size limit."""


# ------------------------------------------------------------- labelling

def _pack(i: int, j: int, label: int) -> int:
    return ((i + 1) << 32) | ((j + 1) << 16) | label


def _unpack(e: int) -> tuple[int, int, int]:
    return (e >> 32) - 1, ((e >> 16) & 0xFFFF) - 1, e & 0xFFFF


def _is_good(label: int) -> bool:
    return label > 0 and label % 2 == 0


def trace_atoms(c: Coderivation) -> list[TraceAtom]:
    """All ancestry edges of ``c`` with their progress flags."""
    out = []
    for nid in c.reachable():
        node = c.nodes[nid]
        for e in ancestry_edges(node.seq, node.rule):
            good = e.principal and _good_formula(node.seq.at(e.src), e.src)
            out.append(TraceAtom((nid, e.src), (node.premises[e.premise], e.dst), e.principal, good))
    return out


def _good_formula(t, pos: int) -> bool:
    if pos == SUCC:
        return isinstance(t, Nu)
    return isinstance(t, (Mu, Nat))


class _Graph:
    """Proof graph with one packed trace matrix per (node, premise) edge."""

    def __init__(self, c: Coderivation):
        self.c = c
        self.nodes = c.reachable()
        order = fl_order(c.types())
        self.edges: dict = {v: [] for v in self.nodes}
        for v in self.nodes:
            node = c.nodes[v]
            per_prem: dict[int, set] = {k: set() for k in range(len(node.premises))}
            for e in ancestry_edges(node.seq, node.rule):
                label = 0
                if e.principal:
                    t = node.seq.at(e.src)
                    label = 2 * order.rank[t] + 2 + (0 if _good_formula(t, e.src) else 1)
                per_prem[e.premise].add(_pack(e.src, e.dst, label))
            for k, w in enumerate(node.premises):
                self.edges[v].append(((v, k), w, frozenset(per_prem[k])))

    def digraph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for v in self.nodes:
            for step, w, _ in self.edges[v]:
                g.add_edge(v, w, key=step[1])
        return g


def _has_good_self_pair(m: Iterable[int]) -> bool:
    for e in m:
        i, j, lab = _unpack(e)
        if i == j and _is_good(lab):
            return True
    return False


def _power_idempotent(m: frozenset) -> frozenset:
    """The idempotent power of ``m`` in the finite composition semigroup."""
    seen = {}
    p = m
    powers = [m]
    while p not in seen:
        seen[p] = len(powers) - 1
        p = compose(p, m)
        powers.append(p)
    # powers[start:] is periodic; find an idempotent in the period
    for q in powers[seen[p]:]:
        if compose(q, q) == q:
            return q
    raise AssertionError("no idempotent power")  # pragma: no cover


def lasso_progressing(c: Coderivation, lasso: Lasso) -> bool:
    """Exact check of one ultimately periodic branch.

    The branch ``prefix . cycle^omega`` carries a progressing thread iff the
    idempotent power of the cycle's trace matrix has a good self-pair.
    """
    if not lasso.cycle:
        return True
    g = _Graph(c)
    table = {step: m for v in g.nodes for step, _, m in g.edges[v]}
    m = None
    for step in lasso.cycle:
        m = table[step] if m is None else compose(m, table[step])
    return _has_good_self_pair(_power_idempotent(m))


# ------------------------------------------------------------- decision

def is_progressing(c: Coderivation) -> ProgressVerdict:
    """Decide whether every infinite branch of ``c`` has a progressing thread."""
    g = _Graph(c)
    dg = g.digraph()
    for comp in nx.strongly_connected_components(dg):
        if len(comp) == 1:
            (v,) = comp
            if not dg.has_edge(v, v):
                continue
        for v in sorted(comp, key=repr):
            bad = _search_from(g, v, comp)
            if bad is not None:
                return ProgressVerdict(False, Lasso(_prefix_to(g, v), tuple(bad)))
    return ProgressVerdict(True)


def _search_from(g: _Graph, v, comp) -> list | None:
    """Close matrices of paths from ``v`` inside ``comp``; return the steps of
    a loop at ``v`` whose idempotent matrix has no good self-pair."""
    parent: dict = {}
    queue = deque()
    for step, w, m in g.edges[v]:
        if w in comp and (w, m) not in parent:
            parent[(w, m)] = (None, step)
            queue.append((w, m))
    while queue:
        w, m = queue.popleft()
        if w == v and compose(m, m) == m and not _has_good_self_pair(m):
            return _path(parent, (w, m))
        for step, u, e in g.edges[w]:
            if u not in comp:
                continue
            key = (u, compose(m, e))
            if key not in parent:
                parent[key] = ((w, m), step)
                queue.append(key)
    return None


def _path(parent: dict, state) -> list:
    steps = []
    while state is not None:
        prev, step = parent[state]
        steps.append(step)
        state = prev
    return steps[::-1]


def _prefix_to(g: _Graph, target) -> tuple:
    root = g.c.root
    parent = {root: None}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if v == target:
            break
        for step, w, _ in g.edges[v]:
            if w not in parent:
                parent[w] = (v, step)
                queue.append(w)
    steps = []
    v = target
    while parent[v] is not None:
        v, step = parent[v]
        steps.append(step)
    return tuple(steps[::-1])


# ------------------------------------------------------------- the oracle

def lasso_oracle(c: Coderivation, max_nodes: int = 8, max_visits: int = 2) -> ProgressVerdict:
    """Brute-force progress check for small coderivations.

    Enumerates every closed walk that starts at a node reachable from the
    root and uses each edge at most ``max_visits`` times, and for each walk
    searches the thread graph of the repeated cycle directly: a progressing
    thread is a cycle in the unrolled ancestry graph whose highest-priority
    principal formula is good.  This shares no code with the trace-matrix
    algebra apart from the edge labels.
    """
    g = _Graph(c)
    if len(g.nodes) > max_nodes:
        raise SizeExceeded(f"{len(g.nodes)} nodes exceed the limit of {max_nodes}")
    for walk in _closed_walks(g, max_visits):
        if not _walk_has_progressing_thread(g, walk):
            return ProgressVerdict(False, Lasso(_prefix_to(g, walk[0][0]), tuple(walk)))
    return ProgressVerdict(True)


def _closed_walks(g: _Graph, max_visits: int):
    out = []
    for start in g.nodes:
        def extend(v, walk, used):
            for step, w, _ in g.edges[v]:
                if used.get(step, 0) >= max_visits:
                    continue
                used[step] = used.get(step, 0) + 1
                walk.append(step)
                if w == start:
                    out.append(tuple(walk))
                extend(w, walk, used)
                walk.pop()
                used[step] -= 1
        extend(start, [], {})
    return out


def _walk_has_progressing_thread(g: _Graph, walk: tuple) -> bool:
    table = {step: m for v in g.nodes for step, _, m in g.edges[v]}
    # unrolled thread graph: vertices (index along walk, position)
    edges = []
    n = len(walk)
    for k, step in enumerate(walk):
        for e in table[step]:
            i, j, lab = _unpack(e)
            edges.append(((k, i), ((k + 1) % n, j), lab))
    labels = sorted({lab for _, _, lab in edges if _is_good(lab)})
    for lab in labels:
        allowed = nx.DiGraph()
        marked = []
        for a, b, lb in edges:
            if lb < lab:
                allowed.add_edge(a, b)
            elif lb == lab:
                allowed.add_edge(a, b)
                marked.append((a, b))
        for comp in nx.strongly_connected_components(allowed):
            for a, b in marked:
                if a in comp and b in comp:
                    return True
    return False
