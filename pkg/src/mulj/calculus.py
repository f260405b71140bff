"""Sequents, rule instances and (cyclic) coderivations.

Rules follow the usual two-sided single-succedent presentation.  Every left
rule, and ``cut``, may name the position of its principal formula (``pos``);
when omitted the principal formula sits at the end of the cedent, which is the
textbook shape.  Two-context rules carry ``split``, the length of the first
context.  A rule at a non-final position is the textbook rule composed with
exchanges.

A :class:`Coderivation` is a finite rooted graph; premise references may point
back to ancestors, which is how cycles (back-edges) are represented.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

from .types import (
    Arrow, Mu, Nat, Nu, Prod, Sum, TypeExpr, Unit, is_type, show_type, unfold,
    substitute,
)

SUCC = -1  # position index of the succedent

TAGS = (
    "id", "exchange", "weaken", "contract", "cut", "unit_r", "unit_l",
    "arrow_r", "arrow_l", "prod_r", "prod_l", "sum_r0", "sum_r1", "sum_l",
    "mu_r", "mu_l_iter", "nu_l", "nu_r_coiter", "mu_l_unfold", "nu_r_unfold",
    "nat_zero", "nat_succ", "nat_iter", "nat_cond", "hyp",
)

PREMISE_COUNT = {
    "id": 0, "exchange": 1, "weaken": 1, "contract": 1, "cut": 2,
    "unit_r": 0, "unit_l": 1, "arrow_r": 1, "arrow_l": 2, "prod_r": 2,
    "prod_l": 1, "sum_r0": 1, "sum_r1": 1, "sum_l": 2, "mu_r": 1,
    "mu_l_iter": 2, "nu_l": 1, "nu_r_coiter": 2, "mu_l_unfold": 1,
    "nu_r_unfold": 1, "nat_zero": 0, "nat_succ": 1, "nat_iter": 3,
    "nat_cond": 2, "hyp": 0,
}

# Rules whose principal formula is on the left and given by ``pos``.
LEFT_PRINCIPAL = {
    "unit_l", "arrow_l", "prod_l", "sum_l", "mu_l_iter", "nu_l",
    "mu_l_unfold", "nat_iter", "nat_cond",
}
RIGHT_RULES = {
    "unit_r", "arrow_r", "prod_r", "sum_r0", "sum_r1", "mu_r", "nu_r_coiter",
    "nu_r_unfold", "nat_zero", "nat_succ",
}
STRUCTURAL = {"id", "exchange", "weaken", "contract"}
SPLIT_RULES = {"cut", "arrow_l", "prod_r", "mu_l_iter", "nu_r_coiter", "nat_iter"}

_COMMON = {
    "id", "exchange", "weaken", "contract", "cut", "unit_r", "unit_l",
    "arrow_r", "arrow_l", "prod_r", "prod_l", "sum_r0", "sum_r1", "sum_l",
    "mu_r", "nu_l", "nat_zero", "nat_succ",
}
SYSTEMS: dict[str, frozenset] = {
    "muLJ": frozenset(_COMMON | {"mu_l_iter", "nu_r_coiter", "nat_iter"}),
    "muLJ_prime": frozenset(_COMMON | {"mu_l_unfold", "nu_r_unfold", "nat_cond"}),
}
_NEG_DROP = {"unit_r", "unit_l", "sum_r0", "sum_r1", "sum_l", "nu_l",
             "nu_r_coiter", "nu_r_unfold"}
SYSTEMS["muLJ_neg"] = SYSTEMS["muLJ"] - _NEG_DROP
SYSTEMS["muLJ_prime_neg"] = SYSTEMS["muLJ_prime"] - _NEG_DROP
SYSTEM_ALIASES = {
    "muLJ": "muLJ", "muLJ'": "muLJ_prime", "muLJ_prime": "muLJ_prime",
    "neg": "muLJ_prime_neg", "muLJ_neg": "muLJ_neg",
    "muLJ_prime_neg": "muLJ_prime_neg",
}
CYCLIC_SYSTEMS = {"muLJ_prime", "muLJ_prime_neg"}


class RuleError(ValueError):
    """A sequent is not a valid conclusion of the given rule instance."""


@dataclass(frozen=True)
class Sequent:
    ante: tuple[TypeExpr, ...]
    succ: TypeExpr

    def __init__(self, ante: Iterable[TypeExpr], succ: TypeExpr):
        object.__setattr__(self, "ante", tuple(ante))
        object.__setattr__(self, "succ", succ)

    def __str__(self):
        left = ", ".join(show_type(t) for t in self.ante)
        return f"{left} => {show_type(self.succ)}" if left else f"=> {show_type(self.succ)}"

    def __len__(self):
        return len(self.ante)

    def at(self, pos: int) -> TypeExpr:
        return self.succ if pos == SUCC else self.ante[pos]


@dataclass(frozen=True)
class RuleInstance:
    """A rule tag with its positional data.

    ``pos`` is the principal position (left rules), the cut-formula position
    in the right premise (``cut``), or the left index of the swapped pair
    (``exchange``).  ``split`` is the size of the first context of a
    two-context rule.  ``aux`` is the cut formula or the (co)invariant.
    ``name`` labels hypothesis leaves.
    """

    tag: str
    pos: int | None = None
    split: int | None = None
    aux: TypeExpr | None = None
    name: str | None = None

    def __post_init__(self):
        if self.tag not in PREMISE_COUNT:
            raise RuleError(f"unknown rule tag {self.tag!r}")

    @property
    def arity(self) -> int:
        return PREMISE_COUNT[self.tag]

    def __str__(self):
        opts = []
        for key in ("pos", "split"):
            if getattr(self, key) is not None:
                opts.append(f"{key}={getattr(self, key)}")
        if self.aux is not None:
            opts.append(f"aux={show_type(self.aux)}")
        if self.name is not None:
            opts.append(f"name={self.name}")
        return f"{self.tag}[{','.join(opts)}]" if opts else self.tag


def resolve_pos(seq: Sequent, rule: RuleInstance) -> int | None:
    """Principal position with the textbook default filled in."""
    tag = rule.tag
    n = len(seq.ante)
    if tag in LEFT_PRINCIPAL or tag in ("weaken", "contract"):
        return n - 1 if rule.pos is None else rule.pos
    if tag == "exchange":
        return n - 2 if rule.pos is None else rule.pos
    return rule.pos


def _split(seq: Sequent, rule: RuleInstance, removed: int) -> int:
    k = 0 if rule.split is None else rule.split
    if not 0 <= k <= len(seq.ante) - removed:
        raise RuleError(f"split {k} out of range")
    return k


def _need(cond: bool, msg: str):
    if not cond:
        raise RuleError(msg)


def expected_premises(seq: Sequent, rule: RuleInstance) -> list[Sequent]:
    """The premise sequents forced by a conclusion and a rule instance."""
    tag = rule.tag
    a, s = list(seq.ante), seq.succ
    n = len(a)
    p = resolve_pos(seq, rule)
    if tag in LEFT_PRINCIPAL or tag in ("weaken", "contract", "exchange"):
        hi = n - 1 if tag == "exchange" else n
        _need(p is not None and 0 <= p < hi, f"position {p} out of range")
    if tag == "hyp":
        return []
    if tag == "id":
        _need(n == 1 and a[0] == s, "id needs a sequent of the form A => A")
        return []
    if tag == "exchange":
        b = a[:]
        b[p], b[p + 1] = b[p + 1], b[p]
        return [Sequent(b, s)]
    if tag == "weaken":
        return [Sequent(a[:p] + a[p + 1:], s)]
    if tag == "contract":
        return [Sequent(a[:p + 1] + a[p:], s)]
    if tag == "cut":
        _need(rule.aux is not None, "cut needs a cut formula")
        k = _split(seq, rule, 0)
        gam, delta = a[:k], a[k:]
        q = len(delta) if rule.pos is None else rule.pos
        _need(0 <= q <= len(delta), "cut position out of range")
        return [Sequent(gam, rule.aux), Sequent(delta[:q] + [rule.aux] + delta[q:], s)]
    if tag == "unit_r":
        _need(n == 0 and isinstance(s, Unit), "unit_r concludes => 1")
        return []
    if tag == "nat_zero":
        _need(n == 0 and isinstance(s, Nat), "nat_zero concludes => N")
        return []
    if tag == "nat_succ":
        _need(isinstance(s, Nat), "nat_succ concludes ... => N")
        return [Sequent(a, s)]
    if tag == "unit_l":
        _need(isinstance(a[p], Unit), "unit_l principal must be 1")
        return [Sequent(a[:p] + a[p + 1:], s)]
    if tag == "arrow_r":
        _need(isinstance(s, Arrow), "arrow_r succedent must be an arrow")
        return [Sequent(a + [s.domain], s.codomain)]
    if tag == "prod_r":
        _need(isinstance(s, Prod), "prod_r succedent must be a product")
        k = _split(seq, rule, 0)
        return [Sequent(a[:k], s.left), Sequent(a[k:], s.right)]
    if tag == "prod_l":
        f = a[p]
        _need(isinstance(f, Prod), "prod_l principal must be a product")
        return [Sequent(a[:p] + [f.left, f.right] + a[p + 1:], s)]
    if tag in ("sum_r0", "sum_r1"):
        _need(isinstance(s, Sum), f"{tag} succedent must be a sum")
        return [Sequent(a, s.left if tag == "sum_r0" else s.right)]
    if tag == "sum_l":
        f = a[p]
        _need(isinstance(f, Sum), "sum_l principal must be a sum")
        return [Sequent(a[:p] + [f.left] + a[p + 1:], s),
                Sequent(a[:p] + [f.right] + a[p + 1:], s)]
    if tag == "mu_r":
        _need(isinstance(s, Mu), "mu_r succedent must be a mu-type")
        return [Sequent(a, unfold(s))]
    if tag == "nu_r_unfold":
        _need(isinstance(s, Nu), "nu_r_unfold succedent must be a nu-type")
        return [Sequent(a, unfold(s))]
    if tag in ("mu_l_unfold", "nu_l"):
        f = a[p]
        want = Mu if tag == "mu_l_unfold" else Nu
        _need(isinstance(f, want), f"{tag} principal has the wrong shape")
        return [Sequent(a[:p] + [unfold(f)] + a[p + 1:], s)]
    if tag == "nat_cond":
        _need(isinstance(a[p], Nat), "nat_cond principal must be N")
        return [Sequent(a[:p] + a[p + 1:], s), Sequent(a, s)]
    if tag in ("arrow_l", "mu_l_iter", "nat_iter"):
        f = a[p]
        rest = a[:p] + a[p + 1:]
        k = _split(seq, rule, 1)
        _need(p >= k, "principal formula must lie in the second context")
        gam, delta, q = rest[:k], rest[k:], p - k
        if tag == "arrow_l":
            _need(isinstance(f, Arrow), "arrow_l principal must be an arrow")
            return [Sequent(gam, f.domain),
                    Sequent(delta[:q] + [f.codomain] + delta[q:], s)]
        if tag == "mu_l_iter":
            _need(isinstance(f, Mu), "mu_l_iter principal must be a mu-type")
            _need(rule.aux is not None, "mu_l_iter needs an invariant")
            rho = rule.aux
            return [Sequent(gam + [substitute(f.body, f.var, rho)], rho),
                    Sequent(delta[:q] + [rho] + delta[q:], s)]
        _need(isinstance(f, Nat), "nat_iter principal must be N")
        _need(rule.aux is not None, "nat_iter needs an invariant")
        sig = rule.aux
        return [Sequent(gam, sig), Sequent(gam + [sig], sig),
                Sequent(delta[:q] + [sig] + delta[q:], s)]
    if tag == "nu_r_coiter":
        _need(isinstance(s, Nu), "nu_r_coiter succedent must be a nu-type")
        _need(rule.aux is not None, "nu_r_coiter needs an invariant")
        k = _split(seq, rule, 0)
        tau = rule.aux
        return [Sequent(a[:k], tau), Sequent(a[k:] + [tau], substitute(s.body, s.var, tau))]
    raise RuleError(f"unhandled rule {tag}")  # pragma: no cover


class AncestorEdge(NamedTuple):
    """Conclusion position ``src`` has immediate ancestor ``dst`` in premise ``premise``."""

    src: int
    premise: int
    dst: int
    principal: bool


def _shift_map(n: int, drop: int | None, widen: int = 0) -> dict[int, int]:
    """Context positions of a conclusion of length ``n`` mapped in place into a
    premise where position ``drop`` is replaced by ``widen`` formulas."""
    out = {}
    for i in range(n):
        if i == drop:
            continue
        out[i] = i if drop is None or i < drop else i - 1 + widen
    return out


def ancestry_edges(seq: Sequent, rule: RuleInstance) -> list[AncestorEdge]:
    """Immediate-ancestor pairs of one inference step (colour discipline)."""
    tag = rule.tag
    n = len(seq.ante)
    p = resolve_pos(seq, rule)
    E = AncestorEdge
    out: list[AncestorEdge] = []

    def ctx(prem: int, mapping: dict[int, int], succ: bool = True):
        out.extend(E(i, prem, j, False) for i, j in mapping.items())
        if succ:
            out.append(E(SUCC, prem, SUCC, False))

    if tag in ("id", "unit_r", "nat_zero", "hyp"):
        return out
    if tag == "exchange":
        m = {i: i for i in range(n)}
        m[p], m[p + 1] = p + 1, p
        ctx(0, m)
    elif tag == "weaken" or tag == "unit_l":
        ctx(0, _shift_map(n, p, 0))
    elif tag == "contract":
        m = _shift_map(n, p, 2)
        ctx(0, m)
        out.extend([E(p, 0, p, False), E(p, 0, p + 1, False)])
    elif tag == "cut":
        k = 0 if rule.split is None else rule.split
        q = (n - k) if rule.pos is None else rule.pos
        ctx(0, {i: i for i in range(k)}, succ=False)
        ctx(1, {i: (i - k if i - k < q else i - k + 1) for i in range(k, n)})
    elif tag == "arrow_r":
        ctx(0, {i: i for i in range(n)}, succ=False)
        out.extend([E(SUCC, 0, n, True), E(SUCC, 0, SUCC, True)])
    elif tag in ("prod_r",):
        k = 0 if rule.split is None else rule.split
        ctx(0, {i: i for i in range(k)}, succ=False)
        ctx(1, {i: i - k for i in range(k, n)}, succ=False)
        out.extend([E(SUCC, 0, SUCC, True), E(SUCC, 1, SUCC, True)])
    elif tag in ("sum_r0", "sum_r1", "mu_r", "nu_r_unfold", "nat_succ"):
        ctx(0, {i: i for i in range(n)}, succ=False)
        out.append(E(SUCC, 0, SUCC, True))
    elif tag == "prod_l":
        ctx(0, _shift_map(n, p, 2))
        out.extend([E(p, 0, p, True), E(p, 0, p + 1, True)])
    elif tag in ("mu_l_unfold", "nu_l"):
        ctx(0, _shift_map(n, p, 1))
        out.append(E(p, 0, p, True))
    elif tag == "sum_l":
        for j in (0, 1):
            ctx(j, _shift_map(n, p, 1))
            out.append(E(p, j, p, True))
    elif tag == "nat_cond":
        ctx(0, _shift_map(n, p, 0))
        ctx(1, {i: i for i in range(n) if i != p})
        out.append(E(p, 1, p, True))
    elif tag in ("arrow_l", "mu_l_iter", "nat_iter"):
        k = 0 if rule.split is None else rule.split
        rest = [i for i in range(n) if i != p]
        gam, delta, q = rest[:k], rest[k:], p - k
        last = 2 if tag == "nat_iter" else 1
        for prem in range(last):
            ctx(prem, {i: j for j, i in enumerate(gam)}, succ=False)
        ctx(last, {i: (j if j < q else j + 1) for j, i in enumerate(delta)})
        if tag == "arrow_l":
            out.extend([E(p, 0, SUCC, True), E(p, 1, q, True)])
    elif tag == "nu_r_coiter":
        k = 0 if rule.split is None else rule.split
        ctx(0, {i: i for i in range(k)}, succ=False)
        ctx(1, {i: i - k for i in range(k, n)}, succ=False)
    else:  # pragma: no cover
        raise RuleError(f"unhandled rule {tag}")
    return out


def principal_position(seq: Sequent, rule: RuleInstance) -> int | None:
    """Position of the logical principal formula in the conclusion, if any."""
    if rule.tag in LEFT_PRINCIPAL:
        return resolve_pos(seq, rule)
    if rule.tag in RIGHT_RULES:
        return SUCC
    return None


NodeId = Hashable


class Node(NamedTuple):
    seq: Sequent
    rule: RuleInstance
    premises: tuple


@dataclass(frozen=True)
class Coderivation:
    """A finite rooted proof graph.  Acyclic graphs are finite derivations."""

    nodes: Mapping[NodeId, Node]
    root: NodeId

    def __post_init__(self):
        if not isinstance(self.nodes, MappingProxyType):
            object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))

    @property
    def conclusion(self) -> Sequent:
        return self.nodes[self.root].seq

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, nid: NodeId) -> Node:
        return self.nodes[nid]

    def reachable(self) -> list:
        seen, order, stack = set(), [], [self.root]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            order.append(v)
            stack.extend(reversed(self.nodes[v].premises))
        return order

    def is_acyclic(self) -> bool:
        WHITE, GREY, BLACK = 0, 1, 2
        colour = {v: WHITE for v in self.nodes}
        stack = [(self.root, iter(self.nodes[self.root].premises))]
        colour[self.root] = GREY
        while stack:
            v, it = stack[-1]
            w = next(it, None)
            if w is None:
                colour[v] = BLACK
                stack.pop()
                continue
            if colour[w] == GREY:
                return False
            if colour[w] == WHITE:
                colour[w] = GREY
                stack.append((w, iter(self.nodes[w].premises)))
        return True

    def rules_used(self) -> set[str]:
        return {self.nodes[v].rule.tag for v in self.reachable()}

    def types(self) -> set[TypeExpr]:
        out = set()
        for v in self.reachable():
            s = self.nodes[v].seq
            out.update(s.ante)
            out.add(s.succ)
        return out


@dataclass
class CheckReport:
    errors: list[tuple[NodeId, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"node {nid}: {msg}" for nid, msg in self.errors)


def _negative_type(t: TypeExpr) -> bool:
    if isinstance(t, (Sum, Unit, Nu)):
        return False
    return all(_negative_type(c) for c in t.children())


def check(c: Coderivation, system: str = "muLJ_prime", allow_hyp: bool = False) -> CheckReport:
    """Check every node of ``c`` is a valid rule instance of ``system``."""
    sysname = SYSTEM_ALIASES.get(system, system)
    if sysname not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}")
    allowed = SYSTEMS[sysname]
    negative = sysname.endswith("_neg")
    rep = CheckReport()
    if c.root not in c.nodes:
        rep.errors.append((c.root, "root is not a node"))
        return rep
    for nid in c.reachable():
        node = c.nodes[nid]
        tag = node.rule.tag
        if tag == "hyp":
            if not allow_hyp:
                rep.errors.append((nid, "open hypothesis leaf"))
            continue
        if tag not in allowed:
            rep.errors.append((nid, f"rule {tag} is not in system {sysname}"))
            continue
        bad = [t for t in (*node.seq.ante, node.seq.succ) if not is_type(t)]
        if bad:
            rep.errors.append((nid, f"bad positivity in {show_type(bad[0])}"))
            continue
        if negative and not all(_negative_type(t) for t in (*node.seq.ante, node.seq.succ)):
            rep.errors.append((nid, "type outside the negative fragment"))
            continue
        missing = [q for q in node.premises if q not in c.nodes]
        if missing:
            rep.errors.append((nid, f"dangling premise {missing[0]}"))
            continue
        if len(node.premises) != node.rule.arity:
            rep.errors.append((nid, f"{tag} expects {node.rule.arity} premises, got {len(node.premises)}"))
            continue
        try:
            want = expected_premises(node.seq, node.rule)
        except RuleError as e:
            rep.errors.append((nid, str(e)))
            continue
        for i, (w, q) in enumerate(zip(want, node.premises)):
            got = c.nodes[q].seq
            if got != w:
                rep.errors.append((nid, f"premise {i} should be {w}, found {got}"))
    if sysname not in CYCLIC_SYSTEMS and rep.ok and not c.is_acyclic():
        rep.errors.append((c.root, f"system {sysname} admits only finite derivations"))
    return rep


@dataclass(frozen=True)
class AncestryGraph:
    """Immediate-ancestor edges between (node, position) vertices."""

    edges: tuple[tuple[tuple, tuple, bool, str], ...]

    def vertices(self) -> set:
        out = set()
        for a, b, _, _ in self.edges:
            out.add(a)
            out.add(b)
        return out

    def from_node(self, nid) -> list:
        return [e for e in self.edges if e[0][0] == nid]


def ancestry(c: Coderivation) -> AncestryGraph:
    """Ancestry edges ``((node, pos), (premise node, pos), principal, tag)``."""
    edges = []
    for nid in c.reachable():
        node = c.nodes[nid]
        for e in ancestry_edges(node.seq, node.rule):
            edges.append(((nid, e.src), (node.premises[e.premise], e.dst), e.principal, node.rule.tag))
    return AncestryGraph(tuple(edges))


# -------------------------------------------------------------- the store

class ProofStore:
    """A mutable node table used to assemble proof graphs.

    ``reserve`` hands out an id for a node whose definition is given later;
    this is how back-edges are introduced.
    """

    def __init__(self, nodes: Mapping | None = None):
        self.nodes: dict = dict(nodes or {})
        self._ids = itertools.count(max((k for k in self.nodes if isinstance(k, int)), default=-1) + 1)
        self.pending: dict = {}

    def fresh(self) -> int:
        while True:
            k = next(self._ids)
            if k not in self.nodes and k not in self.pending:
                return k

    def add(self, seq: Sequent, rule: RuleInstance, premises: Sequence = ()) -> int:
        k = self.fresh()
        self.nodes[k] = Node(seq, rule, tuple(premises))
        return k

    def seq(self, nid) -> Sequent:
        if nid in self.nodes:
            return self.nodes[nid].seq
        return self.pending[nid]

    def reserve(self, seq: Sequent) -> int:
        k = self.fresh()
        self.pending[k] = seq
        return k

    def define(self, reserved, built) -> int:
        """Make ``reserved`` stand for the node ``built`` and return it."""
        want = self.pending.pop(reserved)
        got = self.nodes[built].seq
        if want != got:
            raise RuleError(f"back-edge target {want} does not match {got}")
        self.nodes[reserved] = self.nodes[built]
        return reserved

    def finish(self, root, renumber: bool = True) -> Coderivation:
        if self.pending:
            raise RuleError(f"undefined reserved nodes {sorted(self.pending)}")
        c = Coderivation(self.nodes, root)
        order = c.reachable()
        if not renumber:
            return Coderivation({v: self.nodes[v] for v in order}, root)
        ren = {v: i for i, v in enumerate(order)}
        return Coderivation(
            {ren[v]: self.nodes[v]._replace(premises=tuple(ren[q] for q in self.nodes[v].premises))
             for v in order},
            0,
        )

    @classmethod
    def of(cls, c: Coderivation) -> "ProofStore":
        return cls(c.nodes)
