"""Cut-reduction on (co)derivations.

Reduction steps never mutate existing nodes: a step builds the contractum
from fresh nodes that point back into the old graph, so a back-edge is only
unfolded when a step actually walks through it.

:func:`redexes` and :func:`step` give the context-closed relation on a
:class:`Coderivation` (a step at a shared node rewrites every occurrence of
it).  :func:`evaluate_by_cut_reduction` runs a deterministic head strategy on
a closed proof of ``=> N`` and reads back the numeral.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .build import Builder
from .calculus import (
    LEFT_PRINCIPAL, RIGHT_RULES, SPLIT_RULES, SUCC, Coderivation, RuleError,
    RuleInstance, Sequent, ancestry_edges, resolve_pos,
)
from .library import functor_node
from .types import Mu, Nu

VALUE_HEADS = RIGHT_RULES


class StaleRedex(ValueError):
    """The redex does not apply to the given coderivation."""


class Stuck(RuntimeError):
    """No rule applies although the proof is not a value."""


class Timeout(RuntimeError):
    """Evaluation ran out of fuel."""


@dataclass(frozen=True)
class Redex:
    """A reducible cut.

    ``kind`` is one of ``principal`` (both cut formulas introduced by logical
    rules), ``structural`` (the right premise weakens, contracts or exchanges
    the cut formula), ``identity`` (one premise is an axiom) and
    ``commutation`` (the cut moves above the last rule of the ``side``
    premise).
    """

    node: object
    kind: str
    rules: tuple[str, str]
    side: str | None = None

    def __str__(self):
        extra = f" {self.side}" if self.side else ""
        return f"{self.kind}{extra} {self.rules[0]}/{self.rules[1]} at {self.node}"


# ----------------------------------------------------------- inspection

def _cut_q(b: Builder, x) -> int:
    node = b.nodes[x]
    k = node.rule.split or 0
    return node.rule.pos if node.rule.pos is not None else len(node.seq.ante) - k


def _touches(b: Builder, x, q: int) -> str | None:
    """How the last rule of ``x`` acts on antecedent position ``q``."""
    node = b.nodes[x]
    tag = node.rule.tag
    if tag == "id":
        return "identity"
    if tag == "hyp":
        return "opaque"
    p = resolve_pos(node.seq, node.rule)
    if tag in ("weaken", "contract") and p == q:
        return "structural"
    if tag == "exchange" and q in (p, p + 1):
        return "structural"
    if tag in LEFT_PRINCIPAL and p == q:
        return "principal"
    return None


_MATCH = {
    "unit_l": {"unit_r"}, "prod_l": {"prod_r"}, "sum_l": {"sum_r0", "sum_r1"},
    "arrow_l": {"arrow_r"}, "mu_l_unfold": {"mu_r"}, "mu_l_iter": {"mu_r"},
    "nu_l": {"nu_r_unfold", "nu_r_coiter"}, "nat_cond": {"nat_zero", "nat_succ"},
    "nat_iter": {"nat_zero", "nat_succ"},
}


def _left_commutes(tag: str) -> bool:
    return tag not in RIGHT_RULES and tag not in ("id", "hyp")


def _redexes_at(b: Builder, x) -> list[Redex]:
    node = b.nodes[x]
    if node.rule.tag != "cut":
        return []
    left, right = node.premises
    lt, rt = b.nodes[left].rule.tag, b.nodes[right].rule.tag
    q = _cut_q(b, x)
    out = []
    how = _touches(b, right, q)
    if lt == "id" or how == "identity":
        out.append(Redex(x, "identity", (lt, rt)))
    if how == "structural":
        out.append(Redex(x, "structural", (lt, rt)))
    elif how == "principal" and lt in _MATCH[rt]:
        out.append(Redex(x, "principal", (lt, rt)))
    elif how is None:
        out.append(Redex(x, "commutation", (lt, rt), "right"))
    if _left_commutes(lt):
        out.append(Redex(x, "commutation", (lt, rt), "left"))
    return out


def redexes(c: Coderivation) -> list[Redex]:
    """Every reducible cut of ``c`` with every pattern that applies there."""
    b = Builder(c.nodes)
    out = []
    for v in c.reachable():
        out.extend(_redexes_at(b, v))
    return out


# ----------------------------------------------------------- contracta

def _expand_rule(seq: Sequent, rule: RuleInstance, q: int, k: int) -> RuleInstance:
    """Re-index ``rule`` after antecedent ``q`` of its conclusion became ``k``
    formulas.  ``q`` must not be principal."""
    d = k - 1
    tag = rule.tag
    split = rule.split
    pos = rule.pos
    if tag == "cut":
        s = split or 0
        if q < s:
            split = s + d
        elif pos is not None:
            j = q - s
            pos = pos + d if j < pos else pos
        return RuleInstance(tag, pos, split, rule.aux, rule.name)
    if tag in SPLIT_RULES and split is not None and q < split:
        split = split + d
    if pos is not None and pos > q:
        pos = pos + d
    return RuleInstance(tag, pos, split, rule.aux, rule.name)


def _explicit(seq: Sequent, rule: RuleInstance) -> RuleInstance:
    """Fill in a defaulted position so that appending antecedents is safe."""
    if rule.tag == "cut":
        return RuleInstance("cut", _cut_q_of(seq, rule), rule.split, rule.aux)
    pos = resolve_pos(seq, rule)
    return RuleInstance(rule.tag, pos, rule.split, rule.aux, rule.name)


def _cut_q_of(seq: Sequent, rule: RuleInstance) -> int:
    return rule.pos if rule.pos is not None else len(seq.ante) - (rule.split or 0)


def commute_right(b: Builder, x) -> int:
    """``cut(P, R(B...))`` to ``R(cut(P, B)...)`` for a cut formula that is a
    side formula of ``R``."""
    node = b.nodes[x]
    left, right = node.premises
    q = _cut_q(b, x)
    rnode = b.nodes[right]
    sigma = b.ante(left)
    k = len(sigma)
    prems = list(rnode.premises)
    for e in ancestry_edges(rnode.seq, rnode.rule):
        if e.src != q:
            continue
        c = b.cut(left, prems[e.premise], e.dst)
        n = len(b.ante(c))
        order = list(range(k, k + e.dst)) + list(range(k)) + list(range(k + e.dst, n))
        prems[e.premise] = b.permute(c, order)
    a = list(rnode.seq.ante)
    seq = Sequent(a[:q] + sigma + a[q + 1:], rnode.seq.succ)
    y = b._mk(seq, _expand_rule(rnode.seq, rnode.rule, q, k), prems)
    n = len(seq.ante)
    return b.permute(y, list(range(q, q + k)) + list(range(q)) + list(range(q + k, n)))


def commute_left(b: Builder, x) -> int:
    """``cut(L(P...), B)`` to ``L(cut(P, B)...)`` for a left or structural
    last rule ``L`` of the left premise."""
    node = b.nodes[x]
    left, right = node.premises
    q = _cut_q(b, x)
    lnode = b.nodes[left]
    prems = list(lnode.premises)
    for e in ancestry_edges(lnode.seq, lnode.rule):
        if e.src == SUCC:
            prems[e.premise] = b.cut(prems[e.premise], right, q)
    rest = list(b.ante(right))
    del rest[q]
    seq = Sequent(list(lnode.seq.ante) + rest, node.seq.succ)
    return b._mk(seq, _explicit(lnode.seq, lnode.rule), prems)


def _principal(b: Builder, x) -> int:
    node = b.nodes[x]
    left, right = node.premises
    q = _cut_q(b, x)
    L, R = b.nodes[left], b.nodes[right]
    lt, rt = L.rule.tag, R.rule.tag
    target = list(node.seq.ante)
    sigma = list(L.seq.ante)
    k = len(sigma)
    if rt == "unit_l":
        return b.weaken_front(R.premises[0], sigma) if k else R.premises[0]
    if rt in ("mu_l_unfold", "nu_l") or (rt == "sum_l"):
        if rt == "sum_l":
            prem = R.premises[0 if lt == "sum_r0" else 1]
        else:
            prem = R.premises[0]
        return b.cut(L.premises[0], prem, q)
    if rt == "prod_l":
        p1, p2 = L.premises
        inner = b.cut(p2, R.premises[0], q + 1)
        return b.cut(p1, inner, len(b.ante(p2)) + q)
    if rt == "arrow_l":
        (body,) = L.premises
        w, v = R.premises
        s = R.rule.split or 0
        g = len(b.ante(w))
        qq = q - s
        c1 = b.cut(w, body, k)                       # G, S => b
        c2 = b.cut(c1, v, qq)                        # G, S, D' => t
        n = len(b.ante(c2))
        return b.permute(c2, list(range(g, g + k)) + list(range(g)) + list(range(g + k, n)))
    if rt == "nat_cond":
        zero, succ = R.premises
        if lt == "nat_zero":
            return zero
        return b.cut(L.premises[0], succ, q)
    if rt in ("mu_l_iter", "nat_iter"):
        s = R.rule.split or 0
        g = s
        qq = q - s
        if rt == "nat_iter":
            base, stp, cont = R.premises
            if lt == "nat_zero":
                return b.cut(base, cont, qq)
            inner = b.nat_iter(base, stp, b.id(R.rule.aux), 0)
            pred = L.premises[0]
        else:
            stp, cont = R.premises
            mu = R.seq.ante[q]
            inner0 = b.mu_l_iter(stp, b.id(R.rule.aux), mu, 0)
            inner = functor_node(b, mu.body, mu.var, inner0)
            pred = L.premises[0]
        c1 = b.cut(pred, inner, g)                   # S, G => rho
        c2 = b.cut(c1, stp, k + g)                   # S, G, G => rho
        c3 = b.cut(c2, cont, qq)                     # S, G, G, D' => t
        mapping = list(range(k + g)) + list(range(k, k + g)) + list(range(k + g, len(target)))
        return b.reindex(c3, target, mapping)
    if rt == "nu_l" and lt == "nu_r_coiter":  # pragma: no cover - handled below
        pass
    raise RuleError(f"no principal reduction for {lt}/{rt}")


def _nu_coiter(b: Builder, x) -> int:
    """``cut(nu_r_coiter(P, S), nu_l(T))``: unfold the coiteration once."""
    node = b.nodes[x]
    left, right = node.premises
    q = _cut_q(b, x)
    L, R = b.nodes[left], b.nodes[right]
    start, stp = L.premises
    nu = L.seq.succ
    d = L.rule.split or 0
    gam = list(b.ante(stp))[:-1]
    g = len(gam)
    rho = L.rule.aux
    inner = b.nu_r_coiter(b.id(rho), stp, nu)          # rho, G => nu
    inner = b.move(inner, 0, g)                         # G, rho => nu
    f = functor_node(b, nu.body, nu.var, inner)         # G, s(rho) => s(nu)
    c1 = b.cut(f, R.premises[0], q)                     # G, s(rho), T' => t
    c2 = b.cut(stp, c1, g)                              # G, rho, G, T' => t
    c3 = b.cut(start, c2, g)                            # D, G, G, T' => t
    target = list(node.seq.ante)
    n3 = len(b.ante(c3))
    mapping = list(range(d + g)) + list(range(d, d + g)) + list(range(d + g, d + g + (n3 - d - 2 * g)))
    return b.reindex(c3, target, mapping)


def _structural(b: Builder, x) -> int:
    node = b.nodes[x]
    left, right = node.premises
    q = _cut_q(b, x)
    R = b.nodes[right]
    sigma = b.ante(left)
    k = len(sigma)
    (prem,) = R.premises
    if R.rule.tag == "weaken":
        return b.weaken_front(prem, sigma)
    if R.rule.tag == "exchange":
        p = resolve_pos(R.seq, R.rule)
        return b.cut(left, prem, p + 1 if q == p else p)
    # contraction: cut twice, then merge the two copies of the left context
    c1 = b.cut(left, prem, q + 1)
    c2 = b.cut(left, c1, k + q)
    return b.contract_prefix(c2, k) if k else c2


def _identity(b: Builder, x) -> int:
    node = b.nodes[x]
    left, right = node.premises
    if b.nodes[right].rule.tag == "id":
        return left
    return b.move(right, _cut_q(b, x), 0)


def apply_redex(b: Builder, r: Redex) -> int:
    """Build the contractum of ``r`` in ``b`` and return its root."""
    if r.kind == "identity":
        return _identity(b, r.node)
    if r.kind == "structural":
        return _structural(b, r.node)
    if r.kind == "commutation":
        return commute_right(b, r.node) if r.side == "right" else commute_left(b, r.node)
    if r.rules == ("nu_r_coiter", "nu_l"):
        return _nu_coiter(b, r.node)
    return _principal(b, r.node)


def step(c: Coderivation, r: Redex) -> Coderivation:
    """Contract ``r`` in ``c``; every occurrence of the redex node is rewritten."""
    if r.node not in c.nodes:
        raise StaleRedex(f"node {r.node} is not in the coderivation")
    b = Builder(c.nodes)
    if r not in _redexes_at(b, r.node):
        raise StaleRedex(f"{r} does not match node {r.node}")
    new = apply_redex(b, r)
    if b.nodes[new].seq != c.nodes[r.node].seq:  # pragma: no cover - kernel bug
        raise RuleError("contractum changed the conclusion")
    b.nodes[r.node] = b.nodes[new]
    return b.finish(c.root)


# ----------------------------------------------------------- evaluation

class _Engine:
    """Head-strategy reducer over a private store.

    A closed proof whose last rule is a cut is a chain ``cut(L1, cut(L2, ...
    cut(Lm, X)))`` of cuts with closed left premises.  Each antecedent of
    ``X`` is owned by one chain cut.  When ``X`` acts on an antecedent the
    owning cut is first moved next to ``X`` by cut/cut commutations, its left
    premise is evaluated to a value, and then the logical step fires.  When
    ``X`` is a right rule, the innermost cut moves above it.
    """

    def __init__(self, b: Builder, trace: Callable[[str], None] | None = None):
        self.b = b
        self.trace = trace
        self.steps = 0

    def _log(self, kind: str, nid) -> None:
        self.steps += 1
        if self.trace is not None:
            self.trace(f"{self.steps}\t{kind}\t{nid}")

    def _rebuild(self, nid, premises) -> int:
        node = self.b.nodes[nid]
        return self.b.add(node.seq, node.rule, premises)

    def head_step(self, x) -> int | None:
        """One reduction inside the closed proof ``x``; ``None`` for values."""
        b = self.b
        node = b.nodes[x]
        if node.rule.tag in VALUE_HEADS:
            return None
        if node.rule.tag != "cut":
            raise Stuck(f"closed proof ends in {node.rule.tag}")
        chain = []
        cur = x
        while b.nodes[cur].rule.tag == "cut" and not b.ante(b.nodes[cur].premises[0]):
            chain.append(cur)
            cur = b.nodes[cur].premises[1]
        X = cur
        slots = list(range(len(b.ante(X))))
        owner = {}
        for i in reversed(range(len(chain))):
            owner[slots.pop(_cut_q(b, chain[i]))] = i
        if slots:
            raise Stuck("proof is not closed")
        xnode = b.nodes[X]
        tag = xnode.rule.tag
        if tag == "hyp":
            raise Stuck("reached an open hypothesis")
        if tag == "cut":
            s = xnode.rule.split or 0
            want = max(owner[p] for p in range(s))
            return self._bring(chain, want, lambda last: self._commute(last, "right"))
        if tag in RIGHT_RULES:
            return self._bring(chain, len(chain) - 1, lambda last: self._commute(last, "right"))
        if tag == "id":
            p = 0
        else:
            p = resolve_pos(xnode.seq, xnode.rule)
        return self._bring(chain, owner[p], self._fire)

    def _commute(self, c, side: str) -> int:
        self._log(f"commutation-{side}", c)
        return commute_right(self.b, c) if side == "right" else commute_left(self.b, c)

    def _fire(self, c) -> int:
        b = self.b
        left, right = b.nodes[c].premises
        new_left = self.head_step(left)
        if new_left is not None:
            return self._rebuild(c, [new_left, right])
        rs = [r for r in _redexes_at(b, c) if r.kind != "commutation"]
        if not rs:
            raise Stuck(f"no redex at cut {c}")
        r = rs[0]
        self._log(r.kind, c)
        return apply_redex(b, r)

    def _bring(self, chain: list, i: int, finish) -> int:
        """Swap chain cut ``i`` one step towards ``X``, or ``finish`` it when it
        is already innermost; rebuild the cuts above."""
        b = self.b
        if i == len(chain) - 1:
            new = finish(chain[i])
        else:
            new = self._commute(chain[i], "right")
        for j in reversed(range(i)):
            new = self._rebuild(chain[j], [b.nodes[chain[j]].premises[0], new])
        return new

    def read(self, root) -> tuple[int | None, list, object]:
        """Walk the value spine of ``root``: (numeral or None, path, focus)."""
        b = self.b
        path = []
        cur = root
        n = 0
        while True:
            tag = b.nodes[cur].rule.tag
            if tag in ("nat_succ", "sum_r1"):
                n += 1
            elif tag not in ("mu_r", "sum_r0"):
                break
            path.append(cur)
            cur = b.nodes[cur].premises[0]
        if tag == "nat_zero" or (tag == "unit_r" and path and b.nodes[path[-1]].rule.tag == "sum_r0"):
            return n, path, cur
        return None, path, cur

    def advance(self, root) -> int | None:
        """One head step of the whole proof; ``None`` once it is a numeral."""
        n, path, cur = self.read(root)
        if n is not None:
            return None
        new = self.head_step(cur)
        if new is None:
            raise Stuck(f"value {self.b.nodes[cur].rule.tag} is not part of a numeral")
        for v in reversed(path):
            new = self._rebuild(v, [new])
        return new

    def normalize_numeral(self, root, fuel: int) -> tuple[int, int]:
        """Reduce until the proof at ``root`` is a numeral; returns (root, n)."""
        while True:
            if self.steps >= fuel and self.read(root)[0] is None:
                raise Timeout(f"no numeral after {self.steps} steps")
            new = self.advance(root)
            if new is None:
                return root, self.read(root)[0]
            root = new
            if self.steps % 20000 == 0:
                self._collect(root)

    def _collect(self, root) -> None:
        keep = Coderivation(self.b.nodes, root).reachable()
        self.b.nodes = {v: self.b.nodes[v] for v in keep}


DEFAULT_FUEL = 1_000_000


def evaluate_by_cut_reduction(p: Coderivation, fuel: int = DEFAULT_FUEL,
                              trace: Callable[[str], None] | None = None) -> int:
    """Cut-reduce a closed proof of ``=> N`` (native or encoded) to a numeral."""
    if p.conclusion.ante:
        raise ValueError(f"expected a closed proof, got {p.conclusion}")
    eng = _Engine(Builder(p.nodes), trace)
    _, n = eng.normalize_numeral(p.root, fuel)
    return n


def evaluate_with_steps(p: Coderivation, fuel: int = DEFAULT_FUEL) -> tuple[int, int]:
    """Like :func:`evaluate_by_cut_reduction` but also returns the step count."""
    eng = _Engine(Builder(p.nodes))
    _, n = eng.normalize_numeral(p.root, fuel)
    return n, eng.steps


def reduction_trace(p: Coderivation, fuel: int = DEFAULT_FUEL) -> tuple[int, list[str]]:
    """Value and the one-line-per-step trace dump."""
    lines: list[str] = []
    n = evaluate_by_cut_reduction(p, fuel, lines.append)
    return n, lines


def head_reduct_sequence(p: Coderivation, max_steps: int = 200) -> list[Coderivation]:
    """The successive whole proofs visited by the head strategy, for checking
    subject reduction; stops at a numeral or after ``max_steps`` advances."""
    eng = _Engine(Builder(p.nodes))
    root = p.root
    out = [p]
    for _ in range(max_steps):
        root = eng.advance(root)
        if root is None:
            break
        out.append(Coderivation(eng.b.nodes, root))
    return out


__all__ = [
    "Redex", "StaleRedex", "Stuck", "Timeout", "redexes", "step", "apply_redex",
    "evaluate_by_cut_reduction", "evaluate_with_steps", "reduction_trace",
    "commute_left", "commute_right", "DEFAULT_FUEL",
]
