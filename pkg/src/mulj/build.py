"""Forward proof construction: each method takes premise node ids, computes
the conclusion and adds one node to the store."""
from __future__ import annotations

from typing import Sequence

from .calculus import (
    Coderivation, Node, ProofStore, RuleError, RuleInstance, Sequent,
    expected_premises,
)
from .types import Arrow, Mu, NAT, Nu, Prod, Sum, TypeExpr, UNIT, substitute, unfold


class Builder(ProofStore):
    """A :class:`ProofStore` with one constructor per rule."""

    def _mk(self, seq: Sequent, rule: RuleInstance, prems: Sequence) -> int:
        want = expected_premises(seq, rule)
        for i, (w, q) in enumerate(zip(want, prems)):
            got = self.seq(q)
            if got != w:
                raise RuleError(f"{rule.tag}: premise {i} is {got}, expected {w}")
        return self.add(seq, rule, prems)

    def ante(self, p) -> list[TypeExpr]:
        return list(self.seq(p).ante)

    def succ_of(self, p) -> TypeExpr:
        return self.seq(p).succ

    # -- structural ------------------------------------------------------
    def hyp(self, seq: Sequent, name: str = "H") -> int:
        return self.add(seq, RuleInstance("hyp", name=name))

    def id(self, t: TypeExpr) -> int:
        return self.add(Sequent([t], t), RuleInstance("id"))

    def exchange(self, p, i: int) -> int:
        a = self.ante(p)
        a[i], a[i + 1] = a[i + 1], a[i]
        return self._mk(Sequent(a, self.succ_of(p)), RuleInstance("exchange", pos=i), [p])

    def weaken(self, p, t: TypeExpr, i: int | None = None) -> int:
        a = self.ante(p)
        i = len(a) if i is None else i
        a.insert(i, t)
        return self._mk(Sequent(a, self.succ_of(p)), RuleInstance("weaken", pos=i), [p])

    def contract(self, p, i: int) -> int:
        a = self.ante(p)
        if a[i] != a[i + 1]:
            raise RuleError("contract needs two equal adjacent formulas")
        del a[i + 1]
        return self._mk(Sequent(a, self.succ_of(p)), RuleInstance("contract", pos=i), [p])

    def cut(self, left, right, q: int | None = None) -> int:
        g, d = self.ante(left), self.ante(right)
        q = len(d) - 1 if q is None else q
        sigma = self.succ_of(left)
        seq = Sequent(g + d[:q] + d[q + 1:], self.succ_of(right))
        pos = None if q == len(d) - 1 else q
        return self._mk(seq, RuleInstance("cut", pos=pos, split=len(g), aux=sigma), [left, right])

    # -- unit, arrow, product, sum ---------------------------------------
    def unit_r(self) -> int:
        return self.add(Sequent([], UNIT), RuleInstance("unit_r"))

    def unit_l(self, p, i: int | None = None) -> int:
        a = self.ante(p)
        i = len(a) if i is None else i
        a.insert(i, UNIT)
        return self._mk(Sequent(a, self.succ_of(p)), RuleInstance("unit_l", pos=self._p(i, a)), [p])

    @staticmethod
    def _p(i: int, a: list) -> int | None:
        return None if i == len(a) - 1 else i

    def arrow_r(self, p) -> int:
        a = self.ante(p)
        seq = Sequent(a[:-1], Arrow(a[-1], self.succ_of(p)))
        return self._mk(seq, RuleInstance("arrow_r"), [p])

    def arrow_l(self, left, right, q: int | None = None) -> int:
        g, d = self.ante(left), self.ante(right)
        q = len(d) - 1 if q is None else q
        f = Arrow(self.succ_of(left), d[q])
        a = g + d[:q] + [f] + d[q + 1:]
        rule = RuleInstance("arrow_l", pos=self._p(len(g) + q, a), split=len(g))
        return self._mk(Sequent(a, self.succ_of(right)), rule, [left, right])

    def prod_r(self, left, right) -> int:
        g, d = self.ante(left), self.ante(right)
        seq = Sequent(g + d, Prod(self.succ_of(left), self.succ_of(right)))
        return self._mk(seq, RuleInstance("prod_r", split=len(g)), [left, right])

    def prod_l(self, p, i: int | None = None) -> int:
        a = self.ante(p)
        i = len(a) - 2 if i is None else i
        b = a[:i] + [Prod(a[i], a[i + 1])] + a[i + 2:]
        return self._mk(Sequent(b, self.succ_of(p)), RuleInstance("prod_l", pos=self._p(i, b)), [p])

    def sum_r(self, p, which: int, other: TypeExpr) -> int:
        s = self.succ_of(p)
        t = Sum(s, other) if which == 0 else Sum(other, s)
        return self._mk(Sequent(self.ante(p), t), RuleInstance(f"sum_r{which}"), [p])

    def sum_l(self, p0, p1, i: int | None = None) -> int:
        a0, a1 = self.ante(p0), self.ante(p1)
        i = len(a0) - 1 if i is None else i
        b = a0[:i] + [Sum(a0[i], a1[i])] + a0[i + 1:]
        return self._mk(Sequent(b, self.succ_of(p0)), RuleInstance("sum_l", pos=self._p(i, b)), [p0, p1])

    # -- fixed points ----------------------------------------------------
    def mu_r(self, p, mu: TypeExpr) -> int:
        return self._mk(Sequent(self.ante(p), mu), RuleInstance("mu_r"), [p])

    def nu_r_unfold(self, p, nu: TypeExpr) -> int:
        return self._mk(Sequent(self.ante(p), nu), RuleInstance("nu_r_unfold"), [p])

    def _left_unfold(self, tag: str, p, fix: TypeExpr, i: int | None) -> int:
        a = self.ante(p)
        i = len(a) - 1 if i is None else i
        a[i] = fix
        return self._mk(Sequent(a, self.succ_of(p)), RuleInstance(tag, pos=self._p(i, a)), [p])

    def mu_l_unfold(self, p, mu: TypeExpr, i: int | None = None) -> int:
        return self._left_unfold("mu_l_unfold", p, mu, i)

    def nu_l(self, p, nu: TypeExpr, i: int | None = None) -> int:
        return self._left_unfold("nu_l", p, nu, i)

    def mu_l_iter(self, step, cont, mu: Mu, q: int | None = None) -> int:
        g, d = self.ante(step)[:-1], self.ante(cont)
        rho = self.succ_of(step)
        q = len(d) - 1 if q is None else q
        a = g + d[:q] + [mu] + d[q + 1:]
        rule = RuleInstance("mu_l_iter", pos=self._p(len(g) + q, a), split=len(g), aux=rho)
        return self._mk(Sequent(a, self.succ_of(cont)), rule, [step, cont])

    def nu_r_coiter(self, start, step, nu: Nu) -> int:
        g, d = self.ante(start), self.ante(step)[:-1]
        rule = RuleInstance("nu_r_coiter", split=len(g), aux=self.succ_of(start))
        return self._mk(Sequent(g + d, nu), rule, [start, step])

    # -- native naturals ---------------------------------------------------
    def nat_zero(self) -> int:
        return self.add(Sequent([], NAT), RuleInstance("nat_zero"))

    def nat_succ(self, p) -> int:
        return self._mk(Sequent(self.ante(p), NAT), RuleInstance("nat_succ"), [p])

    def nat_iter(self, base, step, cont, q: int | None = None) -> int:
        g, d = self.ante(base), self.ante(cont)
        sig = self.succ_of(base)
        q = len(d) - 1 if q is None else q
        a = g + d[:q] + [NAT] + d[q + 1:]
        rule = RuleInstance("nat_iter", pos=self._p(len(g) + q, a), split=len(g), aux=sig)
        return self._mk(Sequent(a, self.succ_of(cont)), rule, [base, step, cont])

    def nat_cond(self, zero, succ, i: int | None = None) -> int:
        a = self.ante(succ)
        i = len(a) - 1 if i is None else i
        return self._mk(Sequent(a, self.succ_of(succ)), RuleInstance("nat_cond", pos=self._p(i, a)), [zero, succ])

    # -- derived structural moves ------------------------------------------
    def reindex(self, p, target: Sequence[TypeExpr], mapping: Sequence[int]) -> int:
        """Rearrange the cedent of ``p`` into ``target``.

        ``mapping[i]`` is the target position of antecedent formula ``i``.
        Formulas sent to the same position are contracted; target positions
        that are hit by nothing are introduced by weakening.
        """
        a = self.ante(p)
        if len(mapping) != len(a):
            raise RuleError("reindex mapping has the wrong length")
        for i, j in enumerate(mapping):
            if a[i] != target[j]:
                raise RuleError(f"reindex sends {a[i]} to a slot holding {target[j]}")
        cur = list(mapping)
        node = p
        # bubble sort by target position
        changed = True
        while changed:
            changed = False
            for j in range(len(cur) - 1):
                if cur[j] > cur[j + 1]:
                    node = self.exchange(node, j)
                    cur[j], cur[j + 1] = cur[j + 1], cur[j]
                    changed = True
        j = 0
        while j < len(cur) - 1:
            if cur[j] == cur[j + 1]:
                node = self.contract(node, j)
                del cur[j + 1]
            else:
                j += 1
        for t in range(len(target)):
            if t not in cur:
                idx = sum(1 for c in cur if c < t)
                node = self.weaken(node, target[t], idx)
                cur.insert(idx, t)
        return node

    def permute(self, p, order: Sequence[int]) -> int:
        """New cedent is ``[a[order[0]], a[order[1]], ...]``."""
        a = self.ante(p)
        target = [a[i] for i in order]
        mapping = [0] * len(a)
        for new, old in enumerate(order):
            mapping[old] = new
        return self.reindex(p, target, mapping)

    def move(self, p, src: int, dst: int) -> int:
        n = len(self.ante(p))
        order = [i for i in range(n) if i != src]
        order.insert(dst, src)
        return self.permute(p, order)

    def weaken_front(self, p, ts: Sequence[TypeExpr]) -> int:
        for t in reversed(list(ts)):
            p = self.weaken(p, t, 0)
        return p

    def contract_prefix(self, p, n: int) -> int:
        """Cedent ``G, X, G, Y`` with ``|G| = n`` becomes ``G, X, Y`` where
        ``X`` is empty; i.e. ``G, G, Y`` to ``G, Y``."""
        a = self.ante(p)
        mapping = list(range(n)) + list(range(n)) + list(range(n, len(a) - n))
        return self.reindex(p, a[:n] + a[2 * n:], mapping)

    def finish_at(self, root) -> Coderivation:
        return self.finish(root)


def copy_into(b: Builder, c: Coderivation) -> dict:
    """Copy a coderivation into ``b``; returns the old-to-new id map."""
    ren = {v: b.reserve(c.nodes[v].seq) for v in c.nodes}
    for v, node in c.nodes.items():
        b.pending.pop(ren[v])
        b.nodes[ren[v]] = Node(node.seq, node.rule, tuple(ren[q] for q in node.premises))
    return ren

