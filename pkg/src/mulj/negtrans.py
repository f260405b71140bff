"""Negative translation of circular proofs into the fragment over
``N, *, ->, mu``.

Types translate in pairs: ``lower(s)`` is the type a refutation of ``s``
consumes and ``upper(s) = ~lower(s)`` the type of ``s`` itself, where
``~s = s -> N``.  A sequent ``S => t`` becomes ``upper(S), lower(t) => N``.
Each rule becomes a small gadget over the derivable negation rules, so a
regular coderivation translates to a regular one of proportional size, and
threads are carried along position by position.

Source-side native naturals are read as ``mu X. 1 + X``: their rules
translate through the gadgets of that encoding.  The answer type ``N`` of
the target is native.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .build import Builder
from .calculus import Coderivation, RuleError, RuleInstance, Sequent, resolve_pos
from .types import (
    NAT, NAT_ENC, UNIT, Arrow, Mu, Nat, Nu, Prod, Sum, TypeExpr, Unit, Var,
    neg, substitute,
)


@dataclass(frozen=True)
class NegPair:
    upper: TypeExpr
    lower: TypeExpr


def lower(t: TypeExpr) -> TypeExpr:
    if isinstance(t, Var):
        return neg(t)
    if isinstance(t, Unit):
        return NAT
    if isinstance(t, Nat):
        return lower(NAT_ENC)
    if isinstance(t, Prod):
        return neg(Prod(upper(t.left), upper(t.right)))
    if isinstance(t, Arrow):
        return neg(Arrow(upper(t.domain), upper(t.codomain)))
    if isinstance(t, Sum):
        return Prod(neg(upper(t.left)), neg(upper(t.right)))
    if isinstance(t, Mu):
        return neg(Mu(t.var, upper(t.body)))
    if isinstance(t, Nu):
        return neg(neg(_nu_mu(t)))
    raise TypeError(f"cannot translate {t!r}")


def upper(t: TypeExpr) -> TypeExpr:
    return neg(lower(t))


def _nu_mu(t: Nu) -> Mu:
    """``mu X. ~upper(s)[~X/X]`` for ``t = nu X. s``."""
    x = t.var
    return Mu(x, neg(substitute(upper(t.body), x, neg(Var(x)))))


def trans_type(t: TypeExpr) -> NegPair:
    return NegPair(upper(t), lower(t))


def trans_sequent(seq: Sequent) -> Sequent:
    return Sequent([upper(a) for a in seq.ante] + [lower(seq.succ)], NAT)


# ------------------------------------------------------ derived negation rules

def neg_r(b: Builder, p) -> int:
    """``G, s => N``  gives  ``G => ~s``."""
    return b.arrow_r(p)


def neg_l(b: Builder, p, at: int | None = None) -> int:
    """``G => s``  gives  ``G, ~s => N`` with ``~s`` moved to ``at``."""
    n = len(b.ante(p))
    node = b.arrow_l(p, b.id(NAT), 0)
    return node if at is None or at == n else b.move(node, n, at)


def negneg_r(b: Builder, p) -> int:
    """``G => s``  gives  ``G => ~~s``."""
    return neg_r(b, neg_l(b, p))


def negneg_l(b: Builder, p, at: int) -> int:
    """``G, s, G' => N``  gives  ``G, ~~s, G' => N`` (``s`` at ``at``)."""
    n = len(b.ante(p))
    if at != n - 1:
        p = b.move(p, at, n - 1)
    return neg_l(b, neg_r(b, p), at)


# ---------------------------------------------------------------- gadgets

def _gadget(b: Builder, seq: Sequent, rule: RuleInstance, prem: Sequence) -> int:
    """Translated step: ``prem`` are nodes concluding the translated premise
    sequents; the result concludes ``trans_sequent(seq)``."""
    tag = rule.tag
    a, s = list(seq.ante), seq.succ
    n = len(a)
    p = resolve_pos(seq, rule)
    k = rule.split or 0
    if tag == "hyp":
        node = b.hyp(trans_sequent(seq), rule.name or "H")
    elif tag == "id":
        node = b.exchange(b.arrow_l(b.id(lower(s)), b.id(NAT), 0), 0)
    elif tag == "exchange":
        node = b.exchange(prem[0], p)
    elif tag in ("weaken", "unit_l"):
        node = b.weaken(prem[0], upper(a[p]), p)
    elif tag == "contract":
        node = b.contract(prem[0], p)
    elif tag == "cut":
        q = rule.pos if rule.pos is not None else n - k
        node = b.cut(neg_r(b, prem[0]), prem[1], q)
    elif tag == "unit_r":
        node = b.id(NAT)
    elif tag == "arrow_r":
        node = neg_l(b, b.arrow_r(neg_r(b, prem[0])))
    elif tag == "arrow_l":
        q = p - k
        node = negneg_l(b, b.arrow_l(neg_r(b, prem[0]), prem[1], q), p)
    elif tag == "prod_r":
        node = neg_l(b, b.prod_r(neg_r(b, prem[0]), neg_r(b, prem[1])))
    elif tag == "prod_l":
        node = negneg_l(b, b.prod_l(prem[0], p), p)
    elif tag in ("sum_r0", "sum_r1"):
        node = negneg_l(b, prem[0], n)
        if tag == "sum_r0":
            node = b.weaken(node, neg(upper(s.right)), n + 1)
        else:
            node = b.weaken(node, neg(upper(s.left)), n)
        node = b.prod_l(node, n)
    elif tag == "sum_l":
        arms = []
        for i in (0, 1):
            arms.append(neg_r(b, b.move(prem[i], p, n)))  # G\p, lower(s) => ~upper(part)
        node = b.contract_prefix(b.prod_r(*arms), n)
        node = neg_l(b, node)  # G\p, lower(s), upper(a[p]) => N
        node = b.move(node, n, p)
    elif tag == "mu_r":
        node = neg_l(b, b.mu_r(neg_r(b, prem[0]), Mu(s.var, upper(s.body))))
    elif tag == "mu_l_unfold":
        mu = a[p]
        node = negneg_l(b, b.mu_l_unfold(prem[0], Mu(mu.var, upper(mu.body)), p), p)
    elif tag == "nu_r_unfold":
        m = _nu_mu(s)
        node = negneg_l(b, prem[0], n)
        node = b.mu_l_unfold(node, m, n)
        node = negneg_l(b, node, n)
    elif tag == "nu_l":
        m = _nu_mu(a[p])
        node = b.move(prem[0], p, n)  # G\p, lower(s), upper(sigma(nu)) => N
        node = b.mu_r(neg_r(b, node), m)
        node = negneg_l(b, neg_l(b, node), n)
        node = b.move(node, n, p)
    elif tag in ("nat_zero", "nat_succ", "nat_cond"):
        node = _nat_gadget(b, seq, rule, prem)
    else:
        raise RuleError(f"{tag} has no translation; circularize iteration rules first")
    got = b.seq(node)
    want = trans_sequent(seq)
    if got != want:  # pragma: no cover - guards the gadget table
        raise RuleError(f"{tag} gadget concludes {got}, expected {want}")
    return node


def _nat_gadget(b: Builder, seq: Sequent, rule: RuleInstance, prem: Sequence) -> int:
    """Native N rules through the encoding ``mu X. 1 + X``."""
    E = NAT_ENC
    one_plus = Sum(UNIT, E)
    a, s = list(seq.ante), seq.succ
    tag = rule.tag
    if tag == "nat_zero":
        u = _gadget(b, Sequent([], UNIT), RuleInstance("unit_r"), [])
        inj = _gadget(b, Sequent([], one_plus), RuleInstance("sum_r0"), [u])
        return _gadget(b, Sequent([], E), RuleInstance("mu_r"), [inj])
    if tag == "nat_succ":
        inj = _gadget(b, Sequent(a, one_plus), RuleInstance("sum_r1"), [prem[0]])
        return _gadget(b, Sequent(a, E), RuleInstance("mu_r"), [inj])
    p = resolve_pos(seq, rule)
    pos = None if p == len(a) - 1 else p
    zero = _gadget(b, Sequent(a[:p] + [UNIT] + a[p + 1:], s), RuleInstance("unit_l", pos=pos), [prem[0]])
    case = _gadget(b, Sequent(a[:p] + [one_plus] + a[p + 1:], s), RuleInstance("sum_l", pos=pos), [zero, prem[1]])
    return _gadget(b, Sequent(a[:p] + [E] + a[p + 1:], s), RuleInstance("mu_l_unfold", pos=pos), [case])


def trans_step(seq: Sequent, rule: RuleInstance) -> Coderivation:
    """The gadget of one step, with hypothesis leaves ``P0, P1, ...`` for the
    translated premises."""
    from .calculus import expected_premises

    b = Builder()
    prem = [b.hyp(trans_sequent(q), f"P{i}") for i, q in enumerate(expected_premises(seq, rule))]
    return b.finish(_gadget(b, seq, rule, prem))


def trans_coderivation(c: Coderivation) -> Coderivation:
    """Translate a whole (regular) coderivation node by node.

    Iteration rules are first replaced by their cyclic gadgets.
    """
    from .library import circularize

    if c.rules_used() & {"mu_l_iter", "nu_r_coiter", "nat_iter"}:
        c = circularize(c)
    b = Builder()
    ren = {v: b.reserve(trans_sequent(c.nodes[v].seq)) for v in c.reachable()}
    for v in c.reachable():
        node = c.nodes[v]
        built = _gadget(b, node.seq, node.rule, [ren[w] for w in node.premises])
        b.define(ren[v], built)
    return b.finish(ren[c.root])


# ------------------------------------------------------ coding of naturals

def _m_nat() -> Mu:
    return Mu(NAT_ENC.var, upper(NAT_ENC.body))


def coding_derivations() -> tuple[Coderivation, Coderivation]:
    """``(Dcod : N => upper(N), Ddec : upper(N) => N)``.

    Both are cyclic: coding case-splits on the native input and recurses on
    its predecessor; decoding unfolds the translated value and feeds it a
    zero continuation and a successor continuation that recurses.
    """
    M = _m_nat()
    one_up = upper(UNIT)  # ~N
    nat_up = upper(NAT)  # ~~M

    b = Builder()
    cod = b.reserve(Sequent([NAT], nat_up))
    zero = b.weaken(neg_l(b, neg_r(b, b.id(NAT))), neg(nat_up))  # ~1^N, ~N^N => N
    succ = b.weaken(neg_l(b, cod), neg(one_up), 1)  # N, ~1^N, ~N^N => N
    case = b.nat_cond(zero, succ, 0)
    body = neg_r(b, b.prod_l(case, 1))  # N => ~(~1^N * ~N^N)
    b.define(cod, negneg_r(b, b.mu_r(body, M)))
    d_cod = b.finish(cod)

    b = Builder()
    dec = b.reserve(Sequent([nat_up], NAT))
    left = neg_r(b, b.weaken(b.nat_zero(), one_up))  # => ~1^N
    right = neg_r(b, b.cut(dec, b.nat_succ(b.id(NAT))))  # => ~N^N
    node = neg_l(b, b.prod_r(left, right))  # ~(~1^N * ~N^N) => N
    node = b.mu_l_unfold(node, M, 0)
    b.define(dec, negneg_l(b, node, 0))
    d_dec = b.finish(dec)
    return d_cod, d_dec


def _append(b: Builder, c: Coderivation) -> int:
    from .build import copy_into

    return copy_into(b, c)[c.root]


def simulate_in_negative(p: Coderivation) -> Coderivation:
    """A negative-fragment coderivation of ``N, ..., N => N`` computing the
    same function as ``p``: code each input, run the translated program,
    decode the answer."""
    seq = p.conclusion
    if seq.succ != NAT or any(t != NAT for t in seq.ante):
        raise RuleError("simulation expects a program N, ..., N => N")
    k = len(seq.ante)
    d_cod, d_dec = coding_derivations()
    b = Builder()
    body = neg_r(b, _append(b, trans_coderivation(p)))  # upper(N)^k => upper(N)
    node = b.cut(body, _append(b, d_dec))  # upper(N)^k => N
    for i in range(k):
        # replace argument i (now at position i, after the i coded inputs)
        node = b.cut(_append(b, d_cod), node, i)
        node = b.move(node, 0, i)
    return b.finish(node)


def decode_numeral(c: Coderivation) -> Coderivation:
    """``cut(neg_r(c), Ddec)`` for a translated closed numeral ``c``."""
    _, d_dec = coding_derivations()
    b = Builder()
    return b.finish(b.cut(neg_r(b, _append(b, c)), _append(b, d_dec)))


def code_numeral(c: Coderivation) -> Coderivation:
    """``cut(c, Dcod)`` for a closed numeral ``c``."""
    d_cod, _ = coding_derivations()
    b = Builder()
    return b.finish(b.cut(_append(b, c), _append(b, d_cod)))


__all__ = [
    "NegPair", "trans_type", "trans_sequent", "trans_step", "trans_coderivation",
    "coding_derivations", "simulate_in_negative", "upper", "lower", "neg",
    "code_numeral", "decode_numeral",
]
