"""Hypothesis strategies shared by the test modules."""
from __future__ import annotations

from functools import lru_cache

from hypothesis import strategies as st

from mulj.arith import (
    And, Eq, Exists, Fn, Forall, Implies, InMu, InSet, Lt, Not, Or, Sign, Succ, TVar, Zero, mu_pred,
    positivity, set_pred,
)
from mulj.types import NAT, UNIT, Arrow, Mu, Nu, Prod, Sum, TypeExpr, Var, is_type

BINARY = (Sum, Prod, Arrow)


@st.composite
def type_exprs(draw, depth: int = 5, free: tuple[str, ...] = (), fixed_points: bool = True,
               native_nat: bool = True) -> TypeExpr:
    """Well-formed types (positive binders) of depth at most ``depth``.

    Free variables range over ``free`` plus binders in scope.
    """
    return draw(_gen(depth, tuple(free), fixed_points, native_nat))


@lru_cache(maxsize=None)
def _gen(depth, scope, fixed_points, native_nat):
    leaves = [st.just(UNIT)]
    if native_nat:
        leaves.append(st.just(NAT))
    leaves += [st.just(Var(x)) for x in scope]
    leaf = st.one_of(*leaves)
    if depth <= 1:
        return leaf

    @st.composite
    def node(draw):
        kind = draw(st.sampled_from(["leaf", "bin", "fix"] if fixed_points else ["leaf", "bin"]))
        if kind == "leaf":
            return draw(leaf)
        if kind == "bin":
            ctor = draw(st.sampled_from(BINARY))
            a = draw(_gen(depth - 1, scope, fixed_points, native_nat))
            b = draw(_gen(depth - 1, scope, fixed_points, native_nat))
            return ctor(a, b)
        x = f"X{len(scope)}"
        body = draw(_gen(depth - 1, scope + (x,), fixed_points, native_nat))
        t = draw(st.sampled_from([Mu, Nu]))(x, body)
        return t if is_type(t) else draw(leaf)

    return node()


def closed_types(depth: int = 5, **kw):
    return type_exprs(depth=depth, **kw)


# ------------------------------------------------ random small coderivations

from mulj.calculus import Coderivation, Node, RuleError, RuleInstance, Sequent, expected_premises  # noqa: E402

M_LOOP = Mu("X", Var("X"))  # unfolds to itself
V_LOOP = Nu("X", Var("X"))


def _candidate_rules(seq: Sequent) -> list[RuleInstance]:
    k = len(seq.ante)
    out: list[RuleInstance] = []
    for i in range(k):
        out.append(RuleInstance("mu_l_unfold", pos=i))
        out.append(RuleInstance("weaken", pos=i))
        if k < 3:
            out.append(RuleInstance("contract", pos=i))
    for i in range(k - 1):
        out.append(RuleInstance("exchange", pos=i))
    if seq.succ == V_LOOP:
        out.append(RuleInstance("nu_r_unfold"))
    else:
        out.append(RuleInstance("mu_r"))
        if k == 1:
            out.append(RuleInstance("id"))
    for s in range(k + 1):
        if k < 3:
            out.append(RuleInstance("cut", split=s, aux=M_LOOP))
    return out


@st.composite
def small_coderivations(draw, max_nodes: int = 8) -> Coderivation:
    """Random checked coderivations over ``mu X. X`` and ``nu X. X``.

    Premises either reuse a node with the required sequent (closing a cycle)
    or open a new node while the budget lasts.
    """
    root_seq = Sequent([M_LOOP] * draw(st.integers(0, 2)), draw(st.sampled_from([V_LOOP, M_LOOP])))
    seqs = {0: root_seq}
    nodes: dict = {}
    todo = [0]
    while todo:
        nid = todo.pop(0)
        seq = seqs[nid]
        options = []
        for rule in _candidate_rules(seq):
            try:
                prem = expected_premises(seq, rule)
            except RuleError:
                continue
            if any(len(p.ante) > 3 for p in prem):
                continue
            fits = all(any(s == p for s in seqs.values()) for p in prem)
            if fits or len(seqs) + len(prem) <= max_nodes:
                options.append((rule, prem))
        rule, prem = draw(st.sampled_from(options))
        ids = []
        for p in prem:
            same = [k for k, s in seqs.items() if s == p]
            if same and (len(seqs) >= max_nodes or draw(st.booleans())):
                ids.append(draw(st.sampled_from(same)))
            elif len(seqs) < max_nodes:
                k = len(seqs)
                seqs[k] = p
                todo.append(k)
                ids.append(k)
            else:
                ids.append(draw(st.sampled_from(same)))
        nodes[nid] = Node(seq, rule, tuple(ids))
    return Coderivation(nodes, 0)


# ---------------------------------------------------------------- formulas

NUM_VARS = ("x", "y", "z")


@lru_cache(maxsize=None)
def arith_terms(depth: int = 2):
    leaf = st.one_of(st.just(Zero()), st.sampled_from([TVar(v) for v in NUM_VARS]))
    if depth <= 1:
        return leaf
    sub = arith_terms(depth - 1)
    return st.one_of(leaf, sub.map(Succ), st.tuples(sub, sub).map(lambda p: Fn("add", p)))


@st.composite
def formulas(draw, depth: int = 5, sets: tuple[str, ...] = ("X",)):
    """Formulas without N or candidate atoms; fixed-point bodies are
    positive in their bound set variable."""
    kind = "atom" if depth <= 1 else draw(st.sampled_from(["atom", "not", "bin", "bin", "quant", "mu"]))
    t = draw(arith_terms())
    if kind == "atom":
        which = draw(st.integers(0, len(sets) + 1))
        if which == 0:
            return Eq(t, draw(arith_terms()))
        if which == 1:
            return Lt(t, draw(arith_terms()))
        return InSet(t, sets[which - 2])
    if kind == "not":
        return Not(draw(formulas(depth - 1, sets)))
    if kind == "bin":
        ctor = draw(st.sampled_from([And, Or, Implies]))
        return ctor(draw(formulas(depth - 1, sets)), draw(formulas(depth - 1, sets)))
    if kind == "quant":
        ctor = draw(st.sampled_from([Forall, Exists]))
        return ctor(draw(st.sampled_from(NUM_VARS)), draw(formulas(depth - 1, sets)))
    bound = f"Y{len(sets)}"
    body = draw(formulas(depth - 1, sets + (bound,)))
    if positivity(body, bound) not in (Sign.POSITIVE, Sign.ABSENT):
        body = InSet(t, bound)
    return InMu(t, bound, draw(st.sampled_from(NUM_VARS)), body)


@st.composite
def atomic_predicates(draw):
    """Set variables and fixed-point predicates, the predicates the
    translations map to predicates."""
    if draw(st.booleans()):
        return set_pred(draw(st.sampled_from(["Z", "W"])))
    body = draw(formulas(3, sets=("Z",)))
    if positivity(body, "Z") not in (Sign.POSITIVE, Sign.ABSENT):
        body = InSet(TVar("u"), "Z")
    return mu_pred("Z", "u", body)
