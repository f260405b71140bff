from __future__ import annotations

import itertools

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mulj.build import Builder
from mulj.calculus import (
    PREMISE_COUNT, SUCC, SYSTEMS, Coderivation, Node, RuleError, RuleInstance, Sequent,
    ancestry, ancestry_edges, check, expected_premises,
)
from mulj.coterm import eval_to_numeral
from mulj.library import (
    PolarityError, addition_program, apply_program, bad_cut_loop, circular_recursor, circularize,
    derive_strong_iteration, doubling_program, eta_identity, functor, identity_program,
    iterator_gadget, list_stream_concat, multiplication_program, numeral, post_fixed_rules,
    read_numeral, succ_program,
)
from mulj.types import NAT, NAT_ENC, UNIT, Arrow, Mu, Nu, Prod, Sum, Var, list_type, polarity, stream_type, substitute
from strategies import type_exprs

X = Var("X")
PROGRAMS = {
    "succ": (succ_program, lambda n: n + 1),
    "identity": (identity_program, lambda n: n),
    "add": (addition_program, lambda m, n: m + n),
    "double": (doubling_program, lambda n: 2 * n),
    "mul": (multiplication_program, lambda m, n: m * n),
}


def single(seq: Sequent, rule: RuleInstance) -> Coderivation:
    return Coderivation({0: Node(seq, rule, ())}, 0)


# -------------------------------------------------------------- check basics

def test_rule_arity_table_covers_all_tags():
    for tag, n in PREMISE_COUNT.items():
        assert RuleInstance(tag, **({"aux": NAT} if tag in ("cut",) else {})).arity == n


def test_numerals_check():
    assert check(numeral(3), "muLJ").ok
    assert check(numeral(7), "muLJ_neg").ok
    assert check(numeral(4, native=False), "muLJ").ok


def test_numeral_shapes():
    z = numeral(0)
    assert len(z) == 1 and z.conclusion == Sequent([], NAT)
    assert z.nodes[z.root].rule.tag == "nat_zero"
    two = numeral(2)
    tags = [two.nodes[v].rule.tag for v in two.reachable()]
    assert tags == ["nat_succ", "nat_succ", "nat_zero"]


@given(st.integers(0, 30), st.booleans())
def test_read_numeral_inverts_numeral(n, native):
    assert read_numeral(numeral(n, native)) == n


def test_id_with_mismatched_sides_is_rejected():
    for system in SYSTEMS:
        rep = check(single(Sequent([NAT], UNIT), RuleInstance("id")), system)
        assert not rep.ok


def test_encoded_numeral_rejected_by_negative_system():
    rep = check(numeral(1, native=False), "muLJ_neg")
    assert not rep.ok and "negative" in rep.errors[0][1] or "not in system" in rep.errors[0][1]


def test_iteration_rules_not_in_circular_system():
    rep = check(addition_program(), "muLJ_prime")
    assert not rep.ok and "nat_iter" in str(rep)


def test_cycles_rejected_in_finite_system():
    assert not check(circular_recursor(), "muLJ").ok
    assert check(circular_recursor(), "muLJ_prime").ok


def test_wrong_premise_is_diagnosed():
    c = Coderivation({
        0: Node(Sequent([], NAT), RuleInstance("nat_succ"), (1,)),
        1: Node(Sequent([], UNIT), RuleInstance("unit_r"), ()),
    }, 0)
    rep = check(c, "muLJ")
    assert rep.errors and rep.errors[0][0] == 0 and "premise 0" in rep.errors[0][1]


def test_bad_positivity_is_diagnosed():
    bad = Mu("X", Arrow(X, UNIT))
    rep = check(single(Sequent([bad], bad), RuleInstance("id")), "muLJ")
    assert "positivity" in str(rep)


def test_open_hypotheses_need_permission():
    gadget = iterator_gadget()
    assert not check(gadget, "muLJ_prime").ok
    assert check(gadget, "muLJ_prime", allow_hyp=True).ok


# ------------------------------------------------------------------- functor

def test_functor_on_variable_is_identity():
    p = succ_program()
    assert functor(X, "X", p) == p


def test_functor_on_absent_variable_weakens_identity():
    b = Builder()
    p = b.finish(b.weaken(b.nat_succ(b.id(NAT)), UNIT, 0))  # 1, N => N
    f = functor(Var("Y"), "X", p)
    assert f.conclusion == Sequent([UNIT, Var("Y")], Var("Y"))


def test_functor_sum_endsequent():
    f = functor(Sum(UNIT, X), "X", succ_program())
    assert f.conclusion == Sequent([Sum(UNIT, NAT)], Sum(UNIT, NAT))
    assert check(f, "muLJ").ok


def test_functor_negative_case_and_polarity_error():
    f = functor(Arrow(X, UNIT), "X", succ_program(), positive=False)
    assert f.conclusion == Sequent([Arrow(NAT, UNIT)], Arrow(NAT, UNIT))
    with pytest.raises(PolarityError):
        functor(Arrow(X, UNIT), "X", succ_program())


@settings(max_examples=80)
@given(type_exprs(depth=4, free=("X",)))
def test_functor_endsequent_law(sigma):
    assume(polarity(sigma, "X").positive)
    b = Builder()
    p = b.finish(b.weaken(b.nat_succ(b.id(NAT)), UNIT, 0))  # G = [1]
    f = functor(sigma, "X", p)
    assert f.conclusion == Sequent([UNIT, substitute(sigma, "X", NAT)], substitute(sigma, "X", NAT))
    assert check(f, "muLJ").ok


@settings(max_examples=40)
@given(type_exprs(depth=4, free=("X",)))
def test_functor_negative_endsequent_law(sigma):
    assume(polarity(sigma, "X").negative)
    p = succ_program()
    f = functor(sigma, "X", p, positive=False)
    assert f.conclusion == Sequent([substitute(sigma, "X", NAT)], substitute(sigma, "X", NAT))
    assert check(f, "muLJ").ok


# ------------------------------------------------------- post-fixed points

def test_post_fixed_mu_rule_for_nat():
    d, none = post_fixed_rules(NAT_ENC, (UNIT,), NAT)
    assert none is None
    assert d.conclusion == Sequent([UNIT, NAT_ENC], NAT)
    hyps = [d.nodes[v] for v in d.reachable() if d.nodes[v].rule.tag == "hyp"]
    assert [h.seq for h in hyps] == [Sequent([UNIT, Sum(UNIT, NAT_ENC)], NAT)]
    assert check(d, "muLJ", allow_hyp=True).ok


def test_post_fixed_degenerate_body():
    d, _ = post_fixed_rules(Mu("X", X))
    assert check(d, "muLJ", allow_hyp=True).ok


def test_post_fixed_nu_rule_for_streams():
    s = stream_type(NAT)
    none, d = post_fixed_rules(s)
    assert none is None
    assert d.conclusion == Sequent([], s)
    assert check(d, "muLJ", allow_hyp=True).ok


# ------------------------------------------------------------ circularize

def test_circularize_without_iteration_is_a_copy():
    p = succ_program()
    assert circularize(p) is p


def test_circularized_iterator_checks():
    c = iterator_gadget()
    assert not c.is_acyclic()
    assert check(c, "muLJ_prime", allow_hyp=True).ok


@pytest.mark.parametrize("name", sorted(PROGRAMS))
def test_circularize_checks(name):
    make, _ = PROGRAMS[name]
    assert check(circularize(make()), "muLJ_prime").ok


@pytest.mark.parametrize("name", ["succ", "identity", "add", "double"])
def test_circularize_preserves_function(name):
    make, f = PROGRAMS[name]
    p = make()
    c = circularize(p)
    k = len(p.conclusion.ante)
    for args in itertools.product(range(6), repeat=k):
        want = f(*args)
        assert eval_to_numeral(p, list(args)) == want
        assert eval_to_numeral(c, list(args)) == want


def test_circular_multiplication_small_inputs():
    c = circularize(multiplication_program())
    for m, n in [(0, 3), (2, 2), (3, 1)]:
        assert eval_to_numeral(c, [m, n]) == m * n


# ------------------------------------------------------- strong iteration

def test_strong_iteration_empty_context():
    d = derive_strong_iteration([], NAT_ENC, NAT)
    assert d.nodes[d.root].rule.tag == "mu_l_iter"
    assert d.conclusion == Sequent([NAT_ENC], NAT)


def test_strong_iteration_single_context():
    d = derive_strong_iteration([UNIT], NAT_ENC, NAT)
    assert d.conclusion == Sequent([UNIT, NAT_ENC], NAT)
    assert check(d, "muLJ", allow_hyp=True).ok


def test_strong_iteration_pair_context():
    d = derive_strong_iteration([UNIT, NAT], list_type(NAT), NAT)
    assert d.conclusion == Sequent([UNIT, NAT, list_type(NAT)], NAT)
    assert check(d, "muLJ", allow_hyp=True).ok


def test_strong_iteration_uses_context_free_iteration_only():
    d = derive_strong_iteration([UNIT, NAT], NAT_ENC, NAT)
    for v in d.reachable():
        node = d.nodes[v]
        if node.rule.tag == "mu_l_iter":
            step = d.nodes[node.premises[0]].seq
            assert len(step.ante) == 1


# ---------------------------------------------------------------- ancestry

def test_ancestry_id_has_no_edges():
    assert ancestry(single(Sequent([NAT], NAT), RuleInstance("id"))).edges == ()


def test_ancestry_exchange_crosses():
    seq = Sequent([NAT, UNIT], NAT)
    edges = {(e.src, e.dst) for e in ancestry_edges(seq, RuleInstance("exchange", pos=0))}
    assert (0, 1) in edges and (1, 0) in edges and (SUCC, SUCC) in edges


def test_ancestry_mu_left_unfold_is_principal():
    seq = Sequent([UNIT, NAT_ENC], NAT)
    edges = ancestry_edges(seq, RuleInstance("mu_l_unfold", pos=1))
    principal = [e for e in edges if e.principal]
    assert [(e.src, e.dst) for e in principal] == [(1, 1)]
    assert expected_premises(seq, RuleInstance("mu_l_unfold", pos=1))[0].ante[1] == Sum(UNIT, NAT_ENC)


LIBRARY = [
    numeral(3), succ_program(), addition_program(), multiplication_program(),
    circularize(addition_program()), eta_identity(NAT_ENC), eta_identity(list_type(NAT)),
    list_stream_concat(), derive_strong_iteration([UNIT, NAT], NAT_ENC, NAT),
    functor(Arrow(Arrow(X, UNIT), X), "X", succ_program()), bad_cut_loop(),
]


@pytest.mark.parametrize("c", LIBRARY, ids=lambda c: f"{len(c)}nodes")
def test_ancestry_edge_bound_and_targets(c):
    g = ancestry(c)
    for nid in c.reachable():
        node = c.nodes[nid]
        out = g.from_node(nid)
        edges = ancestry_edges(node.seq, node.rule)
        # every conclusion position is a source, every premise position has at
        # most one descendant; principal formulas may have two ancestors
        assert len({e.src for e in edges}) <= len(node.seq.ante) + 1
        for i, q in enumerate(node.premises):
            into = [e.dst for e in edges if e.premise == i]
            assert len(into) == len(set(into)) <= len(c.nodes[q].seq.ante) + 1
        for (src, dst, _, tag) in out:
            assert tag == node.rule.tag
            assert dst[0] in node.premises


@pytest.mark.parametrize("c", LIBRARY, ids=lambda c: f"{len(c)}nodes")
def test_library_constructions_check(c):
    system = "muLJ" if c.is_acyclic() and "mu_l_unfold" not in c.rules_used() else "muLJ_prime"
    assert check(c, system, allow_hyp=True).ok


def test_rule_error_on_bad_position():
    with pytest.raises(RuleError):
        expected_premises(Sequent([NAT], NAT), RuleInstance("mu_l_unfold", pos=3))
