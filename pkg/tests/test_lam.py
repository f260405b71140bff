from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mulj.build import Builder
from mulj.calculus import RuleInstance, Sequent
from mulj.coterm import App as CApp, FreeVar, Gadget, RegularSystem, RuleConst, VarRef, capp, coterm_of, eval_to_numeral, reduce_step
from mulj.lam import (
    COND, FF, ID, IF, ITER_NAT, PAIR, PRED, PROJ0, PROJ1, SUCC, THETA, TT, Abs, App, FragmentError,
    LamTimeout, Var, app, embed, godel, joinable, lam, normalize, parse_lambda, read_godel,
    rule_semantics, show, solve_equations, solve_system,
)
from mulj.library import (
    addition_program, circularize, doubling_program, identity_program, numeral, succ_program,
)
from mulj.types import NAT, Arrow, Mu, Prod, Var as TVar

s, t, x, y, z = (Var(n) for n in "stxyz")


# ------------------------------------------------------------ normalization

def test_beta_example():
    assert normalize(App(lam("x", x), y)) == y


def test_eta_after_beta():
    assert normalize(lam("x", App(y, x))) == y
    assert normalize(lam("x", App(x, x))) == lam("x", App(x, x))


def test_timeout_on_omega():
    omega = App(lam("x", App(x, x)), lam("x", App(x, x)))
    with pytest.raises(LamTimeout):
        normalize(omega, fuel=1000)


def test_normal_order_finds_normal_form():
    omega = App(lam("x", App(x, x)), lam("x", App(x, x)))
    assert normalize(app(FF, omega, y)) == y


def test_alpha_equivalence():
    assert lam("a", Var("a")) == lam("b", Var("b")) == ID


# ------------------------------------------------------------------ macros

def test_macro_equations():
    assert normalize(app(IF, TT, s, t)) == s
    assert normalize(app(IF, FF, s, t)) == t
    assert normalize(app(PROJ0, app(PAIR, s, t))) == s
    assert normalize(app(PROJ1, app(PAIR, s, t))) == t
    assert normalize(app(COND, godel(0), s, t)) == s
    assert normalize(App(PRED, App(SUCC, x))) == x


@pytest.mark.parametrize("n", range(6))
def test_numeral_macros(n):
    assert normalize(App(SUCC, godel(n))) == godel(n + 1)
    assert normalize(app(COND, godel(n + 1), s, t)) == normalize(App(t, godel(n)))
    assert read_godel(normalize(app(ITER_NAT, godel(2), SUCC, godel(n)))) == n + 2


def test_predecessor_of_zero_is_identity():
    # <ff, id> has identity as its second component
    assert normalize(App(PRED, godel(0))) == ID


def test_numerals_distinct():
    nfs = [godel(n) for n in range(21)]
    for m, n in itertools.product(range(21), repeat=2):
        assert (nfs[m] == nfs[n]) == (m == n)
        assert read_godel(nfs[m]) == m


def test_turing_fixed_point_unfolds_by_beta():
    f = Var("f")
    assert joinable(App(THETA, f), App(f, App(THETA, f)), fuel=2000)


@given(st.integers(0, 8), st.integers(0, 8))
def test_normalize_idempotent(m, n):
    add = solve_equations({"add": parse_lambda(r"\m n. cond m n (\k. succ (add k n))")}, "add")
    nf = normalize(app(add, godel(m), godel(n)))
    assert normalize(nf) == nf
    assert read_godel(nf) == m + n


# ------------------------------------------------------------------ parser

def test_parse_and_show():
    t1 = parse_lambda(r"\x y. x (y #2)")
    assert t1 == lam("x", "y", App(x, App(y, godel(2))))
    assert parse_lambda(show(t1)) == t1
    assert parse_lambda("if tt") == App(IF, TT)


# ---------------------------------------------------------- rule semantics

def test_table_examples():
    assert rule_semantics(RuleInstance("id"), Sequent([NAT], NAT)) == ID
    assert rule_semantics(RuleInstance("nat_zero"), Sequent([], NAT)) == godel(0)
    cut = rule_semantics(RuleInstance("cut", split=1, aux=NAT), Sequent([NAT], NAT))
    assert normalize(app(cut, s, t, x)) == normalize(App(t, App(s, x)))


A, B, C = TVar("A"), TVar("B"), TVar("C")
CONSTANTS = [
    (RuleInstance("id"), Sequent([A], A)),
    (RuleInstance("exchange", pos=0), Sequent([A, B, C], C)),
    (RuleInstance("weaken", pos=1), Sequent([A, B, C], C)),
    (RuleInstance("contract", pos=0), Sequent([A, B], C)),
    (RuleInstance("cut", split=1, aux=B), Sequent([A, C], C)),
    (RuleInstance("cut", split=2, aux=B), Sequent([A, C], C)),
    (RuleInstance("arrow_r"), Sequent([C], Arrow(A, B))),
    (RuleInstance("arrow_l", pos=1, split=1), Sequent([C, Arrow(A, B)], C)),
    (RuleInstance("arrow_l", pos=0, split=0), Sequent([Arrow(A, B), C], C)),
    (RuleInstance("prod_r", split=1), Sequent([A, B], Prod(A, B))),
    (RuleInstance("prod_l", pos=0), Sequent([Prod(A, B), C], C)),
    (RuleInstance("mu_r"), Sequent([C], Mu("X", Prod(A, TVar("X"))))),
    (RuleInstance("mu_l_unfold", pos=0), Sequent([Mu("X", Prod(A, TVar("X")))], C)),
    (RuleInstance("nat_succ"), Sequent([A], NAT)),
]


@pytest.mark.parametrize("rule,seq", CONSTANTS, ids=[r.tag + str(i) for i, (r, _) in enumerate(CONSTANTS)])
def test_rule_table_equations(rule, seq):
    """The lambda table validates each reduction rule on fresh variables."""
    k = RuleConst(rule, seq)
    args = [FreeVar(f"v{i}") for i in range(k.arity)]
    redex = capp(k, *args)
    ((path, contractum),) = [r for r in reduce_step(redex, "r_prime") if r[0] == ()]
    assert normalize(embed(redex)) == normalize(embed(contractum))


@pytest.mark.parametrize("scrutinee", [Gadget("zero"), CApp(Gadget("succ"), FreeVar("w"))], ids=["zero", "succ"])
def test_rule_table_equations_cond(scrutinee):
    k = RuleConst(RuleInstance("nat_cond", pos=1), Sequent([A, NAT], C))
    redex = capp(k, FreeVar("d0"), FreeVar("d1"), FreeVar("a"), scrutinee)
    ((_, contractum),) = [r for r in reduce_step(redex, "r_prime") if r[0] == ()]
    assert normalize(embed(redex)) == normalize(embed(contractum))


def test_rule_table_equation_nat_iter():
    k = RuleConst(RuleInstance("nat_iter", pos=0, split=0, aux=NAT), Sequent([NAT], NAT))
    for n in range(4):
        redex = capp(k, FreeVar("b"), FreeVar("st"), FreeVar("r"), coterm_of(numeral(n)).term)
        lhs = normalize(embed(redex))
        want = Var("r")
        acc = Var("b")
        for _ in range(n):
            acc = App(Var("st"), acc)
        assert lhs == normalize(App(want, acc))


def test_nu_rules_outside_fragment():
    with pytest.raises(FragmentError):
        rule_semantics(RuleInstance("nu_l", pos=0), Sequent([TVar("A")], NAT))


# -------------------------------------------------------- equation systems

def test_single_definition_is_substituted():
    sol = solve_equations({"a": App(SUCC, godel(1))}, "a")
    assert THETA not in _subterms(sol)
    assert read_godel(normalize(sol)) == 2


def _subterms(t):
    yield t
    if isinstance(t, Abs):
        yield from _subterms(t.body)
    elif isinstance(t, App):
        yield from _subterms(t.fun)
        yield from _subterms(t.arg)


def test_self_referential_system_satisfies_its_equation():
    eq = parse_lambda(r"\n. cond n #0 (\k. succ (succ (loop k)))")
    sol = solve_equations({"loop": eq}, "loop")
    for n in range(5):
        assert read_godel(normalize(App(sol, godel(n)))) == 2 * n


def test_mutual_recursion_is_tupled():
    eqs = {
        "even": parse_lambda(r"\n. cond n tt (\k. odd k)"),
        "odd": parse_lambda(r"\n. cond n ff (\k. even k)"),
    }
    ev = solve_equations(eqs, "even")
    for n in range(6):
        assert normalize(App(ev, godel(n))) == (TT if n % 2 == 0 else FF)


def test_iterator_system_through_numerals():
    b = Builder()
    p = b.nat_iter(b.nat_succ(b.nat_zero()), b.nat_succ(b.id(NAT)), b.id(NAT))  # n |-> 1 + n
    c = circularize(b.finish(p))
    term = solve_system(coterm_of(c))
    assert read_godel(normalize(App(term, godel(2)))) == 3


# ---------------------------------------------------------------- embedding

@pytest.mark.parametrize("n", range(11))
def test_embed_numerals(n):
    assert normalize(embed(coterm_of(numeral(n)))) == godel(n)


def test_embed_identity_application():
    k = RuleConst(RuleInstance("id"), Sequent([NAT], NAT))
    assert normalize(embed(CApp(k, FreeVar("x")))) == x


def test_embed_addition_system():
    sol = embed(coterm_of(circularize(addition_program())))
    assert read_godel(normalize(app(sol, godel(2), godel(3)))) == 5


def test_embed_requires_system_for_references():
    with pytest.raises(FragmentError):
        embed(VarRef("a"))


@pytest.mark.parametrize("make", [succ_program, identity_program, addition_program, doubling_program])
def test_uniqueness_against_coterm_evaluation(make):
    for prog in (make(), circularize(make())):
        sol = embed(coterm_of(prog))
        k = len(prog.conclusion.ante)
        for args in itertools.product(range(3), repeat=k):
            n = eval_to_numeral(prog, list(args))
            nf = normalize(app(sol, *(godel(a) for a in args)))
            assert nf == godel(n)
            assert normalize(nf) == nf
