from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mulj.arith import (
    And, ArithError, CaptureError, Eq, Exists, Fn, Forall, FormulaSyntaxError, Implies, Ind, IndN,
    InMu, InSet, LanguageError, Lt, MuPred, Not, Or, PNat, Pre, PreN0, PreNSucc, Pred, PositivityError,
    Sign, Succ, TVar, Zero, axiom, declare_symbol, eval_term, friedman_pred, friedman_translate,
    gg_pred, gg_translate, n_relativize, num, parse_formula, parse_term, positivity,
    realiser, realising_type, rename_apart, set_pred, show_formula, subst_set,
)
from mulj.coterm import Gadget, numeral_term, type_assign
from mulj.types import NAT, Arrow, Mu, Prod, Var, substitute
from strategies import atomic_predicates, formulas

x, y = TVar("x"), TVar("y")
P = parse_formula


# ------------------------------------------------------------------ syntax

def test_parse_examples():
    assert P("x = 0") == Eq(x, Zero())
    assert P("x in X /\\ 0 < S(x)") == And(InSet(x, "X"), Lt(Zero(), Succ(x)))
    assert P("all x. N x -> N x") == Forall("x", Implies(PNat(x), PNat(x)))
    assert P("x in mu X, y. (y = 0 \\/ y in X)") == InMu(x, "X", "y", Or(Eq(y, Zero()), InSet(y, "X")))


def test_implication_associates_right():
    assert P("x = 0 -> y = 0 -> x = y") == Implies(Eq(x, Zero()), Implies(Eq(y, Zero()), Eq(x, y)))


def test_syntax_error_has_position():
    with pytest.raises(FormulaSyntaxError) as e:
        P("x = ")
    assert "4" in str(e.value)


def test_positivity_enforced_at_construction():
    with pytest.raises(PositivityError):
        InMu(x, "X", "y", Not(InSet(y, "X")))
    with pytest.raises(FormulaSyntaxError):
        P("x in mu X, y. ~ y in X")


@settings(max_examples=150)
@given(formulas(depth=5))
def test_show_parse_round_trip(phi):
    assert P(show_formula(phi)) == phi


def test_terms():
    assert eval_term(parse_term("add(S(S(0)), mul(S(S(0)), S(S(S(0)))))")) == 8
    assert eval_term(Fn("add", (x, num(2))), {"x": 3}) == 5
    with pytest.raises(ArithError):
        Fn("add", (x,))
    declare_symbol("pd", 1, lambda n: max(n - 1, 0))
    assert eval_term(Fn("pd", (num(3),))) == 2
    with pytest.raises(ArithError):
        declare_symbol("pd", 2)


# -------------------------------------------------------------- positivity

def test_positivity_examples():
    assert positivity(InSet(x, "X"), "X") == Sign.POSITIVE
    assert positivity(Not(InSet(x, "X")), "X") == Sign.NEGATIVE
    assert positivity(Implies(InSet(x, "X"), InSet(x, "X")), "X") == Sign.BOTH
    assert positivity(Eq(x, x), "X") == Sign.ABSENT


@given(formulas(depth=4))
def test_negation_flips_positivity(phi):
    flip = {Sign.POSITIVE: Sign.NEGATIVE, Sign.NEGATIVE: Sign.POSITIVE, Sign.BOTH: Sign.BOTH,
            Sign.ABSENT: Sign.ABSENT}
    assert positivity(Not(phi), "X") == flip[positivity(phi, "X")]


# ------------------------------------------------------------ translations

def test_gg_clauses():
    a, b = Eq(x, Zero()), InSet(x, "X")
    assert gg_translate(a) == a
    assert gg_translate(b) == Not(Not(b))
    assert gg_translate(Lt(x, y)) == Not(Not(Lt(x, y)))
    assert gg_translate(Or(a, b)) == Not(And(Not(a), Not(Not(Not(b)))))
    assert gg_translate(Exists("x", a)) == Not(Forall("x", Not(a)))
    assert gg_translate(Forall("x", a)) == Forall("x", a)
    m = InMu(x, "X", "y", Or(Eq(y, Zero()), InSet(y, "X")))
    assert gg_translate(m) == Not(Not(InMu(x, "X", "y", gg_translate(m.body))))


def test_friedman_clauses():
    rho = P("0 = S(0)")
    a = Eq(x, Zero())
    assert friedman_translate(a, rho) == Or(a, rho)
    assert friedman_translate(And(a, a), rho) == And(Or(a, rho), Or(a, rho))
    assert friedman_translate(Forall("x", a), rho) == Forall("x", Or(a, rho))
    assert friedman_translate(Not(a), rho) == Not(Or(a, rho))


def test_friedman_capture_error():
    with pytest.raises(CaptureError):
        friedman_translate(P("all x. x = 0"), P("x = 0"))
    phi = rename_apart(P("all x. x = 0"), {"x"})
    out = friedman_translate(phi, P("x = 0"))
    assert isinstance(out, Forall) and out.var != "x"


def test_translations_reject_n_atoms():
    for f in (gg_translate, n_relativize, lambda p: friedman_translate(p, P("0 = 0"))):
        with pytest.raises(LanguageError):
            f(PNat(x))


def test_relativization_clauses():
    a = Eq(x, y)
    assert n_relativize(a) == a
    assert n_relativize(Forall("x", a)) == Forall("x", Implies(PNat(x), a))
    assert n_relativize(Exists("x", a)) == Exists("x", And(PNat(x), a))
    m = InMu(x, "X", "y", InSet(y, "X"))
    assert n_relativize(m) == InMu(x, "X", "y", And(PNat(y), InSet(y, "X")))


def _or_exists_free(phi) -> bool:
    if isinstance(phi, (Or, Exists)):
        return False
    if isinstance(phi, (And, Implies)):
        return _or_exists_free(phi.left) and _or_exists_free(phi.right)
    if isinstance(phi, (Not, Forall, InMu)):
        return _or_exists_free(phi.body)
    return True


@settings(max_examples=200)
@given(formulas(depth=5))
def test_gg_output_has_no_disjunction_or_existential(phi):
    assert _or_exists_free(gg_translate(phi))


@settings(max_examples=60)  # the acceptance suite runs 200
@given(formulas(depth=5), atomic_predicates())
def test_gg_substitution_identity(phi, psi):
    assert gg_translate(subst_set(phi, "X", psi)) == subst_set(gg_translate(phi), "X", gg_pred(psi))


RHO = P("0 = S(0)")


@settings(max_examples=60)  # the acceptance suite runs 200
@given(formulas(depth=5), atomic_predicates())
def test_friedman_substitution_identity(phi, psi):
    lhs = friedman_translate(subst_set(phi, "X", psi), RHO)
    assert lhs == subst_set(friedman_translate(phi, RHO), "X", friedman_pred(psi, RHO))


def test_compound_predicates_agree_only_up_to_equivalence():
    # (t in X)^g = ~~ t in X, so a compound psi picks up a double negation
    phi = InSet(x, "X")
    psi = Pred("v", Lt(TVar("v"), num(3)))
    lhs = gg_translate(subst_set(phi, "X", psi))
    rhs = subst_set(gg_translate(phi), "X", Pred("v", gg_translate(psi.body)))
    assert lhs != rhs
    assert rhs == Not(Not(lhs))
    with pytest.raises(LanguageError):
        gg_pred(psi)


# ---------------------------------------------------------- realising types

def test_realising_type_clauses():
    assert realising_type(Eq(x, y)) == NAT
    assert realising_type(PNat(x)) == NAT
    assert realising_type(InSet(x, "X")) == Var("X")
    assert realising_type(Implies(Eq(x, y), InSet(x, "X"))) == Arrow(NAT, Var("X"))
    assert realising_type(And(Eq(x, y), PNat(x))) == Prod(NAT, NAT)
    assert realising_type(Forall("x", Exists("y", Eq(x, y)))) == NAT
    assert realising_type(InMu(x, "X", "y", InSet(y, "X"))) == Mu("X", Var("X"))
    assert realising_type(P("all x. (N x -> N x)")) == Arrow(NAT, NAT)
    with pytest.raises(LanguageError):
        realising_type(Or(Eq(x, y), Eq(x, y)))


# ------------------------------------------------------------------ axioms

LIST_LIKE = MuPred("X", "y", P("y = 0 /\\ all z. (y < z -> z in X)"))


def test_axiom_shapes():
    assert axiom(PreN0()) == PNat(Zero())
    assert axiom(PreNSucc()) == Forall("x", Implies(PNat(x), PNat(Succ(x))))
    pre = axiom(Pre(LIST_LIKE))
    assert isinstance(pre, Forall) and isinstance(pre.body.right, InMu)
    ind = axiom(IndN(set_pred("Y")))
    assert ind == Implies(InSet(Zero(), "Y"),
                          Implies(Forall("x", Implies(InSet(x, "Y"), InSet(Succ(x), "Y"))),
                                  Forall("x", Implies(PNat(x), InSet(x, "Y")))))


def test_realisers():
    assert realiser(PreN0()).term == numeral_term(0)
    assert realiser(PreNSucc()).term == Gadget("succ", ())
    r = realiser(Ind(LIST_LIKE, set_pred("Y")))
    sigma = realising_type(LIST_LIKE.body)
    tau = Var("Y")
    assert r.type == Arrow(Arrow(substitute(sigma, "X", tau), tau), Arrow(Mu("X", sigma), tau))
    assert realiser(IndN(set_pred("Y"))).type == realising_type(axiom(IndN(set_pred("Y"))))


def test_positivity_violation_in_axiom():
    with pytest.raises(PositivityError):
        MuPred("X", "y", P("y in X -> y = 0"))


@st.composite
def disjunction_free(draw, sets=("X",)):
    phi = draw(formulas(depth=4, sets=sets))
    return phi if "\\/" not in show_formula(phi) else Eq(x, y)


@settings(max_examples=50)
@given(disjunction_free(), disjunction_free(sets=("Y",)))
def test_induction_realiser_type_agrees(body, psi_body):
    if positivity(body, "X") not in (Sign.POSITIVE, Sign.ABSENT):
        body = InSet(y, "X")
    mu = MuPred("X", "y", body)
    k = Ind(mu, Pred("x", psi_body))
    r = realiser(k)
    assert type_assign(r.term) == r.type == realising_type(axiom(k))
    pre = realiser(Pre(mu))
    assert pre.type == realising_type(axiom(Pre(mu)))
