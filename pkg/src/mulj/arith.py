"""First-order arithmetic with fixed-point binders.

Formulas are those of arithmetic extended with set variables and the binder
``t in mu X, x. phi``, where ``phi`` is positive in ``X``.  The predicate
``N t`` extends the language for the relativised theory.  Set variables are
capitalised, number variables are lower case.

The module provides positivity, the double-negation (``g``) and Friedman
(``rho``) translations, relativisation to ``N``, realising types, and the
fixed-point axioms together with their realisers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from typing import Callable, Iterable

from .coterm import Gadget, TypedTerm, numeral_term, type_assign
from .types import NAT, Arrow, Mu, Prod, TypeExpr, Var, neg


class ArithError(ValueError):
    """Malformed arithmetic syntax."""


class PositivityError(ArithError):
    """A fixed-point body is not positive in its bound set variable."""


class CaptureError(ArithError):
    """A translation would capture a free variable of its parameter."""


class LanguageError(ArithError):
    """A formula uses a construct outside the language an operation expects."""


class FormulaSyntaxError(ArithError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


# ------------------------------------------------------------------ terms

@dataclass(frozen=True)
class PRSymbol:
    """A primitive-recursive function symbol; ``evaluate`` is optional."""

    name: str
    arity: int
    evaluate: Callable[..., int] | None = field(default=None, compare=False)


SYMBOLS: dict[str, PRSymbol] = {
    "add": PRSymbol("add", 2, lambda a, b: a + b),
    "mul": PRSymbol("mul", 2, lambda a, b: a * b),
}


def declare_symbol(name: str, arity: int, evaluate: Callable[..., int] | None = None) -> PRSymbol:
    """Register a function symbol; redeclaring with another arity is an error."""
    old = SYMBOLS.get(name)
    if old is not None and old.arity != arity:
        raise ArithError(f"{name} is already declared with arity {old.arity}")
    sym = PRSymbol(name, arity, evaluate)
    SYMBOLS[name] = sym
    return sym


class ArithTerm:
    __slots__ = ()


@dataclass(frozen=True)
class TVar(ArithTerm):
    name: str


@dataclass(frozen=True)
class Zero(ArithTerm):
    pass


@dataclass(frozen=True)
class Succ(ArithTerm):
    arg: ArithTerm


@dataclass(frozen=True)
class Fn(ArithTerm):
    symbol: str
    args: tuple

    def __post_init__(self):
        sym = SYMBOLS.get(self.symbol)
        if sym is None:
            raise ArithError(f"undeclared function symbol {self.symbol}")
        if len(self.args) != sym.arity:
            raise ArithError(f"{self.symbol} takes {sym.arity} arguments, got {len(self.args)}")


def num(n: int) -> ArithTerm:
    t: ArithTerm = Zero()
    for _ in range(n):
        t = Succ(t)
    return t


def term_vars(t: ArithTerm) -> frozenset:
    if isinstance(t, TVar):
        return frozenset([t.name])
    if isinstance(t, Succ):
        return term_vars(t.arg)
    if isinstance(t, Fn):
        return frozenset().union(*(term_vars(a) for a in t.args))
    return frozenset()


def subst_term(t: ArithTerm, x: str, u: ArithTerm) -> ArithTerm:
    if isinstance(t, TVar):
        return u if t.name == x else t
    if isinstance(t, Succ):
        return Succ(subst_term(t.arg, x, u))
    if isinstance(t, Fn):
        return Fn(t.symbol, tuple(subst_term(a, x, u) for a in t.args))
    return t


def eval_term(t: ArithTerm, env: dict | None = None) -> int:
    """Value of a term under ``env``; symbols need an evaluator."""
    env = env or {}
    if isinstance(t, Zero):
        return 0
    if isinstance(t, Succ):
        return eval_term(t.arg, env) + 1
    if isinstance(t, TVar):
        if t.name not in env:
            raise ArithError(f"unbound variable {t.name}")
        return env[t.name]
    sym = SYMBOLS[t.symbol]
    if sym.evaluate is None:
        raise ArithError(f"{t.symbol} has no evaluator")
    return sym.evaluate(*(eval_term(a, env) for a in t.args))


# --------------------------------------------------------------- formulas

class Formula:
    __slots__ = ()

    def __str__(self):
        return show_formula(self)


@dataclass(frozen=True)
class Eq(Formula):
    left: ArithTerm
    right: ArithTerm


@dataclass(frozen=True)
class Lt(Formula):
    left: ArithTerm
    right: ArithTerm


@dataclass(frozen=True)
class InSet(Formula):
    term: ArithTerm
    setvar: str


@dataclass(frozen=True)
class InMu(Formula):
    """``term in mu setvar, numvar. body``."""

    term: ArithTerm
    setvar: str
    numvar: str
    body: Formula

    def __post_init__(self):
        if positivity(self.body, self.setvar) not in (Sign.POSITIVE, Sign.ABSENT):
            raise PositivityError(f"{self.setvar} is not positive in {show_formula(self.body)}")


@dataclass(frozen=True)
class PNat(Formula):
    term: ArithTerm


@dataclass(frozen=True)
class Cand(Formula):
    symbol: str
    term: ArithTerm


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


ATOMS = (Eq, Lt, InSet, PNat, Cand)


@dataclass(frozen=True)
class Pred:
    """A predicate ``lambda var. body`` substituted for a set variable."""

    var: str
    body: Formula

    def __call__(self, t: ArithTerm) -> Formula:
        return subst_num(self.body, self.var, t)


def set_pred(name: str) -> Pred:
    return Pred("x", InSet(TVar("x"), name))


def mu_pred(setvar: str, numvar: str, body: Formula) -> Pred:
    """The predicate ``lambda z. z in mu setvar, numvar. body``."""
    z = _fresh("z", free_num_vars(body) | {numvar})
    return Pred(z, InMu(TVar(z), setvar, numvar, body))


# --------------------------------------------------------- free variables

def free_num_vars(phi: Formula) -> frozenset:
    if isinstance(phi, (Eq, Lt)):
        return term_vars(phi.left) | term_vars(phi.right)
    if isinstance(phi, (InSet, PNat, Cand)):
        return term_vars(phi.term)
    if isinstance(phi, InMu):
        return term_vars(phi.term) | (free_num_vars(phi.body) - {phi.numvar})
    if isinstance(phi, (And, Or, Implies)):
        return free_num_vars(phi.left) | free_num_vars(phi.right)
    if isinstance(phi, Not):
        return free_num_vars(phi.body)
    return free_num_vars(phi.body) - {phi.var}


def free_set_vars(phi: Formula) -> frozenset:
    if isinstance(phi, InSet):
        return frozenset([phi.setvar])
    if isinstance(phi, InMu):
        return free_set_vars(phi.body) - {phi.setvar}
    if isinstance(phi, (And, Or, Implies)):
        return free_set_vars(phi.left) | free_set_vars(phi.right)
    if isinstance(phi, (Not, Forall, Exists)):
        return free_set_vars(phi.body)
    return frozenset()


def bound_vars(phi: Formula) -> frozenset:
    """Number and set variables bound somewhere inside ``phi``."""
    if isinstance(phi, InMu):
        return frozenset([phi.setvar, phi.numvar]) | bound_vars(phi.body)
    if isinstance(phi, (And, Or, Implies)):
        return bound_vars(phi.left) | bound_vars(phi.right)
    if isinstance(phi, Not):
        return bound_vars(phi.body)
    if isinstance(phi, (Forall, Exists)):
        return frozenset([phi.var]) | bound_vars(phi.body)
    return frozenset()


def _all_names(phi: Formula) -> set:
    return set(free_num_vars(phi) | free_set_vars(phi) | bound_vars(phi))


def _fresh(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    stem = base.rstrip("0123456789") or base
    if base not in avoid:
        return base
    for i in count(1):
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError  # pragma: no cover


# ------------------------------------------------------------ substitution

def subst_num(phi: Formula, x: str, t: ArithTerm) -> Formula:
    """Capture-avoiding ``phi[t/x]`` for a number variable ``x``."""
    fv = term_vars(t)
    if isinstance(phi, Eq):
        return Eq(subst_term(phi.left, x, t), subst_term(phi.right, x, t))
    if isinstance(phi, Lt):
        return Lt(subst_term(phi.left, x, t), subst_term(phi.right, x, t))
    if isinstance(phi, InSet):
        return InSet(subst_term(phi.term, x, t), phi.setvar)
    if isinstance(phi, PNat):
        return PNat(subst_term(phi.term, x, t))
    if isinstance(phi, Cand):
        return Cand(phi.symbol, subst_term(phi.term, x, t))
    if isinstance(phi, InMu):
        term = subst_term(phi.term, x, t)
        if phi.numvar == x or x not in free_num_vars(phi.body):
            return InMu(term, phi.setvar, phi.numvar, phi.body)
        y, body = phi.numvar, phi.body
        if y in fv:
            y = _fresh(y, fv | _all_names(body) | {x})
            body = subst_num(body, phi.numvar, TVar(y))
        return InMu(term, phi.setvar, y, subst_num(body, x, t))
    if isinstance(phi, (And, Or, Implies)):
        return type(phi)(subst_num(phi.left, x, t), subst_num(phi.right, x, t))
    if isinstance(phi, Not):
        return Not(subst_num(phi.body, x, t))
    if phi.var == x or x not in free_num_vars(phi.body):
        return phi
    y, body = phi.var, phi.body
    if y in fv:
        y = _fresh(y, fv | _all_names(body) | {x})
        body = subst_num(body, phi.var, TVar(y))
    return type(phi)(y, subst_num(body, x, t))


def subst_set(phi: Formula, X: str, p: Pred) -> Formula:
    """``phi(p)``: every ``t in X`` becomes ``p(t)``, avoiding capture."""
    pfree_num = free_num_vars(p.body) - {p.var}
    pfree_set = free_set_vars(p.body)

    def go(f: Formula) -> Formula:
        if isinstance(f, InSet):
            return p(f.term) if f.setvar == X else f
        if isinstance(f, (Eq, Lt, PNat, Cand)):
            return f
        if isinstance(f, InMu):
            if f.setvar == X:
                return f
            sv, nv, body = f.setvar, f.numvar, f.body
            if sv in pfree_set:
                sv = _fresh(sv, pfree_set | _all_names(body) | {X})
                body = subst_set(body, f.setvar, set_pred(sv))
            if nv in pfree_num:
                nv = _fresh(nv, pfree_num | _all_names(body))
                body = subst_num(body, f.numvar, TVar(nv))
            return InMu(f.term, sv, nv, go(body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, Not):
            return Not(go(f.body))
        v, body = f.var, f.body
        if v in pfree_num:
            v = _fresh(v, pfree_num | _all_names(body))
            body = subst_num(body, f.var, TVar(v))
        return type(f)(v, go(body))

    return go(phi)


def rename_apart(phi: Formula, avoid: Iterable[str]) -> Formula:
    """Rename bound variables of ``phi`` that clash with ``avoid``."""
    avoid = set(avoid)

    def go(f: Formula) -> Formula:
        if isinstance(f, ATOMS):
            return f
        if isinstance(f, InMu):
            sv, nv, body = f.setvar, f.numvar, f.body
            if sv in avoid:
                sv = _fresh(sv, avoid | _all_names(body))
                body = subst_set(body, f.setvar, set_pred(sv))
            if nv in avoid:
                nv = _fresh(nv, avoid | _all_names(body))
                body = subst_num(body, f.numvar, TVar(nv))
            return InMu(f.term, sv, nv, go(body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, Not):
            return Not(go(f.body))
        v, body = f.var, f.body
        if v in avoid:
            v = _fresh(v, avoid | _all_names(body))
            body = subst_num(body, f.var, TVar(v))
        return type(f)(v, go(body))

    return go(phi)


# -------------------------------------------------------------- positivity

class Sign(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"
    ABSENT = "absent"


def _signs(phi: Formula, X: str, pol: bool) -> set:
    if isinstance(phi, InSet):
        return {pol} if phi.setvar == X else set()
    if isinstance(phi, InMu):
        return set() if phi.setvar == X else _signs(phi.body, X, pol)
    if isinstance(phi, Implies):
        return _signs(phi.left, X, not pol) | _signs(phi.right, X, pol)
    if isinstance(phi, (And, Or)):
        return _signs(phi.left, X, pol) | _signs(phi.right, X, pol)
    if isinstance(phi, Not):
        return _signs(phi.body, X, not pol)
    if isinstance(phi, (Forall, Exists)):
        return _signs(phi.body, X, pol)
    return set()


def positivity(phi: Formula, X: str) -> Sign:
    s = _signs(phi, X, True)
    if not s:
        return Sign.ABSENT
    if s == {True}:
        return Sign.POSITIVE
    if s == {False}:
        return Sign.NEGATIVE
    return Sign.BOTH


def in_l_mu(phi: Formula) -> bool:
    """True when ``phi`` uses neither ``N`` nor candidate atoms."""
    if isinstance(phi, (PNat, Cand)):
        return False
    if isinstance(phi, (Eq, Lt, InSet)):
        return True
    if isinstance(phi, (And, Or, Implies)):
        return in_l_mu(phi.left) and in_l_mu(phi.right)
    return in_l_mu(phi.body)


def _require_l_mu(phi: Formula, op: str):
    if not in_l_mu(phi):
        raise LanguageError(f"{op} expects a formula without N or candidate atoms")


# ------------------------------------------------------------ translations

def gg_translate(phi: Formula) -> Formula:
    """Double-negation translation into the intuitionistic theory.

    Equations stay, other atoms and fixed-point memberships are doubly
    negated, disjunction and existence are expressed by conjunction and
    universal quantification.  Implication is not in the clause table; it
    commutes, as in the usual presentations.
    """
    _require_l_mu(phi, "gg_translate")
    return _gg(phi)


def _gg(phi: Formula) -> Formula:
    if isinstance(phi, Eq):
        return phi
    if isinstance(phi, (Lt, InSet)):
        return Not(Not(phi))
    if isinstance(phi, InMu):
        return Not(Not(InMu(phi.term, phi.setvar, phi.numvar, _gg(phi.body))))
    if isinstance(phi, Not):
        return Not(_gg(phi.body))
    if isinstance(phi, And):
        return And(_gg(phi.left), _gg(phi.right))
    if isinstance(phi, Or):
        return Not(And(Not(_gg(phi.left)), Not(_gg(phi.right))))
    if isinstance(phi, Implies):
        return Implies(_gg(phi.left), _gg(phi.right))
    if isinstance(phi, Forall):
        return Forall(phi.var, _gg(phi.body))
    if isinstance(phi, Exists):
        return Not(Forall(phi.var, Not(_gg(phi.body))))
    raise LanguageError(f"no translation for {phi!r}")  # pragma: no cover


def friedman_translate(phi: Formula, rho: Formula) -> Formula:
    """Friedman's translation with parameter ``rho``.

    Raises :class:`CaptureError` if a variable bound in ``phi`` is free in
    ``rho``; :func:`rename_apart` fixes that beforehand.
    """
    _require_l_mu(phi, "friedman_translate")
    clash = bound_vars(phi) & (free_num_vars(rho) | free_set_vars(rho))
    if clash:
        raise CaptureError(f"bound variables {sorted(clash)} are free in the parameter")

    def go(f: Formula) -> Formula:
        if isinstance(f, (Eq, Lt, InSet)):
            return Or(f, rho)
        if isinstance(f, InMu):
            return Or(InMu(f.term, f.setvar, f.numvar, go(f.body)), rho)
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.left), go(f.right))
        return type(f)(f.var, go(f.body))

    return go(phi)


def _atomic_pred(p: Pred, f: Callable[[Formula], Formula]) -> Pred:
    body = p.body
    if isinstance(body, InSet):
        return p
    if isinstance(body, InMu):
        return Pred(p.var, InMu(body.term, body.setvar, body.numvar, f(body.body)))
    raise LanguageError("only set variables and fixed-point predicates translate as predicates")


def gg_pred(p: Pred) -> Pred:
    """Translation of an atomic predicate: ``lambda z. z in mu X, x. phi^g``.

    With it ``(phi(p))^g = phi^g(p^g)`` holds syntactically.  For a compound
    predicate the two sides differ by a double negation around each
    substituted instance and agree only up to provable equivalence.
    """
    return _atomic_pred(p, _gg)


def friedman_pred(p: Pred, rho: Formula) -> Pred:
    """Friedman analogue of :func:`gg_pred`."""
    return _atomic_pred(p, lambda f: friedman_translate(f, rho))


def n_relativize(phi: Formula) -> Formula:
    """Relativise quantifiers and fixed-point bodies to ``N``."""
    _require_l_mu(phi, "n_relativize")

    def go(f: Formula) -> Formula:
        if isinstance(f, (Eq, Lt, InSet)):
            return f
        if isinstance(f, InMu):
            x = TVar(f.numvar)
            return InMu(f.term, f.setvar, f.numvar, And(PNat(x), go(f.body)))
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, Exists):
            return Exists(f.var, And(PNat(TVar(f.var)), go(f.body)))
        return Forall(f.var, Implies(PNat(TVar(f.var)), go(f.body)))

    return go(phi)


def realising_type(phi: Formula) -> TypeExpr:
    """The type of potential realisers of ``phi``.

    ``t < u`` is read as an equation-like atom and ``not phi`` as
    ``phi -> 0 = 1``; disjunction and candidate atoms have no realising type.
    """
    if isinstance(phi, (Eq, Lt, PNat)):
        return NAT
    if isinstance(phi, InSet):
        return Var(phi.setvar)
    if isinstance(phi, And):
        return Prod(realising_type(phi.left), realising_type(phi.right))
    if isinstance(phi, Implies):
        return Arrow(realising_type(phi.left), realising_type(phi.right))
    if isinstance(phi, Not):
        return neg(realising_type(phi.body))
    if isinstance(phi, (Forall, Exists)):
        return realising_type(phi.body)
    if isinstance(phi, InMu):
        return Mu(phi.setvar, realising_type(phi.body))
    raise LanguageError(f"{type(phi).__name__} has no realising type")


# ------------------------------------------------------- axioms, realisers

@dataclass(frozen=True)
class MuPred:
    """``mu setvar lambda numvar. body``."""

    setvar: str
    numvar: str
    body: Formula

    def __post_init__(self):
        if positivity(self.body, self.setvar) not in (Sign.POSITIVE, Sign.ABSENT):
            raise PositivityError(f"{self.setvar} is not positive in {show_formula(self.body)}")

    def at(self, t: ArithTerm) -> Formula:
        return InMu(t, self.setvar, self.numvar, self.body)

    def pred(self) -> Pred:
        return mu_pred(self.setvar, self.numvar, self.body)

    def instance(self, p: Pred, t: ArithTerm) -> Formula:
        """``body(p, t)``."""
        return subst_set(subst_num(self.body, self.numvar, t), self.setvar, p)


@dataclass(frozen=True)
class Pre:
    mu: MuPred


@dataclass(frozen=True)
class Ind:
    mu: MuPred
    psi: Pred


@dataclass(frozen=True)
class PreN0:
    pass


@dataclass(frozen=True)
class PreNSucc:
    pass


@dataclass(frozen=True)
class IndN:
    phi: Pred


AxiomKind = Pre | Ind | PreN0 | PreNSucc | IndN


def _var_for(avoid: Iterable[str], base: str = "y") -> str:
    return _fresh(base, set(avoid))


def axiom(kind: AxiomKind) -> Formula:
    if isinstance(kind, Pre):
        mu = kind.mu
        y = _var_for(free_num_vars(mu.body) - {mu.numvar})
        return Forall(y, Implies(mu.instance(mu.pred(), TVar(y)), mu.at(TVar(y))))
    if isinstance(kind, Ind):
        mu, psi = kind.mu, kind.psi
        x = _var_for((free_num_vars(mu.body) - {mu.numvar}) | (free_num_vars(psi.body) - {psi.var}), "x")
        step = Forall(x, Implies(mu.instance(psi, TVar(x)), psi(TVar(x))))
        return Implies(step, Forall(x, Implies(mu.at(TVar(x)), psi(TVar(x)))))
    if isinstance(kind, PreN0):
        return PNat(Zero())
    if isinstance(kind, PreNSucc):
        return Forall("x", Implies(PNat(TVar("x")), PNat(Succ(TVar("x")))))
    if isinstance(kind, IndN):
        p = kind.phi
        x = _var_for(free_num_vars(p.body) - {p.var}, "x")
        step = Forall(x, Implies(p(TVar(x)), p(Succ(TVar(x)))))
        return Implies(p(Zero()), Implies(step, Forall(x, Implies(PNat(TVar(x)), p(TVar(x))))))
    raise TypeError(f"unknown axiom kind {kind!r}")


def realiser(kind: AxiomKind) -> TypedTerm:
    """The realiser of an axiom at its realising type, checked by
    :func:`mulj.coterm.type_assign`."""
    if isinstance(kind, Pre):
        term = Gadget("in", (realising_type(kind.mu.at(Zero())),))
    elif isinstance(kind, Ind):
        mu_t = realising_type(kind.mu.at(Zero()))
        term = Gadget("iter", (mu_t, realising_type(kind.psi.body)))
    elif isinstance(kind, PreN0):
        term = numeral_term(0)
    elif isinstance(kind, PreNSucc):
        term = Gadget("succ", ())
    elif isinstance(kind, IndN):
        term = Gadget("iterN", (realising_type(kind.phi.body),))
    else:
        raise TypeError(f"unknown axiom kind {kind!r}")
    ty = type_assign(term)
    want = realising_type(axiom(kind))
    if ty != want:  # pragma: no cover - would mean a table mismatch
        raise ArithError(f"realiser has type {ty}, axiom needs {want}")
    return TypedTerm(term, ty)


# ---------------------------------------------------------------- printing

_PREC = {Implies: 1, Or: 2, And: 3}


def show_term(t: ArithTerm) -> str:
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Succ):
        return f"S({show_term(t.arg)})"
    return f"{t.symbol}({', '.join(show_term(a) for a in t.args)})"


def show_formula(phi: Formula) -> str:
    return _show(phi, 0)


def _show(phi: Formula, prec: int) -> str:
    if isinstance(phi, Eq):
        return f"{show_term(phi.left)} = {show_term(phi.right)}"
    if isinstance(phi, Lt):
        return f"{show_term(phi.left)} < {show_term(phi.right)}"
    if isinstance(phi, InSet):
        return f"{show_term(phi.term)} in {phi.setvar}"
    if isinstance(phi, PNat):
        return f"N {show_term(phi.term)}"
    if isinstance(phi, Cand):
        return f"cand {phi.symbol} {show_term(phi.term)}"
    if isinstance(phi, Not):
        return f"~{_show(phi.body, 4)}"
    if isinstance(phi, (And, Or, Implies)):
        p = _PREC[type(phi)]
        op = {And: "/\\", Or: "\\/", Implies: "->"}[type(phi)]
        if isinstance(phi, Implies):  # right associative
            s = f"{_show(phi.left, p + 1)} {op} {_show(phi.right, p)}"
        else:  # left associative
            s = f"{_show(phi.left, p)} {op} {_show(phi.right, p + 1)}"
        return s if prec <= p else f"({s})"
    if isinstance(phi, InMu):
        s = f"{show_term(phi.term)} in mu {phi.setvar}, {phi.numvar}. {_show(phi.body, 0)}"
    else:
        kw = "all" if isinstance(phi, Forall) else "ex"
        s = f"{kw} {phi.var}. {_show(phi.body, 0)}"
    return s if prec == 0 else f"({s})"


# ----------------------------------------------------------------- parsing

_TOK = re.compile(r"\s*(?:(->|/\\|\\/|[()=<,.~])|([A-Za-z_][A-Za-z0-9_']*)|(\d+))")
_KEYWORDS = {"in", "mu", "all", "ex", "N", "S", "cand"}


def _lex(text: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOK.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        out.append((m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


def _is_set_var(tok: str) -> bool:
    return tok[:1].isupper() and tok not in _KEYWORDS


def _is_num_var(tok: str) -> bool:
    return bool(re.fullmatch(r"[a-z_][A-Za-z0-9_']*", tok)) and tok not in _KEYWORDS and tok not in SYMBOLS


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, k: int = 0) -> str:
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, want: str | None = None) -> str:
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            raise FormulaSyntaxError(f"expected {want!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    # formulas, loosest first
    def formula(self) -> Formula:
        if self.peek() in ("all", "ex"):
            kw = self.take()
            v = self.numvar()
            self.take(".")
            body = self.formula()
            return (Forall if kw == "all" else Exists)(v, body)
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "\\/":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek() == "/\\":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "~":
            self.take()
            return Not(self.unary())
        if tok in ("all", "ex"):
            return self.formula()
        if tok == "(" and self._paren_is_formula():
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if tok == "N":
            self.take()
            return PNat(self.term_atom())
        if tok == "cand":
            self.take()
            sym = self.take()
            return Cand(sym, self.term_atom())
        return self.atom()

    def _paren_is_formula(self) -> bool:
        # "(" opens a formula unless the matching ")" is followed by a
        # relation symbol, in which case it brackets a term.
        depth, j = 0, self.i
        while j < len(self.toks):
            t = self.toks[j][0]
            if t == "(":
                depth += 1
            elif t == ")":
                depth -= 1
                if depth == 0:
                    return self.toks[j + 1][0] not in ("=", "<", "in")
            elif t == "<eof>":
                break
            j += 1
        return True

    def atom(self) -> Formula:
        t = self.term()
        tok, pos = self.toks[self.i]
        if tok == "=":
            self.take()
            return Eq(t, self.term())
        if tok == "<":
            self.take()
            return Lt(t, self.term())
        if tok == "in":
            self.take()
            if self.peek() == "mu":
                self.take()
                sv = self.setvar()
                self.take(",")
                nv = self.numvar()
                self.take(".")
                body = self.formula()
                try:
                    return InMu(t, sv, nv, body)
                except PositivityError as e:
                    raise FormulaSyntaxError(str(e), pos) from None
            return InSet(t, self.setvar())
        raise FormulaSyntaxError(f"expected a relation, found {tok!r}", pos)

    def setvar(self) -> str:
        tok, pos = self.toks[self.i]
        if not _is_set_var(tok):
            raise FormulaSyntaxError(f"expected a set variable, found {tok!r}", pos)
        self.i += 1
        return tok

    def numvar(self) -> str:
        tok, pos = self.toks[self.i]
        if not _is_num_var(tok):
            raise FormulaSyntaxError(f"expected a number variable, found {tok!r}", pos)
        self.i += 1
        return tok

    # terms
    def term(self) -> ArithTerm:
        return self.term_atom()

    def term_atom(self) -> ArithTerm:
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            t = self.term()
            self.take(")")
            return t
        if tok.isdigit():
            self.take()
            return num(int(tok))
        if tok == "S":
            self.take()
            self.take("(")
            t = self.term()
            self.take(")")
            return Succ(t)
        if tok in SYMBOLS and self.peek(1) == "(":
            self.take()
            self.take("(")
            args = [self.term()]
            while self.peek() == ",":
                self.take()
                args.append(self.term())
            self.take(")")
            try:
                return Fn(tok, tuple(args))
            except ArithError as e:
                raise FormulaSyntaxError(str(e), pos) from None
        if _is_num_var(tok):
            self.take()
            return TVar(tok)
        raise FormulaSyntaxError(f"expected a term, found {tok!r}", pos)


def parse_formula(text: str) -> Formula:
    """Parse the concrete formula grammar (see :func:`show_formula`)."""
    p = _Parser(text)
    f = p.formula()
    if p.peek() != "<eof>":
        raise FormulaSyntaxError(f"trailing input {p.peek()!r}", p.pos())
    return f


def parse_term(text: str) -> ArithTerm:
    p = _Parser(text)
    t = p.term()
    if p.peek() != "<eof>":
        raise FormulaSyntaxError(f"trailing input {p.peek()!r}", p.pos())
    return t


__all__ = [
    "ArithError", "PositivityError", "CaptureError", "LanguageError", "FormulaSyntaxError",
    "PRSymbol", "SYMBOLS", "declare_symbol", "ArithTerm", "TVar", "Zero", "Succ", "Fn", "num",
    "eval_term", "Formula", "Eq", "Lt", "InSet", "InMu", "PNat", "Cand", "And", "Or", "Implies",
    "Not", "Forall", "Exists", "Pred", "set_pred", "mu_pred", "free_num_vars", "free_set_vars",
    "bound_vars", "subst_num", "subst_set", "rename_apart", "Sign", "positivity", "in_l_mu",
    "gg_translate", "friedman_translate", "gg_pred", "friedman_pred", "n_relativize", "realising_type", "MuPred", "Pre",
    "Ind", "PreN0", "PreNSucc", "IndN", "axiom", "realiser", "show_term", "show_formula",
    "parse_formula", "parse_term",
]
