"""Fixed-point type syntax: constructors, parsing, polarity, substitution and
the Fischer-Ladner closure with its priority order.

Types are immutable.  Equality and hashing are up to renaming of bound
variables: two types compare equal when their de Bruijn forms coincide.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import networkx as nx

__all__ = [
    "TypeExpr", "Var", "Unit", "Nat", "Sum", "Prod", "Arrow", "Mu", "Nu",
    "Polarity", "FLOrder", "TypeSyntaxError", "UnboundTypeVariable",
    "NAT_ENC", "UNIT", "NAT", "parse_type", "show_type", "polarity", "is_type",
    "substitute", "unfold", "free_vars", "fl_closure", "fl_order",
    "rename_apart", "neg", "list_type", "stream_type",
]


class TypeSyntaxError(ValueError):
    """Raised on malformed type text; ``pos`` is the character offset."""

    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class UnboundTypeVariable(TypeSyntaxError):
    pass


class TypeExpr:
    """Base class of the type syntax.  Subclasses are frozen dataclasses."""

    __match_args__: tuple = ()

    @cached_property
    def key(self) -> tuple:
        return _debruijn(self, ())

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, TypeExpr):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        return show_type(self)

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children())

    def children(self) -> tuple["TypeExpr", ...]:
        return ()

    @cached_property
    def free(self) -> frozenset:
        return free_vars(self)


@dataclass(frozen=True, eq=False)
class Var(TypeExpr):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=False)
class Unit(TypeExpr):
    def __repr__(self):
        return "Unit()"


@dataclass(frozen=True, eq=False)
class Nat(TypeExpr):
    """The native natural-number constant (distinct from ``mu X. 1 + X``)."""

    def __repr__(self):
        return "Nat()"


@dataclass(frozen=True, eq=False)
class Sum(TypeExpr):
    left: TypeExpr
    right: TypeExpr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=False)
class Prod(TypeExpr):
    left: TypeExpr
    right: TypeExpr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=False)
class Arrow(TypeExpr):
    domain: TypeExpr
    codomain: TypeExpr

    def children(self):
        return (self.domain, self.codomain)


@dataclass(frozen=True, eq=False)
class Mu(TypeExpr):
    var: str
    body: TypeExpr

    def children(self):
        return (self.body,)


@dataclass(frozen=True, eq=False)
class Nu(TypeExpr):
    var: str
    body: TypeExpr

    def children(self):
        return (self.body,)


UNIT = Unit()
NAT = Nat()
NAT_ENC = Mu("X", Sum(UNIT, Var("X")))


def neg(t: TypeExpr) -> TypeExpr:
    """``t -> N`` with the native natural-number type as answer type."""
    return Arrow(t, NAT)


def list_type(elem: TypeExpr = NAT_ENC) -> TypeExpr:
    return Mu("L", Sum(UNIT, Prod(elem, Var("L"))))


def stream_type(elem: TypeExpr = NAT_ENC) -> TypeExpr:
    return Nu("S", Prod(elem, Var("S")))


def _debruijn(t: TypeExpr, env: tuple) -> tuple:
    if isinstance(t, Var):
        for i, n in enumerate(env):
            if n == t.name:
                return ("b", i)
        return ("v", t.name)
    if isinstance(t, Unit):
        return ("1",)
    if isinstance(t, Nat):
        return ("N",)
    if isinstance(t, Sum):
        return ("+", _debruijn(t.left, env), _debruijn(t.right, env))
    if isinstance(t, Prod):
        return ("*", _debruijn(t.left, env), _debruijn(t.right, env))
    if isinstance(t, Arrow):
        return ("->", _debruijn(t.domain, env), _debruijn(t.codomain, env))
    if isinstance(t, Mu):
        return ("mu", _debruijn(t.body, (t.var,) + env))
    if isinstance(t, Nu):
        return ("nu", _debruijn(t.body, (t.var,) + env))
    raise TypeError(f"not a type: {t!r}")


def free_vars(t: TypeExpr) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, (Mu, Nu)):
        return t.body.free - {t.var}
    out: frozenset = frozenset()
    for c in t.children():
        out = out | c.free
    return out


def _all_names(t: TypeExpr) -> set:
    names = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            names.add(s.name)
        elif isinstance(s, (Mu, Nu)):
            names.add(s.var)
        stack.extend(s.children())
    return names


def _fresh(base: str, avoid: set) -> str:
    stem = base.rstrip("0123456789'") or "X"
    if base not in avoid:
        return base
    for i in itertools.count(1):
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError  # pragma: no cover


def _rebuild(t: TypeExpr, kids: list) -> TypeExpr:
    if isinstance(t, Sum):
        return Sum(*kids)
    if isinstance(t, Prod):
        return Prod(*kids)
    if isinstance(t, Arrow):
        return Arrow(*kids)
    if isinstance(t, Mu):
        return Mu(t.var, kids[0])
    if isinstance(t, Nu):
        return Nu(t.var, kids[0])
    return t


def substitute(sigma: TypeExpr, x: str, tau: TypeExpr) -> TypeExpr:
    """Capture-avoiding substitution ``sigma[tau/x]``."""
    if x not in sigma.free:
        return sigma
    if isinstance(sigma, Var):
        return tau if sigma.name == x else sigma
    if isinstance(sigma, (Mu, Nu)):
        y, body = sigma.var, sigma.body
        if y in tau.free:
            z = _fresh(y, _all_names(body) | set(tau.free) | {x})
            body = substitute(body, y, Var(z))
            y = z
        return type(sigma)(y, substitute(body, x, tau))
    return _rebuild(sigma, [substitute(c, x, tau) for c in sigma.children()])


def unfold(t: TypeExpr) -> TypeExpr:
    """``sigma(mu X. sigma)`` for a fixed-point type ``mu X. sigma`` (or nu)."""
    if not isinstance(t, (Mu, Nu)):
        raise TypeError(f"cannot unfold non-fixed-point type {show_type(t)}")
    return substitute(t.body, t.var, t)


def rename_apart(t: TypeExpr, avoid: Iterable[str] = ()) -> TypeExpr:
    """Return an alpha-equivalent type whose binders are pairwise distinct and
    distinct from its free variables and from ``avoid``."""
    used = set(t.free) | set(avoid)

    def go(s: TypeExpr) -> TypeExpr:
        if isinstance(s, (Mu, Nu)):
            z = _fresh(s.var, used)
            used.add(z)
            body = substitute(s.body, s.var, Var(z)) if z != s.var else s.body
            return type(s)(z, go(body))
        return _rebuild(s, [go(c) for c in s.children()])

    return go(t)


class Polarity(NamedTuple):
    positive: bool
    negative: bool


def polarity(sigma: TypeExpr, x: str) -> Polarity:
    """Whether ``x`` occurs only positively / only negatively in ``sigma``.

    An absent variable is both positive and negative.
    """
    if x not in sigma.free:
        return Polarity(True, True)
    if isinstance(sigma, Var):
        return Polarity(True, False)
    if isinstance(sigma, (Sum, Prod)):
        a, b = polarity(sigma.left, x), polarity(sigma.right, x)
        return Polarity(a.positive and b.positive, a.negative and b.negative)
    if isinstance(sigma, Arrow):
        a, b = polarity(sigma.domain, x), polarity(sigma.codomain, x)
        return Polarity(a.negative and b.positive, a.positive and b.negative)
    if isinstance(sigma, (Mu, Nu)):
        return polarity(sigma.body, x)
    raise TypeError(sigma)  # pragma: no cover


def is_type(sigma: TypeExpr) -> bool:
    """True when every fixed-point body is positive in its bound variable."""
    if isinstance(sigma, (Mu, Nu)):
        if not polarity(sigma.body, sigma.var).positive:
            return False
    return all(is_type(c) for c in sigma.children())


# ---------------------------------------------------------------- printing

def show_type(t: TypeExpr) -> str:
    return _show(t, 0)


def _show(t: TypeExpr, prec: int) -> str:
    # prec: 0 arrow context, 1 sum operand, 2 product operand, 3 atom
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Unit):
        return "1"
    if isinstance(t, Nat):
        return "N"
    if isinstance(t, (Mu, Nu)):
        kw = "mu" if isinstance(t, Mu) else "nu"
        s = f"{kw} {t.var}. {_show(t.body, 0)}"
        return s if prec == 0 else f"({s})"
    if isinstance(t, Arrow):
        s = f"{_show(t.domain, 1)} -> {_show(t.codomain, 0)}"
        return s if prec == 0 else f"({s})"
    if isinstance(t, Sum):
        s = f"{_show(t.left, 1)} + {_show(t.right, 2)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(t, Prod):
        s = f"{_show(t.left, 2)} * {_show(t.right, 3)}"
        return s if prec <= 2 else f"({s})"
    raise TypeError(t)  # pragma: no cover


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(->)|([()+*.])|([A-Za-z_][A-Za-z0-9_']*)|(1))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise TypeSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        toks.append((m.group(m.lastindex), start))
        pos = m.end()
    toks.append(("<eof>", len(text)))
    return toks


class _TypeParser:
    def __init__(self, text: str, free: Iterable[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.free = set(free)

    def peek(self) -> str:
        return self.toks[self.i][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, want: str | None = None) -> str:
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            raise TypeSyntaxError(f"expected {want!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def arrow(self, scope: tuple) -> TypeExpr:
        if self.peek() in ("mu", "nu"):
            return self.binder(scope)
        left = self.sum(scope)
        if self.peek() == "->":
            self.take()
            return Arrow(left, self.arrow(scope))
        return left

    def binder(self, scope: tuple) -> TypeExpr:
        kw = self.take()
        pos = self.pos()
        name = self.take()
        if not _is_ident(name):
            raise TypeSyntaxError(f"expected a variable name, found {name!r}", pos)
        self.take(".")
        body = self.arrow(scope + (name,))
        return (Mu if kw == "mu" else Nu)(name, body)

    def sum(self, scope: tuple) -> TypeExpr:
        t = self.prod(scope)
        while self.peek() == "+":
            self.take()
            t = Sum(t, self.prod(scope))
        return t

    def prod(self, scope: tuple) -> TypeExpr:
        t = self.atom(scope)
        while self.peek() == "*":
            self.take()
            t = Prod(t, self.atom(scope))
        return t

    def atom(self, scope: tuple) -> TypeExpr:
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            t = self.arrow(scope)
            self.take(")")
            return t
        if tok in ("mu", "nu"):
            return self.binder(scope)
        if tok == "1":
            self.take()
            return UNIT
        if tok == "N":
            self.take()
            return NAT
        if _is_ident(tok):
            self.take()
            if tok not in scope and tok not in self.free:
                raise UnboundTypeVariable(f"unbound type variable {tok!r}", pos)
            return Var(tok)
        raise TypeSyntaxError(f"unexpected token {tok!r}", pos)


def _is_ident(tok: str) -> bool:
    return bool(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok)) and tok not in ("mu", "nu", "N")


def parse_type(text: str, free: Iterable[str] = ()) -> TypeExpr:
    """Parse the concrete type grammar.

    Variables not bound by an enclosing ``mu``/``nu`` are rejected unless
    listed in ``free``.  Binders are renamed apart on the way out.
    """
    p = _TypeParser(text, free)
    t = p.arrow(())
    if p.peek() != "<eof>":
        raise TypeSyntaxError(f"trailing input {p.peek()!r}", p.pos())
    return rename_apart(t)


# ------------------------------------------------- Fischer-Ladner closure

def _fl_successors(t: TypeExpr) -> tuple[TypeExpr, ...]:
    if isinstance(t, (Mu, Nu)):
        return (unfold(t),)
    return t.children()


def _proper_subformula(a: TypeExpr, b: TypeExpr) -> bool:
    """``a`` occurs as a proper syntactic subterm of ``b`` (up to alpha)."""
    stack = list(b.children())
    while stack:
        s = stack.pop()
        if s == a:
            return True
        stack.extend(s.children())
    return False


@dataclass(frozen=True)
class FLOrder:
    """A Fischer-Ladner closure with its preorder and a total priority order.

    ``elements`` is listed from lowest to highest priority, so ``rank[t]`` is
    the priority index of ``t`` (0 is the lowest priority).  ``le[i][j]``
    holds when ``elements[i]`` is below ``elements[j]`` in the FL preorder.
    """

    elements: tuple[TypeExpr, ...]
    le: tuple[tuple[bool, ...], ...]
    rank: dict = field(compare=False)

    def __contains__(self, t: TypeExpr) -> bool:
        return t in self.rank

    def __len__(self):
        return len(self.elements)

    def fl_le(self, a: TypeExpr, b: TypeExpr) -> bool:
        return self.le[self.rank[a]][self.rank[b]]

    def fl_equiv(self, a: TypeExpr, b: TypeExpr) -> bool:
        return self.fl_le(a, b) and self.fl_le(b, a)

    def higher(self, a: TypeExpr, b: TypeExpr) -> bool:
        """``a`` has strictly higher priority than ``b``."""
        return self.rank[a] > self.rank[b]

    def smallest(self, items: Iterable[TypeExpr]) -> TypeExpr:
        """The element of least priority among ``items``."""
        return min(items, key=self.rank.__getitem__)


def fl_order(types: Iterable[TypeExpr]) -> FLOrder:
    """FL closure of a set of types, ordered by priority.

    ``a`` has higher priority than ``b`` when ``b`` lies strictly below ``a``
    in the FL preorder, or when they are FL-equivalent and ``a`` is a proper
    subformula of ``b``.  The order is completed to a total one by ordering
    FL-classes topologically, then by decreasing size inside a class, then by
    the printed form.
    """
    g = nx.DiGraph()
    work = list(dict.fromkeys(types))
    seen = set(work)
    for t in work:
        g.add_node(t)
    while work:
        t = work.pop()
        for s in _fl_successors(t):
            g.add_edge(t, s)
            if s not in seen:
                seen.add(s)
                work.append(s)
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    cls_label = {c: min(show_type(t) for t in cond.nodes[c]["members"]) for c in cond.nodes}
    # Edges go from higher to lower in the FL preorder; sinks have the lowest
    # priority, so order the reversed condensation topologically.
    rev = cond.reverse(copy=True)
    class_order = list(nx.lexicographical_topological_sort(rev, key=lambda c: cls_label[c]))
    ordered: list[TypeExpr] = []
    for c in class_order:
        block = sorted(cond.nodes[c]["members"], key=lambda t: (-t.size, show_type(t), repr(t.key)))
        ordered.extend(block)
    rank = {t: i for i, t in enumerate(ordered)}
    reach = {c: nx.descendants(cond, c) | {c} for c in cond.nodes}
    le = tuple(
        tuple(members[a] in reach[members[b]] for b in ordered) for a in ordered
    )
    return FLOrder(tuple(ordered), le, rank)


def fl_closure(tau: TypeExpr) -> FLOrder:
    """The Fischer-Ladner closure of one type."""
    return fl_order([tau])
