"""Coterms: applicative terms over rule constants.

A coderivation reads as a term by identifying rule application with term
application.  Cyclic coderivations become finite equation systems
(:class:`RegularSystem`) whose right-hand sides refer to each other through
:class:`VarRef`.

Two reduction theories are implemented.  ``"r"`` interprets the iteration
rules (``mu_l_iter``, ``nat_iter``) through the ``iter``/``iterN`` constants
and right rules through constructors; ``"r_prime"`` interprets the cyclic
rules (``mu_l_unfold``, ``nat_cond``) and treats fixed-point unfolding as
transparent.  The greatest fixed-point rules have no reduction in either
theory and are rejected.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterator, Mapping, Sequence

from .build import Builder
from .calculus import (
    Coderivation, RuleInstance, Sequent, check, expected_premises, resolve_pos,
)
from .types import (
    NAT, UNIT, Arrow, Mu, Nat, Prod, Sum, TypeExpr, Var as TVar, show_type, substitute,
)

DEFAULT_FUEL = 1_000_000

THEORIES = ("r", "r_prime")
R_ONLY = frozenset({"mu_l_iter", "nat_iter"})
R_PRIME_ONLY = frozenset({"mu_l_unfold", "nat_cond"})
NU_RULES = frozenset({"nu_l", "nu_r_coiter", "nu_r_unfold"})


class CotermError(ValueError):
    pass


class TheoryMismatch(CotermError):
    """A term uses rules from both reduction theories, or from the other one."""


class Untypable(TypeError):
    pass


class EvalTimeout(RuntimeError):
    pass


class EvalStuck(RuntimeError):
    """Evaluation reached a weak head normal form that is not a numeral."""

    def __init__(self, term: "Coterm"):
        super().__init__(f"stuck at {show_coterm(term)}")
        self.term = term


# ------------------------------------------------------------------- syntax

class Coterm:
    __slots__ = ()

    def __call__(self, *args: "Coterm") -> "Coterm":
        return capp(self, *args)

    def __str__(self):
        return show_coterm(self)


@dataclass(frozen=True)
class RuleConst(Coterm):
    """A rule instance together with the sequent it concludes.

    The sequent fixes the lengths of the argument vectors the reduction rules
    match against.
    """

    rule: RuleInstance
    seq: Sequent

    @cached_property
    def premises(self) -> tuple[Sequent, ...]:
        return tuple(expected_premises(self.seq, self.rule))

    @property
    def arity(self) -> int:
        extra = 1 if self.rule.tag == "arrow_r" else 0
        return self.rule.arity + len(self.seq.ante) + extra


@dataclass(frozen=True)
class Gadget(Coterm):
    """A constructor or eliminator that appears in reducts.

    ``types`` annotates the instance: ``pair``/``proj0``/``proj1``/``inj0``/
    ``inj1`` carry the two component types, ``in`` the mu-type, ``iter`` the
    mu-type and the result type, ``iterN`` the result type.
    """

    name: str
    types: tuple = ()

    @property
    def arity(self) -> int:
        return GADGET_ARITY[self.name]


GADGET_ARITY = {
    "pair": 0, "proj0": 1, "proj1": 1, "in": 2, "iter": 2, "zero": 0,
    "succ": 0, "iterN": 3, "star": 0, "inj0": 0, "inj1": 0,
}


@dataclass(frozen=True)
class App(Coterm):
    fun: Coterm
    arg: Coterm


@dataclass(frozen=True)
class VarRef(Coterm):
    name: str


@dataclass(frozen=True)
class FreeVar(Coterm):
    """A variable identified by its name; ``type`` is an annotation for
    :func:`type_assign` and takes no part in equality."""

    name: str
    type: TypeExpr | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RegularSystem:
    definitions: Mapping[str, Coterm]
    entry: str

    def __post_init__(self):
        if self.entry not in self.definitions:
            raise CotermError(f"entry {self.entry!r} is not defined")
        for name, rhs in self.definitions.items():
            for ref in refs(rhs):
                if ref not in self.definitions:
                    raise CotermError(f"{name} refers to undefined {ref!r}")

    @property
    def term(self) -> Coterm:
        """The entry as a term; closed when the system is acyclic."""
        return self.definitions[self.entry]

    def is_closed_term(self) -> bool:
        return not refs(self.term)


@dataclass(frozen=True)
class TypedTerm:
    term: Coterm
    type: TypeExpr


def capp(f: Coterm, *args: Coterm) -> Coterm:
    for a in args:
        f = App(f, a)
    return f


def spine(t: Coterm) -> tuple[Coterm, list[Coterm]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def refs(t: Coterm) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, App):
            stack += (s.fun, s.arg)
        elif isinstance(s, VarRef):
            out.add(s.name)
    return out


def constants(t: Coterm) -> Iterator[Coterm]:
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, App):
            stack += (s.fun, s.arg)
        elif isinstance(s, (RuleConst, Gadget)):
            yield s


def subst_free(t: Coterm, env: Mapping[str, Coterm]) -> Coterm:
    if isinstance(t, FreeVar):
        return env.get(t.name, t)
    if isinstance(t, App):
        f, a = subst_free(t.fun, env), subst_free(t.arg, env)
        return t if f is t.fun and a is t.arg else App(f, a)
    return t


def show_coterm(t: Coterm) -> str:
    if isinstance(t, App):
        return f"({show_coterm(t.fun)} {show_coterm(t.arg)})"
    if isinstance(t, VarRef):
        return "@" + t.name
    if isinstance(t, FreeVar):
        return "?" + t.name
    if isinstance(t, Gadget):
        if t.types:
            return f"!{t.name}[{'; '.join(show_type(x) for x in t.types)}]"
        return "!" + t.name
    return f"<{t.rule} : {t.seq}>"


# ---------------------------------------------------------- coderivations

def coterm_of(c: Coderivation) -> RegularSystem:
    """Read a coderivation as a regular coterm.

    Nodes lying on a cycle get a definition of their own and are referenced
    through :class:`VarRef`; everything else is inlined, so an acyclic
    coderivation becomes a single closed term.  Hypothesis leaves become
    free variables typed by their curried sequent.
    """
    import networkx as nx

    for v in c.reachable():
        if c.nodes[v].rule.tag in NU_RULES:
            raise CotermError("greatest fixed points have no coterm reading")
    g = nx.DiGraph()
    for v in c.reachable():
        g.add_node(v)
        for w in c.nodes[v].premises:
            g.add_edge(v, w)
    cyclic = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1 or any(g.has_edge(v, v) for v in comp):
            cyclic |= comp
    named = cyclic | {c.root}

    def name(v) -> str:
        return f"n{v}"

    memo: dict = {}

    def build(v, top: bool) -> Coterm:
        if v in named and not top:
            return VarRef(name(v))
        if not top and v in memo:
            return memo[v]
        node = c.nodes[v]
        if node.rule.tag == "hyp":
            t: Coterm = FreeVar(node.rule.name or "H", curry(node.seq))
        else:
            t = RuleConst(node.rule, node.seq)
            for w in node.premises:
                t = App(t, build(w, False))
        memo[v] = t
        return t

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))
    defs = {name(v): build(v, True) for v in sorted(named, key=repr)}
    if not cyclic:
        defs = {name(c.root): defs[name(c.root)]}
    return RegularSystem(defs, name(c.root))


def curry(seq: Sequent) -> TypeExpr:
    t = seq.succ
    for a in reversed(seq.ante):
        t = Arrow(a, t)
    return t


def numeral_term(n: int) -> Coterm:
    zero = RuleConst(RuleInstance("nat_zero"), Sequent([], NAT))
    succ = RuleConst(RuleInstance("nat_succ"), Sequent([], NAT))
    t: Coterm = zero
    for _ in range(n):
        t = App(succ, t)
    return t


def theory_of(t: Coterm | RegularSystem) -> str | None:
    """The theory a term needs, ``None`` when it fits both."""
    tags = set()
    terms = t.definitions.values() if isinstance(t, RegularSystem) else [t]
    for s in terms:
        for k in constants(s):
            if isinstance(k, RuleConst):
                tags.add(k.rule.tag)
            elif k.name in ("in", "iter", "iterN"):
                tags.add("mu_l_iter")
    if tags & NU_RULES:
        raise CotermError("greatest fixed points have no coterm reading")
    r, rp = bool(tags & R_ONLY), bool(tags & R_PRIME_ONLY)
    if r and rp:
        raise TheoryMismatch("term mixes iteration rules with cyclic rules")
    return "r" if r else "r_prime" if rp else None


# --------------------------------------------------------------- reduction

def _is_zero(t: Coterm) -> bool:
    return (isinstance(t, RuleConst) and t.rule.tag == "nat_zero") or t == Gadget("zero")


def _succ_arg(t: Coterm) -> Coterm | None:
    if isinstance(t, App) and t.fun == Gadget("succ"):
        return t.arg
    return None


def _ctor_arg(t: Coterm, name: str) -> tuple | None:
    head, args = spine(t)
    if isinstance(head, Gadget) and head.name == name:
        return tuple(args)
    return None


@lru_cache(maxsize=None)
def _functor_coterm_cached(mu: Mu, tau: TypeExpr) -> Coterm:
    from .library import functor_node

    b = Builder()
    h = b.hyp(Sequent([mu], tau), "H")
    f = functor_node(b, mu.body, mu.var, h)
    return coterm_of(b.finish(f)).term


def functor_coterm(mu: Mu, tau: TypeExpr, f: Coterm) -> Coterm:
    """``sigma(f)`` for ``mu = mu X. sigma``: a term of type
    ``sigma(mu) -> sigma(tau)`` when ``f : mu -> tau``."""
    return subst_free(_functor_coterm_cached(mu, tau), {"H": f})


_PLACEHOLDER = TVar("_tau")


def _iter_result_type(t: Coterm) -> TypeExpr:
    try:
        ty = type_assign(t)
    except Untypable:
        return _PLACEHOLDER
    return ty.codomain if isinstance(ty, Arrow) else _PLACEHOLDER


def _fire(head: Coterm, args: Sequence[Coterm], theory: str,
          force: Callable[[Coterm], Coterm]) -> Coterm | None:
    """Contract ``head args`` where ``len(args) == head.arity``.

    ``force`` computes the shape of arguments the rule must inspect; the
    syntactic enumerator passes the identity.
    """
    if isinstance(head, Gadget):
        return _fire_gadget(head, args, force)
    rule, seq = head.rule, head.seq
    tag = rule.tag
    if tag in NU_RULES:
        raise CotermError(f"{tag} has no reduction")
    if tag in R_ONLY and theory != "r" or tag in R_PRIME_ONLY and theory != "r_prime":
        raise TheoryMismatch(f"{tag} does not belong to theory {theory}")
    m = rule.arity
    prem, U = list(args[:m]), list(args[m:])
    p = resolve_pos(seq, rule)
    k = rule.split or 0
    if tag == "id":
        return U[0]
    if tag == "exchange":
        return capp(prem[0], *(U[:p] + [U[p + 1], U[p]] + U[p + 2:]))
    if tag in ("weaken", "unit_l"):
        return capp(prem[0], *(U[:p] + U[p + 1:]))
    if tag == "contract":
        return capp(prem[0], *(U[:p] + [U[p], U[p]] + U[p + 1:]))
    if tag == "cut":
        q = rule.pos if rule.pos is not None else len(U) - k
        return capp(prem[1], *(U[k:k + q] + [capp(prem[0], *U[:k])] + U[k + q:]))
    if tag == "arrow_r":
        return capp(prem[0], *U)
    if tag in ("arrow_l", "mu_l_iter", "nat_iter"):
        q = p - k
        rest = U[:p] + U[p + 1:]
        g, d = rest[:k], rest[k:]
        if tag == "arrow_l":
            mid = App(U[p], capp(prem[0], *g))
        elif tag == "mu_l_iter":
            it = Gadget("iter", (seq.ante[p], rule.aux))
            mid = capp(it, capp(prem[0], *g), U[p])
        else:
            it = Gadget("iterN", (rule.aux,))
            mid = capp(it, capp(prem[0], *g), capp(prem[1], *g), U[p])
        return capp(prem[-1], *(d[:q] + [mid] + d[q:]))
    if tag == "prod_r":
        pair = Gadget("pair", (seq.succ.left, seq.succ.right))
        return capp(pair, capp(prem[0], *U[:k]), capp(prem[1], *U[k:]))
    if tag == "prod_l":
        z, ty = U[p], seq.ante[p]
        ts = (ty.left, ty.right)
        return capp(prem[0], *(U[:p] + [App(Gadget("proj0", ts), z), App(Gadget("proj1", ts), z)] + U[p + 1:]))
    if tag == "mu_r":
        body = capp(prem[0], *U)
        return App(Gadget("in", (seq.succ,)), body) if theory == "r" else body
    if tag == "mu_l_unfold":
        return capp(prem[0], *U)
    if tag == "nat_succ":
        return App(Gadget("succ"), capp(prem[0], *U))
    if tag in ("sum_r0", "sum_r1"):
        ty = seq.succ
        return App(Gadget("inj" + tag[-1], (ty.left, ty.right)), capp(prem[0], *U))
    if tag == "nat_cond":
        z = force(U[p])
        if _is_zero(z):
            return capp(prem[0], *(U[:p] + U[p + 1:]))
        y = _succ_arg(z)
        if y is None:
            return None
        return capp(prem[1], *(U[:p] + [y] + U[p + 1:]))
    if tag == "sum_l":
        z = force(U[p])
        for i in (0, 1):
            v = _ctor_arg(z, f"inj{i}")
            if v is not None and len(v) == 1:
                return capp(prem[i], *(U[:p] + [v[0]] + U[p + 1:]))
        return None
    return None


def _fire_gadget(g: Gadget, args, force) -> Coterm | None:
    name = g.name
    if name in ("proj0", "proj1"):
        v = _ctor_arg(force(args[0]), "pair")
        if v is not None and len(v) == 2:
            return v[int(name[-1])]
        return None
    if name == "iter":
        return App(args[1], args[0])
    if name == "in":
        (mu,) = g.types
        x, t = args
        tau = _iter_result_type(t)
        it = App(Gadget("iter", (mu, tau)), t)
        return App(t, App(functor_coterm(mu, tau, it), x))
    if name == "iterN":
        s, t, n = args
        z = force(n)
        if _is_zero(z):
            return s
        y = _succ_arg(z)
        if y is None:
            return None
        return App(t, capp(g, s, t, y))
    return None


def _redex_arity(h: Coterm) -> int:
    if isinstance(h, (RuleConst, Gadget)):
        return h.arity
    return -1


def reduce_step(t: Coterm, theory: str = "r") -> list[tuple[tuple, Coterm]]:
    """Every syntactic redex of ``t`` as ``(path, contractum)``.

    A path is a sequence of ``0`` (function) and ``1`` (argument) choices
    from the root to the redex.
    """
    if theory not in THEORIES:
        raise ValueError(f"unknown theory {theory!r}")
    out = []
    stack = [((), t)]
    while stack:
        path, s = stack.pop()
        head, args = spine(s)
        ar = _redex_arity(head)
        if ar > 0 and len(args) == ar:
            new = _fire(head, args, theory, lambda a: a)
            if new is not None:
                out.append((path, new))
        if isinstance(s, App):
            stack.append((path + (1,), s.arg))
            stack.append((path + (0,), s.fun))
    out.sort(key=lambda pr: pr[0])
    return out


def replace_at(t: Coterm, path: Sequence[int], new: Coterm) -> Coterm:
    if not path:
        return new
    if not isinstance(t, App):
        raise CotermError("path leaves the term")
    if path[0] == 0:
        return App(replace_at(t.fun, path[1:], new), t.arg)
    return App(t.fun, replace_at(t.arg, path[1:], new))


def subterm(t: Coterm, path: Sequence[int]) -> Coterm:
    for d in path:
        t = t.fun if d == 0 else t.arg
    return t


# --------------------------------------------------------------- evaluation

class Evaluator:
    """Lazy head evaluation on the application spine.

    References into the system are unfolded only when they head the spine.
    Weak head normal forms of arguments are memoized by identity, which
    shares work between the copies a contraction makes.
    """

    def __init__(self, system: RegularSystem | None = None, theory: str = "r",
                 fuel: int = DEFAULT_FUEL):
        if theory not in THEORIES:
            raise ValueError(f"unknown theory {theory!r}")
        self.defs = dict(system.definitions) if system is not None else {}
        self.theory = theory
        self.fuel = fuel
        self.steps = 0
        self._memo: dict[int, tuple] = {}

    def _tick(self):
        self.steps += 1
        if self.steps > self.fuel:
            raise EvalTimeout(f"no value within {self.fuel} steps")

    def whnf(self, t: Coterm) -> Coterm:
        hit = self._memo.get(id(t))
        if hit is not None and hit[0] is t:
            return hit[1]
        orig = t
        while True:
            head, args = spine(t)
            if isinstance(head, VarRef):
                if head.name not in self.defs:
                    raise CotermError(f"unbound reference @{head.name}")
                self._tick()
                t = capp(self.defs[head.name], *args)
                continue
            ar = _redex_arity(head)
            if ar <= 0 or len(args) < ar:
                break
            new = _fire(head, args[:ar], self.theory, self.whnf)
            if new is None:
                break
            self._tick()
            t = capp(new, *args[ar:])
        self._memo[id(orig)] = (orig, t)
        return t

    def numeral(self, t: Coterm) -> int:
        n = 0
        while True:
            w = self.whnf(t)
            if _is_zero(w):
                return n
            y = _succ_arg(w)
            if y is None:
                raise EvalStuck(w)
            n += 1
            t = y


def _resolve_theory(target, theory: str | None) -> str:
    needed = theory_of(target)
    if theory is None:
        return needed or "r"
    if needed is not None and needed != theory:
        raise TheoryMismatch(f"term needs theory {needed}, asked for {theory}")
    return theory


def eval_to_numeral(target: Coterm | RegularSystem | Coderivation, args: Sequence[int] = (),
                    theory: str | None = None, fuel: int = DEFAULT_FUEL) -> int:
    """Evaluate a term applied to numeral arguments to a natural number.

    Raises :class:`EvalTimeout` when ``fuel`` contraction steps do not
    suffice and :class:`EvalStuck` when a non-numeral value is reached.
    """
    if isinstance(target, Coderivation):
        target = coterm_of(target)
    system = target if isinstance(target, RegularSystem) else None
    entry = VarRef(system.entry) if system else target
    theory = _resolve_theory(target, theory)
    ev = Evaluator(system, theory, fuel)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 50_000))
    try:
        return ev.numeral(capp(entry, *(numeral_term(n) for n in args)))
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------- extensionality

def _first_redex(t: Coterm, theory: str, defs: Mapping[str, Coterm]) -> Coterm | None:
    """One leftmost-outermost step; references heading an application
    spine count as redexes (they unfold), references elsewhere stay folded."""
    head, args = spine(t)
    if isinstance(head, VarRef) and args and head.name in defs:
        return capp(defs[head.name], *args)
    ar = _redex_arity(head)
    if ar > 0 and len(args) >= ar:
        new = _fire(head, args[:ar], theory, lambda a: a)
        if new is not None:
            return capp(new, *args[ar:])
    for i, a in enumerate(args):
        s = _first_redex(a, theory, defs)
        if s is not None:
            return capp(head, *args[:i], s, *args[i + 1:])
    return None


def _inner_redex(t: Coterm, theory: str) -> Coterm | None:
    """One leftmost-innermost step that needs no reference unfolding."""
    head, args = spine(t)
    for i, a in enumerate(args):
        s = _inner_redex(a, theory)
        if s is not None:
            return capp(head, *args[:i], s, *args[i + 1:])
    ar = _redex_arity(head)
    if ar > 0 and len(args) >= ar:
        new = _fire(head, args[:ar], theory, lambda a: a)
        if new is not None:
            return capp(new, *args[ar:])
    return None


def _unfold_first(t: Coterm, defs: Mapping[str, Coterm]) -> Coterm | None:
    head, args = spine(t)
    if isinstance(head, VarRef) and args and head.name in defs:
        return capp(defs[head.name], *args)
    for i, a in enumerate(args):
        s = _unfold_first(a, defs)
        if s is not None:
            return capp(head, *args[:i], s, *args[i + 1:])
    return None


def normal_order_sequence(t: Coterm, theory: str = "r_prime",
                          system: RegularSystem | None = None, max_steps: int = 200) -> list[Coterm]:
    """Leftmost-outermost reducts of ``t``, starting with ``t`` itself."""
    defs = system.definitions if system is not None else {}
    out = [t]
    for _ in range(max_steps):
        t = _first_redex(t, theory, defs)
        if t is None:
            break
        out.append(t)
    return out


def lazy_unfolding_sequence(t: Coterm, theory: str = "r_prime",
                            system: RegularSystem | None = None, max_steps: int = 200) -> list[Coterm]:
    """Reducts of ``t`` contracting innermost redexes first and unfolding a
    reference only when no other redex is left.

    Two sides of an equation between regular coterms tend to meet under this
    strategy, because both stop at the same folded references.
    """
    defs = system.definitions if system is not None else {}
    out = [t]
    for _ in range(max_steps):
        s = _inner_redex(t, theory)
        if s is None:
            s = _unfold_first(t, defs)
        if s is None:
            break
        t = s
        out.append(t)
    return out


def tree_equal(s: Coterm, t: Coterm, system: RegularSystem | None = None) -> bool:
    """Equality of the (possibly infinite) trees denoted by two coterms.

    References are unfolded on demand; pairs already under comparison are
    assumed equal, which is exact for regular trees.
    """
    defs = system.definitions if system is not None else {}
    seen = set()
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        while isinstance(a, VarRef) and a.name in defs:
            a = defs[a.name]
        while isinstance(b, VarRef) and b.name in defs:
            b = defs[b.name]
        if a is b or (a, b) in seen:
            continue
        seen.add((a, b))
        if isinstance(a, App) and isinstance(b, App):
            stack.append((a.fun, b.fun))
            stack.append((a.arg, b.arg))
        elif a != b:
            return False
    return True


def _shape_key(t: Coterm, defs: Mapping[str, Coterm], depth: int):
    """The tree of ``t`` cut off at ``depth``; equal trees have equal keys."""
    while isinstance(t, VarRef) and t.name in defs:
        t = defs[t.name]
    if isinstance(t, App):
        if depth == 0:
            return "..."
        return (_shape_key(t.fun, defs, depth - 1), _shape_key(t.arg, defs, depth - 1))
    return t


def _meet(left: list, right: list, system: RegularSystem | None, depth: int = 12) -> bool:
    defs = system.definitions if system is not None else {}
    index: dict = {}
    for u in left:
        index.setdefault(_shape_key(u, defs, depth), []).append(u)
    for v in right:
        for u in index.get(_shape_key(v, defs, depth), ()):
            if tree_equal(u, v, system):
                return True
    return False


def weak_extensional_eq(s: Coterm, t: Coterm, fresh_budget: int = 3,
                        system: RegularSystem | None = None, max_steps: int = 200) -> bool:
    """Semi-decide extensional equality of two coterms.

    Both sides are applied to ``0 .. fresh_budget`` fresh variables.  Each
    instance is first tested for a common leftmost-outermost reduct at the
    coterm level, where references into ``system`` stay folded so that
    regular coterms compare finitely; then through the lambda
    interpretation.  A ``True`` answer is sound; ``False`` means neither
    search found a common reduct.
    """
    from . import lam as L

    if s == t:
        return True
    target = RegularSystem({**(system.definitions if system else {}), "_s": s, "_t": t}, "_s")
    theory = theory_of(target) or "r_prime"
    sols: dict = {}
    lam_ok = True
    try:
        if system is not None:
            eqs = {n: L.embed(rhs, system_refs=True) for n, rhs in system.definitions.items()}
            sols = {n: L.solve_equations(eqs, n) for n in eqs}
        ls = L.embed(s, system_refs=True)
        lt = L.embed(t, system_refs=True)
        if sols:
            ls, lt = L.substitute(ls, sols), L.substitute(lt, sols)
    except L.FragmentError:
        lam_ok = False
    for k in range(fresh_budget + 1):
        xs = [FreeVar(f"_fresh{i}") for i in range(k)]
        for strategy in (lazy_unfolding_sequence, normal_order_sequence):
            left = strategy(capp(s, *xs), theory, system, max_steps)
            right = strategy(capp(t, *xs), theory, system, max_steps)
            if _meet(left, right, system):
                return True
        if lam_ok:
            lx = [L.Var(x.name) for x in xs]
            if L.joinable(L.app(ls, *lx), L.app(lt, *lx)):
                return True
    return False


# ---------------------------------------------------------- type assignment

def gadget_type(g: Gadget) -> TypeExpr:
    n, ts = g.name, g.types
    if n == "pair":
        a, b = ts
        return Arrow(a, Arrow(b, Prod(a, b)))
    if n in ("proj0", "proj1"):
        a, b = ts
        return Arrow(Prod(a, b), a if n == "proj0" else b)
    if n in ("inj0", "inj1"):
        a, b = ts
        return Arrow(a if n == "inj0" else b, Sum(a, b))
    if n == "in":
        (mu,) = ts
        return Arrow(substitute(mu.body, mu.var, mu), mu)
    if n == "iter":
        mu, tau = ts
        return Arrow(Arrow(substitute(mu.body, mu.var, tau), tau), Arrow(mu, tau))
    if n == "zero":
        return NAT
    if n == "succ":
        return Arrow(NAT, NAT)
    if n == "iterN":
        (sig,) = ts
        return Arrow(sig, Arrow(Arrow(sig, sig), Arrow(NAT, sig)))
    if n == "star":
        return UNIT
    raise Untypable(f"unknown constant {n}")


def type_assign(t: Coterm) -> TypeExpr:
    """The type of a closed coterm, or :class:`Untypable`.

    Rule constants get ``(G1 -> t1) -> ... -> (Gm -> tm) -> G -> t``;
    application either eliminates an arrow or, for a term of a mu-type,
    iterates: ``t : mu X. s`` and ``u : s(r) -> r`` give ``t u : r``.
    """
    if isinstance(t, RuleConst):
        ty = curry(t.seq)
        for p in reversed(t.premises):
            ty = Arrow(curry(p), ty)
        return ty
    if isinstance(t, Gadget):
        return gadget_type(t)
    if isinstance(t, FreeVar):
        if t.type is None:
            raise Untypable(f"free variable {t.name} has no type")
        return t.type
    if isinstance(t, VarRef):
        raise Untypable("references have no type outside a system")
    f, a = type_assign(t.fun), type_assign(t.arg)
    if isinstance(f, Arrow) and f.domain == a:
        return f.codomain
    if isinstance(f, Mu) and isinstance(a, Arrow) and a.domain == substitute(f.body, f.var, a.codomain):
        return a.codomain
    raise Untypable(f"cannot apply {f} to {a}")


# ------------------------------------------------------ terms to derivations

def _uncurry(b: Builder, p, n: int) -> int:
    """From ``D => A1 -> ... -> An -> t`` derive ``D, A1, ..., An => t``."""
    for _ in range(n):
        f = b.succ_of(p)
        if not isinstance(f, Arrow):
            raise CotermError("uncurry of a non-arrow")
        lft = b.arrow_l(b.id(f.domain), b.id(f.codomain), 0)  # A, A->B => B
        p = b.cut(p, lft, 1)
    return p


def _curry_node(b: Builder, p, n: int) -> int:
    for _ in range(n):
        p = b.arrow_r(p)
    return p


def _arity_of(ty: TypeExpr) -> int:
    n = 0
    while isinstance(ty, Arrow):
        n += 1
        ty = ty.codomain
    return n


def _hyp_node(b: Builder, seq: Sequent) -> int:
    """``G -> t, G => t`` for premise sequent ``G => t``."""
    h = curry(seq)
    return _uncurry(b, b.id(h), len(seq.ante))


def _rule_node(b: Builder, k: RuleConst) -> int:
    """A closed derivation of the curried type of a rule constant."""
    rule, seq = k.rule, k.seq
    tag = rule.tag
    prem = [_hyp_node(b, s) for s in k.premises]
    m = len(prem)
    n = len(seq.ante)
    p = resolve_pos(seq, rule)
    split = rule.split or 0
    if tag == "id":
        node = b.id(seq.succ)
    elif tag in ("nat_zero",):
        node = b.nat_zero()
    elif tag == "exchange":
        node = b.exchange(prem[0], p + 1)
    elif tag == "weaken":
        node = b.weaken(prem[0], seq.ante[p], p + 1)
    elif tag == "contract":
        node = b.contract(prem[0], p + 1)
    elif tag == "arrow_r":
        node = b.arrow_r(prem[0])
    elif tag == "prod_l":
        node = b.prod_l(prem[0], p + 1)
    elif tag == "mu_r":
        node = b.mu_r(prem[0], seq.succ)
    elif tag == "nat_succ":
        node = b.nat_succ(prem[0])
    elif tag == "cut":
        q = rule.pos if rule.pos is not None else n - split
        node = b.cut(prem[0], prem[1], q + 1)
        # H1, G, H2, D  ->  H1, H2, G, D
        node = b.move(node, 1 + split, 1)
    elif tag == "prod_r":
        node = b.move(b.prod_r(prem[0], prem[1]), 1 + split, 1)
    elif tag in ("arrow_l", "mu_l_iter"):
        q = p - split
        if tag == "arrow_l":
            node = b.arrow_l(prem[0], prem[1], q + 1)
        else:
            node = b.mu_l_iter(prem[0], prem[1], seq.ante[p], q + 1)
        node = b.move(node, 1 + split, 1)
    elif tag == "nat_iter":
        q = p - split
        h1, h2 = curry(k.premises[0]), curry(k.premises[1])
        base = b.weaken(prem[0], h2, 1)  # H1, H2, G => s
        step = b.weaken(prem[1], h1, 0)  # H1, H2, G, s => s
        node = b.nat_iter(base, step, prem[2], q + 1)  # H1, H2, G, H3, D'
        node = b.move(node, 2 + split, 2)
    elif tag == "nat_cond":
        h1, h2 = curry(k.premises[0]), curry(k.premises[1])
        zero = b.weaken(prem[0], h2, 1)
        succ = b.weaken(prem[1], h1, 0)
        node = b.nat_cond(zero, succ, p + 2)
    else:
        raise CotermError(f"no derivation for constant {tag}")
    if b.seq(node).ante[m:] != seq.ante or b.seq(node).succ != seq.succ:  # pragma: no cover
        raise CotermError(f"constant derivation for {tag} has the wrong shape")
    return _curry_node(b, node, n + m)


def _gadget_node(b: Builder, g: Gadget) -> int:
    n, ts = g.name, g.types
    if n == "pair":
        return _curry_node(b, b.prod_r(b.id(ts[0]), b.id(ts[1])), 2)
    if n in ("proj0", "proj1"):
        a, c = ts
        if n == "proj0":
            node = b.prod_l(b.weaken(b.id(a), c), 0)
        else:
            node = b.prod_l(b.weaken(b.id(c), a, 0), 0)
        return _curry_node(b, node, 1)
    if n == "in":
        (mu,) = ts
        return _curry_node(b, b.mu_r(b.id(substitute(mu.body, mu.var, mu)), mu), 1)
    if n == "iter":
        mu, tau = ts
        step = _hyp_node(b, Sequent([substitute(mu.body, mu.var, tau)], tau))
        return _curry_node(b, b.mu_l_iter(step, b.id(tau), mu), 2)
    if n == "zero":
        return b.nat_zero()
    if n == "succ":
        return _curry_node(b, b.nat_succ(b.id(NAT)), 1)
    if n == "iterN":
        (sig,) = ts
        f = Arrow(sig, sig)
        base = b.weaken(b.id(sig), f)  # s, s->s => s
        step = b.weaken(_hyp_node(b, Sequent([sig], sig)), sig, 0)  # s, s->s, s => s
        return _curry_node(b, b.nat_iter(base, step, b.id(sig)), 3)
    raise CotermError(f"no derivation for constant {n}")


def _term_node(b: Builder, t: Coterm) -> tuple[int, TypeExpr]:
    if isinstance(t, RuleConst):
        return _rule_node(b, t), type_assign(t)
    if isinstance(t, Gadget):
        return _gadget_node(b, t), gadget_type(t)
    if not isinstance(t, App):
        raise CotermError(f"cannot compile {show_coterm(t)}")
    pf, f = _term_node(b, t.fun)
    pa, a = _term_node(b, t.arg)
    if isinstance(f, Arrow) and f.domain == a:
        return b.cut(pa, _uncurry(b, pf, 1), 0), f.codomain
    if isinstance(f, Mu) and isinstance(a, Arrow):
        tau = a.codomain
        it = b.mu_l_iter(_uncurry(b, pa, 1), b.id(tau), f)  # mu => tau
        return b.cut(pf, it, 0), tau
    raise Untypable(f"cannot apply {f} to {a}")


def term_to_derivation(t: TypedTerm | Coterm) -> Coderivation:
    """Compile a closed typed term into a derivation of ``=> type``."""
    term = t.term if isinstance(t, TypedTerm) else t
    ty = type_assign(term)
    if isinstance(t, TypedTerm) and t.type != ty:
        raise Untypable(f"term has type {ty}, not {t.type}")
    b = Builder()
    node, got = _term_node(b, term)
    assert got == ty
    return b.finish(node)


__all__ = [
    "Coterm", "RuleConst", "Gadget", "App", "VarRef", "FreeVar", "RegularSystem",
    "TypedTerm", "coterm_of", "reduce_step", "eval_to_numeral", "weak_extensional_eq",
    "type_assign", "term_to_derivation", "numeral_term", "functor_coterm",
    "TheoryMismatch", "Untypable", "EvalTimeout", "EvalStuck", "CotermError",
    "capp", "spine", "replace_at", "subterm", "show_coterm", "theory_of",
    "normal_order_sequence", "lazy_unfolding_sequence", "tree_equal", "Evaluator", "curry", "gadget_type",
]
