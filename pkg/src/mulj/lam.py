"""Untyped lambda calculus: terms, normal-order beta-eta normalization, the
macro library, the semantics of rule constants and solutions of regular
equation systems by a fixed-point combinator.

Terms are kept as named trees for the public API and converted to a de
Bruijn tuple encoding for reduction:

* ``(0, i)``       bound variable with index ``i``
* ``(1, name)``    free variable
* ``(2, body)``    abstraction
* ``(3, f, a)``    application
"""
from __future__ import annotations

import itertools
import re
import sys
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

DEFAULT_FUEL = 1_000_000


class LamTimeout(RuntimeError):
    """Normalization ran out of fuel."""


class LamSyntaxError(ValueError):
    pass


class FragmentError(ValueError):
    """A rule or constant has no lambda semantics."""


class VerificationFailure(AssertionError):
    """A computed solution does not satisfy its defining equation."""


# ------------------------------------------------------------------ terms

class LamTerm:
    """Base class; equality is alpha-equivalence."""

    __slots__ = ()

    @cached_property
    def db(self) -> tuple:
        return to_db(self)

    def __eq__(self, other):
        if not isinstance(other, LamTerm):
            return NotImplemented
        return self.db == other.db

    def __hash__(self):
        return hash(self.db)

    def __str__(self):
        return show(self)

    def __call__(self, *args: "LamTerm") -> "LamTerm":
        return app(self, *args)


@dataclass(frozen=True, eq=False)
class Var(LamTerm):
    name: str


@dataclass(frozen=True, eq=False)
class Abs(LamTerm):
    name: str
    body: LamTerm


@dataclass(frozen=True, eq=False)
class App(LamTerm):
    fun: LamTerm
    arg: LamTerm


def lam(*names_and_body) -> LamTerm:
    """``lam("x", "y", body)`` is ``\\x y. body``."""
    *names, body = names_and_body
    for n in reversed(names):
        body = Abs(n, body)
    return body


def app(f: LamTerm, *args: LamTerm) -> LamTerm:
    for a in args:
        f = App(f, a)
    return f


def V(*names: str):
    out = [Var(n) for n in names]
    return out[0] if len(out) == 1 else out


def free_vars(t: LamTerm) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.name}
    return free_vars(t.fun) | free_vars(t.arg)


# ------------------------------------------------------------ de Bruijn

def to_db(t: LamTerm, env: tuple = ()) -> tuple:
    if isinstance(t, Var):
        for i, n in enumerate(env):
            if n == t.name:
                return (0, i)
        return (1, t.name)
    if isinstance(t, Abs):
        return (2, to_db(t.body, (t.name,) + env))
    return (3, to_db(t.fun, env), to_db(t.arg, env))


def _db_free(t: tuple, acc: set) -> set:
    tag = t[0]
    if tag == 1:
        acc.add(t[1])
    elif tag == 2:
        _db_free(t[1], acc)
    elif tag == 3:
        _db_free(t[1], acc)
        _db_free(t[2], acc)
    return acc


def from_db(t: tuple) -> LamTerm:
    avoid = _db_free(t, set())
    fresh = (n for n in (f"x{i}" for i in itertools.count()) if n not in avoid)
    names: dict[int, str] = {}

    def go(s, env):
        tag = s[0]
        if tag == 0:
            return Var(env[s[1]])
        if tag == 1:
            return Var(s[1])
        if tag == 2:
            depth = len(env)
            if depth not in names:
                names[depth] = next(fresh)
            n = names[depth]
            return Abs(n, go(s[1], (n,) + env))
        return App(go(s[1], env), go(s[2], env))

    return go(t, ())


def _shift(t: tuple, d: int, cutoff: int) -> tuple:
    tag = t[0]
    if tag == 0:
        return (0, t[1] + d) if t[1] >= cutoff else t
    if tag == 1:
        return t
    if tag == 2:
        return (2, _shift(t[1], d, cutoff + 1))
    return (3, _shift(t[1], d, cutoff), _shift(t[2], d, cutoff))


def _loose(t: tuple, depth: int = 0) -> bool:
    """Does ``t`` have a bound-variable index reaching outside ``depth`` binders?"""
    tag = t[0]
    if tag == 0:
        return t[1] >= depth
    if tag == 1:
        return False
    if tag == 2:
        return _loose(t[1], depth + 1)
    return _loose(t[1], depth) or _loose(t[2], depth)


def _inst(t: tuple, depth: int, arg: tuple, closed: bool) -> tuple:
    """Substitute ``arg`` for index ``depth`` in ``t`` and drop one binder."""
    tag = t[0]
    if tag == 0:
        i = t[1]
        if i == depth:
            return arg if (closed or depth == 0) else _shift(arg, depth, 0)
        return (0, i - 1) if i > depth else t
    if tag == 1:
        return t
    if tag == 2:
        return (2, _inst(t[1], depth + 1, arg, closed))
    return (3, _inst(t[1], depth, arg, closed), _inst(t[2], depth, arg, closed))


def _beta(body: tuple, arg: tuple) -> tuple:
    return _inst(body, 0, arg, not _loose(arg))


class _Fuel:
    __slots__ = ("left", "used")

    def __init__(self, n: int):
        self.left = n
        self.used = 0

    def tick(self):
        if self.left <= 0:
            raise LamTimeout(f"no normal form within {self.used} beta steps")
        self.left -= 1
        self.used += 1


def _whnf(t: tuple, fuel: _Fuel) -> tuple:
    args = []
    while True:
        tag = t[0]
        if tag == 3:
            args.append(t[2])
            t = t[1]
        elif tag == 2 and args:
            fuel.tick()
            t = _beta(t[1], args.pop())
        else:
            break
    while args:
        t = (3, t, args.pop())
    return t


def _nf(t: tuple, fuel: _Fuel) -> tuple:
    t = _whnf(t, fuel)
    if t[0] == 2:
        return (2, _nf(t[1], fuel))
    args = []
    while t[0] == 3:
        args.append(t[2])
        t = t[1]
    for a in reversed(args):
        t = (3, t, _nf(a, fuel))
    return t


def _eta(t: tuple) -> tuple:
    tag = t[0]
    if tag == 2:
        body = _eta(t[1])
        if body[0] == 3 and body[2] == (0, 0) and not _loose(body[1], 1) and not _refers(body[1], 0):
            return _shift(body[1], -1, 0)
        return (2, body)
    if tag == 3:
        return (3, _eta(t[1]), _eta(t[2]))
    return t


def _refers(t: tuple, i: int) -> bool:
    tag = t[0]
    if tag == 0:
        return t[1] == i
    if tag == 1:
        return False
    if tag == 2:
        return _refers(t[1], i + 1)
    return _refers(t[1], i) or _refers(t[2], i)


def _step(t: tuple) -> tuple | None:
    """One leftmost-outermost beta step, or ``None`` at a beta-normal form."""
    tag = t[0]
    if tag == 3:
        if t[1][0] == 2:
            return _beta(t[1][1], t[2])
        s = _step(t[1])
        if s is not None:
            return (3, s, t[2])
        s = _step(t[2])
        return None if s is None else (3, t[1], s)
    if tag == 2:
        s = _step(t[1])
        return None if s is None else (2, s)
    return None


_DEEP_LIMIT = 150_000
_DEEP_STACK = 1 << 30


def _deep(fn, *args):
    """Run ``fn`` on a worker thread whose C stack fits ``_DEEP_LIMIT`` frames.

    Raising the recursion limit on the main thread alone lets a runaway
    normal form overflow the C stack and kill the interpreter.  Running on
    a big stack turns that into a catchable ``LamTimeout``.
    """
    if getattr(_deep_state, "inside", False):
        return fn(*args)
    box: dict = {}

    def work():
        _deep_state.inside = True
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(_DEEP_LIMIT)
        try:
            box["value"] = fn(*args)
        except RecursionError:
            box["error"] = LamTimeout("term nesting exceeds the normalizer's depth bound")
        except BaseException as e:  # re-raised on the caller's thread
            box["error"] = e
        finally:
            sys.setrecursionlimit(old)

    prev = threading.stack_size(_DEEP_STACK)
    try:
        th = threading.Thread(target=work)
        th.start()
    finally:
        threading.stack_size(prev)
    th.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


_deep_state = threading.local()


def normalize_db(t: tuple, fuel: int = DEFAULT_FUEL) -> tuple:
    return _deep(lambda: _eta(_nf(t, _Fuel(fuel))))


def normalize(t: LamTerm, fuel: int = DEFAULT_FUEL) -> LamTerm:
    """Normal-order beta normal form followed by full eta contraction."""
    return from_db(normalize_db(t.db, fuel))


def beta_steps(t: LamTerm, fuel: int = DEFAULT_FUEL) -> int:
    """Number of beta steps normal order needs to reach the normal form."""
    f = _Fuel(fuel)
    _deep(_nf, t.db, f)
    return f.used


def reduction_sequence(t: LamTerm, max_steps: int) -> list[tuple]:
    """De Bruijn forms along the leftmost-outermost reduction of ``t``."""
    out = [t.db]
    cur = t.db
    for _ in range(max_steps):
        cur = _deep(_step, cur)
        if cur is None:
            break
        out.append(cur)
    return out


def reduces_to(s: LamTerm, t: LamTerm, max_steps: int = 500) -> bool:
    """Does normal-order reduction take ``s`` to ``t`` (up to alpha)?"""
    return t.db in reduction_sequence(s, max_steps)


def joinable(s: LamTerm, t: LamTerm, max_steps: int = 2000, fuel: int = 200_000) -> bool:
    """Sound semi-decision of beta-eta equality.

    First compares normal forms; when either side has none within ``fuel``,
    looks for a common term on the two normal-order reduction sequences.
    """
    try:
        return normalize_db(s.db, fuel) == normalize_db(t.db, fuel)
    except LamTimeout:
        pass
    a = set(reduction_sequence(s, max_steps))
    return any(x in a for x in reduction_sequence(t, max_steps))


# --------------------------------------------------------------- macros

x, y, z = V("x", "y", "z")
TT = lam("x", "y", x)
FF = lam("x", "y", y)
IF = lam("b", "s", "t", app(Var("b"), Var("s"), Var("t")))
PAIR = lam("s", "t", "z", app(z, Var("s"), Var("t")))
PROJ0 = lam("z", App(z, TT))
PROJ1 = lam("z", App(z, FF))
SUCC = lam("x", app(PAIR, TT, x))
PRED = lam("x", App(PROJ1, x))
COND = lam("z", "x", "y", app(IF, App(PROJ0, z), App(y, App(PRED, z)), x))
ID = lam("x", x)
_A = lam("x", "y", app(y, app(x, x, y)))
THETA = App(_A, _A)


def pair(s: LamTerm, t: LamTerm) -> LamTerm:
    return lam("z", app(Var("z"), s, t)) if "z" not in free_vars(s) | free_vars(t) else app(PAIR, s, t)


def godel(n: int) -> LamTerm:
    """The numeral: ``<ff, id>`` for zero and ``<tt, n>`` for a successor."""
    t = app(PAIR, FF, ID)
    for _ in range(n):
        t = app(PAIR, TT, t)
    return normalize(t)


def read_godel(t: LamTerm) -> int | None:
    """Inverse of :func:`godel` on normal forms."""
    d = normalize_db(t.db, 100_000)
    n = 0
    tt_db, ff_db = TT.db, FF.db
    id_db = ID.db
    while True:
        # \z. z b rest
        if d[0] != 2 or d[1][0] != 3 or d[1][1][0] != 3 or d[1][1][1] != (0, 0):
            return None
        b, rest = d[1][1][2], d[1][2]
        if _loose(rest, 1) is False and not _refers(rest, 0):
            rest = _shift(rest, -1, 0)
        else:
            return None
        if b == ff_db and rest == id_db:
            return n
        if b != tt_db:
            return None
        n += 1
        d = rest


MACROS: dict[str, LamTerm] = {
    "tt": TT, "ff": FF, "if": IF, "pair": PAIR, "pair2": PAIR,
    "proj0": PROJ0, "proj1": PROJ1, "succ": SUCC, "pred": PRED, "p": PRED,
    "cond": COND, "id": ID, "Theta": THETA,
}


def _iter_nat() -> LamTerm:
    f, s, t, n, m = V("f", "s", "t", "n", "m")
    body = lam("f", "s", "t", "n", app(COND, n, s, lam("m", App(t, app(f, s, t, m)))))
    return App(THETA, body)


ITER_NAT = _iter_nat()


# ---------------------------------------------------------------- parser

_TOK = re.compile(r"\s*(?:(\\|λ)|(\.)|(\()|(\))|#(\d+)|([A-Za-z_][A-Za-z0-9_']*))")


def _lex(text: str) -> list:
    out, i = [], 0
    text = text.rstrip()
    while i < len(text):
        m = _TOK.match(text, i)
        if not m or m.end() == i:
            raise LamSyntaxError(f"unexpected character {text[i]!r} at {i}")
        for k, g in enumerate(m.groups()):
            if g is not None:
                out.append((("lam", "dot", "(", ")", "num", "id")[k], g, m.start()))
                break
        i = m.end()
    out.append(("eof", "", len(text)))
    return out


def parse_lambda(text: str, macros: Mapping[str, LamTerm] | None = None) -> LamTerm:
    """Parse ``\\x y. t`` / application by juxtaposition / ``#n`` numerals.

    Unbound identifiers naming a macro are expanded.
    """
    macros = MACROS if macros is None else macros
    toks = _lex(text)
    pos = 0

    def peek():
        return toks[pos][0]

    def take(kind):
        nonlocal pos
        tok = toks[pos]
        if tok[0] != kind:
            raise LamSyntaxError(f"expected {kind} at {tok[2]}, got {tok[1]!r}")
        pos += 1
        return tok[1]

    def term(bound):
        if peek() == "lam":
            take("lam")
            names = [take("id")]
            while peek() == "id":
                names.append(take("id"))
            take("dot")
            body = term(bound | set(names))
            return lam(*names, body)
        f = atom(bound)
        while peek() in ("id", "num", "(", "lam"):
            if peek() == "lam":
                f = App(f, term(bound))
                break
            f = App(f, atom(bound))
        return f

    def atom(bound):
        k = peek()
        if k == "id":
            n = take("id")
            if n not in bound and n in macros:
                return macros[n]
            return Var(n)
        if k == "num":
            return godel(int(take("num")))
        if k == "(":
            take("(")
            t = term(bound)
            take(")")
            return t
        raise LamSyntaxError(f"unexpected {toks[pos][1]!r} at {toks[pos][2]}")

    t = term(frozenset())
    if peek() != "eof":
        raise LamSyntaxError(f"trailing input at {toks[pos][2]}")
    return t


def show(t: LamTerm) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        names = []
        while isinstance(t, Abs):
            names.append(t.name)
            t = t.body
        return "\\" + " ".join(names) + ". " + show(t)
    f, a = show(t.fun), show(t.arg)
    if isinstance(t.fun, Abs):
        f = f"({f})"
    if not isinstance(t.arg, Var):
        a = f"({a})"
    return f"{f} {a}"


# ------------------------------------------------------- rule semantics

def _names(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def rule_semantics(rule, seq) -> LamTerm:
    """The lambda term interpreting one inference step.

    Abstractions follow the premises first, then one variable per
    antecedent of the conclusion (``seq``), then any extra argument the rule
    needs (the argument of an arrow on the right).
    """
    from .calculus import resolve_pos

    tag = rule.tag
    n = len(seq.ante)
    u = _names("u", n)
    U = [Var(a) for a in u]
    t, s, r = V("t", "s", "r")
    p = resolve_pos(seq, rule)
    k = rule.split or 0
    if tag == "id":
        return ID
    if tag == "exchange":
        args = U[:p] + [U[p + 1], U[p]] + U[p + 2:]
        return lam("t", *u, app(t, *args))
    if tag == "weaken":
        return lam("t", *u, app(t, *(U[:p] + U[p + 1:])))
    if tag == "contract":
        return lam("t", *u, app(t, *(U[:p] + [U[p], U[p]] + U[p + 1:])))
    if tag == "cut":
        q = rule.pos if rule.pos is not None else n - k
        body = app(s, *(U[k:k + q] + [app(t, *U[:k])] + U[k + q:]))
        return lam("t", "s", *u, body)
    if tag == "arrow_r":
        return lam("t", *u, "x", app(t, *U, Var("x")))
    if tag == "arrow_l":
        q = p - k
        rest = U[:p] + U[p + 1:]
        g, d = rest[:k], rest[k:]
        body = app(s, *(d[:q] + [App(U[p], app(t, *g))] + d[q:]))
        return lam("t", "s", *u, body)
    if tag == "prod_r":
        return lam("t", "s", *u, pair(app(t, *U[:k]), app(s, *U[k:])))
    if tag == "prod_l":
        xp = U[p]
        return lam("t", *u, app(t, *(U[:p] + [App(PROJ0, xp), App(PROJ1, xp)] + U[p + 1:])))
    if tag in ("mu_r", "mu_l_unfold"):
        return lam("t", *u, app(t, *U))
    if tag == "nat_zero":
        return godel(0)
    if tag == "nat_succ":
        return lam("t", *u, App(SUCC, app(t, *U)))
    if tag == "nat_cond":
        rest = U[:p] + U[p + 1:]
        zero = app(t, *rest)
        succ = lam("y", app(s, *(U[:p] + [Var("y")] + U[p + 1:])))
        return lam("t", "s", *u, app(COND, U[p], zero, succ))
    if tag == "nat_iter":
        q = p - k
        rest = U[:p] + U[p + 1:]
        g, d = rest[:k], rest[k:]
        it = app(ITER_NAT, app(t, *g), app(s, *g), U[p])
        return lam("t", "s", "r", *u, app(r, *(d[:q] + [it] + d[q:])))
    if tag == "mu_l_iter":
        q = p - k
        rest = U[:p] + U[p + 1:]
        g, d = rest[:k], rest[k:]
        it = App(_mu_iterator(seq.ante[p], rule.aux), app(t, *g))
        return lam("t", "s", *u, app(s, *(d[:q] + [App(it, U[p])] + d[q:])))
    raise FragmentError(f"rule {tag} has no lambda semantics")


def _mu_iterator(mu, rho) -> LamTerm:
    """``Theta (\\f g z. g (sigma(f g) z))`` for the functor of ``mu``."""
    from .coterm import App as CApp, FreeVar, functor_coterm

    f_g = CApp(FreeVar("f"), FreeVar("g"))
    fun = embed(functor_coterm(mu, rho, f_g))
    body = lam("f", "g", "z", App(Var("g"), App(fun, Var("z"))))
    return App(THETA, body)


# ------------------------------------------------------- equation systems

def _tuple(items: list[LamTerm]) -> LamTerm:
    return lam("z", app(Var("z"), *items))


def _select(i: int, n: int) -> LamTerm:
    names = _names("a", n)
    return lam(*names, Var(names[i]))


def substitute(t: LamTerm, env: Mapping[str, LamTerm]) -> LamTerm:
    """Capture-avoiding substitution of free variables."""
    d = t.db
    sub = {k: v.db for k, v in env.items()}

    def go(s, depth):
        tag = s[0]
        if tag == 1:
            if s[1] in sub:
                return _shift(sub[s[1]], depth, 0) if depth else sub[s[1]]
            return s
        if tag == 0:
            return s
        if tag == 2:
            return (2, go(s[1], depth + 1))
        return (3, go(s[1], depth), go(s[2], depth))

    return from_db(_deep(go, d, 0))


def solve_equations(eqs: Mapping[str, LamTerm], entry: str, verify: bool = True) -> LamTerm:
    """A closed solution for ``entry`` of ``{x_i = rhs_i}``.

    Without recursion the equations are solved by substitution.  Otherwise
    all unknowns are tupled into one and tied with the Turing combinator, so
    each equation holds by plain beta reduction from left to right.
    """
    import networkx as nx

    names = list(eqs)
    g = nx.DiGraph()
    g.add_nodes_from(names)
    for a in names:
        for b in free_vars(eqs[a]) & set(names):
            g.add_edge(a, b)
    if nx.is_directed_acyclic_graph(g):
        sol: dict[str, LamTerm] = {}
        for a in reversed(list(nx.topological_sort(g))):
            sol[a] = substitute(eqs[a], {b: sol[b] for b in free_vars(eqs[a]) & set(names)})
        return sol[entry]
    n = len(names)
    T = Var("T_")
    proj = {a: App(T, _select(i, n)) for i, a in enumerate(names)}
    F = lam("T_", _tuple([substitute(eqs[a], proj) for a in names]))
    fix = App(THETA, F)
    sols = {a: App(fix, _select(i, n)) for i, a in enumerate(names)}
    if verify:
        for a in names:
            want = substitute(eqs[a], sols)
            if not reduces_to(sols[a], want, 50):
                raise VerificationFailure(f"equation for {a} does not hold")
    return sols[entry]


def solve_system(system) -> LamTerm:
    """Lambda solution of a :class:`~mulj.coterm.RegularSystem`."""
    eqs = {name: embed(rhs, system_refs=True) for name, rhs in system.definitions.items()}
    return solve_equations(eqs, system.entry)


def embed(t, system_refs: bool = False) -> LamTerm:
    """Compositional translation of coterms (or whole systems) into terms."""
    from . import coterm as C

    if isinstance(t, C.RegularSystem):
        return solve_system(t)
    if isinstance(t, C.App):
        return App(embed(t.fun, system_refs), embed(t.arg, system_refs))
    if isinstance(t, C.FreeVar):
        return Var(t.name)
    if isinstance(t, C.VarRef):
        if not system_refs:
            raise FragmentError("free reference outside a system; embed the system")
        return Var(t.name)
    if isinstance(t, C.RuleConst):
        return rule_semantics(t.rule, t.seq)
    if isinstance(t, C.Gadget):
        return _gadget_semantics(t)
    raise TypeError(f"cannot embed {t!r}")


def _gadget_semantics(g) -> LamTerm:
    table = {
        "pair": PAIR, "proj0": PROJ0, "proj1": PROJ1, "succ": SUCC,
        "zero": godel(0), "iterN": lam("s", "t", "n", app(ITER_NAT, Var("s"), Var("t"), Var("n"))),
    }
    if g.name in table:
        return table[g.name]
    if g.name == "in":
        return ID
    if g.name == "iter":
        mu, rho = g.types
        return lam("t", "x", App(App(_mu_iterator(mu, rho), Var("t")), Var("x")))
    raise FragmentError(f"constant {g.name} has no lambda semantics")


__all__ = [
    "LamTerm", "Var", "Abs", "App", "lam", "app", "normalize", "joinable",
    "parse_lambda", "show", "godel", "read_godel", "MACROS", "THETA",
    "rule_semantics", "solve_equations", "solve_system", "embed",
    "LamTimeout", "LamSyntaxError", "FragmentError", "VerificationFailure",
]
