"""Standard derivations: numerals, functors, the post-fixed-point rules,
circularization of (co)iterators, strong iteration from weak iteration, and a
small corpus of programs and circular examples."""
from __future__ import annotations

from .build import Builder, copy_into
from .calculus import Coderivation, RuleError, RuleInstance, Sequent, SUCC
from .types import (
    NAT, NAT_ENC, UNIT, Arrow, Mu, Nu, Prod, Sum, TypeExpr, Var, list_type,
    polarity, stream_type, substitute, unfold, _fresh, _all_names,
)


class PolarityError(RuleError):
    pass


# ------------------------------------------------------------------ numerals

def numeral_node(b: Builder, n: int, native: bool = True) -> int:
    if native:
        p = b.nat_zero()
        for _ in range(n):
            p = b.nat_succ(p)
        return p
    p = b.mu_r(b.sum_r(b.unit_r(), 0, NAT_ENC), NAT_ENC)
    for _ in range(n):
        p = b.mu_r(b.sum_r(p, 1, UNIT), NAT_ENC)
    return p


def numeral(n: int, native: bool = True) -> Coderivation:
    """The canonical derivation of ``=> N`` for ``n``.

    Native numerals stack ``n`` successor steps over zero.  Encoded numerals
    live at ``mu X. 1 + X`` and are built from ``mu_r`` and the two sum
    injections.
    """
    b = Builder()
    return b.finish(numeral_node(b, n, native))


def read_numeral(c: Coderivation) -> int | None:
    """Inverse of :func:`numeral` for cut-free numerals (native or encoded)."""
    v, n = c.root, 0
    while True:
        node = c.nodes[v]
        tag = node.rule.tag
        if tag == "nat_zero":
            return n
        if tag == "nat_succ":
            n += 1
            v = node.premises[0]
            continue
        if tag == "mu_r" and node.seq.succ == NAT_ENC:
            inner = c.nodes[node.premises[0]]
            if inner.rule.tag == "sum_r0" and c.nodes[inner.premises[0]].rule.tag == "unit_r":
                return n
            if inner.rule.tag == "sum_r1":
                n += 1
                v = inner.premises[0]
                continue
        return None


# ------------------------------------------------------------------- functor

def functor_node(b: Builder, sigma: TypeExpr, x: str, p, positive: bool = True) -> int:
    """Functorial action of ``sigma`` (in the variable ``x``) on ``p``.

    ``p`` concludes ``G, t => t'``.  The positive case derives
    ``G, sigma(t) => sigma(t')``, the negative case ``G, sigma(t') => sigma(t)``.
    """
    ante = b.ante(p)
    if not ante:
        raise RuleError("functor needs a premise of the form G, t => t'")
    gam, tau, tau2 = ante[:-1], ante[-1], b.succ_of(p)
    pol = polarity(sigma, x)
    if positive and not pol.positive or not positive and not pol.negative:
        raise PolarityError(f"{sigma} is not {'positive' if positive else 'negative'} in {x}")
    src, tgt = (tau, tau2) if positive else (tau2, tau)
    g = len(gam)

    def at(s: TypeExpr, t: TypeExpr) -> TypeExpr:
        return substitute(s, x, t)

    if x not in sigma.free:
        return b.weaken_front(b.id(sigma), gam)
    if isinstance(sigma, Var):
        return p
    if isinstance(sigma, Sum):
        parts = (sigma.left, sigma.right)
        arms = []
        for i in (0, 1):
            a = functor_node(b, parts[i], x, p, positive)
            arms.append(b.sum_r(a, i, at(parts[1 - i], tgt)))
        return b.sum_l(arms[0], arms[1], g)
    if isinstance(sigma, Prod):
        s1, s2 = sigma.left, sigma.right
        a1 = b.prod_l(b.weaken(functor_node(b, s1, x, p, positive), at(s2, src)), g)
        a2 = b.prod_l(b.weaken(functor_node(b, s2, x, p, positive), at(s1, src), g), g)
        return b.contract_prefix(b.prod_r(a1, a2), g + 1)
    if isinstance(sigma, Arrow):
        n1 = functor_node(b, sigma.domain, x, p, not positive)
        p2 = functor_node(b, sigma.codomain, x, p, positive)
        lft = b.arrow_l(n1, p2)
        # cedent: G, s1[tgt], G, (s1->s2)[src]
        target = gam + [at(sigma, src), at(sigma.domain, tgt)]
        mapping = list(range(g)) + [g + 1] + list(range(g)) + [g]
        return b.arrow_r(b.reindex(lft, target, mapping))
    if isinstance(sigma, (Mu, Nu)):
        y, body = sigma.var, sigma.body
        clash = {y} & (src.free | tgt.free | {x})
        if clash:
            z = _fresh(y, _all_names(body) | src.free | tgt.free | {x})
            body = substitute(body, y, Var(z))
            y = z
        if isinstance(sigma, Mu):
            rho = Mu(y, at(body, tgt))
            mu_src = Mu(y, at(body, src))
            inner = functor_node(b, substitute(body, y, rho), x, p, positive)
            step = b.mu_r(inner, rho)
            return b.mu_l_iter(step, b.id(rho), mu_src)
        nu_src, nu_tgt = Nu(y, at(body, src)), Nu(y, at(body, tgt))
        inner = functor_node(b, substitute(body, y, nu_src), x, p, positive)
        step = b.nu_l(inner, nu_src, g)
        co = b.nu_r_coiter(b.id(nu_src), step, nu_tgt)
        return b.move(co, 0, g)
    raise RuleError(f"functor: unsupported type {sigma}")  # pragma: no cover


def functor(sigma: TypeExpr, x: str, p: Coderivation, positive: bool = True) -> Coderivation:
    b = Builder()
    ren = copy_into(b, p)
    return b.finish(functor_node(b, sigma, x, ren[p.root], positive))


# ------------------------------------------------------- post-fixed points

def post_fixed_rules(fix: TypeExpr, gamma: tuple = (), tau: TypeExpr | None = None):
    """Derive the unfolding rules from (co)iteration.

    For ``fix = mu X. s`` returns (and likewise for nu) a pair of derivations
    with one open hypothesis each: ``G, mu => t`` from ``G, s(mu) => t`` and
    ``G => nu X. s`` from ``G => s(nu)``.  Pass a nu-type to get the second
    component for that type; the first component is then ``None``.
    """
    gamma = list(gamma)
    tau = NAT if tau is None else tau
    out = []
    if isinstance(fix, Mu):
        b = Builder()
        h = b.hyp(Sequent(gamma + [unfold(fix)], tau), "H")
        inv = unfold(fix)
        step = functor_node(b, fix.body, fix.var, b.mu_r(b.id(inv), fix))
        out.append(b.finish(b.mu_l_iter(step, h, fix)))
        out.append(None)
    elif isinstance(fix, Nu):
        out.append(None)
        b = Builder()
        h = b.hyp(Sequent(gamma, unfold(fix)), "H")
        inv = unfold(fix)
        step = functor_node(b, fix.body, fix.var, b.nu_l(b.id(inv), fix))
        out.append(b.finish(b.nu_r_coiter(h, step, fix)))
    else:
        raise RuleError("post_fixed_rules needs a fixed-point type")
    return tuple(out)


# ------------------------------------------------------------ circularize

def _contract_around(b: Builder, p, g: int) -> int:
    """Cedent ``G, P, G`` (with ``|G| = g``) contracted to ``G, P``."""
    a = b.ante(p)
    mapping = list(range(g)) + [g] + list(range(g))
    return b.reindex(p, a[:g + 1], mapping)


def _attach(b: Builder, seq: Sequent, a, t, k: int, q: int) -> int:
    """``cut(a, t)`` rearranged into the cedent of ``seq``.

    ``a`` concludes ``G, P => r`` with ``|G| = k`` and ``t`` concludes
    ``D1, r, D2 => c`` with ``|D1| = q``; ``seq`` is ``G, D1, P, D2 => c``.
    """
    root = b.cut(a, t, q)  # G, P, D1, D2
    n = len(b.ante(root))
    order = list(range(k)) + [k + 1 + i for i in range(q)] + [k] + list(range(k + 1 + q, n))
    res = b.permute(root, order)
    if b.seq(res) != seq:
        raise RuleError(f"gadget conclusion {b.seq(res)} differs from {seq}")
    return res


def _principal(seq: Sequent, rule: RuleInstance) -> int:
    return len(seq.ante) - 1 if rule.pos is None else rule.pos


def _iter_gadget(b: Builder, node, s, t) -> int:
    """Cyclic replacement of ``mu_l_iter`` with step ``s`` and continuation ``t``."""
    seq, rule = node.seq, node.rule
    k = rule.split or 0
    p = _principal(seq, rule)
    gam, mu, rho = list(seq.ante[:k]), seq.ante[p], rule.aux
    a = b.reserve(Sequent(gam + [mu], rho))
    f = functor_node(b, mu.body, mu.var, a)  # G, s(mu) => s(rho)
    body = _contract_around(b, b.cut(f, s), k)  # G, s(mu), G => rho
    b.define(a, b.mu_l_unfold(body, mu, k))
    return _attach(b, seq, a, t, k, p - k)


def _coiter_gadget(b: Builder, node, s, t) -> int:
    seq, rule = node.seq, node.rule
    k = rule.split or 0
    delta = list(seq.ante[k:])
    nu, rho = seq.succ, rule.aux
    d = len(delta)
    a = b.reserve(Sequent(delta + [rho], nu))
    f = functor_node(b, nu.body, nu.var, a)  # D, s(rho) => s(nu)
    body = _contract_around(b, b.cut(t, f), d)  # D, rho, D => s(nu)
    b.define(a, b.nu_r_unfold(body, nu))
    root = b.cut(s, a, d)  # G, D => nu
    if b.seq(root) != seq:
        raise RuleError(f"gadget conclusion {b.seq(root)} differs from {seq}")
    return root


def _natiter_gadget(b: Builder, node, z, s, t) -> int:
    seq, rule = node.seq, node.rule
    k = rule.split or 0
    p = _principal(seq, rule)
    gam, sig = list(seq.ante[:k]), rule.aux
    a = b.reserve(Sequent(gam + [NAT], sig))
    step = _contract_around(b, b.cut(a, s), k)  # G, N, G => sig
    b.define(a, b.nat_cond(z, step, k))
    return _attach(b, seq, a, t, k, p - k)


def circularize(p: Coderivation) -> Coderivation:
    """Replace every (co)iteration step by its cyclic gadget (mu'LJ)."""
    cur = p
    for _ in range(64):
        tags = cur.rules_used()
        if not tags & {"mu_l_iter", "nu_r_coiter", "nat_iter"}:
            return cur
        b = Builder()
        ren = {v: b.reserve(cur.nodes[v].seq) for v in cur.nodes}
        for v, node in cur.nodes.items():
            prem = [ren[q] for q in node.premises]
            tag = node.rule.tag
            if tag == "mu_l_iter":
                built = _iter_gadget(b, node, *prem)
            elif tag == "nu_r_coiter":
                built = _coiter_gadget(b, node, *prem)
            elif tag == "nat_iter":
                built = _natiter_gadget(b, node, *prem)
            else:
                built = b.add(node.seq, node.rule, prem)
            b.define(ren[v], built)
        cur = b.finish(ren[cur.root])
    raise RuleError("circularize did not stabilise")  # pragma: no cover


# ---------------------------------------------------- strong from weak

def _pack(types: list[TypeExpr]) -> TypeExpr:
    t = types[0]
    for u in types[1:]:
        t = Prod(t, u)
    return t


def _unpack_left(b: Builder, p, types: list[TypeExpr]) -> int:
    """From ``G1, ..., Gk, R => c`` derive ``G1 * ... * Gk, R => c``."""
    for _ in range(len(types) - 1):
        p = b.prod_l(p, 0)
    return p


def _pack_right(b: Builder, types: list[TypeExpr]) -> int:
    """``G1, ..., Gk => G1 * ... * Gk``."""
    p = b.id(types[0])
    for u in types[1:]:
        p = b.prod_r(p, b.id(u))
    return p


def derive_strong_iteration(gamma: list[TypeExpr], mu: Mu, tau: TypeExpr) -> Coderivation:
    """``G, mu X. s => t`` from the hypothesis ``G, s(t) => t`` using only
    iteration steps whose first context is empty."""
    gamma = list(gamma)
    sig = mu.body
    b = Builder()
    hyp = b.hyp(Sequent(gamma + [substitute(sig, mu.var, tau)], tau), "H")
    if not gamma:
        return b.finish(b.mu_l_iter(hyp, b.id(tau), mu))
    G = _pack(gamma)
    y = _fresh("Y", _all_names(sig) | {mu.var} | G.free)
    big = Mu(y, Prod(G, substitute(sig, mu.var, Var(y))))  # mu Y. G * s(Y)
    U = substitute(sig, mu.var, big)  # s(M)
    A = Arrow(G, U)

    def pair_with_g(p):  # p: G, A => U   gives   G, A => M
        return b.mu_r(b.contract(b.prod_r(b.id(G), p), 0), big)

    e_app = b.arrow_l(b.id(G), b.id(U))  # G, A => U
    f = pair_with_g(e_app)  # G, A => M
    fs = functor_node(b, sig, mu.var, f)  # G, s(A) => s(M)
    r = b.arrow_r(b.exchange(fs, 0))  # s(A) => A
    lmu = b.mu_l_iter(r, b.id(A), mu)  # mu => A
    c = b.exchange(b.cut(lmu, b.arrow_l(b.id(G), b.id(U)), 1), 0)  # G, mu => U
    pp = b.mu_r(b.contract(b.prod_r(b.id(G), c), 0), big)  # G, mu => M
    h2 = _unpack_left(b, hyp, gamma)  # G, s(t) => t
    w = b.mu_l_iter(b.prod_l(h2, 0), b.id(tau), big)  # M => t
    root = b.cut(pp, w)  # G, mu => t
    if len(gamma) > 1:
        root = b.cut(_pack_right(b, gamma), root, 0)
    return b.finish(root)


# --------------------------------------------------------- program corpus

def succ_program() -> Coderivation:
    """``N => N`` adding one."""
    b = Builder()
    return b.finish(b.nat_succ(b.id(NAT)))


def identity_program() -> Coderivation:
    b = Builder()
    return b.finish(b.id(NAT))


def _add_node(b: Builder) -> int:
    # N(m), N(n) => N : iterate successor n times starting from m
    step = b.nat_succ(b.weaken(b.id(NAT), NAT, 0))  # N, N => N
    return b.nat_iter(b.id(NAT), step, b.id(NAT))


def addition_program() -> Coderivation:
    """``N, N => N`` computing ``m + n`` by iteration on the second argument."""
    b = Builder()
    return b.finish(_add_node(b))


def doubling_program() -> Coderivation:
    """``N => N`` computing ``2n`` by iteration."""
    b = Builder()
    step = b.nat_succ(b.nat_succ(b.id(NAT)))
    return b.finish(b.nat_iter(b.nat_zero(), step, b.id(NAT)))


def multiplication_program() -> Coderivation:
    """``N, N => N`` computing ``m * n``: iterate ``+ m`` from zero."""
    b = Builder()
    base = b.weaken(b.nat_zero(), NAT, 0)
    return b.finish(b.nat_iter(base, _add_node(b), b.id(NAT)))


def apply_program(prog: Coderivation, args: list[int], native: bool = True) -> Coderivation:
    """Cut numerals into the antecedent of ``prog`` (last argument innermost)."""
    b = Builder()
    ren = copy_into(b, prog)
    p = ren[prog.root]
    if len(b.ante(p)) != len(args):
        raise RuleError(f"program expects {len(b.ante(p))} arguments, got {len(args)}")
    for n in reversed(args):
        p = b.cut(numeral_node(b, n, native), p)
    return b.finish(p)


# ----------------------------------------------------- circular examples

def eta_identity(fix: TypeExpr) -> Coderivation:
    """The circular eta-expansion of the identity on a mu-type."""
    b = Builder()
    a = b.reserve(Sequent([fix], fix))
    f = functor_node(b, fix.body, fix.var, a)
    b.define(a, b.mu_l_unfold(b.mu_r(f, fix), fix))
    return circularize(b.finish(a))


def iterator_gadget(mu: Mu = NAT_ENC, tau: TypeExpr = NAT) -> Coderivation:
    """Circularized iterator over ``mu`` with an open step hypothesis."""
    b = Builder()
    s = b.hyp(Sequent([substitute(mu.body, mu.var, tau)], tau), "step")
    return circularize(b.finish(b.mu_l_iter(s, b.id(tau), mu)))


def circular_recursor() -> Coderivation:
    """Circular addition: the recursor over native N built from ``nat_cond``."""
    return circularize(addition_program())


def list_stream_concat(elem: TypeExpr = NAT) -> Coderivation:
    """Circular concatenation of a list and a stream into a stream."""
    L, S = list_type(elem), stream_type(elem)
    b = Builder()
    a = b.reserve(Sequent([L, S], S))
    nil = b.unit_l(b.id(S), 0)  # 1, S => S
    cons = b.prod_r(b.id(elem), a)  # N, L, S => N * S
    cons = b.prod_l(cons, 0)  # N * L, S => N * S
    cons = b.nu_r_unfold(cons, S)  # N * L, S => S
    body = b.sum_l(nil, cons, 0)  # 1 + N * L, S => S
    b.define(a, b.mu_l_unfold(body, L, 0))
    return b.finish(b.arrow_r(a))


def bad_cut_loop() -> Coderivation:
    """``N => N`` as an endless cut against identity; no fixed point unfolds."""
    b = Builder()
    a = b.reserve(Sequent([NAT], NAT))
    b.define(a, b.cut(b.id(NAT), a))
    return b.finish(a)


def bad_mu_right_loop() -> Coderivation:
    """An infinite encoded numeral: the mu-type only unfolds on the right."""
    b = Builder()
    a = b.reserve(Sequent([], NAT_ENC))
    b.define(a, b.mu_r(b.sum_r(a, 1, UNIT), NAT_ENC))
    return b.finish(a)


def bad_nu_left_loop(elem: TypeExpr = NAT) -> Coderivation:
    """Consuming a stream forever on the left: nu unfolds only on the left."""
    S = stream_type(elem)
    b = Builder()
    a = b.reserve(Sequent([S], NAT))
    body = b.prod_l(b.weaken(a, elem, 0), 0)  # N * S => N
    b.define(a, b.nu_l(body, S, 0))
    return b.finish(a)
