"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Run under pytest (lines appear in the "acceptance criteria" section of the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import random
import sys
import time
from pathlib import Path

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE, DATA, corpus_files, corpus_inputs  # noqa: E402
from strategies import atomic_predicates, formulas, type_exprs  # noqa: E402

from mulj import cutred  # noqa: E402
from mulj.arith import friedman_pred, friedman_translate, gg_pred, gg_translate, parse_formula, subst_set  # noqa: E402
from mulj.build import Builder, copy_into  # noqa: E402
from mulj.calculus import Sequent, check  # noqa: E402
from mulj.coterm import (  # noqa: E402
    Evaluator, Gadget, RuleConst, VarRef, coterm_of, eval_to_numeral, replace_at,
    reduce_step, spine, term_to_derivation, type_assign, weak_extensional_eq,
)
from mulj.cutred import evaluate_by_cut_reduction  # noqa: E402
from mulj import lam  # noqa: E402
from mulj.library import (  # noqa: E402
    addition_program, apply_program, bad_cut_loop, bad_mu_right_loop, bad_nu_left_loop, circular_recursor,
    circularize, doubling_program, eta_identity, functor, iterator_gadget, list_stream_concat,
    multiplication_program, numeral, numeral_node, succ_program,
)
from mulj.negtrans import code_numeral, coding_derivations, lower, simulate_in_negative, upper  # noqa: E402
from mulj.progress import is_progressing, lasso_oracle  # noqa: E402
from mulj.textio import parse_proof, parse_system  # noqa: E402
from mulj.types import NAT, NAT_ENC, UNIT, Mu, Nu, Prod, Sum, Var, list_type, neg, polarity, substitute  # noqa: E402

A, B, C, D = (Var(x) for x in "ABCD")
X = Var("X")


# ------------------------------------------------------------ criterion 1

def criterion_1() -> str:
    start = time.perf_counter()
    succ = succ_program()
    for n in range(51):
        c = apply_program(succ, [n])
        assert evaluate_by_cut_reduction(c) == n + 1, f"cut engine on {n}"
        assert eval_to_numeral(coterm_of(c)) == n + 1, f"coterm engine on {n}"
    dt = time.perf_counter() - start
    assert dt < 5, f"took {dt:.2f}s"
    return f"n <= 50 in both engines, {dt:.2f}s"


# ------------------------------------------------------------ criterion 2

def criterion_2() -> str:
    checked = 0
    for make, f in ((addition_program, lambda m, n: m + n), (doubling_program, lambda n: 2 * n)):
        p = make()
        assert "nat_iter" in p.rules_used()
        k = len(p.conclusion.ante)
        for args in itertools.product(range(11), repeat=k):
            want = f(*args)
            assert eval_to_numeral(p, list(args)) == want, f"{make.__name__}{args}"
            assert evaluate_by_cut_reduction(apply_program(p, list(args))) == want, f"{make.__name__}{args}"
            checked += 1
    return f"{checked} argument tuples, coterm and cut engines"


# ------------------------------------------------------------ criterion 3

GOOD = {
    "iterator": iterator_gadget,
    "recursor": circular_recursor,
    "eta_nat": lambda: eta_identity(NAT_ENC),
    "eta_list": lambda: eta_identity(list_type(NAT)),
    "concat": list_stream_concat,
}
BAD = {"cut": bad_cut_loop, "mu_right": bad_mu_right_loop, "nu_left": bad_nu_left_loop}


def criterion_3() -> str:
    for name, make in GOOD.items():
        assert is_progressing(make()).progressing, f"{name} rejected"
    for name, make in BAD.items():
        assert not is_progressing(make()).progressing, f"{name} accepted"
    small = [c for c in (parse_proof(p.read_text()) for p in corpus_files()) if len(c) <= 8]
    for c in small:
        assert is_progressing(c).progressing == lasso_oracle(c, max_nodes=8).progressing
    return f"{len(GOOD)} accepted, {len(BAD)} rejected, oracle agrees on {len(small)} corpus proofs"


# ------------------------------------------------------------ criterion 4

L_MU = Mu("X", Prod(A, X))
PRINCIPAL_CASES = {
    "prod": lambda b: b.cut(b.prod_r(b.hyp(Sequent([D], A), "s"), b.hyp(Sequent([], B), "t")),
                            b.prod_l(b.hyp(Sequent([C, A, B], D), "u"), 1)),
    "arrow": lambda b: b.cut(b.arrow_r(b.hyp(Sequent([C, A], B), "t")),
                             b.arrow_l(b.hyp(Sequent([D], A), "s"), b.hyp(Sequent([B, C], D), "u"), 0), 1),
    "mu": lambda b: b.cut(b.mu_r(b.hyp(Sequent([C], Prod(A, L_MU)), "t"), L_MU),
                          b.mu_l_unfold(b.hyp(Sequent([Prod(A, L_MU)], D), "u"), L_MU)),
}


def principal_case(build):
    b = Builder()
    c = b.finish(build(b))
    (r,) = [r for r in cutred.redexes(c) if r.node == c.root and r.kind == "principal"]
    return coterm_of(c).term, coterm_of(cutred.step(c, r)).term


def lambda_equal(s, t, budget: int = 3) -> int | None:
    """Least number of fresh arguments under which the lambda images of
    ``s`` and ``t`` have the same normal form."""
    ls, lt = lam.embed(s), lam.embed(t)
    for k in range(budget + 1):
        xs = [lam.Var(f"_v{i}") for i in range(k)]
        if lam.normalize(lam.app(ls, *xs)) == lam.normalize(lam.app(lt, *xs)):
            return k
    return None


def criterion_4() -> str:
    used = []
    for name, build in PRINCIPAL_CASES.items():
        lhs, rhs = principal_case(build)
        assert lhs != rhs, f"{name}: reduction did nothing"
        assert weak_extensional_eq(lhs, rhs, 3), f"{name}: not extensionally equal"
        k = lambda_equal(lhs, rhs)
        assert k is not None, f"{name}: lambda normal forms differ"
        used.append(f"{name}:{k}")
    return "fresh variables used " + ", ".join(used)


# ------------------------------------------------------------ criterion 5

def criterion_5() -> str:
    pairs = 0
    for name, inputs in corpus_inputs().items():
        path = DATA / (name if "." in name else f"{name}.proof")
        text = path.read_text()
        obj = parse_proof(text) if path.suffix == ".proof" else parse_system(text)
        system = coterm_of(obj) if path.suffix == ".proof" else obj
        term = lam.embed(system)
        for args in inputs:
            n = eval_to_numeral(obj, args)
            nf = lam.normalize(lam.app(term, *(lam.godel(a) for a in args)))
            assert nf == lam.godel(n), f"{name}{tuple(args)}: coterm {n}, lambda {lam.read_godel(nf)}"
            pairs += 1
    return f"{pairs} program/input pairs, 0 disagreements"


# ------------------------------------------------------------ criterion 6

def criterion_6() -> str:
    for make, f in ((succ_program, lambda n: n + 1), (addition_program, lambda m, n: m + n)):
        p = make()
        s = simulate_in_negative(p)
        assert check(s, "muLJ_prime_neg").ok, f"{make.__name__}: not in the negative fragment"
        assert is_progressing(s).progressing, f"{make.__name__}: not progressing"
        for args in itertools.product(range(6), repeat=len(p.conclusion.ante)):
            got = eval_to_numeral(apply_program(s, list(args)), theory="r_prime")
            assert got == f(*args) == eval_to_numeral(p, list(args)), f"{make.__name__}{args}"
    _, d_dec = coding_derivations()
    for n in range(11):
        b = Builder()
        cn = code_numeral(numeral(n))
        d = b.finish(b.cut(copy_into(b, cn)[cn.root], copy_into(b, d_dec)[d_dec.root]))
        assert eval_to_numeral(d, theory="r_prime") == n, f"round trip of {n}"
    return "successor and addition agree on inputs <= 5; round trip n <= 10"


# ------------------------------------------------------------ criterion 7

def _nu_image(sigma):
    return neg(Mu("X", neg(substitute(upper(sigma), "X", neg(X)))))


def _run_property(strategy, prop) -> int:
    seen = [0]

    @settings(max_examples=200, derandomize=True, database=None)
    @given(strategy)
    def run(args):
        prop(*args)
        seen[0] += 1

    run()
    return seen[0]


def criterion_7() -> str:
    types = st.tuples(type_exprs(depth=5, free=("X",)))

    def mu_identity(sigma):
        assume(_positive(sigma))
        assert upper(substitute(sigma, "X", Mu("X", sigma))) == substitute(upper(sigma), "X", Mu("X", upper(sigma)))

    def nu_identity_upper(sigma):
        assume(_positive(sigma))
        assert upper(substitute(sigma, "X", Nu("X", sigma))) == substitute(upper(sigma), "X", _nu_image(sigma))

    def nu_identity_lower(sigma):
        assume(_positive(sigma))
        assert lower(substitute(sigma, "X", Nu("X", sigma))) == substitute(lower(sigma), "X", _nu_image(sigma))

    rho = parse_formula("0 = S(0)")
    pairs = st.tuples(formulas(depth=5), atomic_predicates())

    def gg_identity(phi, psi):
        assert gg_translate(subst_set(phi, "X", psi)) == subst_set(gg_translate(phi), "X", gg_pred(psi))

    def friedman_identity(phi, psi):
        lhs = friedman_translate(subst_set(phi, "X", psi), rho)
        assert lhs == subst_set(friedman_translate(phi, rho), "X", friedman_pred(psi, rho))

    counts = [
        _run_property(types, mu_identity),
        _run_property(types, nu_identity_upper),
        _run_property(types, nu_identity_lower),
        _run_property(pairs, gg_identity),
        _run_property(pairs, friedman_identity),
    ]
    assert all(c >= 200 for c in counts), f"too few examples: {counts}"
    return f"examples per identity {counts}, 0 failures (formula identities over atomic predicates)"


def _positive(sigma) -> bool:
    return polarity(sigma, "X").positive


# ------------------------------------------------------------ criterion 8

TRACE_PROGRAMS = [succ_program, addition_program, doubling_program, multiplication_program]


def criterion_8() -> str:
    rng = random.Random(20261015)
    steps = 0
    for _ in range(100):
        prog = rng.choice(TRACE_PROGRAMS)()
        args = [rng.randrange(4) for _ in prog.conclusion.ante]
        t = coterm_of(apply_program(prog, args)).term
        ty = type_assign(t)
        for _ in range(50):
            rs = reduce_step(t, "r")
            if not rs:
                break
            path, new = rng.choice(rs)
            t = replace_at(t, path, new)
            assert type_assign(t) == ty, "type changed along a trace"
            steps += 1
    compiled = 0
    for make in (succ_program, doubling_program, addition_program):
        p = make()
        for args in itertools.product(range(6), repeat=len(p.conclusion.ante)):
            t = coterm_of(apply_program(p, list(args))).term
            d = term_to_derivation(t)
            assert check(d, "muLJ_neg").ok, f"{make.__name__}{args}: compiled derivation invalid"
            assert evaluate_by_cut_reduction(d) == eval_to_numeral(t), f"{make.__name__}{args}"
            compiled += 1
    return f"100 traces ({steps} steps) keep their type; {compiled} compiled terms agree"


# ------------------------------------------------------------ criterion 9

def readback(ev: Evaluator, t):
    """The constructor tree of a closed value, read by weak head evaluation."""
    head, args = spine(ev.whnf(t))
    if isinstance(head, Gadget):
        return (head.name, *[readback(ev, a) for a in args])
    if isinstance(head, RuleConst) and not args:
        return head.rule.tag
    raise AssertionError(f"not a value: {head}")


def _value(c, theory: str):
    s = coterm_of(c)
    return readback(Evaluator(s, theory), VarRef(s.entry))


def pair_node(b, m, n):
    return b.prod_r(numeral_node(b, m, False), numeral_node(b, n, False))


def list_node(b, items, lt):
    p = b.mu_r(b.sum_r(b.unit_r(), 0, Prod(NAT_ENC, lt)), lt)
    for x in reversed(items):
        p = b.mu_r(b.sum_r(b.prod_r(numeral_node(b, x, False), p), 1, UNIT), lt)
    return p


LIST_F = Mu("Y", Sum(UNIT, Prod(X, Var("Y"))))


def _functor_values():
    lt = substitute(LIST_F, "X", NAT_ENC)
    lists = [list(xs) for k in range(5) for xs in itertools.product(range(2), repeat=k)] + [[3, 0, 2, 4]]
    return [
        ("N", X, [(lambda b, n=n: numeral_node(b, n, False)) for n in range(5)]),
        ("N*N", Prod(X, X), [(lambda b, m=m, n=n: pair_node(b, m, n))
                             for m in range(5) for n in range(5) if m + n <= 4]),
        ("list", LIST_F, [(lambda b, xs=xs: list_node(b, xs, lt)) for xs in lists]),
    ]


def criterion_9() -> str:
    pb = Builder()
    ident = pb.finish(pb.id(NAT_ENC))
    counts = []
    for name, sigma, builders in _functor_values():
        f = functor(sigma, "X", ident)
        for build in builders:
            b = Builder()
            c = b.finish(b.cut(build(b), copy_into(b, f)[f.root]))
            assert check(c, "muLJ").ok, f"{name}: composed proof invalid"
            vb = Builder()
            v = vb.finish(build(vb))
            # mu_r is transparent in r', so both sides are read in the same theory
            assert _value(c, "r") == _value(v, "r"), f"{name}: value changed"
            assert _value(circularize(c), "r_prime") == _value(v, "r_prime"), \
                f"{name}: circular functor changed the value"
        counts.append(f"{name}:{len(builders)}")
    return "identity on " + ", ".join(counts) + " values, finite and circular"


# --------------------------------------------------------------- harness

CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 10)}
TIMES: dict[int, float] = {}


def run_criterion(k: int) -> tuple[bool, str]:
    start = time.perf_counter()
    try:
        detail = CRITERIA[k]()
        ok = True
    except AssertionError as e:
        detail, ok = str(e) or "assertion failed", False
    TIMES[k] = time.perf_counter() - start
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail}; {TIMES[k]:.2f}s)"
    ACCEPTANCE.append(line)
    print(line)
    return ok, detail


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, detail = run_criterion(k)
    assert ok, detail


def test_total_runtime():
    assert set(TIMES) == set(CRITERIA), "run the whole module"
    total = sum(TIMES.values())
    ok = total < 60
    line = f"runtime: {'PASS' if ok else 'FAIL'} (criteria took {total:.1f}s, bound 60s)"
    ACCEPTANCE.append(line)
    print(line)
    assert ok


if __name__ == "__main__":
    results = [run_criterion(k)[0] for k in sorted(CRITERIA)]
    sys.exit(0 if all(results) else 1)
