from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mulj.build import Builder
from mulj.calculus import check
from mulj.coterm import eval_to_numeral
from mulj.cutred import (
    Redex, StaleRedex, Timeout, evaluate_by_cut_reduction, evaluate_with_steps,
    head_reduct_sequence, reduction_trace, redexes, step,
)
from mulj.library import (
    addition_program, apply_program, bad_cut_loop, circularize, doubling_program, identity_program,
    multiplication_program, numeral, read_numeral, succ_program,
)
from mulj.types import NAT, NAT_ENC, UNIT, Sum, fl_closure, unfold

PROGRAMS = [
    (succ_program, lambda n: n + 1),
    (identity_program, lambda n: n),
    (addition_program, lambda m, n: m + n),
    (doubling_program, lambda n: 2 * n),
    (multiplication_program, lambda m, n: m * n),
]


def system_of(c):
    return "muLJ" if c.is_acyclic() and not c.rules_used() & {"nat_cond", "mu_l_unfold"} else "muLJ_prime"


def cond_cut(scrutinee: int):
    """cut(numeral k, nat_cond(numeral 7, successor))."""
    b = Builder()
    cond = b.nat_cond(b.nat_succ(b.nat_succ(b.nat_zero())), b.nat_succ(b.id(NAT)))
    return b.finish(b.cut(b.nat_succ(b.nat_zero()) if scrutinee else b.nat_zero(), cond))


# ---------------------------------------------------------------- redexes

def test_cut_free_has_no_redex():
    assert redexes(numeral(3)) == []
    assert redexes(addition_program()) == []


def test_zero_against_cond_is_principal():
    c = cond_cut(0)
    rs = [r for r in redexes(c) if r.node == c.root]
    assert [r.kind for r in rs] == ["principal"]
    out = step(c, rs[0])
    assert read_numeral(out) == 2


def test_succ_against_cond_reduces_to_cut_with_successor_branch():
    c = cond_cut(1)
    (r,) = [r for r in redexes(c) if r.node == c.root and r.kind == "principal"]
    out = step(c, r)
    root = out.nodes[out.root]
    assert root.rule.tag == "cut"
    left, right = (out.nodes[q] for q in root.premises)
    assert left.rule.tag == "nat_zero" and right.rule.tag == "nat_succ"
    assert evaluate_by_cut_reduction(out) == 1


def test_mu_right_against_mu_left_unfold():
    b = Builder()
    value = b.mu_r(b.sum_r(b.unit_r(), 0, NAT_ENC), NAT_ENC)  # encoded zero
    body = b.sum_l(b.unit_l(b.nat_zero(), 0), b.nat_succ(b.nat_succ(b.weaken(b.nat_zero(), NAT_ENC, 0))), 0)
    c = b.finish(b.cut(value, b.mu_l_unfold(body, NAT_ENC, 0)))
    assert check(c, "muLJ_prime").ok
    (r,) = [r for r in redexes(c) if r.node == c.root]
    assert r.kind == "principal" and r.rules == ("mu_r", "mu_l_unfold")
    out = step(c, r)
    root = out.nodes[out.root]
    assert root.rule.tag == "cut" and root.rule.aux == Sum(UNIT, NAT_ENC)
    assert check(out, "muLJ_prime").ok
    # the cut formula drops strictly in priority
    fl = fl_closure(NAT_ENC)
    assert fl.higher(NAT_ENC, unfold(NAT_ENC))
    assert evaluate_by_cut_reduction(out) == 0


def test_stale_redex():
    c = cond_cut(0)
    with pytest.raises(StaleRedex):
        step(c, Redex(999, "principal", ("nat_zero", "nat_cond")))
    with pytest.raises(StaleRedex):
        step(c, Redex(c.root, "identity", ("id", "id")))


# ------------------------------------------------------------- evaluation

def test_numeral_needs_no_steps():
    assert evaluate_with_steps(numeral(4)) == (4, 0)


def test_cut_numeral_into_successor():
    assert evaluate_by_cut_reduction(apply_program(succ_program(), [2])) == 3


def test_circular_addition():
    assert evaluate_by_cut_reduction(apply_program(circularize(addition_program()), [2, 3])) == 5


def test_encoded_numerals_evaluate():
    assert evaluate_by_cut_reduction(numeral(3, native=False)) == 3


@pytest.mark.parametrize("make,f", PROGRAMS, ids=lambda x: getattr(x, "__name__", ""))
def test_programs_against_integer_oracle(make, f):
    p = make()
    k = len(p.conclusion.ante)
    for args in ([0] * k, [1] * k, [3] * k, list(range(2, 2 + k))):
        want = f(*args)
        assert evaluate_by_cut_reduction(apply_program(p, args)) == want
        assert evaluate_by_cut_reduction(apply_program(circularize(p), args)) == want


def test_timeout_on_endless_loop():
    with pytest.raises(Timeout):
        evaluate_by_cut_reduction(apply_program(bad_cut_loop(), [1]), fuel=200)


def test_open_proof_rejected():
    with pytest.raises(ValueError):
        evaluate_by_cut_reduction(succ_program())


def test_trace_has_one_line_per_step():
    n, lines = reduction_trace(apply_program(circularize(addition_program()), [1, 1]))
    _, steps = evaluate_with_steps(apply_program(circularize(addition_program()), [1, 1]))
    assert n == 2 and len(lines) == steps
    for i, line in enumerate(lines, 1):
        no, kind, node = line.split("\t")
        assert int(no) == i and kind.split("-")[0] in {"principal", "commutation", "structural", "identity"}


# ------------------------------------------------------- subject reduction

@pytest.mark.parametrize("make,f", PROGRAMS, ids=lambda x: getattr(x, "__name__", ""))
def test_head_strategy_preserves_check(make, f):
    for prog in (make(), circularize(make())):
        k = len(prog.conclusion.ante)
        seq = head_reduct_sequence(apply_program(prog, [2] * k), max_steps=80)
        for c in seq:
            assert check(c, system_of(c)).ok


@settings(max_examples=40)
@given(st.sampled_from(range(len(PROGRAMS))), st.booleans(), st.lists(st.integers(0, 50), max_size=15),
       st.integers(0, 3))
def test_random_redex_choices_preserve_check_and_value(i, circular, choices, arg):
    make, f = PROGRAMS[i]
    prog = circularize(make()) if circular else make()
    k = len(prog.conclusion.ante)
    c = apply_program(prog, [arg] * k)
    system = system_of(c)
    for choice in choices:
        rs = redexes(c)
        if not rs:
            break
        c = step(c, rs[choice % len(rs)])
        assert check(c, system).ok
    assert evaluate_by_cut_reduction(c) == f(*([arg] * k))


@pytest.mark.parametrize("make,f", PROGRAMS[:4], ids=lambda x: getattr(x, "__name__", ""))
def test_agrees_with_coterm_engine(make, f):
    c = circularize(make())
    k = len(c.conclusion.ante)
    for n in range(4):
        assert evaluate_by_cut_reduction(apply_program(c, [n] * k)) == eval_to_numeral(c, [n] * k)
