"""Command-line front end.

Each verb prints a one-line summary on stdout (``--dump`` adds a JSON
object on the following line) and exits with 0 on success or a positive
verdict, 1 on a negative verdict and 2 on errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


class _Outcome:
    def __init__(self, code: int, summary: str, data: dict | None = None, body: str | None = None):
        self.code, self.summary, self.data, self.body = code, summary, data or {}, body


# ------------------------------------------------------------------ inputs

def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _is_proof_text(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            return line.startswith(("node", "root"))
    return False


def _load(path: str):
    """A :class:`Coderivation` for proof files, a ``RegularSystem`` otherwise."""
    from .textio import parse_proof, parse_system

    text = _read(path)
    return parse_proof(text) if _is_proof_text(text) else parse_system(text)


def _load_proof(path: str):
    from .calculus import Coderivation
    from .textio import FormatError

    obj = _load(path)
    if not isinstance(obj, Coderivation):
        raise FormatError(f"{path} is not a proof file")
    return obj


def _system(name: str | None, c) -> str:
    from .calculus import SYSTEM_ALIASES

    if name is None:
        return "muLJ" if c.is_acyclic() else "muLJ_prime"
    if name not in SYSTEM_ALIASES:
        raise ValueError(f"unknown system {name!r}; choose muLJ, muLJ' or neg")
    return SYSTEM_ALIASES[name]


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)


# ------------------------------------------------------------------- verbs

def cmd_check(a) -> _Outcome:
    from .calculus import check

    c = _load_proof(a.file)
    system = _system(a.system, c)
    rep = check(c, system)
    data = {"system": system, "nodes": len(c), "errors": [[str(n), m] for n, m in rep.errors]}
    if rep.ok:
        return _Outcome(EXIT_OK, f"ok: {len(c)} nodes valid in {system}", data)
    first = rep.errors[0]
    return _Outcome(EXIT_NO, f"invalid: node {first[0]}: {first[1]} ({len(rep.errors)} errors)", data)


def cmd_progress(a) -> _Outcome:
    from .progress import is_progressing, lasso_oracle

    c = _load_proof(a.file)
    v = is_progressing(c)
    data: dict = {"progressing": v.progressing}
    if v.witness is not None:
        pre, cyc = v.witness.node_ids
        data["witness"] = {"prefix": [str(x) for x in pre], "cycle": [str(x) for x in cyc]}
    if a.oracle:
        o = lasso_oracle(c, max_nodes=a.oracle_max_nodes)
        data["oracle"] = o.progressing
        if o.progressing != v.progressing:
            return _Outcome(EXIT_ERROR, f"disagreement: checker {v.progressing}, oracle {o.progressing}", data)
    return _Outcome(EXIT_OK if v else EXIT_NO, v.report(), data)


def cmd_eval(a) -> _Outcome:
    from .calculus import Coderivation

    obj = _load(a.file)
    args = list(a.args or [])
    engine = a.engine
    if engine is None:
        engine = "cut" if isinstance(obj, Coderivation) else "coterm"
    trace: list[str] = []
    if engine == "cut":
        from .cutred import evaluate_by_cut_reduction
        from .library import apply_program

        if not isinstance(obj, Coderivation):
            raise ValueError("the cut engine needs a proof file")
        n = evaluate_by_cut_reduction(apply_program(obj, args), a.fuel, trace.append if a.trace else None)
    elif engine == "coterm":
        from .coterm import eval_to_numeral

        theory = None
        if a.system is not None:
            theory = "r" if _system(a.system, None) in ("muLJ", "muLJ_neg") else "r_prime"
        n = eval_to_numeral(obj, args, theory=theory, fuel=a.fuel)
    else:
        from .lam import App, godel, normalize, read_godel

        t = _embed(obj)
        for k in args:
            t = App(t, godel(k))
        n = read_godel(normalize(t, fuel=a.fuel))
        if n is None:
            return _Outcome(EXIT_NO, "normal form is not a numeral", {"engine": engine})
    for line in trace:
        print(line, file=sys.stderr)
    return _Outcome(EXIT_OK, str(n), {"value": n, "engine": engine, "args": args})


def _embed(obj):
    from .calculus import Coderivation
    from .coterm import coterm_of
    from .lam import embed

    if isinstance(obj, Coderivation):
        obj = coterm_of(obj)
    return embed(obj)


def cmd_embed_lambda(a) -> _Outcome:
    from .lam import App, godel, normalize, read_godel, show

    t = _embed(_load(a.file))
    if a.args:
        for k in a.args:
            t = App(t, godel(k))
        nf = normalize(t, fuel=a.fuel)
        n = read_godel(nf)
        text = str(n) if n is not None else show(nf)
        return _Outcome(EXIT_OK, text, {"value": n, "normal_form": show(nf)})
    if a.normalize:
        t = normalize(t, fuel=a.fuel)
    return _Outcome(EXIT_OK, show(t), {"term": show(t)})


def cmd_translate_neg(a) -> _Outcome:
    from .calculus import check
    from .negtrans import simulate_in_negative, trans_coderivation
    from .textio import dump_proof

    c = _load_proof(a.file)
    out = simulate_in_negative(c) if a.simulate else trans_coderivation(c)
    rep = check(out, "muLJ_prime_neg", allow_hyp=True)
    text = dump_proof(out)
    _write(text, a.output)
    summary = f"translated: {len(c)} nodes to {len(out)} nodes, conclusion {out.conclusion}"
    return _Outcome(EXIT_OK if rep.ok else EXIT_ERROR, summary, {"nodes": len(out)},
                    None if a.output else text)


def cmd_circularize(a) -> _Outcome:
    from .library import circularize
    from .textio import dump_proof

    c = _load_proof(a.file)
    out = circularize(c)
    text = dump_proof(out)
    _write(text, a.output)
    return _Outcome(EXIT_OK, f"circularized: {len(c)} nodes to {len(out)} nodes", {"nodes": len(out)},
                    None if a.output else text)


def cmd_formula(a) -> _Outcome:
    from . import arith
    from .types import show_type

    phi = arith.parse_formula(a.text)
    if a.realising_type:
        ty = arith.realising_type(phi)
        return _Outcome(EXIT_OK, show_type(ty), {"type": show_type(ty)})
    if a.positivity:
        sign = arith.positivity(phi, a.positivity)
        return _Outcome(EXIT_OK, sign.value, {"positivity": sign.value})
    if a.gg:
        phi = arith.gg_translate(phi)
    elif a.friedman is not None:
        phi = arith.friedman_translate(phi, arith.parse_formula(a.friedman))
    elif a.relativize:
        phi = arith.n_relativize(phi)
    text = arith.show_formula(phi)
    return _Outcome(EXIT_OK, text, {"formula": text})


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mulj", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dump", action="store_true", help="print a JSON object after the summary")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("check", cmd_check, "check rule instances of a proof file")
    sp.add_argument("file")
    sp.add_argument("--system", help="muLJ, muLJ' or neg (default: by cyclicity)")

    sp = add("progress", cmd_progress, "decide the progressing criterion")
    sp.add_argument("file")
    sp.add_argument("--oracle", action="store_true", help="cross-check with the brute-force lasso oracle")
    sp.add_argument("--oracle-max-nodes", type=int, default=8)

    sp = add("eval", cmd_eval, "evaluate a program on numeral arguments")
    sp.add_argument("file")
    sp.add_argument("--args", type=int, nargs="*", default=[])
    sp.add_argument("--engine", choices=["cut", "coterm", "lambda"])
    sp.add_argument("--system", help="theory for the coterm engine: muLJ or muLJ'")
    sp.add_argument("--fuel", type=int, default=1_000_000)
    sp.add_argument("--trace", action="store_true", help="print reduction steps to stderr")

    sp = add("translate-neg", cmd_translate_neg, "negative translation of a proof")
    sp.add_argument("file")
    sp.add_argument("--simulate", action="store_true", help="wrap an N..N => N program with (de)coding")
    sp.add_argument("-o", "--output")

    sp = add("circularize", cmd_circularize, "replace iteration rules by cycles")
    sp.add_argument("file")
    sp.add_argument("-o", "--output")

    sp = add("embed-lambda", cmd_embed_lambda, "lambda-term of a proof or coterm file")
    sp.add_argument("file")
    sp.add_argument("--args", type=int, nargs="*", default=[])
    sp.add_argument("--normalize", action="store_true")
    sp.add_argument("--fuel", type=int, default=1_000_000)

    sp = add("formula", cmd_formula, "operations on arithmetic formulas")
    sp.add_argument("text")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--realising-type", action="store_true")
    g.add_argument("--positivity", metavar="X")
    g.add_argument("--gg", action="store_true", help="double-negation translation")
    g.add_argument("--friedman", metavar="RHO", help="Friedman translation with parameter RHO")
    g.add_argument("--relativize", action="store_true", help="relativise to N")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        out = a.fn(a)
    except (OSError, ValueError, TypeError, RuntimeError, RecursionError, AssertionError) as e:
        print(f"error: {type(e).__name__}: {e}")
        if a.dump:
            print(json.dumps({"error": type(e).__name__, "message": str(e)}))
        return EXIT_ERROR
    print(out.summary)
    if out.body:
        sys.stdout.write(out.body)
    if a.dump:
        print(json.dumps(out.data, sort_keys=True))
    return out.code


def main() -> None:  # pragma: no cover - console entry point
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
