"""Line-oriented text formats for proofs and coterm systems.

Proof files::

    # comments and blank lines are ignored
    root 0
    node 0 : N, N => N by cut[split=1,aux=N] premises(1,2)
    node 1 : N => N by id premises()

Premises may refer to nodes declared anywhere in the file, which is how
back-edges are written.  Rule options are ``pos``, ``split``, ``aux`` (a
type) and ``name``.

Coterm files hold one closed term, or a system of definitions::

    def a = (<nat_succ : N => N> @a)
    entry a

with terms ``<rule : sequent>``, ``(t t ...)`` (left-nested application),
``@name`` for a definition, ``?name`` for a free variable and
``!gadget[T; ...]`` for a realiser constant.
"""
from __future__ import annotations

import re
from typing import Iterable

from .calculus import Coderivation, Node, RuleError, RuleInstance, Sequent
from .coterm import App, Coterm, FreeVar, Gadget, GADGET_ARITY, RegularSystem, RuleConst, VarRef, show_coterm
from .types import TypeExpr, TypeSyntaxError, parse_type, show_type


class FormatError(ValueError):
    """A text file does not follow its format; carries the 1-based line."""

    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


def _type(text: str, line: int | None = None) -> TypeExpr:
    """Parse a type, admitting free variables (open hypotheses may use them)."""
    free = set(_IDENT.findall(text)) - {"mu", "nu", "N"}
    try:
        return parse_type(text.strip(), free=free)
    except TypeSyntaxError as e:
        raise FormatError(f"bad type {text.strip()!r}: {e}", line) from None


def parse_sequent(text: str, line: int | None = None) -> Sequent:
    if "=>" not in text:
        raise FormatError(f"sequent {text.strip()!r} lacks '=>'", line)
    left, right = text.split("=>", 1)
    ante = [_type(t, line) for t in left.split(",")] if left.strip() else []
    return Sequent(ante, _type(right, line))


def parse_rule(text: str, line: int | None = None) -> RuleInstance:
    """``tag`` or ``tag[key=value,...]``."""
    text = text.strip()
    m = re.fullmatch(r"([a-z_0-9]+)\s*(?:\[(.*)\])?", text, re.S)
    if not m:
        raise FormatError(f"bad rule {text!r}", line)
    tag, opts = m.group(1), m.group(2)
    kw: dict = {}
    for item in filter(None, (o.strip() for o in (opts or "").split(","))):
        if "=" not in item:
            raise FormatError(f"rule option {item!r} is not key=value", line)
        key, val = (s.strip() for s in item.split("=", 1))
        if key in ("pos", "split"):
            if not re.fullmatch(r"\d+", val):
                raise FormatError(f"{key} must be a natural number", line)
            kw[key] = int(val)
        elif key == "aux":
            kw[key] = _type(val, line)
        elif key == "name":
            kw[key] = val
        else:
            raise FormatError(f"unknown rule option {key!r}", line)
    try:
        return RuleInstance(tag, **kw)
    except RuleError as e:
        raise FormatError(str(e), line) from None


# ------------------------------------------------------------------ proofs

_NODE = re.compile(r"node\s+(\S+)\s*:\s*(.*?)\s+by\s+(.*?)\s*premises\s*\((.*)\)\s*$")


def _node_id(tok: str):
    return int(tok) if re.fullmatch(r"\d+", tok) else tok


def parse_proof(text: str) -> Coderivation:
    nodes: dict = {}
    lines: dict = {}
    root = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("root"):
            parts = line.split()
            if len(parts) != 2:
                raise FormatError("expected 'root <id>'", no)
            if root is not None:
                raise FormatError("root declared twice", no)
            root = _node_id(parts[1])
            continue
        m = _NODE.match(line)
        if not m:
            raise FormatError(f"cannot read {line!r}", no)
        nid = _node_id(m.group(1))
        if nid in nodes:
            raise FormatError(f"node {nid} declared twice", no)
        seq = parse_sequent(m.group(2), no)
        rule = parse_rule(m.group(3), no)
        prems = tuple(_node_id(p.strip()) for p in m.group(4).split(",") if p.strip())
        if len(prems) != rule.arity:
            raise FormatError(f"{rule.tag} takes {rule.arity} premises, got {len(prems)}", no)
        nodes[nid] = Node(seq, rule, prems)
        lines[nid] = no
    if root is None:
        raise FormatError("no root declared")
    if root not in nodes:
        raise FormatError(f"root {root} is not a node")
    for nid, node in nodes.items():
        for p in node.premises:
            if p not in nodes:
                raise FormatError(f"premise {p} of node {nid} is not declared", lines[nid])
    return Coderivation(nodes, root)


def dump_proof(c: Coderivation) -> str:
    out = [f"root {c.root}"]
    for nid in c.reachable():
        node = c.nodes[nid]
        prems = ",".join(str(p) for p in node.premises)
        out.append(f"node {nid} : {node.seq} by {node.rule} premises({prems})")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------- coterms

class _TermReader:
    def __init__(self, text: str, line: int | None):
        self.s = text
        self.i = 0
        self.line = line

    def err(self, msg: str):
        raise FormatError(f"{msg} at column {self.i + 1}", self.line)

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def ident(self) -> str:
        m = _IDENT.match(self.s, self.i)
        if not m:
            self.err("expected a name")
        self.i = m.end()
        return m.group(0)

    def term(self) -> Coterm:
        self.ws()
        if self.i >= len(self.s):
            self.err("unexpected end of term")
        c = self.s[self.i]
        if c == "(":
            self.i += 1
            parts = []
            while True:
                self.ws()
                if self.i < len(self.s) and self.s[self.i] == ")":
                    self.i += 1
                    break
                parts.append(self.term())
            if len(parts) < 2:
                self.err("an application needs at least two terms")
            t = parts[0]
            for a in parts[1:]:
                t = App(t, a)
            return t
        if c == "@":
            self.i += 1
            return VarRef(self.ident())
        if c == "?":
            self.i += 1
            return FreeVar(self.ident())
        if c == "!":
            self.i += 1
            name = self.ident()
            if name not in GADGET_ARITY:
                self.err(f"unknown constant {name!r}")
            types: tuple = ()
            if self.i < len(self.s) and self.s[self.i] == "[":
                end = self.s.index("]", self.i)
                body = self.s[self.i + 1:end]
                types = tuple(_type(t, self.line) for t in body.split(";") if t.strip())
                self.i = end + 1
            return Gadget(name, types)
        if c == "<":
            self.i += 1
            colon = self.s.find(" : ", self.i)
            if colon < 0:
                self.err("rule constant lacks ' : '")
            rule = parse_rule(self.s[self.i:colon], self.line)
            j = colon + 3
            # the constant ends at the first '>' not part of '->' or '=>'
            while j < len(self.s) and not (self.s[j] == ">" and self.s[j - 1] not in "-="):
                j += 1
            if j >= len(self.s):
                self.err("unterminated rule constant")
            seq = parse_sequent(self.s[colon + 3:j], self.line)
            self.i = j + 1
            return RuleConst(rule, seq)
        self.err(f"unexpected {c!r}")


def parse_coterm(text: str, line: int | None = None) -> Coterm:
    r = _TermReader(text, line)
    t = r.term()
    r.ws()
    if r.i != len(r.s):
        r.err("trailing input")
    return t


def parse_system(text: str) -> RegularSystem:
    """Read a coterm file: either ``def``/``entry`` lines or a single term."""
    defs: dict = {}
    entry = None
    body_lines = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"def\s+([A-Za-z_][A-Za-z0-9_']*)\s*=\s*(.*)$", line)
        if m:
            if m.group(1) in defs:
                raise FormatError(f"{m.group(1)} defined twice", no)
            defs[m.group(1)] = parse_coterm(m.group(2), no)
            continue
        m = re.match(r"entry\s+(\S+)$", line)
        if m:
            entry = m.group(1)
            continue
        body_lines.append((no, line))
    if body_lines:
        if defs:
            raise FormatError("a system file holds only def and entry lines", body_lines[0][0])
        text = " ".join(l for _, l in body_lines)
        return RegularSystem({"main": parse_coterm(text, body_lines[0][0])}, "main")
    if entry is None:
        raise FormatError("no entry declared")
    try:
        return RegularSystem(defs, entry)
    except ValueError as e:
        raise FormatError(str(e)) from None


def dump_system(s: RegularSystem) -> str:
    out = [f"def {name} = {show_coterm(t)}" for name, t in s.definitions.items()]
    out.append(f"entry {s.entry}")
    return "\n".join(out) + "\n"


def dump_type(t: TypeExpr) -> str:
    return show_type(t)


__all__ = [
    "FormatError", "parse_sequent", "parse_rule", "parse_proof", "dump_proof",
    "parse_coterm", "parse_system", "dump_system", "dump_type",
]
