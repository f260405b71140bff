"""Pure-Python trace-matrix composition (fallback for the compiled kernel).

Entries are packed as ``(src << 32) | (dst << 16) | label`` where ``src`` and
``dst`` are shifted formula positions and ``label`` is 0 for a step that is
never principal, otherwise ``2 * rank + 2 + bad``.  Combining two labels is
plain ``max``: the higher-priority principal formula wins, and on a tie a bad
occurrence wins over a good one.
"""
from __future__ import annotations

from collections import defaultdict


def compose(a, b) -> frozenset:
    """Relational composition of two packed trace matrices."""
    by_src = defaultdict(list)
    for e in b:
        by_src[e >> 32].append(e)
    out = set()
    for ea in a:
        aj = (ea >> 16) & 0xFFFF
        al = ea & 0xFFFF
        hi = (ea >> 32) << 32
        for eb in by_src.get(aj, ()):
            bl = eb & 0xFFFF
            out.add(hi | (((eb >> 16) & 0xFFFF) << 16) | (al if al > bl else bl))
    return frozenset(out)
