# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled trace-matrix composition.

A trace matrix is a frozenset of packed 64-bit entries
``(src << 32) | (dst << 16) | label``; see :mod:`mulj._kernel_py` for the
reference implementation and the meaning of the label field.
"""
from libc.stdlib cimport free, malloc


def compose(a, b):
    """Relational composition of two packed trace matrices."""
    cdef Py_ssize_t na = len(a), nb = len(b), x, y
    cdef long long *A
    cdef long long *B
    cdef long long ea, eb, aj, al, bl
    if na == 0 or nb == 0:
        return frozenset()
    A = <long long *> malloc(na * sizeof(long long))
    B = <long long *> malloc(nb * sizeof(long long))
    if A == NULL or B == NULL:
        free(A)
        free(B)
        raise MemoryError()
    try:
        x = 0
        for v in a:
            A[x] = v
            x += 1
        y = 0
        for v in b:
            B[y] = v
            y += 1
        out = set()
        for x in range(na):
            ea = A[x]
            aj = (ea >> 16) & 0xFFFF
            al = ea & 0xFFFF
            for y in range(nb):
                eb = B[y]
                if (eb >> 32) == aj:
                    bl = eb & 0xFFFF
                    out.add(((ea >> 32) << 32) | (((eb >> 16) & 0xFFFF) << 16) | (al if al > bl else bl))
        return frozenset(out)
    finally:
        free(A)
        free(B)
