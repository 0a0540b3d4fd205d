# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled compute kernels: same surface as _kernel_py.

Arithmetic stays on exact Python rationals / big integers; the speedup
comes from C-level loop control and list indexing in the three hot spots
(simplex pivots, subset-sum sign evaluation, superadditivity screening).
"""

BACKEND_NAME = "compiled"


def pivot_step(list tab, Py_ssize_t r, Py_ssize_t c):
    """In-place simplex pivot on row r, column c of a dense tableau."""
    cdef Py_ssize_t i, j, nrows, ncols
    cdef list prow, row
    cdef object p, f, pj
    prow = <list>tab[r]
    ncols = len(prow)
    p = prow[c]
    if not p:
        raise ZeroDivisionError("pivot on zero entry")
    if p != 1:
        prow = [x / p for x in prow]
        tab[r] = prow
    nrows = len(tab)
    for i in range(nrows):
        if i == r:
            continue
        row = <list>tab[i]
        f = row[c]
        if f:
            for j in range(ncols):
                pj = prow[j]
                if pj:
                    row[j] = row[j] - f * pj


def sign_eval(masks, nums):
    """Signs of subset sums at an integer-numerator point; -1/0/+1 each."""
    cdef unsigned long long m, low
    cdef Py_ssize_t idx
    cdef object s
    cdef list out = []
    for mask in masks:
        s = 0
        m = <unsigned long long>mask
        while m:
            low = m & (~m + 1)
            idx = 0
            while (low >> idx) > 1:
                idx += 1
            s = s + nums[idx]
            m ^= low
        out.append(0 if s == 0 else (1 if s > 0 else -1))
    return out


def quick_check(signs, quads):
    """Superadditivity screen; see the pure twin for the contract."""
    cdef int ia, oa, ib, ob, iu, ou, iv, ov, vu, vv
    cdef Py_ssize_t k, nq, nk
    cdef list sg
    nk = len(signs)
    sg = [int(x) for x in signs]
    cdef int csigns[64]
    if nk > 64:
        raise ValueError("too many key classes for the compiled screen")
    for k in range(nk):
        csigns[k] = <int>sg[k]
    nq = len(quads)
    for k in range(nq):
        ia, oa, ib, ob, iu, ou, iv, ov = quads[k]
        if oa * csigns[ia] > 0 and ob * csigns[ib] > 0:
            vu = ou * csigns[iu] if iu >= 0 else 0
            vv = ov * csigns[iv] if iv >= 0 else 0
            if vu <= 0 and vv <= 0:
                return False
    return True
