"""Pure-Python compute kernels.

Same surface as the compiled extension in _kernel.pyx; the backend module
picks one at import time.  Three hot loops live here: the simplex tableau
pivot, exact sign evaluation of subset sums at a rational point, and the
superadditivity quick-rejection test used to prune sign patterns before
they reach the LP.
"""

BACKEND_NAME = "pure"


def pivot_step(tab, r, c):
    """In-place simplex pivot on row r, column c of a dense tableau.

    tab is a list of equal-length lists of exact rationals.  Row r is
    scaled so tab[r][c] = 1, then column c is eliminated from every other
    row.
    """
    prow = tab[r]
    p = prow[c]
    if not p:
        raise ZeroDivisionError("pivot on zero entry")
    if p != 1:
        inv_applied = [x / p for x in prow]
        tab[r] = prow = inv_applied
    for i in range(len(tab)):
        if i == r:
            continue
        row = tab[i]
        f = row[c]
        if f:
            for j in range(len(row)):
                if prow[j]:
                    row[j] = row[j] - f * prow[j]


def sign_eval(masks, nums):
    """Signs of subset sums: for each bitmask, sign(sum of nums over set bits).

    nums are integer numerators over a shared positive denominator, so the
    denominator never matters.  Returns a list of -1 / 0 / +1.
    """
    out = []
    for mask in masks:
        s = 0
        m = mask
        while m:
            low = m & -m
            s += nums[low.bit_length() - 1]
            m ^= low
        out.append(0 if s == 0 else (1 if s > 0 else -1))
    return out


def quick_check(signs, quads):
    """Superadditivity screen for a candidate chamber sign pattern.

    signs: +-1 per canonical key class.  quads: precomputed 8-tuples
    (ia, oa, ib, ob, iu, ou, iv, ov) encoding pairs of subset masks A, B
    with their union U and intersection V as (class index, orientation);
    index -1 with orientation 0 marks a mask whose functional is zero on
    the flat.  Since lambda_A + lambda_B = lambda_U + lambda_V pointwise,
    a pattern with lambda_A, lambda_B both positive but lambda_U and
    lambda_V both nonpositive is infeasible.  Returns False on any
    violation, True if the pattern survives (it may still be infeasible).
    """
    for ia, oa, ib, ob, iu, ou, iv, ov in quads:
        if oa * signs[ia] > 0 and ob * signs[ib] > 0:
            vu = ou * signs[iu] if iu >= 0 else 0
            vv = ov * signs[iv] if iv >= 0 else 0
            if vu <= 0 and vv <= 0:
                return False
    return True
