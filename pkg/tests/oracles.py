"""Naive reference computations, independent of the library's fast paths."""

from __future__ import annotations

import itertools
from fractions import Fraction


def fp_poly_mulmod(a, b, modulus, p):
    """Schoolbook product of digit lists reduced by a monic modulus over F_p."""
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    d = len(modulus) - 1
    for k in range(len(prod) - 1, d - 1, -1):
        c = prod[k]
        if c:
            for t in range(d + 1):
                prod[k - d + t] = (prod[k - d + t] - c * modulus[t]) % p
    out = prod[:d] + [0] * max(0, d - len(prod))
    return out


def digits(code, p, width):
    out = []
    for _ in range(width):
        out.append(code % p)
        code //= p
    return out


def undigits(ds, p):
    return sum(d * p ** i for i, d in enumerate(ds))


def field_mul(F, a, b):
    """Product of two codes of F computed from the modulus alone."""
    D = F.degree
    return undigits(fp_poly_mulmod(digits(a, F.p, D), digits(b, F.p, D), list(F.modulus), F.p), F.p)


def laurent_division(num, den, p, count):
    """(v, c) with num/den = sum_k c[k] theta^(-(v + k)), by leading-term cancellation over F_p."""
    num = {i: c % p for i, c in enumerate(num) if c % p}
    den = {i: c % p for i, c in enumerate(den) if c % p}
    dd = max(den)
    inv = pow(den[dd], p - 2, p)
    rem = dict(num)
    out = []
    top = max(num) if num else 0
    start = top - dd
    for k in range(count):
        deg = top - k
        c = rem.get(deg, 0) * inv % p
        out.append(c)
        if c:
            for i, d in den.items():
                e = deg - dd + i
                rem[e] = (rem.get(e, 0) - c * d) % p
    return -start, out


def tpoly_det_leibniz(Q, zero_poly):
    """Determinant of a square TPoly matrix by the permutation expansion."""
    n = len(Q)
    acc = zero_poly
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = None
        for i in range(n):
            e = Q[i][perm[i]]
            term = e if term is None else term * e
            if term.is_zero():
                break
        if term.is_zero():
            continue
        acc = acc - term if inv % 2 else acc + term
    return acc


def valuation_at(poly, theta):
    """Exponent of (T - theta) dividing a nonzero TPoly."""
    v = 0
    while True:
        q, r = poly.divmod_linear(theta)
        if not r.is_zero():
            return v
        poly, v = q, v + 1


def determinantal_exponents(Q, theta, zero_poly):
    """Invariant-factor exponents at T = theta from the gcd valuations of k x k minors."""
    r = len(Q)
    d = [0]
    for k in range(1, r + 1):
        best = None
        for rows in itertools.combinations(range(r), k):
            for cols in itertools.combinations(range(r), k):
                sub = [[Q[i][j] for j in cols] for i in rows]
                m = tpoly_det_leibniz(sub, zero_poly)
                if m.is_zero():
                    continue
                v = valuation_at(m, theta)
                best = v if best is None else min(best, v)
        d.append(best)
    return [d[k] - d[k - 1] for k in range(1, r + 1)]


def lower_hull_bruteforce(points):
    """Vertices of the lower convex hull: points not on or above a chord between two others."""
    pts = sorted(set(points))
    keep = []
    for i, (x, y) in enumerate(pts):
        below_all = True
        for (x0, y0) in pts:
            for (x1, y1) in pts:
                if x0 < x < x1:
                    chord = Fraction(y0) + Fraction(y1 - y0, x1 - x0) * (x - x0)
                    if y >= chord:
                        below_all = False
        if below_all:
            keep.append((x, Fraction(y)))
    return keep


def apply_tau(vec, Q):
    """tau applied to sum_j vec[j] f_j, given tau f_j = sum_k Q[j][k] f_k."""
    zero_poly = vec[0] - vec[0]
    out = [zero_poly for _ in range(len(Q))]
    for j, c in enumerate(vec):
        if c.is_zero():
            continue
        cq = c.frobenius(1)
        for k in range(len(Q)):
            if not Q[j][k].is_zero():
                out[k] = out[k] + cq * Q[j][k]
    return out


def evaluate_in_x(coeffs, x):
    """sum_i coeffs[i] x^i for TPoly coefficients and a TPoly point."""
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def scalar_det_gauss(M, zero):
    """Determinant of a square scalar matrix by elimination with nonzero pivots."""
    A = [list(row) for row in M]
    n = len(A)
    det = zero.one_like()
    for c in range(n):
        piv = next((i for i in range(c, n) if not A[i][c].is_zero()), None)
        if piv is None:
            return zero
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det = det * A[c][c]
        inv = A[c][c].inverse()
        for i in range(c + 1, n):
            if A[i][c].is_zero():
                continue
            f = A[i][c] * inv
            A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return det


def det_law_by_evaluation(Q, theta, n):
    """det Q(T) = c (T - theta)^n for one nonzero scalar c, checked at more points than the degree bound."""
    bound = sum(max((e.deg for e in row if not e.is_zero()), default=0) for row in Q)
    one = theta.one_like()
    c = None
    for i in range(bound + 1):
        t = theta ** (i + 2) + one
        value = scalar_det_gauss([[evaluate_in_x(list(e.c), t) if e.c else theta.zero_like() for e in row] for row in Q], theta.zero_like())
        expected = (t - theta) ** n
        if c is None:
            c = value / expected
            if c.is_zero():
                return False
        elif value != c * expected:
            return False
    return True
