"""Seeded generators of random presentations for the randomized suites."""

from __future__ import annotations

import random

from .scalars import FiniteField, RationalField, RationalScalar
from .skewcore import TauPresentation, s_det

# q -> (p, s)
Q_TABLE = {2: (2, 1), 3: (3, 1), 4: (2, 2), 5: (5, 1), 7: (7, 1), 8: (2, 3), 9: (3, 2)}


def ring_for(q: int, M: int = 1) -> RationalField:
    p, s = Q_TABLE[q]
    return RationalField(FiniteField(p, s, M))


def random_scalar(ring: RationalField, rng: random.Random, max_terms: int = 3, fraction_rate: float = 0.3) -> RationalScalar:
    """A random element of F_{q^M}(theta); a linear denominator appears with probability ``fraction_rate``."""
    F = ring.field
    num = tuple(rng.randrange(F.order) for _ in range(rng.randrange(0, max_terms)))
    if rng.random() < fraction_rate:
        den = (rng.randrange(F.order), 1)
        return ring.make(num, den)
    return ring.make(num)


def random_standard1(ring: RationalField, k, rng: random.Random) -> TauPresentation:
    """Standard-1 data: A_{k(i)} has 1 at (i, i); entries (i, a) of A_d with d < k(a) are random."""
    n, zero, l = len(k), ring.zero(), max(k)
    A = [[[zero] * n for _ in range(n)] for _ in range(l)]
    for i in range(n):
        for a in range(n):
            for d in range(1, k[a]):
                A[d - 1][i][a] = random_scalar(ring, rng)
        A[k[i] - 1][i][i] = ring.one()
    return TauPresentation(n, A, ring)


def random_standard1_case(rng: random.Random, qs=(2, 3, 4), max_n: int = 3, k_range=(3, 5)) -> TauPresentation:
    """Random standard-1 motive with n <= max_n and k(1) >= ... >= k(n) drawn from ``k_range``."""
    q = rng.choice(list(qs))
    ring = ring_for(q, rng.choice([1, 2]))
    n = rng.randint(1, max_n)
    k = sorted((rng.randint(*k_range) for _ in range(n)), reverse=True)
    return random_standard1(ring, k, rng)


def random_generic_tau(ring: RationalField, n: int, l: int, rng: random.Random) -> TauPresentation:
    """Random n x n coefficients A_1..A_l with A_l invertible over F_{q^M}(theta)."""
    while True:
        A = [[[random_scalar(ring, rng) for _ in range(n)] for _ in range(n)] for _ in range(l)]
        if not s_det(A[-1]).is_zero():
            return TauPresentation(n, A, ring)
