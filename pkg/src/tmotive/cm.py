"""Explicit complete-multiplication motives over F_{q^r}(T) and F_q(T^{1/r})."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .dualize import dualize_mu
from .scalars import FiniteField, RationalField, RationalScalar, ExtensionRequired
from .skewcore import (
    TauPresentation,
    TPoly,
    TPresentation,
    mat_equal,
    mat_mul,
    mat_permute,
    mat_scalar_identity,
    mat_transpose,
    t_basis_with_pivots,
)

CONSTANT_FIELD = "constant-field"
KUMMER = "kummer"


@dataclass(frozen=True)
class CMDescriptor:
    family: str
    r: int
    phi: tuple
    p: int = 2
    s: int = 1

    def __post_init__(self):
        if self.family not in (CONSTANT_FIELD, KUMMER):
            raise ValueError(f"unknown CM family {self.family!r}")
        phi = tuple(self.phi)
        if list(phi) != sorted(set(phi)) or any(not 0 <= i < self.r for i in phi):
            raise ValueError("CM-type must be strictly increasing indices in [0, r)")
        if not phi:
            raise ValueError("CM-type must be nonempty")
        if self.family == KUMMER and self.r % self.p == 0:
            raise ValueError("kummer family needs gcd(r, q) = 1")
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return len(self.phi)

    @property
    def q(self) -> int:
        return self.p ** self.s

    def complement(self) -> "CMDescriptor":
        return CMDescriptor(self.family, self.r, complement_type(self.phi, self.r), self.p, self.s)


@dataclass(frozen=True)
class CMMultiplicities:
    """n = qq * sum(mult), r = m * g * qq^2 with g = len(mult)."""

    mult: tuple
    m: int
    qq: int
    n: int
    r: int

    def __post_init__(self):
        g = len(self.mult)
        if self.n != self.qq * sum(self.mult) or self.r != self.m * g * self.qq ** 2:
            raise ValueError("multiplicities violate n = qq*sum(mult), r = m*g*qq^2")
        if any(not 0 <= x <= self.m * self.qq for x in self.mult):
            raise ValueError("each multiplicity must lie in [0, m*qq]")


def complement_type(phi, r: int | None = None):
    """Set complement of a CM-type, or (m*qq - mult_i) for a multiplicity vector."""
    if isinstance(phi, CMMultiplicities):
        mult = tuple(phi.m * phi.qq - x for x in phi.mult)
        return CMMultiplicities(mult, phi.m, phi.qq, phi.r - phi.n, phi.r)
    if r is None:
        raise ValueError("rank needed for a set complement")
    s = set(phi)
    return tuple(i for i in range(r) if i not in s)


# ---------------------------------------------------------------------------
# constant-field family
# ---------------------------------------------------------------------------


def _block_lengths(phi: Sequence[int], r: int) -> list[int]:
    n = len(phi)
    return [(phi[(j + 1) % n] - phi[j]) % r or r for j in range(n)]


def constant_field_tau(d: CMDescriptor, ring: RationalField | None = None) -> TauPresentation:
    """T e_0 = theta e_0 + tau^{i_0 - i_{n-1} + r} e_{n-1}, T e_j = theta e_j + tau^{i_j - i_{j-1}} e_{j-1}."""
    ring = ring or RationalField(FiniteField(d.p, d.s, 1))
    n, r, phi = d.n, d.r, d.phi
    k = _block_lengths(phi, r)  # k[a]: tau-length of e_a, solved by row a + 1
    zero, one = ring.zero(), ring.one()
    A = [[[zero] * n for _ in range(n)] for _ in range(max(k))]
    for a in range(n):
        A[k[a] - 1][(a + 1) % n][a] = one
    return TauPresentation(n, A, ring, meta={"family": CONSTANT_FIELD, "phi": phi})


def constant_field_cyclic_q(d: CMDescriptor, ring: RationalField | None = None) -> TPresentation:
    """tau f_t = f_{t+1}, or (T - theta) f_{t+1} when t + 1 (mod r) is in the CM-type."""
    ring = ring or RationalField(FiniteField(d.p, d.s, 1))
    r = d.r
    zero = ring.zero()
    marker = TPoly.linear(ring.theta())
    one = TPoly((ring.one(),), zero)
    Q = [[TPoly((), zero) for _ in range(r)] for _ in range(r)]
    marks = set(d.phi)
    for t in range(r):
        Q[t][(t + 1) % r] = marker if (t + 1) % r in marks else one
    return TPresentation(Q, ring, labels=[("f", t) for t in range(r)])


@dataclass
class CMMotive:
    descriptor: CMDescriptor
    tau: TauPresentation | None
    presentation: TPresentation
    from_tau: TPresentation | None = None
    agrees: bool = True


def cm_motive_constant_field(d: CMDescriptor, ring: RationalField | None = None) -> CMMotive:
    """Both presentations; the tau-side conversion, cyclically shifted, must equal the marker matrix."""
    if d.family != CONSTANT_FIELD:
        raise ValueError("descriptor is not of the constant-field family")
    ring = ring or RationalField(FiniteField(d.p, d.s, 1))
    M = constant_field_tau(d, ring)
    n = d.n
    k = _block_lengths(d.phi, d.r)
    P_lex = t_basis_with_pivots(M, k, [(a + 1) % n for a in range(n)])
    perm = [(t - d.phi[0]) % d.r for t in range(d.r)]
    shifted = TPresentation(mat_permute(P_lex.Q, perm), ring, labels=[("f", t) for t in range(d.r)])
    cyc = constant_field_cyclic_q(d, ring)
    return CMMotive(d, M, cyc, shifted, mat_equal(shifted.Q, cyc.Q))


def marker_positions(P: TPresentation) -> tuple:
    """Read back t + 1 (mod r) for rows whose single entry is T - theta."""
    theta = P.ring.theta()
    out = []
    for t, row in enumerate(P.Q):
        for j, e in enumerate(row):
            if e.deg == 1 and e(theta).is_zero():
                out.append(j)
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# Kummer family
# ---------------------------------------------------------------------------


def _order_of(q: int, r: int) -> int:
    m, x = 1, q % r
    while x != 1 % r:
        x = x * q % r
        m += 1
    return m


def kummer_ring(d: CMDescriptor, M: int | None = None) -> tuple[RationalField, int]:
    """Scalar context F_{q^M}(s), s^r = theta, and a primitive r-th root of unity code."""
    need = _order_of(d.q, d.r)
    M = need if M is None else M
    if M % need:
        raise ExtensionRequired(need, f"primitive {d.r}-th root of unity")
    F = FiniteField(d.p, d.s, M)
    zeta = next(c for c in F.elements() if c and F.mult_order(c) == d.r)
    return RationalField(F, d.r), zeta


def elementary_symmetric(values: Sequence[RationalScalar], k: int, like: RationalScalar) -> RationalScalar:
    acc = like.zero_like()
    for combo in itertools.combinations(values, k):
        term = like.one_like()
        for v in combo:
            term = term * v
        acc = acc + term
    return acc


def kummer_q_by_rule(d: CMDescriptor, ring: RationalField, zeta: int, signed: bool = True) -> list:
    """Row-shift rule: first row c_j = (+-) sigma_{n-j}(Phi) s^{n-j}; row i is the right shift by i, wrapped entries times T.

    With ``signed`` the coefficients carry (-1)^{n-j}, as in the expansion of
    prod (S - zeta^{i} s); without it the row is taken literally.
    """
    r, n = d.r, d.n
    F = ring.field
    zero = ring.zero()
    s = ring.root_var()
    roots = [ring.const(F.pow(zeta, i)) for i in d.phi]
    first = []
    for j in range(n + 1):
        c = elementary_symmetric(roots, n - j, ring.one()) * s ** (n - j)
        if signed and (n - j) % 2:
            c = -c
        first.append(c)
    T = TPoly.T(zero)
    Q = [[TPoly((), zero) for _ in range(r)] for _ in range(r)]
    for i in range(r):
        for j, c in enumerate(first):
            col = (i + j) % r
            entry = TPoly((c,), zero)
            Q[i][col] = entry * T if i + j >= r else entry
    return Q


def kummer_q_by_expansion(d: CMDescriptor, ring: RationalField, zeta: int) -> list:
    """tau S^i f = S^i prod_j (S - zeta^{i_j} s) f, reduced with S^r = T."""
    r = d.r
    F = ring.field
    zero = ring.zero()
    s = ring.root_var()
    poly = [ring.one()]  # coefficients in S, low degree first
    for i in d.phi:
        root = ring.const(F.pow(zeta, i)) * s
        nxt = [zero] * (len(poly) + 1)
        for a, c in enumerate(poly):
            nxt[a + 1] = nxt[a + 1] + c
            nxt[a] = nxt[a] - c * root
        poly = nxt
    Q = []
    for i in range(r):
        row = [TPoly((), zero) for _ in range(r)]
        for a, c in enumerate(poly):
            if c.is_zero():
                continue
            e = a + i
            mono = TPoly((zero,) * (e // r) + (c,), zero)
            row[e % r] = row[e % r] + mono
        Q.append(row)
    return Q


def reflect(Q: list) -> list:
    r = len(Q)
    return [[Q[r - 1 - a][r - 1 - b] for b in range(r)] for a in range(r)]


def cm_motive_kummer(d: CMDescriptor, M: int | None = None) -> CMMotive:
    if d.family != KUMMER:
        raise ValueError("descriptor is not of the kummer family")
    ring, zeta = kummer_ring(d, M)
    Q = kummer_q_by_expansion(d, ring, zeta)
    P = TPresentation(Q, ring, labels=[("f", i) for i in range(d.r)])
    ruled = kummer_q_by_rule(d, ring, zeta)
    return CMMotive(d, None, P, None, mat_equal(ruled, Q))


def sigma_identity(d: CMDescriptor, M: int | None = None) -> bool:
    """sum_l sigma_l(Phi) sigma_{k-l}(Phi') = sigma_k(all r-th roots of unity) for every k."""
    ring, zeta = kummer_ring(d, M)
    F = ring.field
    one = ring.one()
    vals = [ring.const(F.pow(zeta, i)) for i in range(d.r)]
    a = [vals[i] for i in d.phi]
    b = [vals[i] for i in complement_type(d.phi, d.r)]
    for k in range(d.r + 1):
        lhs = one.zero_like()
        for l in range(k + 1):
            if l <= len(a) and k - l <= len(b):
                lhs = lhs + elementary_symmetric(a, l, one) * elementary_symmetric(b, k - l, one)
        if lhs != elementary_symmetric(vals, k, one):
            return False
    return True


# ---------------------------------------------------------------------------
# duality identities
# ---------------------------------------------------------------------------


@dataclass
class CMDualReport:
    descriptor: CMDescriptor
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def cm_dual_identity(d: CMDescriptor, literal_rule: bool = False) -> CMDualReport:
    """Constant field: the mu = 1 dual of Q(Phi) is Q(Phi'). Kummer: Q(f, Phi) Q(g, Phi')^t = (T - theta) E_r."""
    rep = CMDualReport(d)
    dc = d.complement()
    if d.family == CONSTANT_FIELD:
        mot = cm_motive_constant_field(d)
        mot_c = cm_motive_constant_field(dc, mot.presentation.ring)
        rep.checks["tau-conversion matches marker matrix"] = mot.agrees and mot_c.agrees
        rep.checks["markers read back"] = marker_positions(mot.presentation) == d.phi
        rep.checks["determinant law"] = mot.presentation.n == d.n
        dual = dualize_mu(mot.presentation, 1).dual
        rep.checks["dual is complementary type"] = dual is not None and mat_equal(dual.Q, mot_c.presentation.Q)
        return rep
    ring, zeta = kummer_ring(d)
    if literal_rule:
        Qf = kummer_q_by_rule(d, ring, zeta, signed=False)
        Qc = kummer_q_by_rule(dc, ring, zeta, signed=False)
    else:
        Qf = kummer_q_by_expansion(d, ring, zeta)
        Qc = kummer_q_by_expansion(dc, ring, zeta)
        rep.checks["row-shift rule matches expansion"] = mat_equal(kummer_q_by_rule(d, ring, zeta), Qf)
    lhs = mat_mul(Qf, mat_transpose(reflect(Qc)))
    rep.checks["Q(f,Phi) Q(g,Phi')^t = (T - theta) E"] = mat_equal(lhs, mat_scalar_identity(d.r, TPoly.linear(ring.theta())))
    if not literal_rule:
        P = TPresentation(Qf, ring)
        rep.checks["determinant law"] = P.n == d.n
    return rep


def all_types(r: int):
    for n in range(1, r):
        yield from itertools.combinations(range(r), n)
