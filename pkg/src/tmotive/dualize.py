"""mu-duals of T-presentations, abelianness verdicts and closed-form duals of standard families."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from .scalars import RationalField
from .skewcore import (
    DeterminantLawError,
    InvariantFactors,
    ShapeMismatch,
    TauPresentation,
    TPoly,
    TPresentation,
    adjugate_tpoly,
    constant_matrix,
    fq_linear_kernel,
    gauge_equiv_search_constant,
    invariant_factors_at_T_theta,
    mat_equal,
    mat_frobenius,
    mat_mul,
    mat_permute,
    mat_scalar_identity,
    mat_transpose,
    s_solve,
    t_basis_from_tau,
    t_basis_with_pivots,
)

CERTIFIED_ABELIAN = "certified-abelian"
CERTIFIED_NOT_ABELIAN = "certified-not-abelian"
INCONCLUSIVE = "inconclusive"


@dataclass
class Finding:
    kind: str
    detail: dict = field(default_factory=dict)


@dataclass
class Diagnosis:
    verdict: str
    findings: list = field(default_factory=list)
    certificate: Any = None


@dataclass
class DualResult:
    mu: int
    dual: TPresentation | None
    factors: InvariantFactors
    dual_dimension: int
    min_mu: int
    diagnostics: list = field(default_factory=list)

    @property
    def polynomial(self) -> bool:
        return self.dual is not None


# ---------------------------------------------------------------------------
# mu-duality
# ---------------------------------------------------------------------------


def _t_minus_theta_power(ring: RationalField, e: int) -> TPoly:
    return TPoly.linear(ring.theta()) ** e


def dualize_mu(P: TPresentation, mu: int, factors: InvariantFactors | None = None) -> DualResult:
    """Q' = (T - theta)^(mu - n) c^-1 adj(Q)^t when polynomial, else a diagnostic with the least admissible mu."""
    if mu < 1:
        raise ValueError("mu must be at least 1")
    ring = P.ring
    theta = ring.theta()
    if factors is None:
        factors = invariant_factors_at_T_theta(P)
    m = factors.max
    dual_dim = P.r * mu - P.n
    if mu < m:
        return DualResult(mu, None, factors, dual_dim, m, [Finding("non-polynomial", {"min_mu": m})])
    adj, det = adjugate_tpoly(P.Q)
    cinv = ring.one() / P.det_constant
    shift = mu - P.n
    if shift >= 0:
        factor = _t_minus_theta_power(ring, shift) * cinv
        Qp = [[adj[j][i] * factor for j in range(P.r)] for i in range(P.r)]
    else:
        Qp = []
        for i in range(P.r):
            row = []
            for j in range(P.r):
                a = adj[j][i]
                for _ in range(-shift):
                    a, rem = a.divmod_linear(theta)
                    if not rem.is_zero():
                        raise DeterminantLawError("adjugate entry not divisible although mu >= m")
                row.append(a * cinv)
            Qp.append(row)
    labels = [("dual", lab) for lab in P.labels] if P.labels else None
    dual = TPresentation(Qp, ring, labels=labels)
    if dual.n != dual_dim:
        raise DeterminantLawError(f"dual dimension {dual.n} disagrees with r*mu - n = {dual_dim}")
    return DualResult(mu, dual, factors, dual_dim, m, [])


def check_duality_identity(P: TPresentation, Pd: TPresentation, mu: int) -> bool:
    """Q'^t Q = (T - theta)^mu E."""
    lhs = mat_mul(mat_transpose(Pd.Q), P.Q)
    return mat_equal(lhs, mat_scalar_identity(P.r, _t_minus_theta_power(P.ring, mu)))


def mu_zero_bound(P: TPresentation, factors: InvariantFactors | None = None) -> int:
    """Conservative abelianness bound: maxdeg(adj Q / (T - theta)^(n - m)) + m + 1."""
    if factors is None:
        factors = invariant_factors_at_T_theta(P)
    adj, _ = adjugate_tpoly(P.Q)
    theta = P.ring.theta()
    strip = P.n - factors.max
    deg = 0
    for row in adj:
        for a in row:
            if a.is_zero():
                continue
            for _ in range(strip):
                a, _ = a.divmod_linear(theta)
            deg = max(deg, a.deg)
    return deg + factors.max + 1


# ---------------------------------------------------------------------------
# abelianness diagnostics
# ---------------------------------------------------------------------------


def _tau_fixed_rows(Q) -> list[int]:
    out = []
    for j, row in enumerate(Q):
        diag = row[j]
        if diag.deg != 0 or not all(row[k].is_zero() for k in range(len(row)) if k != j):
            continue
        if diag.c[0].is_constant():
            out.append(j)
    return out


def _tau_fixed_constant_vector(P: TPresentation) -> list[int] | None:
    """Nonzero constant w over F_{q^M} with w^{(1)} Q = w, found F_q-linearly."""
    F = P.ring.field
    r = P.r
    basis = F.fq_basis()
    unknowns = [(i, b) for i in range(r) for b in range(len(basis))]
    images = []
    for (i, b) in unknowns:
        img = [P.Q[i][j] * P.ring.const(F.frob(basis[b])) for j in range(r)]
        img[i] = img[i] - TPoly((P.ring.const(basis[b]),), P.zero)
        images.append(img)
    kernel = fq_linear_kernel(images, F)
    if not kernel:
        return None
    w = [0] * r
    for u, (i, b) in enumerate(unknowns):
        if kernel[0][u]:
            w[i] = F.add(w[i], F.mul(kernel[0][u], basis[b]))
    return w


def _tau_chains(Q) -> tuple[list[int], list[int]] | None:
    """Generators and chain lengths from rows of Q equal to a unit vector (tau f_j = f_k)."""
    r = len(Q)
    link = {}
    for j, row in enumerate(Q):
        nz = [k for k in range(r) if not row[k].is_zero()]
        if len(nz) == 1 and row[nz[0]].deg == 0 and row[nz[0]].c[0].is_one():
            link[j] = nz[0]
    targets = set(link.values())
    starts = [j for j in range(r) if j not in targets]
    lengths = []
    seen = set()
    for s in starts:
        length, cur = 1, s
        seen.add(cur)
        while cur in link:
            cur = link[cur]
            if cur in seen:
                return None
            seen.add(cur)
            length += 1
        lengths.append(length)
    if len(seen) != r:
        return None
    return starts, lengths


def _apply_tau(vec: list[TPoly], Q) -> list[TPoly]:
    """Coordinates of tau x from those of x: v^{(1)} Q."""
    r = len(Q)
    zero = Q[0][0].zero
    out = [TPoly((), zero) for _ in range(r)]
    for i, v in enumerate(vec):
        if v.is_zero():
            continue
        vq = v.frobenius(1)
        for j in range(r):
            if not Q[i][j].is_zero():
                out[j] = out[j] + vq * Q[i][j]
    return out


def tau_presentation_from_generators(
    P: TPresentation, generators: Sequence[list[TPoly]], k: Sequence[int], max_degree: int | None = None
) -> TauPresentation | None:
    """Solve T g - theta g = sum_l B_l tau^l g for the given generators.

    ``generators`` are coordinate vectors in the basis of ``P``. Returns the
    tau-presentation (N carries the tau^0 part) or None if no solution with
    tau-degree up to ``max_degree`` exists.
    """
    ring = P.ring
    zero = ring.zero()
    theta = ring.theta()
    r = P.r
    ngen = len(generators)
    L = max(max(k), 1) if max_degree is None else max_degree
    powers = []
    for g in generators:
        seq = [list(g)]
        for _ in range(L):
            seq.append(_apply_tau(seq[-1], P.Q))
        powers.append(seq)
    # the tau^j g_m with j < k(m) must form a basis over scalar[T]
    basis_rows = [powers[m][j] for m in range(ngen) for j in range(k[m])]
    if len(basis_rows) != r:
        return None
    from .skewcore import det_tpoly

    d = det_tpoly(basis_rows)
    if d.is_zero() or d.deg != 0:
        return None
    unknowns = [(m, l) for l in range(0, L + 1) for m in range(ngen)]
    A_sol = []
    Tpoly = TPoly.T(zero)
    for mg in range(ngen):
        target = [(Tpoly - theta) * c for c in powers[mg][0]]
        deg = max(
            [t.deg for t in target]
            + [c.deg for (m, l) in unknowns for c in powers[m][l] if not c.is_zero()]
            + [0]
        )
        rows, rhs = [], []
        for i in range(r):
            for t in range(deg + 1):
                rows.append([powers[m][l][i].coeff(t) for (m, l) in unknowns])
                rhs.append(target[i].coeff(t))
        sol = s_solve(rows, rhs, zero)
        if sol is None:
            return None
        A_sol.append(sol)
    n = ngen
    N = [[zero] * n for _ in range(n)]
    A = [[[zero] * n for _ in range(n)] for _ in range(L)]
    for mg, sol in enumerate(A_sol):
        for u, (m, l) in enumerate(unknowns):
            if l == 0:
                N[mg][m] = sol[u]
            else:
                A[l - 1][mg][m] = sol[u]
    while A and all(x.is_zero() for row in A[-1] for x in row):
        A.pop()
    try:
        return TauPresentation(n, A, ring, N=N, meta={"k": list(k)})
    except ShapeMismatch:
        return None


def abelian_diagnostic(
    Pd: TPresentation,
    mu: int | None = None,
    source: TPresentation | None = None,
    iteration_cap: int | None = None,
) -> Diagnosis:
    """Tri-state verdict on whether the presentation is an abelian T-motive."""
    findings = []
    fixed = _tau_fixed_rows(Pd.Q)
    if fixed:
        findings.append(Finding("tau-fixed-line", {"rows": fixed}))
        return Diagnosis(CERTIFIED_NOT_ABELIAN, findings)
    w = _tau_fixed_constant_vector(Pd)
    if w is not None:
        findings.append(Finding("tau-fixed-line", {"constant_vector": w}))
        return Diagnosis(CERTIFIED_NOT_ABELIAN, findings)
    if source is not None and mu is not None:
        bound = mu_zero_bound(source)
        findings.append(Finding("mu0-bound", {"mu0": bound}))
        if mu >= bound:
            return Diagnosis(CERTIFIED_ABELIAN, findings)
    chains = _tau_chains(Pd.Q)
    if chains is not None:
        starts, lengths = chains
        zero = Pd.zero
        one = Pd.ring.one()
        gens = []
        for s in starts:
            v = [TPoly((), zero) for _ in range(Pd.r)]
            v[s] = TPoly((one,), zero)
            gens.append(v)
        cap = iteration_cap if iteration_cap is not None else 64 * Pd.r
        top = max(lengths)
        for L in range(top, min(cap, top + Pd.r + 1) + 1):
            M = tau_presentation_from_generators(Pd, gens, lengths, max_degree=L)
            if M is not None:
                findings.append(Finding("tau-generators", {"generators": starts, "k": lengths}))
                return Diagnosis(CERTIFIED_ABELIAN, findings, certificate=M)
    findings.append(Finding("no-certificate", {}))
    return Diagnosis(INCONCLUSIVE, findings)


# ---------------------------------------------------------------------------
# standard-1 duals
# ---------------------------------------------------------------------------


def infer_standard1_k(M: TauPresentation) -> list[int]:
    """k(i) = highest tau-degree with a nonzero diagonal entry in row i."""
    k = []
    for i in range(M.n):
        top = 0
        for d in range(1, M.l + 1):
            if not M.A[d - 1][i][i].is_zero():
                top = d
        k.append(top)
    return k


def default_nu(k: Sequence[int]) -> dict:
    """Lexicographic bijection (i, j), 1 <= j <= k(i) - 2, onto n, ..., r - n - 1."""
    n = len(k)
    nu = {}
    pos = n
    for i in range(n):
        for j in range(1, k[i] - 1):
            nu[(i, j)] = pos
            pos += 1
    return nu


@dataclass
class Standard1Dual:
    source: TauPresentation
    dual: TauPresentation
    k: list
    nu: dict
    k_dual: list
    pivots: list

    @property
    def B1(self):
        return self.dual.A[0]

    @property
    def B2(self):
        return self.dual.A[1]

    def dual_t_presentation(self, check: bool = True) -> TPresentation:
        return t_basis_with_pivots(self.dual, self.k_dual, self.pivots, check=check)

    def correspondence(self) -> list[int]:
        """Position in the dual T-basis of the element matched with each X'[i, j]."""
        k, nu = self.k, self.nu
        ydx = {}
        for a in range(self.dual.n):
            for j in range(self.k_dual[a]):
                ydx[(a, j)] = len(ydx)
        perm = []
        for i in range(len(k)):
            for j in range(k[i]):
                if j == 0:
                    perm.append(ydx[(i, 1)])
                elif j == k[i] - 1:
                    perm.append(ydx[(i, 0)])
                else:
                    perm.append(ydx[(nu[(i, j)], 0)])
        return perm


def standard1_dual(M: TauPresentation, nu: dict | None = None, k: Sequence[int] | None = None) -> Standard1Dual:
    """M(B) with B = theta E + B1 tau + B2 tau^2 for a standard-1 motive with all k(i) >= 3."""
    if k is None:
        k = infer_standard1_k(M)
    k = list(k)
    n = M.n
    if any(k[i] < k[i + 1] for i in range(n - 1)):
        raise ShapeMismatch("standard-1 needs non-increasing k")
    from .skewcore import validate_standard_shape

    validate_standard_shape(M, list(range(n)), k, None)
    if min(k) < 3:
        raise ShapeMismatch("lambda_m < 3 unsupported")
    if nu is None:
        nu = default_nu(k)
    r = sum(k)
    size = r - n
    expected = {(i, j) for i in range(n) for j in range(1, k[i] - 1)}
    if set(nu) != expected or sorted(nu.values()) != list(range(n, size)):
        raise ShapeMismatch("nu must biject the pairs (i, j), 1 <= j <= k(i) - 2, onto n..r-n-1")
    ring = M.ring
    zero, one = ring.zero(), ring.one()
    B1 = [[zero] * size for _ in range(size)]
    B2 = [[zero] * size for _ in range(size)]

    def a(j, row, col):
        return M.A[j - 1][row][col]

    for i in range(n):
        ki = k[i]
        for al in range(n):
            B1[i][al] = -a(ki - 1, al, i)
            for j in range(1, ki - 1):
                B1[nu[(i, j)]][al] = -a(j, al, i)
        for j in range(1, ki - 2):
            B1[nu[(i, j + 1)]][nu[(i, j)]] = one
        B1[i][nu[(i, ki - 2)]] = one
        B2[nu[(i, 1)]][i] = one
    k_dual = [2] * n + [1] * (size - n)
    pivots = [0] * size
    for i in range(n):
        pivots[i] = nu[(i, 1)]
        for j in range(1, k[i] - 1):
            pivots[nu[(i, j)]] = nu[(i, j + 1)] if j <= k[i] - 3 else i
    dual = TauPresentation(size, [B1, B2], ring, meta={"k": k_dual})
    return Standard1Dual(M, dual, k, dict(nu), k_dual, pivots)


def verify_standard1_dual(S: Standard1Dual, P: TPresentation | None = None) -> bool:
    """Q(M(B)) reindexed by the X'/Y correspondence satisfies Q'^t Q = (T - theta) E."""
    if P is None:
        P = t_basis_from_tau(S.source, "standard1", k=S.k)
    PB = S.dual_t_presentation(check=False)
    Qd = mat_permute(PB.Q, S.correspondence())
    lhs = mat_mul(mat_transpose(Qd), P.Q)
    return mat_equal(lhs, mat_scalar_identity(P.r, TPoly.linear(P.ring.theta())))


# ---------------------------------------------------------------------------
# standard-3 dual by generator solving
# ---------------------------------------------------------------------------


def standard3_dual_from_generators(
    M: TauPresentation,
    phi: Sequence[int],
    k: Sequence[int],
    order: Sequence[int],
    generators: Sequence[tuple[int, int]],
    k_dual: Sequence[int],
) -> TauPresentation | None:
    """tau-presentation of the 1-dual on generators X'[alpha, j] of the dual basis."""
    P = t_basis_from_tau(M, "standard3", phi=phi, k=k, order=order)
    D = dualize_mu(P, 1)
    if D.dual is None:
        return None
    idx = {lab[1:]: pos for pos, lab in enumerate(P.labels)}
    zero = P.zero
    one = P.ring.one()
    gens = []
    for (al, j) in generators:
        v = [TPoly((), zero) for _ in range(P.r)]
        v[idx[(al, j)]] = TPoly((one,), zero)
        gens.append(v)
    return tau_presentation_from_generators(D.dual, gens, k_dual)


# ---------------------------------------------------------------------------
# the r = 2n family
# ---------------------------------------------------------------------------


def family_r2n(A: Sequence[Sequence[Any]], ring: RationalField) -> TauPresentation:
    """T e = theta e + A tau e + tau^2 e."""
    n = len(A)
    zero, one = ring.zero(), ring.one()
    E = [[one if i == j else zero for j in range(n)] for i in range(n)]
    return TauPresentation(n, [[list(r) for r in A], E], ring)


def family_dual_r2n(A: Sequence[Sequence[Any]]) -> list:
    """Coefficient of the dual in the same family: -A^t."""
    n = len(A)
    return [[-A[j][i] for j in range(n)] for i in range(n)]


def family_r2n_dual_permutation(n: int) -> list[int]:
    """Reindex (e', tau e') to the dual basis order f'_i = tau e'_i, f'_{n+i} = e'_i."""
    return [n + i for i in range(n)] + list(range(n))


def verify_family_r2n_dual(A, ring: RationalField) -> bool:
    n = len(A)
    P = t_basis_from_tau(family_r2n(A, ring))
    Pd = t_basis_from_tau(family_r2n(family_dual_r2n(A), ring))
    Qd = mat_permute(Pd.Q, family_r2n_dual_permutation(n))
    return mat_equal(mat_mul(mat_transpose(Qd), P.Q), mat_scalar_identity(2 * n, TPoly.linear(ring.theta())))


# ---------------------------------------------------------------------------
# elementary transformations
# ---------------------------------------------------------------------------


def _tau_twist_row(M: TauPresentation, row: int) -> dict:
    """tau applied to the right side of row ``row``: {(degree, column): coefficient}."""
    out = {}
    theta = M.ring.theta()
    out[(1, row)] = theta.frobenius(1)
    for m in range(M.n):
        if not M.N[row][m].is_zero():
            out[(1, m)] = out.get((1, m), M.ring.zero()) + M.N[row][m].frobenius(1)
    for d, Ad in enumerate(M.A, start=1):
        for m in range(M.n):
            if not Ad[row][m].is_zero():
                out[(d + 1, m)] = out.get((d + 1, m), M.ring.zero()) + Ad[row][m].frobenius(1)
    return out


def add_twisted_rows(M: TauPresentation, targets: Sequence[int], sources: Sequence[int], C, sign: int = 1) -> TauPresentation:
    """P_t <- P_t + sign * sum_c C[t][c] P_{s_c}^q for t in targets."""
    ring = M.ring
    zero = ring.zero()
    n = M.n
    twisted = {s: _tau_twist_row(M, s) for s in sources}
    L = max([M.l] + [d for tw in twisted.values() for (d, _) in tw])
    A = [[[M.A[d][i][j] if d < M.l else zero for j in range(n)] for i in range(n)] for d in range(L)]
    for ti, t in enumerate(targets):
        for ci, s in enumerate(sources):
            c = C[ti][ci]
            if c.is_zero():
                continue
            for (d, m), val in twisted[s].items():
                term = c * val
                A[d - 1][t][m] = A[d - 1][t][m] + (term if sign > 0 else -term)
    while A and all(x.is_zero() for row in A[-1] for x in row):
        A.pop()
    return TauPresentation(n, A, ring, N=[list(r) for r in M.N], meta=dict(M.meta))


@dataclass
class ElementaryTransform:
    M1: TauPresentation
    M1_dual: TauPresentation
    base_dual: Standard1Dual
    gamma1: int
    gamma2: int
    C: list
    literal_rows: bool = False


def elementary_transform_dual(
    M: TauPresentation, C, k: Sequence[int] | None = None, nu: dict | None = None, literal_rows: bool = False
) -> ElementaryTransform:
    """P_1(M1) = P_1(M) + C P_2(M)^q and P_2(M1') = P_2(M') - C^t P_1(M')^q.

    On the dual side the second block is read as the rows carrying tau^2 e'_i,
    i.e. rows nu(i, 1); ``literal_rows`` uses rows gamma1..gamma2-1 instead, which
    does not give the dual in general.
    """
    if k is None:
        k = infer_standard1_k(M)
    k = list(k)
    levels = sorted(set(k), reverse=True)
    if len(levels) < 2:
        raise ShapeMismatch("shape violation: needs at least two levels")
    lam1, lam2 = levels[0], levels[1]
    if lam2 != lam1 - 1:
        raise ShapeMismatch("shape violation: lambda_2 must equal lambda_1 - 1")
    g1 = sum(1 for x in k if x == lam1)
    g2 = g1 + sum(1 for x in k if x == lam2)
    if len(C) != g1 or any(len(row) != g2 - g1 for row in C):
        raise ShapeMismatch("shape violation: C must be gamma1 x (gamma2 - gamma1)")
    S = standard1_dual(M, nu=nu, k=k)
    M1 = add_twisted_rows(M, list(range(g1)), list(range(g1, g2)), C, sign=1)
    Ct = [[C[j][i] for j in range(g1)] for i in range(g2 - g1)]
    targets = list(range(g1, g2)) if literal_rows else [S.nu[(t, 1)] for t in range(g1, g2)]
    M1d = add_twisted_rows(S.dual, targets, list(range(g1)), Ct, sign=-1)
    return ElementaryTransform(M1, M1d, S, g1, g2, [list(r) for r in C], literal_rows)


def transformed_t_presentations(E: ElementaryTransform) -> tuple[TPresentation, TPresentation]:
    """Q(M1) and Q(M1') in the bases of M and M(B).

    The added rows C P_2^q equal C T tau e on the second block, so only the row
    producing tau^(lambda_1) e_i (resp. the pivot row of the last nu-chain element)
    changes, by a T-multiple of C (resp. C^t).
    """
    if E.literal_rows:
        raise ValueError("T-basis shortcut assumes the tau^2-row reading of the second block")
    S = E.base_dual
    P = t_basis_from_tau(S.source, "standard1", k=S.k)
    PB = S.dual_t_presentation(check=False)
    ring = P.ring
    T = TPoly.T(ring.zero())
    xidx = {lab[1:]: pos for pos, lab in enumerate(P.labels)}
    yidx = {lab[1:]: pos for pos, lab in enumerate(PB.labels)}
    Q1 = [list(row) for row in P.Q]
    Q1d = [list(row) for row in PB.Q]
    k, nu = S.k, S.nu
    for i in range(E.gamma1):
        for c in range(E.gamma2 - E.gamma1):
            coef = E.C[i][c]
            if coef.is_zero():
                continue
            src = E.gamma1 + c
            row = xidx[(i, k[i] - 1)]
            col = xidx[(src, 1)]
            Q1[row][col] = Q1[row][col] - T * coef
            drow = yidx[(src, 1)]
            dcol = yidx[(i, 1)]
            Q1d[drow][dcol] = Q1d[drow][dcol] + T * coef
    return TPresentation(Q1, ring, labels=P.labels), TPresentation(Q1d, ring, labels=PB.labels)


def verify_elementary_transform(E: ElementaryTransform) -> bool:
    """dualize_mu(Q(M1), 1) against Q(M1') reindexed by the X'/Y correspondence; a constant gauge is allowed."""
    P1, P1d = transformed_t_presentations(E)
    perm = E.base_dual.correspondence()
    Qd = mat_permute(P1d.Q, perm)
    D = dualize_mu(P1, 1)
    if mat_equal(D.dual.Q, Qd):
        return True
    return gauge_equiv_search_constant(D.dual, TPresentation(Qd, P1.ring)) is not None


def solved_dual_of_transform(E: ElementaryTransform) -> TauPresentation | None:
    """tau-presentation of dualize_mu(Q(M1), 1) on the generators matched with e'_j."""
    S = E.base_dual
    P1 = transformed_t_presentations(replace(E, literal_rows=False))[0]
    D = dualize_mu(P1, 1).dual
    S = E.base_dual
    ylabels = [lab[1:] for lab in S.dual_t_presentation(check=False).labels]
    where = {y: p for p, y in enumerate(S.correspondence())}
    zero, one = P1.zero, P1.ring.one()
    gens = []
    for j in range(S.dual.n):
        v = [TPoly((), zero) for _ in range(P1.r)]
        v[where[ylabels.index((j, 0))]] = TPoly((one,), zero)
        gens.append(v)
    return tau_presentation_from_generators(D, gens, S.k_dual)


# ---------------------------------------------------------------------------
# endomorphisms and virtual motives
# ---------------------------------------------------------------------------


def dual_endo_matrix(D, P: TPresentation):
    """Matrix D^t of the dual endomorphism; requires D^{(1)} Q = Q D."""
    if not mat_equal(mat_mul(mat_frobenius(D), P.Q), mat_mul(P.Q, D)):
        raise ValueError("commutation precondition fails: D^(1) Q != Q D")
    return mat_transpose(D)


@dataclass
class VirtualMotive:
    """M tensor (Carlitz)^twist."""

    motive: TPresentation
    twist: int

    def realize(self, extra: int = 0) -> TPresentation:
        """Q (T - theta)^(twist + extra); requires twist + extra >= 0."""
        e = self.twist + extra
        if e < 0:
            raise ValueError("negative twist cannot be realized")
        f = _t_minus_theta_power(self.motive.ring, e)
        return TPresentation([[a * f for a in row] for row in self.motive.Q], self.motive.ring, check=True)


def virtual_equal(V1: VirtualMotive, V2: VirtualMotive) -> bool:
    """Equality after matching twists: equal matrices or a constant gauge between them."""
    low = min(V1.twist, V2.twist)
    P1 = V1.realize(-low)
    P2 = V2.realize(-low)
    if P1.r != P2.r:
        return False
    if mat_equal(P1.Q, P2.Q):
        return True
    return gauge_equiv_search_constant(P1, P2) is not None


def dualize_virtual(V: VirtualMotive, mu: int, base_mu: int | None = None) -> VirtualMotive:
    """Dual of M tensor C^t at mu, computed at an admissible base mu1 and re-twisted by mu - mu1 - t.

    The default base is the least mu1 >= m whose dual is not certified non-abelian.
    """
    P = V.motive
    factors = invariant_factors_at_T_theta(P)
    if base_mu is None:
        bound = mu_zero_bound(P, factors)
        base_mu = max(factors.max, 1)
        while base_mu < bound:
            D = dualize_mu(P, base_mu, factors)
            if abelian_diagnostic(D.dual).verdict != CERTIFIED_NOT_ABELIAN:
                break
            base_mu += 1
    D = dualize_mu(P, base_mu, factors)
    if D.dual is None:
        raise ValueError(f"base mu {base_mu} below the least admissible {D.min_mu}")
    return VirtualMotive(D.dual, mu - base_mu - V.twist)
