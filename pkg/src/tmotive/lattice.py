"""Siegel matrices, lattice duality, block equivalence and C-lattices."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

from .scalars import FieldElement, FiniteField, RationalField, RationalScalar
from .skewcore import ff_det, ff_nullspace, s_inverse_and_det


class SearchSpaceTooLarge(RuntimeError):
    def __init__(self, dimension: int, q: int):
        super().__init__(f"solution space of dimension {dimension} over F_{q} exceeds the search cap")
        self.dimension = dimension


# ---------------------------------------------------------------------------
# small generic matrix helpers over scalars
# ---------------------------------------------------------------------------


def smat_mul(A, B):
    if not A or not B:
        return [[] for _ in A]
    zero = _zero_of(A, B)
    return [
        [sum((A[i][t] * B[t][j] for t in range(len(B))), zero) for j in range(len(B[0]))]
        for i in range(len(A))
    ]


def _zero_of(*mats):
    for M in mats:
        for row in M:
            for x in row:
                return x.zero_like()
    raise ValueError("empty matrices carry no scalar type")


def smat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def smat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def smat_neg(A):
    return [[-a for a in row] for row in A]


def smat_t(A):
    return [list(c) for c in zip(*A)]


def smat_inv(A):
    inv, _ = s_inverse_and_det(A)
    if inv is None:
        raise ZeroDivisionError("singular matrix")
    return inv


def smat_is_zero(A) -> bool:
    return all(x.is_zero() for row in A for x in row)


def smat_equal(A, B) -> bool:
    return len(A) == len(B) and smat_is_zero(smat_sub(A, B))


def smat_identity(n, like):
    zero, one = like.zero_like(), like.one_like()
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def blocks(gamma, n: int):
    """(A, B, C, D) of the (n, r - n)-block structure."""
    A = [row[:n] for row in gamma[:n]]
    B = [row[n:] for row in gamma[:n]]
    C = [row[:n] for row in gamma[n:]]
    D = [row[n:] for row in gamma[n:]]
    return A, B, C, D


def from_blocks(A, B, C, D):
    return [ra + rb for ra, rb in zip(A, B)] + [rc + rd for rc, rd in zip(C, D)]


# ---------------------------------------------------------------------------
# Siegel matrices
# ---------------------------------------------------------------------------


@dataclass
class SiegelMatrix:
    """(r - n) x n matrix: row i holds the coordinates of phi(e_{n+i}) in phi(e_1..e_n)."""

    r: int
    n: int
    Z: list

    def __post_init__(self):
        if len(self.Z) != self.r - self.n or any(len(row) != self.n for row in self.Z):
            raise ValueError(f"Siegel matrix must be {(self.r - self.n)}x{self.n}")

    def equal(self, other: "SiegelMatrix") -> bool:
        return self.r == other.r and self.n == other.n and smat_equal(self.Z, other.Z)


def siegel_dual(S: SiegelMatrix) -> SiegelMatrix:
    """-Z^t, shape n x (r - n)."""
    return SiegelMatrix(S.r, S.r - S.n, smat_neg(smat_t(S.Z)) if S.Z else [[] for _ in range(S.n)])


@dataclass
class BlockChange:
    gamma: list
    n: int

    @property
    def r(self) -> int:
        return len(self.gamma)

    def parts(self):
        return blocks(self.gamma, self.n)


def act(gamma: BlockChange, S: SiegelMatrix) -> SiegelMatrix:
    """Z1 = (C + D Z)(A + B Z)^{-1}."""
    A, B, C, D = gamma.parts()
    num = smat_add(C, smat_mul(D, S.Z))
    den = smat_add(A, smat_mul(B, S.Z))
    return SiegelMatrix(S.r, S.n, smat_mul(num, smat_inv(den)))


@dataclass(frozen=True)
class BlockVerdict:
    holds: bool
    transposed_holds: bool

    def __bool__(self) -> bool:
        return self.holds


def block_action_verify(gamma: BlockChange, S: SiegelMatrix, S1: SiegelMatrix) -> BlockVerdict:
    """C + D Z = Z1 (A + B Z), and -C1^t + A1^t Z^t = Z1^t (D1^t - B1^t Z^t) for the blocks of gamma^{-1}."""
    A, B, C, D = gamma.parts()
    Z, Z1 = S.Z, S1.Z
    lhs = smat_add(C, smat_mul(D, Z))
    rhs = smat_mul(Z1, smat_add(A, smat_mul(B, Z)))
    holds = smat_equal(lhs, rhs)
    A1, B1, C1, D1 = blocks(smat_inv(gamma.gamma), gamma.n)
    Zt, Z1t = smat_t(Z), smat_t(Z1)
    lhs2 = smat_add(smat_neg(smat_t(C1)), smat_mul(smat_t(A1), Zt))
    rhs2 = smat_mul(Z1t, smat_sub(smat_t(D1), smat_mul(smat_t(B1), Zt)))
    return BlockVerdict(holds, smat_equal(lhs2, rhs2))


def dual_map_blocks(Mblk, n: int):
    """(r - n, n)-block matrix [[M22^t, M12^t], [M21^t, M11^t]] from the (n, r - n) blocks of M."""
    M11, M12, M21, M22 = blocks(Mblk, n)
    return from_blocks(smat_t(M22) if M22 else [], smat_t(M12), smat_t(M21), smat_t(M11))


# ---------------------------------------------------------------------------
# equivalence over F_q of constant Siegel matrices
# ---------------------------------------------------------------------------


def _elements(F: FiniteField, Z) -> list[list[int]]:
    return [[x.code if isinstance(x, FieldElement) else int(x) for x in row] for row in Z]


def equiv_search_constant_entries(
    S1: SiegelMatrix, S2: SiegelMatrix, F: FiniteField, cap: int = 1 << 20
) -> BlockChange | None:
    """gamma in GL_r(F_q) with C + D Z1 = Z2 (A + B Z1), entries of Z1, Z2 in F.

    The equation is F_q-linear in gamma; its kernel is enumerated in lexicographic
    order of coefficients until an invertible member appears.
    """
    if (S1.r, S1.n) != (S2.r, S2.n):
        return None
    r, n = S1.r, S1.n
    Z1, Z2 = _elements(F, S1.Z), _elements(F, S2.Z)
    basis_q = F.base_field_codes()
    # F_q-coordinates of F over F_q: use the power basis of the full field over F_q
    images = []
    for u in range(r * r):
        i, j = divmod(u, r)
        g = [[0] * r for _ in range(r)]
        g[i][j] = 1
        A, B, C, D = blocks(g, n)
        vals = []
        for a in range(r - n):
            for b in range(n):
                acc = C[a][b]
                for t in range(r - n):
                    acc = F.add(acc, F.mul(D[a][t], Z1[t][b]))
                # Z2 (A + B Z1)
                for t in range(n):
                    inner = A[t][b]
                    for s in range(r - n):
                        inner = F.add(inner, F.mul(B[t][s], Z1[s][b]))
                    acc = F.sub(acc, F.mul(Z2[a][t], inner))
                vals.append(acc)
        images.append(vals)
    rows = []
    for pos in range(len(images[0]) if images else 0):
        coords = [F.fq_coordinates(images[u][pos]) for u in range(r * r)]
        for cb in range(F.M):
            rows.append([coords[u][cb] for u in range(r * r)])
    kernel = ff_nullspace(rows, F, r * r) if rows else [[1 if u == v else 0 for u in range(r * r)] for v in range(r * r)]
    q = len(basis_q)
    if q ** len(kernel) > cap:
        raise SearchSpaceTooLarge(len(kernel), q)
    for coeffs in itertools.product(basis_q, repeat=len(kernel)):
        if not any(coeffs):
            continue
        vec = [0] * (r * r)
        for c, kv in zip(coeffs, kernel):
            if c:
                vec = [F.add(x, F.mul(c, y)) for x, y in zip(vec, kv)]
        g = [vec[i * r:(i + 1) * r] for i in range(r)]
        if ff_det(g, F):
            return BlockChange([[F.elem(x) for x in row] for row in g], n)
    return None


def kernel_dimension_constant_entries(S1: SiegelMatrix, S2: SiegelMatrix, F: FiniteField) -> int:
    """Dimension over F_q of the solution space of the linear equation (invertibility ignored)."""
    try:
        equiv_search_constant_entries(S1, S2, F, cap=1)
    except SearchSpaceTooLarge as exc:
        return exc.dimension
    return 0


# ---------------------------------------------------------------------------
# CM Siegel matrices
# ---------------------------------------------------------------------------


def cm_siegel_from_type(F: FiniteField, n: int, phi: Sequence[int], basis: Sequence[int] | None = None) -> SiegelMatrix:
    """Z = N M^{-1}, M_ij = alpha_j(c_i) (i, j < n), N_ij = alpha_j(c_{n+i}), alpha_j = Frobenius^{phi_j}.

    ``F`` is F_{q^r} (extension degree M = r over F_q); ``basis`` defaults to 1, g, ..., g^{r-1}.
    """
    r = F.M
    if len(phi) != n:
        raise ValueError("CM-type must have n elements")
    c = list(basis) if basis is not None else F.fq_basis()
    Mm = [[F.elem(F.frob(c[i], phi[j])) for j in range(n)] for i in range(n)]
    Nm = [[F.elem(F.frob(c[n + i], phi[j])) for j in range(n)] for i in range(r - n)]
    inv, det = s_inverse_and_det(Mm)
    if inv is None:
        raise ZeroDivisionError("singular matrix of embeddings")
    return SiegelMatrix(r, n, smat_mul(Nm, inv))


def galois_translate(phi: Sequence[int], shift: int, r: int) -> list[int]:
    return [(p + shift) % r for p in phi]


# ---------------------------------------------------------------------------
# C-lattices
# ---------------------------------------------------------------------------


def quadratic_generator(F: FiniteField) -> int:
    """Least code omega outside F_q with omega^2 in F_q^* (q odd, F = F_{q^2})."""
    if F.p == 2:
        raise ValueError("even q is unsupported for the monodromy formula")
    if F.M != 2:
        raise ValueError("monodromy needs F_{q^2}")
    for w in F.elements():
        if w and not F.in_base_field(w) and F.in_base_field(F.mul(w, w)):
            return w
    raise ValueError("no quadratic generator found")


def clattice_monodromy(U, V, F: FiniteField, omega: int | None = None) -> BlockChange:
    """[[U, -omega^2 V], [-V, U]]^{-1} for gamma = U + omega V; U, V over F_q given as codes."""
    if F.p == 2:
        raise ValueError("even q is unsupported for the monodromy formula")
    w = quadratic_generator(F) if omega is None else omega
    w2 = F.mul(w, w)
    n = len(U)
    g = [[0] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            g[i][j] = U[i][j]
            g[i][n + j] = F.neg(F.mul(w2, V[i][j]))
            g[n + i][j] = F.neg(V[i][j])
            g[n + i][n + j] = U[i][j]
    mat = [[F.elem(x) for x in row] for row in g]
    inv, det = s_inverse_and_det(mat)
    if inv is None:
        raise ZeroDivisionError("gamma is not invertible")
    return BlockChange(inv, n)


def mobius_act(gamma: BlockChange, Z):
    """(A Z + B)(C Z + D)^{-1} for a square Z; the action under which the monodromy image fixes omega E_n."""
    A, B, C, D = gamma.parts()
    num = smat_add(smat_mul(A, Z), B)
    den = smat_add(smat_mul(C, Z), D)
    return smat_mul(num, smat_inv(den))


@dataclass
class CLattice:
    siegel: SiegelMatrix
    basis: tuple = ()

    def __post_init__(self):
        if not self.basis:
            self.basis = tuple(("e", i) for i in range(self.siegel.r))


def clattice_dual(L: CLattice, minus_transpose: bool = False) -> CLattice:
    """Siegel Z^t (or -Z^t with the flag); marked basis e'_j = f_{j+n mod r}."""
    S = L.siegel
    Zt = smat_t(S.Z) if S.Z else [[] for _ in range(S.n)]
    if minus_transpose:
        Zt = smat_neg(Zt)
    r, n = S.r, S.n
    basis = tuple(("dual", L.basis[(j + n) % r]) for j in range(r))
    return CLattice(SiegelMatrix(r, r - n, Zt), basis)


# ---------------------------------------------------------------------------
# extreme cases n = 1 and n = r - 1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremeVerdict:
    lattice: bool
    dual_exists: bool
    heuristic: bool = False


def in_k_infinity(x: RationalScalar) -> bool:
    """x in F_q(theta), equivalently x in F_q((1/theta)) for x in F_{q^M}(theta)."""
    return x.conjugate(1) == x


def _fq_theta_coordinates(x: RationalScalar) -> list[RationalScalar]:
    """Coordinates of x over F_q(theta) in the power basis of F_{q^M}."""
    F = x.field
    K = x.ctx
    M = F.M
    den = x.den
    num = x.num
    # make the denominator F_q-rational: multiply by its conjugates
    full_den = K.make(den)
    num_s = K.make(num)
    for i in range(1, M):
        conj = K.make(den).conjugate(i)
        full_den = full_den * conj
        num_s = num_s * conj
    coords = [[0] * len(num_s.num) for _ in range(M)]
    for pw, code in enumerate(num_s.num):
        for b, c in enumerate(F.fq_coordinates(code)):
            coords[b][pw] = c
    return [K.make(tuple(cs)) / full_den for cs in coords]


def k_infinity_rank(values: Sequence[RationalScalar]) -> int:
    """Rank over K_inf of exact elements of F_{q^M}(theta) (via F_q(theta)-coordinates)."""
    if not values:
        return 0
    rows = [_fq_theta_coordinates(v) for v in values]
    zero = values[0].zero_like()
    M = [list(r) for r in rows]
    rank, cols = 0, len(M[0])
    for col in range(cols):
        piv = next((i for i in range(rank, len(M)) if not M[i][col].is_zero()), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = M[rank][col].one_like() / M[rank][col]
        for i in range(len(M)):
            if i != rank and not M[i][col].is_zero():
                f = M[i][col] * inv
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    _ = zero
    return rank


def dual_exists_extreme(S: SiegelMatrix, case: str | None = None) -> ExtremeVerdict:
    """Lattice and dual-lattice tests for n = 1 (column Z) and n = r - 1 (row Z), exact entries.

    A column Z = (z_i) spans a lattice iff 1, z_1, ... are K_inf-independent; a row
    Z = (-z_i) spans one iff some z_i lies outside K_inf. The dual swaps the two forms.
    """
    r, n = S.r, S.n
    if case is not None and case not in ("n=1", "n=r-1"):
        raise ValueError("case must be 'n=1' or 'n=r-1'")
    if case == "n=1" and n != 1 or case == "n=r-1" and n != r - 1:
        raise ValueError(f"Siegel matrix shape does not match case {case}")
    if n == 1 and r - 1 >= 1:
        z = [row[0] for row in S.Z]
    elif n == r - 1:
        z = [-x for x in S.Z[0]]
    else:
        raise ValueError("only n = 1 or n = r - 1 are decided")
    if any(not isinstance(x, RationalScalar) for x in z):
        raise TypeError("exact entries required")
    one = z[0].one_like()
    independent = k_infinity_rank([one] + z) == len(z) + 1
    some_outside = any(not in_k_infinity(x) for x in z)
    if n == 1:
        # the column lattice needs independence; its dual (row form) needs an entry outside K_inf
        lattice, dual = independent, independent and some_outside
    else:
        lattice, dual = some_outside, some_outside and independent
    if n == 1 and n == r - 1:
        lattice = dual = independent
    return ExtremeVerdict(lattice, dual)


# ---------------------------------------------------------------------------
# trace-dual lattices of CM type
# ---------------------------------------------------------------------------


@dataclass
class LatticeBasis:
    """r vectors in scalars^n; the Siegel matrix is B A^{-1} with A the first n rows."""

    vectors: list
    n: int
    precision: Any = None

    @property
    def r(self) -> int:
        return len(self.vectors)

    def siegel(self) -> SiegelMatrix:
        A = self.vectors[: self.n]
        B = self.vectors[self.n:]
        return SiegelMatrix(self.r, self.n, smat_mul(B, smat_inv(A)) if B else [])


@dataclass
class TraceDual:
    lattice: LatticeBasis
    dual: LatticeBasis
    siegel: SiegelMatrix
    dual_siegel: SiegelMatrix
    dual_basis: list
    type_phi: tuple
    type_dual: tuple


def trace_dual_lattice(a: Sequence[RationalScalar], phi: Sequence[int]) -> TraceDual:
    """Trace-dual basis b, shuffled basis (b_{n+1}, ..., b_r, -b_1, ..., -b_n) and the lattices they span.

    ``a`` is a basis of F_{q^r}(theta) over F_q(theta); embeddings are the coefficient
    Frobenius twists alpha_i = conjugate(i). The identity A^t D = B^t C is asserted.
    """
    r = len(a)
    phi = list(phi)
    n = len(phi)
    comp = [i for i in range(r) if i not in phi]
    emb = [[a[k].conjugate(i) for k in range(r)] for i in range(r)]  # emb[i][k] = alpha_i(a_k)
    inv = smat_inv(emb)
    # Sum_k alpha_i(a_k) alpha_j(b_k) = delta_ij  => (alpha_j(b_k))_{jk} = (emb^{-1})^t
    dual_emb = smat_t(inv)
    b = dual_emb[0]
    for j in range(r):
        for k in range(r):
            if not (dual_emb[j][k] - b[k].conjugate(j)).is_zero():
                raise ArithmeticError("trace dual basis is not Galois-compatible")
    shuffled = b[n:] + [-x for x in b[:n]]
    e = [[a[i].conjugate(j) for j in phi] for i in range(r)]
    ehat = [[shuffled[i].conjugate(j) for j in comp] for i in range(r)]
    A, B = e[:n], e[n:]
    C, D = ehat[: r - n], ehat[r - n:]
    if not smat_equal(smat_mul(smat_t(A), D), smat_mul(smat_t(B), C)):
        raise ArithmeticError("A^t D != B^t C")
    L = LatticeBasis(e, n)
    Lhat = LatticeBasis(ehat, r - n)
    return TraceDual(L, Lhat, L.siegel(), Lhat.siegel(), b, tuple(phi), tuple(comp))
