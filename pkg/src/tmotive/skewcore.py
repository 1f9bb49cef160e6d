"""Skew polynomial matrices and presentations of T-motives.

Polynomials in T are :class:`TPoly`; matrices are plain lists of rows. Scalars are
any type from :mod:`tmotive.scalars` (the algebraic half uses ``RationalScalar``).

Index conventions are 0-based throughout: the basis vector ``X[alpha, j]`` of a
standard presentation is ``tau^j e_alpha``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .scalars import FieldElement, RationalField, RationalScalar

Scalar = Any
Matrix = list  # list of rows


class DeterminantLawError(ValueError):
    """det Q is not a nonzero constant times a power of (T - theta)."""


class ShapeMismatch(ValueError):
    pass


class SingularLeadingCoefficient(ValueError):
    pass


# ---------------------------------------------------------------------------
# polynomials in T
# ---------------------------------------------------------------------------


class TPoly:
    """Polynomial sum_k c[k] T^k with scalar coefficients; ``zero`` fixes the scalar ring."""

    __slots__ = ("c", "zero")

    def __init__(self, coeffs: Sequence[Scalar], zero: Scalar):
        c = list(coeffs)
        while c and c[-1].is_zero():
            c.pop()
        self.c = tuple(c)
        self.zero = zero

    @classmethod
    def const(cls, s: Scalar) -> "TPoly":
        return cls((s,), s.zero_like())

    @classmethod
    def T(cls, zero: Scalar) -> "TPoly":
        return cls((zero, zero.one_like()), zero)

    @classmethod
    def linear(cls, root: Scalar) -> "TPoly":
        """T - root."""
        return cls((-root, root.one_like()), root.zero_like())

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def coeff(self, k: int) -> Scalar:
        return self.c[k] if 0 <= k < len(self.c) else self.zero

    def __add__(self, other):
        if not isinstance(other, TPoly):
            other = TPoly.const(self._scalar(other))
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, y in enumerate(b):
            out[i] = out[i] + y
        return TPoly(out, self.zero)

    __radd__ = __add__

    def __neg__(self):
        return TPoly([-x for x in self.c], self.zero)

    def __sub__(self, other):
        if not isinstance(other, TPoly):
            other = TPoly.const(self._scalar(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def _scalar(self, s):
        if isinstance(s, int):
            return self.zero.one_like() * s
        if isinstance(s, FieldElement):
            return self.zero.from_code(s.code)
        return s

    def __mul__(self, other):
        if isinstance(other, TPoly):
            a, b = self.c, other.c
            if not a or not b:
                return TPoly((), self.zero)
            out = [self.zero] * (len(a) + len(b) - 1)
            for i, x in enumerate(a):
                if x.is_zero():
                    continue
                for j, y in enumerate(b):
                    if not y.is_zero():
                        out[i + j] = out[i + j] + x * y
            return TPoly(out, self.zero)
        s = self._scalar(other)
        return TPoly([x * s for x in self.c], self.zero)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "TPoly":
        result = TPoly((self.zero.one_like(),), self.zero)
        for _ in range(e):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, TPoly):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def frobenius(self, i: int = 1) -> "TPoly":
        return TPoly([x.frobenius(i) for x in self.c], self.zero.frobenius(i) if i >= 0 else self.zero)

    def map_coeffs(self, fn: Callable[[Scalar], Scalar]) -> "TPoly":
        return TPoly([fn(x) for x in self.c], self.zero)

    def __call__(self, t: Scalar) -> Scalar:
        acc = self.zero
        for x in reversed(self.c):
            acc = acc * t + x
        return acc

    def divmod_linear(self, root: Scalar) -> tuple["TPoly", Scalar]:
        """Synthetic division by (T - root)."""
        if not self.c:
            return self, self.zero
        out = [self.zero] * (len(self.c) - 1)
        acc = self.zero
        for k in range(len(self.c) - 1, -1, -1):
            acc = acc * root + self.c[k]
            if k:
                out[k - 1] = acc
        return TPoly(out, self.zero), acc

    def divmod(self, d: "TPoly") -> tuple["TPoly", "TPoly"]:
        if d.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        rem = list(self.c)
        dd = d.deg
        if len(rem) - 1 < dd:
            return TPoly((), self.zero), self
        lead_inv = d.c[-1].one_like() / d.c[-1]
        quot = [self.zero] * (len(rem) - dd)
        for k in range(len(rem) - 1 - dd, -1, -1):
            coef = rem[k + dd] * lead_inv
            quot[k] = coef
            if not coef.is_zero():
                for i, y in enumerate(d.c):
                    rem[k + i] = rem[k + i] - coef * y
        return TPoly(quot, self.zero), TPoly(rem[:dd], self.zero)

    def order_at(self, root: Scalar, limit: int | None = None) -> int:
        """Multiplicity of (T - root) as a factor; ``limit`` caps the count for the zero polynomial."""
        if self.is_zero():
            if limit is None:
                raise ValueError("order of zero polynomial")
            return limit
        m, cur = 0, self
        while True:
            quo, rem = cur.divmod_linear(root)
            if not rem.is_zero():
                return m
            cur, m = quo, m + 1

    def taylor_shift(self, root: Scalar, length: int | None = None) -> list[Scalar]:
        """Coefficients in S of the polynomial with T = root + S."""
        out = []
        cur = self
        n = len(self.c) if length is None else length
        for _ in range(n):
            if cur.is_zero():
                out.append(self.zero)
                continue
            cur, rem = cur.divmod_linear(root)
            out.append(rem)
        return out

    def __repr__(self) -> str:
        return "TPoly(" + ", ".join(repr(x) for x in self.c) + ")"


# ---------------------------------------------------------------------------
# matrices of TPoly
# ---------------------------------------------------------------------------


def poly_matrix(rows: Sequence[Sequence[Any]], zero: Scalar) -> Matrix:
    """Build a TPoly matrix from scalars, TPolys or ints."""
    out = []
    for row in rows:
        new = []
        for x in row:
            if isinstance(x, TPoly):
                new.append(x)
            elif isinstance(x, int):
                new.append(TPoly((zero.one_like() * x,), zero))
            else:
                new.append(TPoly((x,), zero))
        out.append(new)
    return out


def mat_zero(r: int, c: int, zero: Scalar) -> Matrix:
    return [[TPoly((), zero) for _ in range(c)] for _ in range(r)]


def mat_identity(r: int, zero: Scalar) -> Matrix:
    one = zero.one_like()
    return [[TPoly((one,), zero) if i == j else TPoly((), zero) for j in range(r)] for i in range(r)]


def mat_scalar_identity(r: int, p: TPoly) -> Matrix:
    return [[p if i == j else TPoly((), p.zero) for j in range(r)] for i in range(r)]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    if not A:
        return []
    n, m, k = len(A), len(B), len(B[0]) if B else 0
    if len(A[0]) != m:
        raise ValueError("matrix size mismatch")
    zero = A[0][0].zero
    out = []
    Bcols = [[B[t][j] for t in range(m)] for j in range(k)]
    for i in range(n):
        row = A[i]
        nz = [(t, row[t]) for t in range(m) if not row[t].is_zero()]
        out_row = []
        for j in range(k):
            acc = TPoly((), zero)
            col = Bcols[j]
            for t, a in nz:
                b = col[t]
                if not b.is_zero():
                    acc = acc + a * b
            out_row.append(acc)
        out.append(out_row)
    return out


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_neg(A: Matrix) -> Matrix:
    return [[-a for a in row] for row in A]


def mat_transpose(A: Matrix) -> Matrix:
    return [list(col) for col in zip(*A)] if A else []


def mat_frobenius(A: Matrix, i: int = 1) -> Matrix:
    return [[a.frobenius(i) for a in row] for row in A]


def mat_map(A: Matrix, fn: Callable[[TPoly], TPoly]) -> Matrix:
    return [[fn(a) for a in row] for row in A]


def mat_scale(A: Matrix, s: Any) -> Matrix:
    return [[a * s for a in row] for row in A]


def mat_equal(A: Matrix, B: Matrix) -> bool:
    if len(A) != len(B):
        return False
    return all(len(ra) == len(rb) and all((a - b).is_zero() for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_is_zero(A: Matrix) -> bool:
    return all(a.is_zero() for row in A for a in row)


def mat_permute(A: Matrix, perm: Sequence[int]) -> Matrix:
    """Reorder rows and columns: new[i][j] = A[perm[i]][perm[j]]."""
    return [[A[perm[i]][perm[j]] for j in range(len(perm))] for i in range(len(perm))]


def kron(A: Matrix, B: Matrix) -> Matrix:
    ra, ca, rb, cb = len(A), len(A[0]), len(B), len(B[0])
    return [[A[i // rb][j // cb] * B[i % rb][j % cb] for j in range(ca * cb)] for i in range(ra * rb)]


def mat_eval(A: Matrix, t: Scalar) -> list[list[Scalar]]:
    return [[a(t) for a in row] for row in A]


def max_degree(A: Matrix) -> int:
    return max((a.deg for row in A for a in row if not a.is_zero()), default=-1)


# ---------------------------------------------------------------------------
# linear algebra over a scalar field
# ---------------------------------------------------------------------------


def _pivot_key(x: Scalar):
    start = getattr(x, "start", None)
    return 0 if start is None else start


def s_det(A: Sequence[Sequence[Scalar]]) -> Scalar:
    """Determinant by Gaussian elimination (pivot of least valuation for series scalars)."""
    n = len(A)
    M = [list(row) for row in A]
    zero = M[0][0].zero_like()
    det = zero.one_like()
    for col in range(n):
        cands = [i for i in range(col, n) if not M[i][col].is_zero()]
        if not cands:
            return zero
        piv = min(cands, key=lambda i: _pivot_key(M[i][col]))
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        pv = M[col][col]
        det = det * pv
        inv = pv.one_like() / pv
        for i in range(col + 1, n):
            if M[i][col].is_zero():
                continue
            f = M[i][col] * inv
            row_i, row_c = M[i], M[col]
            for j in range(col + 1, n):
                if not row_c[j].is_zero():
                    row_i[j] = row_i[j] - f * row_c[j]
            row_i[col] = zero
    return det


def s_inverse_and_det(A: Sequence[Sequence[Scalar]]) -> tuple[list[list[Scalar]] | None, Scalar]:
    """Gauss-Jordan inverse; returns (None, 0) when singular."""
    n = len(A)
    zero = A[0][0].zero_like()
    one = zero.one_like()
    M = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(A)]
    det = one
    for col in range(n):
        cands = [i for i in range(col, n) if not M[i][col].is_zero()]
        if not cands:
            return None, zero
        piv = min(cands, key=lambda i: _pivot_key(M[i][col]))
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        pv = M[col][col]
        det = det * pv
        inv = one / pv
        M[col] = [x * inv if not x.is_zero() else x for x in M[col]]
        row_c = M[col]
        nzc = [j for j in range(2 * n) if not row_c[j].is_zero()]
        for i in range(n):
            if i == col or M[i][col].is_zero():
                continue
            f = M[i][col]
            row_i = M[i]
            for j in nzc:
                row_i[j] = row_i[j] - f * row_c[j]
    return [row[n:] for row in M], det


def s_solve(A: Sequence[Sequence[Scalar]], b: Sequence[Scalar], zero: Scalar) -> list[Scalar] | None:
    """One solution x of A x = b (free variables set to 0), or None when inconsistent."""
    rows = len(A)
    cols = len(A[0]) if rows else 0
    M = [list(A[i]) + [b[i]] for i in range(rows)]
    pivots = []
    r = 0
    for col in range(cols):
        piv = next((i for i in range(r, rows) if not M[i][col].is_zero()), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = M[r][col].one_like() / M[r][col]
        M[r] = [x * inv if not x.is_zero() else x for x in M[r]]
        row_r = M[r]
        nz = [j for j in range(col, cols + 1) if not row_r[j].is_zero()]
        for i in range(rows):
            if i != r and not M[i][col].is_zero():
                f = M[i][col]
                row_i = M[i]
                for j in nz:
                    row_i[j] = row_i[j] - f * row_r[j]
        pivots.append(col)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if not M[i][cols].is_zero():
            return None
    x = [zero] * cols
    for i, col in enumerate(pivots):
        x[col] = M[i][cols]
    return x


# ---------------------------------------------------------------------------
# determinants and adjugates by evaluation and interpolation
# ---------------------------------------------------------------------------


def _node_stream(zero: Scalar):
    """Distinct polynomial scalars in the variable, enumerated by base-|F| code."""
    F = zero.field
    if not isinstance(zero, RationalScalar):
        for c in F.elements():
            yield zero.from_code(c)
        raise ValueError("ran out of interpolation nodes")
    ctx = zero.ctx
    code = 0
    while True:
        digits, n = [], code
        while n:
            n, d = divmod(n, F.order)
            digits.append(d)
        yield ctx.make(tuple(digits))
        code += 1


def _lagrange_basis(nodes: list[Scalar], zero: Scalar) -> list[TPoly]:
    one = zero.one_like()
    full = TPoly((one,), zero)
    for x in nodes:
        full = full * TPoly.linear(x)
    basis = []
    for k, xk in enumerate(nodes):
        num, _ = full.divmod_linear(xk)
        denom = num(xk)
        basis.append(num * (one / denom))
    return basis


def _row_degree_bound(Q: Matrix) -> tuple[int, int]:
    rows = [max((a.deg for a in row if not a.is_zero()), default=0) for row in Q]
    cols = [max((Q[i][j].deg for i in range(len(Q)) if not Q[i][j].is_zero()), default=0) for j in range(len(Q))]
    det_bound = min(sum(rows), sum(cols))
    adj_bound = min(sum(rows) - min(rows), sum(cols) - min(cols)) if Q else 0
    return det_bound, adj_bound


def det_tpoly(Q: Matrix) -> TPoly:
    """det Q as a polynomial in T."""
    zero = Q[0][0].zero
    bound, _ = _row_degree_bound(Q)
    nodes, values = [], []
    for t in _node_stream(zero):
        nodes.append(t)
        values.append(s_det(mat_eval(Q, t)))
        if len(nodes) == bound + 1:
            break
    basis = _lagrange_basis(nodes, zero)
    acc = TPoly((), zero)
    for v, L in zip(values, basis):
        if not v.is_zero():
            acc = acc + L * v
    return acc


def adjugate_tpoly(Q: Matrix) -> tuple[Matrix, TPoly]:
    """(adj Q, det Q), interpolated from values at nodes where Q is invertible."""
    r = len(Q)
    zero = Q[0][0].zero
    dbound, abound = _row_degree_bound(Q)
    need = max(dbound, abound) + 1
    nodes, adjs, dets = [], [], []
    skipped = 0
    for t in _node_stream(zero):
        inv, d = s_inverse_and_det(mat_eval(Q, t))
        if inv is None:
            skipped += 1
            if skipped > dbound:
                raise DeterminantLawError("matrix is singular over the scalar field of T-polynomials")
            continue
        nodes.append(t)
        dets.append(d)
        adjs.append([[x * d for x in row] for row in inv])
        if len(nodes) == need:
            break
    basis = _lagrange_basis(nodes, zero)
    adj = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = TPoly((), zero)
            for k, L in enumerate(basis):
                v = adjs[k][i][j]
                if not v.is_zero():
                    acc = acc + L * v
            row.append(acc)
        adj.append(row)
    det = TPoly((), zero)
    for v, L in zip(dets, basis):
        det = det + L * v
    return adj, det


def split_det_law(det: TPoly, theta: Scalar) -> tuple[Scalar, int]:
    """Write det = c (T - theta)^n with c a nonzero scalar, else raise."""
    if det.is_zero():
        raise DeterminantLawError("det Q = 0")
    n = det.order_at(theta)
    rest = det
    for _ in range(n):
        rest, _ = rest.divmod_linear(theta)
    if rest.deg != 0:
        raise DeterminantLawError(f"det Q is not c*(T-theta)^n: cofactor of degree {rest.deg}")
    return rest.c[0], n


def theta_of(zero: Scalar) -> Scalar:
    ctx = zero.ctx
    return ctx.theta()


# ---------------------------------------------------------------------------
# skew polynomial matrices
# ---------------------------------------------------------------------------


def _smat_zero(n: int, zero: Scalar) -> list[list[Scalar]]:
    return [[zero for _ in range(n)] for _ in range(n)]


def _smat_mul(A, B):
    n, m, k = len(A), len(B), len(B[0])
    zero = A[0][0].zero_like()
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc = zero
            for t in range(m):
                if not A[i][t].is_zero() and not B[t][j].is_zero():
                    acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(row)
    return out


def _smat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _smat_frob(A, i):
    return [[a.frobenius(i) for a in row] for row in A]


def _smat_is_zero(A) -> bool:
    return all(a.is_zero() for row in A for a in row)


@dataclass(frozen=True)
class TauPolyMatrix:
    """sum_i A_i tau^i with n x n scalar matrices A_i."""

    coeffs: tuple
    n: int

    @classmethod
    def from_list(cls, mats: Sequence[Sequence[Sequence[Scalar]]]) -> "TauPolyMatrix":
        mats = [[list(row) for row in A] for A in mats]
        while len(mats) > 1 and _smat_is_zero(mats[-1]):
            mats.pop()
        n = len(mats[0])
        return cls(tuple(tuple(tuple(r) for r in A) for A in mats), n)

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and _smat_is_zero(self.coeffs[0]):
            return -1
        return len(self.coeffs) - 1

    def coeff(self, i: int):
        return [list(r) for r in self.coeffs[i]]

    def __mul__(self, other: "TauPolyMatrix") -> "TauPolyMatrix":
        return skew_multiply(self, other)

    def __add__(self, other: "TauPolyMatrix") -> "TauPolyMatrix":
        if self.n != other.n:
            raise ValueError("size mismatch")
        zero = self.coeffs[0][0][0].zero_like()
        L = max(len(self.coeffs), len(other.coeffs))
        mats = []
        for i in range(L):
            a = self.coeff(i) if i < len(self.coeffs) else _smat_zero(self.n, zero)
            b = other.coeff(i) if i < len(other.coeffs) else _smat_zero(self.n, zero)
            mats.append(_smat_add(a, b))
        return TauPolyMatrix.from_list(mats)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TauPolyMatrix) or self.n != other.n:
            return False
        L = max(len(self.coeffs), len(other.coeffs))
        zero = self.coeffs[0][0][0].zero_like()
        for i in range(L):
            a = self.coeff(i) if i < len(self.coeffs) else _smat_zero(self.n, zero)
            b = other.coeff(i) if i < len(other.coeffs) else _smat_zero(other.n, zero)
            if not all((x - y).is_zero() for ra, rb in zip(a, b) for x, y in zip(ra, rb)):
                return False
        return True

    __hash__ = None  # type: ignore[assignment]


def skew_multiply(a: TauPolyMatrix, b: TauPolyMatrix) -> TauPolyMatrix:
    """Product under (A tau^i)(B tau^j) = A B^{(i)} tau^{i+j}."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    zero = a.coeffs[0][0][0].zero_like()
    out = [_smat_zero(a.n, zero) for _ in range(len(a.coeffs) + len(b.coeffs) - 1)]
    for i, A in enumerate(a.coeffs):
        if _smat_is_zero(A):
            continue
        for j, B in enumerate(b.coeffs):
            if _smat_is_zero(B):
                continue
            out[i + j] = _smat_add(out[i + j], _smat_mul(A, _smat_frob(B, i)))
    return TauPolyMatrix.from_list(out)


# ---------------------------------------------------------------------------
# presentations
# ---------------------------------------------------------------------------


@dataclass
class TauPresentation:
    """T e = (theta E_n + N + sum_{i>=1} A_i tau^i) e with A = [A_1, ..., A_l]."""

    n: int
    A: list
    ring: RationalField
    N: list | None = None
    require_N_zero: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        zero = self.ring.zero()
        if self.N is None:
            self.N = [[zero] * self.n for _ in range(self.n)]
        for Ai in self.A:
            if len(Ai) != self.n or any(len(row) != self.n for row in Ai):
                raise ShapeMismatch("coefficient matrices must be n x n")
        if not _is_nilpotent(self.N):
            raise ShapeMismatch("N must be nilpotent")
        if self.require_N_zero and not _smat_is_zero(self.N):
            raise ShapeMismatch("N must vanish for analytic use")

    @property
    def l(self) -> int:
        return len(self.A)

    def has_N_zero(self) -> bool:
        return _smat_is_zero(self.N)

    def tau_matrix(self) -> TauPolyMatrix:
        th = self.ring.theta()
        A0 = [[(th if i == j else self.ring.zero()) + self.N[i][j] for j in range(self.n)] for i in range(self.n)]
        return TauPolyMatrix.from_list([A0] + [[list(r) for r in Ai] for Ai in self.A])


def _is_nilpotent(N) -> bool:
    n = len(N)
    if n == 0 or _smat_is_zero(N):
        return True
    P = [list(r) for r in N]
    for _ in range(n):
        P = _smat_mul(P, N)
        if _smat_is_zero(P):
            return True
    return _smat_is_zero(P)


@dataclass
class TPresentation:
    """tau f = Q f over scalar[T]; the determinant law det Q = c (T - theta)^n is verified on construction."""

    Q: Matrix
    ring: RationalField
    labels: list | None = None
    check: bool = True
    n: int = -1
    det_constant: Any = None

    def __post_init__(self):
        if self.check:
            det = det_tpoly(self.Q)
            c, n = split_det_law(det, self.ring.theta())
            if self.n >= 0 and self.n != n:
                raise DeterminantLawError(f"declared dimension {self.n} but det law gives {n}")
            self.n, self.det_constant = n, c

    @property
    def r(self) -> int:
        return len(self.Q)

    @property
    def zero(self) -> RationalScalar:
        return self.ring.zero()

    def t_minus_theta(self) -> TPoly:
        return TPoly.linear(self.ring.theta())


def carlitz(ring: RationalField) -> TPresentation:
    return TPresentation([[TPoly.linear(ring.theta())]], ring, labels=["f"])


# ---------------------------------------------------------------------------
# tau-presentation -> T-basis
# ---------------------------------------------------------------------------


class _TauReducer:
    """Rewrite tau^d e_alpha in the basis X[alpha, j] = tau^j e_alpha, j < k(alpha).

    ``pivots[alpha]`` is the row whose coefficient of tau^{k(alpha)} e_alpha is used
    to solve for that monomial; all other monomials of the row are reduced recursively.
    """

    def __init__(self, M: TauPresentation, k: Sequence[int], pivots: Sequence[int]):
        self.M = M
        self.k = list(k)
        self.pivots = list(pivots)
        self.index = {}
        for a in range(M.n):
            for j in range(self.k[a]):
                self.index[(a, j)] = len(self.index)
        self.r = len(self.index)
        self.ring = M.ring
        self.zero = M.ring.zero()
        self.theta = M.ring.theta()
        self._memo: dict = {}
        self._active: set = set()

    def _empty(self) -> list[TPoly]:
        return [TPoly((), self.zero) for _ in range(self.r)]

    def _add_scaled(self, acc: list[TPoly], vec: list[TPoly], s: Any) -> None:
        for i, v in enumerate(vec):
            if not v.is_zero():
                acc[i] = acc[i] + v * s

    def _frob_vec(self, vec: list[TPoly], s: int) -> list[TPoly]:
        return [v.frobenius(s) for v in vec]

    def reduce(self, alpha: int, d: int) -> list[TPoly]:
        if d < self.k[alpha]:
            vec = self._empty()
            vec[self.index[(alpha, d)]] = TPoly((self.ring.one(),), self.zero)
            return vec
        key = (alpha, d)
        if key in self._memo:
            return self._memo[key]
        if key in self._active:
            raise ShapeMismatch(f"cyclic reduction at tau^{d} e_{alpha}")
        self._active.add(key)
        s = d - self.k[alpha]
        rho = self.pivots[alpha]
        M = self.M
        lead = M.A[self.k[alpha] - 1][rho][alpha]
        if lead.is_zero():
            raise ShapeMismatch(f"pivot row {rho} lacks tau^{self.k[alpha]} e_{alpha}")
        # tau^s applied to: T e_rho - (theta + N) e_rho - other terms, divided by lead
        acc = self._empty()
        base = self.reduce(rho, s)
        T = TPoly.T(self.zero)
        for i, v in enumerate(base):
            if not v.is_zero():
                acc[i] = acc[i] + v * T
        theta_s = self.theta.frobenius(s)
        self._add_scaled(acc, base, -theta_s)
        for m in range(M.n):
            nrm = M.N[rho][m]
            if not nrm.is_zero():
                self._add_scaled(acc, self.reduce(m, s), -nrm.frobenius(s))
        for i, Ai in enumerate(M.A, start=1):
            for m in range(M.n):
                a = Ai[rho][m]
                if a.is_zero() or (i == self.k[alpha] and m == alpha):
                    continue
                self._add_scaled(acc, self.reduce(m, i + s), -a.frobenius(s))
        inv = (self.ring.one() / lead).frobenius(s)
        out = [v * inv for v in acc]
        self._active.discard(key)
        self._memo[key] = out
        return out

    def q_matrix(self) -> tuple[Matrix, list]:
        labels = [None] * self.r
        rows = [None] * self.r
        for (a, j), idx in self.index.items():
            labels[idx] = ("X", a, j)
            rows[idx] = self.reduce(a, j + 1)
        return rows, labels


def validate_standard_shape(M: TauPresentation, phi: Sequence[int], k: Sequence[int], order: Sequence[int] | None) -> None:
    """Check the row-echelon shape of a standard-2 (order None) or standard-3 presentation."""
    n = M.n
    if sorted(phi) != list(range(n)) or len(k) != n or any(x < 1 for x in k):
        raise ShapeMismatch("shape mismatch with declared (phi, k): phi must be a permutation and k >= 1")
    if not M.has_N_zero():
        raise ShapeMismatch("shape mismatch with declared (phi, k): standard presentations have N = 0")
    rank = {a: pos for pos, a in enumerate(order)} if order is not None else None
    if order is not None and sorted(order) != list(range(n)):
        raise ShapeMismatch("ordering must list every index once")
    for i in range(n):
        row = phi[i]
        for a in range(n):
            for d in range(1, M.l + 1):
                entry = M.A[d - 1][row][a]
                if d <= k[a] - 1:
                    continue
                if d == k[a]:
                    if a == i:
                        if not (entry - 1).is_zero():
                            raise ShapeMismatch(f"shape mismatch with declared (phi, k): A_{d}[{row}][{a}] must be 1")
                        continue
                    if rank is not None and rank[a] > rank[i]:
                        continue
                if not entry.is_zero():
                    raise ShapeMismatch(f"shape mismatch with declared (phi, k): A_{d}[{row}][{a}] must be 0")
    if M.l < max(k):
        raise ShapeMismatch("shape mismatch with declared (phi, k): too few coefficient matrices")


def t_basis_from_tau(
    M: TauPresentation,
    mode: str = "generic",
    phi: Sequence[int] | None = None,
    k: Sequence[int] | None = None,
    order: Sequence[int] | None = None,
    check: bool = True,
) -> TPresentation:
    """C_inf[T]-presentation of a tau-presentation.

    ``generic``: A_l invertible, basis tau^j e (j < l) in blocks of n.
    ``standard2`` / ``standard3``: basis X[alpha, j] = tau^j e_alpha in lexicographic order.
    """
    ring = M.ring
    zero = ring.zero()
    theta = ring.theta()
    n, l = M.n, M.l
    if mode == "generic":
        if l == 0:
            raise SingularLeadingCoefficient("leading coefficient singular: no tau terms")
        inv, det = s_inverse_and_det(M.A[-1])
        if inv is None:
            raise SingularLeadingCoefficient("leading coefficient singular")
        r = n * l
        Q = mat_zero(r, r, zero)
        for j in range(l - 1):
            for a in range(n):
                Q[j * n + a][(j + 1) * n + a] = TPoly((ring.one(),), zero)
        T = TPoly.T(zero)
        for a in range(n):
            row = (l - 1) * n + a
            for m in range(n):
                # A_l^{-1}((T - theta) E - N)
                acc = TPoly((), zero)
                for t in range(n):
                    coef = inv[a][t]
                    if coef.is_zero():
                        continue
                    base = (T - theta) if t == m else TPoly((), zero)
                    base = base - TPoly((M.N[t][m],), zero)
                    acc = acc + base * coef
                Q[row][m] = acc
                for i in range(1, l):
                    s = zero
                    for t in range(n):
                        if not inv[a][t].is_zero() and not M.A[i - 1][t][m].is_zero():
                            s = s + inv[a][t] * M.A[i - 1][t][m]
                    Q[row][i * n + m] = TPoly((-s,), zero)
        labels = [("tau", j, a) for j in range(l) for a in range(n)]
        return TPresentation(Q, ring, labels=labels, check=check, n=-1)
    if mode in ("standard2", "standard3", "standard1"):
        if phi is None:
            phi = list(range(n))
        if k is None:
            raise ShapeMismatch("standard modes need k")
        if mode == "standard1" and list(phi) != list(range(n)):
            raise ShapeMismatch("standard-1 requires the identity permutation")
        validate_standard_shape(M, phi, k, order if mode == "standard3" else None)
        reducer = _TauReducer(M, k, [phi[i] for i in range(n)])
        Q, labels = reducer.q_matrix()
        return TPresentation(Q, ring, labels=labels, check=check)
    raise ValueError(f"unknown conversion mode {mode!r}")


def t_basis_with_pivots(M: TauPresentation, k: Sequence[int], pivots: Sequence[int], check: bool = True) -> TPresentation:
    """Conversion for presentations outside the certified modes, given pivot rows explicitly."""
    reducer = _TauReducer(M, k, pivots)
    Q, labels = reducer.q_matrix()
    return TPresentation(Q, M.ring, labels=labels, check=check)


# ---------------------------------------------------------------------------
# gauge transforms
# ---------------------------------------------------------------------------


def gauge_transform(P: TPresentation, C: Matrix) -> TPresentation:
    """C^{(1)} Q C^{-1} for C invertible over scalar[T]."""
    adj, det = adjugate_tpoly(C)
    if det.deg != 0:
        raise ValueError("C not unimodular: det C is not a nonzero constant")
    inv = mat_scale(adj, P.ring.one() / det.c[0])
    Q = mat_mul(mat_mul(mat_frobenius(C), P.Q), inv)
    return TPresentation(Q, P.ring, labels=None, check=True)


def _ff_rref(rows: list[list[int]], F, ncols: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form over the field of codes ``F``."""
    M = [list(r) for r in rows]
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = F.inv(M[rank][col])
        M[rank] = [F.mul(x, inv) for x in M[rank]]
        for i in range(len(M)):
            if i != rank and M[i][col]:
                f = M[i][col]
                M[i] = [F.sub(a, F.mul(f, b)) for a, b in zip(M[i], M[rank])]
        pivots.append(col)
        rank += 1
    return M[:rank], pivots


def ff_nullspace(rows: list[list[int]], F, ncols: int) -> list[list[int]]:
    """Basis of {x : rows . x = 0} over the field of codes ``F``."""
    R, pivots = _ff_rref(rows, F, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [0] * ncols
        v[fcol] = 1
        for i, pc in enumerate(pivots):
            v[pc] = F.neg(R[i][fcol])
        basis.append(v)
    return basis


def ff_det(A: list[list[int]], F) -> int:
    n = len(A)
    M = [list(r) for r in A]
    det = 1
    for col in range(n):
        piv = next((i for i in range(col, n) if M[i][col]), None)
        if piv is None:
            return 0
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = F.neg(det)
        det = F.mul(det, M[col][col])
        inv = F.inv(M[col][col])
        for i in range(col + 1, n):
            if M[i][col]:
                f = F.mul(M[i][col], inv)
                M[i] = [F.sub(a, F.mul(f, b)) for a, b in zip(M[i], M[col])]
    return det


def fq_linear_kernel(images: Sequence[Sequence[TPoly]], F) -> list[list[int]]:
    """F_q-basis of the kernel of an F_q-linear map given by its images of basis vectors.

    Each image is a flat list of TPolys over the rational scalars; all of them are
    cleared to a common denominator and expanded into F_q coordinates.
    """
    from .scalars import poly_divmod, poly_gcd, poly_mul

    den = (1,)
    for img in images:
        for a in img:
            for c in a.c:
                g = poly_gcd(F, den, c.den)
                den = poly_mul(F, den, poly_divmod(F, c.den, g)[0])
    flats = []
    for img in images:
        flat = {}
        for x, a in enumerate(img):
            for t, c in enumerate(a.c):
                num = poly_mul(F, c.num, poly_divmod(F, den, c.den)[0])
                for pw, code in enumerate(num):
                    for cb, coord in enumerate(F.fq_coordinates(code)):
                        if coord:
                            flat[(x, t, pw, cb)] = coord
        flats.append(flat)
    nvars = len(images)
    keys = sorted(set().union(*flats)) if flats else []
    if not keys:
        return [[1 if u == v else 0 for u in range(nvars)] for v in range(nvars)]
    rows = [[flats[u].get(key, 0) for u in range(nvars)] for key in keys]
    return ff_nullspace(rows, F, nvars)


def gauge_equiv_search_constant(P1: TPresentation, P2: TPresentation, cap: int = 4096) -> list | None:
    """A constant C over F_{q^M} with C^{(1)} Q1 C^{-1} = Q2, or None.

    The map C -> C^{(1)} Q1 - Q2 C is F_q-linear; its kernel is computed in F_q
    coordinates and searched in a fixed order for an invertible member.
    """
    if P1.r != P2.r:
        return None
    r = P1.r
    ring = P1.ring
    F = ring.field
    basis = F.fq_basis()
    unknowns = [(i, j, b) for i in range(r) for j in range(r) for b in range(len(basis))]
    images = []
    for (i, j, b) in unknowns:
        C = [[TPoly((), ring.zero()) for _ in range(r)] for _ in range(r)]
        C[i][j] = TPoly((ring.const(basis[b]),), ring.zero())
        img = mat_sub(mat_mul(mat_frobenius(C), P1.Q), mat_mul(P2.Q, C))
        images.append([a for row in img for a in row])
    kernel = fq_linear_kernel(images, F)
    base_codes = F.base_field_codes()

    def assemble(vec):
        C = [[0] * r for _ in range(r)]
        for u, (i, j, b) in enumerate(unknowns):
            if vec[u]:
                C[i][j] = F.add(C[i][j], F.mul(vec[u], basis[b]))
        return C

    tried = 0
    for coeffs in itertools.product(base_codes, repeat=len(kernel)):
        if tried >= cap:
            break
        tried += 1
        if not any(coeffs):
            continue
        vec = [0] * len(unknowns)
        for c, kv in zip(coeffs, kernel):
            if c:
                vec = [F.add(a, F.mul(c, b)) for a, b in zip(vec, kv)]
        C = assemble(vec)
        if ff_det(C, F):
            return C
    return None


def constant_matrix(C: list[list[int]], ring: RationalField) -> Matrix:
    return [[TPoly((ring.const(x),), ring.zero()) for x in row] for row in C]


# ---------------------------------------------------------------------------
# invariant factors at T - theta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantFactors:
    m: tuple
    min_adj_valuation: int

    @property
    def n(self) -> int:
        return sum(self.m)

    @property
    def max(self) -> int:
        return max(self.m) if self.m else 0


def _series_inv(a: list, L: int):
    one = a[0].one_like()
    inv0 = one / a[0]
    out = [inv0]
    for k in range(1, L):
        acc = a[0].zero_like()
        for j in range(1, k + 1):
            if j < len(a) and not a[j].is_zero():
                acc = acc + a[j] * out[k - j]
        out.append(-acc * inv0)
    return out


def _series_mul(a: list, b: list, L: int):
    zero = a[0].zero_like()
    out = [zero] * L
    for i, x in enumerate(a[:L]):
        if x.is_zero():
            continue
        for j in range(min(len(b), L - i)):
            if not b[j].is_zero():
                out[i + j] = out[i + j] + x * b[j]
    return out


def _series_val(a: list) -> int:
    for i, x in enumerate(a):
        if not x.is_zero():
            return i
    return len(a)


def local_smith_exponents(Q: Matrix, theta: Scalar, n: int) -> list[int]:
    """Exponents of (T - theta) in the local Smith form, working modulo (T - theta)^(n+1)."""
    L = n + 1
    r = len(Q)
    zero = theta.zero_like()
    S = [[Q[i][j].taylor_shift(theta, L) for j in range(r)] for i in range(r)]
    rows = list(range(r))
    cols = list(range(r))
    exps = []
    while rows:
        best = None
        for i in rows:
            for j in cols:
                v = _series_val(S[i][j])
                if best is None or v < best[0]:
                    best = (v, i, j)
        v, pi, pj = best
        if v >= L:
            exps.extend([L] * len(rows))
            break
        exps.append(v)
        unit = S[pi][pj][v:] + [zero] * v
        uinv = _series_inv(unit, L)
        for i in rows:
            if i == pi:
                continue
            a = S[i][pj]
            if _series_val(a) >= L:
                continue
            # factor = a / pivot = (a / S^v) * unit^{-1}
            f = _series_mul(a[v:] + [zero] * v, uinv, L)
            for j in cols:
                if j == pj:
                    continue
                prod = _series_mul(f, S[pi][j], L)
                S[i][j] = [x - y for x, y in zip(S[i][j], prod)]
            S[i][pj] = [zero] * L
        rows.remove(pi)
        cols.remove(pj)
    return sorted(exps)


def invariant_factors_at_T_theta(P: TPresentation) -> InvariantFactors:
    """Invariant factors of Q in the local ring at (T - theta), plus min valuation of adj Q."""
    theta = P.ring.theta()
    n = P.n
    exps = local_smith_exponents(P.Q, theta, n)
    if sum(exps) != n:
        raise DeterminantLawError(f"local invariant factors sum to {sum(exps)}, det law gives {n}")
    adj, _ = adjugate_tpoly(P.Q)
    minval = min(a.order_at(theta) for row in adj for a in row if not a.is_zero())
    return InvariantFactors(tuple(exps), minval)


# ---------------------------------------------------------------------------
# tensor products and characteristic polynomials
# ---------------------------------------------------------------------------


def tensor_presentations(P1: TPresentation, P2: TPresentation) -> TPresentation:
    """Kronecker product of the tau-matrices; the dimension is read off the determinant law."""
    Q = kron(P1.Q, P2.Q)
    labels = None
    if P1.labels and P2.labels:
        labels = [(a, b) for a in P1.labels for b in P2.labels]
    out = TPresentation(Q, P1.ring, labels=labels, check=False)
    out.n = P1.n * P2.r + P2.n * P1.r
    c1, c2 = P1.det_constant, P2.det_constant
    if c1 is not None and c2 is not None:
        out.det_constant = (c1 ** P2.r) * (c2 ** P1.r)
    return out


def char_poly(P: TPresentation | Matrix) -> list[TPoly]:
    """Coefficients C_0..C_r of det(X E - Q) by the division-free Berkowitz algorithm."""
    Q = P.Q if isinstance(P, TPresentation) else P
    r = len(Q)
    zero = Q[0][0].zero
    one = TPoly((zero.one_like(),), zero)
    # vect holds coefficients highest degree first
    vect = [one, -Q[0][0]]
    for k in range(1, r):
        R = [Q[i][k] for i in range(k)]  # column above diagonal
        S = Q[k][:k]  # row left of diagonal
        A = [row[:k] for row in Q[:k]]
        akk = Q[k][k]
        # Toeplitz column: 1, -akk, -S R, -S A R, ...
        col = [one, -akk]
        v = R
        for _ in range(k):
            s = TPoly((), zero)
            for a, b in zip(S, v):
                if not a.is_zero() and not b.is_zero():
                    s = s + a * b
            col.append(-s)
            v = [sum((A[i][j] * v[j] for j in range(k) if not A[i][j].is_zero() and not v[j].is_zero()), TPoly((), zero)) for i in range(k)]
        new = []
        for i in range(k + 2):
            acc = TPoly((), zero)
            for j in range(min(i, len(vect) - 1) + 1):
                if i - j < len(col):
                    acc = acc + col[i - j] * vect[j]
            new.append(acc)
        vect = new
    return list(reversed(vect))
