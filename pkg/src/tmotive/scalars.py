"""Scalar layer: finite fields, exact rational functions in theta, truncated Puiseux series.

Three scalar families share a small duck-typed interface used by the matrix code:
``+ - * /``, ``is_zero()``, ``frobenius(i)``, ``zero_like()``, ``one_like()`` and
``from_code(code)``.

* :class:`FieldElement` lives in ``F_{q^M}``, stored as an integer code whose base-p
  digits are the coordinates in the power basis of the field modulus.
* :class:`RationalScalar` is an exact element of ``F_{q^M}(w)`` with ``w^ram = theta``.
* :class:`PuiseuxScalar` is a truncated series in a uniformizer ``u`` together with an
  absolute precision: the value is known modulo ``u^prec``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ExtensionRequired",
    "FieldElement",
    "FiniteField",
    "InsufficientPrecision",
    "InverseFrobeniusUndefined",
    "PuiseuxContext",
    "PuiseuxScalar",
    "RationalField",
    "RationalScalar",
    "WildExponent",
    "binomial_root",
    "frobenius_power",
    "iota_embed",
]


class InsufficientPrecision(ArithmeticError):
    """A comparison or valuation cannot be decided from the retained digits."""


class ExtensionRequired(ArithmeticError):
    """A needed root lives only in a proper extension of the coefficient field."""

    def __init__(self, degree: int | None, what: str = "root"):
        size = f"degree {degree}" if degree is not None else "degree unknown"
        super().__init__(f"extension required: {size} ({what})")
        self.degree = degree


class WildExponent(ValueError):
    """Root extraction with exponent divisible by the characteristic."""


class InverseFrobeniusUndefined(ValueError):
    pass


# ---------------------------------------------------------------------------
# prime-field polynomial helpers (lists of ints, lowest degree first)
# ---------------------------------------------------------------------------


def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mod(a: list[int], m: Sequence[int], p: int) -> list[int]:
    a = [x % p for x in a]
    _fp_trim(a)
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _fp_trim(a)
    return a


def _fp_mul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _fp_trim([x % p for x in out])


def _fp_powmod(base: list[int], e: int, m: Sequence[int], p: int) -> list[int]:
    result = [1]
    base = _fp_mod(base, m, p)
    while e:
        if e & 1:
            result = _fp_mod(_fp_mul(result, base, p), m, p)
        base = _fp_mod(_fp_mul(base, base, p), m, p)
        e >>= 1
    return result


def _fp_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _fp_trim(list(a)), _fp_trim(list(b))
    while b:
        a, b = b, _fp_mod(a, b, p)
    return a


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible_fp(poly: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p."""
    poly = list(poly)
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    x = [0, 1]
    if _fp_powmod(x, p**deg, poly, p) != _fp_mod(x, poly, p):
        return False
    for ell in _prime_factors(deg):
        h = _fp_powmod(x, p ** (deg // ell), poly, p)
        diff = list(h) + [0] * max(0, 2 - len(h))
        diff[1] = (diff[1] - 1) % p
        if len(_fp_gcd(list(poly), _fp_trim(diff), p)) != 1:
            return False
    return True


def _digits(code: int, p: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        code, d = divmod(code, p)
        out.append(d)
    return out


def _undigits(digits: Iterable[int], p: int) -> int:
    code = 0
    for d in reversed(list(digits)):
        code = code * p + int(d)
    return code


# ---------------------------------------------------------------------------
# finite fields
# ---------------------------------------------------------------------------


class FiniteField:
    """The field F_{q^M} with q = p^s, elements coded as integers in [0, p^{sM}).

    ``modulus`` is a monic irreducible polynomial of degree s*M over F_p given as
    a coefficient list (lowest degree first). The default is the least monic
    irreducible when polynomials are ordered by their integer code.
    """

    def __init__(self, p: int, s: int = 1, M: int = 1, modulus: Sequence[int] | None = None):
        if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise ValueError(f"characteristic {p} is not prime")
        if s < 1 or M < 1:
            raise ValueError("s and M must be positive")
        self.p, self.s, self.M = p, s, M
        self.q = p**s
        self.degree = D = s * M
        self.order = p**D
        if modulus is None:
            modulus = self._least_irreducible(p, D)
        modulus = [int(c) % p for c in modulus]
        if len(modulus) != D + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree s*M")
        if not is_irreducible_fp(modulus, p):
            raise ValueError(f"modulus {modulus} is reducible over F_{p}")
        self.modulus = tuple(modulus)
        self._build_tables()

    @staticmethod
    def _least_irreducible(p: int, D: int) -> list[int]:
        for code in range(p**D, 2 * p**D):
            poly = _digits(code, p, D + 1)
            if is_irreducible_fp(poly, p):
                return poly
        raise AssertionError("no irreducible polynomial found")

    def _mul_codes_slow(self, a: int, b: int) -> int:
        prod = _fp_mul(_digits(a, self.p, self.degree), _digits(b, self.p, self.degree), self.p)
        red = _fp_mod(prod, self.modulus, self.p)
        return _undigits(red + [0] * (self.degree - len(red)), self.p)

    def _build_tables(self) -> None:
        p, D, Q = self.p, self.degree, self.order
        self.digit_table = np.array([_digits(c, p, D) for c in range(Q)], dtype=np.int64)
        self.place_values = np.array([p**i for i in range(D)], dtype=np.int64)
        # primitive element: least code of multiplicative order Q - 1
        factors = _prime_factors(Q - 1)
        primitive = None
        for cand in range(1, Q):
            if all(self._pow_slow(cand, (Q - 1) // f) != 1 for f in factors) or Q == 2:
                primitive = cand
                break
        assert primitive is not None
        self.primitive = primitive
        exp = [1] * (2 * (Q - 1))
        for k in range(1, 2 * (Q - 1)):
            exp[k] = self._mul_codes_slow(exp[k - 1], primitive)
        log = [0] * Q
        for k in range(Q - 1):
            log[exp[k]] = k
        self.exp_table, self.log_table = exp, log
        self.add_table = [[self._add_digits(a, b) for b in range(Q)] for a in range(Q)]
        self.neg_table = [self._add_digits(0, a, sign=-1) for a in range(Q)]
        self.sub_table = [[self.add_table[a][self.neg_table[b]] for b in range(Q)] for a in range(Q)]
        mul = [[0] * Q for _ in range(Q)]
        for a in range(1, Q):
            la = log[a]
            row = mul[a]
            for b in range(1, Q):
                row[b] = exp[la + log[b]]
        self.mul_table = mul
        self.inv_table = [0] + [exp[(Q - 1 - log[a]) % (Q - 1)] for a in range(1, Q)]
        self.frob_table = [self.pow(a, self.q) for a in range(Q)]
        self.np_add = np.array(self.add_table, dtype=np.int64)
        self.np_mul = np.array(self.mul_table, dtype=np.int64)
        # rows: digits of (x^i)^q, so digits(y^q) = digits(y) @ frob_matrix mod p
        self.frob_matrix = np.array(
            [self.digit_table[self.frob_table[self.code_of_digits(np.eye(D, dtype=np.int64)[i])]] for i in range(D)],
            dtype=np.int64,
        )
        # rows: digits of x^j for j < 2D - 1, used to fold products of digit vectors
        if D > 1:
            self.fold_matrix = np.array([self.digit_table[self._pow_slow(p, j)] for j in range(2 * D - 1)], dtype=np.int64)
        else:
            self.fold_matrix = np.ones((1, 1), dtype=np.int64)

    def _add_digits(self, a: int, b: int, sign: int = 1) -> int:
        p = self.p
        out, place = 0, 1
        while a or b:
            a, da = divmod(a, p)
            b, db = divmod(b, p)
            out += ((da + sign * db) % p) * place
            place *= p
        return out

    def _pow_slow(self, a: int, e: int) -> int:
        result, base = 1, a
        while e:
            if e & 1:
                result = self._mul_codes_slow(result, base)
            base = self._mul_codes_slow(base, base)
            e >>= 1
        return result

    # -- identity -------------------------------------------------------------

    @property
    def key(self) -> tuple:
        return (self.p, self.s, self.M, self.modulus)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FiniteField) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"FiniteField(p={self.p}, s={self.s}, M={self.M})"

    # -- code arithmetic ------------------------------------------------------

    @property
    def x_code(self) -> int:
        return self.p if self.degree > 1 else self.primitive

    @property
    def gen_code(self) -> int:
        """Code of the distinguished generator ``g``: the class of x, or a primitive root when s*M = 1."""
        return self.p if self.degree > 1 else self.primitive

    def add(self, a: int, b: int) -> int:
        return self.add_table[a][b]

    def sub(self, a: int, b: int) -> int:
        return self.sub_table[a][b]

    def neg(self, a: int) -> int:
        return self.neg_table[a]

    def mul(self, a: int, b: int) -> int:
        return self.mul_table[a][b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in finite field")
        return self.inv_table[a]

    def div(self, a: int, b: int) -> int:
        return self.mul_table[a][self.inv(b)]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise ZeroDivisionError("negative power of zero")
            return 1 if e == 0 else 0
        return self.exp_table[(self.log_table[a] * e) % (self.order - 1)]

    def frob(self, a: int, i: int = 1) -> int:
        return self.pow(a, pow(self.q, i % self.degree)) if i % self.degree else a

    def from_int(self, n: int) -> int:
        return n % self.p

    def mult_order(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative order")
        return (self.order - 1) // math.gcd(self.order - 1, self.log_table[a])

    def in_base_field(self, a: int) -> bool:
        return self.frob_table[a] == a

    def kth_roots(self, a: int, k: int) -> list[int]:
        """All k-th roots of ``a`` in this field, ascending by code."""
        if a == 0:
            return [0]
        Qm = self.order - 1
        la = self.log_table[a]
        g = math.gcd(k, Qm)
        if la % g:
            return []
        k1, m1 = k // g, Qm // g
        base = (la // g) * pow(k1, -1, m1) % m1 if m1 > 1 else 0
        return sorted(self.exp_table[(base + j * m1) % Qm] for j in range(g))

    def code_of_digits(self, digits) -> int:
        return int(np.dot(np.asarray(digits, dtype=np.int64) % self.p, self.place_values))

    def codes_of_digit_rows(self, rows: np.ndarray) -> np.ndarray:
        return (rows % self.p) @ self.place_values

    def elements(self) -> range:
        return range(self.order)

    def elem(self, code: int) -> "FieldElement":
        return FieldElement(self, code)

    @cached_property
    def gen(self) -> "FieldElement":
        return FieldElement(self, self.gen_code)

    def base_field_codes(self) -> list[int]:
        return [a for a in range(self.order) if self.in_base_field(a)]

    @lru_cache(maxsize=None)
    def mul_matrix(self, c: int) -> np.ndarray:
        """Digit matrix of multiplication by ``c``: digits(c*y) = digits(y) @ mul_matrix(c) mod p."""
        D = self.degree
        rows = [self.digit_table[self.mul(c, self.code_of_digits(np.eye(D, dtype=np.int64)[i]))] for i in range(D)]
        return np.array(rows, dtype=np.int64)

    @lru_cache(maxsize=None)
    def frob_matrix_power(self, i: int) -> np.ndarray:
        i %= self.degree
        mat = np.eye(self.degree, dtype=np.int64)
        for _ in range(i):
            mat = (mat @ self.frob_matrix) % self.p
        return mat

    def fq_basis(self) -> list[int]:
        """Power basis 1, g, ..., g^{M-1} of F_{q^M} over F_q."""
        return [self.pow(self.gen_code, i) for i in range(self.M)] if self.M > 1 else [1]

    def fq_coordinates(self, a: int) -> list[int]:
        """Coordinates of ``a`` in :meth:`fq_basis`, each coded in F_q (brute force, small fields)."""
        return self._coordinate_map()[a]

    @lru_cache(maxsize=None)
    def _coordinate_map(self) -> dict[int, tuple[int, ...]]:
        base = self.base_field_codes()
        basis = self.fq_basis()
        table: dict[int, tuple[int, ...]] = {}

        def rec(idx: int, acc: int, coords: tuple[int, ...]):
            if idx == len(basis):
                table[acc] = coords
                return
            for c in base:
                rec(idx + 1, self.add(acc, self.mul(c, basis[idx])), coords + (c,))

        rec(0, 0, ())
        return table


@dataclass(frozen=True)
class FieldElement:
    field: FiniteField
    code: int

    def _wrap(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("field mismatch")
            return other.code
        if isinstance(other, int):
            return self.field.from_int(other)
        return NotImplemented

    def __add__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.add(self.code, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.sub(self.code, b))

    def __rsub__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.sub(b, self.code))

    def __mul__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.mul(self.code, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.div(self.code, b))

    def __rtruediv__(self, other):
        b = self._wrap(other)
        return NotImplemented if b is NotImplemented else FieldElement(self.field, self.field.div(b, self.code))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.code))

    def __pow__(self, e: int):
        return FieldElement(self.field, self.field.pow(self.code, e))

    def is_zero(self) -> bool:
        return self.code == 0

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.code))

    def frobenius(self, i: int = 1) -> "FieldElement":
        return FieldElement(self.field, self.field.frob(self.code, i))

    def zero_like(self) -> "FieldElement":
        return FieldElement(self.field, 0)

    def one_like(self) -> "FieldElement":
        return FieldElement(self.field, 1)

    def from_code(self, code: int) -> "FieldElement":
        return FieldElement(self.field, code)

    def __repr__(self) -> str:
        return f"F[{self.code}]"


# ---------------------------------------------------------------------------
# polynomials over F_{q^M} (tuples of codes, lowest degree first)
# ---------------------------------------------------------------------------

FqPoly = tuple


def poly_trim(a: Sequence[int]) -> tuple[int, ...]:
    n = len(a)
    while n and a[n - 1] == 0:
        n -= 1
    return tuple(a[:n])


def poly_add(F: FiniteField, a: FqPoly, b: FqPoly) -> FqPoly:
    if len(a) < len(b):
        a, b = b, a
    at = F.add_table
    out = list(a)
    for i, y in enumerate(b):
        out[i] = at[out[i]][y]
    return poly_trim(out)


def poly_neg(F: FiniteField, a: FqPoly) -> FqPoly:
    nt = F.neg_table
    return tuple(nt[x] for x in a)


def poly_sub(F: FiniteField, a: FqPoly, b: FqPoly) -> FqPoly:
    return poly_add(F, a, poly_neg(F, b))


def poly_scale(F: FiniteField, c: int, a: FqPoly) -> FqPoly:
    if c == 0:
        return ()
    row = F.mul_table[c]
    return tuple(row[x] for x in a)


def poly_mul(F: FiniteField, a: FqPoly, b: FqPoly) -> FqPoly:
    if not a or not b:
        return ()
    if len(a) == 1:
        return poly_scale(F, a[0], b)
    if len(b) == 1:
        return poly_scale(F, b[0], a)
    at, mt = F.add_table, F.mul_table
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            row = mt[x]
            for j, y in enumerate(b):
                if y:
                    out[i + j] = at[out[i + j]][row[y]]
    return poly_trim(out)


def poly_divmod(F: FiniteField, a: FqPoly, b: FqPoly) -> tuple[FqPoly, FqPoly]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    db = len(b) - 1
    if len(a) - 1 < db:
        return (), a
    inv_lead = F.inv(b[-1])
    rem = list(a)
    quot = [0] * (len(a) - db)
    st, mt = F.sub_table, F.mul_table
    for k in range(len(a) - 1 - db, -1, -1):
        c = mt[rem[k + db]][inv_lead]
        quot[k] = c
        if c:
            row = mt[c]
            for i, y in enumerate(b):
                if y:
                    rem[k + i] = st[rem[k + i]][row[y]]
    return poly_trim(quot), poly_trim(rem[:db])


def poly_monic(F: FiniteField, a: FqPoly) -> tuple[FqPoly, int]:
    if not a:
        return (), 0
    lead = a[-1]
    return poly_scale(F, F.inv(lead), a), lead


def poly_gcd(F: FiniteField, a: FqPoly, b: FqPoly) -> FqPoly:
    while b:
        a, b = b, poly_divmod(F, a, b)[1]
    return poly_monic(F, a)[0]


def poly_eval(F: FiniteField, a: FqPoly, x: int) -> int:
    acc = 0
    for c in reversed(a):
        acc = F.add(F.mul(acc, x), c)
    return acc


def poly_map_coeffs(F: FiniteField, a: FqPoly, i: int) -> FqPoly:
    return poly_trim([F.frob(c, i) for c in a])


def poly_inflate(a: FqPoly, k: int) -> FqPoly:
    if k == 1 or not a:
        return a
    out = [0] * ((len(a) - 1) * k + 1)
    for i, c in enumerate(a):
        out[i * k] = c
    return tuple(out)


# ---------------------------------------------------------------------------
# rational functions F_{q^M}(w), w^ram = theta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalField:
    """Context for :class:`RationalScalar`: coefficient field and ramification of the variable."""

    field: FiniteField
    ram: int = 1

    def make(self, num: FqPoly, den: FqPoly = (1,)) -> "RationalScalar":
        return RationalScalar.canonical(self, tuple(num), tuple(den))

    def zero(self) -> "RationalScalar":
        return RationalScalar(self, (), (1,))

    def one(self) -> "RationalScalar":
        return RationalScalar(self, (1,), (1,))

    def const(self, code: int) -> "RationalScalar":
        return RationalScalar(self, poly_trim((code,)), (1,))

    def from_int(self, n: int) -> "RationalScalar":
        return self.const(self.field.from_int(n))

    def theta(self) -> "RationalScalar":
        return RationalScalar(self, poly_inflate((0, 1), self.ram) if self.ram > 1 else (0, 1), (1,))

    def root_var(self) -> "RationalScalar":
        """The variable w with w^ram = theta (for ram = 1 this is theta)."""
        return RationalScalar(self, (0, 1), (1,))


class RationalScalar:
    """Exact element num/den of F_{q^M}(w) in canonical form (monic denominator, coprime)."""

    __slots__ = ("ctx", "num", "den", "_hash")

    def __init__(self, ctx: RationalField, num: FqPoly, den: FqPoly):
        self.ctx = ctx
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def canonical(cls, ctx: RationalField, num: FqPoly, den: FqPoly) -> "RationalScalar":
        F = ctx.field
        num, den = poly_trim(num), poly_trim(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return cls(ctx, (), (1,))
        if len(den) > 1:
            g = poly_gcd(F, num, den)
            if len(g) > 1:
                num = poly_divmod(F, num, g)[0]
                den = poly_divmod(F, den, g)[0]
        if den[-1] != 1:
            inv_lead = F.inv(den[-1])
            num, den = poly_scale(F, inv_lead, num), poly_scale(F, inv_lead, den)
        return cls(ctx, num, den)

    @property
    def field(self) -> FiniteField:
        return self.ctx.field

    def _coerce(self, other) -> "RationalScalar":
        if isinstance(other, RationalScalar):
            if other.ctx != self.ctx:
                raise ValueError("rational scalar context mismatch")
            return other
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if isinstance(other, FieldElement):
            return self.ctx.const(other.code)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        F = self.ctx.field
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            return RationalScalar.canonical(self.ctx, poly_add(F, self.num, o.num), self.den)
        num = poly_add(F, poly_mul(F, self.num, o.den), poly_mul(F, o.num, self.den))
        return RationalScalar.canonical(self.ctx, num, poly_mul(F, self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalScalar(self.ctx, poly_neg(self.ctx.field, self.num), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        F = self.ctx.field
        if not self.num or not o.num:
            return self.ctx.zero()
        if self.den == (1,) and o.den == (1,):
            return RationalScalar(self.ctx, poly_mul(F, self.num, o.num), (1,))
        return RationalScalar.canonical(self.ctx, poly_mul(F, self.num, o.num), poly_mul(F, self.den, o.den))

    __rmul__ = __mul__

    def inverse(self) -> "RationalScalar":
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational scalar")
        return RationalScalar.canonical(self.ctx, self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.ctx.one(), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.ctx.from_int(other)
        if not isinstance(other, RationalScalar):
            return NotImplemented
        return self.ctx == other.ctx and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def is_zero(self) -> bool:
        return not self.num

    def is_one(self) -> bool:
        return self.num == (1,) and self.den == (1,)

    def is_constant(self) -> bool:
        return len(self.num) <= 1 and self.den == (1,)

    def constant_code(self) -> int:
        if not self.is_constant():
            raise ValueError("scalar is not constant")
        return self.num[0] if self.num else 0

    def is_polynomial(self) -> bool:
        return self.den == (1,)

    def frobenius(self, i: int = 1) -> "RationalScalar":
        """True q^i-power: coefficients to the q^i-th power and w -> w^{q^i}."""
        if i < 0:
            raise InverseFrobeniusUndefined("inverse Frobenius undefined on rational scalars")
        if i == 0 or not self.num:
            return self
        F = self.ctx.field
        k = self.ctx.field.q**i
        num = poly_inflate(poly_map_coeffs(F, self.num, i), k)
        den = poly_inflate(poly_map_coeffs(F, self.den, i), k)
        return RationalScalar(self.ctx, num, den)

    def conjugate(self, i: int = 1) -> "RationalScalar":
        """Galois conjugation over F_q(w): only the coefficients are raised to the q^i-th power."""
        F = self.ctx.field
        return RationalScalar(self.ctx, poly_map_coeffs(F, self.num, i), poly_map_coeffs(F, self.den, i))

    def zero_like(self) -> "RationalScalar":
        return self.ctx.zero()

    def one_like(self) -> "RationalScalar":
        return self.ctx.one()

    def from_code(self, code: int) -> "RationalScalar":
        return self.ctx.const(code)

    def degree_pair(self) -> tuple[int, int]:
        return len(self.num) - 1, len(self.den) - 1

    def infinity_valuation(self) -> Fraction:
        """Valuation at infinity normalized by val(theta) = -1."""
        if not self.num:
            raise ValueError("valuation of zero")
        return Fraction(len(self.den) - len(self.num), self.ctx.ram)

    def __repr__(self) -> str:
        return f"RationalScalar({_fmt_poly(self.num)} / {_fmt_poly(self.den)})" if self.den != (1,) else f"RationalScalar({_fmt_poly(self.num)})"

    def to_expr(self) -> str:
        """Render in the shell expression grammar."""
        var = "theta" if self.ctx.ram == 1 else "s"
        num = _expr_poly(self.ctx.field, self.num, var)
        if self.den == (1,):
            return num
        return f"({num})/({_expr_poly(self.ctx.field, self.den, var)})"


def _fmt_poly(a: FqPoly) -> str:
    return "[" + ",".join(str(c) for c in a) + "]"


def _expr_code(F: FiniteField, c: int) -> str:
    if c < F.p:
        return str(c)
    digits = _digits(c, F.p, F.degree)
    terms = []
    g = "g"
    for i, d in enumerate(digits):
        if d:
            mono = "1" if i == 0 else (g if i == 1 else f"{g}^{i}")
            terms.append(mono if d == 1 and i else (f"{d}*{mono}" if i else str(d)))
    return "(" + "+".join(terms) + ")"


def _expr_poly(F: FiniteField, a: FqPoly, var: str) -> str:
    if not a:
        return "0"
    terms = []
    for i, c in enumerate(a):
        if not c:
            continue
        cs = _expr_code(F, c)
        if i == 0:
            terms.append(cs)
        else:
            mono = var if i == 1 else f"{var}^{i}"
            terms.append(mono if c == 1 else f"{cs}*{mono}")
    return "+".join(terms)


# ---------------------------------------------------------------------------
# truncated Puiseux series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuiseuxContext:
    """Series in u over F_{q^M}; place 'infinity' has u = theta^(-1/e), place 'theta' has u = theta^(1/e).

    ``cap`` bounds every retained exponent: coefficients of u^k with k >= cap are dropped.
    """

    field: FiniteField
    e: int = 1
    cap: int = 64
    place: str = "infinity"

    def __post_init__(self):
        if self.place not in ("infinity", "theta"):
            raise ValueError(f"unknown place {self.place!r}")
        if self.e < 1:
            raise ValueError("ramification index must be positive")

    def ramified(self, k: int) -> "PuiseuxContext":
        return PuiseuxContext(self.field, self.e * k, self.cap * k, self.place)

    def join(self, other: "PuiseuxContext") -> "PuiseuxContext":
        if self.field != other.field or self.place != other.place:
            raise ValueError("cannot mix Puiseux contexts with different field or place")
        e = self.e * other.e // math.gcd(self.e, other.e)
        cap = min(self.cap * (e // self.e), other.cap * (e // other.e))
        return PuiseuxContext(self.field, e, cap, self.place)

    def zero(self, prec: int | None = None) -> "PuiseuxScalar":
        prec = self.cap if prec is None else min(prec, self.cap)
        return PuiseuxScalar(self, prec, None, prec)

    def one(self) -> "PuiseuxScalar":
        return self.monomial(1, 0)

    def const(self, code: int) -> "PuiseuxScalar":
        return self.monomial(code, 0)

    def from_int(self, n: int) -> "PuiseuxScalar":
        return self.const(self.field.from_int(n))

    def monomial(self, code: int, exponent: int, prec: int | None = None) -> "PuiseuxScalar":
        prec = self.cap if prec is None else min(prec, self.cap)
        if code == 0 or exponent >= prec:
            return PuiseuxScalar(self, prec, None, prec)
        return PuiseuxScalar(self, exponent, self.field.digit_table[[code]].copy(), prec)

    def theta(self) -> "PuiseuxScalar":
        return self.monomial(1, -self.e if self.place == "infinity" else self.e)

    def from_codes(self, start: int, codes: Sequence[int], prec: int | None = None) -> "PuiseuxScalar":
        prec = self.cap if prec is None else min(prec, self.cap)
        arr = self.field.digit_table[np.asarray(list(codes), dtype=np.int64)] if len(codes) else None
        return PuiseuxScalar(self, start, arr, prec)


def _int_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer convolution of small nonnegative vectors."""
    n = len(a) + len(b) - 1
    if min(len(a), len(b)) < 48:
        return np.convolve(a, b)
    bound = int(a.max(initial=0)) * int(b.max(initial=0)) * min(len(a), len(b))
    if bound >= 2**50:
        return np.convolve(a, b)
    size = 1 << (n - 1).bit_length()
    fa = np.fft.rfft(a.astype(np.float64), size)
    fb = np.fft.rfft(b.astype(np.float64), size)
    return np.rint(np.fft.irfft(fa * fb, size)[:n]).astype(np.int64)


def _series_product(F: FiniteField, A: np.ndarray, B: np.ndarray, length: int) -> np.ndarray:
    """First ``length`` coefficients (digit rows) of the product of two digit-row series."""
    p, D = F.p, F.degree
    A = A[:length]
    B = B[:length]
    if D == 1:
        out = _int_convolve(A[:, 0], B[:, 0])[:length] % p
        return out.reshape(-1, 1)
    S = 2 * D - 1
    pa = np.zeros(len(A) * S, dtype=np.int64)
    pb = np.zeros(len(B) * S, dtype=np.int64)
    pa.reshape(len(A), S)[:, :D] = A
    pb.reshape(len(B), S)[:, :D] = B
    conv = _int_convolve(pa, pb) % p
    rows = (len(conv) + S - 1) // S
    padded = np.zeros(rows * S, dtype=np.int64)
    padded[: len(conv)] = conv
    folded = (padded.reshape(rows, S) @ F.fold_matrix) % p
    return folded[:length]


class PuiseuxScalar:
    """Truncated series sum_j c_j u^(start + j), known modulo u^prec.

    ``coeffs`` is an (L, s*M) array of base-p digits or None for zero-to-precision.
    Precision rules: add keeps the minimum precision; multiplication keeps
    min(prec_a + val_b, prec_b + val_a); inversion keeps prec - 2*val; Frobenius
    multiplies exponents and precision by q.
    """

    __slots__ = ("ctx", "start", "coeffs", "prec")

    def __init__(self, ctx: PuiseuxContext, start: int, coeffs: np.ndarray | None, prec: int):
        prec = min(prec, ctx.cap)
        if coeffs is not None and len(coeffs):
            nz = np.flatnonzero(coeffs.any(axis=1))
            if len(nz) == 0 or start + nz[0] >= prec:
                coeffs = None
            else:
                first, last = nz[0], nz[-1]
                keep = min(last + 1, prec - start)
                coeffs = coeffs[first:keep]
                start += int(first)
                nz2 = np.flatnonzero(coeffs.any(axis=1))
                coeffs = coeffs[: nz2[-1] + 1]
        else:
            coeffs = None
        if coeffs is None:
            start = prec
        self.ctx = ctx
        self.start = int(start)
        self.coeffs = coeffs
        self.prec = int(prec)

    # -- structure ------------------------------------------------------------

    @property
    def field(self) -> FiniteField:
        return self.ctx.field

    def is_zero(self) -> bool:
        """Zero to the retained precision."""
        return self.coeffs is None

    def lead_exponent(self) -> int:
        """Leading exponent, or the precision when zero to precision."""
        return self.start

    def valuation(self) -> Fraction:
        if self.coeffs is None:
            raise InsufficientPrecision(f"valuation undecidable: zero to precision {self.prec}/{self.ctx.e}")
        return Fraction(self.start, self.ctx.e)

    def leading_code(self) -> int:
        if self.coeffs is None:
            raise InsufficientPrecision("leading coefficient of zero-to-precision element")
        return self.field.code_of_digits(self.coeffs[0])

    def coefficient(self, exponent: int) -> int:
        if exponent >= self.prec:
            raise InsufficientPrecision(f"coefficient u^{exponent} beyond precision {self.prec}")
        if self.coeffs is None or exponent < self.start or exponent >= self.start + len(self.coeffs):
            return 0
        return self.field.code_of_digits(self.coeffs[exponent - self.start])

    def terms(self) -> list[tuple[int, int]]:
        """Nonzero (exponent, code) pairs."""
        if self.coeffs is None:
            return []
        codes = self.field.codes_of_digit_rows(self.coeffs)
        return [(self.start + int(j), int(codes[j])) for j in np.flatnonzero(codes)]

    def codes(self, lo: int, hi: int) -> list[int]:
        """Codes of u^lo .. u^(hi-1); hi must not exceed the precision."""
        if hi > self.prec:
            raise InsufficientPrecision(f"coefficients up to u^{hi} requested, precision {self.prec}")
        return [self.coefficient(k) for k in range(lo, hi)]

    def _dense(self, lo: int, hi: int) -> np.ndarray:
        D = self.field.degree
        out = np.zeros((max(hi - lo, 0), D), dtype=np.int64)
        if self.coeffs is None or hi <= lo:
            return out
        a0 = max(lo, self.start)
        a1 = min(hi, self.start + len(self.coeffs))
        if a1 > a0:
            out[a0 - lo : a1 - lo] = self.coeffs[a0 - self.start : a1 - self.start]
        return out

    def __repr__(self) -> str:
        terms = self.terms()[:6]
        body = " + ".join(f"{c}*u^{k}" for k, c in terms) or "0"
        more = " + ..." if self.coeffs is not None and len(self.terms()) > 6 else ""
        return f"Puiseux(e={self.ctx.e}, {body}{more} + O(u^{self.prec}))"

    # -- coercion ---------------------------------------------------------------

    def with_context(self, ctx: PuiseuxContext) -> "PuiseuxScalar":
        if ctx == self.ctx:
            return self
        if ctx.field != self.ctx.field or ctx.place != self.ctx.place or ctx.e % self.ctx.e:
            raise ValueError("incompatible Puiseux contexts")
        k = ctx.e // self.ctx.e
        if self.coeffs is None:
            return PuiseuxScalar(ctx, self.prec * k, None, self.prec * k)
        D = self.field.degree
        arr = np.zeros(((len(self.coeffs) - 1) * k + 1, D), dtype=np.int64)
        arr[::k] = self.coeffs
        return PuiseuxScalar(ctx, self.start * k, arr, self.prec * k)

    def _coerce(self, other) -> "PuiseuxScalar":
        if isinstance(other, PuiseuxScalar):
            return other
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if isinstance(other, FieldElement):
            return self.ctx.const(other.code)
        if isinstance(other, RationalScalar):
            return iota_embed(other, self.ctx.e, self.ctx.cap, place=self.ctx.place)
        return NotImplemented

    def _align(self, other) -> tuple["PuiseuxScalar", "PuiseuxScalar"]:
        o = self._coerce(other)
        if o is NotImplemented:
            return self, o
        if o.ctx == self.ctx:
            return self, o
        ctx = self.ctx.join(o.ctx)
        return self.with_context(ctx), o.with_context(ctx)

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other):
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return a._add(b, 1)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return a._add(b, -1)

    def __rsub__(self, other):
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return b._add(a, -1)

    def _add(self, b: "PuiseuxScalar", sign: int) -> "PuiseuxScalar":
        prec = min(self.prec, b.prec)
        if b.coeffs is None:
            return PuiseuxScalar(self.ctx, self.start, self.coeffs, prec)
        if self.coeffs is None and sign == 1:
            return PuiseuxScalar(self.ctx, b.start, b.coeffs, prec)
        lo = min(self.start, b.start)
        hi = min(prec, max(self.start + (0 if self.coeffs is None else len(self.coeffs)), b.start + len(b.coeffs)))
        if hi <= lo:
            return PuiseuxScalar(self.ctx, prec, None, prec)
        out = (self._dense(lo, hi) + sign * b._dense(lo, hi)) % self.field.p
        return PuiseuxScalar(self.ctx, lo, out, prec)

    def __neg__(self):
        if self.coeffs is None:
            return self
        return PuiseuxScalar(self.ctx, self.start, (-self.coeffs) % self.field.p, self.prec)

    def __mul__(self, other):
        if isinstance(other, int):
            c = other % self.field.p
            if self.coeffs is None:
                return self
            return PuiseuxScalar(self.ctx, self.start, (self.coeffs * c) % self.field.p, self.prec)
        if isinstance(other, FieldElement):
            return self.scale(other.code)
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return a._mul(b)

    __rmul__ = __mul__

    def scale(self, code: int) -> "PuiseuxScalar":
        if self.coeffs is None:
            return self
        if code == 0:
            return PuiseuxScalar(self.ctx, self.prec, None, self.prec)
        mat = self.field.mul_matrix(code)
        return PuiseuxScalar(self.ctx, self.start, (self.coeffs @ mat) % self.field.p, self.prec)

    def shift(self, k: int) -> "PuiseuxScalar":
        """Multiply by u^k."""
        return PuiseuxScalar(self.ctx, self.start + k, self.coeffs, self.prec + k)

    def _mul(self, b: "PuiseuxScalar") -> "PuiseuxScalar":
        va, vb = self.start, b.start
        prec = min(self.prec + vb, b.prec + va)
        if self.coeffs is None or b.coeffs is None:
            return PuiseuxScalar(self.ctx, prec, None, prec)
        start = va + vb
        length = min(prec, self.ctx.cap) - start
        if length <= 0:
            return PuiseuxScalar(self.ctx, prec, None, prec)
        prod = _series_product(self.field, self.coeffs, b.coeffs, length)
        return PuiseuxScalar(self.ctx, start, prod, prec)

    def inverse(self) -> "PuiseuxScalar":
        if self.coeffs is None:
            raise InsufficientPrecision("inverse of an element that is zero to precision")
        v = self.start
        rel = self.prec - v
        prec = min(self.prec - 2 * v, self.ctx.cap)
        need = max(min(rel, prec + v), 1)
        F = self.field
        c0 = F.code_of_digits(self.coeffs[0])
        # unit part w = u^{-v} x, invert by Newton iteration y <- y (2 - w y)
        w = self.coeffs[:need]
        y = F.digit_table[[F.inv(c0)]].copy()
        have = 1
        two = np.zeros((1, F.degree), dtype=np.int64)
        two[0, 0] = 2 % F.p
        while have < need:
            have = min(2 * have, need)
            wy = _series_product(F, w, y, have)
            corr = (-wy) % F.p
            corr[0] = (corr[0] + two[0]) % F.p
            y = _series_product(F, y, corr, have)
        return PuiseuxScalar(self.ctx, -v, y[:need], prec)

    def __truediv__(self, other):
        if isinstance(other, (int, FieldElement)):
            code = other.code if isinstance(other, FieldElement) else self.field.from_int(other)
            return self.scale(self.field.inv(code))
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return a._mul(b.inverse())

    def __rtruediv__(self, other):
        a, b = self._align(other)
        if b is NotImplemented:
            return b
        return b._mul(a.inverse())

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.ctx.one(), self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def frobenius(self, i: int = 1) -> "PuiseuxScalar":
        if i == 0:
            return self
        F = self.field
        if i < 0:
            k = F.q ** (-i)
            terms = self.terms()
            if any(exp % k for exp, _ in terms):
                raise InverseFrobeniusUndefined("inverse Frobenius undefined: exponent not divisible by q")
            prec = -((-self.prec) // k)
            if self.coeffs is None:
                return PuiseuxScalar(self.ctx, prec, None, prec)
            sub = self.coeffs[:: k] if self.start % k == 0 else None
            if sub is None:
                raise InverseFrobeniusUndefined("inverse Frobenius undefined: exponent not divisible by q")
            mat = F.frob_matrix_power(i % F.degree)
            return PuiseuxScalar(self.ctx, self.start // k, (sub @ mat) % F.p, prec)
        k = F.q**i
        prec = min(self.prec * k, self.ctx.cap)
        if self.coeffs is None:
            return PuiseuxScalar(self.ctx, prec, None, prec)
        mapped = (self.coeffs @ F.frob_matrix_power(i % F.degree)) % F.p
        start = self.start * k
        rows = min(len(mapped), max(0, -(-(prec - start) // k)))
        if rows <= 0:
            return PuiseuxScalar(self.ctx, prec, None, prec)
        arr = np.zeros(((rows - 1) * k + 1, F.degree), dtype=np.int64)
        arr[::k] = mapped[:rows]
        return PuiseuxScalar(self.ctx, start, arr, prec)

    def truncate(self, prec: int) -> "PuiseuxScalar":
        return PuiseuxScalar(self.ctx, self.start, self.coeffs, min(prec, self.prec))

    def agrees_with(self, other) -> bool:
        """True when the difference is zero to the common precision."""
        return (self - other).is_zero()

    def zero_like(self) -> "PuiseuxScalar":
        return self.ctx.zero()

    def one_like(self) -> "PuiseuxScalar":
        return self.ctx.one()

    def from_code(self, code: int) -> "PuiseuxScalar":
        return self.ctx.const(code)

    def __eq__(self, other):
        if not isinstance(other, PuiseuxScalar):
            return NotImplemented
        if self.ctx != other.ctx or self.prec != other.prec or self.start != other.start:
            return False
        if self.coeffs is None or other.coeffs is None:
            return self.coeffs is None and other.coeffs is None
        return self.coeffs.shape == other.coeffs.shape and bool((self.coeffs == other.coeffs).all())

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def frobenius_power(x, i: int):
    """The i-fold q-power Frobenius on any scalar type (negative i where it is defined)."""
    if isinstance(x, RationalScalar) and i < 0:
        raise InverseFrobeniusUndefined("inverse Frobenius undefined on rational scalars")
    return x.frobenius(i)


def iota_embed(x: RationalScalar, e: int, N: int, place: str = "infinity") -> PuiseuxScalar:
    """Expand an exact rational function as a Puiseux series with ramification e, precision u^N."""
    F = x.ctx.field
    ram = x.ctx.ram
    if e % ram:
        raise ValueError(f"ramification {e} is not a multiple of the variable's ramification {ram}")
    ctx = PuiseuxContext(F, e, N, place)
    step = e // ram
    if x.is_zero():
        return ctx.zero()
    num, den = x.num, x.den
    if place == "infinity":
        # x = w^(dn-dd) * rev(num)(t) / rev(den)(t), t = 1/w = u^step
        lead_exp = -(len(num) - len(den)) * step
        r_num, r_den = tuple(reversed(num)), tuple(reversed(den))
    else:
        lo_n = next(i for i, c in enumerate(num) if c)
        lo_d = next(i for i, c in enumerate(den) if c)
        lead_exp = (lo_n - lo_d) * step
        r_num, r_den = num[lo_n:], den[lo_d:]
    count = max(0, -(-(N - lead_exp) // step))
    quotient = _series_divide(F, r_num, r_den, count)
    D = F.degree
    arr = np.zeros((max((count - 1) * step + 1, 0), D), dtype=np.int64)
    if count:
        arr[::step] = F.digit_table[np.asarray(quotient, dtype=np.int64)]
    return PuiseuxScalar(ctx, lead_exp, arr if count else None, N)


def _series_divide(F: FiniteField, num: FqPoly, den: FqPoly, count: int) -> list[int]:
    """First ``count`` power-series coefficients of num/den (den(0) != 0) by long division."""
    inv0 = F.inv(den[0])
    out = [0] * count
    rem = list(num) + [0] * max(0, count - len(num))
    mt, st = F.mul_table, F.sub_table
    for k in range(count):
        c = mt[rem[k]][inv0] if k < len(rem) else 0
        out[k] = c
        if c:
            row = mt[c]
            for j in range(1, len(den)):
                if k + j < count and den[j]:
                    rem[k + j] = st[rem[k + j]][row[den[j]]]
    return out


def _root_extension_degree(F: FiniteField, c: int, k: int) -> int:
    order = F.mult_order(c)
    d = 1
    while True:
        Qd = F.order**d - 1
        if (Qd // math.gcd(k, Qd)) % order == 0:
            return d
        d += 1


def binomial_root(x: PuiseuxScalar, k: int) -> PuiseuxScalar:
    """A k-th root of x: exact leading term times a Newton-iterated root of the unit part.

    The leading coefficient's root is the least-code root in F_{q^M}; the context
    is ramified just enough for the leading exponent to be divisible by k.
    """
    F = x.field
    if k < 1:
        raise ValueError("root index must be positive")
    if k % F.p == 0:
        raise WildExponent(f"wild exponent: p={F.p} divides k={k}")
    if x.is_zero():
        raise InsufficientPrecision("root of an element that is zero to precision")
    c0 = x.leading_code()
    roots = F.kth_roots(c0, k)
    if not roots:
        raise ExtensionRequired(_root_extension_degree(F, c0, k), "k-th root of leading coefficient")
    m = k // math.gcd(k, x.start)
    if m > 1:
        x = x.with_context(x.ctx.ramified(m))
    ctx = x.ctx
    v = x.start
    rel = x.prec - v
    # widen the storage cap so that normalizing to a unit loses nothing
    work = PuiseuxContext(F, ctx.e, max(ctx.cap, rel) + 1, ctx.place)
    unit = PuiseuxScalar(work, 0, x.coeffs, rel).scale(F.inv(c0))
    # solve y^k = unit by Newton iteration y <- y - (y^k - unit) / (k y^(k-1))
    y = work.one()
    have = 1
    kinv = pow(k % F.p, -1, F.p)
    while have < rel:
        have = min(2 * have, rel)
        target = unit.truncate(have)
        yk1 = y ** (k - 1) if k > 1 else work.one()
        resid = (yk1 * y - target).truncate(have)
        step = (resid * yk1.truncate(have).inverse()) * kinv
        y = (y - step).truncate(have)
        # the truncated iterate is an exact polynomial; its error is tracked by ``have``
        y = PuiseuxScalar(work, y.start, y.coeffs, work.cap)
    y = y.scale(roots[0])
    return PuiseuxScalar(ctx, v // k, y.coeffs, v // k + rel)
