import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import apply_tau, determinantal_exponents, evaluate_in_x, tpoly_det_leibniz, valuation_at
from tmotive.samples import random_generic_tau, random_scalar, ring_for
from tmotive.scalars import FiniteField, RationalField
from tmotive.shell import elaborate, parse_motive_document
from tmotive.skewcore import (
    DeterminantLawError,
    SingularLeadingCoefficient,
    TauPolyMatrix,
    TauPresentation,
    TPoly,
    TPresentation,
    carlitz,
    char_poly,
    constant_matrix,
    det_tpoly,
    gauge_equiv_search_constant,
    gauge_transform,
    invariant_factors_at_T_theta,
    mat_equal,
    mat_identity,
    t_basis_from_tau,
    tensor_presentations,
)

DATA = Path(__file__).parent / "data"


def ring(p=3, s=1, M=1):
    return RationalField(FiniteField(p, s, M))


def poly(R, *coeffs):
    return TPoly([R.from_int(c) if isinstance(c, int) else c for c in coeffs], R.zero())


def fixed_line_sample():
    doc = parse_motive_document((DATA / "fixed_line_sample.json").read_text())
    return doc, elaborate(doc)


# -- skew multiplication ------------------------------------------------------


def test_tau_moves_past_scalars_by_frobenius():
    R = ring(2, 1, 2)
    g = R.const(R.field.gen_code)
    zero, one = R.zero(), R.one()
    tau = TauPolyMatrix.from_list([[[zero]], [[one]]])
    c = TauPolyMatrix.from_list([[[g]]])
    assert tau * c == TauPolyMatrix.from_list([[[zero]], [[g * g]]])
    assert c * tau == TauPolyMatrix.from_list([[[zero]], [[g]]])
    th = TauPolyMatrix.from_list([[[R.theta()]]])
    assert (tau * th).coeff(1)[0][0] == R.theta() ** 2


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_skew_multiplication_is_associative(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 4]))

    def draw():
        deg = rng.randint(0, 2)
        return TauPolyMatrix.from_list(
            [[[random_scalar(R, rng) for _ in range(2)] for _ in range(2)] for _ in range(deg + 1)]
        )

    a, b, c = draw(), draw(), draw()
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


# -- conversion to a T-basis --------------------------------------------------


def test_carlitz_from_tau_data():
    R = ring(3)
    M = TauPresentation(1, [[[R.one()]]], R)
    P = t_basis_from_tau(M)
    assert P.Q[0][0] == TPoly.linear(R.theta())
    assert P.n == 1
    assert mat_equal(P.Q, carlitz(R).Q)


def test_singular_leading_coefficient_rejected():
    R = ring(3)
    zero, one = R.zero(), R.one()
    M = TauPresentation(2, [[[one, zero], [zero, zero]]], R)
    with pytest.raises(SingularLeadingCoefficient):
        t_basis_from_tau(M)


def test_det_law_violation_rejected():
    R = ring(3)
    with pytest.raises(DeterminantLawError):
        TPresentation([[poly(R, 1, 1)]], R)


def test_fixed_line_sample_q_matrix():
    _, el = fixed_line_sample()
    R = el.presentation.ring
    th, T = R.theta(), TPoly.T(R.zero())
    Q = el.presentation.Q
    z = TPoly((), R.zero())
    one = poly(R, 1)
    t_minus = T - th
    # Q rows in basis order: entries use -a_111 = -(theta^2 + 1) and -a_121 = -(theta + 2)
    expected = [
        [z, one, z],
        [t_minus, TPoly((-(th * th + R.one()),), R.zero()), z],
        [z, TPoly((-(th + R.from_int(2)),), R.zero()), t_minus],
    ]
    assert mat_equal(Q, expected)
    assert el.presentation.n == 2


def tau_relation_holds(M, P, e_index=None):
    """Each row of T e = theta e + N e + sum_i A_i tau^i e, with tau acting through Q.

    ``e_index[b]`` is the position of e_b in the basis of P; by default the first n.
    """
    if e_index is None:
        e_index = list(range(M.n))
    R = M.ring
    n, r = M.n, P.r
    zero_poly = TPoly((), R.zero())
    T = TPoly.T(R.zero())
    powers = []
    cur = [[TPoly((R.one(),), R.zero()) if k == e_index[b] else zero_poly for k in range(r)] for b in range(n)]
    powers.append(cur)
    for _ in range(M.l):
        cur = [apply_tau(v, P.Q) for v in cur]
        powers.append(cur)
    for a in range(n):
        lhs = [(T if k == e_index[a] else zero_poly) for k in range(r)]
        rhs = [(TPoly((R.theta(),), R.zero()) if k == e_index[a] else zero_poly) for k in range(r)]
        for b in range(n):
            if not M.N[a][b].is_zero():
                rhs = [x + y * M.N[a][b] for x, y in zip(rhs, powers[0][b])]
            for i in range(1, M.l + 1):
                c = M.A[i - 1][a][b]
                if not c.is_zero():
                    rhs = [x + y * c for x, y in zip(rhs, powers[i][b])]
        if not all(x == y for x, y in zip(lhs, rhs)):
            return False
    return True


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_generic_conversion_reproduces_the_tau_action(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 4, 5]))
    n, l = rng.randint(1, 2), rng.randint(1, 3)
    M = random_generic_tau(R, n, l, rng)
    P = t_basis_from_tau(M)
    assert P.r == n * l
    assert tau_relation_holds(M, P)


def test_fixed_line_sample_reproduces_the_tau_action():
    _, el = fixed_line_sample()
    labels = el.presentation.labels
    # basis vectors are X[alpha, j] = tau^j e_alpha
    e_index = [labels.index(("X", a, 0)) for a in range(el.tau.n)]
    assert tau_relation_holds(el.tau, el.presentation, e_index)


# -- determinant law ---------------------------------------------------------


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_det_law_against_permutation_expansion(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 4]))
    n, l = rng.randint(1, 2), rng.randint(1, 2)
    P = t_basis_from_tau(random_generic_tau(R, n, l, rng))
    det = tpoly_det_leibniz(P.Q, TPoly((), R.zero()))
    assert det == det_tpoly(P.Q)
    assert det.deg == n
    assert valuation_at(det, R.theta()) == n
    assert P.n == n


# -- invariant factors -------------------------------------------------------


def test_carlitz_invariant_factor():
    f = invariant_factors_at_T_theta(carlitz(ring(2)))
    assert f.m == (1,) and f.min_adj_valuation == 0


def test_fixed_line_sample_invariant_factors():
    _, el = fixed_line_sample()
    P = el.presentation
    f = invariant_factors_at_T_theta(P)
    assert list(f.m) == [0, 1, 1]
    assert determinantal_exponents(P.Q, P.ring.theta(), TPoly((), P.ring.zero())) == [0, 1, 1]
    assert f.min_adj_valuation == 1


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_invariant_factors_agree_with_minors(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3]))
    n, l = rng.randint(1, 2), rng.randint(1, 2)
    P = t_basis_from_tau(random_generic_tau(R, n, l, rng))
    f = invariant_factors_at_T_theta(P)
    assert list(f.m) == determinantal_exponents(P.Q, R.theta(), TPoly((), R.zero()))
    assert f.n == n


# -- gauge transforms --------------------------------------------------------


def random_unimodular(R, r, rng):
    """Product of elementary matrices with polynomial entries and a constant diagonal."""
    zero_poly = TPoly((), R.zero())
    C = mat_identity(r, R.zero())
    for _ in range(3):
        i, j = rng.sample(range(r), 2) if r > 1 else (0, 0)
        if i == j:
            break
        E = mat_identity(r, R.zero())
        E[i][j] = TPoly([R.from_int(rng.randrange(3)) for _ in range(2)], R.zero())
        C = [[sum((C[a][k] * E[k][b] for k in range(r)), zero_poly) for b in range(r)] for a in range(r)]
    u = R.from_int(rng.randrange(1, R.field.p))
    C[0] = [x * u for x in C[0]]
    return C


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_gauge_preserves_invariants(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 5]))
    P = t_basis_from_tau(random_generic_tau(R, 1, 2, rng))
    C = random_unimodular(R, P.r, rng)
    G = gauge_transform(P, C)
    assert G.n == P.n
    assert invariant_factors_at_T_theta(G).m == invariant_factors_at_T_theta(P).m


def test_gauge_by_identity_is_trivial():
    _, el = fixed_line_sample()
    P = el.presentation
    G = gauge_transform(P, mat_identity(P.r, P.ring.zero()))
    assert mat_equal(G.Q, P.Q)


def test_non_unimodular_gauge_rejected():
    R = ring(3)
    with pytest.raises(ValueError, match="unimodular"):
        gauge_transform(carlitz(R), [[TPoly.T(R.zero())]])


def test_constant_gauge_search_recovers_a_conjugation():
    rng = random.Random(5)
    R = ring_for(4)
    P = t_basis_from_tau(random_generic_tau(R, 2, 1, rng))
    g = R.field.gen_code
    C0 = [[g, 1], [0, 1]]
    Q2 = gauge_transform(P, constant_matrix(C0, R))
    C = gauge_equiv_search_constant(P, Q2)
    assert C is not None
    assert mat_equal(gauge_transform(P, constant_matrix(C, R)).Q, Q2.Q)
    assert gauge_equiv_search_constant(P, P) is not None


def test_constant_gauge_search_reports_absence():
    R = ring(3)
    P1 = carlitz(R)
    # T - theta - 1 has the wrong zero, so no constant relates the two
    P2 = TPresentation([[TPoly.linear(R.theta() + R.one())]], R, check=False)
    assert gauge_equiv_search_constant(P1, P2) is None


# -- tensor products ---------------------------------------------------------


def test_carlitz_squared():
    R = ring(3)
    P = tensor_presentations(carlitz(R), carlitz(R))
    assert P.r == 1 and P.n == 2
    assert P.Q[0][0] == TPoly.linear(R.theta()) ** 2


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_tensor_commutes_with_gauge(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3]))
    P1 = t_basis_from_tau(random_generic_tau(R, 1, 2, rng))
    P2 = t_basis_from_tau(random_generic_tau(R, 1, 1, rng))
    C = random_unimodular(R, P1.r, rng)
    lhs = tensor_presentations(gauge_transform(P1, C), P2)
    one = mat_identity(P2.r, R.zero())
    kronC = [[C[i // P2.r][j // P2.r] * one[i % P2.r][j % P2.r] for j in range(P1.r * P2.r)] for i in range(P1.r * P2.r)]
    rhs = gauge_transform(tensor_presentations(P1, P2), kronC)
    assert mat_equal(lhs.Q, rhs.Q)
    assert lhs.n == P1.n * P2.r + P2.n * P1.r
    assert det_tpoly(lhs.Q).deg == lhs.n


# -- characteristic polynomials ---------------------------------------------


def test_char_poly_of_carlitz():
    R = ring(5)
    C = char_poly(carlitz(R))
    assert C[1] == poly(R, 1)
    assert C[0] == -TPoly.linear(R.theta())


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_char_poly_against_determinant_at_sample_points(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 5]))
    P = t_basis_from_tau(random_generic_tau(R, rng.randint(1, 2), 2, rng))
    coeffs = char_poly(P)
    assert len(coeffs) == P.r + 1
    zero_poly = TPoly((), R.zero())
    for x in (poly(R, 0), poly(R, 1), TPoly.T(R.zero()), poly(R, R.theta(), 2)):
        shifted = [[(x if i == j else zero_poly) - P.Q[i][j] for j in range(P.r)] for i in range(P.r)]
        assert evaluate_in_x(coeffs, x) == tpoly_det_leibniz(shifted, zero_poly)
