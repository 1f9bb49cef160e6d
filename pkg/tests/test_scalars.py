from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import field_mul, laurent_division
from tmotive.scalars import (
    ExtensionRequired,
    FiniteField,
    InverseFrobeniusUndefined,
    PuiseuxContext,
    RationalField,
    WildExponent,
    binomial_root,
    frobenius_power,
    iota_embed,
)

SMALL_FIELDS = [(2, 1, 1), (2, 1, 2), (2, 2, 1), (3, 1, 2), (2, 1, 3), (5, 1, 1)]


@pytest.mark.parametrize("p,s,M", SMALL_FIELDS)
def test_multiplication_table_matches_schoolbook(p, s, M):
    F = FiniteField(p, s, M)
    for a in F.elements():
        for b in F.elements():
            assert F.mul(a, b) == field_mul(F, a, b)


def test_reducible_modulus_is_rejected():
    with pytest.raises(ValueError, match="reducible"):
        FiniteField(2, 1, 2, modulus=[1, 0, 1])


def test_explicit_modulus_is_kept():
    F = FiniteField(2, 1, 2, modulus=[1, 1, 1])
    assert F.modulus == (1, 1, 1)


def test_frobenius_generator_orbit_in_f4():
    F = FiniteField(2, 1, 2)
    g = F.elem(F.gen_code)
    orbit = [g]
    for _ in range(3):
        orbit.append(orbit[-1] * orbit[-1])
    assert orbit[2] == g  # squaring twice returns g
    assert frobenius_power(g, 2) == g
    assert frobenius_power(g, 1) != g


def test_frobenius_fixes_base_field():
    F = FiniteField(3, 1, 2)
    for c in F.base_field_codes():
        assert frobenius_power(F.elem(c), 1).code == c


def test_frobenius_of_puiseux_monomial():
    ctx = PuiseuxContext(FiniteField(3, 1, 1), 1, 40)
    x = ctx.theta().inverse()
    y = frobenius_power(x, 1)
    assert y.terms() == [(3, 1)]


def test_negative_frobenius_on_puiseux():
    ctx = PuiseuxContext(FiniteField(2, 1, 1), 1, 40)
    x = ctx.monomial(1, 4)
    assert frobenius_power(x, -2).terms() == [(1, 1)]
    with pytest.raises(InverseFrobeniusUndefined):
        frobenius_power(ctx.monomial(1, 3), -1)


def test_iota_embed_theta():
    ring = RationalField(FiniteField(2, 1, 1))
    x = iota_embed(ring.theta(), 1, 5)
    assert x.terms() == [(-1, 1)]
    assert x.valuation() == -1


def test_iota_embed_geometric_series():
    ring = RationalField(FiniteField(2, 1, 1))
    x = iota_embed(ring.one() / (ring.theta() - ring.one()), 1, 4)
    v, coeffs = laurent_division([1], [1, 1], 2, 3)
    assert v == 1 and coeffs == [1, 1, 1]
    assert x.terms() == [(1, 1), (2, 1), (3, 1)]


def test_iota_embed_zero():
    ring = RationalField(FiniteField(3, 1, 1))
    z = iota_embed(ring.zero(), 2, 7)
    assert z.is_zero() and z.prec == 7


@pytest.mark.parametrize("num,den", [((1, 2), (0, 0, 1)), ((2, 0, 1), (1, 1)), ((1,), (2, 1, 1))])
def test_iota_embed_against_long_division(num, den):
    p = 3
    ring = RationalField(FiniteField(p, 1, 1))
    x = ring.make(num, den)
    N = 12
    emb = iota_embed(x, 1, N)
    v, coeffs = laurent_division(num, den, p, 30)
    expected = {v + k: c for k, c in enumerate(coeffs) if c and v + k < N}
    assert dict(emb.terms()) == expected


def test_binomial_root_square():
    ctx = PuiseuxContext(FiniteField(3, 1, 1), 1, 30)
    y = binomial_root(ctx.theta() * ctx.theta(), 2)
    assert y.terms() in ([(-1, 1)], [(-1, 2)])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_xi_leading_coefficient(p):
    F = FiniteField(p, 1, 1 if p == 2 else 2)
    e = p - 1
    ctx = PuiseuxContext(F, e, 60)
    a0 = binomial_root(-ctx.theta().inverse(), p - 1)
    assert (a0 ** (p - 1) * ctx.theta() + ctx.one()).is_zero()


def test_torsion_seed_root():
    F = FiniteField(3, 1, 4)
    ctx = PuiseuxContext(F, 8, 80)
    z0 = binomial_root(-ctx.theta(), 8)
    assert (z0 ** 8 + ctx.theta()).is_zero()
    assert z0.valuation() == Fraction(-1, 8)


def test_root_needs_extension():
    ctx = PuiseuxContext(FiniteField(3, 1, 1), 2, 30)
    with pytest.raises(ExtensionRequired):
        binomial_root(-ctx.theta(), 2)


def test_wild_root_rejected():
    ctx = PuiseuxContext(FiniteField(3, 1, 1), 1, 30)
    with pytest.raises(WildExponent):
        binomial_root(ctx.theta(), 3)


def test_precision_shrinks_under_cancellation():
    ctx = PuiseuxContext(FiniteField(2, 1, 1), 1, 20)
    a = ctx.from_codes(0, [1, 1, 0, 1], prec=10)
    b = ctx.from_codes(0, [1, 1, 0, 1], prec=6)
    d = a - b
    assert d.is_zero() and d.prec == 6


# -- properties ---------------------------------------------------------------

field_params = st.sampled_from([(2, 1, 2), (3, 1, 2), (2, 2, 1), (5, 1, 1)])


@given(field_params, st.data())
def test_field_axioms(params, data):
    F = FiniteField(*params)
    a, b, c = (F.elem(data.draw(st.integers(0, F.order - 1))) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if not a.is_zero():
        assert (a * a.inverse()).code == 1
    assert frobenius_power(a * b, 1) == frobenius_power(a, 1) * frobenius_power(b, 1)
    assert frobenius_power(a, F.degree // F.s) == a


def rational(ring, data):
    F = ring.field
    num = data.draw(st.lists(st.integers(0, F.order - 1), max_size=3))
    den = data.draw(st.lists(st.integers(0, F.order - 1), min_size=1, max_size=2))
    if not any(den):
        den = [1]
    return ring.make(tuple(num), tuple(den))


@settings(max_examples=60)
@given(field_params, st.data())
def test_rational_scalar_axioms(params, data):
    ring = RationalField(FiniteField(*params))
    a, b, c = rational(ring, data), rational(ring, data), rational(ring, data)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if not a.is_zero():
        assert (a * a.inverse()).is_one()
    assert (a + b).frobenius(1) == a.frobenius(1) + b.frobenius(1)
    assert (a * b).frobenius(1) == a.frobenius(1) * b.frobenius(1)


@settings(max_examples=40)
@given(st.sampled_from([(2, 1, 1), (3, 1, 2)]), st.data())
def test_iota_embed_is_multiplicative(params, data):
    ring = RationalField(FiniteField(*params))
    a, b = rational(ring, data), rational(ring, data)
    N = 16
    lhs = iota_embed(a * b, 1, N)
    rhs = iota_embed(a, 1, N) * iota_embed(b, 1, N)
    assert lhs.agrees_with(rhs)
    assert iota_embed(a + b, 1, N).agrees_with(iota_embed(a, 1, N) + iota_embed(b, 1, N))


@settings(max_examples=40)
@given(st.data())
def test_valuation_is_ultrametric(data):
    ctx = PuiseuxContext(FiniteField(3, 1, 1), 2, 24)
    def draw():
        start = data.draw(st.integers(-6, 6))
        codes = data.draw(st.lists(st.integers(0, 2), min_size=1, max_size=6))
        return ctx.from_codes(start, codes)
    x, y = draw(), draw()
    s = x + y
    if x.is_zero() or y.is_zero() or s.is_zero():
        return
    assert s.valuation() >= min(x.valuation(), y.valuation())
    if x.valuation() != y.valuation():
        assert s.valuation() == min(x.valuation(), y.valuation())


@settings(max_examples=30)
@given(st.data())
def test_puiseux_frobenius_is_a_ring_map(data):
    ctx = PuiseuxContext(FiniteField(2, 1, 2), 1, 40)
    def draw():
        return ctx.from_codes(data.draw(st.integers(-3, 3)), data.draw(st.lists(st.integers(0, 3), min_size=1, max_size=5)))
    x, y = draw(), draw()
    assert (x * y).frobenius(1).agrees_with(x.frobenius(1) * y.frobenius(1))
    assert (x + y).frobenius(1).agrees_with(x.frobenius(1) + y.frobenius(1))


@settings(max_examples=30)
@given(st.integers(1, 4), st.sampled_from([2, 4]), st.data())
def test_binomial_root_power(k_index, e, data):
    F = FiniteField(3, 1, 4)
    ctx = PuiseuxContext(F, e, 120)
    k = [2, 4, 5, 8][k_index - 1]
    start = data.draw(st.integers(-2, 2))
    rest = data.draw(st.lists(st.integers(0, F.order - 1), max_size=4))
    lead = F.pow(data.draw(st.integers(1, F.order - 1)), k)
    x = ctx.from_codes(start * k * e, [lead] + rest)
    y = binomial_root(x, k)
    assert (y ** k).agrees_with(x)
