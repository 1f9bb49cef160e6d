import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lower_hull_bruteforce
from tmotive.purity import (
    NOT_PURE,
    POSSIBLY_PURE,
    NonIntegralCoefficient,
    lower_hull,
    newton_polygon_infty,
    polygon_equal,
    purity_necessary,
    slope_summary,
    standard_family_slopes,
)
from tmotive.samples import random_standard1, ring_for
from tmotive.scalars import FiniteField, RationalField
from tmotive.shell import elaborate, parse_motive_document
from tmotive.skewcore import TPoly, carlitz, char_poly, t_basis_from_tau

DATA = Path(__file__).parent / "data"


def t_power(R, e, c=1):
    return TPoly([R.zero()] * e + [R.from_int(c)], R.zero())


def test_product_of_two_binomials():
    R = RationalField(FiniteField(3, 1, 1))
    zero = TPoly((), R.zero())
    # (X^3 - T)(X^2 - T) = X^5 - T X^3 - T X^2 + T^2
    coeffs = [t_power(R, 2), zero, t_power(R, 1, -1), t_power(R, 1, -1), zero, t_power(R, 0)]
    poly = newton_polygon_infty(coeffs)
    assert poly.vertices == ((0, -2), (3, -1), (5, 0))
    assert poly.slopes() == [(Fraction(-1, 2), 2), (Fraction(-1, 3), 3)]
    assert slope_summary(poly) == [("-1/2", 2), ("-1/3", 3)]
    assert poly.below_segment_points() == [3]


def test_carlitz_is_possibly_pure():
    R = RationalField(FiniteField(2, 1, 1))
    assert purity_necessary(carlitz(R)) == POSSIBLY_PURE


def test_fixed_line_sample_is_not_pure():
    P = elaborate(parse_motive_document((DATA / "fixed_line_sample.json").read_text())).presentation
    assert purity_necessary(P) == NOT_PURE


def test_non_integral_leading_coefficient_flagged():
    R = RationalField(FiniteField(3, 1, 1))
    c = TPoly((R.one() / R.theta(),), R.zero())
    with pytest.raises(NonIntegralCoefficient):
        newton_polygon_infty([c, t_power(R, 0)])
    assert newton_polygon_infty([c, t_power(R, 0)], check_integral=False).vertices == ((0, 0), (1, 0))


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(-8, 8)), min_size=1, max_size=10, unique_by=lambda t: t[0]))
def test_lower_hull_against_bruteforce(points):
    pts = [(x, Fraction(y)) for x, y in points]
    assert list(lower_hull(pts).vertices) == lower_hull_bruteforce(pts)


def product_formula_vertices(k):
    """Vertices (x, height) of the chain of edges with gradient 1/lambda over length lambda, from (0, -n)."""
    x, y = 0, Fraction(-len(k))
    out = [(x, y)]
    for lam in sorted(k, reverse=True):
        x, y = x + lam, y + 1
        out.append((x, y))
    return out


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_standard1_polygon_matches_product_formula(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 4]), rng.choice([1, 2]))
    k = sorted((rng.randint(1, 5) for _ in range(rng.randint(1, 3))), reverse=True)
    M = random_standard1(R, k, rng)
    P = t_basis_from_tau(M, "standard1", k=k)
    poly = newton_polygon_infty(char_poly(P), check_integral=False)
    predicted = standard_family_slopes(list(range(len(k))), k)
    assert predicted.status == "product-formula"
    assert polygon_equal(poly, predicted.polygon)
    for x, y in product_formula_vertices(k):
        assert poly.height_at(x) == y


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_distinct_row_lengths_are_not_pure(seed):
    rng = random.Random(seed)
    R = ring_for(rng.choice([2, 3, 4]))
    k = sorted((rng.randint(1, 5) for _ in range(rng.randint(1, 3))), reverse=True)
    P = t_basis_from_tau(random_standard1(R, k, rng), "standard1", k=k)
    verdict = purity_necessary(P, check_integral=False)
    if len(set(k)) >= 2:
        assert verdict == NOT_PURE
    else:
        assert verdict == POSSIBLY_PURE


def test_standard2_cycle_table():
    fam = standard_family_slopes([1, 0, 2], [3, 3, 2])
    assert fam.status == "conjectural"
    assert [c.indices for c in fam.cycles] == [(0, 1), (2,)]
    assert [c.ratio for c in fam.cycles] == [Fraction(1, 3), Fraction(1, 2)]
    assert not fam.expected_pure
    assert standard_family_slopes([1, 0], [2, 2]).expected_pure
