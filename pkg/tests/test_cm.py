import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tpoly_det_leibniz, valuation_at
from tmotive.cm import (
    CONSTANT_FIELD,
    KUMMER,
    CMDescriptor,
    CMMultiplicities,
    all_types,
    cm_dual_identity,
    cm_motive_constant_field,
    cm_motive_kummer,
    complement_type,
    kummer_q_by_expansion,
    kummer_ring,
    marker_positions,
    sigma_identity,
)
from tmotive.scalars import ExtensionRequired
from tmotive.skewcore import TPoly, mat_equal


def entry(R, *coeffs):
    return TPoly(list(coeffs), R.zero())


def test_kummer_rank2_in_characteristic_3():
    d = CMDescriptor(KUMMER, 2, (0,), p=3)
    R, zeta = kummer_ring(d)
    assert R.ram == 2 and zeta == 2
    s = R.root_var()
    two_s = s * R.from_int(2)
    # (S - s) and S (S - s) = T - s S
    expected = [[entry(R, two_s), entry(R, R.one())], [entry(R, R.zero(), R.one()), entry(R, two_s)]]
    assert mat_equal(cm_motive_kummer(d).presentation.Q, expected)


def test_kummer_rank3_over_f4():
    d = CMDescriptor(KUMMER, 3, (0, 1), p=2, s=2)
    R, zeta = kummer_ring(d)
    g = R.const(R.field.gen_code)
    assert zeta == R.field.gen_code
    s = R.root_var()
    a, b = g * s * s, (R.one() + g) * s
    z = R.zero()
    # (S - s)(S - g s) = S^2 + (1 + g) s S + g s^2 in characteristic 2
    expected = [
        [entry(R, a), entry(R, b), entry(R, R.one())],
        [entry(R, z, R.one()), entry(R, a), entry(R, b)],
        [entry(R, z, b), entry(R, z, R.one()), entry(R, a)],
    ]
    mot = cm_motive_kummer(d)
    assert mat_equal(mot.presentation.Q, expected)
    assert mot.agrees


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
def test_constant_field_duals(p, r):
    for phi in all_types(r):
        rep = cm_dual_identity(CMDescriptor(CONSTANT_FIELD, r, phi, p))
        assert rep.passed, (phi, rep.checks)


@pytest.mark.parametrize("p,r", [(p, r) for p in (2, 3, 5) for r in range(2, 7) if r % p])
def test_kummer_duals(p, r):
    for phi in all_types(r):
        rep = cm_dual_identity(CMDescriptor(KUMMER, r, phi, p))
        assert rep.passed, (phi, rep.checks)


def test_unsigned_row_rule_fails_in_odd_characteristic():
    d = CMDescriptor(KUMMER, 5, (0,), p=3)
    assert not cm_dual_identity(d, literal_rule=True).passed
    assert cm_dual_identity(CMDescriptor(KUMMER, 3, (0,), p=2), literal_rule=True).passed


@settings(max_examples=20)
@given(st.integers(2, 5), st.data())
def test_kummer_det_law(r, data):
    p = data.draw(st.sampled_from([q for q in (2, 3, 5) if r % q]))
    n = data.draw(st.integers(1, r - 1))
    phi = tuple(sorted(data.draw(st.sets(st.integers(0, r - 1), min_size=n, max_size=n))))
    d = CMDescriptor(KUMMER, r, phi, p)
    R, zeta = kummer_ring(d)
    Q = kummer_q_by_expansion(d, R, zeta)
    det = tpoly_det_leibniz(Q, TPoly((), R.zero()))
    assert det.deg == n and valuation_at(det, R.theta()) == n
    assert sigma_identity(d)


def test_constant_field_markers():
    d = CMDescriptor(CONSTANT_FIELD, 5, (1, 2, 4), p=2)
    mot = cm_motive_constant_field(d)
    assert mot.agrees
    assert marker_positions(mot.presentation) == (1, 2, 4)
    assert mot.presentation.n == 3


def test_descriptor_validation():
    with pytest.raises(ValueError):
        CMDescriptor(CONSTANT_FIELD, 3, (2, 0))
    with pytest.raises(ValueError):
        CMDescriptor(KUMMER, 4, (0,), p=2)
    with pytest.raises(ValueError):
        CMDescriptor("other", 3, (0,))
    with pytest.raises(ExtensionRequired):
        kummer_ring(CMDescriptor(KUMMER, 5, (0,), p=2), M=1)


def test_complement_types():
    assert complement_type((0, 2), 4) == (1, 3)
    m = CMMultiplicities((0, 1, 2), m=1, qq=2, n=6, r=12)
    c = complement_type(m)
    assert c.mult == (2, 1, 0) and c.n == 6
    with pytest.raises(ValueError):
        CMMultiplicities((3,), m=1, qq=2, n=6, r=4)
