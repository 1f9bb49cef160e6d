from fractions import Fraction

import pytest

from tmotive.analytic import (
    AdditivePoly,
    PrecisionExhausted,
    ThresholdViolated,
    UnsupportedFamily,
    additive_kernel,
    additive_roots,
    analytic_context,
    carlitz_motive,
    carlitz_squared,
    carlitz_squared_dual_table,
    default_omega,
    drinfeld_motive,
    embed,
    family_r2n_motive,
    kernel_span,
    perturbed_siegel,
    polarization_form,
    reduction_degree,
    reduction_kernel_check,
    solve_additive,
    tensor_kernel_check,
    tensor_motive,
    verify_duality_analytic,
    xi_series,
    xi_residual,
)
from tmotive.scalars import ExtensionRequired, FiniteField, PuiseuxContext, RationalField


def analytic_field(p):
    return FiniteField(p, 1, 2 if p == 2 else 4)


# -- Xi -------------------------------------------------------------------------


@pytest.mark.parametrize("p", [2, 3])
def test_xi_properties(p):
    F = analytic_field(p)
    ctx = PuiseuxContext(F, p - 1, 300)
    xi = xi_series(12, ctx)
    a0 = xi.a0
    assert (a0 ** (p - 1) * ctx.theta() + ctx.one()).is_zero()
    assert all(r.is_zero() for r in xi_residual(xi))
    assert all(xi.coeffs[i].start > a0.start for i in range(1, 12))


@pytest.mark.parametrize("p", [2, 3])
def test_xi_linear_coefficient_against_power_sum(p):
    F = analytic_field(p)
    e = p - 1
    ctx = PuiseuxContext(F, e, 200)
    xi = xi_series(3, ctx)
    # a_1 = -a_0 sum_i theta^(-q^i), summed term by term below the cap
    acc = ctx.zero()
    i = 0
    while p ** i * e < 200 + e:
        acc = acc + ctx.monomial(1, p ** i * e)
        i += 1
    assert xi.coeffs[1].agrees_with(-(xi.a0 * acc))


# -- additive polynomials ----------------------------------------------------


@pytest.mark.parametrize("p", [2, 3, 5])
def test_carlitz_torsion_kernel(p):
    # x^(q-1) = -theta needs a (q-1)-th root of -1
    F = FiniteField(p, 1, 1 if p == 2 else 2)
    ctx = PuiseuxContext(F, p - 1, 80)
    f = AdditivePoly([ctx.theta(), ctx.one()])
    basis = additive_kernel(f)
    assert len(basis) == 1
    assert basis[0].valuation == Fraction(-1, p - 1)
    span = [x for x in kernel_span(basis, F) if not x.is_zero()]
    assert len(span) == p - 1
    assert all(f(x).is_zero() for x in span)


def test_solve_additive_inverts_the_map():
    F = FiniteField(3, 1, 1)
    ctx = PuiseuxContext(F, 2, 80)
    f = AdditivePoly([ctx.theta(), ctx.one(), ctx.one()])
    target = ctx.from_codes(6, [1, 2, 0, 1])
    x = solve_additive(f, target)
    assert f(x).agrees_with(target)


def test_nearest_to_zero_root_is_deterministic():
    F = FiniteField(3, 1, 2)
    ctx = PuiseuxContext(F, 2, 60)
    f = AdditivePoly([ctx.theta(), ctx.one()])
    x = additive_roots(f, None, "nearest-to-zero")
    y = additive_roots(f, None, "nearest-to-zero")
    assert x.agrees_with(y) and f(x).is_zero()
    with pytest.raises(ValueError):
        additive_roots(f, None, "largest")


# -- duality at precision ----------------------------------------------------


def motives(ring, p):
    F = ring.field
    th = ring.theta()
    neg = ring.const(F.from_int(p - 1)) if p > 2 else ring.const(F.gen_code)
    return [
        carlitz_squared(ring),
        carlitz_squared(ring, 2),
        family_r2n_motive([ring.one()], ring),
        family_r2n_motive([ring.one() / th], ring),
        family_r2n_motive([neg / (th * th)], ring),
    ]


@pytest.mark.parametrize("p", [2, 3])
def test_duality_at_precision(p):
    ring = RationalField(analytic_field(p))
    for m in motives(ring, p):
        rep = verify_duality_analytic(m, 16, 300)
        assert rep.passed, (m.name, rep.checks)
        assert rep.details["margin"] >= 4


def test_rank3_drinfeld_duality():
    ring = RationalField(analytic_field(3))
    m = drinfeld_motive([ring.one() / ring.theta(), ring.one()], ring)
    assert verify_duality_analytic(m, 16, 300).passed


@pytest.mark.parametrize("p", [2, 3])
def test_siegel_matrix_is_stable_under_a_larger_cap(p):
    ring = RationalField(analytic_field(p))
    m = family_r2n_motive([ring.one()], ring)
    z300 = verify_duality_analytic(m, 16, 300).details["Z"][0][0]
    z420 = verify_duality_analytic(m, 16, 420).details["Z"][0][0]
    assert z300.agrees_with(z420)


def test_tiny_cap_reports_exhausted_precision():
    ring = RationalField(analytic_field(3))
    with pytest.raises(PrecisionExhausted):
        verify_duality_analytic(carlitz_squared(ring), 16, 20)


def test_tensor_motive_not_accepted_by_duality_check():
    ring = RationalField(analytic_field(2))
    with pytest.raises(UnsupportedFamily):
        verify_duality_analytic(tensor_motive(carlitz_motive(ring), carlitz_motive(ring)), 8, 100)


@pytest.mark.parametrize("p", [2, 3])
def test_perturbation_matches_scattering(p):
    F = analytic_field(p)
    ring = RationalField(F)
    for a in (ring.zero(), ring.one(), ring.one() / ring.theta()):
        m = family_r2n_motive([a], ring)
        ctx = analytic_context(F, m, 300)
        pd = perturbed_siegel(a, ctx)
        assert all(pd.checks.values()), pd.checks
        if not a.is_zero():
            Z = verify_duality_analytic(m, 16, 300).details["Z"][0][0]
            assert (pd.siegel - Z).is_zero()


def test_perturbation_threshold():
    F = analytic_field(3)
    ring = RationalField(F)
    m = family_r2n_motive([ring.theta()], ring)
    with pytest.raises(ThresholdViolated):
        perturbed_siegel(ring.theta(), analytic_context(F, m, 100))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_carlitz_squared_dual_table(p):
    check = carlitz_squared_dual_table(analytic_field(p), 10, 200)
    assert check.passed
    assert check.gamma != 0


# -- tensor kernel -----------------------------------------------------------


@pytest.mark.parametrize("p", [2, 3])
def test_tensor_kernel(p):
    ring = RationalField(analytic_field(p))
    for second in (carlitz_squared(ring), carlitz_motive(ring)):
        rep = tensor_kernel_check(carlitz_squared(ring), second, 12, 240)
        assert rep.checks and all(rep.checks.values()), rep.checks


# -- polarization ------------------------------------------------------------


@pytest.mark.parametrize("p,s", [(2, 1), (3, 1), (2, 2), (5, 1), (3, 2), (13, 1)])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_polarization_square_class(p, s, n):
    F = FiniteField(p, s, 2)
    c = next(x for x in F.elements() if not F.in_base_field(x))
    form = polarization_form(n, c, F)
    q = p ** s
    assert form.is_square == (not (q % 4 == 1 and n % 2 == 1))


def test_polarization_rejects_base_field_c():
    F = FiniteField(3, 1, 2)
    with pytest.raises(ValueError):
        polarization_form(1, 1, F)


# -- reduction at theta ------------------------------------------------------


@pytest.mark.parametrize("p,s", [(2, 1), (3, 1), (2, 2), (5, 1)])
def test_reduction_kernel(p, s):
    q = p ** s
    F = FiniteField(p, s, max(q - 1, 1))
    for a1 in F.base_field_codes():
        if a1 == 0:
            continue
        rep = reduction_kernel_check(a1, F)
        assert rep.passed, rep.checks
        assert rep.details["kernel_size"] == q


def test_reduction_degree_is_the_norm_condition():
    F = FiniteField(5, 1, 1)
    # -1/a_1 must have norm 1: a_1 = 1 gives -1 (order 2), a_1 = 2 gives 2 (order 4)
    assert reduction_degree(1, F) == 2
    assert reduction_degree(2, F) == 4
    with pytest.raises(ExtensionRequired):
        reduction_kernel_check(2, FiniteField(5, 1, 2))
    with pytest.raises(ValueError):
        reduction_kernel_check(0, FiniteField(3, 1, 2))


def test_embed_keeps_exact_values():
    F = analytic_field(3)
    ring = RationalField(F)
    ctx = PuiseuxContext(F, 2, 40)
    x = embed(ring.theta(), ctx)
    assert x.terms() == [(-2, 1)]
    assert default_omega(F) != 0
