"""Acceptance gate: eleven criteria, each timed against its budget.

Every criterion prints one line ``criterion N: PASS|FAIL (t s / budget s) title``.
Run with ``pytest tests/test_acceptance.py`` or directly as a script.
"""

import random
import sys
import time
from pathlib import Path

import pytest

from oracles import det_law_by_evaluation, determinantal_exponents, tpoly_det_leibniz, valuation_at
from tmotive.analytic import (
    carlitz_squared,
    family_r2n_motive,
    reduction_kernel_check,
    tensor_kernel_check,
    carlitz_motive,
    verify_duality_analytic,
    xi_residual,
    xi_series,
)
from tmotive.cm import CONSTANT_FIELD, KUMMER, CMDescriptor, all_types, cm_dual_identity
from tmotive.dualize import (
    CERTIFIED_NOT_ABELIAN,
    abelian_diagnostic,
    check_duality_identity,
    dualize_mu,
    standard1_dual,
    standard3_dual_from_generators,
    verify_standard1_dual,
)
from tmotive.lattice import block_action_verify, cm_siegel_from_type, equiv_search_constant_entries
from tmotive.purity import NOT_PURE, newton_polygon_infty, purity_necessary
from tmotive.samples import random_generic_tau, random_scalar, random_standard1, random_standard1_case, ring_for
from tmotive.scalars import FiniteField, PuiseuxContext, RationalField
from tmotive.shell import elaborate, parse_motive_document, polarization_cells
from tmotive.skewcore import (
    TauPresentation,
    TPoly,
    TPresentation,
    adjugate_tpoly,
    char_poly,
    invariant_factors_at_T_theta,
    kron,
    mat_equal,
    t_basis_from_tau,
    tensor_presentations,
)

DATA = Path(__file__).parent / "data"
RESULTS: dict = {}


@pytest.fixture
def announce(capsys):
    def emit(line: str) -> None:
        with capsys.disabled():
            print(line)

    return emit


def run_criterion(number: int, title: str, budget: float, body, emit=print) -> None:
    start = time.perf_counter()
    failure = None
    try:
        body()
    except AssertionError as exc:
        failure = exc
    elapsed = time.perf_counter() - start
    ok = failure is None and elapsed < budget
    RESULTS[number] = ok
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f} s / {budget:g} s) {title}"
    emit(line)
    if failure is not None:
        raise failure
    assert elapsed < budget, f"{title}: {elapsed:.2f} s over the {budget} s budget"


# -- 1 ----------------------------------------------------------------------------


def fixed_line_sample_checks():
    P = elaborate(parse_motive_document((DATA / "fixed_line_sample.json").read_text())).presentation
    R = P.ring
    th = R.theta()
    z, one = TPoly((), R.zero()), TPoly((R.one(),), R.zero())
    t_minus = TPoly.linear(th)
    a111, a121 = th * th + R.one(), th + R.from_int(2)
    expected_q = [
        [z, one, z],
        [t_minus, TPoly((-a111,), R.zero()), z],
        [z, TPoly((-a121,), R.zero()), t_minus],
    ]
    assert mat_equal(P.Q, expected_q)
    D = dualize_mu(P, 1)
    expected_dual = [
        [TPoly((a111,), R.zero()), t_minus, TPoly((a121,), R.zero())],
        [one, z, z],
        [z, z, one],
    ]
    assert mat_equal(D.dual.Q, expected_dual)
    diag = abelian_diagnostic(D.dual)
    assert diag.verdict == CERTIFIED_NOT_ABELIAN
    assert diag.findings[0].kind == "tau-fixed-line"


def test_criterion_1_fixed_line_sample(announce):
    run_criterion(1, "golden Q and Q' of the rank-3 sample, tau-fixed-line obstruction", 1, fixed_line_sample_checks, announce)


# -- 2 ----------------------------------------------------------------------------


def standard1_suite():
    rng = random.Random(7)
    failures = []
    for t in range(100):
        M = random_standard1_case(rng, qs=(2, 3, 4), max_n=3, k_range=(3, 5))
        assert M.n <= 3
        S = standard1_dual(M)
        if not verify_standard1_dual(S):
            failures.append(t)
    assert not failures, failures


def test_criterion_2_standard1_duals(announce):
    run_criterion(2, "100 seeded standard-1 motives satisfy Q' = (T - theta) Q^(t-1)", 30, standard1_suite, announce)


# -- 3 ----------------------------------------------------------------------------


def standard3_closed_form():
    for q, seed in ((3, 5), (2, 11), (5, 3)):
        R = RationalField(FiniteField(q, 1, 2))
        rng = random.Random(seed)
        z, o = R.zero(), R.one()
        a = {name: random_scalar(R, rng, fraction_rate=0.0) for name in ("111", "112", "121", "122", "211", "212", "221")}
        A1 = [[a["111"], a["112"]], [a["121"], a["122"]]]
        A2 = [[a["211"], a["212"]], [a["221"], o]]
        A3 = [[o, z], [z, z]]
        M = TauPresentation(2, [A1, A2, A3], R)
        B = standard3_dual_from_generators(M, [0, 1], [3, 2], [0, 1], [(0, 2), (1, 1), (0, 1)], [2, 2, 1])
        assert B is not None

        def det2(u, v):
            return u[0] * v[1] - u[1] * v[0]

        det_a2 = A2[0][0] * A2[1][1] - A2[0][1] * A2[1][0]
        B1 = [
            [-det_a2, -a["221"], o],
            [-det2([a["112"], a["122"]], [a["212"], o]), -a["122"], z],
            [-det2([a["111"], a["121"]], [a["212"], o]), -a["121"], z],
        ]
        B2 = [[z, z, z], [-a["212"].frobenius(1), o, z], [o, z, z]]
        assert len(B.A) == 2
        assert all(x == y for r1, r2 in zip(B.A[0], B1) for x, y in zip(r1, r2))
        assert all(x == y for r1, r2 in zip(B.A[1], B2) for x, y in zip(r1, r2))


def test_criterion_3_standard3_dual(announce):
    run_criterion(3, "standard-3 dual B1, B2 equal the closed form", 1, standard3_closed_form, announce)


# -- 4 ----------------------------------------------------------------------------


def cm_sweep():
    bad = []
    for r in range(2, 7):
        for p in (2, 3, 5):
            for fam in (CONSTANT_FIELD, KUMMER):
                if fam == KUMMER and r % p == 0:
                    continue
                if fam == CONSTANT_FIELD and p == 5:
                    continue
                for phi in all_types(r):
                    rep = cm_dual_identity(CMDescriptor(fam, r, phi, p))
                    if not rep.passed:
                        bad.append((fam, r, p, phi))
    assert not bad, bad[:5]


def test_criterion_4_cm_duals(announce):
    run_criterion(4, "CM dual identities for both families, all types, r <= 6", 20, cm_sweep, announce)


# -- 5 ----------------------------------------------------------------------------


def lattice_equivalence():
    F = FiniteField(2, 1, 4)
    Z1 = cm_siegel_from_type(F, 2, [0, 1])
    Z2 = cm_siegel_from_type(F, 2, [0, 2])
    assert equiv_search_constant_entries(Z1, Z2, F) is None
    g = equiv_search_constant_entries(Z1, Z1, F)
    assert g is not None and block_action_verify(g, Z1, Z1).holds


def test_criterion_5_lattice_equivalence(announce):
    run_criterion(5, "CM lattices (Id,Fr) and (Id,Fr^2) at q=2, r=4 are not equivalent", 10, lattice_equivalence, announce)


# -- 6 ----------------------------------------------------------------------------


def polarization_law():
    cells = polarization_cells((2, 3, 4, 5, 9, 13), (1, 2, 3))
    assert len(cells) == 18
    for f in cells:
        expect_nonsquare = f.q % 4 == 1 and f.n % 2 == 1
        assert f.is_square == (not expect_nonsquare), (f.q, f.n)


def test_criterion_6_polarization(announce):
    run_criterion(6, "polarization square class in all 18 cells", 5, polarization_law, announce)


# -- 7 ----------------------------------------------------------------------------


def xi_properties():
    for p in (2, 3):
        F = FiniteField(p, 1, 2 if p == 2 else 4)
        e = p - 1
        ctx = PuiseuxContext(F, e, 300)
        xi = xi_series(12, ctx)
        a0 = xi.a0
        assert (a0 ** (F.q - 1) * ctx.theta() + ctx.one()).is_zero()
        assert all(r.is_zero() for r in xi_residual(xi))
        assert all(c.start > a0.start for c in xi.coeffs[1:13])


def test_criterion_7_xi(announce):
    run_criterion(7, "Xi normalisation, functional equation, dominant constant term", 5, xi_properties, announce)


# -- 8 ----------------------------------------------------------------------------


def analytic_duality():
    for p in (2, 3):
        ring = RationalField(FiniteField(p, 1, 2 if p == 2 else 4))
        th = ring.theta()
        small = [ring.one(), ring.one() / th, ring.const(ring.field.gen_code) / (th * th)]
        motives = [carlitz_squared(ring), carlitz_squared(ring, 2)] + [family_r2n_motive([a], ring) for a in small]
        for m in motives:
            rep = verify_duality_analytic(m, 16, 300)
            assert rep.passed, (p, m.name, {k: v for k, v in rep.checks.items() if not v})
            for name in ("psi^(1) = Q psi", "psi'^(1) = Q' psi'", "k(M) = -1", "k(M') = -1", "A'_{-1} A_{-1}^t = 0", "Z' = -Z^t"):
                assert rep.checks[name], name


def test_criterion_8_analytic_duality(announce):
    run_criterion(8, "dual lattice is the dual of the lattice at T-precision 16", 120, analytic_duality, announce)


# -- 9 ----------------------------------------------------------------------------


def tensor_kernel():
    for p in (2, 3):
        ring = RationalField(FiniteField(p, 1, 2 if p == 2 else 4))
        for second in (carlitz_squared(ring), carlitz_motive(ring)):
            rep = tensor_kernel_check(carlitz_squared(ring), second, 12, 240)
            assert rep.checks and all(rep.checks.values()), rep.checks


def test_criterion_9_tensor_kernel(announce):
    run_criterion(9, "tensor kernel relations for C2 x C2 and C2 x Carlitz", 60, tensor_kernel, announce)


# -- 10 ---------------------------------------------------------------------------


def random_presentation(rng):
    R = ring_for(rng.choice([2, 3, 4]))
    return t_basis_from_tau(random_generic_tau(R, rng.randint(1, 2), rng.randint(1, 2), rng))


def det_law_holds(P):
    if P.r > 5:
        return det_law_by_evaluation(P.Q, P.ring.theta(), P.n)
    det = tpoly_det_leibniz(P.Q, TPoly((), P.ring.zero()))
    return det.deg == P.n and valuation_at(det, P.ring.theta()) == P.n


def structural_suite():
    rng = random.Random(2024)
    for _ in range(200):
        P = random_presentation(rng)
        mu = max(invariant_factors_at_T_theta(P).max, 1)
        D = dualize_mu(P, mu)
        assert check_duality_identity(P, D.dual, mu)
        assert mat_equal(dualize_mu(D.dual, mu).dual.Q, P.Q)
        assert det_law_holds(P) and det_law_holds(D.dual)
    for _ in range(60):
        P = random_presentation(rng)
        R = P.ring
        f = invariant_factors_at_T_theta(P)
        zero_poly = TPoly((), R.zero())
        assert sum(f.m) == P.n
        assert list(f.m) == determinantal_exponents(P.Q, R.theta(), zero_poly)
        adj, _ = adjugate_tpoly(P.Q)
        min_val = min(valuation_at(a, R.theta()) for row in adj for a in row if not a.is_zero())
        assert f.max == P.n - min_val
    for _ in range(20):
        R = ring_for(rng.choice([2, 3]))
        P1 = t_basis_from_tau(random_generic_tau(R, 1, rng.randint(1, 2), rng))
        P2 = t_basis_from_tau(random_generic_tau(R, rng.randint(1, 2), 1, rng))
        mu1 = max(invariant_factors_at_T_theta(P1).max, 1)
        mu2 = max(invariant_factors_at_T_theta(P2).max, 1)
        T = TPresentation(tensor_presentations(P1, P2).Q, R)
        assert det_law_holds(T)
        lhs = dualize_mu(T, mu1 + mu2).dual.Q
        assert mat_equal(lhs, kron(dualize_mu(P1, mu1).dual.Q, dualize_mu(P2, mu2).dual.Q))
    for _ in range(40):
        R = ring_for(rng.choice([2, 3, 4]))
        k = sorted((rng.randint(1, 5) for _ in range(rng.randint(2, 3))), reverse=True)
        P = t_basis_from_tau(random_standard1(R, k, rng), "standard1", k=k)
        assert det_law_holds(P)
        poly = newton_polygon_infty(char_poly(P), check_integral=False)
        x, y = 0, -len(k)
        assert poly.height_at(0) == y
        for lam in k:
            x, y = x + lam, y + 1
            assert poly.height_at(x) == y
        if len(set(k)) >= 2:
            assert purity_necessary(P, check_integral=False) == NOT_PURE


def test_criterion_10_structural_suite(announce):
    run_criterion(10, "involution, det law, invariant factors, Kronecker duals, Newton polygons", 60, structural_suite, announce)


# -- 11 ---------------------------------------------------------------------------


def reduction():
    for p, s in ((2, 1), (3, 1), (2, 2), (5, 1)):
        q = p ** s
        F = FiniteField(p, s, max(q - 1, 1))
        for a1 in F.base_field_codes():
            if a1 == 0:
                continue
            rep = reduction_kernel_check(a1, F)
            assert rep.passed, (q, a1, rep.checks)
            assert rep.details["kernel_size"] == q


def test_criterion_11_reduction(announce):
    run_criterion(11, "ordinary rank-2 reduction at theta: q kernel points, pairing vanishes", 30, reduction, announce)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
