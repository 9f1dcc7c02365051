import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sos_ggm.models.boundary_law import (
    EQUAL,
    UNEQUAL,
    BoundaryLawPair,
    ModelParams,
    build_g,
    build_P,
    build_Q,
    build_reduced,
    build_U,
    count_solutions,
    critical_values,
    f_map,
    fixed_point_map,
    psi,
    shared_root_check,
    solve_generic,
    solve_k2,
    solve_k3,
    solve_zero_field,
    system_jacobian,
    system_residuals,
)
from sos_ggm.models.polyroots import RealPolynomial, divide_exact, isolate_positive_roots, solve_quartic_ferrari

K2_COUNTS = [
    (2.5, 1), (3, 1), (3.99, 1), (4, 1), (4.5, 2), (5, 2),
    (6, 2), (6.2, 4), (6.4, 4), (6.5, 5), (7, 5), (10, 5),
]

K3_COUNTS = [
    (2.2, 1), (2.5, 1), (2.8, 1), (2.99, 1), (2.995, 3), (2.998, 3), (3, 2),
    (3.2, 2), (3.5, 2), (3.9, 2), (4, 2), (4.05, 4), (4.1, 4), (4.2, 4),
    (3 * math.sqrt(2), 4), (4.3, 5), (4.5, 5), (5, 5), (6, 5), (8, 5),
]


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1, 5)
    with pytest.raises(ValueError):
        ModelParams(2, 2)
    with pytest.raises(ValueError):
        ModelParams(2.0, 5)
    with pytest.raises(ValueError):
        ModelParams.from_theta(2, 1.5)
    with pytest.raises(ValueError):
        ModelParams.from_beta_j(2, 0)


def test_model_params_theta():
    params = ModelParams(2, 5)
    assert 0 < params.theta < 1
    assert abs(params.theta + 1 / params.theta - 5) < 1e-12
    assert params.exact

    from_theta = ModelParams.from_theta(3, 0.5)
    assert from_theta.tau == pytest.approx(2.5)
    assert from_theta.theta == pytest.approx(0.5)
    assert ModelParams.from_beta_j(2, math.log(2)).tau == pytest.approx(2.5)
    assert ModelParams(2, 5.5).as_exact().tau == Fraction(11, 2)


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_critical_tau_c(k):
    values = critical_values(k)
    assert values.tau_c == Fraction(2 * (k + 1), k - 1)
    assert values.tau_1 == Fraction(2 * k, k - 1)
    grid = np.linspace(0.5, 1.5, 100001)
    params = ModelParams(k, 10)
    assert min(psi(params, a) for a in grid[::1000]) >= float(values.tau_c) - 1e-12
    assert psi(params, 1.0) == pytest.approx(float(values.tau_c), abs=1e-12)


def test_critical_tau_2():
    assert critical_values(2).tau_2 == pytest.approx(2 + 2 * math.sqrt(5), abs=1e-12)
    assert critical_values(3).tau_2 == pytest.approx(3 * math.sqrt(2), abs=1e-12)
    assert abs(critical_values(4).tau_2 - 3.497) < 5e-4


def test_k3_breakpoints():
    values = critical_values(3)
    tau_star, three, four, root_18 = values.k3_breakpoints
    assert (three, four) == (3.0, 4.0)
    assert root_18 == pytest.approx(3 * math.sqrt(2))
    assert tau_star == pytest.approx(2.994283, abs=1e-6)
    # the sum quartic gets its positive roots exactly at tau_star
    assert solve_quartic_ferrari(tau_star - 1e-6).roots == ()
    assert len(solve_quartic_ferrari(tau_star + 1e-6).roots) == 2
    assert critical_values(2).k3_breakpoints == ()


def test_critical_values_rejects_small_k():
    with pytest.raises(ValueError):
        critical_values(1)


def test_build_q_and_reduced():
    params = ModelParams(3, 5)
    q = build_Q(params)
    assert q.coeffs == (-2, 5, 0, -5, 2)
    quotient, remainder = divide_exact(q, RealPolynomial.from_coeffs([-1, 1]))
    assert remainder.is_zero
    assert quotient == build_reduced(params)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("tau", [Fraction(5, 2), Fraction(7), Fraction(113, 10)])
def test_p_factors_through_q(k, tau):
    params = ModelParams(k, tau)
    quotient, remainder = divide_exact(build_P(params), build_Q(params))
    assert remainder.is_zero
    assert quotient == -build_U(params)
    assert build_U(params).degree <= k * k


def test_u_is_g_for_k3():
    tau = Fraction(7, 2)
    assert build_U(ModelParams(3, tau)) == build_g(tau)
    assert build_U(ModelParams(3, tau)).degree == 8


def test_six_fixed_points_at_tau_6():
    roots = isolate_positive_roots(build_U(ModelParams(3, 6)))
    assert roots.count == 6
    for a in roots.values:
        assert abs(fixed_point_map(a, 6) - a) < 1e-9


def test_f_map_and_psi_reject_nonpositive():
    with pytest.raises(ValueError):
        f_map(ModelParams(2, 5), 0)
    with pytest.raises(ValueError):
        psi(ModelParams(2, 5), -1)


@pytest.mark.parametrize("tau, expected", K2_COUNTS)
def test_k2_counts(tau, expected):
    assert count_solutions(ModelParams(2, tau)) == expected


@pytest.mark.parametrize("tau, expected", K3_COUNTS)
def test_k3_counts(tau, expected):
    assert count_solutions(ModelParams(3, tau)) == expected


@pytest.mark.parametrize("k, tau", [(2, 7), (3, 5), (4, 4.5), (5, 6)])
def test_solutions_are_verified(k, tau):
    solutions = solve_zero_field(ModelParams(k, tau))
    assert any(p.kind == EQUAL and p.a == 1.0 for p in solutions)
    for pair in solutions:
        assert pair.a > 0 and pair.b > 0
        assert pair.max_residual < 1e-10
        if pair.kind == UNEQUAL:
            assert pair.a < pair.b
            swapped = pair.swapped()
            assert max(abs(r) for r in system_residuals(k, tau, swapped.a, swapped.b)) < 1e-10


def test_k2_closed_form_matches_generic():
    for tau in (4.5, 6.2, 7.0, 11.0):
        generic = [p for p in solve_generic(ModelParams(2, tau)) if p.kind == UNEQUAL]
        closed = solve_k2(tau)
        assert len(generic) == len(closed)
        assert_allclose([(p.a, p.b) for p in generic], [(p.a, p.b) for p in closed], atol=1e-9)


def test_k3_closed_form_matches_generic():
    rng = np.random.default_rng(7)
    for tau in rng.uniform(2.1, 12.0, 15):
        generic = [p for p in solve_generic(ModelParams(3, float(tau))) if p.kind == UNEQUAL]
        closed = solve_k3(float(tau))
        assert len(generic) == len(closed)
        for g, c in zip(generic, closed):
            assert abs(g.a - c.a) < 1e-9 and abs(g.b - c.b) < 1e-9


def test_k3_non_unit_equal_roots_multiply_to_one():
    for tau in (4.5, 6, 9.25):
        values = [r.value for r in isolate_positive_roots(build_Q(ModelParams(3, tau)))]
        others = [v for v in values if abs(v - 1) > 1e-9]
        assert len(others) == 2
        assert others[0] * others[1] == pytest.approx(1, abs=1e-10)


def test_shared_root_check():
    tau = 2 + 2 * math.sqrt(5)
    assert shared_root_check(ModelParams(2, tau)) == pytest.approx(4 / tau)
    assert shared_root_check(ModelParams(3, 3 * math.sqrt(2))) == pytest.approx(1 / math.sqrt(2))
    assert shared_root_check(ModelParams(2, 5)) is None


def test_boundary_law_pair_validation():
    params = ModelParams(2, 5)
    with pytest.raises(ValueError):
        BoundaryLawPair.build(params, -1.0, 2.0)
    pair = BoundaryLawPair.build(params, 1, 1)
    assert pair.kind == EQUAL
    assert pair.total == 2


def test_solve_zero_field_methods():
    params = ModelParams(3, 5)
    auto = solve_zero_field(params)
    generic = solve_zero_field(params, method="generic")
    assert len(auto) == len(generic) == 5
    with pytest.raises(ValueError):
        solve_zero_field(params, method="newton")
    with pytest.raises(ValueError):
        solve_zero_field(ModelParams(4, 5), method="closed")


@pytest.mark.parametrize("k, h1, h2", [(2, 1.0, 1.0), (3, 1.3, 0.8)])
def test_system_jacobian_matches_differences(k, h1, h2):
    tau, a, b, step = 5.0, 0.7, 1.9, 1e-6
    jac = system_jacobian(k, tau, a, b, h1, h2)
    plus_a = np.array(system_residuals(k, tau, a + step, b, h1, h2))
    minus_a = np.array(system_residuals(k, tau, a - step, b, h1, h2))
    plus_b = np.array(system_residuals(k, tau, a, b + step, h1, h2))
    minus_b = np.array(system_residuals(k, tau, a, b - step, h1, h2))
    assert_allclose(jac[:, 0], (plus_a - minus_a) / (2 * step), rtol=1e-6)
    assert_allclose(jac[:, 1], (plus_b - minus_b) / (2 * step), rtol=1e-6)
