"""
Tests for periodic laws, their series sums and kernels, tree windows and the
gradient measure tables, with the subtree recursion checked against brute
force enumeration.
"""
from dataclasses import dataclass, replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sos_ggm.models.boundary_law import ModelParams, solve_zero_field
from sos_ggm.models.external_field import enumerate_measure_candidates
from sos_ggm.models.ggm_core import (
    CONVERGENT,
    DISTINCT,
    DIVERGENT,
    POSSIBLY_EQUAL,
    PeriodicBoundaryLaw,
    SingularLawError,
    SizeBudgetExceeded,
    TransferOperator,
    boundary_law_from_pair,
    build_window,
    check_consistency,
    compare_tables,
    ggm_classes,
    identifiability_check,
    marginal_table,
    mixed_measure,
    normalisability_verdict,
    pinned_measure,
    series_sums,
    transition_kernel,
)


@dataclass(frozen=True)
class DecayingLaw:
    """Non-periodic law z_i = theta^{i^2}, summable against the kernel"""

    k: int
    theta: float

    def z_at(self, i):
        return self.theta ** (np.asarray(i, dtype=float) ** 2)


def _law(k, tau, index=-1):
    return boundary_law_from_pair(solve_zero_field(ModelParams(k, tau))[index])


def test_transfer_operator():
    op = TransferOperator(0.3)
    zetas = np.arange(-200, 201)
    assert_allclose(op.weight(zetas).sum(), op.total(), rtol=1e-14)
    with pytest.raises(ValueError):
        TransferOperator(1.0)


def test_law_from_pair():
    pair = solve_zero_field(ModelParams(2, 5))[-1]
    law = boundary_law_from_pair(pair)
    assert law.u == (1.0, pair.b, 1.0, pair.a)
    assert law.z == (1.0, pair.b ** 2, 1.0, pair.a ** 2)
    assert_allclose(law.z_at([-1, 0, 1, 5]), [pair.a ** 2, 1.0, pair.b ** 2, pair.b ** 2])
    with pytest.raises(TypeError):
        boundary_law_from_pair((1.0, 1.0))


def test_law_from_field_solution():
    sol = enumerate_measure_candidates(7.0, 1.2)[-1]
    law = boundary_law_from_pair(sol)
    assert law.h == (1.0, 1.2, 1.0, 1.2)
    assert law.z[1] == pytest.approx(1.2 * sol.b ** 2)


def test_free_law_is_consistent():
    law = PeriodicBoundaryLaw.free(3, 2.5)
    assert check_consistency(law) < 1e-13


def test_verified_laws_are_consistent(verified_laws):
    for law in verified_laws:
        assert check_consistency(law) < 1e-9
        assert check_consistency(law.shifted(2)) < 1e-9


def test_perturbed_law_fails_consistency():
    pair = max(solve_zero_field(ModelParams(2, 7)), key=lambda p: p.b)
    law = boundary_law_from_pair(pair)
    assert check_consistency(law) < 1e-9
    bumped = replace(law, u=(1.0, law.u[1] * 1.01, 1.0, law.u[3]))
    assert check_consistency(bumped) > 1e-4


def test_singular_law():
    law = PeriodicBoundaryLaw(2, 5.0, ModelParams(2, 5.0).theta, (1.0, 2.0, 1.0, 3.0))
    with pytest.raises(SingularLawError):
        check_consistency(law)


def test_series_closed_forms(verified_laws):
    for law in verified_laws:
        sums = series_sums(law)
        for i in (-9, -4, -1, 0, 1, 3, 6):
            left, right = sums.truncated(i, 400)
            assert sums.l_at(i) == pytest.approx(left, rel=1e-12)
            assert sums.r_at(i) == pytest.approx(right, rel=1e-12)
            assert sums.full_at(i) == pytest.approx(sums.block_at(i), rel=1e-12)
        assert sums.l[0] == pytest.approx(sums.l_at(0))
        assert sums.r[3] == pytest.approx(sums.r_at(3))


def test_free_law_slope():
    law = PeriodicBoundaryLaw.free(2, 2.5)
    verdict = normalisability_verdict(law, 500)
    assert verdict.verdict == DIVERGENT
    assert verdict.slope == pytest.approx(((1 + 0.5) / (1 - 0.5)) ** 3, rel=1e-9)
    assert len(verdict.partial_sums) == 501


def test_periodic_laws_are_not_normalisable(verified_laws):
    for law in verified_laws:
        verdict = normalisability_verdict(law, 10_000)
        assert verdict.verdict == DIVERGENT
        assert verdict.slope > 0


def test_decaying_law_converges():
    verdict = normalisability_verdict(DecayingLaw(k=2, theta=0.4), 200)
    assert verdict.verdict == CONVERGENT
    with pytest.raises(ValueError):
        normalisability_verdict(DecayingLaw(k=2, theta=0.4), 1)


def test_transition_kernel(verified_laws):
    for law in verified_laws:
        kernel = transition_kernel(law, 25)
        centre = float(kernel.row_mass.loc[0])
        assert 1 - kernel.tail_bound - 1e-12 <= centre <= 1 + 1e-12
        assert (kernel.frame.values >= 0).all()
        total = sum(kernel.probability(3, j) for j in range(-200, 207))
        assert total == pytest.approx(1, abs=1e-12)
        assert kernel.probability(0, 1) == pytest.approx(kernel.frame.loc[0, 1])


@pytest.mark.parametrize("k, R, vertices, edges, boundary", [(2, 1, 4, 3, 3), (3, 1, 5, 4, 4), (2, 2, 10, 9, 6), (3, 2, 17, 16, 12)])
def test_window_shape(k, R, vertices, edges, boundary):
    window = build_window(k, R)
    assert len(window.vertices) == vertices == 1 + (k + 1) * (k ** R - 1) // (k - 1)
    assert window.n_edges == edges
    assert len(window.boundary) == boundary
    assert window.boundary_incidence.shape == (boundary, edges)
    for v in window.interior:
        assert window.neighbour_degree(v) == k + 1


def test_window_paths_and_reroot():
    window = build_window(2, 2)
    assert window.edges[:3] == build_window(2, 1).edges
    y = window.boundary[0]
    assert all(sign == 1 for _, sign in window.path(y))
    moved = window.reroot(1)
    assert moved.boundary == window.boundary
    signs = [sign for _, sign in moved.path(window.boundary[-1])]
    assert signs[0] == -1
    with pytest.raises(ValueError):
        window.reroot(window.boundary[0])
    with pytest.raises(ValueError):
        build_window(1, 2)


def test_budget_guard():
    with pytest.raises(SizeBudgetExceeded):
        build_window(2, 3, M=20)
    law = _law(2, 5)
    with pytest.raises(SizeBudgetExceeded):
        pinned_measure(law, build_window(2, 2), 0, 10, budget=1000)


def test_pinned_and_mixed_tables_are_normalised():
    law = _law(2, 7)
    window = build_window(2, 1)
    pinned = pinned_measure(law, window, 0, 10)
    mixed = mixed_measure(law, window, 10)
    assert pinned.probabilities.sum() == pytest.approx(1, abs=1e-12)
    assert mixed.probabilities.sum() == pytest.approx(1, abs=1e-12)
    assert mixed.pin == "mixed"
    payload = pinned.to_json()
    assert payload["window"] == {"k": 2, "R": 1}
    assert payload["M"] == 10
    assert len(payload["entries"]) == len(pinned.configurations)
    assert (0, 0, 0) in pinned.as_dict()


def test_pinned_measure_is_periodic_in_pin():
    law = _law(2, 5)
    window = build_window(2, 1)
    assert compare_tables(pinned_measure(law, window, 1, 6), pinned_measure(law, window, 5, 6)) == 0


def test_shifted_law_matches_shifted_pin():
    law = boundary_law_from_pair(enumerate_measure_candidates(7.0, 1.2)[-1])
    window = build_window(2, 1)
    for s in range(4):
        moved = pinned_measure(law.shifted(2), window, s, 6)
        assert compare_tables(moved, pinned_measure(law, window, s + 2, 6)) < 1e-14


def test_subtree_recursion_matches_brute_force():
    law = boundary_law_from_pair(enumerate_measure_candidates(7.0, 1.2)[-1])
    brute = pinned_measure(law, build_window(2, 2), 1, 1)
    recursed = marginal_table(law, build_window(2, 2), 1, 1, 1)
    expected = recursed.to_frame().set_index(["e0", "e1", "e2"])["probability"].sort_index()
    assert_allclose(brute.marginal([0, 1, 2]).values, expected.values, atol=1e-13)


@pytest.mark.parametrize("k, tau, M", [(2, 5.0, 20), (2, 7.0, 20), (3, 3.5, 20), (3, 5.0, 16)])
def test_pinned_measures_are_consistent(k, tau, M):
    law = _law(k, tau)
    outer = marginal_table(law, build_window(k, 2), 0, M, 1)
    inner = pinned_measure(law, build_window(k, 1), 0, M)
    assert compare_tables(outer, inner) < 1e-8


def test_field_measure_is_consistent():
    law = boundary_law_from_pair(enumerate_measure_candidates(7.0, 1.2)[-1])
    outer = marginal_table(law, build_window(2, 2), 2, 20, 1)
    inner = pinned_measure(law, build_window(2, 1), 2, 20)
    assert compare_tables(outer, inner) < 1e-8


def test_mixed_measure_is_consistent_and_translation_invariant():
    law = _law(2, 7.0)
    outer = marginal_table(law, build_window(2, 2), "mixed", 20, 1)
    inner = mixed_measure(law, build_window(2, 1), 20)
    assert compare_tables(outer, inner) < 1e-8

    window = build_window(2, 2)
    here = mixed_measure(law, window, 1)
    there = mixed_measure(law, window.reroot(2), 1)
    assert compare_tables(here, there) < 1e-14


def test_identifiability():
    params = ModelParams(2, 7)
    solutions = solve_zero_field(params)
    assert identifiability_check(solutions[0], solutions[0]) == POSSIBLY_EQUAL
    # the non-unit equal roots multiply to one, so their sums multiply to four
    equal = [p for p in solutions if p.a == p.b and abs(p.a - 1) > 1e-9]
    assert identifiability_check(equal[0], equal[1]) == POSSIBLY_EQUAL
    unequal = [p for p in solutions if p.a != p.b]
    assert identifiability_check(unequal[0], unequal[1]) == DISTINCT
    with pytest.raises(ValueError):
        identifiability_check(solutions[0], solve_zero_field(ModelParams(2, 5))[0])


@pytest.mark.parametrize("tau, classes", [(3.0, 1), (5.0, 2), (6.2, 3), (7.0, 4)])
def test_ggm_classes(tau, classes):
    assert len(ggm_classes(solve_zero_field(ModelParams(2, tau)))) == classes
