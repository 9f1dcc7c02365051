import math

import numpy as np
import pytest

from sos_ggm.models.boundary_law import ModelParams, critical_values, solve_zero_field
from sos_ggm.models.phase_diagram import (
    FIELD_COLUMNS,
    TAU_COLUMNS,
    PhaseEngine,
    PhasePoint,
    refine_transition,
    scan_tau,
    scan_tau_h,
)


@pytest.mark.parametrize(
    "k, lo, hi, expected, tol",
    [
        (2, 6.3, 6.6, 2 + 2 * math.sqrt(5), 1e-6),
        (2, 3.9, 4.5, 4.0, 1e-6),
        (3, 4.1, 4.3, 3 * math.sqrt(2), 1e-6),
    ],
)
def test_refine_transition(k, lo, hi, expected, tol):
    assert refine_transition(k, lo, hi) == pytest.approx(expected, abs=tol)


def test_refine_k3_birth():
    birth = critical_values(3).tau_cr_1
    assert refine_transition(3, 2.9, 2.999) == pytest.approx(birth, abs=1e-5)


def test_refine_rejects_flat_bracket():
    with pytest.raises(ValueError):
        refine_transition(2, 4.5, 5.5)
    with pytest.raises(ValueError):
        refine_transition(2, 6.0, 5.0)


def test_scan_k2():
    result = scan_tau(2, 2.1, 8, 300)
    assert len(result.points) == 300
    assert [(t.left, t.right) for t in result.transitions] == [(1, 2), (2, 4), (4, 5)]
    assert [t.tau for t in result.transitions] == pytest.approx([4.0, 6.0, 2 + 2 * math.sqrt(5)], abs=1e-6)
    assert all(a <= b for a, b in zip(result.counts, result.counts[1:]))
    assert {f["name"] for f in result.flagged} == {"tau_1", "tau_c", "tau_2"}


def test_scan_below_first_threshold_is_flat():
    result = scan_tau(2, 2.1, 3.9, 50)
    assert set(result.counts) == {1}
    assert result.transitions == ()


def test_scan_k3_transitions():
    result = scan_tau(3, 2.95, 4.4, 400)
    pairs = [(t.left, t.right) for t in result.transitions]
    assert pairs == [(1, 3), (3, 2), (2, 4), (4, 5)]
    expected = [critical_values(3).tau_cr_1, 3.0, 4.0, 3 * math.sqrt(2)]
    assert [t.tau for t in result.transitions] == pytest.approx(expected, abs=1e-5)

    flagged = {f["name"]: f for f in result.flagged}
    assert flagged["tau_2"]["shared_root"] == pytest.approx(1 / math.sqrt(2))
    assert flagged["tau_2"]["n_total"] == 4


def test_scan_rows_and_columns():
    result = scan_tau(2, 4.5, 7.5, 7)
    frame = result.to_frame()
    assert list(frame.columns) == TAU_COLUMNS
    for row in frame.itertuples():
        assert row.n_total == row.n_equal + row.n_unequal
        assert row.n_ggm_upper <= row.n_total
    payload = result.to_json()
    assert payload["metadata"]["steps"] == 7
    assert len(payload["points"]) == 7


def test_scan_is_deterministic():
    first = scan_tau(3, 3.5, 5.0, 12)
    again = scan_tau(3, 3.5, 5.0, 12)
    assert first.to_frame().equals(again.to_frame())
    assert first.transitions == again.transitions


def test_scan_rejects_bad_range():
    with pytest.raises(ValueError):
        scan_tau(2, 2.0, 5.0, 10)
    with pytest.raises(ValueError):
        scan_tau(2, 5.0, 4.0, 10)
    with pytest.raises(ValueError):
        scan_tau(2, 3.0, 4.0, 1)


def test_field_scan():
    result = scan_tau_h((4.6, 8.1), (0.5, 1.5), (8, 11))
    frame = result.to_frame()
    assert list(frame.columns) == FIELD_COLUMNS
    assert len(frame) == 88
    assert result.metadata["max_candidates"] <= 7
    assert len(result.metadata["curves"]["tau"]) == 8

    unit = frame[np.isclose(frame["h"], 1.0)]
    assert len(unit) == 8
    for row in unit.itertuples():
        assert row.n_total == len(solve_zero_field(ModelParams(2, row.tau)))


def test_field_scan_rejects_bad_range():
    with pytest.raises(ValueError):
        scan_tau_h((4.5, 8.0), (0.0, 1.5), 5)


def test_engine_rejects_unknown_solver():
    with pytest.raises(ValueError):
        PhaseEngine("newton")
    with pytest.raises(ValueError):
        PhaseEngine(workers=0)


def test_solvers_agree():
    for tau in (3.5, 4.5, 6.0):
        assert PhaseEngine("generic").count(3, tau) == PhaseEngine("closed").count(3, tau)


def test_phase_point_invariants():
    with pytest.raises(ValueError):
        PhasePoint(tau=5.0, k=2, n_equal=1, n_unequal=1, n_total=3, n_ggm_upper=1)
    with pytest.raises(ValueError):
        PhasePoint(tau=5.0, k=2, n_equal=1, n_unequal=1, n_total=2, n_ggm_upper=3)
