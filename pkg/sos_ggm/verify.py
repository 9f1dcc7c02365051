"""
Named self-checks over the solver, phase-diagram and measure modules.

Each check raises VerificationError on failure and returns a short detail
string on success. run_checks runs a selection in registry order.
"""
import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from sos_ggm.models.boundary_law import (
    ModelParams,
    build_P,
    build_Q,
    build_U,
    critical_values,
    fixed_point_map,
    solve_generic,
    solve_k3,
    solve_zero_field,
    system_residuals,
)
from sos_ggm.models.external_field import FieldParams, enumerate_measure_candidates, residuals_abd
from sos_ggm.models.ggm_core import (
    DIVERGENT,
    boundary_law_from_pair,
    build_window,
    check_consistency,
    compare_tables,
    marginal_table,
    normalisability_verdict,
    pinned_measure,
    series_sums,
    transition_kernel,
)
from sos_ggm.models.polyroots import descartes_bound, divide_exact, isolate_positive_roots

logger = logging.getLogger(__name__)

K2_PINNED = [
    (2.5, 1), (3, 1), (3.99, 1), (4, 1), (4.5, 2), (5, 2),
    (6, 2), (6.2, 4), (6.4, 4), (6.5, 5), (7, 5), (10, 5),
]
K3_PINNED = [
    (2.2, 1), (2.5, 1), (2.8, 1), (2.99, 1), (2.995, 3), (2.998, 3), (3, 2),
    (3.2, 2), (3.5, 2), (3.9, 2), (4, 2), (4.05, 4), (4.1, 4), (4.2, 4),
    (3 * math.sqrt(2), 4), (4.3, 5), (4.5, 5), (5, 5), (6, 5), (8, 5),
]


class VerificationError(AssertionError):
    """Raised by a check whose property does not hold"""


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _require(condition, message):
    if not condition:
        raise VerificationError(message)


def _random_taus(rng, n, lo=2.1, hi=12.0):
    return [float(t) for t in rng.uniform(lo, hi, n)]


def check_critical_values(rng):
    grid = np.linspace(0.5, 1.5, 100001)
    for k in range(2, 7):
        values = 2 + 2 * (grid ** k + 1) / sum(grid ** j for j in range(1, k))
        tau_c = float(critical_values(k).tau_c)
        _require(abs(values.min() - tau_c) < 1e-10, f"k={k}: grid minimum {values.min()} vs {tau_c}")
    return "tau_c(k) = 2(k+1)/(k-1) for k = 2..6"


def check_thresholds(rng):
    cv2, cv3, cv4 = critical_values(2), critical_values(3), critical_values(4)
    _require(cv2.tau_1 == 4 and cv3.tau_1 == 3, "tau_1 mismatch")
    _require(abs(cv2.tau_2 - (2 + 2 * math.sqrt(5))) < 1e-12, f"tau_2(2) = {cv2.tau_2}")
    _require(abs(cv3.tau_2 - 3 * math.sqrt(2)) < 1e-12, f"tau_2(3) = {cv3.tau_2}")
    _require(abs(cv4.tau_2 - 3.497) < 5e-4, f"tau_2(4) = {cv4.tau_2}")
    return f"tau_2(4) = {cv4.tau_2:.6f}"


def check_factorization(rng):
    for k in (2, 3, 4):
        for _ in range(20):
            tau = Fraction(int(rng.integers(2001, 12000)), 1000)
            params = ModelParams(k, tau)
            quotient, remainder = divide_exact(build_P(params), build_Q(params))
            _require(remainder.is_zero, f"k={k}, tau={tau}: nonzero remainder")
            _require(quotient == -build_U(params), f"k={k}, tau={tau}: quotient is not -U")
    return "P = -Q U exactly for k = 2, 3, 4"


def check_root_residuals(rng):
    checked = 0
    for k in (2, 3, 4, 5):
        for tau in _random_taus(rng, 5):
            params = ModelParams(k, Fraction(tau).limit_denominator(10 ** 6))
            for poly in (build_Q(params), build_U(params)):
                roots = isolate_positive_roots(poly)
                _require(roots.count <= descartes_bound(poly), f"k={k}: more roots than the Descartes bound")
                for root in roots:
                    scale = poly.scaled_magnitude(root.value)
                    _require(abs(float(poly.to_float()(root.value))) <= 1e-10 * scale, f"k={k}: residual at {root.value}")
                    checked += 1
    return f"{checked} isolated roots"


def _counts(k, pinned):
    for tau, expected in pinned:
        found = len(solve_zero_field(ModelParams(k, tau)))
        _require(found == expected, f"k={k}, tau={tau}: {found} solutions, expected {expected}")
    return f"{len(pinned)} pinned values"


def check_k2_counts(rng):
    return _counts(2, K2_PINNED)


def check_k3_counts(rng):
    return _counts(3, K3_PINNED)


def check_k3_dual(rng):
    for tau in _random_taus(rng, 50):
        params = ModelParams(3, tau)
        generic = [p for p in solve_generic(params) if p.a != p.b]
        closed = solve_k3(tau)
        _require(len(generic) == len(closed), f"tau={tau}: {len(generic)} vs {len(closed)} unequal pairs")
        for g, c in zip(generic, closed):
            _require(abs(g.a - c.a) < 1e-9 and abs(g.b - c.b) < 1e-9, f"tau={tau}: {g} vs {c}")
    return "generic and quartic solvers agree at 50 tau values"


def check_fixed_point(rng):
    roots = isolate_positive_roots(build_U(ModelParams(3, 6)))
    _require(roots.count == 6, f"expected 6 positive fixed points at tau=6, found {roots.count}")
    for a in roots.values:
        _require(abs(fixed_point_map(a, 6) - a) < 1e-9, f"Y({a}) != {a}")
    return "6 fixed points of Y at tau=6"


def check_k3_q_product(rng):
    for tau in _random_taus(rng, 10, lo=4.01):
        values = [r.value for r in isolate_positive_roots(build_Q(ModelParams(3, Fraction(tau))))]
        others = [v for v in values if abs(v - 1) > 1e-9]
        _require(len(others) == 2, f"tau={tau}: expected two non-unit roots")
        _require(abs(others[0] * others[1] - 1) < 1e-10, f"tau={tau}: product {others[0] * others[1]}")
    return "a2 a3 = 1"


def check_swap_symmetry(rng):
    for tau in (5.0, 7.0):
        for pair in solve_zero_field(ModelParams(2, tau)):
            swapped = pair.swapped()
            residuals = system_residuals(2, tau, swapped.a, swapped.b)
            _require(max(abs(r) for r in residuals) < 1e-10, f"swap of {pair} fails")
    fp = FieldParams(ModelParams(2, 7.0), h1=1.3, h2=1.3)
    for sol in enumerate_measure_candidates(7.0, 1.3):
        _require(max(abs(r) for r in residuals_abd(fp, sol.b, sol.a)) < 1e-9, f"field swap of {sol} fails")
    return "swapped pairs solve the system"


def _verified_laws():
    laws = []
    for k, tau in ((2, 5.0), (2, 7.0), (3, 3.5), (3, 5.0)):
        laws.extend(boundary_law_from_pair(p) for p in solve_zero_field(ModelParams(k, tau)))
    laws.extend(boundary_law_from_pair(s) for s in enumerate_measure_candidates(7.0, 1.2))
    return laws


def check_consistency_all(rng):
    laws = _verified_laws()
    for law in laws:
        residual = check_consistency(law)
        _require(residual < 1e-9, f"law {law.u}: consistency residual {residual}")
    return f"{len(laws)} laws"


def check_series(rng):
    for law in _verified_laws():
        sums = series_sums(law)
        for i in (-5, -1, 0, 2, 7):
            left, right = sums.truncated(i, 400)
            closed = sums.l_at(i) + sums.r_at(i)
            _require(abs(closed - left - right) < 1e-12 * (1 + closed), f"series at i={i}")
            _require(abs(sums.full_at(i) - sums.block_at(i)) < 1e-12 * sums.full_at(i), "block form mismatch")
    return "closed forms match truncation"


def check_kernel(rng):
    for law in _verified_laws():
        kernel = transition_kernel(law, 30)
        mass = float(kernel.row_mass.loc[0])
        _require(1 - kernel.tail_bound - 1e-12 <= mass <= 1 + 1e-12, f"row mass {mass}")
    return "centre rows are stochastic up to the tail bound"


def check_normalisability(rng):
    for law in _verified_laws():
        verdict = normalisability_verdict(law, 10_000)
        _require(verdict.verdict == DIVERGENT and verdict.slope > 0, f"law {law.u}: {verdict.verdict}")
    return "every periodic law is non-normalisable"


def check_field(rng):
    for tau, h in ((3.0, 2.0), (5.0, 0.5), (7.0, 1.2), (7.0, 1.0), (4.5, 1.0), (9.0, 0.7)):
        fp = FieldParams(ModelParams(2, tau), h1=h, h2=h)
        for sol in enumerate_measure_candidates(tau, h):
            _require(max(abs(r) for r in residuals_abd(fp, sol.a, sol.b)) < 1e-10, f"({tau}, {h}): {sol}")
    for tau in (5.0, 7.0):
        zero = sorted((p.a, p.b) for p in solve_zero_field(ModelParams(2, tau)))
        field = sorted((s.a, s.b) for s in enumerate_measure_candidates(tau, 1.0) if s.a <= s.b)
        _require(len(zero) == len(field), f"tau={tau}: h=1 gives {len(field)} vs {len(zero)}")
        _require(np.allclose(zero, field, atol=1e-9, rtol=0), f"tau={tau}: h=1 solutions differ")
    return "field residuals and h=1 reduction"


def check_measure(rng):
    law = boundary_law_from_pair(solve_zero_field(ModelParams(2, 5.0))[-1])
    inner = pinned_measure(law, build_window(2, 1), 0, 20)
    outer = marginal_table(law, build_window(2, 2), 0, 20, 1)
    diff = compare_tables(inner, outer)
    _require(diff < 1e-8, f"marginalisation residual {diff}")
    return f"R=2 -> R=1 residual {diff:.2e}"


CHECKS = {
    "critical-values": check_critical_values,
    "thresholds": check_thresholds,
    "factorization": check_factorization,
    "root-residuals": check_root_residuals,
    "k2-counts": check_k2_counts,
    "k3-counts": check_k3_counts,
    "k3-dual": check_k3_dual,
    "fixed-point": check_fixed_point,
    "k3-q-product": check_k3_q_product,
    "swap-symmetry": check_swap_symmetry,
    "consistency": check_consistency_all,
    "series": check_series,
    "kernel": check_kernel,
    "normalisability": check_normalisability,
    "field": check_field,
    "measure": check_measure,
}


def run_checks(only=None, seed=0):
    """
    Run the named checks, all of them by default

    Args:
        only (list): Check names to run
        seed (int): Seed for the random tau samples

    Returns:
        list: CheckResult values in registry order
    """
    names = list(CHECKS) if not only else list(only)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown checks: {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    results = []
    for name in CHECKS:
        if name not in names:
            continue
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        try:
            detail, passed = CHECKS[name](rng), True
        except VerificationError as exc:
            detail, passed = str(exc), False
        elapsed = time.perf_counter() - start
        logger.info("%s %s (%.2fs)", "PASS" if passed else "FAIL", name, elapsed)
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return results
