"""
4-periodic boundary laws under a 4-periodic external field.

The field is h(i) = 1 on even sites, h1 on sites 4m-1 and h2 on sites 4m+1.
With residues (1, b, 1, a) the law solves

    (a + b - tau) h2 b^k + tau b - 2 = 0
    (a + b - tau) h1 a^k + tau a - 2 = 0

For k = 2 and h1 = h2 = h the difference of the two equations factors as
(b - a)[h(a + b)^2 - h tau (a + b) + tau] = 0, which splits the solutions
into the a = b cubic and two sum branches.
"""
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from sos_ggm.config import config
from sos_ggm.models.boundary_law import (
    ModelParams,
    polish_pair,
    residual_scale,
    system_jacobian,
    system_residuals,
)
from sos_ggm.models.polyroots import solve_cubic, to_fraction

logger = logging.getLogger(__name__)

BRANCH_EQUAL = "equal"
BRANCH_SUM_PLUS = "sum_plus"
BRANCH_SUM_MINUS = "sum_minus"
BRANCH_GENERIC = "unequal"

REGION_A = "A"
REGION_B = "B"
REGION_BOUNDARY = "both-boundary"
REGION_NEITHER = "neither"


@dataclass(frozen=True)
class FieldParams:
    base: ModelParams
    h1: float = 1.0
    h2: float = 1.0

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0):
            raise ValueError(f"field values must be positive, got h1={self.h1}, h2={self.h2}")

    @property
    def h0(self):
        return 1

    @property
    def uniform(self):
        return self.h1 == self.h2

    def field_at(self, i):
        """h(i) with h(2m) = 1, h(4m-1) = h1, h(4m+1) = h2"""
        residue = i % 4
        if residue == 3:
            return self.h1
        if residue == 1:
            return self.h2
        return 1


@dataclass(frozen=True)
class FieldSolution:
    a: float
    b: float
    branch: str
    index: int
    residuals: tuple
    params: FieldParams

    @property
    def max_residual(self):
        return max(abs(r) for r in self.residuals)

    @property
    def total(self):
        return self.a + self.b


@dataclass(frozen=True)
class RegionTag:
    """Membership of (tau, h) in the regions where the sum branches exist"""

    value: str
    in_a: bool
    in_b: bool
    on_edge: bool = False


def residuals_abd(fp, a, b):
    """
    Left-hand sides of the field system at (a, b)

    Args:
        fp (FieldParams): Model and field parameters
        a, b (float): Positive law entries

    Returns:
        tuple: (first equation, second equation)
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"residuals need a, b > 0, got a={a}, b={b}")
    return system_residuals(fp.base.k, fp.base.tau, a, b, float(fp.h1), float(fp.h2))


def _region_bounds(tau, h):
    """Exact membership flags plus boundary flags for the two sum branches"""
    tau, h = to_fraction(tau), to_fraction(h)
    if tau >= 4:
        lower_a = 4 / tau
    elif tau * tau > 8:
        lower_a = tau ** 3 / (8 * (tau * tau - 8))
    else:
        lower_a = None
    in_a = lower_a is not None and h >= lower_a
    on_a_edge = in_a and h == lower_a

    in_b = False
    on_b_edge = False
    if tau >= 4:
        upper_b = tau ** 3 / (8 * (tau * tau - 8))
        in_b = 4 / tau <= h <= upper_b
        on_b_edge = in_b and (h == 4 / tau or h == upper_b)
    return in_a, in_b, on_a_edge, on_b_edge, tau


def classify_region(tau, h):
    """
    Tag (tau, h) as A, B, both-boundary or neither

    A holds when the sum_plus pair exists, B when sum_minus also exists; B is
    contained in A. Points on the edge of B with tau > 4 are tagged
    both-boundary since the two sum branches meet or degenerate there.
    Points on the lower edge of A alone keep the tag A; on_edge is set for
    every point on either edge, where a sum pair degenerates to a double root.

    Args:
        tau (float): Coupling, > 2
        h (float): Uniform field, > 0

    Returns:
        RegionTag: Tag with the raw membership flags
    """
    if tau <= 2 or h <= 0:
        raise ValueError(f"classify_region needs tau > 2 and h > 0, got tau={tau}, h={h}")
    in_a, in_b, on_a_edge, on_b_edge, tau_q = _region_bounds(tau, h)
    if not in_a:
        value = REGION_NEITHER
    elif in_b and on_b_edge and tau_q > 4:
        value = REGION_BOUNDARY
    elif in_b and tau_q > 4:
        value = REGION_B
    else:
        value = REGION_A
    return RegionTag(value=value, in_a=in_a, in_b=in_b, on_edge=on_a_edge or on_b_edge)


def region_curves(tau_values):
    """Boundary curves h = 4/tau and h = tau^3/(8(tau^2 - 8)) sampled on tau_values"""
    tau = np.asarray(tau_values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.where(tau * tau > 8, tau ** 3 / (8 * (tau * tau - 8)), np.nan)
    return {
        "tau": tau.tolist(),
        "h_lower": (4 / tau).tolist(),
        "h_upper": [None if np.isnan(v) else float(v) for v in upper],
    }


def _branch_pair(tau, h, sign, tol):
    """
    Roots of (h tau + sign*r) a^2 - 2 tau a + 4 = 0 with r = sqrt(h tau (h tau - 4))

    Returns:
        tuple or None: (small root, large root) when the radicand is >= -tol
    """
    ht = h * tau
    r = math.sqrt(max(ht * (ht - 4), 0.0))
    lead = ht + sign * r
    radicand = tau * tau - 4 * lead
    if radicand < -tol * max(1.0, tau * tau):
        return None
    root = math.sqrt(max(radicand, 0.0))
    return (tau - root) / lead, (tau + root) / lead


def solve_k2_uniform(tau, h, tol=None):
    """
    Closed-form k=2 solutions under a uniform field h

    Args:
        tau (float): Coupling, > 2
        h (float): Uniform field value, > 0
        tol (float): Radicand clamp tolerance, defaults to config.tol

    Returns:
        list: FieldSolution values labelled 1..7 in the order cubic roots,
            sum_plus pair, sum_minus pair; boundary duplicates are kept
    """
    tol = config.tol if tol is None else tol
    base = ModelParams(2, tau)
    fp = FieldParams(base, h1=h, h2=h)
    tau_f, h_f = base.tau_float, float(h)
    tag = classify_region(tau, h)

    candidates = []
    cubic = solve_cubic(2 * h, -h * base.tau, base.tau, -2)
    for value in cubic.values:
        if value <= 0:
            raise ArithmeticError(f"a=b cubic produced a non-positive root {value!r}")
        candidates.append((value, value, BRANCH_EQUAL))

    if h_f * tau_f >= 4 - tol:
        for sign, branch, live in ((-1, BRANCH_SUM_PLUS, tag.in_a), (1, BRANCH_SUM_MINUS, tag.in_b)):
            if not live:
                continue
            roots = _branch_pair(tau_f, h_f, sign, tol)
            if roots is None:
                logger.debug("branch %s radicand negative at tau=%.17g h=%.17g", branch, tau_f, h_f)
                continue
            small, large = roots
            candidates.append((small, large, branch))
            candidates.append((large, small, branch))

    solutions = []
    for index, (a, b, branch) in enumerate(candidates, start=1):
        if a != b:
            a, b = polish_pair(2, tau_f, a, b, h_f, h_f)
        residuals = residuals_abd(fp, a, b)
        if max(abs(r) for r in residuals) > config.residual_tol * residual_scale(2, tau_f, a, b, h_f, h_f):
            logger.warning("dropping %s candidate (%.17g, %.17g): residuals %r", branch, a, b, residuals)
            continue
        solutions.append(FieldSolution(a=a, b=b, branch=branch, index=index, residuals=residuals, params=fp))
    return solutions


def _dedupe(solutions, tol):
    kept = []
    for sol in solutions:
        if not any(abs(sol.a - k.a) < tol and abs(sol.b - k.b) < tol for k in kept):
            kept.append(sol)
    return kept


def enumerate_measure_candidates(tau, h, tol=None):
    """
    Distinct k=2 solutions under a uniform field, one per candidate measure

    Solutions closer than 1e-8 in (a, b) are merged, the earlier label wins.
    Labels are then renumbered 1..n in order.
    """
    kept = _dedupe(solve_k2_uniform(tau, h, tol), config.branch_merge_tol)
    return [replace(sol, index=i) for i, sol in enumerate(kept, start=1)]


def count_distinct_pairs(solutions, tol=None):
    """Distinct solutions counting (a, b) and (b, a) once"""
    tol = config.branch_merge_tol if tol is None else tol
    seen = []
    for sol in solutions:
        key = (min(sol.a, sol.b), max(sol.a, sol.b))
        if not any(abs(key[0] - s[0]) < tol and abs(key[1] - s[1]) < tol for s in seen):
            seen.append(key)
    return len(seen)


def solve_field_generic(fp, starts=None, seed=0, tol=None):
    """
    Multistart damped Newton for arbitrary k, h1, h2

    Starting points are drawn uniformly from (0, tau)^2 with a seeded
    generator; converged points are deduplicated at 1e-8.

    Args:
        fp (FieldParams): Model and field parameters
        starts (int): Number of starting points, defaults to config.multistart
        seed (int): Seed of the starting-point generator

    Returns:
        list: FieldSolution values sorted by (a, b)
    """
    starts = config.multistart if starts is None else starts
    tol = config.tol if tol is None else tol
    k, tau = fp.base.k, fp.base.tau_float
    h1, h2 = float(fp.h1), float(fp.h2)
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, tau, size=(starts, 2))

    found = []
    for start in points:
        result = _damped_newton(k, tau, h1, h2, start)
        if result is None:
            continue
        a, b = result
        residuals = residuals_abd(fp, a, b)
        if max(abs(r) for r in residuals) <= config.residual_tol * residual_scale(k, tau, a, b, h1, h2):
            found.append((a, b, residuals))

    found.sort()
    solutions = []
    for a, b, residuals in found:
        if any(abs(a - s.a) < config.branch_merge_tol and abs(b - s.b) < config.branch_merge_tol for s in solutions):
            continue
        branch = BRANCH_EQUAL if abs(a - b) < config.branch_merge_tol else BRANCH_GENERIC
        solutions.append(
            FieldSolution(a=a, b=b, branch=branch, index=len(solutions) + 1, residuals=residuals, params=fp)
        )
    logger.debug("multistart found %d solutions from %d starts", len(solutions), starts)
    return solutions


def _damped_newton(k, tau, h1, h2, start, max_iter=100):
    x = np.array(start, dtype=float)

    def norm(v):
        return float(np.abs(system_residuals(k, tau, v[0], v[1], h1, h2)).max())

    current = norm(x)
    for _ in range(max_iter):
        if current < 1e-14:
            break
        try:
            step = np.linalg.solve(
                system_jacobian(k, tau, x[0], x[1], h1, h2),
                np.array(system_residuals(k, tau, x[0], x[1], h1, h2)),
            )
        except np.linalg.LinAlgError:
            return None
        damping = 1.0
        while damping > 1e-6:
            trial = x - damping * step
            if np.all(trial > 0) and norm(trial) < current:
                break
            damping /= 2
        else:
            return None
        x = trial
        current = norm(x)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        return None
    return polish_pair(k, tau, x[0], x[1], h1, h2)
