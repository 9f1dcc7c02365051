"""
Phase diagrams: solution counts over tau and (tau, h) grids.

PhaseEngine evaluates grid points with an interchangeable solver, refines
every count change by bisection and flags the closed-form critical values
that fall inside the scanned range.
"""
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from sos_ggm.config import config
from sos_ggm.models.boundary_law import (
    EQUAL,
    ModelParams,
    critical_values,
    shared_root_check,
    solve_generic,
    solve_zero_field,
)
from sos_ggm.models.external_field import (
    BRANCH_EQUAL,
    classify_region,
    count_distinct_pairs,
    enumerate_measure_candidates,
    region_curves,
)
from sos_ggm.models.ggm_core import ggm_classes

logger = logging.getLogger(__name__)

TAU_COLUMNS = ["tau", "k", "n_equal", "n_unequal", "n_total", "n_ggm_upper", "region"]
FIELD_COLUMNS = ["tau", "h", "k", "n_equal", "n_unequal", "n_total", "n_ggm_upper", "region", "n_candidates"]


class BaseSolver(ABC):
    """Abstract base class for zero-field solvers"""

    @abstractmethod
    def solve(self, params):
        """Return every positive solution at params"""
        pass


class GenericSolver(BaseSolver):
    """Root isolation on the Q and U polynomials, any k"""

    def solve(self, params):
        return solve_generic(params)


class ClosedFormSolver(BaseSolver):
    """Quadratic (k=2) and Ferrari quartic (k=3) formulas"""

    def solve(self, params):
        return solve_zero_field(params, method="closed")


class AutoSolver(BaseSolver):
    """Closed forms where they exist, root isolation otherwise"""

    def solve(self, params):
        return solve_zero_field(params, method="auto")


@dataclass(frozen=True)
class PhasePoint:
    """
    Solution counts at one parameter point

    n_total counts distinct solutions with (a, b) and (b, a) identified.
    n_candidates is only set for field scans, where it counts labelled
    candidate measures, both orientations included.
    """

    tau: float
    k: int
    n_equal: int
    n_unequal: int
    n_total: int
    n_ggm_upper: int
    h: float = None
    region: str = ""
    n_candidates: int = None

    def __post_init__(self):
        if self.n_total != self.n_equal + self.n_unequal:
            raise ValueError(f"n_total={self.n_total} does not match {self.n_equal} + {self.n_unequal}")
        if self.n_ggm_upper > self.n_total:
            raise ValueError(f"n_ggm_upper={self.n_ggm_upper} exceeds n_total={self.n_total}")


@dataclass(frozen=True)
class Transition:
    tau: float
    left: int
    right: int


@dataclass(frozen=True)
class ScanResult:
    points: tuple
    transitions: tuple = ()
    flagged: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def counts(self):
        return [p.n_total for p in self.points]

    def to_frame(self):
        """Points as a DataFrame with the CSV column layout"""
        rows = [asdict(p) for p in self.points]
        columns = FIELD_COLUMNS if any(p.h is not None for p in self.points) else TAU_COLUMNS
        return pd.DataFrame(rows, columns=columns)

    def to_json(self):
        return {
            "points": self.to_frame().to_dict(orient="records"),
            "transitions": [asdict(t) for t in self.transitions],
            "flagged": list(self.flagged),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, payload):
        """Rebuild a result written by to_json"""
        return cls(
            points=tuple(PhasePoint(**row) for row in payload["points"]),
            transitions=tuple(Transition(**t) for t in payload["transitions"]),
            flagged=tuple(payload["flagged"]),
            metadata=payload["metadata"],
        )


class PhaseEngine:
    """Engine for counting solutions and locating transitions over parameter ranges"""

    def __init__(self, solver_type="auto", workers=1):
        """
        Initialize the phase engine

        Args:
            solver_type (str): Solver to use ("auto", "generic" or "closed")
            workers (int): Worker processes for scans; 1 runs in-process
        """
        if solver_type == "auto":
            self.solver = AutoSolver()
        elif solver_type == "generic":
            self.solver = GenericSolver()
        elif solver_type == "closed":
            self.solver = ClosedFormSolver()
        else:
            raise ValueError(f"Unsupported solver type: {solver_type}")
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.solver_type = solver_type
        self.workers = workers

    def count(self, k, tau):
        return len(self.solver.solve(ModelParams(k, tau)))

    def evaluate(self, k, tau):
        """
        Solve at one point and summarise the counts

        Returns:
            PhasePoint: Counts, with the identifiability-class count as the GGM bound
        """
        solutions = self.solver.solve(ModelParams(k, tau))
        n_equal = sum(1 for s in solutions if s.kind == EQUAL)
        return PhasePoint(
            tau=float(tau),
            k=k,
            n_equal=n_equal,
            n_unequal=len(solutions) - n_equal,
            n_total=len(solutions),
            n_ggm_upper=len(ggm_classes(solutions)),
        )

    def _map(self, func, items):
        if self.workers == 1:
            return [func(item) for item in items]
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(func, items))

    def refine_transition(self, k, tau_lo, tau_hi, width=None):
        """
        Bisect a count change between tau_lo and tau_hi

        Args:
            k (int): Branching number
            tau_lo, tau_hi (float): Bracket with different counts at the ends
            width (float): Final bracket width, defaults to config.transition_width

        Returns:
            float: Midpoint of the final bracket
        """
        width = config.transition_width if width is None else width
        lo, hi = float(tau_lo), float(tau_hi)
        if not lo < hi:
            raise ValueError(f"need tau_lo < tau_hi, got {lo} and {hi}")
        count_lo, count_hi = self.count(k, lo), self.count(k, hi)
        if count_lo == count_hi:
            raise ValueError(f"counts agree at both ends ({count_lo}); nothing to refine")
        while hi - lo > width:
            mid = (lo + hi) / 2
            if self.count(k, mid) == count_lo:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    def scan_tau(self, k, tau_min, tau_max, steps):
        """
        Count solutions on an even tau grid and refine every count change

        Args:
            k (int): Branching number, >= 2
            tau_min, tau_max (float): Range with 2 < tau_min < tau_max
            steps (int): Grid points, >= 2

        Returns:
            ScanResult: Points in grid order, refined transitions, and flagged
                shared-root values inside the range
        """
        tau_min, tau_max = float(tau_min), float(tau_max)
        if not 2 < tau_min < tau_max or steps < 2:
            raise ValueError(f"scan needs 2 < tau_min < tau_max and steps >= 2, got {tau_min}, {tau_max}, {steps}")
        taus = np.linspace(tau_min, tau_max, steps)
        points = self._map(_PointTask(k, self.solver_type), taus)

        transitions = []
        for left, right in zip(points, points[1:]):
            if left.n_total != right.n_total:
                tau_star = self.refine_transition(k, left.tau, right.tau)
                transitions.append(Transition(tau=tau_star, left=left.n_total, right=right.n_total))
                logger.info("k=%d: count %d -> %d near tau=%.9f", k, left.n_total, right.n_total, tau_star)
        return ScanResult(
            points=tuple(points),
            transitions=tuple(transitions),
            flagged=tuple(self._flag_critical(k, tau_min, tau_max)),
            metadata={"k": k, "tau_min": tau_min, "tau_max": tau_max, "steps": steps, "solver": self.solver_type},
        )

    def _flag_critical(self, k, tau_min, tau_max):
        values = critical_values(k)
        flagged = []
        for name in ("tau_1", "tau_c", "tau_2", "tau_cr_1", "tau_cr_2"):
            tau = getattr(values, name)
            if tau is None or not tau_min <= float(tau) <= tau_max:
                continue
            params = ModelParams(k, tau)
            flagged.append(
                {
                    "name": name,
                    "tau": float(tau),
                    "n_total": self.count(k, tau),
                    "shared_root": shared_root_check(params),
                }
            )
        return flagged

    def scan_tau_h(self, tau_range, h_range, steps):
        """
        k=2 uniform-field grid with region tags

        Args:
            tau_range (tuple): (tau_min, tau_max), tau_min > 2
            h_range (tuple): (h_min, h_max), h_min > 0
            steps (int or tuple): Grid points along tau and h

        Returns:
            ScanResult: Points tau-major, the region curves and the largest
                candidate count in the metadata
        """
        tau_steps, h_steps = (steps, steps) if np.isscalar(steps) else steps
        if not 2 < tau_range[0] < tau_range[1] or not 0 < h_range[0] < h_range[1]:
            raise ValueError(f"invalid ranges tau={tau_range}, h={h_range}")
        if tau_steps < 2 or h_steps < 2:
            raise ValueError(f"steps must be at least 2, got {steps}")
        taus = np.linspace(*tau_range, tau_steps)
        hs = np.linspace(*h_range, h_steps)
        cells = [(float(t), float(h)) for t in taus for h in hs]
        points = self._map(_evaluate_field_point, cells)
        max_candidates = max(p.n_candidates for p in points)
        logger.info("field scan: %d cells, at most %d candidates", len(points), max_candidates)
        return ScanResult(
            points=tuple(points),
            metadata={
                "k": 2,
                "tau_range": [float(v) for v in tau_range],
                "h_range": [float(v) for v in h_range],
                "steps": [int(tau_steps), int(h_steps)],
                "max_candidates": int(max_candidates),
                "curves": region_curves(taus),
            },
        )


@dataclass(frozen=True)
class _PointTask:
    k: int
    solver_type: str

    def __call__(self, tau):
        return PhaseEngine(self.solver_type).evaluate(self.k, float(tau))


def _evaluate_field_point(cell):
    tau, h = cell
    candidates = enumerate_measure_candidates(tau, h)
    n_equal = sum(1 for c in candidates if c.branch == BRANCH_EQUAL)
    n_total = count_distinct_pairs(candidates)
    # one representative per unordered pair; a label and its swap share a sum
    unordered = [c for c in candidates if c.a <= c.b]
    return PhasePoint(
        tau=tau,
        h=h,
        k=2,
        n_equal=n_equal,
        n_unequal=n_total - n_equal,
        n_total=n_total,
        n_ggm_upper=min(len(ggm_classes(unordered)), n_total),
        region=classify_region(tau, h).value,
        n_candidates=len(candidates),
    )


def scan_tau(k, tau_min, tau_max, steps, solver_type="auto", workers=1):
    return PhaseEngine(solver_type, workers).scan_tau(k, tau_min, tau_max, steps)


def scan_tau_h(tau_range, h_range, steps, workers=1):
    return PhaseEngine(workers=workers).scan_tau_h(tau_range, h_range, steps)


def refine_transition(k, tau_lo, tau_hi, width=None, solver_type="auto"):
    return PhaseEngine(solver_type).refine_transition(k, tau_lo, tau_hi, width)
