"""
Gradient Gibbs measures built from 4-periodic boundary laws.

The SOS transfer operator is Q(i - j) = theta^|i - j|. A 4-periodic boundary
law z (normalised to z_0 = 1) gives transition kernels and, on a finite ball
of the Cayley tree, exact pinned and mixed gradient measure tables over
edge gradients truncated to [-M, M].
"""
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import pandas as pd

from sos_ggm.config import config
from sos_ggm.models.boundary_law import BoundaryLawPair
from sos_ggm.models.external_field import FieldSolution

logger = logging.getLogger(__name__)

PERIOD = 4
POSSIBLY_EQUAL = "possibly-equal"
DISTINCT = "distinct"
DIVERGENT = "divergent"
CONVERGENT = "convergent-so-far"
UNDERFLOW = 1e-300


class SizeBudgetExceeded(ValueError):
    """Raised when an enumeration would exceed the configuration budget"""


class SingularLawError(ValueError):
    """Raised when u_{-1} + u_1 - tau vanishes"""


@dataclass(frozen=True)
class TransferOperator:
    theta: float

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")

    def weight(self, zeta):
        return self.theta ** np.abs(zeta)

    def total(self):
        """Sum of theta^|zeta| over all integers"""
        return (1 + self.theta) / (1 - self.theta)


@dataclass(frozen=True)
class PeriodicBoundaryLaw:
    """
    4-periodic law by residue: u = (1, b, 1, a), field h = (1, h2, 1, h1)

    z_i = h_i u_i^k is the boundary-law value at heights i = residue mod 4.
    """

    k: int
    tau: float
    theta: float
    u: tuple
    h: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.u) != PERIOD or len(self.h) != PERIOD:
            raise ValueError("a 4-periodic law needs four residues")
        if min(self.u) <= 0 or min(self.h) <= 0:
            raise ValueError(f"law entries must be positive, got u={self.u}, h={self.h}")

    @property
    def z(self):
        return tuple(hi * ui ** self.k for hi, ui in zip(self.h, self.u))

    @property
    def operator(self):
        return TransferOperator(self.theta)

    def z_at(self, i):
        return np.asarray(self.z)[np.mod(i, PERIOD)]

    def shifted(self, n):
        """Law with z'_i = z_{i+n}"""
        rot = lambda v: tuple(v[(i + n) % PERIOD] for i in range(PERIOD))  # noqa: E731
        return PeriodicBoundaryLaw(self.k, self.tau, self.theta, rot(self.u), rot(self.h))

    @classmethod
    def free(cls, k, tau):
        theta = 2.0 / (tau + math.sqrt(tau * tau - 4.0))
        return cls(k, float(tau), theta, (1.0, 1.0, 1.0, 1.0))


def boundary_law_from_pair(pair):
    """
    The 4-periodic law of a zero-field pair or a field solution

    Args:
        pair (BoundaryLawPair or FieldSolution): Verified positive solution

    Returns:
        PeriodicBoundaryLaw: u = (1, b, 1, a) by residue with the field folded into z
    """
    if isinstance(pair, FieldSolution):
        base = pair.params.base
        h = (1.0, float(pair.params.h2), 1.0, float(pair.params.h1))
    elif isinstance(pair, BoundaryLawPair):
        base = pair.params
        h = (1.0, 1.0, 1.0, 1.0)
    else:
        raise TypeError(f"Unsupported solution type: {type(pair).__name__}")
    if pair.a <= 0 or pair.b <= 0:
        raise ValueError(f"law entries must be positive, got a={pair.a}, b={pair.b}")
    return PeriodicBoundaryLaw(
        k=base.k,
        tau=base.tau_float,
        theta=base.theta,
        u=(1.0, float(pair.b), 1.0, float(pair.a)),
        h=h,
    )


@dataclass(frozen=True)
class SeriesSums:
    """
    Left and right tail sums of a periodic law

    l_i = sum_{j <= -1} theta^|i-j| z_j and r_i = sum_{j >= 1} theta^|i-j| z_j,
    stored for i = 0..3; any other i is evaluated in closed form on demand.
    """

    theta: float
    z: tuple
    l: tuple
    r: tuple

    def _tail_right(self, i):
        t = self.theta
        return sum(t ** d * self.z[(i + d) % PERIOD] for d in range(1, PERIOD + 1)) / (1 - t ** PERIOD)

    def _tail_left(self, i):
        t = self.theta
        return sum(t ** d * self.z[(i - d) % PERIOD] for d in range(1, PERIOD + 1)) / (1 - t ** PERIOD)

    def r_at(self, i):
        t = self.theta
        if i >= 1:
            return sum(t ** (i - j) * self.z[j % PERIOD] for j in range(1, i + 1)) + self._tail_right(i)
        return t ** (-i) * self._tail_right(0)

    def l_at(self, i):
        t = self.theta
        if i <= -1:
            return sum(t ** (j - i) * self.z[j % PERIOD] for j in range(i, 0)) + self._tail_left(i)
        return t ** i * self._tail_left(0)

    def full_at(self, i):
        """theta^|i| z_0 + l_i + r_i, the whole-lattice sum at height i"""
        return self.theta ** abs(i) * self.z[0] + self.l_at(i) + self.r_at(i)

    def block_at(self, i):
        """The same whole-lattice sum from the residue-block closed form"""
        t = self.theta
        total = 0.0
        for rho in range(PERIOD):
            d = (rho - i) % PERIOD
            total += self.z[rho] * (t ** d + t ** (PERIOD - d))
        return total / (1 - t ** PERIOD)

    def truncated(self, i, depth):
        """(l_i, r_i) summed over 1 <= |j| <= depth"""
        t = self.theta
        js = np.arange(1, depth + 1)
        z = np.asarray(self.z)
        right = float(np.sum(t ** np.abs(i - js) * z[js % PERIOD]))
        left = float(np.sum(t ** np.abs(i + js) * z[(-js) % PERIOD]))
        return left, right


def series_sums(law):
    """Closed-form tail sums l_i, r_i for i = 0..3"""
    if not 0 < law.theta < 1:
        raise ValueError(f"series sums need theta in (0, 1), got {law.theta}")
    partial = SeriesSums(theta=law.theta, z=law.z, l=(), r=())
    return SeriesSums(
        theta=law.theta,
        z=law.z,
        l=tuple(partial.l_at(i) for i in range(PERIOD)),
        r=tuple(partial.r_at(i) for i in range(PERIOD)),
    )


def consistency_residuals(law, tol=None):
    """
    Residuals of the boundary-law equation in its two forms

    Returns:
        tuple: (recurrence residual, series residual), each a max over residues
    """
    tol = config.tol if tol is None else tol
    u, h, k, tau = law.u, law.h, law.k, law.tau
    denom = u[3] + u[1] - tau
    if abs(denom) < tol:
        raise SingularLawError(f"u_-1 + u_1 - tau = {denom!r} is singular")
    recurrence = max(
        abs(h[i] * u[i] ** k - (u[(i - 1) % PERIOD] + u[(i + 1) % PERIOD] - tau * u[i]) / denom)
        for i in range(PERIOD)
    )

    sums = series_sums(law)
    z = law.z
    c0 = sums.full_at(0)
    series = max(abs(z[i] - h[i] / h[0] * (sums.full_at(i) / c0) ** k) for i in range(PERIOD))
    return recurrence, series


def check_consistency(law, tol=None):
    """
    Max residual of the boundary-law equation over the four residues

    Both the u-recurrence and the series form are evaluated; the larger one
    is returned.
    """
    recurrence, series = consistency_residuals(law, tol)
    logger.debug("consistency residuals: recurrence %.3e, series %.3e", recurrence, series)
    return max(recurrence, series)


def _lattice_sums(law, indices):
    """sum_j theta^|i-j| z_j for each i in indices"""
    indices = np.asarray(indices)
    if isinstance(law, PeriodicBoundaryLaw):
        sums = series_sums(law)
        by_residue = np.array([sums.block_at(r) for r in range(PERIOD)])
        return by_residue[np.mod(indices, PERIOD)]
    theta = law.theta
    reach = int(math.ceil(math.log(1e-18) / math.log(theta)))
    span = np.arange(indices.min() - reach, indices.max() + reach + 1)
    kernel = theta ** np.abs(np.arange(-reach, reach + 1))
    conv = np.convolve(np.asarray(law.z_at(span), dtype=float), kernel, mode="valid")
    return conv[indices - indices.min()]


@dataclass(frozen=True)
class NormalisabilityVerdict:
    verdict: str
    slope: float
    partial_sums: np.ndarray = field(repr=False)


def normalisability_verdict(law, depth):
    """
    Partial sums of sum_i (sum_j theta^|i-j| z_j)^{k+1} over |i| <= n, n = 0..depth

    Any object with k, theta and a vectorised z_at works. Growth is measured
    per lattice site over the upper half of the range; a law is divergent
    when that growth is a non-negligible share of the average.

    Returns:
        NormalisabilityVerdict: Verdict, slope per site and the partial sums
    """
    if depth < 2:
        raise ValueError(f"depth must be at least 2, got {depth}")
    indices = np.arange(-depth, depth + 1)
    terms = _lattice_sums(law, indices) ** (law.k + 1)
    centre = depth
    partial = np.empty(depth + 1)
    partial[0] = terms[centre]
    shells = terms[centre + 1 :] + terms[:centre][::-1]
    partial[1:] = partial[0] + np.cumsum(shells)

    ns = np.arange(depth // 2, depth + 1)
    slope = float(np.polyfit(ns, partial[ns], 1)[0]) / 2
    average = partial[-1] / (2 * depth + 1)
    verdict = DIVERGENT if slope > 1e-6 * average else CONVERGENT
    return NormalisabilityVerdict(verdict=verdict, slope=slope, partial_sums=partial)


@dataclass(frozen=True)
class TransitionKernel:
    """P(i -> j) = z_j theta^|j-i| / sum_s z_s theta^|s-i| on heights [-M, M]"""

    frame: pd.DataFrame = field(repr=False)
    law: PeriodicBoundaryLaw
    M: int
    tail_bound: float

    def probability(self, i, j):
        sums = _lattice_sums(self.law, [i])[0]
        return float(self.law.z_at(j) * self.law.theta ** abs(j - i) / sums)

    @property
    def row_mass(self):
        return self.frame.sum(axis=1)


def transition_kernel(law, M):
    """
    Markov-chain transition table of a periodic law

    Rows are normalised over the whole lattice through the closed-form sums,
    then reported on the window [-M, M]. tail_bound bounds the mass the centre
    row loses outside the window.
    """
    if M < 1:
        raise ValueError(f"M must be at least 1, got {M}")
    heights = np.arange(-M, M + 1)
    z = law.z_at(heights)
    weights = law.theta ** np.abs(heights[None, :] - heights[:, None]) * z[None, :]
    table = weights / _lattice_sums(law, heights)[:, None]
    frame = pd.DataFrame(table, index=pd.Index(heights, name="i"), columns=pd.Index(heights, name="j"))
    tail = 2 * law.theta ** (M + 1) / (1 - law.theta) * max(law.z) / min(law.z)
    return TransitionKernel(frame=frame, law=law, M=M, tail_bound=tail)


class TreeWindow:
    """
    Ball of radius R around a root of the Cayley tree with k+1 neighbours per vertex

    The interior is the ball of radius R-1, the boundary the sphere of radius R.
    Edges are oriented away from the construction root and listed in
    breadth-first order, so a smaller ball's edges come first.
    """

    def __init__(self, k, radius, graph, root, build_root=None):
        self.k = k
        self.radius = radius
        self.graph = graph
        self.root = root
        self.build_root = root if build_root is None else build_root
        self.edges = sorted(graph.edges(), key=lambda e: e[1])
        self.edge_index = {edge: n for n, edge in enumerate(self.edges)}
        depth = nx.single_source_shortest_path_length(graph.to_undirected(as_view=True), self.build_root)
        self.boundary = sorted(v for v, d in depth.items() if d == radius)
        self.interior = sorted(v for v, d in depth.items() if d < radius)
        self.boundary_incidence = self._incidence(self.boundary)
        self.interior_incidence = self._incidence(self.interior)

    @property
    def vertices(self):
        return sorted(self.graph.nodes())

    @property
    def n_edges(self):
        return len(self.edges)

    def path(self, y):
        """Edges on the path root -> y as (edge index, +1 along / -1 against orientation)"""
        nodes = nx.shortest_path(self.graph.to_undirected(as_view=True), self.root, y)
        steps = []
        for x, w in zip(nodes, nodes[1:]):
            if (x, w) in self.edge_index:
                steps.append((self.edge_index[(x, w)], 1))
            else:
                steps.append((self.edge_index[(w, x)], -1))
        return steps

    def _incidence(self, targets):
        matrix = np.zeros((len(targets), self.n_edges), dtype=np.int64)
        for row, y in enumerate(targets):
            for edge, sign in self.path(y):
                matrix[row, edge] = sign
        return matrix

    def neighbour_degree(self, v):
        return self.graph.to_undirected(as_view=True).degree(v)

    def reroot(self, new_root):
        """Same window with paths measured from another interior vertex"""
        if new_root not in self.interior:
            raise ValueError(f"new root {new_root!r} is not an interior vertex")
        return TreeWindow(self.k, self.radius, self.graph, new_root, build_root=self.build_root)


def _check_budget(n_edges, M, budget):
    size = (2 * M + 1) ** n_edges
    if size > budget:
        raise SizeBudgetExceeded(
            f"{n_edges} edges with M={M} give {size} configurations, above the budget of {budget}"
        )
    return size


def build_window(k, R, M=None, budget=None):
    """
    Ball of radius R in the Cayley tree of branching k

    Args:
        k (int): Branching number, >= 2
        R (int): Radius, >= 1
        M (int): Optional truncation; when given the window is checked
            against the enumeration budget
        budget (int): Configuration budget, defaults to config.budget

    Returns:
        TreeWindow: Window with vertices numbered in breadth-first order
    """
    if k < 2 or R < 1:
        raise ValueError(f"build_window needs k >= 2 and R >= 1, got k={k}, R={R}")
    graph = nx.DiGraph()
    graph.add_node(0)
    frontier, next_label = [0], 1
    for depth in range(R):
        children_per = k + 1 if depth == 0 else k
        new_frontier = []
        for parent in frontier:
            for _ in range(children_per):
                graph.add_edge(parent, next_label)
                new_frontier.append(next_label)
                next_label += 1
        frontier = new_frontier
    if M is not None:
        _check_budget(graph.number_of_edges(), M, config.budget if budget is None else budget)
    return TreeWindow(k, R, graph, 0)


@dataclass(frozen=True)
class GradientMeasureTable:
    """Normalised weights of gradient configurations on a window's edges"""

    window: TreeWindow = field(repr=False)
    M: int
    pin: object
    configurations: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    Z: float

    def as_dict(self):
        return {tuple(int(v) for v in row): float(p) for row, p in zip(self.configurations, self.probabilities)}

    def to_frame(self):
        columns = [f"e{n}" for n in range(self.window.n_edges)]
        frame = pd.DataFrame(self.configurations, columns=columns)
        frame["probability"] = self.probabilities
        return frame

    def marginal(self, edges):
        """Probability table over a subset of edges, as a Series keyed by their gradients"""
        columns = [f"e{n}" for n in edges]
        return self.to_frame().groupby(columns)["probability"].sum()

    def edge_marginal(self, edge):
        return self.marginal([edge])

    def to_json(self):
        return {
            "window": {"k": self.window.k, "R": self.window.radius},
            "M": self.M,
            "pin": self.pin,
            "entries": [[[int(v) for v in row], float(p)] for row, p in zip(self.configurations, self.probabilities)],
            "Z": float(self.Z),
        }


def _configurations(n_edges, M):
    return np.indices((2 * M + 1,) * n_edges).reshape(n_edges, -1).T - M


def _weights(law, window, pins, M, boundary_values, configs):
    """Unnormalised weights summed over the pins"""
    theta = law.theta
    edge_part = np.exp(math.log(theta) * np.abs(configs).sum(axis=1))
    boundary_values = np.asarray(boundary_values, dtype=float)
    site_values = np.asarray(law.h, dtype=float)
    to_boundary = configs @ window.boundary_incidence.T
    to_interior = configs @ window.interior_incidence.T
    total = np.zeros(len(configs))
    for s in pins:
        b_part = np.prod(boundary_values[np.mod(s + to_boundary, PERIOD)], axis=1)
        s_part = np.prod(site_values[np.mod(s + to_interior, PERIOD)], axis=1)
        total += edge_part * b_part * s_part
    return total


def _table(law, window, pin, M, boundary_values, budget):
    _check_budget(window.n_edges, M, config.budget if budget is None else budget)
    configs = _configurations(window.n_edges, M)
    pins = range(PERIOD) if pin == "mixed" else [pin % PERIOD]
    weights = _weights(law, window, pins, M, boundary_values, configs)
    keep = weights >= UNDERFLOW
    if not keep.all():
        logger.debug("dropping %d underflowing configurations", int((~keep).sum()))
    configs, weights = configs[keep], weights[keep]
    Z = float(weights.sum())
    return GradientMeasureTable(
        window=window, M=M, pin=pin, configurations=configs, probabilities=weights / Z, Z=Z
    )


def pinned_measure(law, window, s, M, budget=None):
    """
    Gradient measure pinned at residue s of the root height

    Weight of a configuration: product over boundary vertices y of
    z(s + path sum to y), times theta^|zeta| over edges, times the field
    h(s + path sum) over interior vertices.
    """
    if M < 1:
        raise ValueError(f"M must be at least 1, got {M}")
    return _table(law, window, int(s) % PERIOD, M, law.z, budget)


def mixed_measure(law, window, M, budget=None):
    """Sum of the unnormalised pinned weights over the four residues, normalised"""
    if M < 1:
        raise ValueError(f"M must be at least 1, got {M}")
    return _table(law, window, "mixed", M, law.z, budget)


def _subtree_weights(law, depth, M):
    """Residue-indexed weight of a full k-ary subtree of the given depth, gradients in [-M, M]"""
    values = np.asarray(law.z, dtype=float)
    zetas = np.arange(-M, M + 1)
    kernel = law.theta ** np.abs(zetas)
    h = np.asarray(law.h, dtype=float)
    for _ in range(depth):
        summed = np.array([np.sum(kernel * values[np.mod(t + zetas, PERIOD)]) for t in range(PERIOD)])
        values = h * summed ** law.k
        values = values / values.max()
    return values


def marginal_table(law, window, s, M, inner_radius, budget=None):
    """
    Exact marginal of the window's pinned (or mixed) measure on a smaller ball

    Summing out the gradients beyond inner_radius leaves, at each inner
    boundary vertex, a residue-indexed weight computed by a subtree recursion,
    so only the inner ball is enumerated.

    Args:
        s (int or "mixed"): Pin residue, or "mixed" for the mixed measure
    """
    if not 1 <= inner_radius <= window.radius:
        raise ValueError(f"inner radius must lie in [1, {window.radius}], got {inner_radius}")
    if window.root != window.build_root:
        raise ValueError("marginal tables need a window rooted at its centre")
    inner = build_window(window.k, inner_radius)
    boundary_values = _subtree_weights(law, window.radius - inner_radius, M)
    pin = s if s == "mixed" else int(s) % PERIOD
    return _table(law, inner, pin, M, boundary_values, budget)


def compare_tables(left, right):
    """Max entrywise difference of two tables over the union of their supports"""
    if np.array_equal(left.configurations, right.configurations):
        return float(np.max(np.abs(left.probabilities - right.probabilities)))
    a, b = left.as_dict(), right.as_dict()
    return max(abs(a.get(key, 0.0) - b.get(key, 0.0)) for key in set(a) | set(b))


def _sum_and_params(solution):
    if isinstance(solution, FieldSolution):
        p = solution.params
        return solution.a + solution.b, (p.base.k, p.base.tau_float, float(p.h1), float(p.h2))
    return solution.a + solution.b, (solution.params.k, solution.params.tau_float, 1.0, 1.0)


def identifiability_check(p1, p2, tol=None):
    """
    Necessary condition for two laws to give the same gradient measure

    Two laws can only coincide when their sums agree or multiply to 4; when
    neither holds they certainly give distinct measures.

    Returns:
        str: "possibly-equal" or "distinct"
    """
    tol = config.dedupe_tol if tol is None else tol
    x1, params1 = _sum_and_params(p1)
    x2, params2 = _sum_and_params(p2)
    if not np.allclose(params1, params2, rtol=0, atol=1e-12):
        raise ValueError(f"identifiability needs matching parameters, got {params1} and {params2}")
    if abs(x1 - x2) <= tol or abs(x1 * x2 - 4) <= tol:
        return POSSIBLY_EQUAL
    return DISTINCT


def ggm_classes(solutions, tol=None):
    """
    Group solutions into classes linked by possibly-equal verdicts

    Returns:
        list: Classes as sorted lists of indices into solutions
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(len(solutions)))
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            if identifiability_check(solutions[i], solutions[j], tol) == POSSIBLY_EQUAL:
                graph.add_edge(i, j)
    return sorted(sorted(c) for c in nx.connected_components(graph))
