"""
Zero-field 4-periodic boundary laws of the SOS model.

A law with residues (u0, u1, u2, u3) = (1, b, 1, a) solves the boundary-law
equation iff (a, b) solves

    (a + b - tau) b^k + tau b - 2 = 0
    (a + b - tau) a^k + tau a - 2 = 0

The a = b family is the positive roots of Q(a) = 2a^{k+1} - tau a^k + tau a - 2.
The a != b family comes from the roots of U, where P = -Q U and P = 0 is the
polynomial form of a = f(f(a)).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from sos_ggm.config import config
from sos_ggm.models.polyroots import (
    RealPolynomial,
    is_exact_number,
    isolate_positive_roots,
    solve_quartic_ferrari,
    to_fraction,
)

logger = logging.getLogger(__name__)

EQUAL = "equal"
UNEQUAL = "unequal"


@dataclass(frozen=True)
class ModelParams:
    """
    Branching number and coupling of the SOS model

    tau = theta + 1/theta with theta = exp(-J beta) < 1. tau keeps its exact
    rational value when given as int or Fraction.
    """

    k: int
    tau: object
    beta_J: float = None
    theta: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool) or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if not self.tau > 2:
            raise ValueError(f"tau must exceed 2, got {self.tau}")
        tau = float(self.tau)
        # smaller branch, written to avoid cancellation at large tau
        object.__setattr__(self, "theta", 2.0 / (tau + math.sqrt(tau * tau - 4.0)))

    @classmethod
    def from_theta(cls, k, theta):
        if not 0 < theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {theta}")
        return cls(k, theta + 1.0 / theta, beta_J=-math.log(theta))

    @classmethod
    def from_beta_j(cls, k, beta_J):
        if beta_J <= 0:
            raise ValueError(f"beta*J must be positive, got {beta_J}")
        theta = math.exp(-beta_J)
        return cls(k, theta + 1.0 / theta, beta_J=beta_J)

    @property
    def exact(self):
        return is_exact_number(self.tau)

    @property
    def tau_float(self):
        return float(self.tau)

    def as_exact(self):
        return self if self.exact else replace(self, tau=to_fraction(self.tau))


def system_residuals(k, tau, a, b, h1=1.0, h2=1.0):
    """Left-hand sides of the periodic system; h1 = h2 = 1 is the zero-field case"""
    tau, a, b = float(tau), float(a), float(b)
    s = a + b - tau
    return (s * h2 * b ** k + tau * b - 2.0, s * h1 * a ** k + tau * a - 2.0)


def residual_scale(k, tau, a, b, h1=1.0, h2=1.0):
    """Magnitude of the largest term in the system, used to scale residual tolerances"""
    tau = float(tau)
    m = max(float(a), float(b))
    return 1.0 + abs(float(a) + float(b) - tau) * max(h1, h2) * m ** k + tau * m


def system_jacobian(k, tau, a, b, h1=1.0, h2=1.0):
    """Partial derivatives of system_residuals, rows by equation, columns (a, b)"""
    s = a + b - tau
    return np.array(
        [
            [h2 * b ** k, h2 * b ** k + k * s * h2 * b ** (k - 1) + tau],
            [h1 * a ** k + k * s * h1 * a ** (k - 1) + tau, h1 * a ** k],
        ]
    )


def polish_pair(k, tau, a, b, h1=1.0, h2=1.0, steps=8):
    """
    Newton polishing of a root of the periodic system

    A step is kept only when it lowers the residual norm and keeps both
    coordinates positive.
    """
    tau = float(tau)
    current = np.array([float(a), float(b)])
    norm = np.abs(system_residuals(k, tau, *current, h1, h2)).max()
    for _ in range(steps):
        if norm == 0.0:
            break
        try:
            delta = np.linalg.solve(
                system_jacobian(k, tau, current[0], current[1], h1, h2),
                np.array(system_residuals(k, tau, *current, h1, h2)),
            )
        except np.linalg.LinAlgError:
            break
        candidate = current - delta
        if np.any(candidate <= 0):
            break
        cand_norm = np.abs(system_residuals(k, tau, *candidate, h1, h2)).max()
        if not cand_norm < norm:
            break
        current, norm = candidate, cand_norm
    return float(current[0]), float(current[1])


@dataclass(frozen=True)
class BoundaryLawPair:
    """A positive solution (a, b) of the zero-field system"""

    a: float
    b: float
    params: ModelParams
    residuals: tuple
    kind: str

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"boundary law entries must be positive, got a={self.a}, b={self.b}")
        if self.kind == EQUAL and self.a != self.b:
            raise ValueError("an equal pair needs a == b")

    @property
    def max_residual(self):
        return max(abs(r) for r in self.residuals)

    @property
    def total(self):
        return self.a + self.b

    def swapped(self):
        return replace(self, a=self.b, b=self.a, residuals=self.residuals[::-1])

    @classmethod
    def build(cls, params, a, b):
        kind = EQUAL if a == b else UNEQUAL
        return cls(a=a, b=b, params=params, residuals=system_residuals(params.k, params.tau, a, b), kind=kind)


@dataclass(frozen=True)
class CriticalValues:
    """
    Thresholds in tau for a branching number k

    tau_cr_1 and tau_cr_2 are only defined for k = 3: the birth of the two
    positive roots of the k=3 sum quartic, and the point where the smaller of
    them stops carrying a valid pair (a second time, after tau = 3).
    """

    k: int
    tau_c: Fraction
    tau_1: Fraction
    tau_2: float
    L_star: float
    tau_cr_1: float = None
    tau_cr_2: float = None

    @property
    def k3_breakpoints(self):
        if self.k != 3:
            return ()
        return (self.tau_cr_1, 3.0, 4.0, self.tau_cr_2)


def build_Q(params):
    """2a^{k+1} - tau a^k + tau a - 2"""
    k, tau = params.k, params.tau
    coeffs = [0] * (k + 2)
    coeffs[0], coeffs[1], coeffs[k], coeffs[k + 1] = -2, tau, -tau, 2
    return RealPolynomial.from_coeffs(coeffs)


def build_reduced(params):
    """Q / (a - 1) = 2a^k + (2 - tau)(a^{k-1} + ... + a) + 2"""
    k, tau = params.k, params.tau
    return RealPolynomial.from_coeffs([2] + [2 - tau] * (k - 1) + [2])


def _a_power(n, exact):
    return RealPolynomial.monomial(Fraction(1) if exact else 1.0, n)


def build_U(params):
    """
    U(a) = tau a^{k^2} - (2 - tau a) sum_{j<k} (-1)^{k-j} C(k,j) a^{(k+1)j} Q^{k-j-1}

    Built in exact arithmetic when tau is rational. Its degree is at most k^2;
    for k = 3 the top coefficient cancels and U is the degree-8 polynomial g.
    """
    k, tau = params.k, params.tau
    Q = build_Q(params)
    exact = params.exact
    total = RealPolynomial.constant(Fraction(0) if exact else 0.0)
    for j in range(k):
        sign = -1 if (k - j) % 2 else 1
        total = total + sign * math.comb(k, j) * _a_power((k + 1) * j, exact) * Q ** (k - j - 1)
    two_minus = RealPolynomial.from_coeffs([2, -tau])
    return tau * _a_power(k * k, exact) - two_minus * total


def build_P(params):
    """The polynomial form of a = f(f(a)); equals -Q U"""
    k, tau = params.k, params.tau
    exact = params.exact
    a = lambda n: _a_power(n, exact)  # noqa: E731
    two_minus = RealPolynomial.from_coeffs([2, -tau])
    inner = two_minus + tau * a(k) - a(k + 1)
    tail = tau * a(k + 1) + (2 - tau * tau) * a(k) + (tau * tau) * a(1) - 2 * tau
    return two_minus * inner ** k - a(k * k) * tail


def build_g(tau):
    """The k=3 numerator written out coefficient by coefficient"""
    t2 = tau * tau
    return RealPolynomial.from_coeffs(
        [
            8,
            -12 * tau,
            6 * t2,
            -(t2 - 8) * tau,
            -4 * (2 * t2 + 1),
            2 * (t2 + 2) * tau,
            t2,
            -(t2 + 2) * tau,
            t2 + 2,
        ]
    )


def fixed_point_map(a, tau):
    """
    k=3 fixed-point form a = Y(a, tau) of g(a, tau) = 0

    The denominator is positive for a > 0, so the positive fixed points of Y
    are exactly the positive roots of g.
    """
    a, tau = float(a), float(tau)
    t2 = tau * tau
    num = (t2 + 2) * tau * a ** 7 + 4 * (2 * t2 + 1) * a ** 4 + (t2 - 8) * tau * a ** 3 + 13 * tau * a - 8
    den = (t2 + 2) * a ** 7 + t2 * a ** 5 + 2 * (t2 + 2) * tau * a ** 4 + 6 * t2 * a + tau
    return num / den


def psi(params, a):
    """tau as a function of the non-unit a = b root: 2 + 2(a^k + 1)/(a^{k-1} + ... + a)"""
    if a <= 0:
        raise ValueError(f"psi needs a > 0, got {a}")
    k = params.k
    return 2 + 2 * (a ** k + 1) / sum(a ** j for j in range(1, k))


def f_map(params, b):
    """a = f(b) = tau - b + (2 - tau b) b^{-k}; may be non-positive"""
    if b <= 0:
        raise ValueError(f"f_map needs b > 0, got {b}")
    tau = params.tau_float
    b = float(b)
    return tau - b + (2 - tau * b) * b ** (-params.k)


def shared_root_polynomial(k):
    """(k-1)^k t^{k+1} - (k-1) 2^{k-1} k^k t^2 + (2k)^{k+1}, vanishing where Q and U share a root"""
    coeffs = [0] * (k + 2)
    coeffs[0] = (2 * k) ** (k + 1)
    coeffs[2] = -(k - 1) * 2 ** (k - 1) * k ** k
    coeffs[k + 1] = (k - 1) ** k
    return RealPolynomial.from_coeffs(coeffs)


def shared_root_check(params, rtol=1e-9):
    """
    The common root 2k/(tau(k-1)) of Q and U when tau solves the shared-root equation

    Returns:
        float or None: The shared root, None when Q and U are coprime at this tau
    """
    k, tau = params.k, params.tau
    poly = shared_root_polynomial(k)
    value = poly(tau)
    if params.exact:
        hit = value == 0
    else:
        hit = abs(value) <= rtol * poly.scaled_magnitude(tau)
    if not hit:
        return None
    a_hat = 2 * k / (float(tau) * (k - 1))
    logger.debug("Q and U share the root %.17g at tau=%.17g", a_hat, float(tau))
    return a_hat


def _tau_2_equation(k):
    """The cubic-free factor in L = (k-1) tau - 2k of the shared-root equation"""
    coeffs = [0] * (k + 1)
    for j in range(k - 1):
        coeffs[k - j] += math.comb(k + 1, j) * (2 * k) ** j
    coeffs[1] += (k - 1) * 2 ** (k - 2) * k ** k
    coeffs[0] = -(k - 1) * (2 * k) ** k
    return RealPolynomial.from_coeffs([Fraction(c) for c in coeffs])


def _k3_quartic_birth():
    """tau where the k=3 sum quartic first gets (a double) positive root"""
    cubic = RealPolynomial.from_coeffs([2, -6, -3, 1])
    y = max(isolate_positive_roots(cubic).values)
    x = math.sqrt(y)
    return 4 * x ** 3 / (3 * x * x - 1)


def critical_values(k):
    """
    Closed-form and root-isolated thresholds for branching number k

    Args:
        k (int): Branching number, >= 2

    Returns:
        CriticalValues: tau_c and tau_1 exactly, tau_2 from the unique positive
            root of its L-equation, and the k=3 breakpoints
    """
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    tau_c = Fraction(2 * (k + 1), k - 1)
    tau_1 = Fraction(2 * k, k - 1)
    roots = isolate_positive_roots(_tau_2_equation(k))
    if roots.count != 1:
        raise ArithmeticError(f"expected one positive root of the tau_2 equation, found {roots.count}")
    L_star = roots.values[0]
    tau_2 = (L_star + 2 * k) / (k - 1)
    extra = {}
    if k == 3:
        extra = {"tau_cr_1": _k3_quartic_birth(), "tau_cr_2": 3 * math.sqrt(2)}
    return CriticalValues(k=k, tau_c=tau_c, tau_1=tau_1, tau_2=tau_2, L_star=L_star, **extra)


def _accept(params, a, b, tol):
    """Polish and residual-check a candidate unequal pair; None when rejected"""
    k, tau = params.k, params.tau_float
    a, b = polish_pair(k, tau, a, b)
    if min(a, b) <= tol:
        return None
    if abs(a - b) < config.diagonal_tol:
        logger.debug("candidate (%.17g, %.17g) collapsed onto the a=b family", a, b)
        return None
    residuals = system_residuals(k, tau, a, b)
    if max(abs(r) for r in residuals) > config.residual_tol * residual_scale(k, tau, a, b):
        logger.debug("rejected (%.17g, %.17g): residuals %r", a, b, residuals)
        return None
    if a > b:
        a, b = b, a
    return BoundaryLawPair.build(params, a, b)


def _unique(pairs, tol):
    kept = []
    for pair in pairs:
        if not any(abs(pair.a - p.a) < tol and abs(pair.b - p.b) < tol for p in kept):
            kept.append(pair)
    return kept


def solve_equal(params, tol=None):
    """a = b solutions from the positive roots of Q"""
    tol = config.tol if tol is None else tol
    roots = isolate_positive_roots(build_Q(params.as_exact()), tol)
    return [BoundaryLawPair.build(params, r.value, r.value) for r in roots]


def solve_generic(params, tol=None):
    """
    All positive solutions for any k through the Q / U root sets

    Args:
        params (ModelParams): Model parameters
        tol (float): Root tolerance, defaults to config.tol

    Returns:
        list: Equal pairs first, then unordered unequal pairs with a < b
    """
    tol = config.tol if tol is None else tol
    exact = params.as_exact()
    equal = solve_equal(params, tol)
    q_values = [p.a for p in equal]

    unequal = []
    for root in isolate_positive_roots(build_U(exact), tol):
        a = root.value
        if any(abs(a - q) < config.dedupe_tol for q in q_values):
            continue
        b = f_map(params, a)
        if b <= tol:
            continue
        pair = _accept(params, a, b, tol)
        if pair is not None:
            unequal.append(pair)
    unequal = _unique(unequal, config.dedupe_tol * 10)
    unequal.sort(key=lambda p: (p.a, p.b))
    logger.debug("k=%d tau=%.17g: %d equal, %d unequal", params.k, params.tau_float, len(equal), len(unequal))
    return equal + unequal


def solve_k3(tau, tol=None):
    """
    Unequal k=3 pairs through the sum x = a + b

    x solves x^4 - tau x^3 + tau x + 2 = 0, the product is
    ab = x^2 + tau/(x - tau), and a, b are the roots of t^2 - x t + ab.

    Args:
        tau (float): Coupling, > 2
        tol (float): Positivity tolerance, defaults to config.tol

    Returns:
        list: Unordered unequal pairs with a < b
    """
    tol = config.tol if tol is None else tol
    params = ModelParams(3, tau)
    tau = params.tau_float
    quartic = solve_quartic_ferrari(tau)
    pairs = []
    for x in quartic.roots:
        if x <= 0 or x >= tau:
            continue
        product = x * x + tau / (x - tau)
        disc = x * x - 4 * product
        if product <= 0 or disc <= 0:
            continue
        root = math.sqrt(disc)
        pair = _accept(params, (x - root) / 2, (x + root) / 2, tol)
        if pair is not None:
            pairs.append(pair)
    pairs = _unique(pairs, config.dedupe_tol * 10)
    pairs.sort(key=lambda p: (p.a, p.b))
    return pairs


def solve_k2(tau, tol=None):
    """
    Unequal k=2 pairs in closed form

    The sum x = a + b solves x^2 - tau x + tau = 0 and ab = 2x/tau, so a
    pair exists for each sum root with x >= 8/tau.
    """
    tol = config.tol if tol is None else tol
    params = ModelParams(2, tau)
    tau = params.tau_float
    disc_x = tau * tau - 4 * tau
    if disc_x < 0:
        return []
    pairs = []
    for x in ((tau - math.sqrt(disc_x)) / 2, (tau + math.sqrt(disc_x)) / 2):
        disc = x * x - 8 * x / tau
        if disc <= 0:
            continue
        root = math.sqrt(disc)
        pair = _accept(params, (x - root) / 2, (x + root) / 2, tol)
        if pair is not None:
            pairs.append(pair)
    pairs = _unique(pairs, config.dedupe_tol * 10)
    pairs.sort(key=lambda p: (p.a, p.b))
    return pairs


def solve_zero_field(params, method="auto", tol=None):
    """
    Every positive solution, equal pairs first

    Args:
        params (ModelParams): Model parameters
        method (str): "auto" (closed forms for k=2, 3), "generic" or "closed"

    Returns:
        list: BoundaryLawPair values
    """
    if method == "generic" or (method == "auto" and params.k not in (2, 3)):
        return solve_generic(params, tol)
    if method not in ("auto", "closed"):
        raise ValueError(f"Unsupported solve method: {method}")
    if params.k == 2:
        unequal = solve_k2(params.tau, tol)
    elif params.k == 3:
        unequal = solve_k3(params.tau, tol)
    else:
        raise ValueError(f"No closed-form solver for k={params.k}")
    return solve_equal(params, tol) + [replace(p, params=params) for p in unequal]


def count_solutions(params):
    """Distinct positive solutions, counting (a, b) and (b, a) once"""
    return len(solve_zero_field(params))
