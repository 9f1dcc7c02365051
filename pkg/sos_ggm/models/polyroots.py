"""
Univariate polynomials with exact-rational or float coefficients, positive-root
isolation, and the closed-form cubic and quartic solvers.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import zip_longest

import numpy as np
import sympy as sp

from sos_ggm.config import config

logger = logging.getLogger(__name__)

_X = sp.Symbol("x")


class DegeneratePolynomialError(ValueError):
    """Raised when an operation needs a nonzero polynomial"""


def is_exact_number(value):
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def to_fraction(value):
    """
    Exact rational image of a number

    Floats convert losslessly (binary fractions); decimal strings parse exactly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    return Fraction(float(value))


@dataclass(frozen=True)
class RealPolynomial:
    """
    Polynomial stored as ascending coefficients

    Exact mode holds Fractions only; any float coefficient switches the whole
    polynomial to float mode.
    """

    coeffs: tuple
    exact: bool

    @classmethod
    def from_coeffs(cls, coeffs):
        coeffs = list(coeffs) or [0]
        exact = all(is_exact_number(c) for c in coeffs)
        if exact:
            coeffs = [Fraction(c) for c in coeffs]
        else:
            coeffs = [float(c) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        return cls(tuple(coeffs), exact)

    @classmethod
    def constant(cls, value):
        return cls.from_coeffs([value])

    @classmethod
    def monomial(cls, coef, power):
        zero = Fraction(0) if is_exact_number(coef) else 0.0
        return cls.from_coeffs([zero] * power + [coef])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, x):
        return evaluate(self, x)

    def __neg__(self):
        return RealPolynomial.from_coeffs([-c for c in self.coeffs])

    def __add__(self, other):
        other = _coerce(other)
        return RealPolynomial.from_coeffs(
            [p + q for p, q in zip_longest(self.coeffs, other.coeffs, fillvalue=0)]
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        if self.exact and other.exact:
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, p in enumerate(self.coeffs):
                if p == 0:
                    continue
                for j, q in enumerate(other.coeffs):
                    out[i + j] += p * q
            return RealPolynomial.from_coeffs(out)
        return RealPolynomial.from_coeffs(
            np.convolve(np.asarray(self.coeffs, dtype=float), np.asarray(other.coeffs, dtype=float)).tolist()
        )

    __rmul__ = __mul__

    def __pow__(self, power):
        if not isinstance(power, int) or power < 0:
            raise ValueError(f"Unsupported polynomial power: {power!r}")
        result = RealPolynomial.constant(Fraction(1) if self.exact else 1.0)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def derivative(self):
        return RealPolynomial.from_coeffs([i * c for i, c in enumerate(self.coeffs)][1:])

    def to_float(self):
        return RealPolynomial.from_coeffs([float(c) for c in self.coeffs])

    def to_exact(self):
        return RealPolynomial.from_coeffs([to_fraction(c) for c in self.coeffs])

    def to_sympy(self):
        """Exact rational image as a sympy Poly over QQ"""
        desc = [sp.Rational(c.numerator, c.denominator) for c in map(to_fraction, reversed(self.coeffs))]
        return sp.Poly(desc, _X, domain=sp.QQ)

    def abs_sum(self):
        return float(sum(abs(c) for c in self.coeffs))

    def scaled_magnitude(self, x):
        """Sum of |c_i| |x|^i, the natural scale of p(x) under rounding"""
        ax = abs(float(x))
        return float(sum(abs(float(c)) * ax ** i for i, c in enumerate(self.coeffs)))


def _coerce(value):
    if isinstance(value, RealPolynomial):
        return value
    return RealPolynomial.constant(value)


def evaluate(p, x):
    """
    Horner evaluation

    Args:
        p (RealPolynomial): Polynomial
        x: Point, exact when both p and x are exact

    Returns:
        Fraction or float: p(x)
    """
    if p.exact and is_exact_number(x):
        acc = Fraction(0)
        x = Fraction(x)
    else:
        acc = 0.0
        x = float(x)
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def divide_exact(num, den):
    """
    Long division in exact arithmetic

    Args:
        num (RealPolynomial): Dividend, exact mode
        den (RealPolynomial): Divisor, exact mode and nonzero

    Returns:
        tuple: (quotient, remainder) with num = den * quotient + remainder
    """
    if den.is_zero:
        raise ZeroDivisionError("polynomial division by the zero polynomial")
    if not (num.exact and den.exact):
        raise ValueError("divide_exact needs exact-mode polynomials")
    if num.is_zero or num.degree < den.degree:
        return RealPolynomial.constant(Fraction(0)), num

    rem = list(num.coeffs)
    lead = den.leading
    shift_max = num.degree - den.degree
    quot = [Fraction(0)] * (shift_max + 1)
    for shift in range(shift_max, -1, -1):
        c = rem[shift + den.degree] / lead
        quot[shift] = c
        if c:
            for i, d in enumerate(den.coeffs):
                rem[shift + i] -= c * d
    remainder = rem[: den.degree] or [Fraction(0)]
    return RealPolynomial.from_coeffs(quot), RealPolynomial.from_coeffs(remainder)


def descartes_bound(p):
    """Sign changes among the nonzero coefficients"""
    signs = [1 if c > 0 else -1 for c in p.coeffs if c != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


@dataclass(frozen=True)
class IsolatedRoot:
    lo: Fraction
    hi: Fraction
    value: float
    multiplicity: int = 1
    certificate: tuple = (0, 0)
    merged: bool = False

    @property
    def width(self):
        return float(self.hi - self.lo)


@dataclass(frozen=True)
class RootSet:
    roots: tuple

    @property
    def count(self):
        return len(self.roots)

    @property
    def values(self):
        return [r.value for r in self.roots]

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _sign(value):
    return int(sp.sign(value))


def _guarded_newton(coeffs, lo, hi):
    """One Newton step from the midpoint, kept only if it stays in [lo, hi]"""
    lo_f, hi_f = float(lo), float(hi)
    mid = 0.5 * (lo_f + hi_f)
    value = np.polynomial.polynomial.polyval(mid, coeffs)
    slope = np.polynomial.polynomial.polyval(mid, np.polynomial.polynomial.polyder(coeffs))
    if slope == 0 or not np.isfinite(slope):
        return mid
    step = mid - value / slope
    if lo_f <= step <= hi_f:
        return float(step)
    return mid


def isolate_positive_roots(p, tol=None):
    """
    Isolate and refine every positive real root of p

    Isolation runs on the exact rational image of the coefficients after a
    square-free decomposition, so multiplicities come from the decomposition.
    Float-mode polynomials additionally get clusters within 100*tol merged.

    Args:
        p (RealPolynomial): Nonzero polynomial
        tol (float): Target interval width, defaults to config.tol

    Returns:
        RootSet: Roots in increasing order
    """
    if p.is_zero:
        raise DegeneratePolynomialError("cannot isolate the roots of the zero polynomial")
    tol = config.tol if tol is None else tol
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    width_q = to_fraction(min(tol, config.refine_width))
    width = sp.Rational(width_q.numerator, width_q.denominator)

    poly = p.to_sympy()
    if poly.degree() <= 0:
        return RootSet(())

    _, factors = poly.sqf_list()
    found = []
    for factor, multiplicity in factors:
        if factor.degree() <= 0:
            continue
        asc = np.array([float(c) for c in reversed(factor.all_coeffs())])
        for lo, hi in factor.intervals(inf=0, sqf=True):
            if hi <= 0:
                continue
            if lo != hi:
                lo, hi = factor.refine_root(lo, hi, eps=width)
                value = _guarded_newton(asc, lo, hi)
            else:
                value = float(lo)
            certificate = (_sign(factor.eval(lo)), _sign(factor.eval(hi)))
            found.append(
                IsolatedRoot(
                    lo=to_fraction(lo),
                    hi=to_fraction(hi),
                    value=value,
                    multiplicity=int(multiplicity),
                    certificate=certificate,
                )
            )
    found.sort(key=lambda r: r.value)

    if not p.exact:
        found = _merge_clusters(found, 100 * tol)
    logger.debug("isolated %d positive roots of a degree-%d polynomial", len(found), p.degree)
    return RootSet(tuple(found))


def _merge_clusters(roots, radius):
    merged = []
    for root in roots:
        if merged and root.value - merged[-1].value < radius:
            prev = merged[-1]
            multiplicity = prev.multiplicity + root.multiplicity
            merged[-1] = IsolatedRoot(
                lo=min(prev.lo, root.lo),
                hi=max(prev.hi, root.hi),
                value=(prev.value * prev.multiplicity + root.value * root.multiplicity) / multiplicity,
                multiplicity=multiplicity,
                certificate=(prev.certificate[0], root.certificate[1]),
                merged=True,
            )
            logger.info("merged near-coincident float roots at %.17g", merged[-1].value)
        else:
            merged.append(root)
    return merged


@dataclass(frozen=True)
class CubicRoot:
    value: float
    multiplicity: int = 1


@dataclass(frozen=True)
class CubicSolution:
    """Depressed-form data of a real cubic and its real roots"""

    discriminant: float
    p: float
    q: float
    shift: float
    roots: tuple

    @property
    def case(self):
        if self.discriminant > 0:
            return "one-real"
        if self.discriminant == 0:
            return "repeated"
        return "three-real"

    @property
    def values(self):
        return [r.value for r in self.roots]


_CUBIC_ZERO_RTOL = 1e-12


def solve_cubic(a3, a2, a1, a0):
    """
    Real roots of a3 x^3 + a2 x^2 + a1 x + a0 by the discriminant case split

    With x = t + shift the cubic becomes t^3 + p t + q and the discriminant is
    q^2/4 + p^3/27. Exact inputs give an exact discriminant sign; float inputs
    treat a discriminant within a relative 1e-12 of zero as zero.

    Args:
        a3, a2, a1, a0: Coefficients, a3 nonzero

    Returns:
        CubicSolution: One root (positive discriminant), a simple and a double
            root (zero), or three simple roots (negative)
    """
    if a3 == 0:
        raise ValueError("leading coefficient is zero: not a cubic")
    if all(is_exact_number(c) for c in (a3, a2, a1, a0)):
        a3, a2, a1, a0 = (Fraction(c) for c in (a3, a2, a1, a0))
    else:
        a3, a2, a1, a0 = (float(c) for c in (a3, a2, a1, a0))

    alpha, beta, gamma = a2 / a3, a1 / a3, a0 / a3
    p = beta - alpha * alpha / 3
    q = 2 * alpha ** 3 / 27 - alpha * beta / 3 + gamma
    disc = q * q / 4 + p ** 3 / 27
    shift = float(-alpha / 3)

    if not isinstance(disc, Fraction):
        scale = q * q / 4 + abs(p) ** 3 / 27
        if abs(disc) <= _CUBIC_ZERO_RTOL * scale:
            disc = 0.0

    pf, qf, df = float(p), float(q), float(disc)
    if disc > 0:
        root = np.cbrt(-qf / 2 + math.sqrt(df)) + np.cbrt(-qf / 2 - math.sqrt(df))
        roots = (CubicRoot(float(root) + shift),)
    elif disc == 0:
        if p == 0:
            roots = (CubicRoot(shift, 3),)
        else:
            u = float(np.cbrt(qf / 2))
            roots = (CubicRoot(-2 * u + shift), CubicRoot(u + shift, 2))
    else:
        radius = math.sqrt(-pf)
        phase = math.asin(max(-1.0, min(1.0, 3 * math.sqrt(3) * qf / (2 * radius ** 3)))) / 3
        amp = 2 / math.sqrt(3) * radius
        roots = (
            CubicRoot(amp * math.sin(phase) + shift),
            CubicRoot(-amp * math.sin(phase + math.pi / 3) + shift),
            CubicRoot(amp * math.cos(phase + math.pi / 6) + shift),
        )
    return CubicSolution(discriminant=df, p=pf, q=qf, shift=shift, roots=roots)


def quartic_polynomial(tau):
    """x^4 - tau x^3 + tau x + 2, the sum equation of unequal k=3 pairs"""
    return RealPolynomial.from_coeffs([2, tau, 0, -tau, 1])


@dataclass(frozen=True)
class QuarticSolution:
    tau: float
    c: float
    S: float
    T: float
    D: float
    F: float
    R: float
    radicand: float
    roots: tuple
    first_factor_definite: bool
    first_factor_coeffs: tuple

    @property
    def first_factor_has_positive_root(self):
        return descartes_bound(RealPolynomial.from_coeffs(self.first_factor_coeffs)) > 0


def solve_quartic_ferrari(tau):
    """
    Real roots of x^4 - tau x^3 + tau x + 2 through a Ferrari split

    The resolvent z^3 - (tau^2 + 8) z - 3 tau^2 supplies c; the quartic then
    factors as
        (x^2 + (A - tau/2) x + c/2 - B)(x^2 - (A + tau/2) x + c/2 + B)
    with A = sqrt(tau^2/4 + c) and B = sqrt(c^2/4 - 2). Only the second factor
    can carry positive roots since the first has positive coefficients.

    Args:
        tau (float): Coupling parameter, > 2

    Returns:
        QuarticSolution: Roots (x1 > x2) of the second factor, empty when its
            radicand is negative
    """
    tau = float(tau)
    if tau <= 2:
        raise ValueError(f"tau must exceed 2, got {tau}")

    F = -(tau ** 2 + 8) / 3
    R = 3 * tau ** 2 / 2
    D = F ** 3 + R ** 2
    resolvent = solve_cubic(1.0, 0.0, -(tau ** 2 + 8), -3 * tau ** 2)
    c = max(resolvent.values)
    if D > 0:
        S = float(np.cbrt(R + math.sqrt(D)))
        T = float(np.cbrt(R - math.sqrt(D)))
        c = S + T
    else:
        S = T = float("nan")

    A = math.sqrt(tau ** 2 / 4 + c)
    B = math.sqrt(max(c * c / 4 - 2, 0.0))
    first = (c / 2 - B, A - tau / 2, 1.0)
    first_disc = first[1] ** 2 - 4 * first[0]

    beta = A + tau / 2
    radicand = beta * beta - 4 * (c / 2 + B)
    if radicand < 0:
        roots = ()
        logger.debug("quartic at tau=%.17g has no real roots in its second factor", tau)
    else:
        r = math.sqrt(radicand)
        roots = ((beta + r) / 2, (beta - r) / 2)
    return QuarticSolution(
        tau=tau,
        c=c,
        S=S,
        T=T,
        D=D,
        F=F,
        R=R,
        radicand=radicand,
        roots=roots,
        first_factor_definite=first_disc < 0,
        first_factor_coeffs=first,
    )
