"""Curve models over Q and F_q, reduction, group law, point counting, and
2-Sylow shape determination.

``RationalCurve`` is a short Weierstrass model y^2 = x^3 + ax + b with
rational coefficients; ``ReducedCurve`` its reduction to F_p or F_{p^2}.
Everything is immutable and safe to share between scan workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Optional

from . import _kernels
from .numtheory import Fq, v2


class BadPrime(Exception):
    """The prime is not a good prime for the requested reduction."""


def _prime_val(n: int, q: int) -> int:
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v


@dataclass(frozen=True)
class RationalCurve:
    """y^2 = x^3 + ax + b over Q."""

    a: Fraction
    b: Fraction
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.discriminant == 0:
            raise ValueError(f"singular curve: a={self.a}, b={self.b}")

    @property
    def discriminant(self) -> Fraction:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    @property
    def j_invariant(self) -> Fraction:
        return 1728 * 4 * self.a**3 / (4 * self.a**3 + 27 * self.b**2)

    def integral_model(self) -> tuple[int, int, int]:
        """(A, B, u) with A = u^4 a, B = u^6 b integral, u minimal positive.

        The substitution (x, y) -> (u^2 x, u^3 y) identifies the two curves;
        for any prime not dividing u, torsion x-coordinate tests and
        character values agree between the models.
        """
        u = 1
        rem = self.a.denominator * self.b.denominator
        q = 2
        while rem > 1:
            if q * q > rem:
                q = rem
            if rem % q == 0:
                va = _prime_val(self.a.denominator, q)
                vb = _prime_val(self.b.denominator, q)
                u *= q ** max((va + 3) // 4, (vb + 5) // 6)
                while rem % q == 0:
                    rem //= q
            q += 1
        A = self.a * u**4
        B = self.b * u**6
        assert A.denominator == 1 and B.denominator == 1
        return int(A), int(B), u

    def __repr__(self):
        tag = f" [{self.label}]" if self.label else ""
        return f"RationalCurve(a={self.a}, b={self.b}){tag}"


@dataclass(frozen=True)
class ReducedCurve:
    """y^2 = x^3 + ax + b over F_q (q = p or p^2)."""

    field: Fq
    a: object  # canonical Fq element
    b: object

    @property
    def p(self) -> int:
        return self.field.p

    def rhs(self, x):
        F = self.field
        return F.add(F.add(F.mul(F.sqr(x), x), F.mul(self.a, x)), self.b)

    def is_on_curve(self, P) -> bool:
        if P is None:
            return True
        x, y = P
        return self.field.sqr(y) == self.rhs(x)

    def discriminant(self):
        F = self.field
        return F.mul_int(
            F.add(F.mul_int(F.mul(F.sqr(self.a), self.a), 4), F.mul_int(F.sqr(self.b), 27)),
            -16,
        )

    def j_invariant(self):
        F = self.field
        a3 = F.mul_int(F.mul(F.sqr(self.a), self.a), 4)
        den = F.add(a3, F.mul_int(F.sqr(self.b), 27))
        return F.mul(F.mul_int(a3, 1728), F.inv(den))

    def fp_coefficients(self) -> tuple[int, int]:
        """(a, b) as integers when both coefficients lie in the prime field."""
        F = self.field
        if F.degree == 1:
            return self.a, self.b
        if self.a[1] == 0 and self.b[1] == 0:
            return self.a[0], self.b[0]
        raise ValueError("curve coefficients not in the prime field")


@dataclass(frozen=True)
class TraceData:
    """Trace of Frobenius at p plus the derived point counts."""

    p: int
    ap: int

    def __post_init__(self):
        if self.ap * self.ap > 4 * self.p:
            raise ValueError(f"|a_p| exceeds the Hasse bound at p={self.p}")

    @property
    def np(self) -> int:
        return self.p + 1 - self.ap

    @property
    def np2(self) -> int:
        return (self.p + 1) ** 2 - self.ap * self.ap


@dataclass(frozen=True, order=True)
class SylowShape:
    """E(F_q)[2^oo] = Z/2^a x Z/2^b with a <= b."""

    a: int
    b: int

    def __post_init__(self):
        if not (0 <= self.a <= self.b):
            raise ValueError(f"invalid Sylow shape ({self.a}, {self.b})")

    @property
    def v(self) -> int:
        return self.a + self.b

    def as_pair(self) -> tuple[int, int]:
        return (self.a, self.b)


def reduce_curve(curve: RationalCurve, p: int, degree: int = 1) -> ReducedCurve:
    """Reduce mod p; raises BadPrime when p divides a coefficient denominator
    or the reduced discriminant vanishes."""
    if p <= 2:
        raise BadPrime(f"p = {p} is not odd")
    if curve.a.denominator % p == 0 or curve.b.denominator % p == 0:
        raise BadPrime(f"p = {p} divides a coefficient denominator")
    F = Fq(p, degree)
    a = F(curve.a)
    b = F(curve.b)
    red = ReducedCurve(F, a, b)
    if F.is_zero(red.discriminant()):
        raise BadPrime(f"discriminant vanishes mod {p}")
    return red


def is_good_prime(e1: RationalCurve, e2: RationalCurve, p: int) -> bool:
    """p > 2, divides no coefficient denominator, and neither reduced
    discriminant vanishes."""
    if p <= 2:
        return False
    for c in (e1, e2):
        if c.a.denominator % p == 0 or c.b.denominator % p == 0:
            return False
        if (4 * c.a**3 + 27 * c.b**2).numerator % p == 0:
            return False
    return True


# -- group law ----------------------------------------------------------------
# Points are None (infinity) or (x, y) pairs of canonical field elements.


def add_points(curve: ReducedCurve, P, Q):
    F = curve.field
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if F.is_zero(F.add(y1, y2)):
            return None
        num = F.add(F.mul_int(F.sqr(x1), 3), curve.a)
        lam = F.mul(num, F.inv(F.mul_int(y1, 2)))
    else:
        lam = F.mul(F.sub(y2, y1), F.inv(F.sub(x2, x1)))
    x3 = F.sub(F.sub(F.sqr(lam), x1), x2)
    y3 = F.sub(F.mul(lam, F.sub(x1, x3)), y1)
    return x3, y3


def negate_point(curve: ReducedCurve, P):
    if P is None:
        return None
    return P[0], curve.field.neg(P[1])


def scalar_mul(curve: ReducedCurve, k: int, P):
    if k < 0:
        return scalar_mul(curve, -k, negate_point(curve, P))
    R = None
    Q = P
    while k:
        if k & 1:
            R = add_points(curve, R, Q)
        Q = add_points(curve, Q, Q)
        k >>= 1
    return R


def random_point(curve: ReducedCurve, seed: int):
    """Deterministic pseudo-random affine point: sample x until the cubic is
    a square, lift with the canonical square root, then pick the sign by one
    seeded bit."""
    from ._kernels import _pure

    F = curve.field
    state = seed | 1
    while True:
        state, r0 = _pure.sm64_next(state)
        if F.degree == 1:
            x = r0 % F.p
        else:
            state, r1 = _pure.sm64_next(state)
            x = (r0 % F.p, r1 % F.p)
        rhs = curve.rhs(x)
        y = F.sqrt(rhs)
        if y is None:
            continue
        state, r = _pure.sm64_next(state)
        if r & 1:
            y = F.neg(y)
        return x, y


# -- point counting -------------------------------------------------------------


def trace_of_frobenius(
    curve: ReducedCurve, torsion: int = 1, seed: int = 1
) -> TraceData:
    """Exact trace over F_p.  Naive counting below 457, BSGS with quadratic
    twist disambiguation above."""
    if curve.field.degree != 1:
        raise ValueError("trace_of_frobenius expects a curve over F_p")
    ap = _kernels.trace_of_frobenius(curve.a, curve.b, curve.p, torsion, seed)
    return TraceData(curve.p, ap)


def is_supersingular(t: TraceData) -> bool:
    if t.p < 5:
        raise ValueError("supersingularity test requires p >= 5")
    return t.ap % t.p == 0


def group_order(curve: ReducedCurve, trace: TraceData) -> int:
    """#E(F_q) from the trace over F_p (q = p or p^2, via squaring)."""
    if curve.field.degree == 1:
        return trace.np
    return trace.np2


def sylow2_shape(
    curve: ReducedCurve, n_order: int, seed: int, npoints: int = 12
) -> SylowShape:
    """Sampled 2-Sylow shape of E(F_q), #E(F_q) = n_order.

    Samples ``npoints`` pseudo-random points, pushes them into the 2-Sylow
    subgroup, and reads off the largest observed 2-power order; the failure
    probability of the max-order estimate is at most 2^-npoints.  A guard
    cross-checks full 2-torsion against the splitting of the cubic and
    retries with fresh seeds on mismatch.
    """
    F = curve.field
    try:
        a_int, b_int = curve.fp_coefficients()
        in_prime_field = True
    except ValueError:
        in_prime_field = False

    for attempt in range(4):
        k = npoints << attempt
        s = _kernels.derive_seed(seed, attempt)
        if in_prime_field:
            sa, sb = _kernels.sylow_shape(
                a_int, b_int, curve.p, F.degree, n_order, s, k
            )
        else:
            sa, sb = _sylow_shape_generic(curve, n_order, s, k)
        shape = SylowShape(sa, sb)
        if shape.a >= 1 and not _cubic_splits(curve):
            continue  # overestimated the torsion level; resample
        return shape
    raise ArithmeticError(
        f"sylow2_shape failed the 2-torsion cross-check at p={curve.p}"
    )


def _cubic_splits(curve: ReducedCurve) -> bool:
    """Does x^3 + ax + b split completely over the curve's field?"""
    F = curve.field
    try:
        a_int, b_int = curve.fp_coefficients()
        return _kernels.poly_splits([b_int, a_int, 0, 1], curve.p, F.degree)
    except ValueError:
        from .numtheory import FqPoly, splits_completely

        return splits_completely(FqPoly(F, [curve.b, curve.a, F.zero, F.one]))


def _sylow_shape_generic(
    curve: ReducedCurve, n_order: int, seed: int, npoints: int
) -> tuple[int, int]:
    """Generic-field sampling, for curves with coefficients outside F_p."""
    v = v2(n_order) if n_order % 2 == 0 else 0
    if n_order % 2:
        return (0, 0)
    n_odd = n_order >> v
    b_max = 0
    total = 0
    while total < npoints or (v - b_max > b_max and total < 4 * npoints):
        total += 1
        P = random_point(curve, _kernels.derive_seed(seed, total))
        S = scalar_mul(curve, n_odd, P)
        e = 0
        while S is not None:
            S = add_points(curve, S, S)
            e += 1
            if e > v:
                raise ArithmeticError("2-power order exceeds v2(N): wrong order")
        b_max = max(b_max, e)
        if b_max == v:
            break
    if v - b_max > b_max:
        raise ArithmeticError("sampled 2-Sylow shape inconsistent")
    return (v - b_max, b_max)
