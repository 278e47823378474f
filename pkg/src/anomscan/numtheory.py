"""Exact and modular arithmetic primitives.

Provides prime iteration, arithmetic in F_p and F_{p^2}, dense polynomial
arithmetic over those fields, square roots, complete-splitting tests, and the
small integer helpers (2-adic valuation, squarefree part) used everywhere
else.  All values are immutable after construction and safe to share between
workers.

Field elements are plain Python values: an ``int`` in ``[0, p)`` for degree 1,
a pair ``(c0, c1)`` for degree 2 meaning ``c0 + c1*s`` with ``s**2`` equal to
the field's nonresidue.  The :class:`Fq` context owns all operations.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator, Optional

Rational = Fraction

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class NoRoot(Exception):
    """Raised when a square root is requested for a nonresidue."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond the 64-bit range."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def sieve_primes(limit: int) -> list[int]:
    """All primes < limit by a byte sieve."""
    if limit <= 2:
        return []
    sieve = bytearray([1]) * limit
    sieve[0] = sieve[1] = 0
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i in range(limit) if sieve[i]]


def prime_stream(start: int = 2) -> Iterator[int]:
    """Yield primes >= start in increasing order, without omissions.

    Segmented sieve; unbounded.
    """
    if start < 2:
        raise ValueError("start must be >= 2")
    seg = 1 << 16
    base = sieve_primes(1 << 16)
    for p in base:
        if p >= start:
            yield p
    lo = max(start, base[-1] + 1)
    lo = max(lo, 1 << 16)
    while True:
        hi = lo + seg
        # extend base primes if needed
        while base[-1] * base[-1] < hi:
            more = sieve_primes(base[-1] * 4)
            base = more
        block = bytearray([1]) * seg
        for p in base:
            if p * p >= hi:
                break
            first = max(p * p, ((lo + p - 1) // p) * p)
            block[first - lo :: p] = bytearray(len(block[first - lo :: p]))
        for i in range(seg):
            if block[i]:
                yield lo + i
        lo = hi


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) in {-1, 0, 1}.  p must be an odd prime."""
    if p <= 2 or not is_prime(p):
        raise ValueError(f"p = {p} is not an odd prime")
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def v2(n: int) -> int:
    """Exponent of 2 in n (n nonzero)."""
    if n == 0:
        raise ValueError("v2(0) is undefined")
    return (n & -n).bit_length() - 1


def squarefree_part(n: int) -> int:
    """n divided by its largest square divisor, sign preserved."""
    if n == 0:
        raise ValueError("squarefree_part(0) is undefined")
    sign = -1 if n < 0 else 1
    n = abs(n)
    out = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            if e % 2:
                out *= d
        d += 1 if d == 2 else 2
    return sign * out * n


def smallest_nonresidue(p: int) -> int:
    """Smallest positive quadratic nonresidue mod p."""
    for n in itertools.count(2):
        if pow(n, (p - 1) // 2, p) == p - 1:
            return n
    raise AssertionError("unreachable")


class Fq:
    """Context for F_p (degree 1) or F_{p^2} = F_p[s]/(s^2 - n) (degree 2).

    n is the smallest positive quadratic nonresidue mod p, so encodings are
    deterministic and reproducible across runs and backends.
    """

    __slots__ = ("p", "degree", "nonres", "order", "zero", "one", "_ts_z")

    def __init__(self, p: int, degree: int = 1):
        if degree not in (1, 2):
            raise ValueError("extension degree must be 1 or 2")
        if p <= 2 or not is_prime(p):
            raise ValueError(f"p = {p} is not an odd prime")
        self.p = p
        self.degree = degree
        self.order = p**degree
        if degree == 1:
            self.nonres = None
            self.zero = 0
            self.one = 1
        else:
            self.nonres = smallest_nonresidue(p)
            self.zero = (0, 0)
            self.one = (1, 0)
        self._ts_z = None  # cached nonsquare for Tonelli-Shanks

    # -- construction / conversion ------------------------------------

    def __call__(self, value):
        """Coerce an int, Fraction, or pair into a canonical element."""
        p = self.p
        if self.degree == 1:
            if isinstance(value, Fraction):
                return value.numerator % p * pow(value.denominator, -1, p) % p
            return value % p
        if isinstance(value, tuple):
            c0, c1 = value
            return (c0 % p, c1 % p)
        if isinstance(value, Fraction):
            return (value.numerator % p * pow(value.denominator, -1, p) % p, 0)
        return (value % p, 0)

    def __eq__(self, other):
        return (
            isinstance(other, Fq)
            and self.p == other.p
            and self.degree == other.degree
        )

    def __hash__(self):
        return hash((self.p, self.degree))

    def __repr__(self):
        return f"Fq({self.p}, degree={self.degree})"

    # -- ring operations ----------------------------------------------

    def add(self, a, b):
        p = self.p
        if self.degree == 1:
            return (a + b) % p
        return ((a[0] + b[0]) % p, (a[1] + b[1]) % p)

    def sub(self, a, b):
        p = self.p
        if self.degree == 1:
            return (a - b) % p
        return ((a[0] - b[0]) % p, (a[1] - b[1]) % p)

    def neg(self, a):
        p = self.p
        if self.degree == 1:
            return -a % p
        return (-a[0] % p, -a[1] % p)

    def mul(self, a, b):
        p = self.p
        if self.degree == 1:
            return a * b % p
        a0, a1 = a
        b0, b1 = b
        return ((a0 * b0 + self.nonres * a1 * b1) % p, (a0 * b1 + a1 * b0) % p)

    def sqr(self, a):
        return self.mul(a, a)

    def mul_int(self, a, k: int):
        p = self.p
        if self.degree == 1:
            return a * k % p
        return (a[0] * k % p, a[1] * k % p)

    def inv(self, a):
        p = self.p
        if self.degree == 1:
            if a % p == 0:
                raise ZeroDivisionError("inverse of zero")
            return pow(a, -1, p)
        a0, a1 = a
        norm = (a0 * a0 - self.nonres * a1 * a1) % p
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        ninv = pow(norm, -1, p)
        return (a0 * ninv % p, -a1 * ninv % p)

    def pow(self, a, e: int):
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.degree == 1:
            return pow(a, e, self.p)
        result = self.one
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.sqr(base)
            e >>= 1
        return result

    def is_zero(self, a) -> bool:
        return a == self.zero

    def frobenius(self, a):
        """x -> x^p; the identity on degree-1 fields."""
        if self.degree == 1:
            return a
        # s^p = -s since s^2 is a nonresidue
        return (a[0], -a[1] % self.p)

    # -- quadratic structure ------------------------------------------

    def is_square(self, a) -> bool:
        if self.is_zero(a):
            return True
        return self.pow(a, (self.order - 1) // 2) == self.one

    def _nonsquare(self):
        """Deterministic quadratic nonresidue in this field."""
        if self._ts_z is not None:
            return self._ts_z
        if self.degree == 1:
            z = smallest_nonresidue(self.p)
        else:
            z = None
            for c1 in range(1, self.p):
                for c0 in range(self.p):
                    cand = (c0, c1)
                    if not self.is_square(cand):
                        z = cand
                        break
                if z is not None:
                    break
        self._ts_z = z
        return z

    def canonical_root(self, r):
        """The lexicographically smaller of r and -r in canonical encoding."""
        nr = self.neg(r)
        if self.degree == 1:
            return min(r, nr)
        return min(r, nr)

    def sqrt(self, a):
        """A square root of a, or None for nonresidues.

        Tonelli-Shanks run in the cyclic group of order q - 1, one code path
        for both field degrees.  The returned root is the one whose canonical
        encoding is lexicographically smaller, so the choice is deterministic.
        """
        if self.is_zero(a):
            return a
        if not self.is_square(a):
            return None
        n = self.order - 1
        t = n
        e = 0
        while t % 2 == 0:
            t //= 2
            e += 1
        if e == 1:
            r = self.pow(a, (t + 1) // 2)
            return self.canonical_root(r)
        z = self._nonsquare()
        c = self.pow(z, t)
        r = self.pow(a, (t + 1) // 2)
        u = self.pow(a, t)
        while u != self.one:
            # find least i with u^(2^i) = 1
            i = 0
            probe = u
            while probe != self.one:
                probe = self.sqr(probe)
                i += 1
            b = c
            for _ in range(e - i - 1):
                b = self.sqr(b)
            r = self.mul(r, b)
            c = self.sqr(b)
            u = self.mul(u, c)
            e = i
        return self.canonical_root(r)

    def elements(self):
        """All field elements (small fields only; used by test oracles)."""
        if self.degree == 1:
            return range(self.p)
        return ((c0, c1) for c1 in range(self.p) for c0 in range(self.p))


def sqrt_fq(field: Fq, a):
    """Square root in F_q, raising NoRoot for nonresidues."""
    r = field.sqrt(field(a) if not isinstance(a, tuple) else a)
    if r is None:
        raise NoRoot(f"{a} is not a square in {field}")
    return r


# ---------------------------------------------------------------------------
# Dense polynomials over Fq.  Coefficient lists are little-endian (index =
# degree) and always trimmed, so len(coeffs) - 1 is the degree; [] is zero.
# ---------------------------------------------------------------------------


class FqPoly:
    """Dense univariate polynomial over one Fq context."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: Fq, coeffs):
        self.field = field
        cs = [field(c) if not isinstance(c, tuple) else c for c in coeffs]
        while cs and field.is_zero(cs[-1]):
            cs.pop()
        self.coeffs = cs

    @classmethod
    def x(cls, field: Fq) -> "FqPoly":
        return cls(field, [field.zero, field.one])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return (
            isinstance(other, FqPoly)
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        return f"FqPoly({self.field!r}, {self.coeffs})"

    def __add__(self, other):
        F = self.field
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = F.add(out[i], c)
        return FqPoly(F, out)

    def __sub__(self, other):
        F = self.field
        n = max(len(self.coeffs), len(other.coeffs))
        out = []
        za, zb = self.coeffs, other.coeffs
        for i in range(n):
            x = za[i] if i < len(za) else F.zero
            y = zb[i] if i < len(zb) else F.zero
            out.append(F.sub(x, y))
        return FqPoly(F, out)

    def __mul__(self, other):
        F = self.field
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return FqPoly(F, [])
        out = [F.zero] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if F.is_zero(ai):
                continue
            for j, bj in enumerate(b):
                out[i + j] = F.add(out[i + j], F.mul(ai, bj))
        return FqPoly(F, out)

    def scale(self, c):
        F = self.field
        return FqPoly(F, [F.mul(a, c) for a in self.coeffs])

    def monic(self) -> "FqPoly":
        if self.is_zero():
            return self
        lead = self.coeffs[-1]
        if lead == self.field.one:
            return self
        return self.scale(self.field.inv(lead))

    def divmod(self, other):
        """Quotient and remainder; other must be nonzero."""
        F = self.field
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        d = other.degree
        lead_inv = F.inv(other.coeffs[-1])
        q = [F.zero] * max(0, len(r) - d)
        for i in range(len(r) - 1, d - 1, -1):
            if F.is_zero(r[i]):
                continue
            factor = F.mul(r[i], lead_inv)
            q[i - d] = factor
            for j, c in enumerate(other.coeffs):
                r[i - d + j] = F.sub(r[i - d + j], F.mul(factor, c))
        return FqPoly(F, q), FqPoly(F, r)

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def gcd(self, other) -> "FqPoly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def derivative(self) -> "FqPoly":
        F = self.field
        return FqPoly(
            F, [F.mul_int(c, i) for i, c in enumerate(self.coeffs) if i > 0]
        )

    def mulmod(self, other, mod) -> "FqPoly":
        return (self * other) % mod

    def powmod(self, e: int, mod) -> "FqPoly":
        F = self.field
        result = FqPoly(F, [F.one]) % mod
        base = self % mod
        while e:
            if e & 1:
                result = result.mulmod(base, mod)
            base = base.mulmod(base, mod)
            e >>= 1
        return result

    def __call__(self, x):
        F = self.field
        acc = F.zero
        for c in reversed(self.coeffs):
            acc = F.add(F.mul(acc, x), c)
        return acc


def x_pow_q_mod(f: FqPoly) -> FqPoly:
    """x^q mod f over the polynomial's field F_q."""
    return FqPoly.x(f.field).powmod(f.field.order, f)


def splits_completely(f: FqPoly) -> bool:
    """True iff f factors into deg(f) linear factors over its field.

    Requires f squarefree (guaranteed by the callers; the torsion
    x-coordinate polynomials we feed in are squarefree away from bad primes).
    Implemented as the x^q mod f == x test, deliberately avoiding a full
    factorization.
    """
    if f.is_zero():
        raise ValueError("splits_completely of the zero polynomial")
    if f.degree <= 1:
        return True
    return x_pow_q_mod(f) == FqPoly.x(f.field)


def roots(f: FqPoly, _rng_state: int = 0x9E3779B97F4A7C15) -> list:
    """All roots of f in its field, with multiplicity.

    Distinct roots come from gcd(x^q - x, f); multiplicities from deflation.
    Splitting uses the usual randomized equal-degree step; the output root
    multiset is deterministic (sorted canonically).
    """
    F = f.field
    if f.is_zero():
        raise ValueError("roots of the zero polynomial")
    out = []
    # strip powers of x
    cs = list(f.coeffs)
    while cs and F.is_zero(cs[0]):
        out.append(F.zero)
        cs.pop(0)
    f = FqPoly(F, cs)
    if f.degree < 1:
        return sorted(out, key=_root_key(F))
    xq = x_pow_q_mod(f)
    lin = f.gcd(xq - FqPoly.x(F))
    distinct = _split_linear(lin, _rng_state)
    for r in distinct:
        # multiplicity by deflation against the original (x-stripped) f
        g = FqPoly(F, [F.neg(r), F.one])
        h = f
        while True:
            q, rem = h.divmod(g)
            if not rem.is_zero():
                break
            out.append(r)
            h = q
    return sorted(out, key=_root_key(F))


def _root_key(F: Fq):
    if F.degree == 1:
        return lambda r: r
    return lambda r: (r[0], r[1])


def _split_linear(f: FqPoly, state: int) -> list:
    """Roots of a squarefree product of distinct linear factors."""
    F = f.field
    if f.degree <= 0:
        return []
    if f.degree == 1:
        c0, c1 = f.coeffs
        return [F.neg(F.mul(c0, F.inv(c1)))]
    half = (F.order - 1) // 2
    while True:
        state = (state * 6364136223846793005 + 1442695040888963407) % (1 << 64)
        if F.degree == 1:
            delta = state % F.p
        else:
            delta = (state % F.p, (state >> 32) % F.p)
        shifted = FqPoly(F, [delta, F.one])
        g = f.gcd(shifted.powmod(half, f) - FqPoly(F, [F.one]))
        if 0 < g.degree < f.degree:
            return _split_linear(g, state) + _split_linear(f // g, state)
