"""Division polynomials, torsion rationality tests, 2-isogenies, and
2-isogeny volcanoes.

The exact-order polynomials (roots = x-coordinates of points of exact order
2^m) are computed once over Z per curve and reduced mod p per prime; that is
the only superlinear symbolic work in a scan, so it is cached aggressively.
Levels are capped at m = 5 throughout.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field
from enum import Enum
from fractions import Fraction
from math import gcd, isqrt
from typing import Optional

from . import _kernels
from .curves import (
    RationalCurve,
    ReducedCurve,
    SylowShape,
    TraceData,
    add_points,
    is_supersingular,
    scalar_mul,
    sylow2_shape,
)
from .numtheory import Fq, FqPoly, splits_completely, roots, squarefree_part, v2

MAX_LEVEL = 5


# ---------------------------------------------------------------------------
# Division polynomials over Z (y-part eliminated).
#
# With psi_n the usual division polynomials of y^2 = x^3 + Ax + B, write
# psi_n = w_n(x) for n odd and psi_n = 2y * w_n(x) for n even.  Then both
# parities satisfy
#     w_{2m}   = w_m (w_{m+2} w_{m-1}^2 - w_{m-2} w_{m+1}^2)
#     w_{2m+1} = 16 R^2 w_{m+2} w_m^3 - w_{m-1} w_{m+1}^3        (m even)
#     w_{2m+1} = w_{m+2} w_m^3 - 16 R^2 w_{m-1} w_{m+1}^3        (m odd)
# where R = x^3 + Ax + B.
# ---------------------------------------------------------------------------


def _zmul(f: list, g: list) -> list:
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, fi in enumerate(f):
        if fi:
            for j, gj in enumerate(g):
                out[i + j] += fi * gj
    return out


def _zsub(f: list, g: list) -> list:
    n = max(len(f), len(g))
    out = [(f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0) for i in range(n)]
    while out and out[-1] == 0:
        out.pop()
    return out


class _DivisionPolys:
    """Lazy cache of the w_n for one integral curve (A, B)."""

    def __init__(self, A: int, B: int):
        self.A = A
        self.B = B
        r2 = _zmul([B, A, 0, 1], [B, A, 0, 1])
        self._r2_16 = [16 * c for c in r2]
        self._w = {
            0: [],
            1: [1],
            2: [1],
            3: [-A * A, 12 * B, 6 * A, 0, 3],
            4: [
                2 * (-8 * B * B - A**3),
                2 * (-4 * A * B),
                2 * (-5 * A * A),
                2 * (20 * B),
                2 * (5 * A),
                0,
                2,
            ],
        }

    def w(self, n: int) -> list:
        if n in self._w:
            return self._w[n]
        m, r = divmod(n, 2)
        if r == 0:
            inner = _zsub(
                _zmul(self.w(m + 2), _zmul(self.w(m - 1), self.w(m - 1))),
                _zmul(self.w(m - 2), _zmul(self.w(m + 1), self.w(m + 1))),
            )
            out = _zmul(self.w(m), inner)
        else:
            wm3 = _zmul(self.w(m), _zmul(self.w(m), self.w(m)))
            wp3 = _zmul(self.w(m + 1), _zmul(self.w(m + 1), self.w(m + 1)))
            if m % 2 == 0:
                out = _zsub(
                    _zmul(self._r2_16, _zmul(self.w(m + 2), wm3)),
                    _zmul(self.w(m - 1), wp3),
                )
            else:
                out = _zsub(
                    _zmul(self.w(m + 2), wm3),
                    _zmul(self._r2_16, _zmul(self.w(m - 1), wp3)),
                )
        self._w[n] = out
        return out


@functools.lru_cache(maxsize=64)
def _divpolys(A: int, B: int) -> _DivisionPolys:
    return _DivisionPolys(A, B)


def _zdiv_exact(num: list, den: list) -> list:
    """num / den over Q, asserting the division is exact."""
    num = [Fraction(c) for c in num]
    q = [Fraction(0)] * (len(num) - len(den) + 1)
    lead = Fraction(den[-1])
    for i in range(len(num) - 1, len(den) - 2, -1):
        c = num[i] / lead
        q[i - (len(den) - 1)] = c
        if c:
            for j, dj in enumerate(den):
                num[i - (len(den) - 1) + j] -= c * dj
    assert all(c == 0 for c in num[: len(den) - 1]), "inexact torsion quotient"
    return q


@functools.lru_cache(maxsize=256)
def exact_order_ints(A: int, B: int, m: int) -> tuple:
    """Monic integer exact-order polynomial for 2^m on y^2 = x^3 + Ax + B.

    Degree 3 for m = 1, else (4^m - 4^(m-1))/2.
    """
    if not 1 <= m <= MAX_LEVEL:
        raise ValueError(f"level m = {m} out of range (1..{MAX_LEVEL})")
    if m == 1:
        return (B, A, 0, 1)
    dp = _divpolys(A, B)
    q = _zdiv_exact(dp.w(1 << m), dp.w(1 << (m - 1)))
    lead = q[-1]
    out = []
    for c in q:
        c = c / lead
        assert c.denominator == 1, "exact-order polynomial not integral"
        out.append(int(c))
    return tuple(out)


def exact_order_poly(curve: RationalCurve, m: int) -> list:
    """Monic exact-order polynomial over Q, little-endian Fraction list."""
    A, B, u = curve.integral_model()
    zc = exact_order_ints(A, B, m)
    d = len(zc) - 1
    # undo the scaling x -> u^2 x
    return [Fraction(c, u ** (2 * (d - i))) for i, c in enumerate(zc)]


def exact_order_poly_mod(curve: RationalCurve, m: int, p: int) -> list:
    """exact_order_poly for the integral model, reduced mod p.

    Valid (same splitting/character behaviour as the curve itself) whenever p
    is a good prime, since p then does not divide the scaling factor.
    """
    A, B, u = curve.integral_model()
    if u % p == 0:
        raise ValueError(f"p = {p} divides the integral scaling factor")
    return [c % p for c in exact_order_ints(A, B, m)]


# ---------------------------------------------------------------------------
# Rationality of torsion x-coordinates
# ---------------------------------------------------------------------------


def _reduced_ints(curve: ReducedCurve) -> tuple[int, int]:
    a, b = curve.fp_coefficients()
    return a, b


def x_all_rational(curve: ReducedCurve, m: int) -> bool:
    """True iff x(E[2^m]) lies in the curve's field: the exact-order
    polynomial splits completely at every level k <= m."""
    if not 1 <= m <= MAX_LEVEL:
        raise ValueError(f"level m = {m} out of range (1..{MAX_LEVEL})")
    a, b = _reduced_ints(curve)
    p = curve.p
    ext = curve.field.degree
    for k in range(1, m + 1):
        coeffs = [c % p for c in exact_order_ints(a, b, k)]
        if not _kernels.poly_splits(coeffs, p, ext):
            return False
    return True


def full_torsion_level_verified(curve: ReducedCurve, m_max: int = MAX_LEVEL) -> int:
    """Largest k <= m_max with E[2^k] contained in E(F_q), deterministically.

    Level k holds when x(E[2^k]) is rational and the cubic is a nonzero
    square at every exact-order-2^k x-coordinate (checked through a single
    modular exponentiation, no root extraction).  This is the slow oracle
    backing the sampled Sylow shape.
    """
    a, b = _reduced_ints(curve)
    p = curve.p
    ext = curve.field.degree
    level = 0
    for k in range(1, min(m_max, MAX_LEVEL) + 1):
        coeffs = [c % p for c in exact_order_ints(a, b, k)]
        if not _kernels.poly_splits(coeffs, p, ext):
            break
        if k >= 2 and not _kernels.rhs_all_square(coeffs, a, b, p, ext):
            break
        level = k
    return level


# ---------------------------------------------------------------------------
# 2-torsion, Velu quotients, halving
# ---------------------------------------------------------------------------


def rational_two_torsion(curve: RationalCurve) -> list[Fraction]:
    """All rational roots of x^3 + ax + b (0, 1, or 3 of them), sorted."""
    A, B, u = curve.integral_model()
    found = []
    if B == 0:
        found.append(0)
        # remaining factor x^2 + A
        if A < 0:
            r = isqrt(-A)
            if r * r == -A:
                found.extend([r, -r])
    else:
        for d in _divisors(abs(B)):
            for r in (d, -d):
                if r * r * r + A * r + B == 0:
                    found.append(r)
    return sorted(Fraction(r, u * u) for r in set(found))


def _divisors(n: int) -> list[int]:
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return out


def velu2(curve: RationalCurve, kernel_x: Fraction) -> RationalCurve:
    """Image of the quotient by the order-2 point (kernel_x, 0):
    (a, b) -> (a - 5t, b - 7w) with t = 3x0^2 + a, w = x0 t."""
    x0 = Fraction(kernel_x)
    if x0**3 + curve.a * x0 + curve.b != 0:
        raise ValueError(f"x = {x0} is not a 2-torsion x-coordinate")
    t = 3 * x0 * x0 + curve.a
    w = x0 * t
    return RationalCurve(curve.a - 5 * t, curve.b - 7 * w)


def velu2_fq(field: Fq, a, b, x0):
    """velu2 over a finite field; returns the image (a', b')."""
    lhs = field.add(field.add(field.mul(field.sqr(x0), x0), field.mul(a, x0)), b)
    if not field.is_zero(lhs):
        raise ValueError("kernel_x is not a 2-torsion x-coordinate")
    t = field.add(field.mul_int(field.sqr(x0), 3), a)
    w = field.mul(x0, t)
    return field.sub(a, field.mul_int(t, 5)), field.sub(b, field.mul_int(w, 7))


def isogeny_point_map(field: Fq, a, b, x0, P):
    """Image of P under the 2-isogeny with kernel (x0, 0):
    (x, y) -> (x + t/(x - x0), y(1 - t/(x - x0)^2))."""
    if P is None:
        return None
    x, y = P
    if x == x0:
        return None  # the kernel maps to infinity
    t = field.add(field.mul_int(field.sqr(x0), 3), a)
    dxi = field.inv(field.sub(x, x0))
    xx = field.add(x, field.mul(t, dxi))
    yy = field.mul(y, field.sub(field.one, field.mul(t, field.sqr(dxi))))
    return xx, yy


def halving_quartic(a, b, xi):
    """Quartic whose roots are x-coordinates of the halves of (xi, eta):
    x^4 - 4 xi x^3 - 2a x^2 + (-4 xi a - 8b) x + (a^2 - 4 xi b).

    Works on Fractions and plain integers alike; little-endian list out.
    """
    return [a * a - 4 * xi * b, -4 * xi * a - 8 * b, -2 * a, -4 * xi, 1]


def halving_quartic_fq(field: Fq, a, b, xi):
    m4xi = field.mul_int(xi, -4)
    return [
        field.add(field.sqr(a), field.mul(m4xi, b)),
        field.add(field.mul(m4xi, a), field.mul_int(b, -8)),
        field.mul_int(a, -2),
        m4xi,
        field.one,
    ]


class QuarticType(Enum):
    IRREDUCIBLE = "irreducible"
    TWO_CONJUGATE_QUADRATICS = "two_conjugate_quadratics"
    SPLITS_COMPLETELY = "splits_completely"
    OTHER = "other"


@dataclass(frozen=True)
class QuarticSplit:
    kind: QuarticType
    degrees: tuple  # factor degrees with multiplicity, sorted


def quartic_split_type(field: Fq, coeffs) -> QuarticSplit:
    """Classify the factorization of a quartic over F_q.

    Distinct linear factors -> SPLITS_COMPLETELY; two distinct irreducible
    quadratics -> TWO_CONJUGATE_QUADRATICS; a single irreducible quartic ->
    IRREDUCIBLE; everything else (including repeated factors) -> OTHER, with
    the degree multiset attached for diagnostics.
    """
    f = FqPoly(field, coeffs).monic()
    if f.degree != 4:
        raise ValueError("quartic_split_type expects degree 4")
    sqfree = f.gcd(f.derivative()).degree == 0
    degs = tuple(sorted(_factor_degrees(field, f)))
    if sqfree:
        if degs == (1, 1, 1, 1):
            return QuarticSplit(QuarticType.SPLITS_COMPLETELY, degs)
        if degs == (2, 2):
            return QuarticSplit(QuarticType.TWO_CONJUGATE_QUADRATICS, degs)
        if degs == (4,):
            return QuarticSplit(QuarticType.IRREDUCIBLE, degs)
    return QuarticSplit(QuarticType.OTHER, degs)


def _factor_degrees(field: Fq, f: FqPoly) -> list[int]:
    """Degrees (with multiplicity) of the irreducible factors; deg f <= 4."""
    out = []
    rs = roots(f)
    for r in rs:
        out.append(1)
        f = f // FqPoly(field, [field.neg(r), field.one])
    if f.degree == 0:
        return out
    if f.degree in (2, 3):
        # no roots left: degree 2 or 3 without roots is irreducible
        g = f.gcd(f.derivative())
        if g.degree == 0:
            out.append(f.degree)
        else:
            # repeated quadratic inside a cubic cannot occur without a root;
            # degree 2 with repetition means a square of a linear, which
            # would have shown as a root.  Only deg 2 = irreducible remains.
            out.append(g.degree)
            out.extend(_factor_degrees(field, f // g))
        return out
    if f.degree == 4:
        g = f.gcd(f.derivative())
        if g.degree == 2:
            # f = h^2 with h an irreducible quadratic
            return out + [2, 2]
        xq2 = FqPoly.x(field).powmod(field.order**2, f)
        if xq2 == FqPoly.x(field):
            return out + [2, 2]
        return out + [4]
    return out


# ---------------------------------------------------------------------------
# Rational 2-isogeny classes, Q-isomorphism keys, 4-torsion
# ---------------------------------------------------------------------------


def q_isomorphism_key(curve: RationalCurve) -> tuple:
    """Canonical key for Q-isomorphism: (a, b) ~ (u^4 a, u^6 b), u in Q*.

    Scale to integers, then strip every prime q with q^4 | a and q^6 | b.
    Signs are preserved (u^4, u^6 > 0), so the reduced pair is canonical.
    """
    A, B, _ = curve.integral_model()
    if A == 0:
        return (0, _strip_powers(B, 6))
    if B == 0:
        return (_strip_powers(A, 4), 0)
    g = gcd(abs(A), abs(B))
    for q in _prime_factors(g):
        while A % q**4 == 0 and B % q**6 == 0:
            A //= q**4
            B //= q**6
    return (A, B)


def _strip_powers(n: int, k: int) -> int:
    sign = -1 if n < 0 else 1
    n = abs(n)
    for q in _prime_factors(n):
        while n % q**k == 0:
            n //= q**k
    return sign * n


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class IsogenyClassEdge:
    src: tuple
    dst: tuple
    kernel_x: Fraction


@dataclass
class TwoIsogenyClass:
    curves: dict  # key -> RationalCurve representative
    edges: list  # IsogenyClassEdge


def two_isogeny_class(curve: RationalCurve, cap: int = 32) -> TwoIsogenyClass:
    """BFS closure of the curve under rational 2-isogenies, deduplicated by
    Q-isomorphism.  Classes are finite (at most 8 curves)."""
    start_key = q_isomorphism_key(curve)
    curves = {start_key: curve}
    edges = []
    seen_edges = set()
    frontier = [start_key]
    while frontier:
        key = frontier.pop()
        E = curves[key]
        for x0 in rational_two_torsion(E):
            img = velu2(E, x0)
            ikey = q_isomorphism_key(img)
            if ikey not in curves:
                if len(curves) >= cap:
                    raise ArithmeticError("2-isogeny class exceeded size cap")
                curves[ikey] = img
                frontier.append(ikey)
            tag = (key, ikey, x0)
            if tag not in seen_edges:
                seen_edges.add(tag)
                edges.append(IsogenyClassEdge(key, ikey, x0))
    return TwoIsogenyClass(curves, edges)


def has_rational_4torsion(curve: RationalCurve) -> bool:
    """True iff some rational 2-torsion point halves over Q: the halving
    quartic has a rational root whose cubic value is a rational square."""
    for x0 in rational_two_torsion(curve):
        q = halving_quartic(curve.a, curve.b, x0)
        for x1 in _rational_quartic_roots(q):
            val = x1**3 + curve.a * x1 + curve.b
            if val >= 0 and _is_rational_square(val):
                return True
    return False


def _is_rational_square(v: Fraction) -> bool:
    v = Fraction(v)
    if v < 0:
        return False
    rn = isqrt(v.numerator)
    rd = isqrt(v.denominator)
    return rn * rn == v.numerator and rd * rd == v.denominator


def _rational_quartic_roots(coeffs) -> list[Fraction]:
    """Rational roots of a quartic with rational coefficients."""
    lcm = 1
    for c in coeffs:
        c = Fraction(c)
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    ic = [int(Fraction(c) * lcm) for c in coeffs]
    while ic and ic[-1] == 0:
        ic.pop()
    if not ic:
        return []
    content = 0
    for c in ic:
        content = gcd(content, abs(c))
    ic = [c // content for c in ic]
    # strip x | f
    zeros = []
    while ic and ic[0] == 0:
        zeros = [Fraction(0)]
        ic.pop(0)
    if len(ic) <= 1:
        return zeros
    out = list(zeros)
    for pn in _divisors(abs(ic[0])):
        for qd in _divisors(abs(ic[-1])):
            if gcd(pn, qd) != 1:
                continue
            for r in (Fraction(pn, qd), Fraction(-pn, qd)):
                if sum(Fraction(c) * r**i for i, c in enumerate(ic)) == 0:
                    out.append(r)
    return sorted(set(out))


# ---------------------------------------------------------------------------
# Volcanoes
# ---------------------------------------------------------------------------


@dataclass
class VolcanoNode:
    key: tuple
    j: object
    curve: tuple  # (a, b) field elements
    shape: SylowShape
    level: int = -1
    neighbors: list = dc_field(default_factory=list)  # keys, with multiplicity


@dataclass
class Volcano:
    p: int
    field_degree: int
    n_order: int
    nodes: dict  # key -> VolcanoNode
    height: int

    def floor_nodes(self) -> list:
        return [n for n in self.nodes.values() if n.level == 0]

    def crater_nodes(self) -> list:
        return [n for n in self.nodes.values() if n.level == self.height]


def _fq_iso_key(field: Fq, a, b, j) -> tuple:
    """Canonical key for F_q-isomorphism of y^2 = x^3 + ax + b."""
    q1 = field.order - 1
    if field.is_zero(a):
        return ("j0", field.pow(b, q1 // gcd(6, q1)))
    if field.is_zero(b):
        return ("j1728", field.pow(a, q1 // gcd(4, q1)))
    chi = field.pow(field.mul(a, b), q1 // 2)
    return ("j", j, chi == field.one)


def build_volcano(
    curve: ReducedCurve, trace: TraceData, seed: int = 1
) -> Volcano:
    """Connected component of the 2-isogeny graph containing the curve.

    Nodes are F_q-isomorphism classes decorated with 2-Sylow shapes; levels
    are the graph distance to the floor (cyclic 2-Sylow), and the height is
    cross-checked against the discriminant-valuation formula by callers.
    """
    if is_supersingular(trace):
        raise ValueError("volcano construction requires ordinary reduction")
    F = curve.field
    n_order = trace.np if F.degree == 1 else trace.np2
    j0 = curve.j_invariant()
    start_key = _fq_iso_key(F, curve.a, curve.b, j0)
    nodes = {}

    def make_node(key, a, b):
        j = ReducedCurve(F, a, b).j_invariant()
        shape = sylow2_shape(
            ReducedCurve(F, a, b),
            n_order,
            _kernels.derive_seed(seed, hash(key) & ((1 << 62) - 1)),
        )
        nodes[key] = VolcanoNode(key, j, (a, b), shape)
        return nodes[key]

    make_node(start_key, curve.a, curve.b)
    frontier = [start_key]
    while frontier:
        key = frontier.pop()
        node = nodes[key]
        a, b = node.curve
        cubic = FqPoly(F, [b, a, F.zero, F.one])
        for r in roots(cubic):
            ia, ib = velu2_fq(F, a, b, r)
            ij = ReducedCurve(F, ia, ib).j_invariant()
            ikey = _fq_iso_key(F, ia, ib, ij)
            if ikey not in nodes:
                make_node(ikey, ia, ib)
                frontier.append(ikey)
            node.neighbors.append(ikey)

    # floor detection: cyclic 2-Sylow (a = 0)
    floor = [k for k, n in nodes.items() if n.shape.a == 0]
    if not floor:
        raise ArithmeticError("volcano has no cyclic floor; inconsistent shapes")
    # cross-check: when the volcano has non-floor nodes, floor vertices have
    # exactly one rational 2-isogeny
    if len(floor) < len(nodes):
        for k in floor:
            if len(nodes[k].neighbors) != 1:
                raise ArithmeticError(
                    "floor node degree != 1 contradicts shape-based floor"
                )
    # levels = BFS distance from the floor
    level = {k: 0 for k in floor}
    queue = list(floor)
    while queue:
        k = queue.pop(0)
        for nb in nodes[k].neighbors:
            if nb not in level:
                level[nb] = level[k] + 1
                queue.append(nb)
    for k, n in nodes.items():
        n.level = level[k]
    height = max(level.values())
    return Volcano(F.p, F.degree, n_order, nodes, height)


def kohel_height(t: int, q: int) -> int:
    """Volcano height from the trace: v2(t^2 - 4q) equals 2H, 2H + 2, or
    2H + 3 according to D = sqf(t^2 - 4q) being 1, 3, or 2 mod 4."""
    disc = t * t - 4 * q
    if disc >= 0:
        raise ValueError("t^2 - 4q must be negative (ordinary trace)")
    w = v2(disc)
    d = squarefree_part(disc)
    r = d % 4
    if r == 1:
        shift = 0
    elif r == 3:
        shift = 2
    else:
        shift = 3
    if (w - shift) % 2 or w < shift:
        raise ValueError(f"inconsistent discriminant valuation v2={w}, D%4={r}")
    return (w - shift) // 2


def volcano_to_dot(v: Volcano) -> str:
    """DOT export; node label = j:shape:level."""
    lines = ["graph volcano {"]
    ids = {k: f"n{i}" for i, k in enumerate(sorted(v.nodes, key=str))}
    for k in sorted(v.nodes, key=str):
        n = v.nodes[k]
        label = f"{_fmt_j(n.j)}:{n.shape.a},{n.shape.b}:{n.level}"
        lines.append(f'  {ids[k]} [label="{label}"];')
    seen = set()
    for k in sorted(v.nodes, key=str):
        for nb in v.nodes[k].neighbors:
            tag = tuple(sorted((str(k), str(nb))))
            if tag in seen:
                continue
            seen.add(tag)
            lines.append(f"  {ids[k]} -- {ids[nb]};")
    lines.append("}")
    return "\n".join(lines)


def _fmt_j(j) -> str:
    if isinstance(j, tuple):
        return f"{j[0]}+{j[1]}s"
    return str(j)
