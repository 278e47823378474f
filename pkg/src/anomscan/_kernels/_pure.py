"""Pure-Python kernel backend.

These are the per-prime hot-path primitives of the scanner: exact trace of
Frobenius, complete-splitting tests for torsion polynomials, and 2-Sylow
shape sampling over F_p and F_{p^2}.  The compiled backend in ``_fast.pyx``
mirrors this module function for function; outputs must be identical for
identical arguments (both backends use the same PRNG, the same deterministic
square roots, and the same sampling order).

Curve coefficients are always integers mod p; points over F_{p^2} are pairs
``(c0, c1)`` meaning c0 + c1*s with s^2 = nonres.
"""

from __future__ import annotations

from math import isqrt

M64 = (1 << 64) - 1

# -- splitmix64 --------------------------------------------------------------


def sm64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return state, z ^ (z >> 31)


# -- F_p helpers --------------------------------------------------------------


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) >> 1, p) == 1 else -1


def _sqrt_fp(a: int, p: int):
    """Canonical (smaller) square root mod p, or None."""
    a %= p
    if a == 0:
        return 0
    if _legendre(a, p) != 1:
        return None
    if p & 3 == 3:
        r = pow(a, (p + 1) >> 2, p)
    else:
        # Tonelli-Shanks
        t = p - 1
        e = 0
        while not t & 1:
            t >>= 1
            e += 1
        z = 2
        while _legendre(z, p) != -1:
            z += 1
        c = pow(z, t, p)
        r = pow(a, (t + 1) >> 1, p)
        u = pow(a, t, p)
        while u != 1:
            i = 0
            probe = u
            while probe != 1:
                probe = probe * probe % p
                i += 1
            b = c
            for _ in range(e - i - 1):
                b = b * b % p
            r = r * b % p
            c = b * b % p
            u = u * c % p
            e = i
    return min(r, p - r)


def smallest_nonresidue(p: int) -> int:
    n = 2
    while _legendre(n, p) != -1:
        n += 1
    return n


# -- affine elliptic curve arithmetic over F_p --------------------------------
# Points are (x, y) tuples; None is the point at infinity.


def _ec_add(P, Q, a: int, p: int):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) % p * pow(2 * y1 % p, -1, p) % p
    else:
        lam = (y2 - y1) % p * pow((x2 - x1) % p, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _ec_neg(P, p: int):
    if P is None:
        return None
    return P[0], -P[1] % p


def _ec_mul(k: int, P, a: int, p: int):
    if k < 0:
        return _ec_mul(-k, _ec_neg(P, p), a, p)
    R = None
    Q = P
    while k:
        if k & 1:
            R = _ec_add(R, Q, a, p)
        Q = _ec_add(Q, Q, a, p)
        k >>= 1
    return R


def _rand_point_fp(a: int, b: int, p: int, state: int, skip_order2: bool):
    """Deterministic pseudo-random affine point; returns (point, state)."""
    while True:
        state, r = sm64_next(state)
        x = r % p
        rhs = (x * x % p * x + a * x + b) % p
        if rhs == 0:
            if skip_order2:
                continue
            state, r = sm64_next(state)  # consume the sign bit regardless
            return (x, 0), state
        y = _sqrt_fp(rhs, p)
        if y is None:
            continue
        state, r = sm64_next(state)
        if r & 1:
            y = p - y
        return (x, y), state


# -- trace of Frobenius --------------------------------------------------------


def trace_naive(a: int, b: int, p: int) -> int:
    """Exact a_p by enumerating x and counting square residues."""
    sq = bytearray(p)
    for i in range(1, (p >> 1) + 1):
        sq[i * i % p] = 1
    n = 1  # point at infinity
    for x in range(p):
        rhs = (x * x % p * x + a * x + b) % p
        if rhs == 0:
            n += 1
        elif sq[rhs]:
            n += 2
    return p + 1 - n


def _bsgs_annihilators(a, p, P, Q, W, step, t0):
    """All t in [-W, W] with t = t0 mod step and Q = t*P (affine arithmetic).

    The returned set always contains the true trace when Q = (p+1)*P and
    step divides the group order's known torsion.
    """
    G = _ec_mul(step, P, a, p)
    Qp = _ec_add(Q, _ec_neg(_ec_mul(t0, P, a, p), p), a, p)
    if G is None:
        if Qp is None:
            return None  # every candidate matches: no information
        return set()
    umin = -((W + t0) // step)
    umax = (W - t0) // step
    L = umax - umin + 1
    if L <= 0:
        return set()
    m = isqrt(L) + 1
    # baby table: x-coordinate of j*G -> list of (j, y)
    table = {}
    R = None
    zero_js = []
    for j in range(m):
        if R is None:
            zero_js.append(j)
        else:
            table.setdefault(R[0], []).append((j, R[1]))
        R = _ec_add(R, G, a, p)
    mG = R if m else None  # R = m*G after the loop
    found = set()
    S = _ec_add(Qp, _ec_neg(_ec_mul(umin, G, a, p), p), a, p)
    neg_mG = _ec_neg(mG, p)
    i = 0
    imax = (L - 1) // m
    while i <= imax:
        if S is None:
            for j in zero_js:
                for u in (umin + i * m + j, umin + i * m - j):
                    if umin <= u <= umax:
                        found.add(t0 + step * u)
        elif S[0] in table:
            for j, y in table[S[0]]:
                us = []
                if S[1] == y:
                    us.append(umin + i * m + j)
                if S[1] == (p - y) % p:
                    us.append(umin + i * m - j)
                for u in us:
                    if umin <= u <= umax:
                        t = t0 + step * u
                        if -W <= t <= W:
                            found.add(t)
        S = _ec_add(S, neg_mG, a, p)
        i += 1
    return found


def trace_of_frobenius(a: int, b: int, p: int, torsion: int = 1, seed: int = 1) -> int:
    """Exact trace a_p of y^2 = x^3 + ax + b over F_p (good reduction).

    Naive enumeration below 457; above that, candidate-set intersection with
    baby-step giant-step order relations on the curve and its quadratic
    twist.  ``torsion`` is a known divisor of the group order (2 for curves
    with a rational 2-torsion point) and narrows the search congruence.
    """
    a %= p
    b %= p
    if p < 457:
        return trace_naive(a, b, p)
    W = isqrt(4 * p)
    d = smallest_nonresidue(p)
    # twist: y^2 = x^3 + a*d^2*x + b*d^3, trace negated
    ta = a * d % p * d % p
    tb = b * d % p * d % p * d % p
    state = seed | 1
    # a known torsion divisor carries to the twist only when it divides 2(p+1)
    twist_torsion = torsion if (2 * (p + 1)) % torsion == 0 else 1
    cands = None
    for trial in range(64):
        if trial & 1:
            A, B, sign, tors = ta, tb, -1, twist_torsion
        else:
            A, B, sign, tors = a, b, 1, torsion
        P, state = _rand_point_fp(A, B, p, state, True)
        Q = _ec_mul(p + 1, P, A, p)
        t0 = (p + 1) % tors
        T = _bsgs_annihilators(A, p, P, Q, W, tors, t0)
        if T is None:
            continue
        if sign < 0:
            T = {-t for t in T}
        cands = T if cands is None else cands & T
        if cands is not None:
            if len(cands) == 1:
                return next(iter(cands))
            if not cands:
                raise ArithmeticError(
                    f"trace candidate intersection emptied for p={p}; bad reduction?"
                )
    return trace_naive(a, b, p)


# -- cubic and polynomial splitting tests over F_p ----------------------------


def _polmod_mul(f, g, mod, p):
    """(f*g) mod 'mod' over F_p; dense little-endian int lists, mod monic."""
    n = len(mod) - 1
    out = [0] * (len(f) + len(g) - 1)
    for i, fi in enumerate(f):
        if fi:
            for j, gj in enumerate(g):
                out[i + j] += fi * gj
    for i in range(len(out)):
        out[i] %= p
    # reduce
    for i in range(len(out) - 1, n - 1, -1):
        c = out[i]
        if c:
            out[i] = 0
            for j in range(n):
                out[i - n + j] = (out[i - n + j] - c * mod[j]) % p
    del out[n:]
    while len(out) < n:
        out.append(0)
    return out


def _x_pow_mod(e: int, mod, p):
    """x^e mod 'mod' over F_p (mod monic, degree >= 1)."""
    n = len(mod) - 1
    if n == 1:
        # x = -mod[0] mod (x + mod[0])
        return [pow(-mod[0] % p, e, p)]
    result = [0] * n
    result[1 if n > 1 else 0] = 1  # x
    if e == 1:
        return result
    bits = bin(e)[3:]  # skip leading 1: start from x
    for bit in bits:
        result = _polmod_mul(result, result, mod, p)
        if bit == "1":
            # multiply by x: shift
            result = _polmod_mul(result, [0, 1], mod, p)
    return result


def _pol_pow_mod(base, e: int, mod, p):
    n = len(mod) - 1
    result = [1] + [0] * (n - 1)
    cur = list(base)
    # reduce base
    cur = _polmod_mul(cur, [1], mod, p)
    while e:
        if e & 1:
            result = _polmod_mul(result, cur, mod, p)
        e >>= 1
        if e:
            cur = _polmod_mul(cur, cur, mod, p)
    return result


def poly_splits(coeffs, p: int, ext: int = 1) -> bool:
    """True iff monic squarefree f has deg(f) roots in F_{p^ext}.

    f is given by integer coefficients mod p (little-endian, monic).  Roots
    are counted in F_p (ext=1) or F_{p^2} (ext=2); since f has F_p
    coefficients, the x^q mod f computation stays in F_p[x] either way.
    """
    n = len(coeffs) - 1
    if n <= 1:
        return True
    q = p if ext == 1 else p * p
    xq = _x_pow_mod(q, list(coeffs), p)
    if xq[1] != 1:
        return False
    return all(c == 0 for i, c in enumerate(xq) if i != 1)


def cubic_root_count(a: int, b: int, p: int) -> int:
    """Number of distinct roots of x^3 + ax + b over F_p (0, 1, or 3).

    Assumes the cubic is squarefree (nonsingular curve).
    """
    a %= p
    b %= p
    mod = [b, a, 0, 1]
    xq = _x_pow_mod(p, mod, p)
    # gcd(x^p - x, f): count = deg of gcd
    g = [xq[0], (xq[1] - 1) % p, xq[2]]
    return _gcd_degree(mod, g, p)


def _gcd_degree(f, g, p):
    """Degree of gcd(f, g) over F_p; dense little-endian lists."""

    def trim(h):
        while h and h[-1] == 0:
            h.pop()
        return h

    f = trim(list(f))
    g = trim(list(g))
    while g:
        # f mod g
        inv = pow(g[-1], -1, p)
        dg = len(g) - 1
        while len(f) - 1 >= dg and f:
            c = f[-1] * inv % p
            shift = len(f) - 1 - dg
            for j in range(len(g)):
                f[shift + j] = (f[shift + j] - c * g[j]) % p
            trim(f)
        f, g = g, f
    return len(f) - 1


def rhs_all_square(coeffs, a: int, b: int, p: int, ext: int = 1) -> bool:
    """True iff x^3+ax+b is a nonzero square at every root of f in F_{p^ext}.

    Requires f monic, squarefree, completely split over F_{p^ext}, and
    coprime to the cubic.  Then F_p[x]/f is a product of copies of the field
    and (x^3+ax+b)^((q-1)/2) reduces to 1 mod f exactly when all character
    values are 1.
    """
    q = p if ext == 1 else p * p
    base = [b % p, a % p, 0, 1]
    res = _pol_pow_mod(base, (q - 1) >> 1, list(coeffs), p)
    return res[0] == 1 and all(c == 0 for c in res[1:])


# -- F_{p^2} arithmetic --------------------------------------------------------


def _f2_mul(x, y, p, nr):
    x0, x1 = x
    y0, y1 = y
    return ((x0 * y0 + nr * x1 * y1) % p, (x0 * y1 + x1 * y0) % p)


def _f2_inv(x, p, nr):
    x0, x1 = x
    norm = (x0 * x0 - nr * x1 * x1) % p
    ninv = pow(norm, -1, p)
    return (x0 * ninv % p, -x1 * ninv % p)


def _f2_sqrt(c, p, nr):
    """Canonical square root in F_{p^2}, or None.

    Uses the norm trick: for c = c0 + c1*s, a root x0 + x1*s has x0^2 a root
    of t^2 - c0*t + nr*c1^2/4, solved with one F_p square root of the norm.
    Canonicalized to the lexicographically smaller of the two roots, which
    matches the generalized Tonelli-Shanks in the reference field code.
    """
    c0, c1 = c
    if c1 == 0:
        if c0 == 0:
            return (0, 0)
        r = _sqrt_fp(c0, p)
        if r is not None:
            return _f2_canon((r, 0), p)
        # c0 = nr * (c0/nr) with c0/nr a residue; root is sqrt(c0/nr)*s
        r = _sqrt_fp(c0 * pow(nr, -1, p) % p, p)
        if r is None:
            return None
        return _f2_canon((0, r), p)
    norm = (c0 * c0 - nr * c1 * c1) % p
    rn = _sqrt_fp(norm, p)
    if rn is None:
        return None
    inv2 = (p + 1) >> 1
    for t in ((c0 + rn) * inv2 % p, (c0 - rn) * inv2 % p):
        x0 = _sqrt_fp(t, p)
        if x0 is None or x0 == 0:
            continue
        x1 = c1 * pow(2 * x0 % p, -1, p) % p
        return _f2_canon((x0, x1), p)
    return None


def _f2_canon(r, p):
    neg = (-r[0] % p, -r[1] % p)
    return r if r <= neg else neg


def _ec2_add(P, Q, a, p, nr):
    """Affine addition over F_{p^2}; curve coefficient a is an F_p integer."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1[0] + y2[0]) % p == 0 and (y1[1] + y2[1]) % p == 0:
            return None
        num = _f2_mul(x1, x1, p, nr)
        num = ((3 * num[0] + a) % p, 3 * num[1] % p)
        lam = _f2_mul(num, _f2_inv((2 * y1[0] % p, 2 * y1[1] % p), p, nr), p, nr)
    else:
        dx = ((x2[0] - x1[0]) % p, (x2[1] - x1[1]) % p)
        dy = ((y2[0] - y1[0]) % p, (y2[1] - y1[1]) % p)
        lam = _f2_mul(dy, _f2_inv(dx, p, nr), p, nr)
    l2 = _f2_mul(lam, lam, p, nr)
    x3 = ((l2[0] - x1[0] - x2[0]) % p, (l2[1] - x1[1] - x2[1]) % p)
    t = ((x1[0] - x3[0]) % p, (x1[1] - x3[1]) % p)
    y3 = _f2_mul(lam, t, p, nr)
    return x3, ((y3[0] - y1[0]) % p, (y3[1] - y1[1]) % p)


def _ec2_mul(k, P, a, p, nr):
    R = None
    Q = P
    while k:
        if k & 1:
            R = _ec2_add(R, Q, a, p, nr)
        Q = _ec2_add(Q, Q, a, p, nr)
        k >>= 1
    return R


def _rand_point_fp2(a, b, p, nr, state):
    while True:
        state, r0 = sm64_next(state)
        state, r1 = sm64_next(state)
        x = (r0 % p, r1 % p)
        x2 = _f2_mul(x, x, p, nr)
        rhs = _f2_mul(x2, x, p, nr)
        rhs = ((rhs[0] + a * x[0] + b) % p, (rhs[1] + a * x[1]) % p)
        if rhs == (0, 0):
            state, r = sm64_next(state)
            return (x, (0, 0)), state
        y = _f2_sqrt(rhs, p, nr)
        if y is None:
            continue
        state, r = sm64_next(state)
        if r & 1:
            y = (-y[0] % p, -y[1] % p)
        return (x, y), state


# -- 2-Sylow shape sampling ----------------------------------------------------


def sylow_shape(
    a: int,
    b: int,
    p: int,
    ext: int,
    n_order: int,
    seed: int,
    npoints: int = 12,
) -> tuple[int, int]:
    """Sampled 2-Sylow shape (sa, sb), sa <= sb, of E(F_{p^ext}).

    n_order must be the exact group order.  Writes n_order = 2^v * odd,
    pushes random points into the 2-Sylow and takes the largest observed
    2-power order as sb.  The estimate can only err by underestimating sb
    (probability <= 2^-npoints); callers cross-check against deterministic
    torsion tests and retry with fresh seeds.
    """
    v = 0
    n_odd = n_order
    while not n_odd & 1:
        n_odd >>= 1
        v += 1
    if v == 0:
        return (0, 0)
    nr = smallest_nonresidue(p) if ext == 2 else 0
    state = seed | 1
    b_max = 0
    total = 0
    budget = 4 * npoints
    while total < npoints or (v - b_max > b_max and total < budget):
        total += 1
        if ext == 1:
            P, state = _rand_point_fp(a % p, b % p, p, state, False)
            S = _ec_mul(n_odd, P, a % p, p)
            e = 0
            while S is not None:
                S = _ec_add(S, S, a % p, p)
                e += 1
                if e > v:
                    raise ArithmeticError("2-power order exceeds v2(N): wrong order")
        else:
            P, state = _rand_point_fp2(a % p, b % p, p, nr, state)
            S = _ec2_mul(n_odd, P, a % p, p, nr)
            e = 0
            while S is not None:
                S = _ec2_add(S, S, a % p, p, nr)
                e += 1
                if e > v:
                    raise ArithmeticError("2-power order exceeds v2(N): wrong order")
        if e > b_max:
            b_max = e
            if b_max == v:
                break
    if v - b_max > b_max:
        raise ArithmeticError(
            f"sampled 2-Sylow shape inconsistent after {total} points (p={p})"
        )
    return (v - b_max, b_max)
