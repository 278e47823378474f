# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors ``_pure`` function for function with identical outputs, including the
pseudo-random sampling sequences.  All arithmetic is 64-bit: callers must
keep p below 2^25 for the polynomial kernels and 2^31 elsewhere (the shim
enforces this and falls back to the pure backend beyond it).
"""

from libc.stdlib cimport malloc, free

ctypedef unsigned long long u64
ctypedef long long i64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 MIX2 = 0x94D049BB133111EBULL


cdef inline u64 sm64(u64* state) nogil:
    state[0] += GOLDEN
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline i64 addmod(i64 a, i64 b, i64 p) nogil:
    cdef i64 r = a + b
    if r >= p:
        r -= p
    return r


cdef inline i64 submod(i64 a, i64 b, i64 p) nogil:
    cdef i64 r = a - b
    if r < 0:
        r += p
    return r


cdef inline i64 mulmod(i64 a, i64 b, i64 p) nogil:
    return (a * b) % p


cdef i64 invmod(i64 a, i64 p) nogil:
    # extended euclid; a in [1, p)
    cdef i64 old_r = a, r = p
    cdef i64 old_s = 1, s = 0
    cdef i64 q, tmp
    while r != 0:
        q = old_r / r
        tmp = old_r - q * r
        old_r = r
        r = tmp
        tmp = old_s - q * s
        old_s = s
        s = tmp
    if old_s < 0:
        old_s += p
    return old_s


cdef i64 powmod(i64 a, u64 e, i64 p) nogil:
    cdef i64 result = 1 % p
    cdef i64 base = a % p
    while e:
        if e & 1:
            result = mulmod(result, base, p)
        base = mulmod(base, base, p)
        e >>= 1
    return result


cdef inline int legendre_c(i64 a, i64 p) nogil:
    a = a % p
    if a == 0:
        return 0
    if powmod(a, (p - 1) >> 1, p) == 1:
        return 1
    return -1


cdef i64 sqrt_fp(i64 a, i64 p) nogil:
    """Canonical (smaller) root, or -1 when a is a nonresidue."""
    cdef i64 r, t, z, c, u, b, probe
    cdef int e, i, j
    a = a % p
    if a == 0:
        return 0
    if legendre_c(a, p) != 1:
        return -1
    if (p & 3) == 3:
        r = powmod(a, (p + 1) >> 2, p)
    else:
        t = p - 1
        e = 0
        while not (t & 1):
            t >>= 1
            e += 1
        z = 2
        while legendre_c(z, p) != -1:
            z += 1
        c = powmod(z, t, p)
        r = powmod(a, (t + 1) >> 1, p)
        u = powmod(a, t, p)
        while u != 1:
            i = 0
            probe = u
            while probe != 1:
                probe = mulmod(probe, probe, p)
                i += 1
            b = c
            for j in range(e - i - 1):
                b = mulmod(b, b, p)
            r = mulmod(r, b, p)
            c = mulmod(b, b, p)
            u = mulmod(u, c, p)
            e = i
    if p - r < r:
        r = p - r
    return r


cdef i64 smallest_nonres(i64 p) nogil:
    cdef i64 n = 2
    while legendre_c(n, p) != -1:
        n += 1
    return n


# -- affine EC arithmetic over F_p (inf flag: x = -1 means infinity) ----------

cdef struct Pt:
    i64 x
    i64 y
    int inf


cdef inline Pt pt_inf() nogil:
    cdef Pt P
    P.x = 0
    P.y = 0
    P.inf = 1
    return P


cdef Pt ec_add(Pt P, Pt Q, i64 a, i64 p) nogil:
    cdef Pt R
    cdef i64 lam, num, den, x3
    if P.inf:
        return Q
    if Q.inf:
        return P
    if P.x == Q.x:
        if addmod(P.y, Q.y, p) == 0:
            return pt_inf()
        num = addmod(mulmod(3, mulmod(P.x, P.x, p), p), a, p)
        den = invmod(addmod(P.y, P.y, p), p)
        lam = mulmod(num, den, p)
    else:
        num = submod(Q.y, P.y, p)
        den = invmod(submod(Q.x, P.x, p), p)
        lam = mulmod(num, den, p)
    x3 = submod(submod(mulmod(lam, lam, p), P.x, p), Q.x, p)
    R.x = x3
    R.y = submod(mulmod(lam, submod(P.x, x3, p), p), P.y, p)
    R.inf = 0
    return R


cdef inline Pt ec_neg(Pt P, i64 p) nogil:
    if P.inf:
        return P
    P.y = (p - P.y) % p
    return P


cdef Pt ec_mul(u64 k, Pt P, i64 a, i64 p) nogil:
    cdef Pt R = pt_inf()
    cdef Pt Q = P
    while k:
        if k & 1:
            R = ec_add(R, Q, a, p)
        Q = ec_add(Q, Q, a, p)
        k >>= 1
    return R


cdef Pt ec_mul_signed(i64 k, Pt P, i64 a, i64 p) nogil:
    if k < 0:
        return ec_mul(<u64>(-k), ec_neg(P, p), a, p)
    return ec_mul(<u64>k, P, a, p)


cdef Pt rand_point_fp(i64 a, i64 b, i64 p, u64* state, int skip_order2) nogil:
    cdef i64 x, rhs, y
    cdef u64 r
    cdef Pt P
    while True:
        r = sm64(state)
        x = <i64>(r % <u64>p)
        rhs = (mulmod(mulmod(x, x, p), x, p) + mulmod(a, x, p) + b) % p
        if rhs == 0:
            if skip_order2:
                continue
            r = sm64(state)
            P.x = x
            P.y = 0
            P.inf = 0
            return P
        y = sqrt_fp(rhs, p)
        if y < 0:
            continue
        r = sm64(state)
        if r & 1:
            y = p - y
        P.x = x
        P.y = y
        P.inf = 0
        return P


# -- trace of Frobenius --------------------------------------------------------


def trace_naive(a, b, p):
    """Exact a_p by enumeration (used below 457 and as a safety net)."""
    cdef i64 cp = p, ca = a % p, cb = b % p
    cdef i64 x, rhs, n = 1, i
    cdef char* sq = <char*>malloc(cp)
    if sq == NULL:
        raise MemoryError()
    for i in range(cp):
        sq[i] = 0
    for i in range(1, (cp >> 1) + 1):
        sq[(i * i) % cp] = 1
    for x in range(cp):
        rhs = (mulmod(mulmod(x, x, cp), x, cp) + mulmod(ca, x, cp) + cb) % cp
        if rhs == 0:
            n += 1
        elif sq[rhs]:
            n += 2
    free(sq)
    return int(cp + 1 - n)


cdef i64 isqrt_c(i64 n) nogil:
    cdef i64 r = <i64>(n ** 0.5)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


cdef int bsgs_annihilators(
    i64 a, i64 p, Pt P, Pt Q, i64 W, i64 step, i64 t0,
    i64* out, int out_cap,
) nogil:
    """All t in [-W, W], t = t0 mod step, Q = t*P.  Returns the count, -1
    when every candidate matches (no information), -2 on overflow."""
    cdef Pt G = ec_mul_signed(step, P, a, p)
    cdef Pt Qp = ec_add(Q, ec_neg(ec_mul_signed(t0, P, a, p), p), a, p)
    cdef i64 umin, umax, L, m, j, u, t, i
    cdef Pt R, S, mG, neg_mG
    if G.inf:
        if Qp.inf:
            return -1
        return 0
    umin = -((W + t0) // step)
    umax = (W - t0) // step
    L = umax - umin + 1
    if L <= 0:
        return 0
    m = isqrt_c(L) + 1
    # open-addressing table of baby x-coords
    cdef i64 cap = 1
    while cap < 2 * m:
        cap <<= 1
    cdef i64* keys = <i64*>malloc(cap * sizeof(i64))
    cdef i64* vals = <i64*>malloc(cap * sizeof(i64))  # j index
    cdef i64* ys = <i64*>malloc(cap * sizeof(i64))
    cdef i64* zero_js = <i64*>malloc((m + 1) * sizeof(i64))
    cdef int nzero = 0
    if keys == NULL or vals == NULL or ys == NULL or zero_js == NULL:
        if keys != NULL: free(keys)
        if vals != NULL: free(vals)
        if ys != NULL: free(ys)
        if zero_js != NULL: free(zero_js)
        return -2
    for i in range(cap):
        keys[i] = -1
    R = pt_inf()
    cdef i64 slot
    for j in range(m):
        if R.inf:
            zero_js[nzero] = j
            nzero += 1
        else:
            slot = (R.x * 0x9E3779B97F4A7C15ULL) & (cap - 1)
            while keys[slot] != -1:
                slot = (slot + 1) & (cap - 1)
            keys[slot] = R.x
            vals[slot] = j
            ys[slot] = R.y
        R = ec_add(R, G, a, p)
    mG = R
    neg_mG = ec_neg(mG, p)
    S = ec_add(Qp, ec_neg(ec_mul_signed(umin, G, a, p), p), a, p)
    cdef i64 imax = (L - 1) // m
    cdef int nfound = 0
    cdef int zi, dup
    cdef i64 cand_u[2]
    cdef int ncand, ci, k
    i = 0
    while i <= imax:
        if S.inf:
            for zi in range(nzero):
                j = zero_js[zi]
                for ci in range(2):
                    u = umin + i * m + (j if ci == 0 else -j)
                    if umin <= u <= umax:
                        t = t0 + step * u
                        dup = 0
                        for k in range(nfound):
                            if out[k] == t:
                                dup = 1
                                break
                        if not dup:
                            if nfound >= out_cap:
                                free(keys); free(vals); free(ys); free(zero_js)
                                return -2
                            out[nfound] = t
                            nfound += 1
        else:
            slot = (S.x * 0x9E3779B97F4A7C15ULL) & (cap - 1)
            while keys[slot] != -1:
                if keys[slot] == S.x:
                    j = vals[slot]
                    ncand = 0
                    if S.y == ys[slot]:
                        cand_u[ncand] = umin + i * m + j
                        ncand += 1
                    if S.y == (p - ys[slot]) % p:
                        cand_u[ncand] = umin + i * m - j
                        ncand += 1
                    for ci in range(ncand):
                        u = cand_u[ci]
                        if umin <= u <= umax:
                            t = t0 + step * u
                            if -W <= t <= W:
                                dup = 0
                                for k in range(nfound):
                                    if out[k] == t:
                                        dup = 1
                                        break
                                if not dup:
                                    if nfound >= out_cap:
                                        free(keys); free(vals); free(ys); free(zero_js)
                                        return -2
                                    out[nfound] = t
                                    nfound += 1
                slot = (slot + 1) & (cap - 1)
        S = ec_add(S, neg_mG, a, p)
        i += 1
    free(keys); free(vals); free(ys); free(zero_js)
    return nfound


def trace_of_frobenius(a, b, p, torsion=1, seed=1):
    """Exact trace over F_p: naive below 457, BSGS with twist
    disambiguation and candidate intersection above."""
    cdef i64 cp = p
    cdef i64 ca = a % cp, cb = b % cp
    if cp < 457:
        return trace_naive(ca, cb, cp)
    cdef i64 W = isqrt_c(4 * cp)
    cdef i64 d = smallest_nonres(cp)
    cdef i64 ta = mulmod(mulmod(ca, d, cp), d, cp)
    cdef i64 tb = mulmod(mulmod(mulmod(cb, d, cp), d, cp), d, cp)
    cdef i64 ctors = torsion
    cdef i64 twist_tors = ctors if (2 * (cp + 1)) % ctors == 0 else 1
    cdef u64 state = (<u64>seed) | 1
    cdef i64 A, B, tors, t0
    cdef int sign, trial, n, i, j, ninter
    cdef Pt P, Q
    cdef i64 cands[512]
    cdef i64 found[512]
    cdef i64 inter[512]
    cdef int have = 0, ncands = 0
    for trial in range(64):
        if trial & 1:
            A = ta; B = tb; sign = -1; tors = twist_tors
        else:
            A = ca; B = cb; sign = 1; tors = ctors
        P = rand_point_fp(A, B, cp, &state, 1)
        Q = ec_mul(<u64>(cp + 1), P, A, cp)
        t0 = (cp + 1) % tors
        n = bsgs_annihilators(A, cp, P, Q, W, tors, t0, found, 512)
        if n == -1:
            continue
        if n == -2:
            break  # overflow: fall back to naive
        if sign < 0:
            for i in range(n):
                found[i] = -found[i]
        if not have:
            for i in range(n):
                cands[i] = found[i]
            ncands = n
            have = 1
        else:
            ninter = 0
            for i in range(ncands):
                for j in range(n):
                    if cands[i] == found[j]:
                        inter[ninter] = cands[i]
                        ninter += 1
                        break
            for i in range(ninter):
                cands[i] = inter[i]
            ncands = ninter
        if have and ncands == 1:
            return int(cands[0])
        if have and ncands == 0:
            raise ArithmeticError(
                f"trace candidate intersection emptied for p={p}; bad reduction?"
            )
    return trace_naive(ca, cb, cp)


# -- polynomial kernels over F_p ------------------------------------------------

DEF MAXDEG = 520


cdef void polmod_sqr(i64* f, int n, i64* mod, i64* scratch, i64 p) nogil:
    """f <- f^2 mod 'mod' in place; f has n coeffs (= deg mod), scratch 2n."""
    cdef int i, j
    cdef i64 c
    for i in range(2 * n - 1):
        scratch[i] = 0
    for i in range(n):
        if f[i]:
            for j in range(n):
                scratch[i + j] += f[i] * f[j]
    for i in range(2 * n - 1):
        scratch[i] %= p
    for i in range(2 * n - 2, n - 1, -1):
        c = scratch[i]
        if c:
            scratch[i] = 0
            for j in range(n):
                scratch[i - n + j] = (scratch[i - n + j] - c * mod[j]) % p
    for i in range(n):
        c = scratch[i] % p
        if c < 0:
            c += p
        f[i] = c


cdef void polmod_mul(i64* f, i64* g, int n, i64* mod, i64* scratch, i64 p) nogil:
    """f <- f*g mod 'mod' in place."""
    cdef int i, j
    cdef i64 c
    for i in range(2 * n - 1):
        scratch[i] = 0
    for i in range(n):
        if f[i]:
            for j in range(n):
                scratch[i + j] += f[i] * g[j]
    for i in range(2 * n - 1):
        scratch[i] %= p
    for i in range(2 * n - 2, n - 1, -1):
        c = scratch[i]
        if c:
            scratch[i] = 0
            for j in range(n):
                scratch[i - n + j] = (scratch[i - n + j] - c * mod[j]) % p
    for i in range(n):
        c = scratch[i] % p
        if c < 0:
            c += p
        f[i] = c


cdef void polmod_mul_x(i64* f, int n, i64* mod, i64 p) nogil:
    """f <- x*f mod 'mod' in place."""
    cdef i64 lead = f[n - 1]
    cdef int i
    for i in range(n - 1, 0, -1):
        f[i] = f[i - 1]
    f[0] = 0
    if lead:
        for i in range(n):
            f[i] = (f[i] - lead * mod[i]) % p
            if f[i] < 0:
                f[i] += p


cdef int x_pow_mod_c(u64 e, i64* mod, int n, i64* out, i64 p) nogil:
    """out <- x^e mod 'mod' (monic, degree n >= 2)."""
    cdef int i, bit, nbits
    for i in range(n):
        out[i] = 0
    if e == 1:
        out[1] = 1
        return 0
    nbits = 0
    cdef u64 tmp = e
    while tmp:
        nbits += 1
        tmp >>= 1
    out[1] = 1  # x
    cdef i64 scratch[2 * MAXDEG]
    for bit in range(nbits - 2, -1, -1):
        polmod_sqr(out, n, mod, scratch, p)
        if (e >> bit) & 1:
            polmod_mul_x(out, n, mod, p)
    return 0


def poly_splits(coeffs, p, ext=1):
    """x^q mod f == x test; f monic squarefree with F_p coefficients."""
    cdef int n = len(coeffs) - 1
    if n <= 1:
        return True
    if n > MAXDEG - 2:
        raise ValueError("degree cap exceeded")
    cdef i64 cp = p
    cdef u64 q = <u64>cp if ext == 1 else <u64>cp * <u64>cp
    cdef i64 mod_[MAXDEG]
    cdef i64 out[MAXDEG]
    cdef int i
    for i in range(n + 1):
        mod_[i] = coeffs[i] % cp
    x_pow_mod_c(q, mod_, n, out, cp)
    if out[1] != 1:
        return False
    for i in range(n):
        if i != 1 and out[i] != 0:
            return False
    return True


def cubic_root_count(a, b, p):
    """Distinct roots of x^3 + ax + b over F_p (squarefree cubic)."""
    cdef i64 cp = p
    cdef i64 mod_[4]
    cdef i64 out[4]
    mod_[0] = b % cp
    mod_[1] = a % cp
    mod_[2] = 0
    mod_[3] = 1
    x_pow_mod_c(<u64>cp, mod_, 3, out, cp)
    # gcd(x^p - x, cubic)
    cdef i64 g0 = out[0], g1 = out[1] - 1, g2 = out[2]
    if g1 < 0:
        g1 += cp
    # degree of gcd by euclid on stack-size polynomials
    cdef i64 f[4]
    cdef i64 g[3]
    f[0] = mod_[0]; f[1] = mod_[1]; f[2] = 0; f[3] = 1
    g[0] = g0; g[1] = g1; g[2] = g2
    return _gcd_degree_small(f, 3, g, 2, cp)


cdef int _gcd_degree_small(i64* f, int df, i64* g, int dg, i64 p) nogil:
    cdef i64 bufA[8]
    cdef i64 bufB[8]
    cdef int da, db, i, shift
    cdef i64 c, inv
    for i in range(df + 1):
        bufA[i] = f[i]
    for i in range(dg + 1):
        bufB[i] = g[i]
    da = df
    db = dg
    while da >= 0 and bufA[da] == 0:
        da -= 1
    while db >= 0 and bufB[db] == 0:
        db -= 1
    while db >= 0:
        inv = invmod(bufB[db], p)
        while da >= db:
            c = mulmod(bufA[da], inv, p)
            if c:
                shift = da - db
                for i in range(db + 1):
                    bufA[shift + i] = (bufA[shift + i] - c * bufB[i]) % p
                    if bufA[shift + i] < 0:
                        bufA[shift + i] += p
            da -= 1
            while da >= 0 and bufA[da] == 0:
                da -= 1
        # swap
        for i in range(8):
            c = bufA[i]; bufA[i] = bufB[i]; bufB[i] = c
        i = da; da = db; db = i
    return da if da >= 0 else 0


def rhs_all_square(coeffs, a, b, p, ext=1):
    """(x^3+ax+b)^((q-1)/2) == 1 mod f test (f split, squarefree, coprime
    to the cubic)."""
    cdef int n = len(coeffs) - 1
    if n < 1 or n > MAXDEG - 2:
        raise ValueError("degree out of range")
    cdef i64 cp = p
    cdef u64 q = <u64>cp if ext == 1 else <u64>cp * <u64>cp
    cdef u64 e = (q - 1) >> 1
    cdef i64 mod_[MAXDEG]
    cdef i64 base[MAXDEG]
    cdef i64 result[MAXDEG]
    cdef i64 scratch[2 * MAXDEG]
    cdef i64 tmp[5]
    cdef i64 c
    cdef int i, j
    for i in range(n + 1):
        mod_[i] = coeffs[i] % cp
    for i in range(n):
        base[i] = 0
        result[i] = 0
    result[0] = 1
    # base = x^3 + ax + b reduced mod f
    if n > 3:
        base[0] = b % cp
        base[1] = a % cp
        base[3] = 1
    else:
        tmp[0] = b % cp; tmp[1] = a % cp; tmp[2] = 0; tmp[3] = 1; tmp[4] = 0
        for i in range(3, n - 1, -1):
            if tmp[i]:
                c = tmp[i]
                tmp[i] = 0
                for j in range(n):
                    tmp[i - n + j] = (tmp[i - n + j] - c * mod_[j]) % cp
                    if tmp[i - n + j] < 0:
                        tmp[i - n + j] += cp
        for i in range(n):
            base[i] = tmp[i]
    while e:
        if e & 1:
            polmod_mul(result, base, n, mod_, scratch, cp)
        e >>= 1
        if e:
            polmod_sqr(base, n, mod_, scratch, cp)
    if result[0] != 1:
        return False
    for i in range(1, n):
        if result[i]:
            return False
    return True


# -- F_{p^2} arithmetic and Sylow sampling --------------------------------------

cdef struct F2:
    i64 c0
    i64 c1


cdef inline F2 f2_make(i64 c0, i64 c1) nogil:
    cdef F2 r
    r.c0 = c0
    r.c1 = c1
    return r


cdef inline F2 f2_add(F2 x, F2 y, i64 p) nogil:
    return f2_make(addmod(x.c0, y.c0, p), addmod(x.c1, y.c1, p))


cdef inline F2 f2_sub(F2 x, F2 y, i64 p) nogil:
    return f2_make(submod(x.c0, y.c0, p), submod(x.c1, y.c1, p))


cdef inline F2 f2_mul(F2 x, F2 y, i64 p, i64 nr) nogil:
    return f2_make(
        (x.c0 * y.c0 + nr % p * x.c1 % p * y.c1) % p,
        (x.c0 * y.c1 + x.c1 * y.c0) % p,
    )


cdef inline F2 f2_inv(F2 x, i64 p, i64 nr) nogil:
    cdef i64 norm = (x.c0 * x.c0 - nr * x.c1 % p * x.c1) % p
    if norm < 0:
        norm += p
    cdef i64 ninv = invmod(norm, p)
    return f2_make(mulmod(x.c0, ninv, p), mulmod((p - x.c1) % p, ninv, p))


cdef int f2_sqrt(F2 c, i64 p, i64 nr, F2* out) nogil:
    """Canonical root via the norm trick; returns 0 on nonresidue."""
    cdef i64 c0 = c.c0, c1 = c.c1
    cdef i64 r, norm, rn, inv2, t, x0, x1
    cdef F2 cand, neg
    cdef int k
    if c1 == 0:
        if c0 == 0:
            out[0] = f2_make(0, 0)
            return 1
        r = sqrt_fp(c0, p)
        if r >= 0:
            out[0] = f2_canon(f2_make(r, 0), p)
            return 1
        r = sqrt_fp(mulmod(c0, invmod(nr, p), p), p)
        if r < 0:
            return 0
        out[0] = f2_canon(f2_make(0, r), p)
        return 1
    norm = (c0 * c0 - nr * c1 % p * c1) % p
    if norm < 0:
        norm += p
    rn = sqrt_fp(norm, p)
    if rn < 0:
        return 0
    inv2 = (p + 1) >> 1
    for k in range(2):
        t = mulmod((c0 + rn) % p if k == 0 else submod(c0, rn, p), inv2, p)
        x0 = sqrt_fp(t, p)
        if x0 <= 0:
            continue
        x1 = mulmod(c1, invmod(addmod(x0, x0, p), p), p)
        out[0] = f2_canon(f2_make(x0, x1), p)
        return 1
    return 0


cdef inline F2 f2_canon(F2 r, i64 p) nogil:
    cdef F2 neg = f2_make((p - r.c0) % p, (p - r.c1) % p)
    if (neg.c0 < r.c0) or (neg.c0 == r.c0 and neg.c1 < r.c1):
        return neg
    return r


cdef struct Pt2:
    F2 x
    F2 y
    int inf


cdef Pt2 pt2_inf() nogil:
    cdef Pt2 P
    P.x = f2_make(0, 0)
    P.y = f2_make(0, 0)
    P.inf = 1
    return P


cdef Pt2 ec2_add(Pt2 P, Pt2 Q, i64 a, i64 p, i64 nr) nogil:
    cdef Pt2 R
    cdef F2 lam, num, x3, t
    if P.inf:
        return Q
    if Q.inf:
        return P
    if P.x.c0 == Q.x.c0 and P.x.c1 == Q.x.c1:
        if addmod(P.y.c0, Q.y.c0, p) == 0 and addmod(P.y.c1, Q.y.c1, p) == 0:
            return pt2_inf()
        num = f2_mul(P.x, P.x, p, nr)
        num = f2_make(addmod(mulmod(3, num.c0, p), a, p), mulmod(3, num.c1, p))
        lam = f2_mul(num, f2_inv(f2_make(addmod(P.y.c0, P.y.c0, p), addmod(P.y.c1, P.y.c1, p)), p, nr), p, nr)
    else:
        lam = f2_mul(f2_sub(Q.y, P.y, p), f2_inv(f2_sub(Q.x, P.x, p), p, nr), p, nr)
    x3 = f2_sub(f2_sub(f2_mul(lam, lam, p, nr), P.x, p), Q.x, p)
    t = f2_sub(P.x, x3, p)
    R.x = x3
    R.y = f2_sub(f2_mul(lam, t, p, nr), P.y, p)
    R.inf = 0
    return R


cdef Pt2 ec2_mul(u64 k, Pt2 P, i64 a, i64 p, i64 nr) nogil:
    cdef Pt2 R = pt2_inf()
    cdef Pt2 Q = P
    while k:
        if k & 1:
            R = ec2_add(R, Q, a, p, nr)
        Q = ec2_add(Q, Q, a, p, nr)
        k >>= 1
    return R


cdef Pt2 rand_point_fp2(i64 a, i64 b, i64 p, i64 nr, u64* state) nogil:
    cdef F2 x, rhs, y
    cdef u64 r0, r1, r
    cdef Pt2 P
    while True:
        r0 = sm64(state)
        r1 = sm64(state)
        x = f2_make(<i64>(r0 % <u64>p), <i64>(r1 % <u64>p))
        rhs = f2_mul(f2_mul(x, x, p, nr), x, p, nr)
        rhs = f2_make((rhs.c0 + a * x.c0 + b) % p, (rhs.c1 + a * x.c1) % p)
        if rhs.c0 == 0 and rhs.c1 == 0:
            r = sm64(state)
            P.x = x
            P.y = f2_make(0, 0)
            P.inf = 0
            return P
        if f2_sqrt(rhs, p, nr, &y):
            r = sm64(state)
            if r & 1:
                y = f2_make((p - y.c0) % p, (p - y.c1) % p)
            P.x = x
            P.y = y
            P.inf = 0
            return P


def sylow_shape(a, b, p, ext, n_order, seed, npoints=12):
    """Sampled 2-Sylow shape (sa, sb) of E(F_{p^ext}); mirrors the pure
    backend exactly (same PRNG, same sampling order)."""
    cdef i64 cp = p
    cdef i64 ca = a % cp, cb = b % cp
    cdef int v = 0
    no = n_order
    while not (no & 1):
        no >>= 1
        v += 1
    if v == 0:
        return (0, 0)
    cdef u64 n_odd = <u64>no
    cdef i64 nr = smallest_nonres(cp) if ext == 2 else 0
    cdef u64 state = (<u64>seed) | 1
    cdef int b_max = 0, total = 0, e
    cdef int budget = 4 * npoints
    cdef int want = npoints
    cdef Pt P, S
    cdef Pt2 P2, S2
    while total < want or (v - b_max > b_max and total < budget):
        total += 1
        if ext == 1:
            P = rand_point_fp(ca, cb, cp, &state, 0)
            S = ec_mul(n_odd, P, ca, cp)
            e = 0
            while not S.inf:
                S = ec_add(S, S, ca, cp)
                e += 1
                if e > v:
                    raise ArithmeticError(
                        "2-power order exceeds v2(N): wrong order"
                    )
        else:
            P2 = rand_point_fp2(ca, cb, cp, nr, &state)
            S2 = ec2_mul(n_odd, P2, ca, cp, nr)
            e = 0
            while not S2.inf:
                S2 = ec2_add(S2, S2, ca, cp, nr)
                e += 1
                if e > v:
                    raise ArithmeticError(
                        "2-power order exceeds v2(N): wrong order"
                    )
        if e > b_max:
            b_max = e
            if b_max == v:
                break
    if v - b_max > b_max:
        raise ArithmeticError(
            f"sampled 2-Sylow shape inconsistent after {total} points (p={p})"
        )
    return (v - b_max, b_max)
