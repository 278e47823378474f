"""Per-prime classification and streaming scans.

The classifier runs a filter cascade per prime: good-prime check, one trace
computation (shared by the isogenous pair), the v2(N_p) = 2 / full-2-torsion
filter, and only then the expensive work: torsion x-coordinate rationality
flags over F_p and 2-Sylow levels over F_{p^2} for both curves.

Levels are computed twice, by independent routes: deterministic splitting
tests of the exact-order polynomials (the ``am`` flags), and randomized
2-Sylow sampling.  Where the flags pin the level the sampled value must
agree; mismatches trigger deterministic re-sampling and finally a hard
error, never a silent fix.  Sampling can only overestimate a level, so a
sampled level below a pinned one is reported as an internal error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Iterator, Optional

from . import _kernels
from .curves import RationalCurve, is_good_prime, v2
from .numtheory import prime_stream
from .torsion import exact_order_ints

DEFAULT_MASTER_SEED = 1729
DEFAULT_BLOCK_SIZE = 2048

# 99% two-sided normal quantile, for the Wilson intervals
_Z99 = 2.5758293035489004


class InternalInvariantError(Exception):
    """A scan invariant failed; indicates a bug, never bad input."""


@dataclass(frozen=True)
class DefectLabel:
    """(d_E, d_E'): full 2-power torsion levels over F_{p^2}, E first."""

    d_e: int
    d_ep: int

    def __post_init__(self):
        if abs(self.d_e - self.d_ep) != 1 or min(self.d_e, self.d_ep) < 2:
            raise InternalInvariantError(
                f"defect ({self.d_e}, {self.d_ep}) violates the gap invariant"
            )

    def as_pair(self) -> tuple[int, int]:
        return (self.d_e, self.d_ep)


@dataclass
class PrimeRecord:
    p: int
    good: bool
    skip: Optional[str] = None
    ap: Optional[int] = None
    v2np: Optional[int] = None
    shp_e: Optional[tuple] = None
    shp_ep: Optional[tuple] = None
    v2np2: Optional[int] = None
    lvl_e: Optional[int] = None
    lvl_ep: Optional[int] = None
    am_e: Optional[tuple] = None  # booleans for m = 2..5
    am_ep: Optional[tuple] = None
    defect: Optional[DefectLabel] = None

    def to_json(self) -> str:
        d = {
            "p": self.p,
            "good": self.good,
            "skip": self.skip,
            "ap": self.ap,
            "v2np": self.v2np,
            "shpE": list(self.shp_e) if self.shp_e is not None else None,
            "shpEp": list(self.shp_ep) if self.shp_ep is not None else None,
            "v2np2": self.v2np2,
            "lvlE": self.lvl_e,
            "lvlEp": self.lvl_ep,
            "am_e": list(self.am_e) if self.am_e is not None else None,
            "am_ep": list(self.am_ep) if self.am_ep is not None else None,
            "defect": list(self.defect.as_pair()) if self.defect else None,
        }
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "PrimeRecord":
        d = json.loads(line)
        return cls(
            p=d["p"],
            good=d["good"],
            skip=d.get("skip"),
            ap=d.get("ap"),
            v2np=d.get("v2np"),
            shp_e=tuple(d["shpE"]) if d.get("shpE") is not None else None,
            shp_ep=tuple(d["shpEp"]) if d.get("shpEp") is not None else None,
            v2np2=d.get("v2np2"),
            lvl_e=d.get("lvlE"),
            lvl_ep=d.get("lvlEp"),
            am_e=tuple(d["am_e"]) if d.get("am_e") is not None else None,
            am_ep=tuple(d["am_ep"]) if d.get("am_ep") is not None else None,
            defect=DefectLabel(*d["defect"]) if d.get("defect") else None,
        )


class CurvePair:
    """A rationally 2-isogenous pair prepared for scanning."""

    def __init__(self, e1: RationalCurve, e2: RationalCurve):
        self.e1 = e1
        self.e2 = e2
        self.m1 = e1.integral_model()  # (A, B, u)
        self.m2 = e2.integral_model()

    def label(self) -> str:
        l1 = self.e1.label or f"({self.e1.a},{self.e1.b})"
        l2 = self.e2.label or f"({self.e2.a},{self.e2.b})"
        return f"{l1}/{l2}"


def _am_chain(A: int, B: int, p: int) -> tuple[bool, bool, bool, bool]:
    """Flags, for m = 2..5, that Frobenius acts as -1 on E[2^m].

    Caller guarantees the cascade conditions (v2(N_p) = 2, full 2-torsion).
    Under those, the flag for level m is: p = 1 mod 2^m and the exact-order
    polynomials split completely through level m.  Each flag implies the
    previous one, so the chain stops at the first failure.
    """
    flags = [False, False, False, False]
    for i, m in enumerate(range(2, 6)):
        if (p - 1) % (1 << m):
            break
        coeffs = [c % p for c in exact_order_ints(A, B, m)]
        if not _kernels.poly_splits(coeffs, p, 1):
            break
        flags[i] = True
    return tuple(flags)


def _flag_level(flags: tuple) -> int:
    """Largest m with the level-m flag set, or 1 when none is."""
    m = 1
    for i, f in enumerate(flags):
        if not f:
            break
        m = i + 2
    return m


def _sample_level(
    A: int,
    B: int,
    p: int,
    np2: int,
    seed: int,
    expected: Optional[int],
    min_level: int,
    npoints: int,
) -> int:
    """Level of E(F_{p^2}) by Sylow sampling, cross-checked against the
    deterministically pinned value when one exists."""
    for attempt in range(8):
        s = _kernels.derive_seed(seed, attempt)
        sa, sb = _kernels.sylow_shape(A, B, p, 2, np2, s, npoints << min(attempt, 3))
        if expected is not None:
            if sa == expected:
                return sa
            if sa < expected:
                raise InternalInvariantError(
                    f"sampled level {sa} below the deterministic level "
                    f"{expected} at p={p}"
                )
            continue  # overestimate; resample
        if sa < min_level:
            raise InternalInvariantError(
                f"sampled level {sa} below the flag-implied bound {min_level} "
                f"at p={p}"
            )
        return sa
    raise InternalInvariantError(
        f"level sampling did not converge to the pinned value at p={p}"
    )


def classify_prime(pair: CurvePair, p: int, master_seed: int) -> PrimeRecord:
    """Classify one prime through the filter cascade."""
    if not is_good_prime(pair.e1, pair.e2, p):
        return PrimeRecord(p=p, good=False, skip="bad" if p > 2 else "p=2")
    A1, B1, u1 = pair.m1
    A2, B2, u2 = pair.m2
    if u1 % p == 0 or u2 % p == 0:
        # cannot happen: u's primes divide coefficient denominators
        return PrimeRecord(p=p, good=False, skip="bad")
    a1, b1 = A1 % p, B1 % p
    a2, b2 = A2 % p, B2 % p

    ap = _kernels.trace_of_frobenius(
        a1, b1, p, torsion=2, seed=_kernels.derive_seed(master_seed, p, 0)
    )
    np_ = p + 1 - ap
    np2 = (p + 1) ** 2 - ap * ap
    v = v2(np_) if np_ % 2 == 0 else 0
    v22 = v2(np2) if np2 % 2 == 0 else 0
    rec = PrimeRecord(p=p, good=True, ap=ap, v2np=v, v2np2=v22)

    if v <= 2:
        # exact shapes are cheap here: a = 1 iff the cubic splits (and v >= 2)
        if v < 2:
            rec.shp_e = (0, v)
            rec.shp_ep = (0, v)
        else:
            s1 = _kernels.cubic_root_count(a1, b1, p) == 3
            s2 = _kernels.cubic_root_count(a2, b2, p) == 3
            rec.shp_e = (1, 1) if s1 else (0, 2)
            rec.shp_ep = (1, 1) if s2 else (0, 2)
    if v != 2 or rec.shp_e != (1, 1) or rec.shp_ep != (1, 1):
        return rec

    rec.am_e = _am_chain(A1, B1, p)
    rec.am_ep = _am_chain(A2, B2, p)
    m1 = _flag_level(rec.am_e)
    m2 = _flag_level(rec.am_ep)
    if abs(m1 - m2) > 1:
        raise InternalInvariantError(
            f"flag levels {m1}/{m2} differ by more than 1 at p={p}"
        )

    # expected F_{p^2} levels from the flags:
    #  - unequal flag levels pin both sides (defect present),
    #  - equal levels in 2..4 pin both sides (no defect),
    #  - equal levels 1 or 5 leave the values to sampling.
    if m1 != m2:
        exp1, exp2 = m1 + 1, m2 + 1
    elif 2 <= m1 <= 4:
        exp1 = exp2 = m1 + 1
    else:
        exp1 = exp2 = None
    min_lvl = 6 if m1 == 5 else 2
    k0 = 40 if (m1 == 5 and m2 == 5) else 12
    lvl1 = _sample_level(
        a1, b1, p, np2, _kernels.derive_seed(master_seed, p, 1), exp1, min_lvl, k0
    )
    min_lvl2 = 6 if m2 == 5 else 2
    lvl2 = _sample_level(
        a2, b2, p, np2, _kernels.derive_seed(master_seed, p, 2), exp2, min_lvl2, k0
    )
    if exp1 is None:
        # equal flag levels: theory forces equal levels when m = 1, and a
        # defect gap of at most 1 when m = 5
        for attempt in range(8):
            if m1 == 1 and lvl1 == lvl2:
                break
            if m1 == 5 and abs(lvl1 - lvl2) <= 1:
                break
            # the larger one overestimated; resample it harder
            s = _kernels.derive_seed(master_seed, p, 3, attempt)
            if lvl1 > lvl2:
                lvl1 = _sample_level(a1, b1, p, np2, s, None, min_lvl, 24 << attempt)
            else:
                lvl2 = _sample_level(a2, b2, p, np2, s, None, min_lvl2, 24 << attempt)
        else:
            raise InternalInvariantError(
                f"levels {lvl1}/{lvl2} never reconciled with equal flag "
                f"levels m={m1} at p={p}"
            )
    rec.lvl_e = lvl1
    rec.lvl_ep = lvl2

    if lvl1 != lvl2:
        rec.defect = DefectLabel(lvl1, lvl2)
        _check_anomalous_record(rec)
    return rec


def _check_anomalous_record(rec: PrimeRecord) -> None:
    """Zero-tolerance invariants for anomalous records."""
    d1, d2 = rec.defect.as_pair()
    m = min(d1, d2)
    if (rec.p - 1) % (1 << m):
        raise InternalInvariantError(
            f"anomalous p={rec.p} not 1 mod 2^{m} for defect {rec.defect}"
        )
    if rec.shp_e != (1, 1) or rec.shp_ep != (1, 1):
        raise InternalInvariantError(
            f"anomalous p={rec.p} without (Z/2)^2 shapes over F_p"
        )
    if m <= 5:
        big_am, small_am = (
            (rec.am_e, rec.am_ep) if d1 > d2 else (rec.am_ep, rec.am_e)
        )
        if not big_am[m - 2]:
            raise InternalInvariantError(
                f"defect {rec.defect} at p={rec.p} but the level-{m} flag is "
                f"unset on the deeper side"
            )
        if small_am[m - 2]:
            raise InternalInvariantError(
                f"defect {rec.defect} at p={rec.p} but the level-{m} flag is "
                f"set on the shallower side"
            )


# ---------------------------------------------------------------------------
# Streaming scans
# ---------------------------------------------------------------------------


def _scan_block(pair_coeffs, primes, master_seed):
    """Worker entry point: classify a block of primes (picklable args)."""
    (a1, b1, l1), (a2, b2, l2) = pair_coeffs
    pair = CurvePair(
        RationalCurve(Fraction(*a1), Fraction(*b1), l1),
        RationalCurve(Fraction(*a2), Fraction(*b2), l2),
    )
    return [classify_prime(pair, p, master_seed).to_json() for p in primes]


def _pair_coeffs(pair: CurvePair):
    def enc(c):
        return (
            (c.a.numerator, c.a.denominator),
            (c.b.numerator, c.b.denominator),
            c.label,
        )

    return (enc(pair.e1), enc(pair.e2))


def scan(
    pair: CurvePair,
    num_good_primes: int,
    master_seed: int = DEFAULT_MASTER_SEED,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
    start_prime: int = 3,
    good_already: int = 0,
) -> Iterator[PrimeRecord]:
    """Records for primes from ``start_prime`` up through the
    ``num_good_primes``-th good prime (bad primes included, not counted).

    Deterministic for a fixed master seed regardless of the worker schedule:
    per-prime randomness is derived from (master_seed, p) only.
    """
    if num_good_primes < 1:
        raise ValueError("num_good_primes must be >= 1")
    good = good_already
    if good >= num_good_primes:
        return
    primes = prime_stream(start_prime)

    def blocks():
        while True:
            yield [p for _, p in zip(range(block_size), primes)]

    if workers <= 1:
        for block in blocks():
            for p in block:
                rec = classify_prime(pair, p, master_seed)
                yield rec
                if rec.good:
                    good += 1
                    if good >= num_good_primes:
                        return
    else:
        import concurrent.futures as cf

        coeffs = _pair_coeffs(pair)
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            pending = []
            gen = blocks()
            for _ in range(workers + 2):
                block = next(gen)
                pending.append(ex.submit(_scan_block, coeffs, block, master_seed))
            while pending:
                fut = pending.pop(0)
                block = next(gen)
                pending.append(ex.submit(_scan_block, coeffs, block, master_seed))
                for line in fut.result():
                    rec = PrimeRecord.from_json(line)
                    yield rec
                    if rec.good:
                        good += 1
                        if good >= num_good_primes:
                            for f in pending:
                                f.cancel()
                            return


# ---------------------------------------------------------------------------
# Estimators and tables
# ---------------------------------------------------------------------------


@dataclass
class CoefficientEstimate:
    m: int
    side: str  # "E" or "Ep"
    n_conditioned: int
    n_hits: int
    raw: Optional[Fraction]
    snapped: Optional[Fraction]  # 0, 1/2, 1, or None = indeterminate
    wilson: tuple  # (lo, hi) floats at 99%

    @property
    def indeterminate(self) -> bool:
        return self.snapped is None


def wilson_interval(hits: int, n: int, z: float = _Z99) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    phat = hits / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def estimate_c(
    records,
    m: int,
    side: str = "E",
    minus_i_absent: bool = False,
) -> CoefficientEstimate:
    """Conditional mismatch rate at level m, snapped to {0, 1/2, 1}.

    The numerator counts defects rather than re-testing the partner curve:
    within the level-m flag event on one curve, "the partner fails level m"
    is exactly "defect (m+1, m)" (mirrored for the other side).  Snapping
    only happens when the 99% Wilson interval contains exactly one of the
    three admissible values.
    """
    if side not in ("E", "Ep"):
        raise ValueError("side must be 'E' or 'Ep'")
    idx = m - 2
    n_cond = 0
    hits = 0
    for r in records:
        if not r.good:
            continue
        flags = r.am_e if side == "E" else r.am_ep
        if not flags or not flags[idx]:
            continue
        n_cond += 1
        if r.defect is not None:
            d1, d2 = r.defect.as_pair()
            if side == "E" and (d1, d2) == (m + 1, m):
                hits += 1
            elif side == "Ep" and (d1, d2) == (m, m + 1):
                hits += 1
    if n_cond == 0:
        snapped = Fraction(0) if minus_i_absent else None
        return CoefficientEstimate(m, side, 0, 0, None, snapped, (0.0, 1.0))
    raw = Fraction(hits, n_cond)
    lo, hi = wilson_interval(hits, n_cond)
    candidates = [c for c in (Fraction(0), Fraction(1, 2), Fraction(1)) if lo <= c <= hi]
    snapped = candidates[0] if len(candidates) == 1 else None
    return CoefficientEstimate(m, side, n_cond, hits, raw, snapped, (lo, hi))


@dataclass
class DefectTable:
    counts: dict  # (d_e, d_ep) -> int
    total: int
    n_good: int
    expected: Optional[dict] = None  # (d_e, d_ep) -> Fraction (count scale)

    def rows(self):
        for key in sorted(self.counts, key=lambda k: (min(k), k)):
            exp = self.expected.get(key) if self.expected else None
            yield key, self.counts[key], exp


def defect_table(records, expected_density=None) -> DefectTable:
    """Histogram of defects over the good primes in ``records``.

    ``expected_density`` is an optional callable (d_e, d_ep) -> Fraction
    giving the predicted density of that defect; expected counts are then
    density * n_good.
    """
    counts: dict = {}
    n_good = 0
    for r in records:
        if not r.good:
            continue
        n_good += 1
        if r.defect is not None:
            key = r.defect.as_pair()
            counts[key] = counts.get(key, 0) + 1
    expected = None
    if expected_density is not None:
        expected = {}
        keys = set(counts)
        # always show the cells the prediction considers plausible
        for m in range(2, 7):
            keys.add((m + 1, m))
            keys.add((m, m + 1))
        for key in keys:
            dens = expected_density(*key)
            if dens:
                expected[key] = dens * n_good
    return DefectTable(counts, sum(counts.values()), n_good, expected)


# ---------------------------------------------------------------------------
# JSONL persistence
# ---------------------------------------------------------------------------


def append_records(path, records) -> int:
    n = 0
    with open(path, "a", encoding="ascii") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")
            n += 1
    return n


def read_records(path) -> list:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(PrimeRecord.from_json(line))
    return out


def resume_state(path) -> tuple[int, int]:
    """(next_start_prime, good_count) for resuming an interrupted scan."""
    last_p = 2
    good = 0
    try:
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                last_p = d["p"]
                if d["good"]:
                    good += 1
    except FileNotFoundError:
        return (3, 0)
    return (last_p + 1, good)
