"""Exact-rational prediction engine.

Predicted densities of anomalous primes from 2-adic Galois image data: the
head (levels 2..4) from the mismatch coefficients and image sizes, the tail
(levels >= 5) in closed form, and the CM dichotomy (0 or 1/12).  Everything
in this module is exact Fraction arithmetic; no floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .curves import RationalCurve
from .torsion import has_rational_4torsion, two_isogeny_class


class ValidationError(ValueError):
    """Input data violates a structural constraint."""


# the thirteen rational CM j-invariants and their orders' discriminants
CM_J_INVARIANTS = {
    Fraction(0): -3,
    Fraction(54000): -12,
    Fraction(-12288000): -27,
    Fraction(1728): -4,
    Fraction(287496): -16,
    Fraction(-3375): -7,
    Fraction(16581375): -28,
    Fraction(8000): -8,
    Fraction(-32768): -11,
    Fraction(-884736): -19,
    Fraction(-884736000): -43,
    Fraction(-147197952000): -67,
    Fraction(-262537412640768000): -163,
}

_LEVELS = (2, 3, 4)
_SIZE_KEYS = (4, 8, 16, 32)


@dataclass(frozen=True)
class GaloisImageProfile:
    """Sizes of the mod-2^m images for m = 2..5, -I membership, CM flag."""

    sizes: dict  # {4: int, 8: int, 16: int, 32: int}
    minus_i: bool
    cm: bool

    def __post_init__(self):
        for k in _SIZE_KEYS:
            if k not in self.sizes or self.sizes[k] < 1:
                raise ValidationError(f"profile missing a positive size for {k}")
        for lo, hi in zip(_SIZE_KEYS, _SIZE_KEYS[1:]):
            ratio = Fraction(self.sizes[hi], self.sizes[lo])
            if ratio.denominator != 1 or ratio not in (2, 4, 8, 16):
                raise ValidationError(
                    f"size ratio {self.sizes[hi]}/{self.sizes[lo]} not in "
                    "{2, 4, 8, 16}"
                )
        if self.cm:
            for m, k in ((2, 4), (3, 8), (4, 16), (5, 32)):
                if self.sizes[k] != 2 * 4 ** (m - 1):
                    raise ValidationError(
                        f"CM profile must have size 2*4^(m-1) at level {m}"
                    )
        else:
            for m, k in ((2, 4), (3, 8), (4, 16), (5, 32)):
                if 2 ** (4 * m - 3) % self.sizes[k]:
                    raise ValidationError(
                        f"non-CM size {self.sizes[k]} at level {m} must "
                        f"divide 2^{4 * m - 3}"
                    )

    def size(self, m: int) -> int:
        return self.sizes[1 << m]

    @classmethod
    def from_dict(cls, d: dict) -> "GaloisImageProfile":
        sizes = {int(k): int(v) for k, v in d["sizes"].items()}
        return cls(sizes=sizes, minus_i=bool(d["minusI"]), cm=bool(d.get("cm", False)))

    def to_dict(self) -> dict:
        return {
            "sizes": {str(k): self.sizes[k] for k in _SIZE_KEYS},
            "minusI": self.minus_i,
            "cm": self.cm,
        }


@dataclass(frozen=True)
class FieldDegreeData:
    """Degrees of the composite torsion-field towers at one level.

    KK'/K and LL'/L are generated by a halving quartic, and only the degree
    combinations (1,1) and (2,2) per side survive the exclusion lemmas; the
    containment booleans must echo the degree-1 cases.
    """

    deg_kk_over_k: int
    deg_ll_over_l: int
    deg_kk_over_kp: int
    deg_ll_over_lp: int
    k_in_kp: bool
    kp_in_k: bool

    def __post_init__(self):
        degs = (
            self.deg_kk_over_k,
            self.deg_ll_over_l,
            self.deg_kk_over_kp,
            self.deg_ll_over_lp,
        )
        for d in degs:
            if d not in (1, 2):
                raise ValidationError(f"tower degree {d} not in {{1, 2}}")
        if self.deg_kk_over_k == 2 and self.deg_ll_over_l == 1:
            raise ValidationError("degrees [KK':K]=2, [LL':L]=1 are excluded")
        if self.deg_kk_over_kp == 2 and self.deg_ll_over_lp == 1:
            raise ValidationError("degrees [KK':K']=2, [LL':L']=1 are excluded")
        if self.deg_kk_over_k == 1 and self.deg_ll_over_l == 2:
            raise ValidationError("degrees [KK':K]=1, [LL':L]=2 are out of range")
        if self.deg_kk_over_kp == 1 and self.deg_ll_over_lp == 2:
            raise ValidationError("degrees [KK':K']=1, [LL':L']=2 are out of range")
        # the group-size ratio constrains the two sides identically
        if Fraction(self.deg_kk_over_kp, self.deg_kk_over_k) != Fraction(
            self.deg_ll_over_lp, self.deg_ll_over_l
        ):
            raise ValidationError("tower degree ratios disagree between K and L")
        if self.kp_in_k != (self.deg_kk_over_k == 1):
            raise ValidationError("K' in K flag contradicts [KK':K]")
        if self.k_in_kp != (self.deg_kk_over_kp == 1):
            raise ValidationError("K in K' flag contradicts [KK':K']")


def c_from_degrees(d: FieldDegreeData) -> tuple[Fraction, Fraction]:
    """Mismatch coefficients when both images contain -I at this level:
    c = 1 - X with X = 2/[KK':K] - 1/[LL':L], and the primed mirror."""
    x = Fraction(2, d.deg_kk_over_k) - Fraction(1, d.deg_ll_over_l)
    xp = Fraction(2, d.deg_kk_over_kp) - Fraction(1, d.deg_ll_over_lp)
    for val in (x, xp):
        if not 0 <= val <= 1:
            raise ValidationError(f"conditional proportion {val} out of [0, 1]")
    c, cp = 1 - x, 1 - xp
    if c + cp > 1:
        raise ValidationError("coefficient pair sums above 1")
    return c, cp


def c_one_sided(minus_i_e: bool, minus_i_ep: bool) -> tuple[Fraction, Fraction]:
    """Coefficients when at most one image contains -I at this level.

    (True, False) -> (1, 0): every conditioned prime mismatches, and the
    other side stays 0 at every higher level too.  (False, False) -> (0, 0).
    """
    if minus_i_e and minus_i_ep:
        raise ValidationError("both images contain -I: use c_from_degrees")
    if minus_i_e:
        return Fraction(1), Fraction(0)
    if minus_i_ep:
        return Fraction(0), Fraction(1)
    return Fraction(0), Fraction(0)


@dataclass(frozen=True)
class CoefficientVector:
    """Mismatch coefficients for levels 2..4, both sides."""

    c: dict  # {2: Fraction, 3: Fraction, 4: Fraction}
    cp: dict

    def __post_init__(self):
        for m in _LEVELS:
            for side in (self.c, self.cp):
                if m not in side or side[m] not in (0, Fraction(1, 2), 1):
                    raise ValidationError(
                        f"coefficient at level {m} must be 0, 1/2, or 1"
                    )
            if self.c[m] + self.cp[m] > 1:
                raise ValidationError(f"coefficient pair at level {m} sums above 1")

    @classmethod
    def constant(cls, value) -> "CoefficientVector":
        v = Fraction(value)
        return cls({m: v for m in _LEVELS}, {m: v for m in _LEVELS})


@dataclass(frozen=True)
class ProportionBreakdown:
    head: Fraction
    tail: Fraction
    per_defect: tuple  # ((d_e, d_ep), Fraction) pairs, head levels + level 5

    def __post_init__(self):
        if self.total > Fraction(1, 4):
            raise ValidationError(f"total {self.total} exceeds the 1/4 bound")

    @property
    def total(self) -> Fraction:
        return self.head + self.tail


def tail(profile_e: GaloisImageProfile, profile_ep: GaloisImageProfile) -> Fraction:
    """Density of anomalous primes with defect depth >= 5, in closed form.

    Zero exactly when -I is missing; otherwise every level at and above 5
    contributes with coefficient 1/2, and the level sizes grow by 16 per
    step, summing to (8/15)(1/|G(32)| + 1/|G'(32)|).
    """
    if profile_e.cm or profile_ep.cm:
        raise ValidationError("tail() is for non-CM profiles; use cm_series_value")
    if profile_e.minus_i != profile_ep.minus_i:
        raise ValidationError(
            "-I membership must agree across a 2-isogenous pair"
        )
    if not profile_e.minus_i:
        return Fraction(0)
    return Fraction(8, 15) * (
        Fraction(1, profile_e.size(5)) + Fraction(1, profile_ep.size(5))
    )


def predict(
    profile_e: GaloisImageProfile,
    profile_ep: GaloisImageProfile,
    coefficients: CoefficientVector,
) -> ProportionBreakdown:
    """Exact predicted proportion: head over levels 2..4 plus the tail."""
    if profile_e.cm or profile_ep.cm:
        raise ValidationError("predict() is for non-CM profiles; use cm_predict")
    per = []
    head = Fraction(0)
    for m in _LEVELS:
        dens = coefficients.c[m] / profile_e.size(m)
        densp = coefficients.cp[m] / profile_ep.size(m)
        head += dens + densp
        if dens:
            per.append(((m + 1, m), dens))
        if densp:
            per.append(((m, m + 1), densp))
    t = tail(profile_e, profile_ep)
    if t:
        per.append(((6, 5), Fraction(1, 2) / profile_e.size(5)))
        per.append(((5, 6), Fraction(1, 2) / profile_ep.size(5)))
    return ProportionBreakdown(head, t, tuple(per))


def expected_defect_density(
    profile_e: GaloisImageProfile,
    profile_ep: GaloisImageProfile,
    coefficients: CoefficientVector,
    d_e: int,
    d_ep: int,
) -> Fraction:
    """Predicted density of one defect cell (for observed/expected tables)."""
    if abs(d_e - d_ep) != 1 or min(d_e, d_ep) < 2:
        return Fraction(0)
    m = min(d_e, d_ep)
    deeper = profile_e if d_e > d_ep else profile_ep
    if m <= 4:
        coeff = coefficients.c[m] if d_e > d_ep else coefficients.cp[m]
        return coeff / deeper.size(m)
    if not (profile_e.minus_i and profile_ep.minus_i):
        return Fraction(0)
    # level sizes above 5 grow by a factor of 16 per level
    return Fraction(1, 2) / (deeper.size(5) * 16 ** (m - 5))


def is_cm(curve: RationalCurve) -> tuple[bool, Optional[int]]:
    """Whether j(E) is one of the thirteen rational CM j-invariants."""
    j = curve.j_invariant
    if j in CM_J_INVARIANTS:
        return True, CM_J_INVARIANTS[j]
    return False, None


def cm_series_value() -> Fraction:
    """The CM anomalous density as the exact sum of its geometric series.

    One side contributes 1/2 at every level m >= 2 against image sizes
    2*4^(m-1):  sum_{m>=2} (1/2) / (2*4^(m-1)) = sum_{m>=2} 4^-m, summed in
    closed form = (1/16) / (1 - 1/4).
    """
    first = Fraction(1, 4) ** 2
    ratio = Fraction(1, 4)
    return first / (1 - ratio)


@dataclass(frozen=True)
class CMPrediction:
    value: Fraction  # 0 or 1/12
    rationale: str


def cm_predict(e1: RationalCurve, e2: RationalCurve) -> CMPrediction:
    """The CM dichotomy: 0 or 1/12, with the triggering rule.

    Zero when the pair shares a j-invariant (isomorphic endomorphism rings
    after reduction) or when any curve in the rational 2-isogeny class has a
    rational 4-torsion point; otherwise 1/12.
    """
    cm1, _ = is_cm(e1)
    cm2, _ = is_cm(e2)
    if not (cm1 and cm2):
        raise ValidationError("cm_predict requires both curves to have CM")
    if e1.j_invariant == e2.j_invariant:
        return CMPrediction(
            Fraction(0),
            f"equal j-invariants ({e1.j_invariant}): no anomalous primes",
        )
    cls = two_isogeny_class(e1)
    for key, curve in sorted(cls.curves.items()):
        if has_rational_4torsion(curve):
            return CMPrediction(
                Fraction(0),
                f"curve {key} in the 2-isogeny class has a rational 4-torsion "
                "point: no anomalous primes",
            )
    assert cm_series_value() == Fraction(1, 12)
    return CMPrediction(
        Fraction(1, 12),
        "distinct j-invariants and no rational 4-torsion in the class: the "
        "density series sums to 1/12",
    )


def bound_check(breakdown: ProportionBreakdown) -> bool:
    """Total density never exceeds 1/4."""
    return breakdown.total <= Fraction(1, 4)
