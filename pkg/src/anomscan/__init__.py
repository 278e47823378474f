"""anomscan: anomalous-prime scanner and exact density predictor for
rationally 2-isogenous elliptic curves over Q."""

__version__ = "0.1.0"

from .curves import (  # noqa: F401
    BadPrime,
    RationalCurve,
    ReducedCurve,
    SylowShape,
    TraceData,
    is_good_prime,
    is_supersingular,
    random_point,
    reduce_curve,
    sylow2_shape,
    trace_of_frobenius,
)
from .numtheory import (  # noqa: F401
    Fq,
    FqPoly,
    NoRoot,
    Rational,
    legendre,
    prime_stream,
    roots,
    splits_completely,
    sqrt_fq,
    squarefree_part,
    v2,
)
from .scanner import (  # noqa: F401
    CurvePair,
    DefectLabel,
    InternalInvariantError,
    PrimeRecord,
    classify_prime,
    defect_table,
    estimate_c,
    scan,
)
from .theory import (  # noqa: F401
    CoefficientVector,
    FieldDegreeData,
    GaloisImageProfile,
    ProportionBreakdown,
    ValidationError,
    bound_check,
    c_from_degrees,
    c_one_sided,
    cm_predict,
    cm_series_value,
    is_cm,
    predict,
    tail,
)
from .torsion import (  # noqa: F401
    Volcano,
    build_volcano,
    exact_order_poly,
    full_torsion_level_verified,
    halving_quartic,
    has_rational_4torsion,
    kohel_height,
    quartic_split_type,
    rational_two_torsion,
    two_isogeny_class,
    velu2,
    x_all_rational,
)
