"""Command-line surface: scans, reports, exact predictions, CM
classification, volcanoes, and LMFDB fixture management.

Exit codes: 0 success, 2 validation error, 3 network error, 4 internal
invariant violation.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from .curves import (
    BadPrime,
    RationalCurve,
    ReducedCurve,
    is_good_prime,
    reduce_curve,
    trace_of_frobenius,
)
from .numtheory import is_prime
from .scanner import (
    DEFAULT_MASTER_SEED,
    CurvePair,
    InternalInvariantError,
    append_records,
    defect_table,
    estimate_c,
    read_records,
    resume_state,
    scan,
)
from .theory import (
    CoefficientVector,
    GaloisImageProfile,
    ValidationError,
    cm_predict,
    expected_defect_density,
    is_cm,
    predict,
)
from .torsion import (
    build_volcano,
    kohel_height,
    q_isomorphism_key,
    rational_two_torsion,
    velu2,
    volcano_to_dot,
)

EXIT_VALIDATION = 2
EXIT_NETWORK = 3
EXIT_INTERNAL = 4

_FIXTURE_PATH = Path(__file__).parent / "fixtures" / "curves.json"
_LMFDB_API = "https://www.lmfdb.org/api/ec_curvedata/?lmfdb_label={label}&_format=json"


class NetworkError(Exception):
    pass


def _cache_dir() -> Path:
    env = os.environ.get("ANOMSCAN_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "anomscan"


def _load_fixtures() -> dict:
    with open(_FIXTURE_PATH, "r", encoding="ascii") as fh:
        return json.load(fh)


def _lookup_label(label: str):
    """Fixture cache first, then the on-disk fetch cache."""
    fixtures = _load_fixtures()
    if label in fixtures["curves"]:
        d = fixtures["curves"][label]
        return RationalCurve(Fraction(d["a"]), Fraction(d["b"]), label)
    cache = _cache_dir() / f"{label}.json"
    if cache.exists():
        with open(cache, "r", encoding="ascii") as fh:
            d = json.load(fh)
        a1, a2, a3, a4, a6 = (Fraction(v) for v in d["ainvs"])
        a, b = _short_weierstrass(a1, a2, a3, a4, a6)
        return RationalCurve(a, b, label)
    return None


def _short_weierstrass(a1, a2, a3, a4, a6) -> tuple[Fraction, Fraction]:
    """Complete the square and depress the cubic: a = -c4/48, b = -c6/864."""
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    c4 = b2 * b2 - 24 * b4
    c6 = -b2**3 + 36 * b2 * b4 - 216 * b6
    return Fraction(-c4, 48), Fraction(-c6, 864)


def _fetch_lmfdb(label: str, timeout: float = 30.0) -> dict:
    import requests

    url = _LMFDB_API.format(label=label)
    try:
        resp = requests.get(url, timeout=timeout)
        resp.raise_for_status()
        payload = resp.json()
    except Exception as exc:  # noqa: BLE001 - network layer boundary
        raise NetworkError(f"LMFDB fetch failed for {label}: {exc}") from exc
    data = payload.get("data") or []
    if not data:
        raise NetworkError(f"LMFDB returned no curve for label {label}")
    ainvs = data[0].get("ainvs")
    if not ainvs or len(ainvs) != 5:
        raise NetworkError(f"LMFDB record for {label} has no usable ainvs")
    return {"label": label, "ainvs": [str(v) for v in ainvs]}


def resolve_curve(spec: str, allow_network: bool = False) -> RationalCurve:
    """Resolve a curve spec: an LMFDB-style label, or explicit long
    Weierstrass coefficients 'a1,a2,a3,a4,a6' (rationals allowed)."""
    spec = spec.strip()
    if "," in spec or spec.startswith("["):
        parts = spec.strip("[]").split(",")
        if len(parts) == 2:
            a, b = (Fraction(v.strip()) for v in parts)
            return RationalCurve(a, b)
        if len(parts) != 5:
            raise ValidationError(
                f"explicit coefficients need a1,a2,a3,a4,a6 (got {len(parts)})"
            )
        a1, a2, a3, a4, a6 = (Fraction(v.strip()) for v in parts)
        a, b = _short_weierstrass(a1, a2, a3, a4, a6)
        return RationalCurve(a, b)
    curve = _lookup_label(spec)
    if curve is not None:
        return curve
    if allow_network:
        rec = _fetch_lmfdb(spec)
        cache = _cache_dir()
        cache.mkdir(parents=True, exist_ok=True)
        with open(cache / f"{spec}.json", "w", encoding="ascii") as fh:
            json.dump(rec, fh)
        a1, a2, a3, a4, a6 = (Fraction(v) for v in rec["ainvs"])
        a, b = _short_weierstrass(a1, a2, a3, a4, a6)
        return RationalCurve(a, b, spec)
    raise ValidationError(
        f"unknown curve label {spec!r}: not in the bundled fixtures "
        f"({_FIXTURE_PATH}) or the cache ({_cache_dir()}); "
        "pass --allow-network to fetch from the LMFDB"
    )


def _resolve_class_pair(label: str):
    """For a class label, the first rationally 2-isogenous pair of members
    (member order as listed in the fixtures)."""
    fixtures = _load_fixtures()
    members = fixtures.get("classes", {}).get(label)
    if not members:
        return None
    curves = [_lookup_label(m) for m in members]
    for i, e1 in enumerate(curves):
        if e1 is None:
            continue
        images = {q_isomorphism_key(velu2(e1, x)) for x in rational_two_torsion(e1)}
        for e2 in curves[i + 1 :]:
            if e2 is not None and q_isomorphism_key(e2) in images:
                return e1, e2
    return None


def verify_two_isogenous(e1: RationalCurve, e2: RationalCurve) -> Fraction:
    """The kernel x-coordinate of a rational 2-isogeny e1 -> e2 (up to
    Q-isomorphism of the target), or a ValidationError."""
    target = q_isomorphism_key(e2)
    for x0 in rational_two_torsion(e1):
        if q_isomorphism_key(velu2(e1, x0)) == target:
            return x0
    raise ValidationError(
        f"curves {e1} and {e2} are not rationally 2-isogenous"
    )


def _load_profile(path: str) -> GaloisImageProfile:
    with open(path, "r", encoding="ascii") as fh:
        return GaloisImageProfile.from_dict(json.load(fh))


def _run(fn):
    """Run a command body, mapping exceptions to the exit-code contract."""
    try:
        fn()
    except (ValidationError, BadPrime, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except NetworkError as exc:
        click.echo(f"network error: {exc}", err=True)
        sys.exit(EXIT_NETWORK)
    except (InternalInvariantError, ArithmeticError, AssertionError) as exc:
        click.echo(f"internal invariant violation: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)


@click.group()
@click.version_option(version=__version__)
def main():
    """Anomalous-prime scanner for rationally 2-isogenous elliptic curves."""


@main.command("scan")
@click.option("--e1", required=True, help="first curve (label or a1,..,a6)")
@click.option("--e2", required=True, help="second curve")
@click.option("--n", "num", required=True, type=int, help="number of good primes")
@click.option("--seed", default=DEFAULT_MASTER_SEED, type=int, show_default=True)
@click.option("--threads", default=1, type=int, show_default=True)
@click.option("--block-size", default=2048, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--allow-network", is_flag=True)
def cmd_scan(e1, e2, num, seed, threads, block_size, out, allow_network):
    """Scan good primes for a 2-isogenous pair, appending JSONL records.

    Resumes an interrupted scan when OUT already has records.
    """

    def body():
        c1 = resolve_curve(e1, allow_network)
        c2 = resolve_curve(e2, allow_network)
        verify_two_isogenous(c1, c2)
        pair = CurvePair(c1, c2)
        start_p, good = resume_state(out)
        if good >= num:
            click.echo(f"{out}: already contains {good} good primes")
            return
        stream = scan(
            pair,
            num,
            master_seed=seed,
            block_size=block_size,
            workers=threads,
            start_prime=start_p,
            good_already=good,
        )
        n_anom = 0
        n_good = good
        with open(out, "a", encoding="ascii") as fh:
            for rec in stream:
                fh.write(rec.to_json())
                fh.write("\n")
                if rec.good:
                    n_good += 1
                if rec.defect is not None:
                    n_anom += 1
        click.echo(
            f"scanned through {n_good} good primes for {pair.label()}; "
            f"{n_anom} anomalous in this run -> {out}"
        )

    _run(body)


@main.command("report")
@click.argument("record_file", type=click.Path(exists=True))
def cmd_report(record_file):
    """Render the defect histogram of a scan file."""

    def body():
        recs = read_records(record_file)
        tab = defect_table(recs)
        click.echo(f"good primes: {tab.n_good}")
        for key, count, _ in tab.rows():
            click.echo(f"{count:>8}  primes of defect ({key[0]},{key[1]})")
        click.echo(f"{'':>8}  {'-' * 30}")
        click.echo(f"{tab.total:>8}  anomalous primes")

    _run(body)


@main.command("estimate-c")
@click.argument("record_file", type=click.Path(exists=True))
@click.option("--m", "levels", multiple=True, type=int, help="levels (default 2..5)")
def cmd_estimate_c(record_file, levels):
    """Print raw and snapped mismatch coefficients with Wilson intervals."""

    def body():
        recs = read_records(record_file)
        ms = sorted(levels) if levels else [2, 3, 4, 5]
        for m in ms:
            if not 2 <= m <= 5:
                raise ValidationError(f"level {m} out of range 2..5")
            for side, tag in (("E", "c"), ("Ep", "c'")):
                est = estimate_c(recs, m, side)
                raw = "n/a" if est.raw is None else f"{est.raw} ({float(est.raw):.4f})"
                snap = "indeterminate" if est.snapped is None else str(est.snapped)
                click.echo(
                    f"m={m} {tag:>2}: n={est.n_conditioned:<6} hits={est.n_hits:<5} "
                    f"raw={raw:<22} wilson99=({est.wilson[0]:.4f}, {est.wilson[1]:.4f}) "
                    f"snapped={snap}"
                )

    _run(body)


def _parse_c_overrides(cs) -> CoefficientVector:
    """--c m=VALUE[,VALUE'] overrides, e.g. --c 4=1/2 or --c 2=0,1/2."""
    c = {m: Fraction(0) for m in (2, 3, 4)}
    cp = {m: Fraction(0) for m in (2, 3, 4)}
    for item in cs:
        lhs, _, rhs = item.partition("=")
        m = int(lhs)
        if m not in (2, 3, 4):
            raise ValidationError(f"coefficient level {m} must be 2, 3, or 4")
        parts = rhs.split(",")
        c[m] = Fraction(parts[0])
        cp[m] = Fraction(parts[1]) if len(parts) > 1 else Fraction(parts[0])
    return CoefficientVector(c, cp)


@main.command("predict")
@click.option("--profile1", required=True, type=click.Path(exists=True))
@click.option("--profile2", required=True, type=click.Path(exists=True))
@click.option("--c", "cs", multiple=True, help="coefficient overrides m=c[,c']")
def cmd_predict(profile1, profile2, cs):
    """Exact rational head/tail/total from image profiles."""

    def body():
        p1 = _load_profile(profile1)
        p2 = _load_profile(profile2)
        cv = _parse_c_overrides(cs)
        breakdown = predict(p1, p2, cv)
        click.echo(f"head  = {breakdown.head}")
        click.echo(f"tail  = {breakdown.tail}")
        click.echo(f"total = {breakdown.total}")
        for (d1, d2), dens in breakdown.per_defect:
            click.echo(f"  defect ({d1},{d2}): density {dens}")

    _run(body)


@main.command("compare")
@click.argument("record_file", type=click.Path(exists=True))
@click.option("--profile1", required=True, type=click.Path(exists=True))
@click.option("--profile2", required=True, type=click.Path(exists=True))
@click.option("--c", "cs", multiple=True, help="coefficient overrides m=c[,c']")
def cmd_compare(record_file, profile1, profile2, cs):
    """Observed vs expected defect counts."""

    def body():
        recs = read_records(record_file)
        p1 = _load_profile(profile1)
        p2 = _load_profile(profile2)
        if cs:
            cv = _parse_c_overrides(cs)
        else:
            # estimate coefficients from the records themselves
            c = {}
            cp = {}
            for m in (2, 3, 4):
                est = estimate_c(recs, m, "E")
                estp = estimate_c(recs, m, "Ep")
                c[m] = est.snapped if est.snapped is not None else Fraction(0)
                cp[m] = estp.snapped if estp.snapped is not None else Fraction(0)
            cv = CoefficientVector(c, cp)
        tab = defect_table(
            recs, lambda d1, d2: expected_defect_density(p1, p2, cv, d1, d2)
        )
        click.echo(f"{'defect':>10} {'observed':>10} {'expected':>12} {'ratio':>8}")
        keys = sorted(set(tab.counts) | set(tab.expected or {}), key=lambda k: (min(k), k))
        for key in keys:
            obs = tab.counts.get(key, 0)
            exp = (tab.expected or {}).get(key)
            if exp is None:
                click.echo(f"{str(key):>10} {obs:>10} {'-':>12} {'-':>8}")
            else:
                ratio = f"{obs / float(exp):.2f}" if exp else "-"
                click.echo(f"{str(key):>10} {obs:>10} {float(exp):>12.2f} {ratio:>8}")
        click.echo(f"total observed: {tab.total}, good primes: {tab.n_good}")

    _run(body)


@main.command("cm-classify")
@click.option("--e1", required=True, help="curve label, class label, or coefficients")
@click.option("--e2", default=None, help="second curve (omit for a class label)")
@click.option("--allow-network", is_flag=True)
def cmd_cm_classify(e1, e2, allow_network):
    """Classify a CM pair: prints the exact density 0 or 1/12."""

    def body():
        if e2 is None:
            pair = _resolve_class_pair(e1)
            if pair is None:
                raise ValidationError(
                    f"{e1!r} is not a known class label with a 2-isogenous pair; "
                    "pass --e1/--e2 curve specs"
                )
            c1, c2 = pair
        else:
            c1 = resolve_curve(e1, allow_network)
            c2 = resolve_curve(e2, allow_network)
        verify_two_isogenous(c1, c2)
        result = cm_predict(c1, c2)
        click.echo(f"P = {result.value}")
        click.echo(f"reason: {result.rationale}")

    _run(body)


@main.command("volcano")
@click.option("--e", "espec", required=True, help="curve (label or coefficients)")
@click.option("--p", "prime", required=True, type=int)
@click.option("--squared", is_flag=True, help="work over F_{p^2} instead of F_p")
@click.option("--dot", "dot_path", default=None, type=click.Path())
@click.option("--seed", default=DEFAULT_MASTER_SEED, type=int, show_default=True)
@click.option("--allow-network", is_flag=True)
def cmd_volcano(espec, prime, squared, dot_path, seed, allow_network):
    """Build the 2-isogeny volcano at one prime; cross-check its height."""

    def body():
        if not is_prime(prime) or prime < 5:
            raise ValidationError(f"p = {prime} must be a prime >= 5")
        curve = resolve_curve(espec, allow_network)
        base = reduce_curve(curve, prime)
        tr = trace_of_frobenius(base, seed=seed)
        if tr.ap % prime == 0:
            raise ValidationError(
                f"supersingular reduction at {prime}: no volcano structure"
            )
        degree = 2 if squared else 1
        red = reduce_curve(curve, prime, degree)
        v = build_volcano(red, tr, seed=seed)
        q = prime * prime if squared else prime
        t = tr.ap * tr.ap - 2 * prime if squared else tr.ap
        kh = kohel_height(t, q)
        click.echo(
            f"p={prime} q={q} trace={tr.ap} order={v.n_order} "
            f"nodes={len(v.nodes)} height={v.height}"
        )
        status = "agree" if kh == v.height else "MISMATCH"
        click.echo(f"kohel height: {kh} ({status})")
        if kh != v.height:
            raise InternalInvariantError(
                f"volcano height {v.height} != discriminant formula {kh}"
            )
        for key in sorted(v.nodes, key=str):
            n = v.nodes[key]
            click.echo(
                f"  level {n.level}: j={n.j} shape=Z/2^{n.shape.a} x Z/2^{n.shape.b} "
                f"edges={len(n.neighbors)}"
            )
        if dot_path:
            with open(dot_path, "w", encoding="ascii") as fh:
                fh.write(volcano_to_dot(v))
                fh.write("\n")
            click.echo(f"wrote {dot_path}")

    _run(body)


@main.command("fetch-lmfdb")
@click.option("--label", required=True)
def cmd_fetch_lmfdb(label):
    """Fetch a curve from the LMFDB into the local cache."""

    def body():
        rec = _fetch_lmfdb(label)
        cache = _cache_dir()
        cache.mkdir(parents=True, exist_ok=True)
        path = cache / f"{label}.json"
        with open(path, "w", encoding="ascii") as fh:
            json.dump(rec, fh)
        click.echo(f"cached {label} -> {path}")

    _run(body)


if __name__ == "__main__":
    main()
