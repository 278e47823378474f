"""Kernel backend selection.

The hot per-prime primitives exist twice: a compiled Cython extension
(``_fast``) and a pure-Python reference (``_pure``).  The compiled backend is
used when importable and within its argument limits; the pure one is the
fallback and the ground truth.  Set ANOMSCAN_BACKEND=pure to force the
fallback (e.g. for benchmarking).

Both backends implement the same functions with identical outputs, including
identical pseudo-random sampling sequences.
"""

from __future__ import annotations

import os

from . import _pure

try:
    from . import _fast  # type: ignore[attr-defined]

    _HAVE_FAST = True
except ImportError:
    _fast = None
    _HAVE_FAST = False

if os.environ.get("ANOMSCAN_BACKEND", "").lower() == "pure":
    _HAVE_FAST = False

BACKEND = "fast" if _HAVE_FAST else "pure"

# the compiled kernels do 64-bit arithmetic; polynomial convolutions cap p
_FAST_P_LIMIT = 1 << 25

M64 = (1 << 64) - 1


def derive_seed(*parts: int) -> int:
    """Mix integers into a 64-bit seed (order-sensitive, deterministic)."""
    state = 0x9E3779B97F4A7C15
    for part in parts:
        state ^= part & M64
        state, _ = _pure.sm64_next(state)
        state ^= (part >> 64) & M64
        state, _ = _pure.sm64_next(state)
    return state or 1


def _use_fast(p: int) -> bool:
    return _HAVE_FAST and p < _FAST_P_LIMIT


def trace_of_frobenius(a: int, b: int, p: int, torsion: int = 1, seed: int = 1) -> int:
    if _use_fast(p):
        return _fast.trace_of_frobenius(a % p, b % p, p, torsion, seed & M64)
    return _pure.trace_of_frobenius(a, b, p, torsion, seed)


def cubic_root_count(a: int, b: int, p: int) -> int:
    if _use_fast(p):
        return _fast.cubic_root_count(a % p, b % p, p)
    return _pure.cubic_root_count(a, b, p)


def poly_splits(coeffs, p: int, ext: int = 1) -> bool:
    if _use_fast(p) and len(coeffs) <= 512:
        return _fast.poly_splits([c % p for c in coeffs], p, ext)
    return _pure.poly_splits([c % p for c in coeffs], p, ext)


def rhs_all_square(coeffs, a: int, b: int, p: int, ext: int = 1) -> bool:
    if _use_fast(p) and len(coeffs) <= 512:
        return _fast.rhs_all_square([c % p for c in coeffs], a % p, b % p, p, ext)
    return _pure.rhs_all_square([c % p for c in coeffs], a, b, p, ext)


def sylow_shape(
    a: int, b: int, p: int, ext: int, n_order: int, seed: int, npoints: int = 12
):
    if _use_fast(p):
        return _fast.sylow_shape(a % p, b % p, p, ext, n_order, seed & M64, npoints)
    return _pure.sylow_shape(a, b, p, ext, n_order, seed, npoints)
