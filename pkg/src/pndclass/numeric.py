"""Arithmetic modes shared by every module.

Three modes are supported:

``double``
    IEEE floats. Fast, used for irrational closed forms.
``extended``
    :class:`mpmath.mpf` at a configurable number of bits (default 200).
``exact``
    :class:`fractions.Fraction`. Decimal inputs are read as exact decimals.

Sequences are kept homogeneous: every value of a PND or moment sequence
lives in a single mode, and :func:`mode_of` recovers it from the values.
"""

from __future__ import annotations

import contextlib
import math
from decimal import Decimal
from fractions import Fraction

import mpmath

DOUBLE = "double"
EXTENDED = "extended"
EXACT = "exact"
MODES = (DOUBLE, EXTENDED, EXACT)

DEFAULT_PREC = 200

# relative tolerances used when the caller does not give one
DEFAULT_TOLERANCE = {DOUBLE: 1e-9, EXTENDED: 1e-30, EXACT: 0}

# largest n with n! representable as a double
MAX_DOUBLE_FACTORIAL = 170


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"unknown arithmetic mode {mode!r}; expected one of {MODES}")
    return mode


def default_tolerance(mode):
    return DEFAULT_TOLERANCE[check_mode(mode)]


def working_precision(prec=None):
    """Context raising mpmath precision to at least ``prec`` bits.

    Never lowers a precision already set by an enclosing context.
    """
    prec = DEFAULT_PREC if prec is None else int(prec)
    return mpmath.workprec(max(prec, mpmath.mp.prec))


def is_mpf(x):
    return isinstance(x, mpmath.mpf)


def mode_of(values):
    """Infer the arithmetic mode of a homogeneous sequence."""
    kinds = set()
    for v in values:
        if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
            kinds.add(EXACT)
        elif is_mpf(v):
            kinds.add(EXTENDED)
        else:
            kinds.add(DOUBLE)
    if not kinds:
        return DOUBLE
    if EXTENDED in kinds:
        return EXTENDED
    if DOUBLE in kinds:
        return DOUBLE
    return EXACT


def _mpf_to_fraction(x):
    man, exp = x.man_exp
    if man == 0:
        return Fraction(0)
    return Fraction(man) * Fraction(2) ** exp


def convert(x, mode):
    """Convert a real number to ``mode``.

    Floats going to ``exact`` or ``extended`` are read through their shortest
    decimal repr, so ``0.305`` becomes ``61/200`` rather than the nearest
    binary fraction.
    """
    if mode == DOUBLE:
        return float(x)
    if mode == EXACT:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, bool):
            raise TypeError("bool is not a number here")
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ValueError(f"non-finite value {x!r} has no exact form")
            return Fraction(repr(x))
        if isinstance(x, (str, Decimal)):
            return Fraction(x)
        if is_mpf(x):
            return _mpf_to_fraction(x)
        raise TypeError(f"cannot convert {type(x).__name__} to exact")
    if mode == EXTENDED:
        if is_mpf(x):
            return +x
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        if isinstance(x, float):
            return mpmath.mpf(repr(x))
        if isinstance(x, Decimal):
            return mpmath.mpf(str(x))
        return mpmath.mpf(x)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def convert_all(values, mode):
    return tuple(convert(v, mode) for v in values)


def parse_number(text, mode):
    """Parse a decimal literal; exact mode keeps every printed digit."""
    text = text.strip()
    if mode == EXACT:
        return Fraction(text)
    if mode == EXTENDED:
        return mpmath.mpf(text)
    return float(text)


def to_float(x):
    """Best-effort float; overflow gives ``inf`` with the right sign."""
    try:
        return float(x)
    except OverflowError:
        return math.copysign(math.inf, 1 if x > 0 else -1)


def zero(mode):
    return {DOUBLE: 0.0, EXTENDED: mpmath.mpf(0), EXACT: Fraction(0)}[mode]


def one(mode):
    return {DOUBLE: 1.0, EXTENDED: mpmath.mpf(1), EXACT: Fraction(1)}[mode]


def exp(x, mode):
    """``e**x`` in ``mode``.

    In exact mode the result is a rational approximation good to the working
    precision; callers use it once per atom so that the structure of the
    measure (positive weights times powers) stays exact.
    """
    if mode == DOUBLE:
        return math.exp(float(x))
    with working_precision():
        v = mpmath.exp(convert(x, EXTENDED))
    return v if mode == EXTENDED else _mpf_to_fraction(v)


def cos(x, mode):
    """Cosine in ``mode``; exact mode rationalizes like :func:`exp`."""
    if mode == DOUBLE:
        return math.cos(float(x))
    with working_precision():
        v = mpmath.cos(convert(x, EXTENDED))
    return v if mode == EXTENDED else _mpf_to_fraction(v)


def sqrt(x):
    """Square root for display purposes (slack values); returns a float-like."""
    if isinstance(x, Fraction):
        return math.sqrt(x) if x >= 0 else math.nan
    if is_mpf(x):
        with working_precision():
            return mpmath.sqrt(x)
    return math.sqrt(x) if x >= 0 else math.nan


def factorial(n, mode):
    """``n!`` computed as an exact integer, then converted.

    Double mode refuses orders whose factorial overflows instead of returning
    ``inf``; callers escalate to extended mode.
    """
    f = math.factorial(n)
    if mode == DOUBLE:
        if n > MAX_DOUBLE_FACTORIAL:
            raise OverflowError(f"{n}! does not fit in a double")
        return float(f)
    return convert(f, mode)


def fsum(values, mode):
    """Error-compensated sum (exact for rationals)."""
    values = list(values)
    if mode == DOUBLE:
        return math.fsum(values)
    if mode == EXTENDED:
        with working_precision():
            return mpmath.fsum(values)
    return sum(values, Fraction(0))


def unit_roundoff(mode):
    """Relative rounding error of one operation in ``mode`` (0 for exact)."""
    if mode == DOUBLE:
        return 2.0**-53
    if mode == EXTENDED:
        return 2.0 ** -max(DEFAULT_PREC, mpmath.mp.prec)
    return 0.0


def context(mode):
    """Precision guard for arithmetic on values of ``mode``."""
    return working_precision() if mode == EXTENDED else contextlib.nullcontext()
