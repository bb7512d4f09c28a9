"""Extended-precision scalars.

Complex values are python-flint ``acb`` balls: a midpoint plus a radius that
bounds all accumulated rounding error. The working precision is a global of
the flint context, so every computation that depends on it runs inside
:func:`workprec`, which serialises access across threads.
"""
from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from fractions import Fraction

from flint import acb, arb, ctx, fmpq

HPComplex = acb

_prec_lock = threading.RLock()


@contextmanager
def workprec(bits: int):
    """Run the enclosed block at ``bits`` of binary precision (thread-safe)."""
    bits = int(bits)
    if bits < 2:
        raise ValueError(f"precision must be >= 2 bits, got {bits}")
    with _prec_lock:
        old = ctx.prec
        ctx.prec = bits
        try:
            yield
        finally:
            ctx.prec = old


def current_prec() -> int:
    return ctx.prec


def to_arb(x) -> arb:
    """Exact conversion of ints, floats, Fractions and arbs."""
    if isinstance(x, arb):
        return x
    if isinstance(x, Fraction):
        return arb(fmpq(x.numerator, x.denominator))
    if isinstance(x, (int, float)):
        return arb(x)
    if isinstance(x, str):
        return to_arb(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to arb")


def to_acb(z) -> acb:
    """Convert a Python complex / real / pair / acb to an acb ball.

    Floats are binary rationals, so the conversion is exact.
    """
    if isinstance(z, acb):
        return z
    if isinstance(z, arb):
        return acb(z)
    if isinstance(z, tuple):
        return acb(to_arb(z[0]), to_arb(z[1]))
    if isinstance(z, complex):
        return acb(z.real, z.imag)
    if isinstance(z, (int, float, Fraction)):
        return acb(to_arb(z))
    raise TypeError(f"cannot convert {type(z).__name__} to acb")


def radius(z) -> float:
    """Upper bound on |z - midpoint(z)| as a float."""
    if isinstance(z, arb):
        return _up(float(z.rad()))
    return _up(float(z.real.rad()) + float(z.imag.rad()))


def midpoint(z: acb) -> acb:
    return acb(z.real.mid(), z.imag.mid())


def to_complex(z) -> complex:
    if isinstance(z, arb):
        return complex(float(z.mid()), 0.0)
    return complex(float(z.real.mid()), float(z.imag.mid()))


def abs_mid(z: acb) -> float:
    """|midpoint(z)| as a float (may over- or under-flow for huge balls)."""
    return math.hypot(float(z.real.mid()), float(z.imag.mid()))


def log_abs_mid(z: acb) -> float:
    """log |midpoint(z)|, robust to magnitudes outside the double range."""
    m = midpoint(z)
    if m.is_zero():
        return -math.inf
    return float(abs(m).log().mid())


def _up(x: float) -> float:
    """Round a nonnegative float bound one ulp upward."""
    return math.nextafter(x, math.inf) if x > 0 else x
