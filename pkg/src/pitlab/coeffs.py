"""Coefficient sequences for entire functions f(z) = sum a_n z^n.

A sequence is a phase rule (unit complex factor per index) times a modulus
rule (1/n!, a Hadamard-type product c_n, or 1). Coefficients are computed
lazily as flint balls at the requested precision and memoised per precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar

import numpy as np
from flint import acb, arb, fmpq

from . import hp
from .hp import workprec

ALPHA_TOKENS = ("sqrt2", "golden", "pi")
TWO_PI = 2.0 * math.pi


class SequenceError(ValueError):
    pass


# --------------------------------------------------------------------------
# alpha parsing

def parse_alpha(value) -> str:
    """Normalise an alpha to a token or an exact rational string ``p/q``.

    Accepts floats (taken as the exact binary rational they denote), ints,
    Fractions, decimal strings, ``p/q`` strings and the symbolic tokens
    ``sqrt2``, ``golden`` ((sqrt5 - 1)/2) and ``pi``.
    """
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ALPHA_TOKENS:
            return v
        if v in ("sqrt(2)", "√2"):
            return "sqrt2"
        try:
            frac = Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise SequenceError(f"unrecognised alpha {value!r}") from exc
        return f"{frac.numerator}/{frac.denominator}"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SequenceError(f"alpha must be finite, got {value}")
        frac = Fraction(value)
        return f"{frac.numerator}/{frac.denominator}"
    if isinstance(value, (int, Fraction)):
        frac = Fraction(value)
        return f"{frac.numerator}/{frac.denominator}"
    raise SequenceError(f"unsupported alpha type {type(value).__name__}")


def alpha_fraction(alpha: str) -> Fraction | None:
    return None if alpha in ALPHA_TOKENS else Fraction(alpha)


def alpha_arb(alpha: str) -> arb:
    """Alpha as a ball at the current working precision."""
    if alpha == "sqrt2":
        return arb(2).sqrt()
    if alpha == "golden":
        return (arb(5).sqrt() - 1) / 2
    if alpha == "pi":
        return arb.pi()
    frac = Fraction(alpha)
    return arb(fmpq(frac.numerator, frac.denominator))


def alpha_float(alpha: str) -> float:
    with workprec(64):
        return float(alpha_arb(alpha).mid())


def _unit(turns) -> acb:
    """exp(2 pi i * turns) for an arb or fmpq argument."""
    return acb.exp_pi_i(acb(2 * arb(turns)))


def minimal_quadratic_period(p: int, q: int) -> int:
    """Smallest T >= 1 with (n+T)^2 p = n^2 p (mod q) for every n."""
    for T in range(1, q + 1):
        if q % T == 0 and all(((n + T) ** 2 - n * n) * p % q == 0 for n in range(q)):
            return T
    return q


# --------------------------------------------------------------------------
# phase rules. Each has ``factor(n)`` returning the unit complex (or zero)
# multiplying the modulus, evaluated at the current working precision.

@dataclass(frozen=True)
class QuadraticPhase:
    """phase(n) = 2 pi n^2 alpha (mod 2 pi)."""

    alpha: str
    label: str | None = None
    kind: ClassVar[str] = "quadratic"

    @property
    def period(self) -> int | None:
        frac = alpha_fraction(self.alpha)
        if frac is None:
            return None
        return minimal_quadratic_period(frac.numerator, frac.denominator)

    def reduced_turns(self, n: int) -> arb:
        """frac(n^2 alpha) carrying at least the current precision."""
        frac = alpha_fraction(self.alpha)
        n2 = n * n
        if frac is not None:
            x = (n2 * frac) % 1
            return arb(fmpq(x.numerator, x.denominator))
        extra = 2 * n2.bit_length() + 16
        with workprec(hp.current_prec() + extra):
            x = alpha_arb(self.alpha) * n2
            return x - x.mid().floor()

    def factor(self, n: int) -> acb:
        return _unit(self.reduced_turns(n))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "alpha": self.alpha}
        if self.label:
            d["label"] = self.label
        return d


@dataclass(frozen=True)
class RationalPhase:
    """phase(n) = 2 pi n^2 p / q, computed exactly from the residue n^2 p mod q."""

    p: int
    q: int
    kind: ClassVar[str] = "rational"

    def __post_init__(self):
        if self.q < 1:
            raise SequenceError(f"q must be positive, got {self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise SequenceError(f"gcd({self.p}, {self.q}) != 1")

    @property
    def period(self) -> int:
        return minimal_quadratic_period(self.p, self.q)

    def residue(self, n: int) -> int:
        return (n * n * self.p) % self.q

    def factor(self, n: int) -> acb:
        return _unit(fmpq(self.residue(n), self.q))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p, "q": self.q}


@dataclass(frozen=True)
class PsiExpPhase:
    """phase(n) = psi(n) with psi(zeta) = sum_k c_k exp(-lam_k zeta)."""

    c: tuple[float, ...]
    lam: tuple[float, ...]
    kind: ClassVar[str] = "psi_exp"
    period: ClassVar[None] = None

    def __post_init__(self):
        if len(self.c) != len(self.lam) or not self.c:
            raise SequenceError("c and lam must be nonempty lists of equal length")
        if any(not (l > 0) for l in self.lam):
            raise SequenceError("every decay rate lam_k must be > 0")

    def psi(self, zeta: complex) -> complex:
        import cmath

        return sum(ck * cmath.exp(-lk * zeta) for ck, lk in zip(self.c, self.lam))

    def phase_arb(self, n: int) -> arb:
        total = arb(0)
        for ck, lk in zip(self.c, self.lam):
            total += arb(ck) * (-arb(lk) * n).exp()
        return total

    def factor(self, n: int) -> acb:
        return acb(0, self.phase_arb(n)).exp()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": list(self.c), "lam": list(self.lam)}


@dataclass(frozen=True)
class HardyPhase:
    """(n + a)^{i t} for n >= 1 and 0 at n = 0 (the series starts at n = 1)."""

    t: float
    a: float
    kind: ClassVar[str] = "hardy"
    period: ClassVar[None] = None

    def __post_init__(self):
        if not (self.a > 0):
            raise SequenceError(f"a must be positive, got {self.a}")

    def factor(self, n: int) -> acb:
        if n == 0:
            return acb(0)
        return acb(0, arb(self.t) * (arb(n) + arb(self.a)).log()).exp()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s_imag": self.t, "a": self.a}


@dataclass(frozen=True)
class ExplicitPhase:
    """Listed phases (radians), extended periodically past the end of the list."""

    phases: tuple[float, ...]
    kind: ClassVar[str] = "explicit"

    def __post_init__(self):
        if not self.phases:
            raise SequenceError("explicit phase list is empty")

    @property
    def period(self) -> int:
        L = len(self.phases)
        for T in range(1, L + 1):
            if L % T == 0 and all(self.phases[j] == self.phases[(j + T) % L] for j in range(L)):
                return T
        return L

    def factor(self, n: int) -> acb:
        return acb(0, arb(self.phases[n % len(self.phases)])).exp()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phases": list(self.phases)}


@dataclass(frozen=True)
class CombinedPhase:
    """Even indices from one rule rotated by theta_even, odd from another."""

    even: object
    odd: object
    theta_even: float
    theta_odd: float
    kind: ClassVar[str] = "combined"
    period: ClassVar[None] = None

    def factor(self, n: int) -> acb:
        rule, theta = (self.even, self.theta_even) if n % 2 == 0 else (self.odd, self.theta_odd)
        return rule.factor(n) * acb(0, -arb(theta) * n).exp()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "even": self.even.to_dict(),
            "odd": self.odd.to_dict(),
            "theta_even": self.theta_even,
            "theta_odd": self.theta_odd,
        }


def phase_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "quadratic":
        return QuadraticPhase(parse_alpha(d["alpha"]), d.get("label"))
    if kind == "rational":
        return RationalPhase(int(d["p"]), int(d["q"]))
    if kind == "psi_exp":
        return PsiExpPhase(tuple(map(float, d["c"])), tuple(map(float, d["lam"])))
    if kind == "hardy":
        return HardyPhase(float(d["s_imag"]), float(d["a"]))
    if kind == "explicit":
        return ExplicitPhase(tuple(map(float, d["phases"])))
    if kind == "combined":
        return CombinedPhase(
            phase_from_dict(d["even"]),
            phase_from_dict(d["odd"]),
            float(d["theta_even"]),
            float(d["theta_odd"]),
        )
    raise SequenceError(f"unknown phase kind {kind!r}")


# --------------------------------------------------------------------------
# modulus rules

@dataclass(frozen=True)
class FactorialModulus:
    kind: ClassVar[str] = "factorial"
    rho: ClassVar[float] = 1.0

    def value(self, n: int) -> arb:
        return 1 / arb.fac_ui(n)

    def log_bound(self, n: int) -> float:
        return -math.lgamma(n + 1)

    def ratio_bound(self, n: int) -> float:
        """Upper bound on M_{m+1}/M_m for every m >= n (non-increasing)."""
        return 1.0 / (n + 1)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class UnitModulus:
    kind: ClassVar[str] = "unit"
    rho: ClassVar[float] = 1.0  # nominal; the series has radius of convergence 1

    def value(self, n: int) -> arb:
        return arb(1)

    def log_bound(self, n: int) -> float:
        return 0.0

    def ratio_bound(self, n: int) -> float:
        return 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Theorem5Modulus:
    """c_0 = 1, c_{n+1} = c_n b_n with b_n the Taylor coefficients of (1-w)^{-s}.

    b_n = b_{n-1} (n - 1 + s) / n, so b_n = Gamma(n+s) / (Gamma(s) n!) and
    -log c_n = (1 - s) n log n - c n + o(n).
    """

    s_H: float
    _tables: dict = field(default_factory=dict, compare=False, repr=False)
    kind: ClassVar[str] = "theorem5"

    def __post_init__(self):
        if not (0.0 < self.s_H < 1.0):
            raise SequenceError(f"s_H must lie in (0, 1), got {self.s_H}")

    @property
    def rho(self) -> float:
        return 1.0 / (1.0 - self.s_H)

    def value(self, n: int) -> arb:
        prec = hp.current_prec()
        with hp._prec_lock:
            table = self._tables.setdefault(prec, [arb(1)])
            if len(table) <= n:
                s = arb(self.s_H)
                b = self._b_arb(len(table) - 1, s)
                c = table[-1]
                for k in range(len(table) - 1, n):
                    c = c * b
                    table.append(c)
                    b = b * (k + s) / (k + 1)
            return table[n]

    @staticmethod
    def _b_arb(k: int, s: arb) -> arb:
        b = arb(1)
        for j in range(1, k + 1):
            b = b * (j - 1 + s) / j
        return b

    def log_b(self, n) -> np.ndarray | float:
        s = self.s_H
        if np.isscalar(n):
            return math.lgamma(n + s) - math.lgamma(s) - math.lgamma(n + 1)
        from scipy.special import gammaln

        n = np.asarray(n, dtype=float)
        return gammaln(n + s) - gammaln(s) - gammaln(n + 1)

    def log_c_table(self, n_max: int) -> np.ndarray:
        """log c_n for n = 0..n_max as a double-precision cumulative sum."""
        key = "log_c"
        with hp._prec_lock:
            tab = self._tables.get(key)
            if tab is None or len(tab) <= n_max:
                size = max(n_max + 1, 2 * (0 if tab is None else len(tab)), 1024)
                lb = self.log_b(np.arange(size - 1))
                tab = np.concatenate([[0.0], np.cumsum(lb)])
                self._tables[key] = tab
            return tab

    def log_bound(self, n: int) -> float:
        v = float(self.log_c_table(n)[n])
        return v + 1e-9 * (1.0 + abs(v))

    def ratio_bound(self, n: int) -> float:
        return math.exp(self.log_b(n)) * (1 + 1e-12)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s_H": self.s_H}


def modulus_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "factorial":
        return FactorialModulus()
    if kind == "unit":
        return UnitModulus()
    if kind == "theorem5":
        return Theorem5Modulus(float(d["s_H"]))
    raise SequenceError(f"unknown modulus kind {kind!r}")


# --------------------------------------------------------------------------

class CoefficientSequence:
    """Lazy, memoised n -> a_n = modulus(n) * phase_factor(n).

    Immutable apart from the per-precision memo tables; inserts into the
    tables are serialised by the global precision lock.
    """

    def __init__(self, phase, modulus, precision_bits: int = 128):
        if precision_bits < 16:
            raise SequenceError(f"precision_bits too small: {precision_bits}")
        self.phase = phase
        self.modulus = modulus
        self.precision_bits = int(precision_bits)
        self._cache: dict[int, list[acb]] = {}
        self._factor_cache: dict[int, list[acb]] = {}

    def __repr__(self) -> str:
        return f"CoefficientSequence({self.phase!r}, {self.modulus!r}, {self.precision_bits})"

    @property
    def rho(self) -> float:
        return self.modulus.rho

    @property
    def period(self) -> int | None:
        return getattr(self.phase, "period", None)

    @property
    def unit_phase(self) -> bool:
        return True

    def coefficients(self, count: int, prec: int | None = None) -> list[acb]:
        """a_0 .. a_{count-1} as balls at ``prec`` bits (default: own precision)."""
        prec = int(prec or self.precision_bits)
        with hp._prec_lock:
            table = self._cache.setdefault(prec, [])
            if len(table) < count:
                with workprec(prec + 8):
                    for n in range(len(table), count):
                        table.append(self.modulus.value(n) * self.phase.factor(n))
            return table[:count]

    def phase_factors(self, count: int, prec: int | None = None) -> list[acb]:
        """The unimodular parts a_n of f = sum a_n M_n z^n (zero where the series skips n)."""
        prec = int(prec or self.precision_bits)
        with hp._prec_lock:
            table = self._factor_cache.setdefault(prec, [])
            if len(table) < count:
                with workprec(prec + 8):
                    table.extend(self.phase.factor(n) for n in range(len(table), count))
            return table[:count]

    def coefficient(self, n: int, prec: int | None = None) -> acb:
        if n < 0:
            raise SequenceError(f"index must be nonnegative, got {n}")
        return self.coefficients(n + 1, prec)[n]

    def log_majorant(self, n: int) -> float:
        return self.modulus.log_bound(n)

    def majorant(self, n: int) -> float:
        return math.exp(self.modulus.log_bound(n))

    def majorant_ratio(self, n: int) -> float:
        return self.modulus.ratio_bound(n)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.to_dict(),
            "modulus": self.modulus.to_dict(),
            "precision_bits": self.precision_bits,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientSequence":
        if "phase" not in d or "modulus" not in d:
            raise SequenceError("sequence spec needs 'phase' and 'modulus'")
        return cls(
            phase_from_dict(d["phase"]),
            modulus_from_dict(d["modulus"]),
            int(d.get("precision_bits", 128)),
        )

    @classmethod
    def from_json(cls, text: str) -> "CoefficientSequence":
        return cls.from_dict(json.loads(text))


def coefficient(seq: CoefficientSequence, n: int) -> acb:
    return seq.coefficient(n)


# --------------------------------------------------------------------------
# constructors

def make_quadratic_phase(alpha, precision: int = 128, label: str | None = None) -> CoefficientSequence:
    """a_n = exp(2 pi i n^2 alpha) / n!  -- the pantograph series with q = e^{2 pi i alpha}."""
    if precision < 64:
        raise SequenceError(f"precision must be >= 64 bits, got {precision}")
    return CoefficientSequence(QuadraticPhase(parse_alpha(alpha), label), FactorialModulus(), precision)


def make_rational_phase(p: int, q: int, precision: int = 128) -> CoefficientSequence:
    if q < 1:
        raise SequenceError(f"q must be positive, got {q}")
    g = math.gcd(p, q)
    return CoefficientSequence(RationalPhase(p // g, q // g), FactorialModulus(), precision)


def make_exponential(precision: int = 128) -> CoefficientSequence:
    """e^z, i.e. all phases zero."""
    return make_rational_phase(0, 1, precision)


def make_psi_phase(c, lam, precision: int = 128) -> CoefficientSequence:
    return CoefficientSequence(
        PsiExpPhase(tuple(float(x) for x in c), tuple(float(x) for x in lam)),
        FactorialModulus(),
        precision,
    )


def make_hardy(s, a: float, precision: int = 128) -> CoefficientSequence:
    """Hardy's E_{s,a}(z) = sum_{n>=1} (n+a)^s z^n / n! for purely imaginary s."""
    s = complex(s)
    if s.real != 0.0:
        raise SequenceError(f"s must be purely imaginary, got {s}")
    return CoefficientSequence(HardyPhase(s.imag, float(a)), FactorialModulus(), precision)


def make_theorem5(s_H: float, alpha, precision: int = 128) -> CoefficientSequence:
    return CoefficientSequence(QuadraticPhase(parse_alpha(alpha)), Theorem5Modulus(float(s_H)), precision)


def make_explicit(phases, modulus=None, precision: int = 128) -> CoefficientSequence:
    return CoefficientSequence(ExplicitPhase(tuple(map(float, phases))), modulus or FactorialModulus(), precision)


def combine_Q(f1: CoefficientSequence, f2: CoefficientSequence, theta1: float, theta2: float) -> CoefficientSequence:
    """(C o R_theta1)[f1] + (S o R_theta2)[f2].

    R_theta[f](z) = f(z e^{-i theta}); C and S take even and odd parts, so
    even coefficients come from f1 rotated by theta1 and odd ones from f2
    rotated by theta2. The result keeps factorial moduli and unit phases.
    """
    for f in (f1, f2):
        if not isinstance(f.modulus, FactorialModulus):
            raise SequenceError("combine_Q needs factorial-modulus sequences")
    return CoefficientSequence(
        CombinedPhase(f1.phase, f2.phase, float(theta1), float(theta2)),
        FactorialModulus(),
        max(f1.precision_bits, f2.precision_bits),
    )


# --------------------------------------------------------------------------
# tails and sums of majorants

def majorant_tail(seq: CoefficientSequence, N: int, r: float, k: int = 0) -> float:
    """Upper bound on sum_{n>N} n(n-1)..(n-k+1) M_n r^{n-k}.

    Uses that the term ratio is non-increasing in n for every modulus rule,
    so the tail is dominated by a geometric series from n = N+1. Returns inf
    when the ratio at N+1 is not below 1.
    """
    n = N + 1
    if r == 0.0:
        return 0.0 if n > k else math.inf
    if n <= k:
        return math.inf
    ratio = seq.majorant_ratio(n) * r * (n + 1) / (n + 1 - k)
    if ratio >= 1.0:
        return math.inf
    log_t = seq.log_majorant(n) + (n - k) * math.log(r) + _log_falling(n, k)
    bound = math.exp(log_t) / (1.0 - ratio) if log_t < 700 else math.inf
    return bound * (1 + 1e-12)


def _log_falling(n: int, k: int) -> float:
    return sum(math.log(n - j) for j in range(k))


def log_majorant_sum(seq: CoefficientSequence, r: float, k: int = 0) -> float:
    """log of sum_{n>=k} n(n-1)..(n-k+1) M_n r^{n-k}, an upper bound.

    Closed form e^r for factorial moduli; otherwise summed in the log domain
    until the geometric tail bound is negligible.
    """
    if isinstance(seq.modulus, FactorialModulus):
        return r
    if r == 0.0:
        return seq.log_majorant(k) + _log_falling(k, k) if k else seq.log_majorant(0)
    logs = []
    n = k
    while True:
        logs.append(seq.log_majorant(n) + (n - k) * math.log(r) + _log_falling(n, k))
        ratio = seq.majorant_ratio(n) * r * (n + 1) / (n + 1 - k)
        if ratio < 0.5 and logs[-1] < max(logs) - 60:
            break
        n += 1
        if n > 10**6:
            return math.inf
    m = max(logs)
    total = sum(math.exp(x - m) for x in logs)
    # the remaining tail is below 2 * e^{-60} of the maximum term
    return m + math.log(total + 2e-26) + 1e-12


# --------------------------------------------------------------------------

def parseval_m2(seq: CoefficientSequence, r: float, rel_tol: float = 2.0**-80) -> arb:
    """Quadratic mean m_2(r) = sqrt(sum |a_n|^2 r^{2n}) as a ball.

    The ball radius covers rounding and the certified truncation tail. Ball
    arithmetic has an unbounded exponent, so large r cannot overflow.
    """
    if not (r > 0):
        raise SequenceError(f"r must be positive, got {r}")
    prec = max(seq.precision_bits, 64)
    log_scale = 2 * log_majorant_sum(seq, r)
    log_r = math.log(r)
    N = 0
    while True:
        n = N + 1
        ratio = seq.majorant_ratio(n) ** 2 * r * r
        if ratio < 0.5:
            log_tail = 2 * seq.log_majorant(n) + 2 * n * log_r - math.log(1 - ratio)
            if log_tail < log_scale + math.log(rel_tol):
                break
        N += 1
        if N > 10**7:
            raise SequenceError("parseval_m2: truncation search failed")
    coefs = seq.coefficients(N + 1, prec)
    with workprec(prec):
        rr = arb(r) * arb(r)
        total = arb(0)
        power = arb(1)
        for a in coefs:
            total += (a.real * a.real + a.imag * a.imag) * power
            power *= rr
        tail = math.exp(log_tail - log_scale)
        total += arb(0, tail) * arb(log_scale).exp()
        return total.sqrt()


# --------------------------------------------------------------------------

@dataclass
class OrderFit:
    inv_rho: float        # free least-squares slope of -log c_n against n log n
    c: float              # constant with rho fixed at the declared value
    residual_rel: float   # |residual| / n at the largest n, rho fixed
    ratio_at_max: float   # -log c_n / (n log n) at the largest n
    rho: float
    sigma: float          # type predicted from c: e^{c rho} / (e rho)


def fit_order_constants(seq: CoefficientSequence, n_lo: int = 1000, n_hi: int = 100_000, points: int = 400) -> OrderFit:
    """Fit -log c_n = (1/rho) n log n - c n + o(n) on [n_lo, n_hi]."""
    mod = seq.modulus
    if not isinstance(mod, Theorem5Modulus):
        raise SequenceError("order fit requires a theorem5 modulus")
    tab = mod.log_c_table(n_hi)
    ns = np.unique(np.geomspace(n_lo, n_hi, points).astype(int))
    y = -tab[ns]
    nlogn = ns * np.log(ns)
    A = np.column_stack([nlogn, -ns.astype(float)])
    (inv_rho, _c_free), *_ = np.linalg.lstsq(A, y, rcond=None)
    rho = mod.rho
    c_fixed = float(np.mean((nlogn / rho - y)[-max(len(ns) // 8, 1):] / ns[-max(len(ns) // 8, 1):]))
    resid = y - (nlogn / rho - c_fixed * ns)
    return OrderFit(
        inv_rho=float(inv_rho),
        c=c_fixed,
        residual_rel=float(abs(resid[-1]) / ns[-1]),
        ratio_at_max=float(y[-1] / nlogn[-1]),
        rho=rho,
        sigma=math.exp(c_fixed * rho) / (math.e * rho),
    )
