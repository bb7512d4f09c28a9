"""Functional equations and transforms.

* the pantograph identity f'(z) = q f(q^2 z) for quadratic phases,
* the exact reduction of rational-alpha series to sums c_k exp(b_k z) with
  roots of unity b_k,
* Hadamard composition with H(w) = (1 - w)^{-s}, by direct series and by
  trapezoidal quadrature on a circle,
* the Mellin-Barnes line integral for psi-phase series.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from flint import acb, acb_poly, arb, fmpq

from . import hp
from .coeffs import (
    CoefficientSequence,
    FactorialModulus,
    PsiExpPhase,
    QuadraticPhase,
    RationalPhase,
    Theorem5Modulus,
    alpha_arb,
    majorant_tail,
    minimal_quadratic_period,
)
from .evaluate import EvalResult, SeriesKernel, choose_truncation
from .gamma import loggamma
from .hp import workprec


class PantoError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# pantograph identity

def quadratic_alpha(seq: CoefficientSequence) -> arb:
    """alpha of a quadratic-phase sequence as a ball at the current precision."""
    ph = seq.phase
    if isinstance(ph, QuadraticPhase):
        return alpha_arb(ph.alpha)
    if isinstance(ph, RationalPhase):
        return arb(fmpq(ph.p, ph.q))
    raise PantoError(f"sequence has {ph.kind} phase, not quadratic")


@dataclass
class ResidualCheck:
    residual: float   # |lhs - rhs| at the midpoints
    bound: float      # combined certified error of both sides

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def pantograph_residual(seq: CoefficientSequence, z, precision: int | None = None,
                        kernel: SeriesKernel | None = None, eps: float | None = None) -> ResidualCheck:
    """|f'(z) - q f(z e^{i beta})| with q = e^{2 pi i alpha}, beta = 4 pi alpha."""
    if not isinstance(seq.modulus, FactorialModulus):
        raise PantoError("pantograph identity needs factorial moduli")
    if kernel is None:
        r = abs(hp.to_complex(hp.to_acb(z)))
        kernel = SeriesKernel(seq, r, eps=eps, precision=precision)
    with workprec(kernel.P):
        alpha = quadratic_alpha(seq)
        q = acb.exp_pi_i(acb(2 * alpha))
        zz = hp.to_acb(z)
        zrot = zz * acb.exp_pi_i(acb(4 * alpha))
    dfz = kernel.fprime(zz)
    frot = kernel.f(zrot)
    with workprec(kernel.P):
        diff = dfz.value - q * frot.value
    bound = dfz.truncation_bound + frot.truncation_bound + hp.radius(diff)
    return ResidualCheck(hp.abs_mid(diff), bound)


# --------------------------------------------------------------------------
# exact arithmetic in Z[zeta_L]

def cyclotomic(n: int) -> list[int]:
    """Integer coefficients (low to high) of the n-th cyclotomic polynomial."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _exact_div(num, cyclotomic(d))
    return num


def _exact_div(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        out[i] = c
        for j, d in enumerate(den):
            num[i + j] -= c * d
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return out


def reduce_mod_cyclotomic(vec, L: int) -> tuple[int, ...]:
    """Canonical form of sum_m vec[m] zeta_L^m (remainder mod Phi_L)."""
    phi = cyclotomic(L)
    deg = len(phi) - 1
    r = list(vec)
    for i in range(len(r) - 1, deg - 1, -1):
        c = r[i]
        if c:
            for j, p in enumerate(phi):
                r[i - deg + j] -= c * p
    r = r[:deg]
    while r and r[-1] == 0:
        r.pop()
    return tuple(r)


def _rotate(vec, shift: int) -> list[int]:
    L = len(vec)
    out = [0] * L
    for m, c in enumerate(vec):
        if c:
            out[(m + shift) % L] += c
    return out


@dataclass
class TrigTerm:
    k: int
    exact: tuple[int, ...]   # Q * c_k as integer combination of zeta_L^m, m < L
    c: acb
    b: acb


@dataclass
class TrigSum:
    """f(z) = sum_k c_k exp(b_k z), b_k = omega^k, omega = exp(2 pi i / Q)."""

    p: int
    q: int
    Q: int
    L: int
    terms: list[TrigTerm] = field(default_factory=list)
    precision_bits: int = 128

    def pairs(self) -> list[tuple[complex, complex]]:
        return [(hp.to_complex(t.c), hp.to_complex(t.b)) for t in self.terms]

    def c_ball(self, term: TrigTerm) -> acb:
        """c_k at the current working precision, rebuilt from the exact form."""
        total = acb(0)
        for m, cnt in enumerate(term.exact):
            if cnt:
                total += cnt * acb.exp_pi_i(acb(arb(fmpq(2 * m, self.L))))
        return total / self.Q

    def b_ball(self, term: TrigTerm) -> acb:
        return acb.exp_pi_i(acb(arb(fmpq(2 * term.k, self.Q))))

    def exact_coefficient(self, j: int) -> tuple[int, ...]:
        """Q * a_j from the inverse DFT, reduced mod Phi_L."""
        acc = [0] * self.L
        for t in self.terms:
            rot = _rotate(list(t.exact) + [0] * (self.L - len(t.exact)), t.k * j * (self.L // self.Q))
            acc = [a + b for a, b in zip(acc, rot)]
        return reduce_mod_cyclotomic(acc, self.L)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "q": self.q, "period": self.Q,
            "terms": [{"k": t.k, "c": [c.real, c.imag], "b": [b.real, b.imag]}
                      for t, (c, b) in zip(self.terms, self.pairs())],
        }


def trig_sum_reduction(p: int, q: int, precision: int = 128) -> TrigSum:
    """Exact DFT of the periodic phases e^{2 pi i n^2 p/q} over one period Q.

    Periodic a_n gives f(z) = sum_k chat_k exp(omega^k z) with
    chat_k = (1/Q) sum_j a_j omega^{-kj}. Coefficients are kept as exact
    elements of Z[zeta_L]/Q, L = lcm(q, Q), and a term is dropped only when
    its exact value is zero.
    """
    if q < 1:
        raise PantoError(f"q must be positive, got {q}")
    if math.gcd(p, q) != 1:
        raise PantoError(f"gcd({p}, {q}) != 1")
    Q = minimal_quadratic_period(p, q)
    L = q * Q // math.gcd(q, Q)
    ts = TrigSum(p, q, Q, L, precision_bits=precision)
    with workprec(precision):
        threshold = arb(2) ** (-precision // 2)
        for k in range(Q):
            vec = [0] * L
            for j in range(Q):
                e = ((j * j * p) % q) * (L // q) - k * j * (L // Q)
                vec[e % L] += 1
            exact = reduce_mod_cyclotomic(vec, L)
            term = TrigTerm(k, exact, acb(0), acb(0))
            if not exact:
                continue
            term.c = ts.c_ball(term)
            term.b = ts.b_ball(term)
            if abs(term.c).upper() < threshold:
                raise ArithmeticError(f"nonzero exact coefficient {k} is numerically tiny")
            ts.terms.append(term)
    return ts


def eval_trig_sum(ts: TrigSum, z, precision: int | None = None) -> acb:
    """sum_k c_k exp(b_k z) as a ball; the radius bounds the rounding error."""
    prec = precision or ts.precision_bits
    with workprec(prec):
        zz = hp.to_acb(z)
        total = acb(0)
        for t in ts.terms:
            total += ts.c_ball(t) * (ts.b_ball(t) * zz).exp()
        return total


# --------------------------------------------------------------------------
# Hadamard composition with H(w) = (1 - w)^{-s}

def hadamard_multipliers(s_H: float, count: int) -> list[arb]:
    """b_0..b_{count-1}: b_0 = 1, b_n = b_{n-1} (n - 1 + s) / n."""
    s = arb(s_H)
    out = [arb(1)]
    for n in range(1, count):
        out.append(out[-1] * (n - 1 + s) / n)
    return out


def H_value(s_H: float, w: acb) -> acb:
    """(1 - w)^{-s} on the principal branch."""
    return (1 - w) ** (-arb(s_H))


def _check_s(s_H: float) -> None:
    if not (0.0 <= s_H <= 1.0):
        raise PantoError(f"s_H must lie in [0, 1] (so that 0 <= b_n <= 1), got {s_H}")


def hadamard_series(f_seq: CoefficientSequence, s_H: float, z, eps: float | None = None,
                    precision: int | None = None) -> EvalResult:
    """(f*H)(z) = sum a_n b_n z^n summed directly.

    For s in [0, 1] the multipliers satisfy 0 <= b_n <= 1, so the majorant
    tail of f also bounds the tail of the composition.
    """
    _check_s(s_H)
    kernel = SeriesKernel(f_seq, abs(hp.to_complex(hp.to_acb(z))), eps, precision)
    coefs = f_seq.coefficients(kernel.N + 1, kernel.P)
    with workprec(kernel.P):
        bs = hadamard_multipliers(s_H, kernel.N + 1)
        v = acb_poly([a * b for a, b in zip(coefs, bs)])(hp.to_acb(z))
    return EvalResult(v, kernel.trunc_bound(kernel.radius), hp.radius(v), kernel.N + 1, kernel.P)


@dataclass
class ContourSpec:
    center: complex
    radius: float
    nodes: int = 64

    def __post_init__(self):
        n = self.nodes
        if n < 64 or n & (n - 1):
            raise ValueError(f"nodes must be a power of two >= 64, got {n}")
        if not (self.radius > 0):
            raise ValueError("radius must be positive")


def hadamard_compose(f_seq: CoefficientSequence, s_H: float, z, contour: ContourSpec | None = None,
                     tol: float = 1e-13, max_nodes: int = 2**16) -> EvalResult:
    """(f*H)(z) = (1/2 pi i) \\oint f(zeta) H(z/zeta) dzeta/zeta by the trapezoidal rule.

    The contour is the circle |zeta| = s|z|, 1 < s <= 2, so |z/zeta| < 1 and
    H is used inside its disc of convergence. Nodes are doubled until two
    successive estimates differ by less than ``tol`` (relative to
    max(1, |value|)); that difference is reported as the truncation bound.
    """
    _check_s(s_H)
    zc = complex(hp.to_complex(hp.to_acb(z)))
    if zc == 0:
        raise PantoError("z must be nonzero")
    if contour is None:
        contour = ContourSpec(0j, 1.5 * abs(zc))
    if contour.center != 0:
        raise PantoError("contour must be centred at the origin")
    s = contour.radius / abs(zc)
    if not (1.0 < s <= 2.0):
        raise PantoError(f"contour radius ratio s = {s:g} outside (1, 2]")
    kernel = SeriesKernel(f_seq, contour.radius)
    P = kernel.P

    def samples(K: int, odd_only: bool) -> acb:
        total = acb(0)
        with workprec(P):
            zz = hp.to_acb(z)
            rad = arb(contour.radius)
            for j in range(1 if odd_only else 0, K, 2 if odd_only else 1):
                zeta = rad * acb.exp_pi_i(acb(arb(fmpq(2 * j, K))))
                total += kernel.f(zeta).value * H_value(s_H, zz / zeta)
        return total

    K = contour.nodes
    with workprec(P):
        acc = samples(K, False)
        prev = acc / K
    while True:
        K2 = 2 * K
        if K2 > max_nodes:
            raise QuadratureError(f"no convergence with {max_nodes} nodes; move the contour")
        with workprec(P):
            acc = acc + samples(K2, True)
            cur = acc / K2
            diff = hp.abs_mid(cur - prev)
        K = K2
        scale = max(1.0, hp.abs_mid(cur))
        if diff < tol * scale:
            trunc = diff + kernel.trunc_bound(contour.radius)
            return EvalResult(cur, trunc, hp.radius(cur), K, P)
        prev = cur


@dataclass
class Funk2Check:
    residual_series: float
    bound_series: float
    residual_contour: float
    bound_contour: float
    composition_gap: float   # |series composition - contour composition|

    @property
    def ok(self) -> bool:
        return self.residual_series <= self.bound_series


def funk2_residual(seq: CoefficientSequence, z, tol: float = 1e-13, contour_ratio: float = 1.5) -> Funk2Check:
    """|f(z) - 1 - z q (f*H)(z e^{i beta})| for a make_theorem5 sequence, both composition routes."""
    if not isinstance(seq.modulus, Theorem5Modulus) or not isinstance(seq.phase, QuadraticPhase):
        raise PantoError("funk2_residual needs a sequence from make_theorem5")
    s_H = seq.modulus.s_H
    zc = hp.to_complex(hp.to_acb(z))
    r = abs(zc)
    kernel = SeriesKernel(seq, r)
    fz = kernel.f(z)
    with workprec(kernel.P):
        alpha = quadratic_alpha(seq)
        q = acb.exp_pi_i(acb(2 * alpha))
        zz = hp.to_acb(z)
        w = zz * acb.exp_pi_i(acb(4 * alpha))
    if zc == 0:
        with workprec(kernel.P):
            d = fz.value - 1
        return Funk2Check(hp.abs_mid(d), fz.total_bound + hp.radius(d), hp.abs_mid(d),
                          fz.total_bound + hp.radius(d), 0.0)
    direct = hadamard_series(seq, s_H, w, precision=kernel.P)
    quad = hadamard_compose(seq, s_H, w, ContourSpec(0j, contour_ratio * r), tol=tol)
    with workprec(kernel.P):
        d1 = fz.value - 1 - zz * q * direct.value
        d2 = fz.value - 1 - zz * q * quad.value
        gap = hp.abs_mid(direct.value - quad.value)
    b1 = fz.truncation_bound + r * direct.truncation_bound + hp.radius(d1)
    b2 = fz.truncation_bound + r * quad.truncation_bound + hp.radius(d2)
    return Funk2Check(hp.abs_mid(d1), b1, hp.abs_mid(d2), b2, gap)


@dataclass
class EstimateReport:
    lhs: float          # |(f*H)(z)|
    K: float            # max of |H| on |zeta - 1| = r/(1-r)
    max_f: float        # max of |f| on |zeta - z| = r|z|
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs


def hadamard_estimate_check(f_seq: CoefficientSequence, s_H: float, z, r_param: float,
                            n_boundary: int = 256) -> EstimateReport:
    """Compare |(f*H)(z)| with K max_{|zeta-z| <= r|z|} |f(zeta)|.

    Both maxima are sampled on n_boundary points of the bounding circles
    (maximum principle for the disc maximum of |f|).
    """
    if not (0.0 < r_param < 1.0):
        raise PantoError(f"r_param must lie in (0, 1), got {r_param}")
    zc = complex(hp.to_complex(hp.to_acb(z)))
    lhs = abs(hadamard_series(f_seq, s_H, z).complex)
    rho_H = r_param / (1 - r_param)
    thetas = 2 * np.pi * np.arange(n_boundary) / n_boundary
    with workprec(64):
        K = max(hp.abs_mid(H_value(s_H, acb(1 + rho_H * complex(cmath.exp(1j * t))))) for t in thetas)
    kernel = SeriesKernel(f_seq, abs(zc) * (1 + r_param))
    max_f = max(abs(kernel.f(zc + r_param * abs(zc) * cmath.exp(1j * t)).complex) for t in thetas)
    return EstimateReport(lhs, K, max_f, K * max_f)


# --------------------------------------------------------------------------
# Mellin-Barnes representation

def mellin_barnes_eval(seq: CoefficientSequence, z: complex, A: float = 0.5, tol: float = 1e-8,
                       eps0: float = 0.1) -> complex:
    """f(-z) = (1/2 pi i) \\int_{-A-i inf}^{-A+i inf} e^{i psi(zeta)} z^zeta Gamma(-zeta) dzeta.

    With zeta = -A + i t the integrand is analytic in the strip |Im t| < A,
    so the trapezoidal rule in t converges geometrically; the range is cut at
    |t| = T where the Stirling bound on the integrand falls below tol.
    Double precision only: this path cross-checks the series.
    """
    if tol < 1e-8:
        raise PantoError("mellin_barnes_eval is a double-precision oracle; tol must be >= 1e-8")
    if eps0 < 0.1:
        raise PantoError(f"eps0 must be >= 0.1, got {eps0}")
    if not isinstance(seq.phase, PsiExpPhase):
        raise PantoError("mellin_barnes_eval needs a psi_exp phase")
    if not (A > 0):
        raise PantoError(f"A must be positive, got {A}")
    z = complex(z)
    argz = abs(cmath.phase(z))
    if argz > math.pi / 2 - eps0:
        raise PantoError(f"|arg z| = {argz:.3f} exceeds pi/2 - {eps0}")
    ph = seq.phase
    c = np.array(ph.c)
    lam = np.array(ph.lam)
    logz = cmath.log(z)

    def integrand(t: np.ndarray) -> np.ndarray:
        zeta = -A + 1j * t
        psi = (c[:, None] * np.exp(-lam[:, None] * zeta[None, :])).sum(axis=0)
        return np.exp(1j * psi + zeta * logz + loggamma(-zeta))

    decay = math.pi / 2 - argz
    log_cpsi = float(np.sum(np.abs(c) * np.exp(lam * A)))
    T = 8.0
    while True:
        # |integrand| <= e^{C_psi} |z|^{-A} sqrt(2 pi) t^{A-1/2} e^{-decay t} (1 + o(1))
        log_tail = (log_cpsi - A * math.log(abs(z)) + 0.5 * math.log(2 * math.pi)
                    + (A - 0.5) * math.log(T) - decay * T - math.log(decay) + math.log(4))
        if log_tail < math.log(tol / 10):
            break
        T *= 1.25
    h = 0.25
    prev = None
    while True:
        n = int(math.ceil(T / h))
        t = h * np.arange(-n, n + 1)
        val = complex(h * integrand(t).sum() / (2 * math.pi))
        if prev is not None and abs(val - prev) < tol / 10:
            return val
        if h < 1e-4:
            raise QuadratureError("Mellin-Barnes quadrature did not converge")
        prev = val
        h /= 2
