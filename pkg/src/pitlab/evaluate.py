"""Certified evaluation of f, f' and G.

Every value comes with two separate bounds: the truncation bound from the
coefficient majorant and the rounding bound from the radius of the flint
ball. Their sum bounds the distance to the true value.
"""
from __future__ import annotations

import contextlib
import csv
import math
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from flint import acb, acb_poly, arb

from . import hp
from .coeffs import CoefficientSequence, log_majorant_sum, majorant_tail
from .hp import workprec

DEFAULT_REL_EPS = 2.0**-70
GRID_REL_EPS = 2.0**-64
MAX_TERMS = 10**7
LOG2E = 1.4427


def wrap_headroom(N: int) -> int:
    """Extra bits for the wrapping effect of rectangular complex balls.

    Each multiplication by z can inflate a ball radius by (|Re z| + |Im z|)/|z|
    <= sqrt(2) relative to the value, so a Horner pass of N steps may lose up
    to N/2 bits.
    """
    return math.ceil(N / 2)


class EvaluationError(RuntimeError):
    pass


_overrides = threading.local()


@contextlib.contextmanager
def evaluation_overrides(eps: float | None = None, precision: int | None = None):
    """Force an absolute accuracy target and/or a working precision on every
    SeriesKernel built inside the block (used by the command line front end)."""
    old = getattr(_overrides, "value", (None, None))
    _overrides.value = (eps if eps is not None else old[0], precision if precision is not None else old[1])
    try:
        yield
    finally:
        _overrides.value = old


def _current_overrides() -> tuple[float | None, int | None]:
    return getattr(_overrides, "value", (None, None))


def choose_truncation(seq: CoefficientSequence, r: float, eps: float, k: int = 0) -> int:
    """Smallest N whose majorant tail beyond N (k-th derivative) is <= eps."""
    if not (eps > 0):
        raise EvaluationError(f"eps must be positive, got {eps}")
    if r < 0:
        raise EvaluationError(f"radius must be nonnegative, got {r}")

    def ok(N: int) -> bool:
        return majorant_tail(seq, N, r, k) <= eps

    if ok(0):
        return 0
    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > MAX_TERMS:
            raise EvaluationError(f"no truncation N <= {MAX_TERMS} reaches eps={eps:g} at r={r:g}")
    lo = hi // 2  # ok(lo) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def choose_precision(r: float, eps: float, N: int, log_scale: float | None = None) -> int:
    """Working precision in bits for summing N terms on |z| = r to accuracy eps.

    ceil(1.4427 r) bits of cancellation headroom (log2 e^r; when ``log_scale``
    is given, log2 of exp(log_scale) is used instead, which covers families
    of order other than 1), ceil(log2 N) for the summation, ceil(log2 1/eps)
    for the target, and 32 guard bits.
    """
    head = math.ceil(LOG2E * r) if log_scale is None else math.ceil(log_scale / math.log(2))
    P = head + math.ceil(math.log2(max(N, 1))) + math.ceil(math.log2(1.0 / eps)) + 32
    return max(P, 53)


@dataclass
class EvalResult:
    value: acb
    truncation_bound: float
    rounding_bound: float
    terms_used: int
    precision_bits: int

    @property
    def total_bound(self) -> float:
        return self.truncation_bound + self.rounding_bound

    @property
    def complex(self) -> complex:
        return hp.to_complex(self.value)

    def __abs__(self) -> float:
        return hp.abs_mid(self.value)


class SeriesKernel:
    """The truncated series of ``seq`` prepared for repeated use on |z| <= radius.

    ``eps`` is an absolute accuracy target for f and f'; by default it is
    2^-70 times the majorant sum at ``radius`` (e^radius for factorial
    moduli), i.e. relative to the maximum modulus.
    """

    def __init__(self, seq: CoefficientSequence, radius: float, eps: float | None = None,
                 precision: int | None = None, terms: int | None = None):
        self.seq = seq
        self.radius = float(radius)
        self.log_scale = log_majorant_sum(seq, self.radius)
        o_eps, o_prec = _current_overrides()
        eps = o_eps if o_eps is not None else eps
        precision = o_prec if o_prec is not None else precision
        if eps is None:
            eps = DEFAULT_REL_EPS * math.exp(max(self.log_scale, 0.0))
        self.eps = eps
        if terms is None:
            terms = max(choose_truncation(seq, self.radius, eps / 2),
                        choose_truncation(seq, self.radius, eps / 2, k=1))
        self.N = int(terms)
        self.P = int(precision or choose_precision(self.radius, eps / 2, max(self.N, 1), self.log_scale)
                     + wrap_headroom(self.N))
        coefs = seq.coefficients(self.N + 1, self.P)
        with workprec(self.P):
            self.poly = acb_poly(coefs)
            self.dpoly = self.poly.derivative()
        self._d2_cache: dict[float, float] = {}
        self._dpolys: list[acb_poly] = [self.poly, self.dpoly]

    def trunc_bound(self, r: float, k: int = 0) -> float:
        return majorant_tail(self.seq, self.N, r, k)

    def _result(self, v: acb, r: float, k: int) -> EvalResult:
        return EvalResult(v, self.trunc_bound(r, k), hp.radius(v), self.N + 1, self.P)

    def point(self, z) -> acb:
        with workprec(self.P):
            return +hp.to_acb(z)

    def f(self, z) -> EvalResult:
        with workprec(self.P):
            z = hp.to_acb(z)
            v = self.poly(z)
            r = float(abs(z).upper())
        return self._result(v, r, 0)

    def fprime(self, z) -> EvalResult:
        with workprec(self.P):
            z = hp.to_acb(z)
            v = self.dpoly(z)
            r = float(abs(z).upper())
        return self._result(v, r, 1)

    def f_df(self, z) -> tuple[EvalResult, EvalResult]:
        with workprec(self.P):
            z = hp.to_acb(z)
            v = self.poly(z)
            dv = self.dpoly(z)
            r = float(abs(z).upper())
        return self._result(v, r, 0), self._result(dv, r, 1)

    def taylor_bounds(self, z, K: int) -> list[float]:
        """Upper bounds on |f^(k)(z)| / k! for k = 0..K, truncation included."""
        with workprec(self.P):
            while len(self._dpolys) <= K:
                self._dpolys.append(self._dpolys[-1].derivative())
            z = hp.to_acb(z)
            r = float(abs(z).upper())
            out = []
            fact = 1.0
            for k in range(K + 1):
                fact *= max(k, 1)
                v = self._dpolys[k](z)
                out.append((hp.abs_mid(v) + hp.radius(v) + self.trunc_bound(r, k)) / fact * (1 + 1e-12))
        return out

    def d2_bound(self, rho: float) -> float:
        """Upper bound on |f''| over the disc |z| <= rho (majorant series)."""
        key = math.ceil(rho * 16) / 16  # round up so the bound stays valid
        val = self._d2_cache.get(key)
        if val is None:
            val = math.exp(log_majorant_sum(self.seq, key, k=2)) * (1 + 1e-9)
            self._d2_cache[key] = val
        return val


def _abs_of(z) -> float:
    if isinstance(z, acb):
        with workprec(64):
            return float(abs(z).upper())
    return abs(complex(z))


def eval_f(seq: CoefficientSequence, z, eps: float | None = None, precision: int | None = None,
           terms: int | None = None) -> EvalResult:
    """f(z) = sum a_n z^n with |true - value| <= truncation_bound + rounding_bound."""
    return SeriesKernel(seq, _abs_of(z), eps, precision, terms).f(z)


def eval_fprime(seq: CoefficientSequence, z, eps: float | None = None, precision: int | None = None,
                terms: int | None = None) -> EvalResult:
    """f'(z) from the shifted coefficients (n+1) a_{n+1}."""
    return SeriesKernel(seq, _abs_of(z), eps, precision, terms).fprime(z)


def eval_G(seq: CoefficientSequence, w, eps: float = 2.0**-80, precision: int | None = None) -> EvalResult:
    """G(w) = sum_{n>=1} a_{n-1} w^n inside the unit disc.

    Here a_n are the unimodular coefficients (the Taylor coefficients with
    the modulus rule divided out), so the tail beyond N is at most
    |w|^{N+1} / (1 - |w|).
    """
    rw = _abs_of(w)
    if rw >= 1.0:
        raise EvaluationError(f"|w| = {rw} is outside the open unit disc")
    if rw == 0.0:
        N = 0
        tail = 0.0
    else:
        N = max(1, math.ceil(math.log(eps * (1 - rw)) / math.log(rw)) - 1)
        tail = rw ** (N + 1) / (1 - rw) * (1 + 1e-12)
    P = int(precision or max(seq.precision_bits, math.ceil(math.log2(1 / eps)) + 32) + wrap_headroom(N))
    coefs = seq.phase_factors(max(N, 1), P)
    with workprec(P):
        w = hp.to_acb(w)
        v = w * acb_poly(coefs[:N])(w) if N else acb(0)
    return EvalResult(v, tail, hp.radius(v), N, P)


# --------------------------------------------------------------------------
# grids

@dataclass
class GridSpec:
    r_values: list[float]
    n_theta: int

    def __post_init__(self):
        self.r_values = [float(r) for r in self.r_values]
        if not self.r_values:
            raise ValueError("r_values must be nonempty")
        if any(r <= 0 for r in self.r_values) or any(b <= a for a, b in zip(self.r_values, self.r_values[1:])):
            raise ValueError("r_values must be positive and increasing")
        if self.n_theta < 8:
            raise ValueError(f"n_theta must be >= 8, got {self.n_theta}")

    @property
    def thetas(self) -> np.ndarray:
        return -math.pi + 2 * math.pi * np.arange(self.n_theta) / self.n_theta


@dataclass
class GridResult:
    """log|f| on a polar grid, shape (len(r), n_theta).

    ``flag`` marks points where |f| does not exceed its error bound; there
    ``log_abs_f`` is only an upper bound, log(|value| + bound).
    """

    r: np.ndarray
    theta: np.ndarray
    log_abs_f: np.ndarray
    flag: np.ndarray
    trunc_bound: np.ndarray
    round_bound: np.ndarray

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "theta", "log_abs_f", "flag", "trunc_bound", "round_bound"])
            for i, r in enumerate(self.r):
                for j, th in enumerate(self.theta):
                    w.writerow([_g17(r), _g17(th), _g17(self.log_abs_f[i, j]), int(self.flag[i, j]),
                                _g17(self.trunc_bound[i, j]), _g17(self.round_bound[i, j])])
        finally:
            if own:
                fh.close()


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def unit_points(n_theta: int, prec: int) -> list[acb]:
    """exp(i theta_j), theta_j = -pi + 2 pi j / n, each from one ball-valued angle."""
    with workprec(prec):
        return [acb.exp_pi_i(acb(arb(-1) + arb(2 * j) / n_theta)) for j in range(n_theta)]


def eval_circle(kernel: SeriesKernel, r: float, n_theta: int):
    """Evaluate on the circle |z| = r; returns (log|f|, flag, trunc, round) arrays."""
    pts = unit_points(n_theta, kernel.P)
    log_abs = np.empty(n_theta)
    flag = np.zeros(n_theta, dtype=bool)
    rnd = np.empty(n_theta)
    trunc = kernel.trunc_bound(r)
    with workprec(kernel.P):
        rr = arb(r)
        for j, u in enumerate(pts):
            v = kernel.poly(u * rr)
            rb = hp.radius(v)
            bound = trunc + rb
            la = hp.log_abs_mid(v)
            log_bound = math.log(bound) if bound > 0 else -math.inf
            if la <= log_bound:
                flag[j] = True
                la = float(np.logaddexp(la, log_bound))
            log_abs[j] = la
            rnd[j] = rb
    return log_abs, flag, np.full(n_theta, trunc), rnd


def _grid_row(seq_dict: dict, r: float, n_theta: int, eps: float | None):
    seq = CoefficientSequence.from_dict(seq_dict)
    return _row(seq, r, n_theta, eps)


def _row(seq, r, n_theta, eps):
    if eps is None:
        eps = GRID_REL_EPS * math.exp(max(log_majorant_sum(seq, r), 0.0))
    kernel = SeriesKernel(seq, r, eps)
    return eval_circle(kernel, r, n_theta)


def eval_grid(seq: CoefficientSequence, grid: GridSpec, eps: float | None = None, workers: int = 1) -> GridResult:
    """log|f(r e^{i theta})| over the grid.

    Default accuracy is 2^-64 times the majorant sum at each radius. Points
    are computed independently, so results do not depend on ``workers``.
    """
    n = grid.n_theta
    if workers > 1 and len(grid.r_values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_grid_row, [seq.to_dict()] * len(grid.r_values), grid.r_values,
                               [n] * len(grid.r_values), [eps] * len(grid.r_values)))
    else:
        rows = [_row(seq, r, n, eps) for r in grid.r_values]
    log_abs, flag, trunc, rnd = (np.array([row[k] for row in rows]) for k in range(4))
    return GridResult(np.array(grid.r_values), grid.thetas, log_abs, flag, trunc, rnd)
