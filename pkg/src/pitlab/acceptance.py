"""The acceptance suite: one function per criterion, shared by tests and the CLI.

Every criterion returns a CriterionResult; nothing here is loosened to make
a criterion pass. ``quick`` only shrinks sample counts, never tolerances.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from . import hp
from .coeffs import (combine_Q, fit_order_constants, make_hardy, make_psi_phase, make_quadratic_phase,
                     make_rational_phase, make_theorem5)
from .evaluate import SeriesKernel, eval_f
from .growth import (crg_deviation, indicator_estimate, levy_ratio, max_modulus, parseval_quadrature_check,
                     pit_detect)
from .panto import (ContourSpec, eval_trig_sum, funk2_residual, hadamard_compose, hadamard_estimate_check,
                    hadamard_series, mellin_barnes_eval, pantograph_residual, trig_sum_reduction)
from .zeros import SectorBox, angular_density, count_zeros, locate_zeros, reciprocal_sum

SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = "; ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{tag}] criterion {self.number:2d} {self.title} ({self.seconds:.1f}s): {extra}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": round(self.seconds, 3), "details": {k: _plain(v) for k, v in self.details.items()}}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _disc_points(rng: np.random.Generator, n: int, r_max: float) -> list[complex]:
    r = r_max * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return [complex(x) for x in r * np.exp(1j * t)]


def _timed(fn):
    def run(quick: bool = False) -> CriterionResult:
        t0 = time.perf_counter()
        res = fn(quick)
        res.seconds = time.perf_counter() - t0
        limit = res.details.pop("_time_limit", None)
        if limit is not None:
            res.details["time_limit_s"] = limit
            res.passed = res.passed and res.seconds <= limit
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# --------------------------------------------------------------------------

@_timed
def pantograph_identity(quick: bool = False) -> CriterionResult:
    """alpha = sqrt2, points with |z| <= 30 at 160 bits: residual within combined bounds."""
    seq = make_quadratic_phase("sqrt2")
    rng = np.random.default_rng(SEED)
    n = 50 if quick else 200
    kernel = SeriesKernel(seq, 30.0, precision=160)
    worst = 0.0
    fails = 0
    for z in _disc_points(rng, n, 30.0):
        chk = pantograph_residual(seq, z, kernel=kernel)
        worst = max(worst, chk.residual / chk.bound if chk.bound > 0 else math.inf)
        fails += not chk.ok
    return CriterionResult(1, "pantograph identity", fails == 0,
                           details={"points": n, "failures": fails, "max_residual_over_bound": worst,
                                    "_time_limit": 30.0})


@_timed
def rational_trig_sums(quick: bool = False) -> CriterionResult:
    """Series against the exact trigonometric sum for every reduced p/q with q <= 24."""
    rng = np.random.default_rng(SEED + 1)
    q_max, n_pts = (12, 25) if quick else (24, 100)
    pts = _disc_points(rng, n_pts, 15.0)
    pairs = [(p, q) for q in range(1, q_max + 1) for p in range(q) if gcd(p, q) == 1]
    bad = []
    worst = 0.0
    for p, q in pairs:
        seq = make_rational_phase(p, q)
        ts = trig_sum_reduction(p, q)
        kernel = SeriesKernel(seq, 15.0)
        for z in pts:
            fs = kernel.f(z)
            tv = eval_trig_sum(ts, z, kernel.P)
            with hp.workprec(kernel.P):
                diff = hp.abs_mid(fs.value - tv)
            bound = fs.total_bound + hp.radius(tv)
            worst = max(worst, diff / bound)
            if diff > bound:
                bad.append((p, q))
                break
    one = trig_sum_reduction(0, 1)
    two = trig_sum_reduction(1, 2)
    special = (len(one.terms) == 1 and one.pairs()[0] == (1 + 0j, 1 + 0j)
               and len(two.terms) == 1 and two.pairs()[0] == (1 + 0j, -1 + 0j))
    return CriterionResult(2, "rational-alpha trigonometric sums", not bad and special,
                           details={"pairs": len(pairs), "points_each": n_pts, "failing_pairs": bad,
                                    "max_diff_over_bound": worst, "q1_q2_exact": special, "_time_limit": 60.0})


_ZERO_CACHE: dict = {}


def _sqrt2_zeros():
    if "zs" not in _ZERO_CACHE:
        seq = make_quadratic_phase("sqrt2")
        _ZERO_CACHE["seq"] = seq
        _ZERO_CACHE["zs"] = locate_zeros(seq, SectorBox.disc(30.0))
    return _ZERO_CACHE["seq"], _ZERO_CACHE["zs"]


@_timed
def zero_count(quick: bool = False) -> CriterionResult:
    """|n(30) - 30| <= 6 and |n(r)/r - 1| non-increasing over 15, 22, 30 within one zero."""
    seq, zs = _sqrt2_zeros()
    radii = [15.0, 22.0, 30.0]
    counts = [count_zeros(seq, r).count for r in radii]
    dev = [abs(n / r - 1) for n, r in zip(counts, radii)]
    trend = all(dev[k + 1] <= dev[k] + 1.0 / radii[k + 1] for k in range(len(radii) - 1))
    consistent = zs.completeness_certificate and zs.box_winding == counts[-1]
    ok = abs(counts[-1] - 30) <= 6 and trend and consistent
    return CriterionResult(3, "zero count n(r) ~ r", ok,
                           details={"counts": counts, "deviation": dev, "located": len(zs.zeros),
                                    "complete": zs.completeness_certificate, "_time_limit": 300.0})


@_timed
def angular_uniformity(quick: bool = False) -> CriterionResult:
    """Quadrant counts in |z| <= 30 within 30/4 +- 5."""
    _, zs = _sqrt2_zeros()
    sectors, _ = angular_density(zs, 30.0, 4)
    counts = [s.count for s in sectors]
    ok = all(abs(c - 7.5) <= 5 for c in counts)
    return CriterionResult(4, "angular uniformity of zeros", ok, details={"quadrant_counts": counts})


@_timed
def reciprocal_zero_sum(quick: bool = False) -> CriterionResult:
    """|sum_{|z_k| <= R} 1/z_k + q| <= 0.3 at R = 30 and smaller than at R = 10."""
    _, zs = _sqrt2_zeros()
    q = cmath.exp(2j * math.pi * math.sqrt(2))
    devs = [abs(reciprocal_sum(zs, R) + q) for R in (10.0, 20.0, 30.0)]
    ok = devs[2] <= 0.3 and devs[2] < devs[0]
    return CriterionResult(5, "reciprocal zero sum -> -q", ok, details={"deviation_R10_20_30": devs})


def probe_families() -> dict:
    s2 = make_quadratic_phase("sqrt2")
    gold = make_quadratic_phase("golden")
    return {
        "quadratic_sqrt2": s2,
        "quadratic_golden": gold,
        "hardy_i_1": make_hardy(1j, 1.0),
        "psi_exp_e^-z": make_psi_phase([1.0], [1.0]),
        "combine_Q_sqrt2_golden": combine_Q(s2, gold, 0.0, math.pi / 3),
    }


@_timed
def indicator_constancy(quick: bool = False) -> CriterionResult:
    """h_est = 1 within 0.15 for sqrt2; min h_est >= -0.05 for every non-exponential family."""
    n = 64 if quick else 128
    thetas = -math.pi + 2 * math.pi * np.arange(n) / n
    mins = {}
    dev = None
    for name, seq in probe_families().items():
        prof = indicator_estimate(seq, thetas, (20.0, 40.0))
        mins[name] = float(np.nanmin(prof.h_est))
        if name == "quadratic_sqrt2":
            dev = float(np.nanmax(np.abs(prof.h_est - 1)))
    probe_ok = all(v >= -0.05 for v in mins.values())
    details = {"max_dev_sqrt2": dev}
    details.update({f"min_h[{k}]": v for k, v in mins.items()})
    return CriterionResult(6, "indicator constancy and sign probe", dev <= 0.15 and probe_ok, details=details)


@_timed
def max_modulus_band(quick: bool = False) -> CriterionResult:
    """0 <= r - log M(r) <= 0.35 log r + 1 for r in 10, 20, 40."""
    seq = make_quadratic_phase("sqrt2")
    gaps = []
    ok = True
    for r in (10.0, 20.0, 40.0):
        g = r - max_modulus(seq, r).log_M
        gaps.append(g)
        ok &= 0 <= g <= 0.35 * math.log(r) + 1
    return CriterionResult(7, "max-modulus band", ok, details={"r_minus_logM": gaps})


@_timed
def levy_dichotomy(quick: bool = False) -> CriterionResult:
    """Rational ratio grows (x1.5 from r=10 to 80); sqrt2 ratio <= 10; Parseval check <= 1e-8."""
    rs = [10.0, 20.0, 40.0, 80.0]
    rat = levy_ratio(make_rational_phase(1, 3), rs).ratio
    irr = levy_ratio(make_quadratic_phase("sqrt2"), rs).ratio
    grow = all(b > a for a, b in zip(rat, rat[1:])) and rat[-1] / rat[0] >= 1.5
    bounded = max(irr) <= 10
    disc = parseval_quadrature_check(make_quadratic_phase("sqrt2"), 10.0, 2048).discrepancy
    return CriterionResult(8, "Levy ratio dichotomy", grow and bounded and disc <= 1e-8,
                           details={"ratio_1/3": rat, "ratio_sqrt2": irr, "parseval_discrepancy": disc})


@_timed
def left_half_plane_decay(quick: bool = False) -> CriterionResult:
    """psi = e^-zeta: r^2 |f(r e^{i phi})| <= C (C fitted at r = 5) on [5, 30]; Mellin-Barnes vs series."""
    seq = make_psi_phase([1.0], [1.0])
    phis = [math.pi, math.pi - 1.3, math.pi + 1.3]
    rs = np.arange(5.0, 30.0 + 1e-9, 1.0 if quick else 0.5)
    kernel = SeriesKernel(seq, 30.0, eps=1e-30)
    scaled = {phi: [r * r * abs(kernel.f(cmath.rect(r, phi)).complex) for r in rs] for phi in phis}
    C = max(v[0] for v in scaled.values())
    worst = max(max(v) for v in scaled.values())
    decay_ok = worst <= C
    rng = np.random.default_rng(SEED + 9)
    mb_err = 0.0
    for _ in range(10):
        r = 1 + 9 * rng.random()
        phi = (2 * rng.random() - 1) * (math.pi / 2 - 0.2)
        z = cmath.rect(r, phi)
        mb = mellin_barnes_eval(seq, z, A=0.5, tol=1e-8)
        ref = eval_f(seq, -z).complex
        mb_err = max(mb_err, abs(mb - ref))
    return CriterionResult(9, "left half-plane decay and Mellin-Barnes", decay_ok and mb_err <= 1e-5,
                           details={"C_fit_r5": C, "max_r2f": worst, "r2f_phi_pi_at_r5_30": [scaled[math.pi][0], scaled[math.pi][-1]],
                                    "mellin_barnes_max_err": mb_err})


@_timed
def hadamard_machinery(quick: bool = False) -> CriterionResult:
    """Contour vs series composition <= 1e-10; estimate holds at 50 pairs; funk2 residual <= 1e-15."""
    seq = make_quadratic_phase("sqrt2")
    rng = np.random.default_rng(SEED + 10)
    n_pts, n_pairs = (5, 10) if quick else (10, 50)
    gap = 0.0
    for z in _disc_points(rng, n_pts, 5.0):
        a = hadamard_series(seq, 0.5, z)
        b = hadamard_compose(seq, 0.5, z, ContourSpec(0j, 1.5 * abs(z)))
        with hp.workprec(max(a.precision_bits, b.precision_bits)):
            gap = max(gap, hp.abs_mid(a.value - b.value))
    est_fail = 0
    for _ in range(n_pairs):
        z = _disc_points(rng, 1, 5.0)[0]
        rp = 0.05 + 0.9 * rng.random()
        est_fail += not hadamard_estimate_check(seq, 0.5, z, rp).passed
    t5 = make_theorem5(0.5, "sqrt2")
    f2 = max(funk2_residual(t5, z).residual_series for z in _disc_points(rng, n_pts, 3.0))
    ok = gap <= 1e-10 and est_fail == 0 and f2 <= 1e-15
    return CriterionResult(10, "Hadamard composition machinery", ok,
                           details={"contour_series_gap": gap, "estimate_failures": est_fail,
                                    "estimate_pairs": n_pairs, "funk2_residual": f2})


@_timed
def theorem5_growth(quick: bool = False) -> CriterionResult:
    """Order fit in [0.475, 0.525] at n = 1e5; log M(6)/36 within 25% of sigma."""
    seq = make_theorem5(0.5, "sqrt2")
    fit = fit_order_constants(seq, 1000, 100_000)
    lm = max_modulus(seq, 6.0).log_M / 36.0
    rel = abs(lm / fit.sigma - 1)
    ok = 0.475 <= fit.ratio_at_max <= 0.525 and rel <= 0.25
    return CriterionResult(11, "theorem5 family order and type", ok,
                           details={"ratio_at_1e5": fit.ratio_at_max, "inv_rho_fit": fit.inv_rho, "c": fit.c,
                                    "sigma": fit.sigma, "logM6_over_36": lm, "relative_gap": rel})


@_timed
def pit_zero_correspondence(quick: bool = False) -> CriterionResult:
    """Pits in 25 <= |z| <= 30 at delta = 0.3 within 50% of the zero count there."""
    seq = make_quadratic_phase("sqrt2")
    rep = pit_detect(seq, np.arange(25.0, 30.0 + 1e-9, 0.1), 2048, 0.3, 0.5)
    pits = rep.count_in(25.0, 30.0)
    zs = locate_zeros(seq, SectorBox(25.0, 30.0, -math.pi, math.pi))
    nz = sum(z.multiplicity for z in zs.zeros)
    ok = zs.completeness_certificate and nz > 0 and abs(pits - nz) <= 0.5 * nz
    return CriterionResult(12, "pit / zero correspondence", ok, details={"pits": pits, "zeros": nz})


def crg_regression(quick: bool = False) -> dict:
    """Bad-fraction trend used by the growth tests (not a numbered criterion)."""
    c = crg_deviation(make_quadratic_phase("sqrt2"), [10.0, 20.0, 40.0], 512, 0.2)
    b = c.bad_fraction.tolist()
    return {"bad_fraction": b, "passed": bool(b[0] > b[1] > b[2] and b[2] <= 0.1)}


CRITERIA = [
    pantograph_identity, rational_trig_sums, zero_count, angular_uniformity, reciprocal_zero_sum,
    indicator_constancy, max_modulus_band, levy_dichotomy, left_half_plane_decay, hadamard_machinery,
    theorem5_growth, pit_zero_correspondence,
]


def run_suite(quick: bool = False, only: list[int] | None = None) -> list[CriterionResult]:
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        out.append(fn(quick))
    return out
