"""Growth diagnostics on circles and polar grids.

log|f| is always read from certified evaluations; points where |f| does not
exceed its error bound are flagged and treated as pit points.
"""
from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from flint import acb, arb
from scipy import ndimage

from . import hp
from .coeffs import CoefficientSequence, log_majorant_sum, parseval_m2
from .evaluate import GRID_REL_EPS, SeriesKernel
from .hp import workprec

TWO_PI = 2.0 * math.pi
INV_PHI = (math.sqrt(5) - 1) / 2


def _kernel(seq: CoefficientSequence, r: float, rel_eps: float = GRID_REL_EPS) -> SeriesKernel:
    eps = rel_eps * math.exp(max(log_majorant_sum(seq, r), 0.0))
    return SeriesKernel(seq, r, eps)


def _as_href(h_ref) -> Callable[[np.ndarray], np.ndarray]:
    if callable(h_ref):
        return h_ref
    val = float(h_ref)
    return lambda th: np.full(np.shape(th), val)


def cos_reference(th):
    """Indicator of e^z."""
    return np.cos(th)


def _log_abs_points(kernel: SeriesKernel, r: float, thetas, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """log|f(r e^{i theta})| and flags at float angles.

    A point is flagged when log|f| <= log(error bound) + margin; with the
    default margin 0 that means |f| is not certified nonzero (a pit point).
    """
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty(len(thetas))
    flag = np.zeros(len(thetas), dtype=bool)
    trunc = kernel.trunc_bound(r)
    with workprec(kernel.P):
        rr = arb(r)
        for j, th in enumerate(thetas):
            v = kernel.poly(rr * acb(0, arb(float(th))).exp())
            bound = trunc + hp.radius(v)
            la = hp.log_abs_mid(v)
            lb = math.log(bound) if bound > 0 else -math.inf
            if la <= lb + margin:
                flag[j] = True
                if la <= lb:
                    la = float(np.logaddexp(la, lb))
            out[j] = la
    return out, flag


# --------------------------------------------------------------------------
# maximum modulus

@dataclass
class MaxModulus:
    r: float
    log_M: float
    theta: float
    accuracy: float   # spread of the refined candidates' brackets (in log M)


def max_modulus(seq: CoefficientSequence, r: float, n_scan: int = 1024, n_refine: int = 8,
                kernel: SeriesKernel | None = None) -> MaxModulus:
    """log M(r) from a coarse angular scan refined by golden-section search."""
    if not (r > 0):
        raise ValueError(f"r must be positive, got {r}")
    k = kernel or _kernel(seq, r)
    thetas = -math.pi + TWO_PI * np.arange(n_scan) / n_scan
    vals, _ = _log_abs_points(k, r, thetas)
    h = TWO_PI / n_scan

    def g(t):
        return _log_abs_points(k, r, [t])[0][0]

    best_val, best_t, acc = float(vals.max()), float(thetas[vals.argmax()]), 0.0
    for j in np.argsort(-vals, kind="stable")[:n_refine]:
        a, b = thetas[j] - h, thetas[j] + h
        c, d = b - INV_PHI * (b - a), a + INV_PHI * (b - a)
        gc, gd = g(c), g(d)
        for _ in range(40):
            if gc > gd:
                b, d, gd = d, c, gc
                c = b - INV_PHI * (b - a)
                gc = g(c)
            else:
                a, c, gc = c, d, gd
                d = a + INV_PHI * (b - a)
                gd = g(d)
        t = 0.5 * (a + b)
        gt = g(t)
        if gt > best_val:
            acc = abs(max(gc, gd) - gt)
            best_val, best_t = gt, t
    return MaxModulus(r, best_val, best_t, acc)


# --------------------------------------------------------------------------
# indicator

@dataclass
class IndicatorProfile:
    theta: np.ndarray
    h_est: np.ndarray
    n_samples: np.ndarray
    indeterminate: np.ndarray
    r_window: tuple[float, float]
    rho: float

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "h_est", "n_samples", "indeterminate"])
            for t, h, n, ind in zip(self.theta, self.h_est, self.n_samples, self.indeterminate):
                w.writerow([format(float(t), ".17g"), format(float(h), ".17g"), int(n), int(ind)])
        finally:
            if own:
                fh.close()


def indicator_estimate(seq: CoefficientSequence, thetas, r_window: tuple[float, float], rho: float = 1.0,
                       n_r: int = 21) -> IndicatorProfile:
    """h_est(theta) = max over a geometric r-sample of the window of log|f| / r^rho.

    Evaluation targets absolute accuracy 2^-53 / M(r_max), so values down to
    about 1/M(r_max) are resolved; points whose error bound is within 2^-20
    of |f| are skipped like pit points.
    """
    r_min, r_max = map(float, r_window)
    if not (r_min > 0 and r_max / r_min >= 2):
        raise ValueError(f"window must satisfy r_max / r_min >= 2, got {r_window}")
    thetas = np.asarray(thetas, dtype=float)
    if len(thetas) < 64:
        raise ValueError(f"need at least 64 angles, got {len(thetas)}")
    scale = max(log_majorant_sum(seq, r_max), 0.0)
    kernel = SeriesKernel(seq, r_max, 2.0**-53 * math.exp(-scale))
    margin = 20 * math.log(2)
    h = np.full(len(thetas), -np.inf)
    n = np.zeros(len(thetas), dtype=int)
    for r in np.geomspace(r_min, r_max, n_r):
        la, flag = _log_abs_points(kernel, float(r), thetas, margin)
        v = la / r**rho
        ok = ~flag
        h[ok] = np.maximum(h[ok], v[ok])
        n += ok
    ind = n == 0
    h[ind] = np.nan
    return IndicatorProfile(thetas, h, n, ind, (r_min, r_max), rho)


# --------------------------------------------------------------------------
# completely regular growth

@dataclass
class GridValues:
    r: np.ndarray
    theta: np.ndarray
    log_abs_f: np.ndarray
    flag: np.ndarray


def sample_grid(seq: CoefficientSequence, r_values, n_theta: int) -> GridValues:
    """log|f| on the polar grid (angles -pi + 2 pi j / n).

    Absolute accuracy 2^-53 / M(r_max), so values as small as 1/M(r) (e^z on
    the negative axis) are resolved rather than flagged.
    """
    r_values = np.asarray(r_values, dtype=float)
    thetas = -math.pi + TWO_PI * np.arange(n_theta) / n_theta
    r_max = float(r_values.max())
    kernel = SeriesKernel(seq, r_max, 2.0**-53 * math.exp(-max(log_majorant_sum(seq, r_max), 0.0)))
    la = np.empty((len(r_values), n_theta))
    fl = np.empty((len(r_values), n_theta), dtype=bool)
    for i, r in enumerate(r_values):
        la[i], fl[i] = _log_abs_points(kernel, float(r), thetas)
    return GridValues(r_values, thetas, la, fl)


@dataclass
class CRGResult:
    deviation: np.ndarray       # d = log|f| / r^rho - h_ref(theta)
    r: np.ndarray
    theta: np.ndarray
    bad_fraction: np.ndarray    # per radius, fraction with |d| > delta (flagged points count as bad)


def crg_deviation(seq: CoefficientSequence, r_values, n_theta: int, delta: float, rho: float = 1.0,
                  h_ref=1.0) -> CRGResult:
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    g = sample_grid(seq, r_values, n_theta)
    d = g.log_abs_f / (g.r[:, None] ** rho) - _as_href(h_ref)(g.theta)[None, :]
    bad = (np.abs(d) > delta) | g.flag
    return CRGResult(d, g.r, g.theta, bad.mean(axis=1))


# --------------------------------------------------------------------------
# pits

@dataclass
class Pit:
    center: complex
    angular_extent: float   # arc length
    radial_extent: float
    depth: float            # most negative d seen
    radius: float           # half the larger extent
    source: str             # "grid" or "refined"

    def to_dict(self) -> dict:
        return {"re": self.center.real, "im": self.center.imag, "angular_extent": self.angular_extent,
                "radial_extent": self.radial_extent, "depth": self.depth, "radius": self.radius,
                "source": self.source}


@dataclass
class PitReport:
    pits: list[Pit]
    eta: float
    delta: float
    r_range: tuple[float, float]
    covering_sum: float = 0.0
    annulus_counts: list[tuple[float, float, int]] = field(default_factory=list)

    def count_in(self, r_lo: float, r_hi: float) -> int:
        return sum(1 for p in self.pits if r_lo <= abs(p.center) <= r_hi)

    def to_json(self) -> str:
        return json.dumps([p.to_dict() for p in self.pits], sort_keys=True)


def _label_wrapped(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected components on an (r, theta) grid with theta periodic."""
    lab, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return lab, 0
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    rows = mask.shape[0]
    for i in range(rows):
        for di in (-1, 0, 1):
            j = i + di
            if 0 <= j < rows and lab[i, -1] and lab[j, 0]:
                a, b = find(lab[i, -1]), find(lab[j, 0])
                if a != b:
                    parent[max(a, b)] = min(a, b)
    roots = {}
    out = np.zeros_like(lab)
    for k in range(1, n + 1):
        roots.setdefault(find(k), len(roots) + 1)
    for k in range(1, n + 1):
        out[lab == k] = roots[find(k)]
    return out, len(roots)


def _grid_local_minima(v: np.ndarray) -> np.ndarray:
    """Strict-ish local minima over the 8 grid neighbours (theta periodic, r edges excluded)."""
    pad = np.pad(v, ((1, 1), (0, 0)), constant_values=np.inf)
    pad = np.concatenate([pad[:, -1:], pad, pad[:, :1]], axis=1)
    core = pad[1:-1, 1:-1]
    is_min = np.ones_like(v, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= core <= pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
    is_min[0, :] = False
    is_min[-1, :] = False
    return is_min


def _newton_to_zero(kernel: SeriesKernel, z0: complex, max_iter: int = 60):
    with workprec(kernel.P):
        x = hp.to_acb(z0)
    for _ in range(max_iter):
        f, df = kernel.f_df(x)
        if abs(df) == 0.0:
            return None
        with workprec(kernel.P):
            step = hp.midpoint(f.value / df.value)
            x = hp.midpoint(x - step)
        if abs(hp.to_complex(x) - z0) > 2.0:
            return None
        if hp.abs_mid(step) <= 2.0 ** (20 - kernel.P) * max(1.0, abs(z0)):
            break
    f, df = kernel.f_df(x)
    if abs(f) > 1e3 * f.total_bound:
        return None
    return hp.to_complex(x), abs(df)


def pit_detect(seq: CoefficientSequence, r_values, n_theta: int, delta: float, eta: float,
               rho: float = 1.0, h_ref=1.0, refine: bool = True) -> PitReport:
    """Pits = components of {d < -delta} on the polar grid, d = log|f|/r^rho - h_ref.

    Pits are usually far narrower than the grid spacing, so grid local minima
    of d are also refined by Newton: a local minimum of |f| is a zero, and
    around a simple zero z0 the set {d < -delta} is close to a disc of radius
    exp((h_ref - delta)|z0|^rho) / |f'(z0)|. Refined pits inside a grid
    component are not counted twice.
    """
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not (0 < eta <= 1):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    g = sample_grid(seq, r_values, n_theta)
    href = _as_href(h_ref)
    d = g.log_abs_f / (g.r[:, None] ** rho) - href(g.theta)[None, :]
    mask = (d < -delta) | g.flag
    lab, n = _label_wrapped(mask)
    dth = TWO_PI / n_theta
    dr = float(np.min(np.diff(g.r))) if len(g.r) > 1 else 0.0
    pits: list[Pit] = []
    boxes = []
    for k in range(1, n + 1):
        ii, jj = np.nonzero(lab == k)
        rs = g.r[ii]
        ths = g.theta[jj]
        # unwrap angles around the component's first point
        t0 = ths[0]
        rel = (ths - t0 + math.pi) % TWO_PI - math.pi
        w = np.exp(-d[ii, jj] - (-d[ii, jj]).max())
        tc = t0 + float(np.sum(w * rel) / np.sum(w))
        rc = float(np.sum(w * rs) / np.sum(w))
        ang = (float(rel.max() - rel.min()) + dth) * rc
        rad = float(rs.max() - rs.min()) + dr
        pits.append(Pit(cmath.rect(rc, tc), ang, rad, float(d[ii, jj].min()), 0.5 * max(ang, rad), "grid"))
        boxes.append((rs.min() - dr, rs.max() + dr, t0 + rel.min() - dth, t0 + rel.max() + dth))

    if refine:
        kernel = _kernel(seq, float(g.r.max()) * 1.01)
        found: list[complex] = []
        ii, jj = np.nonzero(_grid_local_minima(d))
        order = np.lexsort((jj, ii))
        for i, j in zip(ii[order], jj[order]):
            z0 = cmath.rect(g.r[i], g.theta[j])
            res = _newton_to_zero(kernel, z0)
            if res is None:
                continue
            z, dfa = res
            if not (g.r.min() <= abs(z) <= g.r.max()):
                continue
            if any(abs(z - u) < 1e-8 * max(1.0, abs(z)) for u in found):
                continue
            found.append(z)
            rz, tz = abs(z), cmath.phase(z)
            inside = any(lo <= rz <= hi and (tz - a) % TWO_PI <= (b - a) for lo, hi, a, b in boxes)
            if inside:
                continue
            lr = (float(href(np.array([tz]))[0]) - delta) * rz**rho - math.log(dfa)
            rk = math.exp(lr)
            pits.append(Pit(z, 2 * rk, 2 * rk, -math.inf, rk, "refined"))

    pits.sort(key=lambda p: (round(abs(p.center), 9), round(cmath.phase(p.center), 9)))
    rep = PitReport(pits, eta, delta, (float(g.r.min()), float(g.r.max())))
    rep.covering_sum = float(sum(p.radius**eta for p in pits))
    edges = list(g.r)
    rep.annulus_counts = [(a, b, rep.count_in(a, b)) for a, b in zip(edges, edges[1:])]
    return rep


# --------------------------------------------------------------------------
# Levy ratio and Parseval

@dataclass
class RatioSeries:
    r: list[float]
    log_M: list[float]
    m2: list[float]
    ratio: list[float]

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "logM", "m2", "ratio"])
            for row in zip(self.r, self.log_M, self.m2, self.ratio):
                w.writerow([format(float(x), ".17g") for x in row])
        finally:
            if own:
                fh.close()


def levy_ratio(seq: CoefficientSequence, r_values) -> RatioSeries:
    """M(r)/m2(r): M from max_modulus, m2 from the coefficient-side Parseval sum."""
    r_values = [float(r) for r in r_values]
    if any(b <= a for a, b in zip(r_values, r_values[1:])):
        raise ValueError("r_values must be increasing")
    lm, m2s, ratios = [], [], []
    for r in r_values:
        M = max_modulus(seq, r).log_M
        with workprec(128):
            m2 = parseval_m2(seq, r)
            log_m2 = float(m2.mid().log())
        lm.append(M)
        m2s.append(math.exp(log_m2))
        ratios.append(math.exp(M - log_m2))
    return RatioSeries(r_values, lm, m2s, ratios)


@dataclass
class ParsevalCheck:
    exact: float
    quadrature: float

    @property
    def discrepancy(self) -> float:
        return abs(self.quadrature - self.exact) / self.exact


def parseval_quadrature_check(seq: CoefficientSequence, r: float, n_nodes: int = 1024) -> ParsevalCheck:
    """Trapezoidal mean of |f|^2 on |z| = r against the coefficient sum."""
    if n_nodes < 256 or n_nodes & (n_nodes - 1):
        raise ValueError(f"n_nodes must be a power of two >= 256, got {n_nodes}")
    kernel = _kernel(seq, r)
    thetas = TWO_PI * np.arange(n_nodes) / n_nodes
    la, _ = _log_abs_points(kernel, r, thetas)
    top = la.max()
    log_q = top + 0.5 * math.log(np.mean(np.exp(2 * (la - top))))
    with workprec(128):
        log_e = float(parseval_m2(seq, r).mid().log())
    return ParsevalCheck(math.exp(log_e), math.exp(log_q))


# --------------------------------------------------------------------------
# Azarin rescaling

@dataclass
class AzarinFrame:
    t: float
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray            # t^-rho log|f(t z)|
    sup_deviation: float     # over unflagged points
    mean_deviation: float


def azarin_rescale(seq: CoefficientSequence, t: float, r_values=None, n_theta: int = 128, rho: float = 1.0,
                   h_ref=1.0) -> AzarinFrame:
    """u_t(z) = t^-rho log|f(t z)| on a polar grid of the unit disc, against h_ref(arg z)|z|^rho."""
    if not (t >= 1):
        raise ValueError(f"t must be >= 1, got {t}")
    if r_values is None:
        r_values = np.linspace(0.1, 1.0, 10)
    r_values = np.asarray(r_values, dtype=float)
    g = sample_grid(seq, t * r_values, n_theta)
    u = g.log_abs_f / t**rho
    target = _as_href(h_ref)(g.theta)[None, :] * (r_values[:, None] ** rho)
    dev = np.abs(u - target)[~g.flag]
    return AzarinFrame(float(t), r_values, g.theta, u, float(dev.max()), float(dev.mean()))
