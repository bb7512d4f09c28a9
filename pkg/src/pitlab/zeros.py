"""Zero counting and localisation by the argument principle.

Winding numbers are certified: along every contour piece the step length L
from a point a is chosen so that

    |f'(a)| L + B2 L^2 / 2  <  kappa (|f(a)| - err(a)),

where B2 bounds |f''| near a, either through the coefficient majorant on
the whole disc or, when that is too coarse, through Taylor coefficients
at a plus a Cauchy estimate for the high orders. The image of the
step then stays in a disc around f(a) that excludes 0, so the argument
increment over the step is the principal value of arg f(b)/f(a) and is
smaller than arcsin(kappa) < pi/2.
"""
from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from flint import acb, arb

from . import hp
from .coeffs import CoefficientSequence, log_majorant_sum
from .evaluate import DEFAULT_REL_EPS, SeriesKernel
from .hp import workprec

TWO_PI = 2.0 * math.pi
KAPPA = 0.8
MAX_STEP = 0.5
MAX_STEPS = 200_000
TAYLOR_ORDER = 24
CAUCHY_RADIUS = 2.0


class BoundaryTooCloseError(RuntimeError):
    """|f| could not be certified nonzero on a contour; perturb the contour."""


class IncompleteZeroSetError(ValueError):
    pass


# --------------------------------------------------------------------------
# boxes and contour pieces

@dataclass(frozen=True)
class SectorBox:
    r_lo: float
    r_hi: float
    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        if not (0.0 <= self.r_lo < self.r_hi):
            raise ValueError(f"need 0 <= r_lo < r_hi, got {self.r_lo}, {self.r_hi}")
        span = self.theta_hi - self.theta_lo
        if not (0.0 < span <= TWO_PI + 1e-12):
            raise ValueError(f"angular span {span} outside (0, 2 pi]")

    @classmethod
    def disc(cls, r: float) -> "SectorBox":
        return cls(0.0, float(r), -math.pi, math.pi)

    @property
    def full(self) -> bool:
        return self.theta_hi - self.theta_lo >= TWO_PI - 1e-12

    @property
    def diameter(self) -> float:
        span = self.theta_hi - self.theta_lo
        return (self.r_hi - self.r_lo) + 2 * self.r_hi * math.sin(min(span, math.pi) / 2)

    @property
    def center(self) -> complex:
        if self.r_lo == 0.0 and self.full:
            return 0j
        rc = 0.5 * (self.r_lo + self.r_hi)
        return cmath.rect(rc, 0.5 * (self.theta_lo + self.theta_hi))

    def contains(self, z: complex) -> bool:
        r = abs(z)
        if not (self.r_lo <= r <= self.r_hi):
            return False
        if self.full:
            return True
        t = cmath.phase(z)
        t0 = self.theta_lo
        rel = (t - t0) % TWO_PI
        return rel <= self.theta_hi - t0

    def split(self, fr: float = 0.5, ft: float = 0.5) -> list["SectorBox"]:
        rm = self.r_lo + fr * (self.r_hi - self.r_lo)
        tm = self.theta_lo + ft * (self.theta_hi - self.theta_lo)
        return [
            SectorBox(self.r_lo, rm, self.theta_lo, tm),
            SectorBox(self.r_lo, rm, tm, self.theta_hi),
            SectorBox(rm, self.r_hi, self.theta_lo, tm),
            SectorBox(rm, self.r_hi, tm, self.theta_hi),
        ]

    def key(self):
        return (self.r_lo, self.r_hi, self.theta_lo, self.theta_hi)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    t0: float
    t1: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.t1 - self.t0)

    def point(self, u: float) -> acb:
        t = self.t0 + math.copysign(u / self.radius, self.t1 - self.t0) if u < self.length else self.t1
        return hp.to_acb(self.center) + arb(self.radius) * acb(0, arb(t)).exp()


@dataclass(frozen=True)
class RadialSegment:
    theta: float
    r0: float
    r1: float

    @property
    def length(self) -> float:
        return abs(self.r1 - self.r0)

    def point(self, u: float) -> acb:
        r = self.r0 + math.copysign(u, self.r1 - self.r0) if u < self.length else self.r1
        return arb(r) * acb(0, arb(self.theta)).exp()


def _canonical(piece):
    """(cache key, sign) so a piece and its reverse share one computation."""
    if isinstance(piece, Arc):
        lo, hi = sorted((piece.t0, piece.t1))
        return ("arc", piece.center, piece.radius, lo, hi), (1 if piece.t1 > piece.t0 else -1)
    lo, hi = sorted((piece.r0, piece.r1))
    return ("seg", piece.theta, lo, hi), (1 if piece.r1 > piece.r0 else -1)


def _forward(key):
    if key[0] == "arc":
        return Arc(key[1], key[2], key[3], key[4])
    return RadialSegment(key[1], key[2], key[3])


def box_pieces(box: SectorBox) -> list:
    """Positively oriented boundary. Radial seams of full annuli cancel and are omitted."""
    pieces = [Arc(0j, box.r_hi, box.theta_lo, box.theta_hi)]
    if not box.full:
        pieces.append(RadialSegment(box.theta_hi, box.r_hi, box.r_lo))
    if box.r_lo > 0:
        pieces.append(Arc(0j, box.r_lo, box.theta_hi, box.theta_lo))
    if not box.full:
        pieces.append(RadialSegment(box.theta_lo, box.r_lo, box.r_hi))
    return pieces


def circle_pieces(center: complex, radius: float) -> list:
    return [Arc(center, radius, -math.pi, math.pi)]


# --------------------------------------------------------------------------
# certified winding

@dataclass
class WindingResult:
    count: int
    raw: float            # total argument increment / 2 pi
    snap_distance: float  # |raw - count|, must stay below 0.25
    steps: int

    @property
    def certified(self) -> bool:
        return self.snap_distance < 0.25


class WindingEngine:
    """Certified argument increments along contour pieces, with a per-piece cache.

    One engine serves a whole search: its kernel is prepared for |z| <= radius
    and cached pieces are shared between neighbouring boxes.
    """

    def __init__(self, seq: CoefficientSequence, radius: float, density: float = 1.0,
                 kernel: SeriesKernel | None = None):
        self.seq = seq
        if kernel is None:
            # |f| can be as small as 1/M(r) on a contour (e^z on the left half-plane)
            kernel = SeriesKernel(seq, radius, eps=DEFAULT_REL_EPS * math.exp(-max(log_majorant_sum(seq, radius), 0.0)))
        self.kernel = kernel
        self.kappa = KAPPA / density
        self._cache: dict = {}
        self._logM: dict[float, float] = {}
        self.steps = 0

    def _local_step(self, z, zr: float, D: float, target: float) -> float:
        """Step from a local bound on |f''| (Taylor coefficients at z plus a Cauchy tail).

        Used when the global bound on |f''| over the disc is far larger than
        |f| near z, which otherwise forces steps of size ~ 1/M(r).
        """
        K, T = TAYLOR_ORDER, CAUCHY_RADIUS
        u = self.kernel.taylor_bounds(z, K)
        key = math.ceil((zr + T) * 16) / 16
        logM = self._logM.get(key)
        if logM is None:
            logM = self._logM[key] = log_majorant_sum(self.seq, key)
        best = 0.0
        s = MAX_STEP
        for _ in range(14):
            x = s / T
            # sum_{k>K} k(k-1) x^{k-2}; consecutive ratio <= x (K+2)/K
            tail = (K + 1) * K * x ** (K - 1) / (1 - x * (K + 2) / K) / (T * T)
            log_tail = logM + math.log(tail)
            B2 = sum(k * (k - 1) * u[k] * s ** (k - 2) for k in range(2, K + 1))
            B2 += math.exp(log_tail) if log_tail < 700 else math.inf
            if math.isfinite(B2):
                L = min(s, 2 * target / (D + math.sqrt(D * D + 2 * B2 * target)))
                best = max(best, L)
                if L >= s:
                    break
            s /= 2
        return best

    def increment(self, piece) -> float:
        key, sign = _canonical(piece)
        val = self._cache.get(key)
        if val is None:
            val = self._march(_forward(key))
            self._cache[key] = val
        return sign * val

    def _march(self, piece) -> float:
        k = self.kernel
        length = piece.length
        u = 0.0
        with workprec(k.P):
            z = piece.point(0.0)
        f, df = k.f_df(z)
        total = 0.0
        steps = 0
        while u < length:
            fv = abs(f)
            F = fv - f.total_bound
            if not (F > 0):
                raise BoundaryTooCloseError(f"|f| not certified nonzero near {hp.to_complex(z)}")
            D = abs(df) + df.total_bound
            zr = abs(hp.to_complex(z))
            B2 = k.d2_bound(zr + MAX_STEP)
            target = self.kappa * F
            L = min(2 * target / (D + math.sqrt(D * D + 2 * B2 * target)), MAX_STEP)
            if L < MAX_STEP / 8 and L < length - u:
                L = max(L, self._local_step(z, zr, D, target))
            L = min(L, length - u)
            if L < 1e-13 * (1.0 + zr) and u + L < length:
                raise BoundaryTooCloseError(f"step underflow near {hp.to_complex(z)}")
            u = u + L if u + L < length else length
            with workprec(k.P):
                zn = piece.point(u)
            fn, dfn = k.f_df(zn)
            with workprec(k.P):
                ratio = hp.to_complex(fn.value / f.value)
            d = cmath.phase(ratio)
            if abs(d) >= math.pi / 2:
                raise BoundaryTooCloseError("argument step exceeded pi/2")
            total += d
            z, f, df = zn, fn, dfn
            steps += 1
            if steps > MAX_STEPS:
                raise BoundaryTooCloseError("too many contour steps")
        self.steps += steps
        return total

    def winding(self, pieces) -> WindingResult:
        before = self.steps
        total = sum(self.increment(p) for p in pieces)
        raw = total / TWO_PI
        n = round(raw)
        res = WindingResult(int(n), raw, abs(raw - n), self.steps - before)
        if not res.certified:
            raise BoundaryTooCloseError(f"winding {raw:.4f} is not near an integer")
        return res

    def box_winding(self, box: SectorBox) -> WindingResult:
        return self.winding(box_pieces(box))


def winding_number(seq: CoefficientSequence, box: SectorBox, density: float = 1.0) -> WindingResult:
    """Number of zeros (with multiplicity) inside ``box``, certified."""
    return WindingEngine(seq, box.r_hi, density).box_winding(box)


# --------------------------------------------------------------------------
# zero sets

@dataclass
class Zero:
    location: acb
    multiplicity: int
    newton_residual: float
    enclosure_radius: float
    cluster: bool = False   # True: unresolved winding >= 2 in a minimal box

    @property
    def z(self) -> complex:
        return hp.to_complex(self.location)


@dataclass
class ZeroSet:
    zeros: list[Zero]
    search_box: SectorBox
    completeness_certificate: bool
    box_winding: int = 0

    @property
    def locations(self) -> np.ndarray:
        return np.array([z.z for z in self.zeros], dtype=complex)

    @property
    def clusters(self) -> list[Zero]:
        return [z for z in self.zeros if z.cluster]

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im", "multiplicity", "newton_residual", "enclosure_radius"])
            for zr in self.zeros:
                z = zr.z
                w.writerow([format(z.real, ".17g"), format(z.imag, ".17g"), zr.multiplicity,
                            format(zr.newton_residual, ".17g"), format(zr.enclosure_radius, ".17g")])
        finally:
            if own:
                fh.close()

    def to_dict(self) -> dict:
        return {
            "search_box": asdict(self.search_box),
            "completeness_certificate": self.completeness_certificate,
            "box_winding": self.box_winding,
            "zeros": [
                {"re": z.z.real, "im": z.z.imag, "multiplicity": z.multiplicity,
                 "newton_residual": z.newton_residual, "enclosure_radius": z.enclosure_radius,
                 "cluster": z.cluster}
                for z in self.zeros
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# split fractions tried in turn when a split line runs through a zero
_SPLITS = [(0.5, 0.5), (0.4615, 0.4737), (0.5385, 0.5263), (0.4167, 0.5833), (0.5833, 0.4167), (0.45, 0.55)]


def _newton(kernel: SeriesKernel, z0: complex, limit: float, max_iter: int = 80):
    """Newton iteration x <- x - f/f'; returns (x, |f(x)|, bound, |last step|, |f'(x)|) or None."""
    with workprec(kernel.P):
        x = hp.to_acb(z0)
    last = math.inf
    for _ in range(max_iter):
        f, df = kernel.f_df(x)
        if abs(df) == 0.0:
            return None
        with workprec(kernel.P):
            step = hp.midpoint(f.value / df.value)
            x = hp.midpoint(x - step)
        last = hp.abs_mid(step)
        if abs(hp.to_complex(x)) > limit:
            return None
        if last <= 2.0 ** (20 - kernel.P) * max(1.0, abs(hp.to_complex(x))) or abs(f) <= f.total_bound:
            break
    f, df = kernel.f_df(x)
    if abs(f) > 1e3 * f.total_bound:
        return None
    return x, abs(f), f.total_bound, last, abs(df)


class ZeroSearch:
    """Recursive 4-way subdivision of a sector box down to single zeros."""

    def __init__(self, seq: CoefficientSequence, box: SectorBox, min_diameter_rel: float = 2.0**-20,
                 density: float = 1.0):
        self.seq = seq
        self.box = box
        self.engine = WindingEngine(seq, box.r_hi * 1.01, density)
        self.kernel = self.engine.kernel
        self.min_diameter = min_diameter_rel * box.r_hi

    def _children(self, box: SectorBox, w: int) -> list[tuple[SectorBox, int]]:
        last_err = None
        for fr, ft in _SPLITS:
            kids = box.split(fr, ft)
            try:
                ws = [self.engine.box_winding(k).count for k in kids]
            except BoundaryTooCloseError as exc:
                last_err = exc
                continue
            if sum(ws) != w:
                raise RuntimeError(f"winding not additive on {box}: {ws} vs {w}")
            return [(k, c) for k, c in zip(kids, ws) if c > 0]
        raise BoundaryTooCloseError(f"could not split {box}: {last_err}")

    def _try_single(self, box: SectorBox):
        limit = abs(box.center) + 2 * box.diameter + 1.0
        res = _newton(self.kernel, box.center, limit)
        if res is None:
            return None
        x, fx, bound, last, dfx = res
        xc = hp.to_complex(x)
        if not box.contains(xc):
            return None
        rho = max(10.0 * last, 100.0 * bound / max(dfx, 1e-300), 1e-12 * max(1.0, abs(xc)))
        rho = min(rho, 0.25 * box.diameter)
        try:
            w = self.engine.winding(circle_pieces(xc, rho)).count
        except BoundaryTooCloseError:
            return None
        if w != 1:
            return None
        return Zero(x, 1, fx, rho)

    def run(self) -> ZeroSet:
        top = self.engine.box_winding(self.box).count
        zeros: list[Zero] = []
        stack = [(self.box, top)] if top > 0 else []
        while stack:
            box, w = stack.pop()
            if w == 1:
                z = self._try_single(box)
                if z is not None:
                    zeros.append(z)
                    continue
            if box.diameter < self.min_diameter:
                with workprec(self.kernel.P):
                    loc = hp.to_acb(box.center)
                f = self.kernel.f(loc)
                zeros.append(Zero(loc, w, abs(f), box.diameter, cluster=w > 1))
                continue
            kids = self._children(box, w)
            # deterministic order: process in reverse so the first child pops first
            stack.extend(reversed(kids))
        zeros.sort(key=lambda z: (round(abs(z.z), 12), round(cmath.phase(z.z), 12)))
        total = sum(z.multiplicity for z in zeros)
        return ZeroSet(zeros, self.box, total == top, top)


def locate_zeros(seq: CoefficientSequence, box: SectorBox, min_diameter_rel: float = 2.0**-20) -> ZeroSet:
    return ZeroSearch(seq, box, min_diameter_rel).run()


@dataclass
class CountResult:
    count: int
    radius: float
    winding: WindingResult


def count_zeros(seq: CoefficientSequence, r: float, engine: WindingEngine | None = None,
                max_perturbations: int = 8) -> CountResult:
    """Zeros in |z| < r, nudging the radius by up to 0.5% if the circle meets a pit."""
    engine = engine or WindingEngine(seq, r * 1.006)
    offsets = [0.0] + [s * 0.005 * k / max_perturbations for k in range(1, max_perturbations + 1) for s in (1, -1)]
    last = None
    for off in offsets[: 2 * max_perturbations + 1]:
        rr = r * (1 + off)
        try:
            w = engine.winding([Arc(0j, rr, -math.pi, math.pi)])
            return CountResult(w.count, rr, w)
        except BoundaryTooCloseError as exc:
            last = exc
    raise BoundaryTooCloseError(f"circle |z| = {r} stayed pit-contaminated: {last}")


# --------------------------------------------------------------------------
# statistics

def _require_disc(zs: ZeroSet, r: float) -> None:
    if not zs.completeness_certificate:
        raise IncompleteZeroSetError("zero set is not certified complete")
    b = zs.search_box
    if not (b.r_lo == 0.0 and b.full and b.r_hi >= r):
        raise IncompleteZeroSetError(f"zero set does not cover the disc |z| <= {r}")


@dataclass
class SectorCount:
    theta_lo: float
    theta_hi: float
    count: int
    expected: float


def angular_density(zs: ZeroSet, r: float, sectors: int, rate: float = 1.0) -> tuple[list[SectorCount], float]:
    """Per-sector zero counts in |z| <= r against (theta2 - theta1) r / 2 pi.

    ``rate`` is n(r)/r predicted for the family (1 for constant indicator 1).
    Returns the sector list and the max relative deviation.
    """
    _require_disc(zs, r)
    edges = -math.pi + TWO_PI * np.arange(sectors + 1) / sectors
    out = []
    for k in range(sectors):
        cnt = 0
        for z in zs.zeros:
            zc = z.z
            if abs(zc) <= r:
                t = cmath.phase(zc)
                t = t if t < math.pi else -math.pi
                if edges[k] <= t < edges[k + 1]:
                    cnt += z.multiplicity
        out.append(SectorCount(float(edges[k]), float(edges[k + 1]), cnt, rate * r / sectors))
    dev = max((abs(s.count - s.expected) / s.expected for s in out), default=0.0)
    return out, dev


def reciprocal_sum(zs: ZeroSet, R: float) -> complex:
    """sum over |z_k| <= R of multiplicity / z_k."""
    _require_disc(zs, R)
    return complex(sum(z.multiplicity / z.z for z in zs.zeros if abs(z.z) <= R))


@dataclass
class SeparationReport:
    min_distance: float
    nearest: list[float] = field(default_factory=list)        # raw nearest-neighbour distances
    normalized: list[float] = field(default_factory=list)     # divided by sqrt(2 pi |z|)
    histogram: tuple[list[int], list[float]] = ((), ())
    multiple: list[Zero] = field(default_factory=list)        # multiplicity >= 2 or clusters


def separation_report(zs: ZeroSet, bins: int = 10) -> SeparationReport:
    """Nearest-neighbour statistics.

    Zero density for n(r) ~ r is 1/(2 pi r) per unit area, so distances are
    normalised by the local spacing sqrt(2 pi |z|).
    """
    pts = zs.locations
    multiple = [z for z in zs.zeros if z.multiplicity >= 2 or z.cluster]
    if len(pts) < 2:
        return SeparationReport(math.inf, [], [], ([], []), multiple)
    d = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(d, np.inf)
    nn = d.min(axis=1)
    norm = nn / np.sqrt(TWO_PI * np.maximum(np.abs(pts), 1.0))
    counts, edges = np.histogram(norm, bins=bins)
    return SeparationReport(float(nn.min()), nn.tolist(), norm.tolist(),
                            (counts.tolist(), edges.tolist()), multiple)
