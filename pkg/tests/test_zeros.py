import cmath
import io
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from pitlab.coeffs import make_exponential, make_quadratic_phase, make_rational_phase
from pitlab.evaluate import eval_f
from pitlab.zeros import (BoundaryTooCloseError, IncompleteZeroSetError, SectorBox, WindingEngine, ZeroSet,
                          angular_density, count_zeros, locate_zeros, reciprocal_sum, separation_report,
                          winding_number)

SQRT2 = make_quadratic_phase("sqrt2")
Q_SQRT2 = cmath.exp(2j * math.pi * math.sqrt(2))


@pytest.fixture(scope="module")
def sqrt2_30():
    return locate_zeros(SQRT2, SectorBox.disc(30.0))


@pytest.fixture(scope="module")
def lattice_10():
    return locate_zeros(make_rational_phase(1, 4), SectorBox.disc(10.0))


def lattice_oracle(R):
    # ((1+i)e^z + (1-i)e^{-z})/2 = 0  <=>  e^{2z} = i  <=>  z = i(pi/4 + pi k)
    return sorted((1j * (math.pi / 4 + math.pi * k) for k in range(-20, 20)
                   if abs(math.pi / 4 + math.pi * k) <= R), key=lambda z: z.imag)


# -------------------------------------------------------------- boxes

def test_box_validation():
    with pytest.raises(ValueError):
        SectorBox(2.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        SectorBox(0.0, 1.0, 0.0, 7.0)


def test_box_contains_and_split():
    box = SectorBox(1.0, 3.0, 2.5, 4.0)   # wraps past pi
    assert box.contains(cmath.rect(2.0, 3.5 - 2 * math.pi))
    assert not box.contains(cmath.rect(2.0, 0.0))
    kids = box.split()
    assert sum(k.contains(cmath.rect(2.2, 3.1)) for k in kids) >= 1


# -------------------------------------------------------------- winding

@pytest.mark.parametrize("seq", [make_exponential(), make_rational_phase(1, 2)])
def test_no_zeros_for_exponentials(seq):
    for box in (SectorBox.disc(15.0), SectorBox(3.0, 9.0, -1.0, 2.0)):
        assert winding_number(seq, box).count == 0
    assert locate_zeros(seq, SectorBox.disc(12.0)).zeros == []


def test_count_zeros_examples():
    assert count_zeros(make_exponential(), 25.0).count == 0
    assert abs(count_zeros(SQRT2, 30.0).count - 30) <= 6


def test_count_zeros_disc_30_in_band():
    assert 24 <= winding_number(SQRT2, SectorBox.disc(30.0)).count <= 36


boxes = st.builds(
    lambda r0, dr, t0, dt: SectorBox(r0, r0 + dr, t0, t0 + dt),
    st.floats(0.0, 12.0), st.floats(0.5, 6.0), st.floats(-math.pi, math.pi), st.floats(0.2, 2 * math.pi),
)


@given(boxes)
@settings(max_examples=25, deadline=None)
def test_winding_invariant_under_density_doubling(box):
    try:
        a = winding_number(SQRT2, box, density=1.0)
        b = winding_number(SQRT2, box, density=2.0)
    except BoundaryTooCloseError:
        assume(False)
    assert a.certified and b.certified
    assert a.count == b.count


@given(boxes, st.floats(0.3, 0.7), st.floats(0.3, 0.7))
@settings(max_examples=20, deadline=None)
def test_winding_is_additive(box, fr, ft):
    eng = WindingEngine(SQRT2, box.r_hi + 1.0)
    try:
        whole = eng.box_winding(box).count
        parts = [eng.box_winding(k).count for k in box.split(fr, ft)]
    except BoundaryTooCloseError:
        assume(False)
    assert whole == sum(parts)


def test_winding_matches_dense_phase_unwinding():
    # oracle: unwrap arg f on 20000 circle points
    r = 12.3
    th = np.linspace(-math.pi, math.pi, 20001)
    vals = np.array([eval_f(SQRT2, cmath.rect(r, t)).complex for t in th])
    turns = np.sum(np.diff(np.unwrap(np.angle(vals)))) / (2 * math.pi)
    assert round(turns) == count_zeros(SQRT2, r).count


# -------------------------------------------------------------- location

def test_exponential_zero_set_is_certified_empty():
    zs = locate_zeros(make_exponential(), SectorBox.disc(20.0))
    assert zs.zeros == [] and zs.completeness_certificate


def test_lattice_zeros_match_closed_form(lattice_10):
    zs = lattice_10
    assert zs.completeness_certificate
    got = sorted(zs.locations, key=lambda z: z.imag)
    want = lattice_oracle(10.0)
    assert len(got) == len(want) == 6
    for g, w in zip(got, want):
        assert abs(g - w) < 1e-12


def test_sqrt2_zeros_self_certify():
    zs = locate_zeros(SQRT2, SectorBox.disc(20.0))
    assert zs.completeness_certificate
    for z in zs.zeros:
        res = eval_f(SQRT2, z.location)
        assert abs(res.complex) <= 1e3 * res.total_bound
        assert z.multiplicity == 1 and not z.cluster
    pts = zs.locations
    d = np.abs(pts[:, None] - pts[None, :]) + np.eye(len(pts)) * 1e9
    assert d.min() > 1e-6


def test_sqrt2_30_complete(sqrt2_30):
    assert sqrt2_30.completeness_certificate
    assert sum(z.multiplicity for z in sqrt2_30.zeros) == sqrt2_30.box_winding
    assert all(abs(z.z) <= 30.0 for z in sqrt2_30.zeros)


def test_sector_search_agrees_with_disc(sqrt2_30):
    box = SectorBox(10.0, 30.0, 0.3, 2.0)
    part = locate_zeros(SQRT2, box)
    inside = [z.z for z in sqrt2_30.zeros if box.contains(z.z)]
    assert part.completeness_certificate
    assert len(part.zeros) == len(inside)
    for z in part.locations:
        assert min(abs(z - w) for w in inside) < 1e-10


def test_zero_set_outputs(sqrt2_30):
    buf = io.StringIO()
    sqrt2_30.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "re,im,multiplicity,newton_residual,enclosure_radius"
    assert len(lines) == 1 + len(sqrt2_30.zeros)
    d = json.loads(sqrt2_30.to_json())
    assert d["completeness_certificate"] is True
    assert len(d["zeros"]) == len(sqrt2_30.zeros)


def test_zero_search_is_deterministic():
    a = locate_zeros(SQRT2, SectorBox.disc(15.0)).to_json()
    b = locate_zeros(SQRT2, SectorBox.disc(15.0)).to_json()
    assert a == b


# -------------------------------------------------------------- statistics

def test_angular_density_empty():
    zs = locate_zeros(make_exponential(), SectorBox.disc(10.0))
    counts, _ = angular_density(zs, 10.0, 4)
    assert [c.count for c in counts] == [0, 0, 0, 0]


def test_angular_density_sqrt2(sqrt2_30):
    counts, _ = angular_density(sqrt2_30, 30.0, 4)
    assert all(abs(c.count - 7.5) <= 5 for c in counts)
    full, _ = angular_density(sqrt2_30, 30.0, 1)
    assert full[0].count == winding_number(SQRT2, SectorBox.disc(30.0)).count


def test_statistics_refuse_incomplete_sets(sqrt2_30):
    broken = ZeroSet(sqrt2_30.zeros[:-1], sqrt2_30.search_box, False, sqrt2_30.box_winding)
    with pytest.raises(IncompleteZeroSetError):
        angular_density(broken, 30.0, 4)
    with pytest.raises(IncompleteZeroSetError):
        reciprocal_sum(broken, 30.0)
    with pytest.raises(IncompleteZeroSetError):
        reciprocal_sum(sqrt2_30, 31.0)
    sector = locate_zeros(SQRT2, SectorBox(0.0, 10.0, 0.0, 1.0))
    with pytest.raises(IncompleteZeroSetError):
        angular_density(sector, 10.0, 2)


def test_reciprocal_sum_empty():
    zs = locate_zeros(make_exponential(), SectorBox.disc(10.0))
    assert reciprocal_sum(zs, 10.0) == 0


def test_reciprocal_sum_lattice_tends_to_minus_i():
    zs = locate_zeros(make_rational_phase(1, 4), SectorBox.disc(40.0))
    errs = []
    for R in (10.0, 25.0, 40.0):
        got = reciprocal_sum(zs, R)
        oracle = sum(1 / z for z in lattice_oracle(R))
        assert abs(got - oracle) < 1e-10
        errs.append(abs(got + 1j))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.03


def test_reciprocal_sum_sqrt2_trend(sqrt2_30):
    errs = [abs(reciprocal_sum(sqrt2_30, R) + Q_SQRT2) for R in (10.0, 20.0, 30.0)]
    assert errs[0] > errs[1] > errs[2]


def test_separation_lattice_is_equispaced(lattice_10):
    rep = separation_report(lattice_10)
    assert np.allclose(rep.nearest, math.pi, atol=1e-10)


def test_separation_sqrt2_has_no_multiple_zeros(sqrt2_30):
    rep = separation_report(sqrt2_30)
    assert rep.multiple == []
    assert rep.min_distance > 0.1


def test_separation_empty():
    rep = separation_report(locate_zeros(make_exponential(), SectorBox.disc(5.0)))
    assert rep.nearest == [] and rep.multiple == []
