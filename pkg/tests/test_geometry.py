from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ringmod.errors import InputError
from ringmod.geometry import (
    Annulus,
    Continuum,
    ExtendedPoint,
    chordal_diameter,
    chordal_distance,
    euclidean_diameter,
    euclidean_distance,
    infinity,
    point,
    stereographic_lift,
    unit_ball_volume,
    unit_sphere_area,
)


def test_chordal_distance_origin_to_infinity():
    assert chordal_distance(point(0.0, 0.0), infinity(2)) == 1.0


def test_chordal_distance_identical_points():
    x = point(3.0, -4.0)
    assert chordal_distance(x, x) == 0.0
    assert chordal_distance(infinity(2), infinity(2)) == 0.0


def test_chordal_distance_antipodal_unit_points():
    assert chordal_distance(point(1.0, 0.0), point(-1.0, 0.0)) == pytest.approx(1.0, abs=1e-15)


def test_chordal_distance_origin_to_e1():
    # frozen from the closed form 1/sqrt(2)
    got = chordal_distance(point(0.0, 0.0), point(1.0, 0.0))
    assert got == pytest.approx(0.7071067811865475, abs=1e-15)


def test_chordal_distance_matches_stereographic_chord():
    # independent oracle: chord length between lifts onto the radius-1/2 sphere
    rng = np.random.default_rng(20)
    for _ in range(200):
        n = int(rng.integers(2, 5))
        x = rng.normal(scale=3.0, size=n)
        y = rng.normal(scale=3.0, size=n)
        lifted = float(np.linalg.norm(stereographic_lift(x) - stereographic_lift(y)))
        assert chordal_distance(x, y) == pytest.approx(lifted, abs=1e-13)
    # and with one point at infinity
    for _ in range(50):
        x = rng.normal(scale=3.0, size=2)
        lifted = float(
            np.linalg.norm(stereographic_lift(x) - stereographic_lift(infinity(2)))
        )
        assert chordal_distance(x, infinity(2)) == pytest.approx(lifted, abs=1e-13)


def test_chordal_distance_dimension_mismatch():
    with pytest.raises(InputError):
        chordal_distance(point(0.0, 0.0), point(0.0, 0.0, 0.0))


def test_chordal_bounded_by_one_and_by_euclidean():
    rng = np.random.default_rng(21)
    for _ in range(500):
        x = rng.normal(scale=10.0, size=3)
        y = rng.normal(scale=10.0, size=3)
        h = chordal_distance(x, y)
        assert 0.0 <= h <= 1.0
        assert h <= euclidean_distance(x, y) + 1e-15


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(22)
    for _ in range(2000):
        n = int(rng.integers(2, 5))
        pts = [rng.normal(scale=5.0, size=n) for _ in range(3)]
        if rng.random() < 0.1:
            pts[int(rng.integers(0, 3))] = infinity(n)
        a, b, c = pts
        hab = chordal_distance(a, b)
        hbc = chordal_distance(b, c)
        hac = chordal_distance(a, c)
        assert hac <= hab + hbc + 1e-12


def test_inversion_invariance():
    # h is invariant under x -> x/|x|^2 (with 0 and infinity swapped)
    rng = np.random.default_rng(23)
    for _ in range(300):
        n = int(rng.integers(2, 4))
        x = rng.normal(scale=2.0, size=n)
        y = rng.normal(scale=2.0, size=n)
        xs = x / (x @ x)
        ys = y / (y @ y)
        assert chordal_distance(xs, ys) == pytest.approx(chordal_distance(x, y), abs=1e-12)
    # the pair {0, infinity} maps to {infinity, 0}; the value 1 is preserved
    assert chordal_distance(infinity(2), point(0.0, 0.0)) == 1.0


def test_chordal_diameter_examples():
    assert chordal_diameter([point(0.0, 0.0), infinity(2)]) == 1.0
    assert chordal_diameter([point(2.0, 1.0)]) == 0.0
    trio = [point(0.0, 0.0), point(1.0, 0.0), point(-1.0, 0.0)]
    pairwise = max(
        chordal_distance(a, b) for i, a in enumerate(trio) for b in trio[i + 1 :]
    )
    assert chordal_diameter(trio) == pytest.approx(pairwise, abs=1e-15)
    assert chordal_diameter(trio) == pytest.approx(1.0, abs=1e-15)


def test_chordal_diameter_empty_set_rejected():
    with pytest.raises(InputError):
        chordal_diameter([])


def test_euclidean_diameter_examples():
    seg = Continuum([[0.0, 0.0], [1.0, 0.0]])
    assert euclidean_diameter(seg) == 1.0
    assert euclidean_diameter([point(5.0, 5.0)]) == 0.0
    square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    assert euclidean_diameter(square) == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_euclidean_diameter_rejects_infinity():
    with pytest.raises(InputError):
        euclidean_diameter([point(0.0, 0.0), infinity(2)])


def test_continuum_validation():
    with pytest.raises(InputError):
        Continuum([[0.0, 0.0]])
    with pytest.raises(InputError):
        Continuum([[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(InputError):
        Continuum([[0.0, 0.0], [1.0, 0.0, 0.0]])


def test_continuum_json_round_trip():
    c = Continuum([[0.0, 0.0], [0.5, 0.25], [1.0, 1.0]])
    text = c.to_json()
    rows = json.loads(text)
    assert isinstance(rows, list) and all(isinstance(r, list) for r in rows)
    back = Continuum.from_json(text)
    assert back == c


def test_annulus_validation_and_volume():
    a = Annulus(point(0.0, 0.0), 1.0, 2.0)
    assert a.dimension == 2
    assert a.volume() == pytest.approx(3.0 * math.pi, rel=1e-15)
    with pytest.raises(InputError):
        Annulus(point(0.0, 0.0), 2.0, 1.0)
    with pytest.raises(InputError):
        Annulus(point(0.0, 0.0), 0.0, 1.0)
    with pytest.raises(InputError):
        Annulus(infinity(2), 1.0, 2.0)
    with pytest.raises(InputError):
        Annulus(point(0.0, 0.0), 1.0, math.inf)


def test_sphere_area_and_ball_volume():
    assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)
    # consistency: d/dr of ball volume r^n * Omega_n is the sphere area at r=1
    for n in range(2, 8):
        assert unit_sphere_area(n) == pytest.approx(n * unit_ball_volume(n), rel=1e-13)


def test_extended_point_validation():
    with pytest.raises(InputError):
        ExtendedPoint.finite([1.0])
    with pytest.raises(InputError):
        ExtendedPoint.finite([1.0, math.nan])
    p = ExtendedPoint.at_infinity(3)
    assert p.is_infinite and p.norm == math.inf
