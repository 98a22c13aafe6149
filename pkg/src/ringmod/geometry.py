"""Extended Euclidean space, the chordal metric, annuli, and polyline continua.

Points live in R^n (n >= 2) together with a single point at infinity.  The
chordal metric is

    h(x, y) = |x - y| / (sqrt(1 + |x|^2) * sqrt(1 + |y|^2)),
    h(x, oo) = 1 / sqrt(1 + |x|^2),

which is the Euclidean chord length between stereographic images on the
sphere of radius 1/2 touching R^n at the origin.  Continua are finite
polylines; diameters are computed over vertex sets only, so experiments
that need tight diameters must supply densely sampled polylines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InputError

__all__ = [
    "ExtendedPoint",
    "Annulus",
    "Continuum",
    "point",
    "infinity",
    "chordal_distance",
    "euclidean_distance",
    "chordal_diameter",
    "euclidean_diameter",
    "stereographic_lift",
    "unit_sphere_area",
    "unit_ball_volume",
]


@dataclass(frozen=True)
class ExtendedPoint:
    """A point of R^n or the point at infinity."""

    coords: tuple[float, ...] | None
    dimension: int

    def __post_init__(self):
        if self.dimension < 2:
            raise InputError(f"dimension must be >= 2, got {self.dimension}")
        if self.coords is not None:
            if len(self.coords) != self.dimension:
                raise InputError(
                    f"coords of length {len(self.coords)} do not match dimension {self.dimension}"
                )
            if not all(math.isfinite(c) for c in self.coords):
                raise InputError("finite point has non-finite coordinates")

    @classmethod
    def finite(cls, coords: Sequence[float]) -> "ExtendedPoint":
        t = tuple(float(c) for c in coords)
        return cls(t, len(t))

    @classmethod
    def at_infinity(cls, dimension: int) -> "ExtendedPoint":
        return cls(None, dimension)

    @property
    def is_infinite(self) -> bool:
        return self.coords is None

    @property
    def array(self) -> np.ndarray:
        if self.coords is None:
            raise InputError("point at infinity has no coordinate array")
        return np.asarray(self.coords, dtype=float)

    @property
    def norm(self) -> float:
        if self.coords is None:
            return math.inf
        return float(np.linalg.norm(self.array))


PointLike = Union[ExtendedPoint, Sequence[float], np.ndarray]


def point(*coords: float) -> ExtendedPoint:
    """Finite point from coordinates: point(1.0, 0.0) is e1 in R^2."""
    return ExtendedPoint.finite(coords)


def infinity(dimension: int) -> ExtendedPoint:
    return ExtendedPoint.at_infinity(dimension)


def as_point(x: PointLike, dimension: int | None = None) -> ExtendedPoint:
    """Coerce a coordinate sequence to ExtendedPoint; pass ExtendedPoint through."""
    if isinstance(x, ExtendedPoint):
        p = x
    else:
        p = ExtendedPoint.finite(np.asarray(x, dtype=float))
    if dimension is not None and p.dimension != dimension:
        raise InputError(f"expected dimension {dimension}, got {p.dimension}")
    return p


def _check_same_dimension(x: ExtendedPoint, y: ExtendedPoint) -> None:
    if x.dimension != y.dimension:
        raise InputError(
            f"dimension mismatch: {x.dimension} vs {y.dimension}"
        )


def chordal_distance(x: PointLike, y: PointLike) -> float:
    """Chordal distance h(x, y); always in [0, 1]."""
    xp, yp = as_point(x), as_point(y)
    _check_same_dimension(xp, yp)
    if xp.is_infinite and yp.is_infinite:
        return 0.0
    if xp.is_infinite:
        return 1.0 / math.sqrt(1.0 + yp.norm**2)
    if yp.is_infinite:
        return 1.0 / math.sqrt(1.0 + xp.norm**2)
    num = float(np.linalg.norm(xp.array - yp.array))
    den = math.sqrt(1.0 + xp.norm**2) * math.sqrt(1.0 + yp.norm**2)
    return num / den


def euclidean_distance(x: PointLike, y: PointLike) -> float:
    xp, yp = as_point(x), as_point(y)
    _check_same_dimension(xp, yp)
    if xp.is_infinite or yp.is_infinite:
        raise InputError("euclidean_distance requires finite points")
    return float(np.linalg.norm(xp.array - yp.array))


def stereographic_lift(x: PointLike) -> np.ndarray:
    """Image of x on the sphere of radius 1/2 centered at (0, ..., 0, 1/2).

    The chordal distance equals the Euclidean distance between lifts; this
    is the independent oracle used by the metric tests.
    """
    xp = as_point(x)
    if xp.is_infinite:
        out = np.zeros(xp.dimension + 1)
        out[-1] = 1.0
        return out
    v = xp.array
    s = 1.0 + float(v @ v)
    return np.concatenate([v / s, [float(v @ v) / s]])


@dataclass(frozen=True)
class Annulus:
    """Spherical ring A(y0, r1, r2) = {y : r1 < |y - y0| < r2}."""

    center: ExtendedPoint
    r1: float
    r2: float

    def __post_init__(self):
        if self.center.is_infinite:
            raise InputError("annulus center must be finite")
        if not (0.0 < self.r1 < self.r2 < math.inf):
            raise InputError(
                f"annulus radii must satisfy 0 < r1 < r2 < inf, got ({self.r1}, {self.r2})"
            )

    @property
    def dimension(self) -> int:
        return self.center.dimension

    def volume(self) -> float:
        n = self.dimension
        return unit_ball_volume(n) * (self.r2**n - self.r1**n)


class Continuum:
    """A connected compact set represented as a finite polyline.

    Vertices are finite, consecutive vertices distinct.  Two or more
    vertices required; use plain point lists for singletons.
    """

    def __init__(self, vertices: Iterable[PointLike]):
        pts = [as_point(v) for v in vertices]
        if len(pts) < 2:
            raise InputError("continuum needs at least 2 vertices")
        dim = pts[0].dimension
        for q in pts:
            if q.is_infinite:
                raise InputError("continuum vertices must be finite")
            if q.dimension != dim:
                raise InputError("continuum vertices must share one dimension")
        arr = np.array([q.coords for q in pts], dtype=float)
        steps = np.linalg.norm(np.diff(arr, axis=0), axis=1)
        if np.any(steps == 0.0):
            raise InputError("consecutive continuum vertices must be distinct")
        self._arr = arr

    @property
    def dimension(self) -> int:
        return self._arr.shape[1]

    @property
    def vertices(self) -> np.ndarray:
        """Vertex coordinates, one row per vertex (read-only view)."""
        v = self._arr.view()
        v.flags.writeable = False
        return v

    def __len__(self) -> int:
        return self._arr.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Continuum) and np.array_equal(self._arr, other._arr)

    def __repr__(self) -> str:
        return f"Continuum({self._arr.shape[0]} vertices in R^{self.dimension})"

    def to_json(self) -> str:
        """JSON array of coordinate arrays, one row per vertex."""
        return json.dumps([list(row) for row in self._arr])

    @classmethod
    def from_json(cls, text: str) -> "Continuum":
        rows = json.loads(text)
        if not isinstance(rows, list):
            raise InputError("continuum JSON must be an array of coordinate arrays")
        return cls(rows)


def _point_set(S) -> list[ExtendedPoint]:
    if isinstance(S, Continuum):
        return [ExtendedPoint.finite(row) for row in S.vertices]
    pts = [as_point(q) for q in S]
    if not pts:
        raise InputError("diameter of empty set")
    return pts


def chordal_diameter(S) -> float:
    """Max pairwise chordal distance over the vertices of S.

    S may be a Continuum or any iterable of points (singletons allowed).
    """
    pts = _point_set(S)
    finite = [q for q in pts if not q.is_infinite]
    has_inf = len(finite) < len(pts)
    best = 0.0
    if finite:
        arr = np.array([q.coords for q in finite], dtype=float)
        scale = np.sqrt(1.0 + np.sum(arr * arr, axis=1))
        if has_inf:
            best = float(np.max(1.0 / scale))
        diff = arr[:, None, :] - arr[None, :, :]
        num = np.linalg.norm(diff, axis=2)
        h = num / (scale[:, None] * scale[None, :])
        best = max(best, float(np.max(h)))
    return best


def euclidean_diameter(S) -> float:
    """Max pairwise Euclidean distance over the vertices of S."""
    pts = _point_set(S)
    if any(q.is_infinite for q in pts):
        raise InputError("euclidean_diameter requires finite points")
    arr = np.array([q.coords for q in pts], dtype=float)
    diff = arr[:, None, :] - arr[None, :, :]
    return float(np.max(np.linalg.norm(diff, axis=2)))


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n (2*pi for n=2, 4*pi for n=3)."""
    if n < 2:
        raise InputError("dimension must be >= 2")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    if n < 1:
        raise InputError("dimension must be >= 1")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
