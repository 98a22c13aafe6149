"""Explicit radial mapping families on the unit ball.

The stretch g_m(x) = (x/|x|) rho_m(|x|) is driven by the spherical
average q0 of the weight at the origin.  With mu = (n-1)/(p-1),
nu = 1/(p-1) and W(r) = int_r^1 t^-mu q0^-nu(t) dt, the radial profile
is

    rho(r) = exp(-W(r))                                    p = n,
    rho(r) = (1 + ((n-p)/(p-1)) W(r))^((p-1)/(p-n))        p < n,

and the truncated profile rho_m replaces q0 by 1 on (0, 1/m].  The
mapped family f_m = g_m^{-1} follows rho^{-1} outside the seam radius
rho(1/m) and a closed-form linear (p = n) or power-law (p < n) branch
inside it.  The seam shrinks to rho(0+) as m grows; that limit radius
is positive exactly when W(0+) is finite, and then the limit map
collapses the ball of that radius to the origin while fixing the
outer annulus pointwise.

Everything derives from one W engine per profile: a closed form when
q0 is a declared power law, otherwise a monotone cubic table in
s = log r.  Inverses are root-found on the same object that produced
the forward values, so seam continuity holds to machine precision
rather than to quadrature accuracy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .criteria import _phi_factory, _validate_exponents, divergence_test
from .errors import (
    DegenerateProfileError,
    DomainError,
    InputError,
    IntegralDivergenceError,
    PreconditionError,
)
from .geometry import Continuum, as_point, chordal_diameter, chordal_distance
from .quadrature import _vectorize_if_needed, radial_integral

__all__ = [
    "ProfileGrid",
    "PowerLawProfile",
    "RadialProfile",
    "RadialMapFamily",
    "Theorem3Report",
    "build_profile",
    "eval_map",
    "map_points",
    "pushforward",
    "theorem3_scenario",
    "equicontinuity_modulus",
]


@dataclass(frozen=True)
class ProfileGrid:
    """Tabulation knobs for radial profiles.

    rmin is the radial floor of the table; truncations m with
    1/m < rmin are rejected rather than extrapolated.
    """

    points: int = 4096
    rmin: float = 1e-6

    def __post_init__(self):
        if self.points < 16:
            raise InputError("profile grid needs at least 16 points")
        if not (0.0 < self.rmin < 1.0):
            raise InputError(f"rmin must lie in (0, 1), got {self.rmin}")


class PowerLawProfile:
    """The declared-analytic radial weight q0(t) = c * t^alpha."""

    def __init__(self, c: float, alpha: float = 0.0):
        if not c > 0.0:
            raise InputError(f"power-law coefficient must be positive, got {c}")
        self.c = float(c)
        self.alpha = float(alpha)

    def __call__(self, t):
        return self.c * np.asarray(t, dtype=float) ** self.alpha

    def __repr__(self):
        return f"PowerLawProfile(c={self.c}, alpha={self.alpha})"


class _AnalyticW:
    """Closed-form W for power-law q0: W(r) = scale * int_r^1 t^-a dt."""

    def __init__(self, c: float, alpha: float, mu: float, nu: float):
        self.scale = c**-nu
        self.a = mu + alpha * nu

    def w(self, r):
        r = np.asarray(r, dtype=float)
        if self.a == 1.0:
            return -self.scale * np.log(r)
        return self.scale * (1.0 - r ** (1.0 - self.a)) / (1.0 - self.a)

    def w_inv(self, w):
        w = np.asarray(w, dtype=float)
        if self.a == 1.0:
            return np.exp(-w / self.scale)
        base = 1.0 - w * (1.0 - self.a) / self.scale
        return np.maximum(base, 0.0) ** (1.0 / (1.0 - self.a))

    def w_total(self) -> float:
        """W(0+); infinite exactly when the profile integrand is non-integrable."""
        if self.a >= 1.0:
            return math.inf
        return self.scale / (1.0 - self.a)


class _SplineW:
    """Tabulated W on s = log r: per-cell Gauss quadrature of phi(e^s) e^s,
    cumulated from r = 1 down to rmin, interpolated monotonically."""

    _GAUSS = 8

    def __init__(self, qprof: Callable, mu: float, nu: float, grid: ProfileGrid):
        s = np.linspace(math.log(grid.rmin), 0.0, grid.points)
        nodes, wts = np.polynomial.legendre.leggauss(self._GAUSS)
        half = (s[1] - s[0]) / 2.0
        mids = (s[1:] + s[:-1]) / 2.0
        se = mids[:, None] + half * nodes[None, :]
        t = np.exp(se)
        qv = np.asarray(_vectorize_if_needed(qprof)(t.ravel()), dtype=float)
        if np.any(np.isnan(qv)) or np.any(qv <= 0.0):
            raise DegenerateProfileError(
                "radial weight must be positive on the tabulation grid"
            )
        integrand = t ** (1.0 - mu) * qv.reshape(t.shape) ** (-nu)
        inc = half * (integrand * wts[None, :]).sum(axis=1)
        if not np.all(np.isfinite(inc)):
            raise DegenerateProfileError(
                "profile integral overflows on the tabulation grid; raise rmin"
            )
        W = np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]])
        self.smin = s[0]
        self.wmax = float(W[0])
        self._spl = PchipInterpolator(s, W)

    def w(self, r):
        s = np.log(np.asarray(r, dtype=float))
        if np.any(s < self.smin - 1e-12):
            raise DomainError(
                "radius below the tabulated floor; rebuild with a smaller rmin"
            )
        return self._spl(np.maximum(s, self.smin))

    def _inv_scalar(self, target: float) -> float:
        if target <= 0.0:
            return 1.0
        if target > self.wmax:
            raise DomainError(
                "inverse target beyond the tabulated range; rebuild with a "
                "smaller rmin"
            )
        s = brentq(
            lambda u: float(self._spl(u)) - target, self.smin, 0.0, xtol=1e-15
        )
        return math.exp(s)

    def w_inv(self, w):
        w = np.asarray(w, dtype=float)
        if w.ndim == 0:
            return np.float64(self._inv_scalar(float(w)))
        return np.array([self._inv_scalar(float(v)) for v in w.ravel()]).reshape(
            w.shape
        )

    def w_total(self) -> float | None:
        return None  # unknown beyond the table; callers integrate directly


@dataclass
class RadialProfile:
    """A radial stretch rho: [0, 1] -> [0, 1] with its inverse.

    truncation m replaces q0 by 1 on (0, 1/m]; None is the limit
    profile, whose inverse is only defined above rho(0+).
    """

    qprof: Callable
    p: float
    n: int
    truncation: int | None
    engine: object
    grid_r: np.ndarray = field(repr=False)
    grid_rho: np.ndarray = field(repr=False)

    @property
    def branch(self) -> str:
        return "p_equals_n" if self.p == self.n else "p_general"

    @property
    def mu(self) -> float:
        return (self.n - 1.0) / (self.p - 1.0)

    @property
    def kappa(self) -> float:
        return (self.n - self.p) / (self.p - 1.0)

    def _from_w(self, w):
        if self.p == self.n:
            return np.exp(-np.asarray(w, dtype=float))
        return (1.0 + self.kappa * np.asarray(w, dtype=float)) ** (
            (self.p - 1.0) / (self.p - self.n)
        )

    def _to_w(self, s):
        if self.p == self.n:
            return -np.log(np.asarray(s, dtype=float))
        return (
            np.asarray(s, dtype=float) ** ((self.p - self.n) / (self.p - 1.0)) - 1.0
        ) / self.kappa

    def _unit_piece(self, r, u):
        """int_r^u t^-mu dt, the q = 1 stretch contribution below the cut."""
        mu = self.mu
        r = np.asarray(r, dtype=float)
        if mu == 1.0:
            return np.log(u / r)
        return (r ** (1.0 - mu) - u ** (1.0 - mu)) / (mu - 1.0)

    def rho(self, r):
        """The stretch at radius r (scalar or array), on (0, 1]."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0) or np.any(r > 1.0):
            raise DomainError("rho is defined on radii in (0, 1]")
        if self.truncation is None:
            return self._from_w(self.engine.w(r))
        cut = 1.0 / self.truncation
        w = self.engine.w(np.maximum(r, cut))
        below = r < cut
        if np.any(below):
            w = w + np.where(below, self._unit_piece(np.minimum(r, cut), cut), 0.0)
        return self._from_w(w)

    def rho_inv(self, s):
        """The inverse stretch at radius s (scalar or array), on (0, 1]."""
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0.0) or np.any(s > 1.0):
            raise DomainError("rho_inv is defined on radii in (0, 1]")
        if self.truncation is None:
            return self.engine.w_inv(self._to_w(s))
        m = self.truncation
        im = float(self.engine.w(1.0 / m))
        seam = float(self._from_w(im))
        inner = s < seam
        if not np.any(inner):
            return self.engine.w_inv(self._to_w(s))
        if self.p == self.n:
            inner_r = s * math.exp(im) / m
        else:
            e = (self.p - self.n) / (self.p - 1.0)
            inner_r = (s**e - 1.0 + float(m) ** -e - self.kappa * im) ** (1.0 / e)
        if np.all(inner):
            return inner_r
        outer_r = self.engine.w_inv(self._to_w(np.where(inner, seam, s)))
        return np.where(inner, inner_r, outer_r)


def build_profile(
    qprof: Callable,
    p: float,
    n: int,
    m: int | None = None,
    grid_cfg: ProfileGrid = ProfileGrid(),
) -> RadialProfile:
    """Construct the radial stretch rho_m (or the limit rho for m = None).

    A PowerLawProfile weight gets the closed-form engine; any other
    callable is tabulated on a log-spaced grid with monotone cubic
    interpolation.  The weight must be strictly positive on the grid.
    """
    _validate_exponents(p, n)
    if m is not None:
        if int(m) != m or m < 1:
            raise InputError(f"truncation must be a positive integer, got {m}")
        if 1.0 / m < grid_cfg.rmin and not isinstance(qprof, PowerLawProfile):
            raise InputError(
                f"truncation 1/m = {1.0 / m:.3g} lies below the tabulated floor "
                f"rmin = {grid_cfg.rmin:.3g}"
            )
        m = int(m)
    mu = (n - 1.0) / (p - 1.0)
    nu = 1.0 / (p - 1.0)
    if isinstance(qprof, PowerLawProfile):
        engine = _AnalyticW(qprof.c, qprof.alpha, mu, nu)
    else:
        engine = _SplineW(qprof, mu, nu, grid_cfg)

    prof = RadialProfile(
        qprof=qprof,
        p=float(p),
        n=int(n),
        truncation=m,
        engine=engine,
        grid_r=np.empty(0),
        grid_rho=np.empty(0),
    )
    rs = np.geomspace(grid_cfg.rmin, 1.0, min(grid_cfg.points, 4096))
    rhos = np.asarray(prof.rho(rs), dtype=float)
    if np.any(np.diff(rhos) <= 0.0):
        raise DegenerateProfileError(
            "radial stretch is not strictly increasing on the sample grid"
        )
    if abs(float(rhos[-1]) - 1.0) > 1e-12:
        raise DegenerateProfileError(
            f"radial stretch fails rho(1) = 1: got {float(rhos[-1])!r}"
        )
    prof.grid_r = rs
    prof.grid_rho = rhos
    return prof


@dataclass
class RadialMapFamily:
    """One member f_m = g_m^{-1} of the mapped family (m = None: the limit).

    seam_gap records the measured branch mismatch at the seam radius;
    construction warns rather than corrects when it exceeds 1e-10, so a
    failure of the literal inner-branch formula is visible, never
    silently patched.
    """

    profile: RadialProfile
    branch: str
    I_m: float | None
    seam: float | None
    I0: float
    collapse_radius: float
    seam_gap: float = 0.0

    @property
    def m(self) -> int | None:
        return self.profile.truncation

    @property
    def n(self) -> int:
        return self.profile.n

    @classmethod
    def build(
        cls,
        qprof: Callable,
        p: float,
        n: int,
        m: int | None = None,
        grid_cfg: ProfileGrid = ProfileGrid(),
    ) -> "RadialMapFamily":
        prof = build_profile(qprof, p, n, m, grid_cfg)
        total = prof.engine.w_total()
        if total is None:
            phi = _phi_factory(qprof, p, n)
            try:
                total = radial_integral(phi, 0.0, 1.0)
            except IntegralDivergenceError:
                total = math.inf
        collapse = float(prof._from_w(total)) if math.isfinite(total) else 0.0

        I_m = seam = None
        gap = 0.0
        if m is not None:
            I_m = float(prof.engine.w(1.0 / m))
            seam = float(prof._from_w(I_m))
            gap = abs(float(prof.rho_inv(seam)) - 1.0 / m)
            if gap > 1e-10:
                warnings.warn(
                    f"seam mismatch {gap:.3e} at radius {seam:.6g}: the literal "
                    "inner-branch formula disagrees with the outer inverse",
                    RuntimeWarning,
                    stacklevel=2,
                )
        return cls(
            profile=prof,
            branch=prof.branch,
            I_m=I_m,
            seam=seam,
            I0=float(total),
            collapse_radius=collapse,
            seam_gap=gap,
        )

    def radius_out(self, s):
        """Radial action |f_m|(s) for s in [0, 1) (scalar or array)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0.0) or np.any(s >= 1.0):
            raise DomainError("the map acts on the open unit ball")
        out = np.zeros_like(s)
        if self.m is None:
            live = s > self.collapse_radius
        else:
            live = s > 0.0
        if np.any(live):
            out = np.where(live, self.profile.rho_inv(np.where(live, s, 0.5)), 0.0)
        return out


def eval_map(fam: RadialMapFamily, x) -> np.ndarray:
    """f_m at a single finite point of the open unit ball."""
    xp = as_point(x, fam.n)
    if xp.is_infinite:
        raise DomainError("the map acts on finite points of the unit ball")
    arr = xp.array
    # same reduction as the batched path, so both agree bit for bit
    r = float(np.sqrt(np.sum(arr * arr)))
    if r >= 1.0:
        raise DomainError(f"|x| = {r} is outside the open unit ball")
    if r == 0.0:
        return np.zeros(fam.n)
    return arr * (float(fam.radius_out(r)) / r)


def map_points(fam: RadialMapFamily, pts: np.ndarray) -> np.ndarray:
    """Vectorized f_m over an (k, n) array of ball points."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != fam.n:
        raise InputError(f"expected points of shape (k, {fam.n})")
    r = np.sqrt(np.sum(pts * pts, axis=1))
    if np.any(r >= 1.0):
        raise DomainError("all points must lie in the open unit ball")
    out = np.zeros_like(pts)
    live = r > 0.0
    scale = np.zeros_like(r)
    scale[live] = fam.radius_out(r[live]) / r[live]
    out[live] = pts[live] * scale[live, None]
    return out


def pushforward(fam: RadialMapFamily, C: Continuum) -> Continuum:
    """Vertex-wise image polyline of a continuum under f_m.

    Consecutive vertices that collapse to the same image point are
    merged; a continuum collapsing entirely to one point has no
    polyline image and is rejected (measure its image with eval_map).
    """
    img = map_points(fam, C.vertices)
    keep = [img[0]]
    for row in img[1:]:
        if not np.array_equal(row, keep[-1]):
            keep.append(row)
    if len(keep) < 2:
        raise InputError(
            "image degenerates to a single point; no polyline to return"
        )
    return Continuum(np.asarray(keep))


@dataclass(frozen=True)
class Theorem3Report:
    """Collapse-versus-separation trace of the mapped family.

    rows hold (m, chordal diameter of f_m(C), chordal distance of the
    mapped anchor pair); delta is the realized separation minimum.
    """

    rows: tuple[tuple[int, float, float], ...]
    delta: float
    collapse_radius: float

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "h_image_diam", "h_ab"])
            for m, hd, hab in self.rows:
                w.writerow([m, repr(hd), repr(hab)])


def theorem3_scenario(
    qprof: Callable,
    p: float,
    n: int,
    C: Continuum,
    a,
    b,
    m_list,
    grid_cfg: ProfileGrid = ProfileGrid(),
) -> Theorem3Report:
    """Collapse of a fixed inner continuum against fixed outer anchors.

    Requires a convergent profile integrand (the collapse ball must be
    nondegenerate), the continuum strictly inside the collapse ball and
    the anchors strictly outside it, so that f_m(a), f_m(b) stabilize.
    """
    verdict = divergence_test(qprof, p, n)
    if verdict.verdict != "converges":
        raise PreconditionError(
            "profile integrand must converge near 0 for a nondegenerate "
            f"collapse ball; divergence probe says {verdict.verdict!r}"
            + (f" ({verdict.note})" if verdict.note else "")
        )
    limit = RadialMapFamily.build(qprof, p, n, None, grid_cfg)
    if not (0.0 < limit.collapse_radius < 1.0):
        raise PreconditionError(
            f"collapse radius {limit.collapse_radius} is degenerate"
        )
    vr = np.linalg.norm(C.vertices, axis=1)
    if float(vr.max()) >= limit.collapse_radius:
        raise PreconditionError(
            f"continuum reaches radius {float(vr.max()):.6g}, not strictly "
            f"inside the collapse ball of radius {limit.collapse_radius:.6g}"
        )
    anchors = []
    for name, pt in (("a", a), ("b", b)):
        ap = as_point(pt, n)
        r = float(np.linalg.norm(ap.array))
        if not (limit.collapse_radius < r < 1.0):
            raise PreconditionError(
                f"anchor {name} at radius {r:.6g} must lie strictly between "
                f"the collapse radius {limit.collapse_radius:.6g} and 1"
            )
        anchors.append(ap.array)

    rows = []
    for m in m_list:
        fam = RadialMapFamily.build(qprof, p, n, int(m), grid_cfg)
        image = map_points(fam, C.vertices)
        h_diam = chordal_diameter(image)
        h_ab = chordal_distance(
            eval_map(fam, anchors[0]), eval_map(fam, anchors[1])
        )
        rows.append((int(m), float(h_diam), float(h_ab)))
    delta = min(r[2] for r in rows)
    return Theorem3Report(tuple(rows), delta, limit.collapse_radius)


def _direction_set(n: int, count: int) -> np.ndarray:
    if n == 2:
        th = 2.0 * math.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(171)  # fixed battery, not a statistical sample
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def equicontinuity_modulus(
    fams: list[RadialMapFamily],
    x0,
    radii,
    directions: int = 128,
) -> list[tuple[float, float]]:
    """Family oscillation sup_m sup_{|x - x0| <= r} h(f_m(x), f_m(x0)) per radius.

    Probes a fixed deterministic direction battery on each sphere,
    skipping probe points that leave the unit ball.  A trace decreasing
    to 0 certifies equicontinuity of the sampled family at x0.
    """
    if not fams:
        raise InputError("need at least one family member")
    n = fams[0].n
    x0p = as_point(x0, n)
    if float(np.linalg.norm(x0p.array)) >= 1.0:
        raise DomainError("x0 must lie in the open unit ball")
    radii = [float(r) for r in radii]
    if any(r <= 0.0 for r in radii) or any(
        r2 >= r1 for r1, r2 in zip(radii, radii[1:])
    ):
        raise InputError("radii must be positive and strictly decreasing")
    dirs = _direction_set(n, directions)
    trace = []
    for r in radii:
        pts = x0p.array[None, :] + r * dirs
        pts = pts[np.linalg.norm(pts, axis=1) < 1.0]
        worst = 0.0
        for fam in fams:
            fx0 = eval_map(fam, x0p)
            if pts.size:
                img = map_points(fam, pts)
                for row in img:
                    worst = max(worst, chordal_distance(row, fx0))
        trace.append((r, worst))
    return trace
