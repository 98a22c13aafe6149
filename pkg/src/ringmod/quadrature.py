"""Quadrature on spheres, radial intervals, and annuli.

Everything downstream (bounds, criteria, map diagnostics) consumes these
three primitives:

  * sphere_average     -- the spherical mean q_{x0}(r) of a weight Q,
  * radial_integral    -- adaptive 1-d integration with automatic power
                          substitution at singular endpoints,
  * annulus_weighted_integral -- the co-area reduction
        int_A Q(y) psi^p(|y-x0|) dm(y)
          = omega_{n-1} int_r1^r2 q_{x0}(r) psi^p(r) r^{n-1} dr.

Infinite weight values propagate as the float inf flag rather than an
exception: a rule that samples an infinite Q reports inf and lets the
caller decide what that means.  Divergent integrals raise instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import InputError, IntegralDivergenceError
from .geometry import ExtendedPoint, as_point, unit_ball_volume, unit_sphere_area

__all__ = [
    "WeightField",
    "QuadratureConfig",
    "sphere_average",
    "radial_integral",
    "annulus_weighted_integral",
    "annulus_integral_mc",
]


def _vectorize_if_needed(fn: Callable) -> Callable:
    """Return a callable accepting ndarray input, wrapping scalar-only fn."""
    probe = np.array([0.25, 0.5])
    try:
        out = np.asarray(fn(probe), dtype=float)
        if out.shape == probe.shape:
            return fn
    except Exception:
        pass
    return np.vectorize(lambda t: float(fn(float(t))), otypes=[float])


@dataclass(frozen=True)
class WeightField:
    """A measurable weight Q: R^n -> [0, inf].

    evaluate maps a single finite point (length-n sequence) to a value;
    batch evaluation over an (m, n) array is available via sample().
    When Q is radially symmetric about a known center, radial_profile
    carries r |-> q(r) and quadrature skips the sphere rule entirely.
    """

    dimension: int
    evaluate: Callable
    radial_profile: Callable | None = None
    center: ExtendedPoint | None = None
    vectorized: bool = False

    def __post_init__(self):
        if self.dimension < 2:
            raise InputError("weight fields live in dimension >= 2")
        if self.radial_profile is not None and self.center is None:
            object.__setattr__(
                self, "center", ExtendedPoint.finite([0.0] * self.dimension)
            )

    @classmethod
    def constant(cls, value: float, dimension: int) -> "WeightField":
        v = float(value)
        return cls(
            dimension=dimension,
            evaluate=lambda x: v,
            radial_profile=lambda r: np.full_like(np.asarray(r, dtype=float), v),
            center=ExtendedPoint.finite([0.0] * dimension),
            vectorized=False,
        )

    @classmethod
    def radial(
        cls, profile: Callable, dimension: int, center=None
    ) -> "WeightField":
        c = as_point(center, dimension) if center is not None else ExtendedPoint.finite(
            [0.0] * dimension
        )
        prof = _vectorize_if_needed(profile)
        carr = c.array

        def ev(x):
            return float(prof(np.linalg.norm(np.asarray(x, dtype=float) - carr)))

        return cls(
            dimension=dimension,
            evaluate=ev,
            radial_profile=prof,
            center=c,
            vectorized=False,
        )

    @classmethod
    def from_callable(
        cls, fn: Callable, dimension: int, vectorized: bool = False
    ) -> "WeightField":
        return cls(dimension=dimension, evaluate=fn, vectorized=vectorized)

    def sample(self, points: np.ndarray) -> np.ndarray:
        """Evaluate Q on an (m, n) array of points, returning shape (m,)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise InputError(f"expected points of shape (m, {self.dimension})")
        if self.vectorized:
            return np.asarray(self.evaluate(pts), dtype=float).reshape(-1)
        return np.array([float(self.evaluate(p)) for p in pts], dtype=float)

    def profile_at(self, r) -> np.ndarray:
        if self.radial_profile is None:
            raise InputError("weight field carries no radial profile")
        return np.asarray(self.radial_profile(np.asarray(r, dtype=float)), dtype=float)

    def check_radial_consistency(self, seed: int = 0, count: int = 64) -> float:
        """Max |evaluate(x) - profile(|x - center|)| over sampled points.

        Callers constructing a WeightField from independent evaluate and
        radial_profile callbacks should keep this below 1e-10.
        """
        if self.radial_profile is None:
            raise InputError("weight field carries no radial profile")
        rng = np.random.default_rng(seed)
        pts = self.center.array + rng.normal(size=(count, self.dimension))
        direct = self.sample(pts)
        radii = np.linalg.norm(pts - self.center.array, axis=1)
        via_profile = self.profile_at(radii)
        return float(np.max(np.abs(direct - via_profile)))


@dataclass(frozen=True)
class QuadratureConfig:
    """Shared quadrature knobs.

    sphere_rule is a total point budget: the number of angles for n=2, a
    k x 2k product Gauss/trapezoid grid with 2k^2 ~ sphere_rule for n=3,
    and the Monte Carlo sample count for n >= 4.
    """

    sphere_rule: int = 2048
    radial_points: int = 200
    rng_seed: int = 0
    target_rel_tol: float = 1e-9

    def __post_init__(self):
        if self.sphere_rule < 1 or self.radial_points < 1:
            raise InputError("sample counts must be >= 1")
        if not (0.0 < self.target_rel_tol < 1.0):
            raise InputError("target_rel_tol must lie in (0, 1)")


DEFAULT_CONFIG = QuadratureConfig()


def _circle_points(x0: np.ndarray, r: float, count: int) -> np.ndarray:
    theta = (np.arange(count) + 0.5) * (2.0 * math.pi / count)
    return x0 + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)


def sphere_average(Q: WeightField, x0, r: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Spherical mean of Q over S(x0, r); inf when a sample is infinite.

    For n in {2, 3} the rule is exact for trigonometric polynomials up to
    the rule order, so radially symmetric Q is averaged exactly.
    """
    if r <= 0.0:
        raise InputError("sphere radius must be positive")
    x0p = as_point(x0, Q.dimension)
    c = x0p.array
    n = Q.dimension

    if n == 2:
        vals = Q.sample(_circle_points(c, r, max(4, cfg.sphere_rule)))
        if not np.all(np.isfinite(vals)):
            return math.inf
        return float(np.mean(vals))

    if n == 3:
        k = max(2, int(round(math.sqrt(cfg.sphere_rule / 2.0))))
        u, w = np.polynomial.legendre.leggauss(k)
        theta = (np.arange(2 * k) + 0.5) * (math.pi / k)
        uu, tt = np.meshgrid(u, theta, indexing="ij")
        s = np.sqrt(1.0 - uu**2)
        pts = c + r * np.stack(
            [s * np.cos(tt), s * np.sin(tt), uu], axis=-1
        ).reshape(-1, 3)
        vals = Q.sample(pts)
        if not np.all(np.isfinite(vals)):
            return math.inf
        vals = vals.reshape(k, 2 * k)
        return float(np.sum(w[:, None] / 2.0 * vals / (2.0 * k)))

    rng = np.random.default_rng(cfg.rng_seed)
    dirs = rng.normal(size=(cfg.sphere_rule, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = Q.sample(c + r * dirs)
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(np.mean(vals))


def _endpoint_exponent(f: Callable, at: float, toward: float) -> float | None:
    """Estimated growth exponent beta of |f| near the endpoint, or None.

    Probes f(at + h*sign) for shrinking h; None means no power growth
    detected.  beta >= 1 signals a non-integrable endpoint.
    """
    span = abs(toward - at)
    sign = 1.0 if toward > at else -1.0
    h = span * 1e-5
    try:
        g = [abs(float(f(at + sign * h / 4.0**j))) for j in range(3)]
    except (ZeroDivisionError, OverflowError, FloatingPointError):
        return 1.0
    if any(math.isnan(v) for v in g):
        return 1.0
    if any(math.isinf(v) for v in g):
        return 1.0
    if g[0] < 1e-300 or g[1] <= 1.5 * g[0] or g[2] <= 1.5 * g[1]:
        return None
    return math.log(g[2] / g[1]) / math.log(4.0)


def radial_integral(
    f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """Adaptive integral of f over [a, b] with singular-endpoint handling.

    Power-type endpoint singularities f ~ (t - a)^(-beta), beta < 1, are
    integrated exactly through the substitution t = a + s^k with
    k(1 - beta) >= 2.  beta >= 1 (and any non-convergent refinement)
    raises IntegralDivergenceError.
    """
    if not (0.0 <= a < b < math.inf):
        raise InputError(f"need 0 <= a < b < inf, got [{a}, {b}]")

    pieces: list[tuple[Callable, float, float]] = []
    beta_a = _endpoint_exponent(f, a, b)
    beta_b = _endpoint_exponent(f, b, a)
    for beta, end in ((beta_a, "left"), (beta_b, "right")):
        if beta is not None and beta >= 0.999:
            raise IntegralDivergenceError(
                f"{end} endpoint exponent ~ {beta:.3f} >= 1: integral diverges"
            )

    mid = 0.5 * (a + b)
    if beta_a is not None and beta_b is not None:
        spans = ((a, mid, beta_a, +1.0), (b, mid, beta_b, -1.0))
    elif beta_a is not None:
        spans = ((a, b, beta_a, +1.0),)
    elif beta_b is not None:
        spans = ((b, a, beta_b, -1.0),)
    else:
        spans = ()

    if not spans:
        pieces.append((f, a, b))
    else:
        for origin, other, beta, sign in spans:
            k = int(math.ceil(2.0 / max(0.02, 1.0 - beta)))
            smax = abs(other - origin) ** (1.0 / k)

            def g(s, _origin=origin, _sign=sign, _k=k):
                ds = s**_k
                t = _origin + _sign * ds
                if ds == 0.0 or t == _origin:
                    # underflow/absorption region: substituted integrand tends to 0
                    return 0.0
                return f(t) * _k * s ** (_k - 1)

            pieces.append((g, 0.0, smax))

    total = 0.0
    for fn, lo, hi in pieces:
        val, err = quad(
            fn,
            lo,
            hi,
            epsabs=1e-13,
            epsrel=cfg.target_rel_tol,
            limit=max(cfg.radial_points, 50),
        )
        if not math.isfinite(val):
            raise IntegralDivergenceError("adaptive quadrature returned non-finite value")
        if err > 0.01 * max(abs(val), 1e-8):
            raise IntegralDivergenceError(
                f"adaptive refinement failed to converge (estimate {val:.6g}, error {err:.2g})"
            )
        total += val
    return total


def annulus_weighted_integral(
    Q: WeightField,
    y0,
    eps: float,
    eps0: float,
    psi: Callable,
    p: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """int over A(y0, eps, eps0) of Q(y) psi^p(|y - y0|) dm(y).

    Reduced by the co-area formula to a single radial integral of
    q_{y0}(r) psi^p(r) r^{n-1}; the spherical mean collapses to the
    radial profile when Q carries one centered at y0.  Returns inf when
    the weight is flagged infinite on some probed sphere.
    """
    if not (0.0 < eps < eps0 < math.inf):
        raise InputError(f"need 0 < eps < eps0 < inf, got ({eps}, {eps0})")
    y0p = as_point(y0, Q.dimension)
    n = Q.dimension

    use_profile = (
        Q.radial_profile is not None
        and Q.center is not None
        and np.allclose(Q.center.array, y0p.array, atol=1e-14)
    )
    if use_profile:
        qr = lambda r: float(Q.profile_at(r))
    else:
        qr = lambda r: sphere_average(Q, y0p, r, cfg)

    probes = np.geomspace(eps, eps0, 16)
    if not all(math.isfinite(qr(r)) for r in probes):
        return math.inf

    def integrand(r: float) -> float:
        return qr(r) * float(psi(r)) ** p * r ** (n - 1)

    return unit_sphere_area(n) * radial_integral(integrand, eps, eps0, cfg)


def annulus_integral_mc(
    Q: WeightField,
    y0,
    eps: float,
    eps0: float,
    psi: Callable,
    p: float,
    samples: int = 40000,
    seed: int = 0,
) -> tuple[float, float]:
    """Direct Monte Carlo estimate of the annulus integral with its standard error.

    Independent route used to cross-check the co-area reduction; samples
    uniformly in the annulus via inverse-cdf radii.
    """
    if not (0.0 < eps < eps0 < math.inf):
        raise InputError(f"need 0 < eps < eps0 < inf, got ({eps}, {eps0})")
    y0p = as_point(y0, Q.dimension)
    n = Q.dimension
    rng = np.random.default_rng(seed)
    u = rng.random(samples)
    radii = (eps**n + u * (eps0**n - eps**n)) ** (1.0 / n)
    dirs = rng.normal(size=(samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = y0p.array + radii[:, None] * dirs
    psi_v = _vectorize_if_needed(psi)
    vals = Q.sample(pts) * np.asarray(psi_v(radii), dtype=float) ** p
    volume = unit_ball_volume(n) * (eps0**n - eps**n)
    est = volume * float(np.mean(vals))
    stderr = volume * float(np.std(vals, ddof=1)) / math.sqrt(samples)
    return est, stderr
