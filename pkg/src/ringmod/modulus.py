"""Ring moduli: exact radial-extremal values, the weighted eta0 identity,
and the lower-bound combinators.

The p-modulus of the path family joining the boundary spheres of
A(x0, r1, r2) has the classical radial-extremal value

    M_p = omega_{n-1} * [ int_{r1}^{r2} t^(-(n-1)/(p-1)) dt ]^(1-p),

which reduces to omega_{n-1} / log^(n-1)(r2/r1) at p = n.  The weighted
version (p = n) comes from the extremal profile

    eta0(r) = 1 / (J r q^(1/(n-1))(r)),   J = int dr / (r q^(1/(n-1))(r)),

whose defining identity  int_A Q eta0^n dm = omega_{n-1} / J^(n-1)  is
re-verified here by an independent quadrature route: the two sides are
different integrals and their agreement is the content of the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, IntegralDivergenceError
from .geometry import as_point, unit_sphere_area
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    WeightField,
    annulus_weighted_integral,
    radial_integral,
    sphere_average,
)

__all__ = [
    "RingModulusResult",
    "ring_modulus_exact",
    "eta0_weighted_bound",
    "weighted_ring_identity",
    "caraman_lower_bound",
    "loewner_lower_bound",
    "minorization_bound",
    "minorization_bound_ring",
    "radial_coverage",
]


@dataclass(frozen=True)
class RingModulusResult:
    """A modulus value with the route that produced it."""

    value: float
    method: str  # exact | eta0_bound | lower_bound | discrete
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("exact", "eta0_bound", "lower_bound", "discrete"):
            raise InputError(f"unknown method {self.method!r}")
        if not self.value >= 0.0:
            raise InputError(f"modulus value must be >= 0, got {self.value}")


def _validate_ring(n: int, p: float, r1: float, r2: float) -> None:
    if n < 2 or int(n) != n:
        raise InputError(f"dimension must be an integer >= 2, got {n}")
    if not (n - 1.0 < p <= n):
        raise InputError(f"need n-1 < p <= n, got p={p}, n={n}")
    if not (0.0 < r1 < r2 < math.inf):
        raise InputError(f"need 0 < r1 < r2 < inf, got ({r1}, {r2})")


def ring_modulus_exact(n: int, p: float, r1: float, r2: float) -> RingModulusResult:
    """Exact p-modulus of the ring path family of A(x0, r1, r2), Q == 1."""
    _validate_ring(n, p, r1, r2)
    omega = unit_sphere_area(n)
    mu = (n - 1.0) / (p - 1.0)
    if p == n:
        integral = math.log(r2 / r1)
    else:
        integral = (r1 ** (1.0 - mu) - r2 ** (1.0 - mu)) / (mu - 1.0)
    value = omega * integral ** (1.0 - p)
    return RingModulusResult(
        value, "exact", {"n": n, "p": p, "r1": r1, "r2": r2, "weight": "1"}
    )


def _spherical_mean_profile(
    Q: WeightField, x0, cfg: QuadratureConfig
) -> Callable[[float], float]:
    """r -> q_{x0}(r), collapsing to the radial profile when centered at x0."""
    x0p = as_point(x0, Q.dimension)
    if (
        Q.radial_profile is not None
        and Q.center is not None
        and np.allclose(Q.center.array, x0p.array, atol=1e-14)
    ):
        return lambda r: float(Q.profile_at(r))
    return lambda r: sphere_average(Q, x0p, r, cfg)


def eta0_weighted_bound(
    Q: WeightField,
    x0,
    r1: float,
    r2: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> tuple[float, float]:
    """The weighted ring bound omega_{n-1} / J^(n-1) and J itself (p = n).

    J = int_{r1}^{r2} dr / (r q_{x0}^(1/(n-1))(r)).  A divergent J yields
    bound 0; q infinite across the ring drives J to 0 and the bound to inf.
    """
    if not (0.0 < r1 < r2 < math.inf):
        raise InputError(f"need 0 < r1 < r2 < inf, got ({r1}, {r2})")
    if Q.dimension != n:
        raise InputError(f"weight dimension {Q.dimension} does not match n={n}")
    qr = _spherical_mean_profile(Q, x0, cfg)

    def integrand(r: float) -> float:
        qv = qr(r)
        if qv == 0.0:
            return math.inf
        if math.isinf(qv):
            return 0.0
        return 1.0 / (r * qv ** (1.0 / (n - 1.0)))

    try:
        J = radial_integral(integrand, r1, r2, cfg)
    except IntegralDivergenceError:
        return 0.0, math.inf
    if J == 0.0:
        return math.inf, 0.0
    return unit_sphere_area(n) / J ** (n - 1.0), J


def weighted_ring_identity(
    Q: WeightField,
    x0,
    r1: float,
    r2: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> tuple[float, float, float]:
    """Both sides of the extremal identity and their relative gap.

    Returns (bound, independent, rel_err) where bound = omega/J^(n-1) and
    independent = int_A Q eta0^n dm via annulus_weighted_integral with
    eta0(r) = 1/(J r q^(1/(n-1))(r)).  Equality within quadrature
    tolerance is the identity's numerical contract.
    """
    bound, J = eta0_weighted_bound(Q, x0, r1, r2, n, cfg)
    if not (0.0 < J < math.inf):
        raise InputError(f"identity check needs finite nonzero J, got {J}")
    qr = _spherical_mean_profile(Q, x0, cfg)

    def eta0(r: float) -> float:
        return 1.0 / (J * r * qr(r) ** (1.0 / (n - 1.0)))

    independent = annulus_weighted_integral(Q, x0, r1, r2, eta0, float(n), cfg)
    rel_err = abs(independent - bound) / bound
    return bound, independent, rel_err


def caraman_lower_bound(
    n: int, p: float, a: float, b: float, b_np: float = 1.0
) -> float:
    """The ring lower bound 2^n b_np/(n-p) (b^(n-p) - a^(n-p)) for p < n.

    b_np is an unknown absolute constant supplied by the caller (default 1);
    use the result only for ordering and shape properties.
    """
    if n < 2 or int(n) != n:
        raise InputError(f"dimension must be an integer >= 2, got {n}")
    if p == n:
        raise InputError(
            "p = n makes the exponent n-p vanish; use loewner_lower_bound instead"
        )
    if not (n - 1.0 < p < n):
        raise InputError(f"need n-1 < p < n, got p={p}, n={n}")
    if not (0.0 < a <= b):
        raise InputError(f"need 0 < a <= b, got ({a}, {b})")
    if b_np <= 0.0:
        raise InputError("b_np must be positive")
    return 2.0**n * b_np / (n - p) * (b ** (n - p) - a ** (n - p))


def loewner_lower_bound(
    n: int, p: float, R: float, diamE: float, diamF: float, C: float = 1.0
) -> float:
    """(1/C) min(diamE, diamF) / R^(1+p-n); shape-only, constant unknown."""
    if R <= 0.0:
        raise InputError("R must be positive")
    if diamE < 0.0 or diamF < 0.0:
        raise InputError("diameters must be >= 0")
    if C <= 0.0:
        raise InputError("C must be positive")
    return min(diamE, diamF) / (C * R ** (1.0 + p - n))


def minorization_bound(M13: float, M23: float, M_cross: float, p: float) -> float:
    """The three-family lower bound 3^(-p) min{M13, M23, M_cross}."""
    for v in (M13, M23, M_cross):
        if v < 0.0:
            raise InputError("moduli must be >= 0")
    return 3.0**-p * min(M13, M23, M_cross)


def minorization_bound_ring(
    M13: float,
    M23: float,
    n: int,
    p: float,
    r1: float,
    r2: float,
    b_np: float = 1.0,
) -> float:
    """Variant replacing the cross term by the ring bound on A(x0, r1, r2)."""
    if not (0.0 < r1 < r2):
        raise InputError(f"need 0 < r1 < r2, got ({r1}, {r2})")
    return minorization_bound(M13, M23, caraman_lower_bound(n, p, r1, r2, b_np), p)


def radial_coverage(S, center) -> tuple[float, float]:
    """Vertex-wise radius range of S about center: (min |v - c|, max |v - c|).

    Supports the sphere-intersection hypothesis of the ring bounds: a
    connected polyline meets every sphere S(center, r) for r strictly
    between these radii.  Coverage is checked at vertices only.
    """
    from .geometry import Continuum

    c = as_point(center).array
    if isinstance(S, Continuum):
        arr = S.vertices
    else:
        arr = np.array([as_point(q).array for q in S], dtype=float)
    radii = np.linalg.norm(arr - c, axis=1)
    return float(radii.min()), float(radii.max())
