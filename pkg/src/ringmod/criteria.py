"""Admissibility criteria on the weight Q.

Three routes certify that a weight is usable at a point: finite mean
oscillation, logarithmic growth of the spherical means, or divergence of

    int_0^delta dt / (t^((n-1)/(p-1)) q^(1/(p-1))(t)).          (*)

Divergence is undecidable from finitely many evaluations, so the verdict
type carries the full probe trace and the classification is an
extrapolation: tests should assert on trace shape, not the label alone.

construct_psi turns a certified case into the pair (psi, I) feeding the
ratio alpha = (int_A Q psi^p dm) / I^p, whose decay along a cutoff
sequence is the numerical form of the admissibility hypothesis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolationError, InputError, PreconditionError
from .geometry import as_point
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    WeightField,
    annulus_weighted_integral,
    radial_integral,
    _vectorize_if_needed,
)

__all__ = [
    "DivergenceVerdict",
    "PsiConstruction",
    "divergence_test",
    "fmo_estimate",
    "log_growth_test",
    "psi_formula",
    "construct_psi",
    "alpha_ratio",
    "inverted_field",
]

ESCAPE_THRESHOLD = 1.0e6


@dataclass(frozen=True)
class DivergenceVerdict:
    """Outcome of the divergence probe for the integral (*) above."""

    verdict: str  # diverges | converges | inconclusive
    value: float | None
    probe_trace: tuple[tuple[float, float], ...]
    note: str = ""

    def __post_init__(self):
        if self.verdict not in ("diverges", "converges", "inconclusive"):
            raise InputError(f"unknown verdict {self.verdict!r}")

    @property
    def diverges(self) -> bool:
        return self.verdict == "diverges"

    def to_csv(self, path) -> None:
        """Write the probe trace as (cutoff, partial_integral) rows."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cutoff", "partial_integral"])
            for cutoff, partial in self.probe_trace:
                w.writerow([repr(cutoff), repr(partial)])


@dataclass(frozen=True)
class PsiConstruction:
    """A choice of psi together with its cumulative integral I(eps, eps0)."""

    psi: Callable
    eps0: float
    case_tag: str  # fmo | log_growth | calculus_c
    I: Callable  # (eps, eps0) -> real
    note: str = ""


def _phi_factory(qprof: Callable, p: float, n: int) -> Callable:
    """The integrand of (*): t^(-mu) q(t)^(-nu) with mu=(n-1)/(p-1), nu=1/(p-1)."""
    mu = (n - 1.0) / (p - 1.0)
    nu = 1.0 / (p - 1.0)

    def phi(t: float) -> float:
        qv = float(qprof(t))
        if qv < 0.0:
            raise InputError(f"weight profile negative at t={t}: {qv}")
        if qv == 0.0:
            return math.inf
        return t**-mu * qv**-nu

    return phi


def _validate_exponents(p: float, n: int) -> None:
    if n < 2 or int(n) != n:
        raise InputError(f"dimension must be an integer >= 2, got {n}")
    if not (n - 1.0 < p <= n):
        raise InputError(f"need n-1 < p <= n, got p={p}, n={n}")


def divergence_test(
    qprof: Callable,
    p: float,
    n: int,
    delta: float = 0.5,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    *,
    levels: int = 12,
    cutoff_ratio: float = 4.0,
    escape: float = ESCAPE_THRESHOLD,
) -> DivergenceVerdict:
    """Classify the integral (*) over (0, delta] from a shrinking-cutoff trace.

    The trace evaluates int_{c_j}^{delta} for c_j = delta * cutoff_ratio^-j.
    Classification combines an endpoint-exponent estimate of the integrand
    with the shape of the partial-integral increments; the escape threshold
    declares divergence once partials blow past it while still growing.
    """
    _validate_exponents(p, n)
    if delta <= 0.0:
        raise InputError(f"delta must be positive, got {delta}")
    if levels < 4:
        raise InputError("need at least 4 cutoff levels")

    qv = _vectorize_if_needed(qprof)
    probe_r = np.geomspace(delta * cutoff_ratio**-levels, delta, 64)
    qvals = np.asarray(qv(probe_r), dtype=float)
    if np.any(qvals < 0.0):
        raise InputError("weight profile must be nonnegative")
    phi = _phi_factory(qprof, p, n)

    if np.any(qvals == 0.0):
        bad = probe_r[qvals == 0.0]
        return DivergenceVerdict(
            "diverges",
            None,
            tuple(),
            note=f"integrand infinite: weight vanishes near t={bad.max():.3g}",
        )

    cutoffs = delta * cutoff_ratio ** -np.arange(1, levels + 1)
    partials: list[tuple[float, float]] = []
    total = 0.0
    upper = delta
    for c in cutoffs:
        total += radial_integral(phi, c, upper, cfg)
        partials.append((float(c), float(total)))
        upper = float(c)
        if total > escape:
            break
    trace = tuple(partials)

    increments = np.diff([0.0] + [P for (_, P) in partials])
    if partials[-1][1] > escape and increments[-1] >= increments[0]:
        return DivergenceVerdict(
            "diverges", None, trace, note=f"partials exceed escape threshold {escape:.1e}"
        )

    c_tail = partials[-1][0]
    f0, f1, f2 = phi(c_tail), phi(c_tail / 4.0), phi(c_tail / 16.0)
    beta = math.log(f2 / f1) / math.log(4.0)
    beta_check = math.log(f1 / f0) / math.log(4.0)

    if beta >= 1.01 and beta_check >= 1.01:
        return DivergenceVerdict(
            "diverges", None, trace, note=f"integrand exponent {beta:.4f} >= 1 near 0"
        )
    if beta <= 0.99 and beta_check <= 0.99:
        # power-law tail: int_0^c ~ phi(c) c / (1 - beta)
        tail = f0 * c_tail / (1.0 - beta)
        value = partials[-1][1] + tail
        if len(increments) >= 3 and not increments[-1] <= increments[-3] + 1e-12:
            return DivergenceVerdict(
                "inconclusive", None, trace, note="increments not settling"
            )
        return DivergenceVerdict(
            "converges", float(value), trace, note=f"exponent {beta:.4f} < 1, tail extrapolated"
        )

    # borderline exponent: decide on increment ratios
    tail_inc = increments[-4:]
    ratios = tail_inc[1:] / tail_inc[:-1]
    if np.min(ratios) >= 0.95:
        return DivergenceVerdict(
            "diverges", None, trace, note="increments non-decreasing at borderline exponent"
        )
    if np.max(ratios) <= 0.8:
        rho = float(np.max(ratios))
        tail = float(tail_inc[-1]) * rho / (1.0 - rho)
        return DivergenceVerdict(
            "converges",
            float(partials[-1][1] + tail),
            trace,
            note="increments contracting at borderline exponent",
        )
    return DivergenceVerdict("inconclusive", None, trace, note="borderline exponent")


def fmo_estimate(
    Q: WeightField,
    x0,
    eps_sequence: Sequence[float],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    *,
    escape: float = ESCAPE_THRESHOLD,
) -> tuple[float, list[tuple[float, float]]]:
    """Mean-oscillation trace of Q on shrinking balls B(x0, eps).

    Each entry estimates (1/|B|) int_B |Q - mean_B(Q)| dm by Monte Carlo
    with the config seed; the score is the max over the tail of the
    sequence (limsup proxy), with inf once the trace escapes.
    """
    eps = [float(e) for e in eps_sequence]
    if not eps or any(e <= 0.0 for e in eps):
        raise InputError("eps_sequence must be positive")
    if not all(b < a for a, b in zip(eps, eps[1:])):
        raise InputError("eps_sequence must be strictly decreasing")
    x0p = as_point(x0, Q.dimension)
    n = Q.dimension
    samples = max(1024, cfg.sphere_rule)
    rng = np.random.default_rng(cfg.rng_seed)
    dirs = rng.normal(size=(samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii_unit = rng.random(samples) ** (1.0 / n)
    unit_cloud = dirs * radii_unit[:, None]

    trace: list[tuple[float, float]] = []
    escaped = False
    for e in eps:
        vals = Q.sample(x0p.array + e * unit_cloud)
        if not np.all(np.isfinite(vals)):
            trace.append((e, math.inf))
            escaped = True
            continue
        dev = float(np.mean(np.abs(vals - np.mean(vals))))
        trace.append((e, dev))
        if dev > escape:
            escaped = True
    if escaped:
        return math.inf, trace
    tail = [d for (_, d) in trace[-max(3, len(trace) // 3):]]
    return float(max(tail)), trace


def log_growth_test(
    qprof: Callable,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    *,
    r0: float = 0.25,
    grid: int = 48,
    growth_factor: float = 3.0,
) -> bool:
    """True iff qprof(r) = O(log^(n-1)(1/r)) on a geometric probe grid.

    Numerical proxy: the ratio q(r)/log^(n-1)(1/r) over the deepest
    quarter of the grid must stay within growth_factor of the shallow
    quarter's level.
    """
    if n < 2:
        raise InputError("dimension must be >= 2")
    if not (0.0 < r0 < 1.0):
        raise InputError("r0 must lie in (0, 1)")
    qv = _vectorize_if_needed(qprof)
    r = r0 * 2.0 ** -np.arange(grid, dtype=float)
    ratios = np.asarray(qv(r), dtype=float) / np.log(1.0 / r) ** (n - 1)
    if not np.all(np.isfinite(ratios)):
        return False
    quarter = max(4, grid // 4)
    head = float(np.max(ratios[:quarter]))
    tail = float(np.max(ratios[-quarter:]))
    return tail <= growth_factor * head + 1e-12


def psi_formula(
    case: str, qprof: Callable | None, p: float, n: int, eps0: float = 0.5
) -> PsiConstruction:
    """The psi/I pair for a named case, with no hypothesis checking.

    case calculus_c:   psi(t) = 1 / (t^((n-1)/(p-1)) q^(1/(p-1))(t)),
                       I by quadrature of psi (it is its own integrand).
    case fmo, log_growth:  psi(t) = 1 / (t log(1/t)),
                       I(eps, eps0) = log(log(1/eps) / log(1/eps0)).

    Use construct_psi for the verified entry point.
    """
    if case not in ("fmo", "log_growth", "calculus_c"):
        raise InputError(f"unknown case {case!r}")
    if not (0.0 < eps0 < 1.0):
        raise InputError(f"eps0 must lie in (0,1), got {eps0}")

    if case == "calculus_c":
        if qprof is None:
            raise InputError("calculus_c needs the radial weight profile")
        _validate_exponents(p, n)
        phi = _phi_factory(qprof, p, n)

        def I(eps: float, e0: float, _cfg=DEFAULT_CONFIG) -> float:
            if not (0.0 < eps < e0):
                raise InputError("need 0 < eps < eps0")
            return radial_integral(phi, eps, e0, _cfg)

        return PsiConstruction(psi=phi, eps0=eps0, case_tag=case, I=I)

    def psi(t: float) -> float:
        return 1.0 / (t * math.log(1.0 / t))

    def I_log(eps: float, e0: float) -> float:
        if not (0.0 < eps < e0):
            raise InputError("need 0 < eps < eps0")
        return math.log(math.log(1.0 / eps) / math.log(1.0 / e0))

    return PsiConstruction(psi=psi, eps0=eps0, case_tag=case, I=I_log)


def construct_psi(
    case: str,
    qprof: Callable | None,
    p: float,
    n: int,
    *,
    eps0: float = 0.5,
    evidence=None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> PsiConstruction:
    """Verified psi construction: refuses when the case hypothesis fails.

    evidence may carry a previously computed test result (a
    DivergenceVerdict for calculus_c, a bool for log_growth, a finite
    fmo_estimate score for fmo).  Without evidence the calculus_c and
    log_growth tests are run here; the fmo case always needs evidence
    since the profile alone cannot certify mean oscillation.

    The returned construction is probe-checked: 0 < I(eps, eps0) < inf
    on eps = eps0 * 2^-k, k = 1..10.
    """
    if case == "calculus_c":
        verdict = evidence if evidence is not None else divergence_test(qprof, p, n, cfg=cfg)
        if not isinstance(verdict, DivergenceVerdict):
            raise PreconditionError("calculus_c evidence must be a DivergenceVerdict")
        if not verdict.diverges:
            raise PreconditionError(
                f"calculus_c hypothesis not verified: divergence test says {verdict.verdict!r}"
            )
    elif case == "log_growth":
        ok = evidence if evidence is not None else log_growth_test(qprof, n, cfg)
        if not ok:
            raise PreconditionError("log_growth hypothesis not verified")
    elif case == "fmo":
        if evidence is None:
            raise PreconditionError(
                "fmo case needs evidence: run fmo_estimate and pass its score"
            )
        score = evidence[0] if isinstance(evidence, tuple) else evidence
        if not (isinstance(score, (int, float)) and math.isfinite(score)):
            raise PreconditionError(f"fmo hypothesis not verified: score {score!r}")
    else:
        raise InputError(f"unknown case {case!r}")

    pc = psi_formula(case, qprof, p, n, eps0)
    for k in range(1, 11):
        eps = eps0 * 2.0**-k
        val = pc.I(eps, eps0)
        if not (0.0 < val < math.inf):
            raise ContractViolationError(
                f"I(eps, eps0) = {val} outside (0, inf) at eps = {eps:.3g}"
            )
    return pc


def alpha_ratio(
    Q: WeightField,
    y0,
    psic: PsiConstruction,
    eps: float,
    eps0: float,
    p: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """The ratio (int_A Q psi^p dm) / I(eps, eps0)^p on A(y0, eps, eps0).

    The admissibility hypothesis holds numerically iff this decays along
    a shrinking-eps sequence; bounded-away-from-zero ratios witness
    failure.
    """
    if not (0.0 < eps < eps0):
        raise InputError(f"need 0 < eps < eps0, got ({eps}, {eps0})")
    I_val = psic.I(eps, eps0)
    if not (0.0 < I_val < math.inf):
        raise ContractViolationError(f"I(eps, eps0) = {I_val} outside (0, inf)")
    num = annulus_weighted_integral(Q, y0, eps, eps0, psic.psi, p, cfg)
    return num / I_val**p


def inverted_field(Q: WeightField) -> WeightField:
    """The inversion Q~(y) = Q(y / |y|^2), for probing behavior at infinity.

    fmo at infinity is tested as fmo_estimate(inverted_field(Q), 0, ...).
    The origin maps to infinity; an exact-zero sample reports inf.
    """
    n = Q.dimension

    def ev(y):
        y = np.asarray(y, dtype=float)
        s = float(y @ y)
        if s == 0.0:
            return math.inf
        return float(Q.evaluate(y / s))

    prof = None
    center = None
    if Q.radial_profile is not None and Q.center is not None and Q.center.norm == 0.0:
        base = Q.radial_profile

        def prof(r):
            r = np.asarray(r, dtype=float)
            return np.asarray(base(1.0 / r), dtype=float)

        center = Q.center
    return WeightField(
        dimension=n, evaluate=ev, radial_profile=prof, center=center, vectorized=False
    )
