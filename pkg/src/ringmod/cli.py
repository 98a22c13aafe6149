"""Scenario-driven experiment runner.

A scenario is a TOML file naming one pipeline and its parameters:

    kind = "ring_modulus"        # which pipeline to run
    output = "ring"              # artifact name prefix (default: file stem)
    seed = 0                     # echoed in reports; feeds sampling rngs

    [quadrature]                 # optional QuadratureConfig overrides
    sphere_rule = 2048
    radial_points = 200
    target_rel_tol = 1e-9

    [parameters]                 # kind-specific, see _REQUIRED/_ALLOWED
    n = 2
    p = 2.0
    ...

Radial weights use a small declarative vocabulary:

    [parameters.weight]
    form = "power"               # constant | power | log
    c = 1.0                      # multiplier, q(1) = c
    alpha = -1.0                 # power only: q(t) = c * t^alpha
                                 # log: q(t) = c * (1 - log t)

Reports are CSV (UTF-8, comma-separated, '#'-prefixed lines echoing the
parameters and seed); pipelines with multi-row traces also render an
SVG figure next to the CSV unless --no-figures is given.  Exit codes:
0 success, 2 parse/schema error, 3 validation or precondition error,
4 numerical contract failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10: the backport ships the same API
    import tomli as tomllib

from .criteria import divergence_test, fmo_estimate, inverted_field
from .errors import (
    ContractViolationError,
    InputError,
    PreconditionError,
    SolverStallError,
)
from .geometry import Continuum, chordal_diameter
from .gridsolver import GridPathProblem, SolverConfig, solve_modulus
from .maps import (
    PowerLawProfile,
    ProfileGrid,
    RadialMapFamily,
    map_points,
    theorem3_scenario,
)
from .modulus import eta0_weighted_bound, ring_modulus_exact, weighted_ring_identity
from .quadrature import QuadratureConfig, WeightField

__all__ = [
    "Scenario",
    "ScenarioParseError",
    "parse_scenario",
    "run_scenario",
    "lightness_sweep",
    "collapse_control",
    "main",
]

KINDS = (
    "ring_modulus",
    "lemma74_identity",
    "divergence_probe",
    "fmo_probe",
    "theorem3_counterexample",
    "lightness_sweep",
    "discrete_oracle_check",
)

_REQUIRED = {
    "ring_modulus": {"n", "p", "r1", "r2"},
    "lemma74_identity": {"n", "r1", "r2"},
    "divergence_probe": {"n", "p", "weight"},
    "fmo_probe": {"n", "weight"},
    "theorem3_counterexample": {"n", "p", "weight", "continuum", "a", "b", "m_list"},
    "lightness_sweep": {"n", "p", "constants", "member_counts", "continua", "eps"},
    "discrete_oracle_check": {"n", "p", "r1", "r2"},
}

_ALLOWED = {
    "ring_modulus": _REQUIRED["ring_modulus"] | {"weight"},
    "lemma74_identity": _REQUIRED["lemma74_identity"] | {"weight", "x0", "tol"},
    "divergence_probe": _REQUIRED["divergence_probe"] | {"delta"},
    "fmo_probe": _REQUIRED["fmo_probe"] | {"x0", "eps0", "levels", "at_infinity"},
    "theorem3_counterexample": set(_REQUIRED["theorem3_counterexample"]),
    "lightness_sweep": _REQUIRED["lightness_sweep"]
    | {"compactum_radius", "negative_control"},
    "discrete_oracle_check": _REQUIRED["discrete_oracle_check"]
    | {"radial", "angular", "phi_count", "weight", "tol"},
}

_QUAD_KEYS = {"sphere_rule", "radial_points", "target_rel_tol"}
_WEIGHT_KEYS = {"form", "c", "alpha"}


class ScenarioParseError(Exception):
    """Schema-level rejection: bad TOML, unknown kind, missing field."""


@dataclass(frozen=True)
class Scenario:
    kind: str
    parameters: dict
    quadrature: QuadratureConfig
    output: str
    seed: int
    source: Path


def _check_keys(table: dict, allowed: set, required: set, where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ScenarioParseError(f"{where}: unknown field {key!r}")
    for key in required:
        if key not in table:
            raise ScenarioParseError(f"{where}: missing required field {key!r}")


def parse_scenario(path, seed_override: int | None = None) -> Scenario:
    src = Path(path)
    try:
        raw = src.read_bytes()
    except OSError as exc:
        raise ScenarioParseError(f"{src}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioParseError(f"{src}: {exc}") from exc

    _check_keys(
        doc, {"kind", "output", "seed", "quadrature", "parameters"}, {"kind"}, str(src)
    )
    kind = doc["kind"]
    if kind not in KINDS:
        raise ScenarioParseError(
            f"{src}: kind: unknown kind {kind!r}; expected one of {', '.join(KINDS)}"
        )
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ScenarioParseError(f"{src}: parameters: expected a table")
    _check_keys(params, _ALLOWED[kind], _REQUIRED[kind], f"{src}: parameters")
    if "weight" in params and isinstance(params["weight"], dict):
        _check_keys(
            params["weight"], _WEIGHT_KEYS, {"form"}, f"{src}: parameters.weight"
        )
    quad_tbl = doc.get("quadrature", {})
    if not isinstance(quad_tbl, dict):
        raise ScenarioParseError(f"{src}: quadrature: expected a table")
    _check_keys(quad_tbl, _QUAD_KEYS, set(), f"{src}: quadrature")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioParseError(f"{src}: seed: expected an integer")
    if seed_override is not None:
        seed = seed_override
    try:
        quadrature = QuadratureConfig(rng_seed=seed, **quad_tbl)
    except (TypeError, InputError) as exc:
        raise ScenarioParseError(f"{src}: quadrature: {exc}") from exc
    output = doc.get("output", src.stem)
    if not isinstance(output, str) or not output:
        raise ScenarioParseError(f"{src}: output: expected a nonempty string")
    return Scenario(
        kind=kind,
        parameters=params,
        quadrature=quadrature,
        output=output,
        seed=seed,
        source=src,
    )


def _num(params: dict, key: str, where: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise ScenarioParseError(f"{where}: missing required field {key!r}")
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioParseError(f"{where}: {key}: expected a number, got {v!r}")
    return float(v)


def _intval(params: dict, key: str, where: str, default=None) -> int:
    if key not in params:
        if default is None:
            raise ScenarioParseError(f"{where}: missing required field {key!r}")
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioParseError(f"{where}: {key}: expected an integer, got {v!r}")
    return v


def _int_list(params: dict, key: str, where: str) -> list[int]:
    v = params.get(key)
    if (
        not isinstance(v, list)
        or not v
        or any(isinstance(x, bool) or not isinstance(x, int) for x in v)
    ):
        raise ScenarioParseError(
            f"{where}: {key}: expected a nonempty list of integers"
        )
    return list(v)


def _point_list(params: dict, key: str, where: str, default=None) -> list[float]:
    if key not in params and default is not None:
        return default
    v = params.get(key)
    if (
        not isinstance(v, list)
        or not v
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
    ):
        raise ScenarioParseError(f"{where}: {key}: expected a list of numbers")
    return [float(x) for x in v]


def _vertex_list(value, where: str) -> list[list[float]]:
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise ScenarioParseError(f"{where}: expected a list of coordinate lists")
    return [[float(x) for x in row] for row in value]


def _weight_profile(tbl, where: str) -> Callable:
    """Radial profile callable from a weight table (default: constant 1)."""
    if tbl is None:
        return PowerLawProfile(1.0, 0.0)
    if not isinstance(tbl, dict):
        raise ScenarioParseError(f"{where}: expected a weight table")
    form = tbl.get("form")
    c = _num(tbl, "c", where, default=1.0)
    if form == "constant":
        return PowerLawProfile(c, 0.0)
    if form == "power":
        return PowerLawProfile(c, _num(tbl, "alpha", where))
    if form == "log":
        return lambda t: c * (1.0 - np.log(np.asarray(t, dtype=float)))
    raise ScenarioParseError(
        f"{where}: form: expected constant, power, or log, got {form!r}"
    )


def _weight_field(tbl, n: int, where: str) -> WeightField:
    prof = _weight_profile(tbl, where)
    if isinstance(prof, PowerLawProfile) and prof.alpha == 0.0:
        return WeightField.constant(prof.c, n)
    return WeightField.radial(prof, n)


def _flatten(prefix: str, value) -> list[tuple[str, str]]:
    if isinstance(value, dict):
        out = []
        for k in sorted(value):
            out.extend(_flatten(f"{prefix}.{k}" if prefix else k, value[k]))
        return out
    if isinstance(value, float):
        return [(prefix, repr(value))]
    return [(prefix, repr(value) if isinstance(value, (list, str)) else str(value))]


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, sc: Scenario, columns, rows, extra=()) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# kind = {sc.kind}\n")
        fh.write(f"# seed = {sc.seed}\n")
        for key, val in _flatten("", sc.parameters):
            fh.write(f"# {key} = {val}\n")
        for key, val in extra:
            fh.write(f"# {key} = {val}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_format_cell(v) for v in row])
    return path


def _render_svg(path: Path, series, xlabel: str, ylabel: str, logx=True, logy=True):
    """One figure per trace report; never load-bearing for any check."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for xs, ys, label in series:
        ax.plot(xs, ys, marker="o", markersize=3.5, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def lightness_sweep(
    p: float,
    n: int,
    constants,
    member_counts,
    continua,
    eps: float,
    compactum_radius: float = 0.9,
    grid_cfg: ProfileGrid = ProfileGrid(),
) -> list[tuple[int, float]]:
    """Minimum image size over growing truncation families.

    For each constant weight q = c (each must pass the divergence
    probe), the family members are f_m with m = 2^1 .. 2^k.  A row
    (k, min_h) reports the minimum of the image diameter h(f_m(C))
    over all constants, members, and continua at family size k.
    Uniform lightness shows as rows staying positive and stabilizing
    as k doubles.
    """
    if not constants or any(c <= 0 for c in constants):
        raise InputError("constants must be positive")
    counts = [int(k) for k in member_counts]
    if not counts or any(k < 1 for k in counts) or counts != sorted(counts):
        raise InputError("member_counts must be increasing positive integers")
    if not (0.0 < eps < 1.0) or not (0.0 < compactum_radius < 1.0):
        raise InputError("eps and compactum_radius must lie in (0, 1)")
    batts = [C if isinstance(C, Continuum) else Continuum(C) for C in continua]
    if not batts:
        raise InputError("need at least one continuum")
    for i, C in enumerate(batts):
        radii = np.linalg.norm(C.vertices, axis=1)
        if float(radii.max()) > compactum_radius:
            raise InputError(
                f"continuum {i} leaves the compactum of radius {compactum_radius}"
            )
        if chordal_diameter(C) < eps:
            raise InputError(
                f"continuum {i} has diameter {chordal_diameter(C):.3g} < eps = {eps}"
            )

    profiles = []
    for c in constants:
        prof = PowerLawProfile(float(c), 0.0)
        verdict = divergence_test(prof, p, n)
        if not verdict.diverges:
            raise PreconditionError(
                f"constant weight {c} fails the divergence hypothesis: "
                f"{verdict.verdict}"
            )
        profiles.append(prof)

    kmax = counts[-1]
    # min over continua per (constant, member); members accumulate with k
    per_member = np.full((len(profiles), kmax), np.inf)
    for i, prof in enumerate(profiles):
        for j in range(kmax):
            fam = RadialMapFamily.build(prof, p, n, 2 ** (j + 1), grid_cfg)
            for C in batts:
                h = chordal_diameter(map_points(fam, C.vertices))
                per_member[i, j] = min(per_member[i, j], h)
    return [(k, float(per_member[:, :k].min())) for k in counts]


def collapse_control(
    qprof: Callable,
    p: float,
    n: int,
    continuum,
    m_values,
    grid_cfg: ProfileGrid = ProfileGrid(),
) -> list[tuple[int, float]]:
    """Image-diameter decay of one convergent-profile family.

    The negative control for the lightness sweep: the continuum must sit
    strictly inside the collapse ball, and the reported h(f_m(C)) then
    falls toward 0 as m grows.
    """
    C = continuum if isinstance(continuum, Continuum) else Continuum(continuum)
    verdict = divergence_test(qprof, p, n)
    if verdict.verdict != "converges":
        raise PreconditionError(
            f"control weight must have a convergent profile integrand; "
            f"probe says {verdict.verdict!r}"
        )
    limit = RadialMapFamily.build(qprof, p, n, None, grid_cfg)
    radii = np.linalg.norm(C.vertices, axis=1)
    if float(radii.max()) >= limit.collapse_radius:
        raise PreconditionError(
            f"control continuum reaches radius {float(radii.max()):.6g}, not "
            f"strictly inside the collapse ball of radius "
            f"{limit.collapse_radius:.6g}"
        )
    rows = []
    for m in m_values:
        fam = RadialMapFamily.build(qprof, p, n, int(m), grid_cfg)
        rows.append((int(m), float(chordal_diameter(map_points(fam, C.vertices)))))
    return rows


def _run_ring_modulus(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    p = _num(sc.parameters, "p", w)
    r1 = _num(sc.parameters, "r1", w)
    r2 = _num(sc.parameters, "r2", w)
    prof = _weight_profile(sc.parameters.get("weight"), f"{w}.weight")
    if not (isinstance(prof, PowerLawProfile) and prof.alpha == 0.0):
        raise InputError(
            "ring_modulus supports constant weights only; use lemma74_identity "
            "for varying radial weights"
        )
    res = ring_modulus_exact(n, p, r1, r2)
    value = prof.c * res.value
    csv_path = _write_csv(
        out / f"{sc.output}.csv",
        sc,
        ["n", "p", "r1", "r2", "c", "value"],
        [[n, p, r1, r2, prof.c, value]],
    )
    return [csv_path]


def _run_lemma74_identity(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    r1 = _num(sc.parameters, "r1", w)
    r2 = _num(sc.parameters, "r2", w)
    tol = _num(sc.parameters, "tol", w, default=1e-4)
    x0 = _point_list(sc.parameters, "x0", w, default=[0.0] * n)
    field = _weight_field(sc.parameters.get("weight"), n, f"{w}.weight")
    bound, independent, rel_err = weighted_ring_identity(
        field, x0, r1, r2, n, sc.quadrature
    )
    csv_path = _write_csv(
        out / f"{sc.output}.csv",
        sc,
        ["bound", "independent", "rel_err"],
        [[bound, independent, rel_err]],
    )
    if rel_err > tol:
        raise ContractViolationError(
            f"identity gap {rel_err:.3e} exceeds tolerance {tol:.1e} "
            f"(report: {csv_path})"
        )
    return [csv_path]


def _run_divergence_probe(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    p = _num(sc.parameters, "p", w)
    delta = _num(sc.parameters, "delta", w, default=0.5)
    prof = _weight_profile(sc.parameters.get("weight"), f"{w}.weight")
    verdict = divergence_test(prof, p, n, delta, sc.quadrature)
    extra = [
        ("verdict", verdict.verdict),
        ("value", "" if verdict.value is None else repr(verdict.value)),
        ("note", verdict.note),
    ]
    rows = [[c, v] for c, v in verdict.probe_trace]
    csv_path = _write_csv(
        out / f"{sc.output}.csv", sc, ["cutoff", "partial_integral"], rows, extra
    )
    arts = [csv_path]
    if figures and len(rows) >= 2:
        xs = [r[0] for r in rows]
        ys = [r[1] for r in rows]
        arts.append(
            _render_svg(
                out / f"{sc.output}.svg",
                [(xs, ys, "partial integral")],
                "cutoff",
                "integral over [cutoff, delta]",
                logy=False,
            )
        )
    return arts


def _run_fmo_probe(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    eps0 = _num(sc.parameters, "eps0", w, default=0.25)
    levels = _intval(sc.parameters, "levels", w, default=8)
    at_inf = bool(sc.parameters.get("at_infinity", False))
    x0 = _point_list(sc.parameters, "x0", w, default=[0.0] * n)
    field = _weight_field(sc.parameters.get("weight"), n, f"{w}.weight")
    if at_inf:
        field = inverted_field(field)
        x0 = [0.0] * n
    if levels < 2:
        raise InputError("fmo probe needs at least 2 levels")
    seq = [eps0 * 2.0**-k for k in range(levels)]
    score, trace = fmo_estimate(field, x0, seq, sc.quadrature)
    rows = [[e, v] for e, v in trace]
    csv_path = _write_csv(
        out / f"{sc.output}.csv",
        sc,
        ["eps", "mean_oscillation"],
        rows,
        [("score", repr(float(score)))],
    )
    arts = [csv_path]
    if figures and len(rows) >= 2:
        xs = [r[0] for r in rows]
        ys = [r[1] for r in rows]
        arts.append(
            _render_svg(
                out / f"{sc.output}.svg",
                [(xs, ys, "mean oscillation")],
                "eps",
                "oscillation on B(x0, eps)",
                logy=False,
            )
        )
    return arts


def _run_theorem3(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    p = _num(sc.parameters, "p", w)
    prof = _weight_profile(sc.parameters.get("weight"), f"{w}.weight")
    C = Continuum(_vertex_list(sc.parameters["continuum"], f"{w}.continuum"))
    a = _point_list(sc.parameters, "a", w)
    b = _point_list(sc.parameters, "b", w)
    m_list = _int_list(sc.parameters, "m_list", w)
    rep = theorem3_scenario(prof, p, n, C, a, b, m_list)
    rows = [[m, hd, hab] for m, hd, hab in rep.rows]
    csv_path = _write_csv(
        out / f"{sc.output}.csv",
        sc,
        ["m", "h_image_diam", "h_ab"],
        rows,
        [
            ("realized_delta", repr(rep.delta)),
            ("collapse_radius", repr(rep.collapse_radius)),
        ],
    )
    arts = [csv_path]
    if figures and len(rows) >= 2:
        ms = [r[0] for r in rows]
        arts.append(
            _render_svg(
                out / f"{sc.output}.svg",
                [
                    (ms, [r[1] for r in rows], "h(f_m(C))"),
                    (ms, [r[2] for r in rows], "h(f_m(a), f_m(b))"),
                ],
                "m",
                "chordal size",
            )
        )
    return arts


def _run_lightness_sweep(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    p = _num(sc.parameters, "p", w)
    constants = sc.parameters.get("constants")
    if not isinstance(constants, list) or not constants:
        raise ScenarioParseError(f"{w}: constants: expected a nonempty list")
    member_counts = _int_list(sc.parameters, "member_counts", w)
    eps = _num(sc.parameters, "eps", w)
    compactum = _num(sc.parameters, "compactum_radius", w, default=0.9)
    raw_continua = sc.parameters.get("continua")
    if not isinstance(raw_continua, list) or not raw_continua:
        raise ScenarioParseError(f"{w}: continua: expected a nonempty list")
    continua = [
        Continuum(_vertex_list(c, f"{w}: continua[{i}]"))
        for i, c in enumerate(raw_continua)
    ]
    rows = lightness_sweep(
        p, n, [float(c) for c in constants], member_counts, continua, eps, compactum
    )
    csv_path = _write_csv(
        out / f"{sc.output}.csv", sc, ["member_count", "min_h"], rows
    )
    arts = [csv_path]
    if figures and len(rows) >= 2:
        arts.append(
            _render_svg(
                out / f"{sc.output}.svg",
                [([r[0] for r in rows], [r[1] for r in rows], "sweep minimum")],
                "family size (members = 2^1 .. 2^k)",
                "min h(f(C))",
                logx=False,
                logy=False,
            )
        )

    control = sc.parameters.get("negative_control")
    if control is not None:
        cw = f"{w}.negative_control"
        if not isinstance(control, dict):
            raise ScenarioParseError(f"{cw}: expected a table")
        _check_keys(
            control, {"weight", "continuum", "m_values"},
            {"weight", "continuum", "m_values"}, cw,
        )
        qprof = _weight_profile(control["weight"], f"{cw}.weight")
        cont = Continuum(_vertex_list(control["continuum"], f"{cw}.continuum"))
        m_values = _int_list(control, "m_values", cw)
        crow = collapse_control(qprof, p, n, cont, m_values)
        control_csv = _write_csv(
            out / f"{sc.output}_control.csv", sc, ["m", "h_image"], crow
        )
        arts.append(control_csv)
        if figures and len(crow) >= 2:
            arts.append(
                _render_svg(
                    out / f"{sc.output}_control.svg",
                    [([r[0] for r in crow], [r[1] for r in crow], "control decay")],
                    "m",
                    "h(f_m(C))",
                )
            )
    return arts


def _run_discrete_oracle(sc: Scenario, out: Path, figures: bool) -> list[Path]:
    w = f"{sc.source}: parameters"
    n = _intval(sc.parameters, "n", w)
    p = _num(sc.parameters, "p", w)
    r1 = _num(sc.parameters, "r1", w)
    r2 = _num(sc.parameters, "r2", w)
    radial = _intval(sc.parameters, "radial", w, default=48)
    angular = _intval(sc.parameters, "angular", w, default=192)
    phi_count = (
        _intval(sc.parameters, "phi_count", w)
        if "phi_count" in sc.parameters
        else None
    )
    tol = _num(sc.parameters, "tol", w, default=0.08)
    prof = _weight_profile(sc.parameters.get("weight"), f"{w}.weight")

    if isinstance(prof, PowerLawProfile) and prof.alpha == 0.0:
        exact = prof.c * ring_modulus_exact(n, p, r1, r2).value
        field = None if prof.c == 1.0 else WeightField.constant(prof.c, n)
    elif p == n:
        field = WeightField.radial(prof, n)
        exact, _ = eta0_weighted_bound(field, [0.0] * n, r1, r2, n, sc.quadrature)
    else:
        raise InputError(
            "no closed-form reference for varying weights at p != n; "
            "use a constant weight or set p = n"
        )
    problem = GridPathProblem.annulus_grid(
        n, r1, r2, p, radial, angular, field, phi_count=phi_count
    )
    sol = solve_modulus(problem, SolverConfig())
    rel_err = (sol.value - exact) / exact
    csv_path = _write_csv(
        out / f"{sc.output}.csv",
        sc,
        ["radial", "angular", "value", "lower_bound", "exact", "rel_err", "rounds"],
        [[radial, angular, sol.value, sol.lower_bound, exact, rel_err, sol.rounds]],
    )
    if abs(rel_err) > tol:
        raise ContractViolationError(
            f"lattice value {sol.value!r} misses the reference {exact!r} by "
            f"{rel_err:.3%} > {tol:.1%} (report: {csv_path})"
        )
    return [csv_path]


_HANDLERS = {
    "ring_modulus": _run_ring_modulus,
    "lemma74_identity": _run_lemma74_identity,
    "divergence_probe": _run_divergence_probe,
    "fmo_probe": _run_fmo_probe,
    "theorem3_counterexample": _run_theorem3,
    "lightness_sweep": _run_lightness_sweep,
    "discrete_oracle_check": _run_discrete_oracle,
}


def run_scenario(
    path,
    seed: int | None = None,
    out_dir=None,
    verbose: bool = False,
    figures: bool = True,
) -> int:
    """Execute one scenario file; returns the process exit code."""
    try:
        sc = parse_scenario(path, seed)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(out_dir) if out_dir is not None else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    if verbose:
        print(f"scenario {sc.source}: kind={sc.kind} seed={sc.seed} -> {out}")
    try:
        artifacts = _HANDLERS[sc.kind](sc, out, figures)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ContractViolationError, SolverStallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    for art in artifacts:
        print(f"wrote {art}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="ringmod",
        description="Run ring-modulus and radial-map scenario files.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a scenario TOML file")
    runp.add_argument("scenario", help="path to the scenario file")
    runp.add_argument("--seed", type=int, default=None, help="override the seed")
    runp.add_argument("--out", default=None, help="artifact directory (default: cwd)")
    runp.add_argument("--verbose", action="store_true")
    runp.add_argument(
        "--no-figures", action="store_true", help="skip SVG figure rendering"
    )
    args = ap.parse_args(argv)
    return run_scenario(
        args.scenario,
        seed=args.seed,
        out_dir=args.out,
        verbose=args.verbose,
        figures=not args.no_figures,
    )


if __name__ == "__main__":
    raise SystemExit(main())
