"""Reproducible experiment suites with deterministic CSV and JSON output."""

from __future__ import annotations

import csv
import io as _io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import io as dio
from .approx import precompact_certificate, unbounded_mass_family
from .core import DEFAULT_TOL
from .solenoid import (
    CoverTower,
    ball_mass_lower,
    collapse_table,
    finite_cover_space,
    rho_bound_levels,
)

SUITES = ("degeneration", "solenoid", "collapse", "precompact")


class ConfigError(ValueError):
    """Raised for unknown suites or empty parameter grids."""


DEFAULTS: dict[str, dict[str, Any]] = {
    "degeneration": {"b2": [1.0, 0.5, 0.1, 0.01], "b1": 1.0, "b3": 1.0, "density": 2.0},
    "solenoid": {"towers": [[2, 2, 2], [2, 3, 2]], "eps": ["0.3", "0.1", "0.05"]},
    "collapse": {"n": [1, 2, 4, 8, 16], "C_m": 1.0, "l": 1.0, "density": 10.0},
    "precompact": {"eps": ["0.5", "0.25", "0.1"], "max_sheets": 32, "count": 8, "unbounded": 6},
}

GRIDS = {"degeneration": ("b2",), "solenoid": ("towers", "eps"), "collapse": ("n",),
         "precompact": ("eps",)}


@dataclass(frozen=True)
class ExperimentConfig:
    """One suite run.

    Attributes:
        suite: one of :data:`SUITES`.
        params: suite parameters; missing keys take the defaults.
        seed: recorded in every row and used by any randomized step.
        tolerance: float comparison tolerance, recorded in every row.
    """

    suite: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    tolerance: float = DEFAULT_TOL

    def resolved(self) -> dict:
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; expected one of {list(SUITES)}")
        out = dict(DEFAULTS[self.suite])
        out.update({k: v for k, v in self.params.items() if v is not None})
        for key in GRIDS[self.suite]:
            if not out.get(key):
                raise ConfigError(f"grid {key!r} must be nonempty")
        return out


@dataclass(frozen=True)
class SuiteResult:
    """Rows (already sorted), their columns, and a JSON summary."""

    suite: str
    columns: tuple[str, ...]
    rows: tuple[dict, ...]
    summary: dict


# ---------------------------------------------------------------------------
# Formatting


def cell(v) -> str:
    """Deterministic text form of a CSV value."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, Fraction):
        return dio.exact_string(v)
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, (tuple, list)):
        return "-".join(cell(x) for x in v)
    return str(v)


def to_csv(result: SuiteResult) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([cell(row[c]) for c in result.columns])
    return buf.getvalue()


def jsonable(v):
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return dio.exact_string(v)
    if isinstance(v, float):
        return "inf" if math.isinf(v) else v
    return str(v)


def to_json(result: SuiteResult) -> str:
    doc = {"suite": result.suite, "columns": list(result.columns),
           "rows": [{c: jsonable(r[c]) for c in result.columns} for r in result.rows],
           "summary": jsonable(result.summary)}
    return dio.dumps(doc)


def write_outputs(result: SuiteResult, out_dir, stem: str | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or result.suite
    p_csv, p_json = out / f"{stem}.csv", out / f"{stem}.json"
    p_csv.write_text(to_csv(result), encoding="utf-8")
    p_json.write_text(to_json(result), encoding="utf-8")
    return p_csv, p_json


def _finish(suite: str, columns: Sequence[str], rows: list[dict], key: Callable, summary: dict,
            cfg: ExperimentConfig, params: dict) -> SuiteResult:
    rows = sorted(rows, key=key)
    summary = {"seed": cfg.seed, "tolerance": cfg.tolerance, "params": params, **summary}
    return SuiteResult(suite, ("seed", "tolerance", *columns), tuple(rows), summary)


def _revalidated(w, upper, tol) -> bool:
    if w is None:
        return True
    again = dio.revalidate(w, tol)
    return abs(float(again) - float(upper)) <= tol * max(1.0, abs(float(upper)))


def nonincreasing(values: Sequence[float], tol: float = 0.0) -> bool:
    return all(b <= a + tol for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Suites


def run_degeneration(cfg: ExperimentConfig) -> SuiteResult:
    """``d_rho`` upper bounds from the ``(b1, b2, b3)`` pants to the cusped pants."""
    from .hyperbolic.surface import degeneration_row

    p = cfg.resolved()
    rows = []
    for b2 in sorted({float(b) for b in p["b2"]}, reverse=True):
        r, est = degeneration_row(b2, float(p["b1"]), float(p["b3"]), float(p["density"]), seed=cfg.seed)
        rows.append({"seed": cfg.seed, "tolerance": cfg.tolerance, "b2": r.b2, "lower": r.lower,
                     "upper": r.upper, "mesh_bound": r.mesh_bound, "cusp_mass": r.cusp_mass,
                     "symmetric_difference": r.symmetric_difference, "size": r.size,
                     "limit_size": r.limit_size, "evaluated": r.evaluated,
                     "revalidated": _revalidated(est.witness, est.upper, cfg.tolerance)})
    cols = ("b2", "lower", "upper", "mesh_bound", "cusp_mass", "symmetric_difference", "size",
            "limit_size", "evaluated", "revalidated")
    uppers = [r["upper"] for r in sorted(rows, key=lambda r: -r["b2"])]
    summary = {"nonincreasing": nonincreasing(uppers, cfg.tolerance),
               "final_upper": uppers[-1],
               "final_within_mesh": uppers[-1] <= rows[-1]["mesh_bound"] + 0.1 if rows else True}
    return _finish("degeneration", cols, rows, lambda r: -r["b2"], summary, cfg, p)


def _tower_list(towers) -> list[tuple[int, ...]]:
    out = []
    for t in towers:
        if isinstance(t, str):
            t = [int(x) for x in t.replace("-", ",").split(",") if x]
        out.append(tuple(int(x) for x in t))
    return out


def run_solenoid(cfg: ExperimentConfig) -> SuiteResult:
    """Level bounds for every ``n < m`` and the ball-mass lemma at every level."""
    p = cfg.resolved()
    rows = []
    for degs in _tower_list(p["towers"]):
        T = CoverTower(degs)
        for m in range(1, T.depth + 1):
            for n in range(m):
                b = rho_bound_levels(T, n, m)
                rows.append({"seed": cfg.seed, "tolerance": cfg.tolerance, "kind": "levels",
                             "degrees": degs, "n": n, "m": m, "eps": None, "value": b.objective,
                             "bound": b.claim, "ok": b.ok and _revalidated(b.witness, b.objective, cfg.tolerance)})
        for e in p["eps"]:
            eps = Fraction(str(e))
            for n in range(T.depth + 1):
                r = ball_mass_lower(T, n, eps)
                rows.append({"seed": cfg.seed, "tolerance": cfg.tolerance, "kind": "ball",
                             "degrees": degs, "n": n, "m": r.n_eps, "eps": eps, "value": r.min_mass,
                             "bound": r.bound, "ok": r.verified})
    cols = ("kind", "degrees", "n", "m", "eps", "value", "bound", "ok")
    key = lambda r: (r["kind"], r["degrees"], r["eps"] or 0, r["n"], r["m"] or 0)
    summary = {"all_ok": all(r["ok"] for r in rows), "rows": len(rows)}
    return _finish("solenoid", cols, rows, key, summary, cfg, p)


def run_collapse(cfg: ExperimentConfig) -> SuiteResult:
    """Sheeted interval samples glued to the interval along the projection."""
    p = cfg.resolved()
    table = collapse_table([int(n) for n in p["n"]], float(p["C_m"]), float(p["l"]), float(p["density"]))
    rows = []
    for r in table:
        rows.append({"seed": cfg.seed, "tolerance": cfg.tolerance, "n": r.n, "delta": r.delta,
                     "objective": r.objective, "discretization": r.discretization, "bound": r.bound,
                     "ok": r.ok, "size": r.size,
                     "revalidated": _revalidated(r.witness, r.objective, cfg.tolerance)})
    cols = ("n", "delta", "objective", "discretization", "bound", "ok", "size", "revalidated")
    # a single sheet needs no transverse slack, so monotonicity is checked over n >= 2
    objs = [r["objective"] for r in sorted(rows, key=lambda r: r["n"]) if r["n"] >= 2]
    summary = {"nonincreasing": nonincreasing(objs, cfg.tolerance), "all_ok": all(r["ok"] for r in rows),
               "discretization": rows[0]["discretization"] if rows else None}
    return _finish("collapse", cols, rows, lambda r: r["n"], summary, cfg, p)


def cover_ball_bound(r) -> Fraction:
    """``min(1, r)``: ball-mass lower bound shared by all finite covers."""
    return min(Fraction(1), Fraction(r))


def run_precompact(cfg: ExperimentConfig) -> SuiteResult:
    """Certificates for a seeded family of finite covers, and the unbounded-mass counterexample."""
    p = cfg.resolved()
    rng = random.Random(cfg.seed)
    sheets = sorted(rng.sample(range(1, int(p["max_sheets"]) + 1), int(p["count"])))
    covers = [finite_cover_space(N).space for N in sheets]
    unbounded = unbounded_mass_family(int(p["unbounded"]))
    rows = []
    for e in p["eps"]:
        eps = Fraction(str(e))
        for family, spaces, labels in (("covers", covers, sheets),
                                       ("unbounded", unbounded, list(range(1, len(unbounded) + 1)))):
            for c in precompact_certificate(spaces, eps, 1, cover_ball_bound):
                rows.append({"seed": cfg.seed, "tolerance": cfg.tolerance, "family": family, "eps": eps,
                             "member": labels[c.index], "ok": c.ok, "size": c.size, "bound": c.bound,
                             "uncovered": c.uncovered, "reason": c.reasons[0] if c.reasons else ""})
    cols = ("family", "eps", "member", "ok", "size", "bound", "uncovered", "reason")
    key = lambda r: (r["family"], -r["eps"], r["member"])
    covers_ok = all(r["ok"] for r in rows if r["family"] == "covers")
    flagged = [r["member"] for r in rows if r["family"] == "unbounded" and not r["ok"]]
    summary = {"covers_certified": covers_ok, "unbounded_flagged": sorted(set(flagged)),
               "sheets": sheets}
    return _finish("precompact", cols, rows, key, summary, cfg, p)


RUNNERS: dict[str, Callable[[ExperimentConfig], SuiteResult]] = {
    "degeneration": run_degeneration,
    "solenoid": run_solenoid,
    "collapse": run_collapse,
    "precompact": run_precompact,
}


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    cfg.resolved()
    return RUNNERS[cfg.suite](cfg)
