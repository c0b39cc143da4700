"""Command-line interface.

Every command prints one JSON document (sorted keys) to standard output.
Experiment commands also write ``<suite>.csv`` and ``<suite>.json`` into the
directory given by ``--out`` or the ``DMSPACES_OUT`` environment variable.

Exit status: 0 on success, 1 on an invalid document or structural error,
2 on usage errors. A bound that is not tight never changes the status.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io as dio
from .core import DEFAULT_TOL, StructureError, components, is_inf, parse_scalar
from .experiments import ExperimentConfig, SUITES, run_suite, to_csv, to_json, write_outputs
from .ghlp import (
    SearchBudget,
    WitnessError,
    is_equivalent_zero_distance,
    limit_of_finite_sequence,
    rho_search,
)

OUT_ENV = "DMSPACES_OUT"

BUDGETS = {
    "quick": SearchBudget(max_matchings=500, max_deltas=3, max_removed=2, local_steps=40),
    "default": SearchBudget(),
    "thorough": SearchBudget(max_matchings=200000, max_deltas=10, max_removed=6, local_steps=2000),
}


class UsageError(Exception):
    """Malformed arguments detected after parsing."""


# ---------------------------------------------------------------------------
# Argument helpers


def _values(text: str) -> list:
    """Comma-separated exact or float scalars."""
    try:
        return [parse_scalar(t.strip()) for t in text.split(",") if t.strip()]
    except StructureError as exc:
        raise UsageError(str(exc)) from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _pairs(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            a, b = item.split(":")
            out.append((int(a), int(b)))
        except ValueError as exc:
            raise UsageError(f"pairs look like 0:1,2:3, got {item!r}") from exc
    return out


def _emit(obj) -> None:
    sys.stdout.write(dio.dumps(dio_jsonable(obj)))


def dio_jsonable(obj):
    from .experiments import jsonable

    return jsonable(obj)


def _out_dir(args) -> Path | None:
    d = getattr(args, "out", None) or os.environ.get(OUT_ENV)
    return Path(d) if d else None


def _measure(text: str | None, default, n: int, name: str):
    if text is None:
        return list(default)
    vals = _values(text)
    if len(vals) != n:
        raise UsageError(f"--{name} needs {n} values, got {len(vals)}")
    return vals


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> dict:
    S = dio.load_space(args.file, args.tol)
    return {"ok": True, "points": S.n, "exact": S.exact, "total_mass": S.total_mass, "tolerance": args.tol}


def cmd_components(args) -> dict:
    S = dio.load_space(args.file, args.tol)
    part = components(S)
    return {"blocks": [[S.labels[i] for i in b] for b in part.blocks], "count": len(part.blocks),
            "tolerance": args.tol}


def cmd_prokhorov(args) -> dict:
    from .prokhorov import CapabilityError, MeasurePair, dpi_bisection_oracle, prokhorov_distance

    S = dio.load_space(args.file, args.tol)
    mu = _measure(args.mu, S.mass, S.n, "mu")
    nu = _measure(args.nu, S.mass, S.n, "nu")
    pair = MeasurePair.on_space(S, mu, nu)
    value = prokhorov_distance(pair)
    out = {"value": value, "tolerance": args.tol}
    if args.oracle:
        try:
            lo, hi = dpi_bisection_oracle(pair, args.tol)
            out["oracle"] = [lo, hi]
            out["agree"] = bool(lo - args.tol <= value <= hi + args.tol)
        except CapabilityError as exc:
            out["oracle"] = None
            out["oracle_error"] = str(exc)
    return out


def cmd_glue(args) -> dict:
    from .gluing import GluingSpec, check_isometric_inclusions, glued_distance

    X = dio.load_space(args.x, args.tol)
    Y = dio.load_space(args.y, args.tol)
    g = glued_distance(X, Y, GluingSpec.build(_pairs(args.pairs), parse_scalar(args.delta)))
    rep = check_isometric_inclusions(g, args.tol)
    return {"labels": list(g.labels()), "dist": [[dio.encode_scalar(v) for v in r] for r in g.dist],
            "X_isometric": rep.X_ok, "Y_isometric": rep.Y_ok, "max_distortion": rep.max_distortion,
            "tolerance": args.tol}


def cmd_rho(args) -> dict:
    X = dio.load_space(args.x, args.tol)
    Y = dio.load_space(args.y, args.tol)
    est = rho_search(X, Y, BUDGETS[args.budget], seed=args.seed, tol=args.tol)
    again = dio.revalidate(est.witness, args.tol)
    if args.witness_out:
        Path(args.witness_out).write_text(dio.dumps(dio.witness_to_document(est.witness)), encoding="utf-8")
    return {"lower": est.lower, "upper": est.upper, "witness": dio.witness_summary(est.witness),
            "revalidated": again == est.upper or abs(float(again) - float(est.upper)) <= args.tol,
            "evaluated": est.evaluated, "budget": args.budget, "seed": args.seed, "tolerance": args.tol}


def cmd_equiv(args) -> dict:
    X = dio.load_space(args.x, args.tol)
    Y = dio.load_space(args.y, args.tol)
    m = is_equivalent_zero_distance(X, Y, args.tol)
    return {"equivalent": m is not None,
            "map": None if m is None else {X.labels[i]: Y.labels[j] for i, j in m.items()},
            "tolerance": args.tol}


def cmd_approx(args) -> dict:
    from .approx import epsilon_net_approximation
    from .prokhorov import MeasurePair, prokhorov_distance

    S = dio.load_space(args.file, args.tol)
    eps = parse_scalar(args.eps)
    res = epsilon_net_approximation(S, eps)
    approx_mass = np.zeros(S.n, dtype=object if S.exact else float)
    if S.exact:
        approx_mass[:] = [Fraction(0)] * S.n
    for k, c in enumerate(res.centers):
        approx_mass[c] = res.approx.mass[k]
    dpi = prokhorov_distance(MeasurePair.on_space(S, S.mass, approx_mass))
    return {"centers": [S.labels[c] for c in res.centers], "masses": list(res.approx.mass), "eps": eps,
            "dpi": dpi, "within_eps": bool(dpi <= eps + (0 if S.exact else args.tol)), "tolerance": args.tol}


def cmd_certify(args) -> dict:
    from .approx import precompact_certificate

    family = [dio.load_space(f, args.tol) for f in args.files]
    eps = parse_scalar(args.eps)
    coef, power = parse_scalar(args.ball_coef), parse_scalar(args.ball_power)

    def B(r):
        if isinstance(power, int) and not isinstance(r, float):
            return coef * Fraction(r) ** power
        return float(coef) * float(r) ** float(power)

    certs = precompact_certificate(family, eps, parse_scalar(args.A), B)
    return {"certificates": [{"file": str(args.files[c.index]), "ok": c.ok,
                              "centers": [family[c.index].labels[i] for i in c.centers],
                              "size": c.size, "bound": c.bound, "uncovered": c.uncovered,
                              "reasons": list(c.reasons)} for c in certs],
            "eps": eps, "tolerance": args.tol}


def cmd_hexagon(args) -> dict:
    from .hyperbolic import HexagonSpec, a_sides, build_hexagon, polygon_area, symmetric_difference_area

    b = _floats(args.b)
    if len(b) != 3:
        raise UsageError("--b needs three side lengths")
    spec = HexagonSpec(*b)
    poly = build_hexagon(spec)
    out = {"b": b, "a": list(a_sides(spec)), "area": polygon_area(poly), "tolerance": args.tol}
    if args.vs:
        b2 = _floats(args.vs)
        if len(b2) != 3:
            raise UsageError("--vs needs three side lengths")
        sd = symmetric_difference_area(spec, HexagonSpec(*b2))
        out["symmetric_difference"] = {"area": sd.area, "closed_form": sd.closed_form, "theta": sd.theta,
                                       "beta": sd.beta, "pieces": len(sd.pieces), "mirrored": sd.mirrored}
    return out


def cmd_pants(args) -> dict:
    from .hyperbolic import build_pants

    lengths = _floats(args.lengths)
    if len(lengths) != 3:
        raise UsageError("--lengths needs three boundary lengths")
    P = build_pants(lengths, args.density)
    if args.save:
        dio.save_space(P.space, args.save, {"lengths": lengths, "density": args.density})
    prov = P.provenance
    return {"lengths": lengths, "density": args.density, "points": P.space.n,
            "total_mass": float(sum(P.space.mass)), "mesh_bound": prov["mesh_bound"],
            "cusp_mass": prov["cusp_mass"], "area": prov["area"], "tolerance": args.tol}


def _suite(args, name: str, params: dict) -> dict:
    res = run_suite(ExperimentConfig(name, params, args.seed, args.tol))
    out = _out_dir(args)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(to_csv(res), encoding="utf-8")
    if out is not None:
        write_outputs(res, out)
    return dio.parse_json(to_json(res))


def cmd_degenerate(args) -> dict:
    return _suite(args, "degeneration", {"b2": _floats(args.b2), "b1": args.b1, "b3": args.b3,
                                         "density": args.density})


def cmd_solenoid(args) -> dict:
    towers = [_ints(t) for t in (args.degrees or ["2,2,2", "2,3,2"])]
    return _suite(args, "solenoid", {"towers": towers, "eps": [str(e) for e in args.eps.split(",") if e]})


def cmd_collapse(args) -> dict:
    return _suite(args, "collapse", {"n": _ints(args.n), "C_m": args.C_m, "l": args.l,
                                     "density": args.density})


def cmd_suite(args) -> dict:
    return _suite(args, args.name, {})


def cmd_limit(args) -> dict:
    seq = [dio.load_space(f, args.tol) for f in args.files]
    lim = limit_of_finite_sequence(seq, args.tol)
    if args.save:
        dio.save_space(lim, args.save)
    return {"limit": dio.space_to_document(lim), "tolerance": args.tol}


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmspaces", description="Finite distance measure spaces and GHLP distance bounds.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(func=func)
        s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="float comparison tolerance")
        return s

    s = add("validate", cmd_validate, "validate a space document")
    s.add_argument("file")
    s = add("components", cmd_components, "finite-distance components")
    s.add_argument("file")
    s = add("prokhorov", cmd_prokhorov, "Levy-Prokhorov distance between two measures on one space")
    s.add_argument("file")
    s.add_argument("--mu", help="comma-separated masses (default: the document masses)")
    s.add_argument("--nu", help="comma-separated masses (default: the document masses)")
    s.add_argument("--oracle", action="store_true", help="also run the bisection oracle")
    s = add("glue", cmd_glue, "glued distance of two spaces")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--pairs", required=True, help="identifications as x:y,x:y")
    s.add_argument("--delta", default="0")
    s = add("rho", cmd_rho, "bracket d_rho between two spaces")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--budget", choices=sorted(BUDGETS), default="default")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--witness-out", help="write the witness document here")
    s = add("equiv", cmd_equiv, "zero-distance equivalence test")
    s.add_argument("x")
    s.add_argument("y")
    s = add("approx", cmd_approx, "epsilon-net approximation")
    s.add_argument("file")
    s.add_argument("--eps", required=True)
    s = add("certify", cmd_certify, "precompactness certificates for a family")
    s.add_argument("files", nargs="+")
    s.add_argument("--eps", required=True)
    s.add_argument("--A", required=True, help="mass cap")
    s.add_argument("--ball-coef", default="1", help="B(r) = coef * r**power")
    s.add_argument("--ball-power", default="1")
    s = add("hexagon", cmd_hexagon, "right-angled hexagon area and symmetric difference")
    s.add_argument("--b", required=True, help="b1,b2,b3")
    s.add_argument("--vs", help="second hexagon b1,b2,b3 sharing b1 and b3")
    s = add("pants", cmd_pants, "sample a pair of pants")
    s.add_argument("--lengths", required=True, help="l1,l2,l3")
    s.add_argument("--density", type=float, default=2.0)
    s.add_argument("--save", help="write the sampled space document here")

    def suite_flags(s):
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", help=f"output directory (default: ${OUT_ENV})")
        s.add_argument("--csv", help="write the CSV table here")

    s = add("degenerate", cmd_degenerate, "degeneration table to the cusped pants")
    s.add_argument("--b2", default="1,0.5,0.1,0.01")
    s.add_argument("--b1", type=float, default=1.0)
    s.add_argument("--b3", type=float, default=1.0)
    s.add_argument("--density", type=float, default=2.0)
    suite_flags(s)
    s = add("solenoid", cmd_solenoid, "cover tower bounds and ball masses")
    s.add_argument("--degrees", action="append", help="tower degrees, e.g. 2,3,2 (repeatable)")
    s.add_argument("--eps", default="0.3,0.1,0.05")
    suite_flags(s)
    s = add("collapse", cmd_collapse, "sheeted interval collapse experiment")
    s.add_argument("--n", default="1,2,4,8,16")
    s.add_argument("--C-m", dest="C_m", type=float, default=1.0)
    s.add_argument("--l", type=float, default=1.0)
    s.add_argument("--density", type=float, default=10.0)
    suite_flags(s)
    s = add("limit", cmd_limit, "limit of a finite sequence of spaces")
    s.add_argument("files", nargs="+")
    s.add_argument("--save")
    s = add("suite", cmd_suite, "run one experiment suite with its default grid")
    s.add_argument("name", choices=SUITES)
    suite_flags(s)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"dmspaces: error: {exc}\n")
        return 2
    except dio.DocumentError as exc:
        _emit({"ok": False, "error": str(exc), "invariant": exc.invariant, "line": exc.line,
               "column": exc.column, "path": exc.path})
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(f"dmspaces: error: {exc}\n")
        return 1
    except (StructureError, WitnessError, ValueError) as exc:
        sys.stderr.write(f"dmspaces: error: {exc}\n")
        return 1
    _emit(result)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
