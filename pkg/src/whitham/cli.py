"""Command-line interface: ``whitham <subcommand> --input curve.json --out DIR``.

Reports are written as ``report.json`` (and ``samples.csv`` where a table
makes sense).  Exit status: 0 success, 2 schema violation, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .curve import MarkedPoint, SurfacePoint, build_curve, homology_basis
from .degeneration import (
    DEFAULT_T,
    DegenerationFamily,
    sweep_second_kind,
    sweep_third_kind,
)
from .differentials import SingularPart, zero_divisor
from .errors import WhithamError
from .numerics import Polynomial
from .periods import check_riemann, period_matrix
from .realnorm import real_normalize, verify_uniqueness
from .selftest import run_selftest
from .whitham_coords import (
    LeafSpec,
    LocalFamily,
    coordinate_chart,
    critical_values,
    jacobian_rank_check,
    trace_leaf,
)

SCHEMA = "v1"
log = logging.getLogger("whitham")


class SchemaError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


# ------------------------------------------------------------------ input


def _complex(v, where: str, problems: list[str]) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v):
        return complex(v[0], v[1])
    problems.append(f"{where}: expected a number or [re, im], got {v!r}")
    return 0j


def parse_curve_document(doc: Any):
    """Validate a curve document and return ``(curve, parts)``.

    Raises
    ------
    SchemaError
        with one message per offending field.
    """
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise SchemaError(["document: expected a JSON object"])
    if doc.get("schema", SCHEMA) != SCHEMA:
        problems.append(f"schema: unsupported version {doc.get('schema')!r} (expected {SCHEMA!r})")
    poly = doc.get("poly")
    if not isinstance(poly, list) or len(poly) < 4:
        problems.append("poly: expected a list of at least 4 coefficients (degree >= 3), lowest degree first")
        poly = []
    coeffs = [_complex(c, f"poly[{k}]", problems) for k, c in enumerate(poly)]
    marked = doc.get("marked_points", [])
    if not isinstance(marked, list):
        problems.append("marked_points: expected a list")
        marked = []
    raw_parts = []
    for k, m in enumerate(marked):
        where = f"marked_points[{k}]"
        if not isinstance(m, dict):
            problems.append(f"{where}: expected an object")
            continue
        x = _complex(m.get("x"), f"{where}.x", problems)
        sheet = m.get("sheet", 1)
        if sheet not in (1, -1):
            problems.append(f"{where}.sheet: must be 1 or -1")
        order = m.get("order")
        if not isinstance(order, int) or isinstance(order, bool) or order < 1:
            problems.append(f"{where}.order: must be a positive integer")
            continue
        cs = m.get("coefficients")
        if cs is not None:
            if not isinstance(cs, list) or len(cs) != order:
                problems.append(f"{where}.coefficients: expected {order} entries")
                cs = None
            else:
                cs = [_complex(c, f"{where}.coefficients[{j}]", problems) for j, c in enumerate(cs)]
        raw_parts.append((x, sheet, order, cs))
    if problems:
        raise SchemaError(problems)
    # default singular parts
    simple_missing = [i for i, p in enumerate(raw_parts) if p[3] is None and p[2] == 1]
    if simple_missing and len(simple_missing) != 2:
        raise SchemaError(["marked_points: coefficients required for simple poles unless exactly two are given (defaults +i, -i)"])
    res_default = {i: r for i, r in zip(simple_missing, (1j, -1j))}
    curve = build_curve(Polynomial(coeffs))
    parts = []
    for i, (x, sheet, order, cs) in enumerate(raw_parts):
        if cs is None:
            cs = [0j] * order
            if order == 1:
                cs[0] = res_default[i]
            else:
                cs[-1] = 1.0
        parts.append(SingularPart(MarkedPoint(SurfacePoint(x, sheet), order), tuple(cs)))
    return curve, parts


# ----------------------------------------------------------------- output


def _c(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return _c(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(out: Path, report: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(out: Path, rows: list[dict], name: str = "samples.csv") -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
    return path


def _provenance(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "schema": SCHEMA,
        "version": __version__,
        "config": cfg,
        "seed": args.seed,
        "tolerance": args.tol,
        "conventions": {
            "tau": "tau_ij = B_j-period of Omega_i, A_j-period of Omega_i = delta_ij",
            "symplectic": "J = ((0, I), (-I, 0)) acting on stacked (alpha; beta)",
            "cuts": "sorted branch points paired (e1,e2),(e3,e4),...; odd degree: ray from last point to +inf",
            "local_coordinate": "z = x - x0 on the marked sheet",
        },
    }


def _load(args):
    if args.input is None:
        raise SchemaError(["--input: a curve JSON document is required for this subcommand"])
    try:
        doc = json.loads(Path(args.input).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError([f"--input: cannot read JSON ({exc})"]) from exc
    return parse_curve_document(doc)


# ------------------------------------------------------------- subcommands


def cmd_periods(args) -> dict:
    curve, parts = _load(args)
    basis = homology_basis(curve, avoid=[p.marked.x for p in parts])
    pd = period_matrix(curve, basis)
    check_riemann(pd.tau, args.tol)
    ev = np.linalg.eigvalsh(pd.tau.imag)
    return {
        "genus": curve.genus,
        "branch_points": [_c(e) for e in curve.branch_points],
        "tau": pd.tau,
        "symmetry_error": float(np.max(np.abs(pd.tau - pd.tau.T))),
        "min_eigenvalue_im_tau": float(ev.min()),
        "periods": pd.to_json(),
    }


def _realnorm(args):
    curve, parts = _load(args)
    if not parts:
        raise SchemaError(["marked_points: at least one marked point is required"])
    return curve, parts, real_normalize(curve, parts)


def cmd_realnorm(args) -> dict:
    curve, parts, rn = _realnorm(args)
    uq = verify_uniqueness(curve, parts, trials=7, seed=args.seed, reference=rn, tol=args.tol)
    zeros = zero_divisor(rn.diff, curve)
    return {
        "genus": curve.genus,
        "psi": rn.to_json(),
        "max_imag_period": rn.max_imag_period(),
        "residues": rn.periods.residues,
        "zeros": [
            {"x": "inf" if z.point.infinity else _c(z.point.x), "sheet": z.point.sheet, "multiplicity": z.multiplicity}
            for z in zeros
        ],
        "uniqueness": uq.to_json(),
    }


def cmd_coords(args) -> dict:
    curve, parts, rn = _realnorm(args)
    cv = critical_values(rn)
    chart = coordinate_chart(rn, cv)
    out = {
        "genus": curve.genus,
        "n_marked": len(parts),
        "orders": [p.marked.order for p in parts],
        "coordinates": chart,
        "length": len(chart),
        "critical_values": cv.to_json(),
    }
    try:
        out["rank"] = jacobian_rank_check(rn).to_json()
    except ValueError as exc:
        out["rank"] = {"skipped": str(exc)}
    return out


def cmd_leaf_trace(args) -> tuple[dict, list[dict]]:
    curve, parts, rn = _realnorm(args)
    leaf = LeafSpec.at(rn, tol=args.tol)
    samples = trace_leaf(rn, leaf, steps=args.steps, step_size=args.step_size)
    names = LocalFamily.from_psi(rn).names
    rows = [s.row(names) for s in samples]
    worst = max(max(float(np.max(np.abs(s.periods - leaf.periods))), float(np.max(np.abs(s.residues - np.array(leaf.residues))))) for s in samples)
    return {
        "leaf": {"residues": leaf.residues, "a": leaf.a, "b": leaf.b, "tol": leaf.tol},
        "steps": len(samples) - 1,
        "max_leaf_deviation": worst,
        "parameters": names,
    }, rows


def cmd_degenerate(args) -> tuple[dict, list[dict]]:
    fam = DegenerationFamily()
    src = args.family or args.input
    if src is not None:
        try:
            fam = DegenerationFamily.from_json(json.loads(Path(src).read_text()))
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise SchemaError([f"--family: invalid family document ({exc})"]) from exc
    t_list = args.t_list if args.t_list is not None else list(DEFAULT_T)
    if args.kind == 2:
        rep = sweep_second_kind(fam, t_list, seed=args.seed)
        rows = [
            {"t": r.t, "limit_error": r.limit_error, "inner_max": r.inner_max,
             **{f"period{k + 1}": float(v.real) for k, v in enumerate(r.periods)}}
            for r in rep.rows
        ]
    else:
        reps = {c: sweep_third_kind(fam, t_list, p2_component=c) for c in ("inner", "outer")}
        rep = reps["inner"]
        rows = []
        for c, rp in reps.items():
            for r in rp.rows:
                v = r.vanishing / (2j * np.pi)
                rows.append({"p2_component": c, "t": r.t, "vanishing_residue_re": v.real, "vanishing_residue_im": v.imag})
        return {"family": fam.to_json(), "separated": reps["inner"].to_json(), "same_component": reps["outer"].to_json()}, rows
    return {"family": fam.to_json(), "sweep": rep.to_json(), "differences_decrease": rep.differences_decrease()}, rows


def cmd_selftest(args) -> dict:
    results = run_selftest(seed=args.seed)
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return {"results": [{"name": n, "passed": ok, "detail": d} for n, ok, d in results],
            "all_passed": all(ok for _, ok, _ in results)}


COMMANDS = {
    "periods": cmd_periods,
    "realnorm": cmd_realnorm,
    "coords": cmd_coords,
    "leaf-trace": cmd_leaf_trace,
    "degenerate": cmd_degenerate,
    "selftest": cmd_selftest,
}


def _t_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid t-list {text!r}") from exc
    if not vals or any(v <= 0 or v > 1 for v in vals):
        raise argparse.ArgumentTypeError("t values must lie in (0, 1]")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whitham", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", help="curve JSON document")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--tol", type=_positive, default=1e-8, help="acceptance tolerance")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized verifications")
        if name == "leaf-trace":
            p.add_argument("--steps", type=int, default=10)
            p.add_argument("--step-size", type=_positive, default=0.05)
        if name == "degenerate":
            p.add_argument("--kind", type=int, choices=(2, 3), default=2)
            p.add_argument("--t-list", type=_t_list, default=None, help="comma-separated t values")
            p.add_argument("--family", help="family JSON document (outer/inner roots)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        result = COMMANDS[args.command](args)
    except SchemaError as exc:
        err = {"schema": SCHEMA, "error": "schema", "problems": exc.problems}
        write_report(out, {**_provenance(args), **err})
        print(json.dumps(err), file=sys.stderr)
        return 2
    except (WhithamError, np.linalg.LinAlgError) as exc:
        err = {"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc)}
        write_report(out, {**_provenance(args), **err})
        print(json.dumps(err), file=sys.stderr)
        return 3
    rows = None
    if isinstance(result, tuple):
        result, rows = result
    report = {**_provenance(args), "command": args.command, "result": result}
    path = write_report(out, report)
    if rows is not None:
        write_csv(out, rows)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
