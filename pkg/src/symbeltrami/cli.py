"""Command-line front end.

Commands::

    symbeltrami catalog list
    symbeltrami catalog show NAME
    symbeltrami construct --symmetry NAME [--N 4] [--route scalar|operator]
    symbeltrami verify SOLUTION.json
    symbeltrami trace (--solution FILE | --symmetry NAME) --start x,y,z --t-end T
    symbeltrami poincare (--solution FILE | --symmetry NAME) --section z=0 --seeds 16 --crossings 200
    symbeltrami scan (--solution FILE | --symmetry NAME) [--grid 64] [--levels 0]

Exit codes:

    0  success
    1  operational error (bad arguments, unknown catalog entry, I/O)
    2  hypothesis failure: a mathematically meaningful negative result,
       e.g. a symmetry admitting no invariant fields
    3  precondition violated (e.g. the Killing field is not Beltrami,
       a seed on a critical level)
    4  integration stalled at a zero of the field
    5  verification residual above threshold

Output files go to ``--out``, else ``$SYMBELTRAMI_OUT``, else
``./symbeltrami_out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import chartcalc as cc
from . import fieldline as fl
from . import structure as st
from .catalog import KillingEntry, catalog_get, catalog_names, sample_points, translation_entry
from .chartcalc import FDConfig, FlatTorus3, RoundSphere3
from .directions import Direction
from .errors import DomainError, HypothesisFailure, NotBeltramiKilling, PreconditionError, SeedRejected, StalledAtZero, UnknownEntry
from .output import RunConfig, dumps, resolve_out_dir, write_csv, write_gnuplot, write_json
from .scalar_eigen import (
    ScalarEigenpair,
    beltrami_from_scalar,
    hopf_golden_pair,
    recover_scalar,
    solve_constrained_laplacian,
)
from .spectral import (
    SpectralField,
    assemble_pi_curlinv,
    curl_spec,
    directional_derivative,
    helicity,
    symmetric_mask,
    top_eigenpair,
)

SOLUTION_SCHEMA = "symbeltrami.solution/1"
CATALOG_SCHEMA = "symbeltrami.catalog/1"
VERIFY_SCHEMA = "symbeltrami.verify/1"
TRACE_SCHEMA = "symbeltrami.trajectory/1"
POINCARE_SCHEMA = "symbeltrami.poincare/1"
SCAN_SCHEMA = "symbeltrami.scan/1"

EXIT_OK, EXIT_OPERATIONAL, EXIT_HYPOTHESIS, EXIT_PRECONDITION, EXIT_STALLED, EXIT_VERIFY = 0, 1, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the operational code, keeping 2 for hypothesis failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_OPERATIONAL, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# solutions


@dataclass
class Solution:
    entry: KillingEntry
    model: object
    X: object
    mu: float
    lam: float | None
    route: str
    normalize: str
    N: int | None
    f: object = None
    Y: object = None
    multiplicity: int | None = None

    @property
    def spectral(self) -> bool:
        return isinstance(self.X, SpectralField)

    def first_integral(self):
        return st.first_integral_of_pair(self.model, self.X, self.Y, self.mu)


def resolve_symmetry(text: str) -> KillingEntry:
    """Catalog name, axis name, ``irrational``, or integer components ``a,b,c``."""
    if text in catalog_names():
        return catalog_get(text)
    if "," in text:
        try:
            comps = [int(x) for x in text.split(",")]
        except ValueError:
            raise UnknownEntry(f"cannot parse symmetry {text!r}") from None
        return translation_entry(Direction.rational(comps))
    if text.lower() in ("e1", "e2", "e3", "irrational"):
        return translation_entry(text)
    return catalog_get(text)


def build_solution(entry: KillingEntry, N: int, route: str, normalize: str = "l2") -> Solution:
    if route not in ("scalar", "operator"):
        raise ValueError("route must be 'scalar' or 'operator'")
    if isinstance(entry.model, RoundSphere3):
        if route != "scalar":
            raise PreconditionError("the operator route is only available on the flat torus")
        pair = hopf_golden_pair()
        res = beltrami_from_scalar(entry, pair)
        return Solution(entry, entry.model, res.X, res.mu, pair.lam, route, normalize, None, pair.f, res.Y)
    if entry.kappa is None:
        raise NotBeltramiKilling(f"{entry.name}: curl Y is not a constant multiple of Y; no construction applies")
    if entry.direction is None:
        raise PreconditionError(f"{entry.name}: only translation symmetries are supported on the torus")
    yhat = entry.direction.to_float() / np.sqrt(entry.direction.norm_sq())
    if route == "scalar":
        pair = solve_constrained_laplacian(entry.direction, N)
        if normalize == "peak":
            pair = ScalarEigenpair(pair.f / 2.0, pair.lam, pair.symmetry, True, pair.wavevector)
        res = beltrami_from_scalar(pair.symmetry, pair)
        return Solution(entry, entry.model, res.X, res.mu, pair.lam, route, normalize, N, pair.f, yhat)
    op = assemble_pi_curlinv(symmetric_mask(entry.direction, N))
    ep = top_eigenpair(op)
    return Solution(entry, entry.model, ep.field, 1.0 / ep.mu, None, route, "unit-l2", N, None, yhat, ep.multiplicity)


def solution_payload(sol: Solution) -> dict:
    out = {
        "symmetry": sol.entry.name,
        "model": sol.model.to_dict(),
        "route": sol.route,
        "normalize": sol.normalize,
        "N": sol.N,
        "mu": sol.mu,
        "lambda": sol.lam,
        "kappa": sol.entry.kappa,
    }
    if sol.entry.direction is not None:
        out["direction"] = sol.entry.direction.to_dict()
    if sol.spectral:
        out["representation"] = "spectral"
        out["X"] = sol.X.to_dict()
        if sol.f is not None:
            out["f"] = sol.f.to_dict()
        if sol.multiplicity is not None:
            out["multiplicity"] = sol.multiplicity
    else:
        out["representation"] = "analytic"
        out["construction"] = "hopf_golden"
        out["X"] = {
            "expression": "X = H x grad f - mu f H",
            "H": "(x1,x2,x3,x4) -> (-x2,x1,-x4,x3)",
            "f": "x1^2 + x2^2 - 1/2",
            "charts": "stereographic north u = x[:3]/(1-x4), south u = (x1,x2,-x3)/(1+x4)",
        }
    return out


def load_solution(path) -> Solution:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SOLUTION_SCHEMA:
        raise ValueError(f"{path}: not a solution file (schema {doc.get('schema')!r})")
    if doc["representation"] == "analytic":
        return build_solution(catalog_get("s3_hopf"), 0, "scalar")
    direction = Direction.from_dict(doc["direction"])
    entry = translation_entry(direction)
    X = SpectralField.from_dict(doc["X"])
    f = SpectralField.from_dict(doc["f"]) if "f" in doc else None
    yhat = direction.to_float() / np.sqrt(direction.norm_sq())
    return Solution(
        entry, entry.model, X, float(doc["mu"]), doc.get("lambda"), doc["route"], doc["normalize"], doc["N"], f, yhat,
        doc.get("multiplicity"),
    )


def _solution_from_args(args) -> Solution:
    if getattr(args, "solution", None):
        return load_solution(args.solution)
    if not getattr(args, "symmetry", None):
        raise ValueError("give --solution FILE or --symmetry NAME")
    return build_solution(resolve_symmetry(args.symmetry), args.N, args.route, args.normalize)


# ---------------------------------------------------------------------------
# residuals


def _l1(F: SpectralField) -> float:
    return float(np.sum(np.abs(F.coeffs)))


def residual_table(sol: Solution, h: float = 1e-3) -> dict:
    """Residuals of a solution; spectral ones are sup-norm bounds, charted ones sample maxima."""
    if sol.spectral:
        X = sol.X
        yhat = np.asarray(sol.Y, float)
        table = {
            "curl_minus_mu_X": _l1(curl_spec(X) - sol.mu * X),
            "divergence": float(X.divergence_residual()),
            "mean": float(np.max(np.abs(X.mean()))),
            "hermitian": X.hermitian_residual(),
            "bracket_Y_X": _l1(directional_derivative(yhat, X)),
        }
        H = helicity(X)
        expected = X.norm_sq() / sol.mu
        table["helicity_relative_error"] = abs(H - expected) / abs(expected)
        fi = sol.first_integral()
        table["grad_f_minus_Y_cross_X"] = fi.gradient_residual()
        if sol.lam is not None:
            table["quadratic"] = abs(sol.mu**2 - sol.mu * float(sol.entry.kappa) - sol.lam)
        rec = recover_scalar(sol.entry, X, sol.mu)
        table["recovery_reconstruction"] = rec.reconstruction
        table["recovery_eigen"] = rec.eigen
        info = {"helicity": H, "norm_sq": X.norm_sq()}
        return {"residuals": table, "info": info, "threshold": 1e-10}
    cfg = FDConfig(h=h, order=2)
    entry, model = sol.entry, sol.model
    p = sample_points(entry, 5)
    Xv = cc.evaluate(model, sol.X, p)
    fv = cc.evaluate(model, sol.f, p)
    Yv = cc.evaluate(model, sol.Y, p)
    table = {
        "curl_minus_mu_X": float(np.max(np.abs(cc.curl(model, sol.X, p, cfg) - sol.mu * Xv))),
        "laplacian_minus_lambda_f": float(np.max(np.abs(cc.laplacian(model, sol.f, p, cfg) - sol.lam * fv))),
        "divergence": float(np.max(np.abs(cc.div(model, sol.X, p, cfg)))),
        "bracket_Y_X": float(np.max(np.abs(cc.lie_bracket(model, sol.Y, sol.X, p, cfg)))),
        "X_cross_Y_minus_grad_f": float(
            np.max(np.abs(cc.cross(model, p, Xv, Yv) - cc.grad(model, sol.f, p, cfg)))
        ),
        "quadratic": abs(sol.mu**2 - sol.mu * float(entry.kappa) - sol.lam),
    }
    rec = recover_scalar(entry, sol.X, sol.mu, cfg)
    table["recovery_reconstruction"] = rec.reconstruction
    table["recovery_eigen"] = rec.eigen
    return {"residuals": table, "info": {"fd_h": h, "samples": len(p)}, "threshold": 100 * h * h}


# ---------------------------------------------------------------------------
# commands


def _config(args, command, **extra) -> RunConfig:
    return RunConfig(
        command=command,
        symmetry=getattr(args, "symmetry", None) or getattr(args, "solution", None),
        route=getattr(args, "route", None),
        N=getattr(args, "N", None),
        h=getattr(args, "h", 1e-3),
        tol=getattr(args, "tol", 1e-10),
        grid=getattr(args, "grid", None),
        thresholds={k: v for k, v in extra.pop("thresholds", {}).items() if v is not None},
        out_dir=resolve_out_dir(getattr(args, "out", None)),
        seed=getattr(args, "seed", 0),
        extra=extra,
    )


def _stem(args) -> str:
    if getattr(args, "solution", None):
        return Path(args.solution).stem
    return str(args.symmetry).replace(",", "_")


def cmd_catalog(args) -> int:
    if args.action == "list":
        doc = {"schema": CATALOG_SCHEMA, "entries": [{"name": n, "description": catalog_get(n).description} for n in catalog_names()]}
    else:
        if not args.name:
            raise ValueError("catalog show needs an entry name")
        doc = {"schema": CATALOG_SCHEMA, "entry": catalog_get(args.name).to_dict()}
    sys.stdout.write(dumps(doc))
    return EXIT_OK


def cmd_construct(args) -> int:
    entry = resolve_symmetry(args.symmetry)
    sol = build_solution(entry, args.N, args.route, args.normalize)
    cfg = _config(args, "construct", normalize=args.normalize)
    table = residual_table(sol, args.h)
    summary = {"mu": sol.mu, "lambda": sol.lam, "route": sol.route, **table}
    if sol.route == "operator":
        summary["operator_eigenvalue"] = 1.0 / sol.mu
        summary["multiplicity"] = sol.multiplicity
        try:
            scalar = build_solution(entry, args.N, "scalar")
            summary["consistency"] = {
                "mu_scalar": scalar.mu,
                "abs_inverse_operator_eigenvalue": abs(sol.mu),
                "difference": abs(abs(sol.mu) - scalar.mu),
            }
        except HypothesisFailure as exc:
            summary["consistency"] = {"note": f"scalar route unavailable: {exc}"}
    out = Path(cfg.out_dir)
    path = write_json(out / f"solution_{_stem(args)}_{args.route}.json", SOLUTION_SCHEMA, cfg, {**solution_payload(sol), "summary": summary})
    sys.stdout.write(dumps({"solution_file": str(path), "summary": summary}))
    return EXIT_OK


def cmd_verify(args) -> int:
    sol = load_solution(args.solution)
    cfg = _config(args, "verify")
    table = residual_table(sol, args.h)
    limit = args.max_residual if args.max_residual is not None else table["threshold"]
    ok = {k: bool(v < limit) for k, v in table["residuals"].items()}
    payload = {**table, "threshold": limit, "pass": ok, "all_pass": all(ok.values())}
    write_json(Path(cfg.out_dir) / f"verify_{_stem(args)}.json", VERIFY_SCHEMA, cfg, payload)
    width = max(len(k) for k in table["residuals"])
    for k, v in table["residuals"].items():
        sys.stdout.write(f"{k:<{width}}  {v:.3e}  {'ok' if ok[k] else 'FAIL'}\n")
    return EXIT_OK if payload["all_pass"] else EXIT_VERIFY


def _parse_point(text: str) -> np.ndarray:
    vals = [float(x) for x in text.split(",")]
    if len(vals) != 3:
        raise ValueError("points need three comma-separated coordinates")
    return np.array(vals)


def cmd_trace(args) -> int:
    sol = _solution_from_args(args)
    cfg = _config(args, "trace", start=args.start, t_end=args.t_end, arc_length=args.arc_length, max_step=args.max_step)
    fi = sol.first_integral()
    traj = fl.integrate(sol.model, sol.X, _parse_point(args.start), args.t_end, tol=args.tol, max_step=args.max_step, arc_length=args.arc_length)
    fvals = _scalar_along(sol.model, fi.f, traj)
    header = ["t", "arc", "x1", "x2", "x3", "w1", "w2", "w3", "chart", "f"]
    rows = [
        [traj.t[i], traj.arc[i], *traj.points[i], *traj.windings[i], traj.charts[i], fvals[i]] for i in range(len(traj))
    ]
    out = Path(cfg.out_dir)
    write_csv(out / f"trace_{_stem(args)}.csv", TRACE_SCHEMA, cfg, header, rows,
              notes=["columns: t flow parameter, arc arc length, x chart point (wrapped on the torus), w winding counters, f first integral"])
    summary = {
        "n_samples": len(traj),
        "end": traj.end,
        "drift": float(np.max(np.abs(fvals - fvals[0]))),
        "rotation": fl.rotation_number(traj).to_dict(),
    }
    if isinstance(sol.model, RoundSphere3):
        d, t = traj.return_distance()
        summary["return_distance"] = {"distance": d, "t": t}
    write_json(out / f"trace_{_stem(args)}.json", TRACE_SCHEMA, cfg, {"summary": summary})
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def _scalar_along(model, f, traj):
    vals = np.empty(len(traj))
    for chart in dict.fromkeys(traj.charts):
        sel = np.array([c == chart for c in traj.charts])
        m = RoundSphere3(chart) if isinstance(model, RoundSphere3) else model
        vals[sel] = f(traj.unwrapped[sel]) if isinstance(f, SpectralField) else cc.evaluate(m, f, traj.unwrapped[sel])
    return vals


def _poincare_one(job):
    model, X, section, seed, n, f, tol, max_step, t_max = job
    return fl.poincare(model, X, section, [seed], n, f=f, tol=tol, max_step=max_step, t_max=t_max)[0]


def _seeds(model, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, FlatTorus3):
        return rng.random((n, 3))
    pts = rng.normal(size=(n, 3))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True) * rng.random((n, 1)) ** (1 / 3)


def _workers(args) -> int:
    if args.deterministic:
        return 1
    return args.threads or os.cpu_count() or 1


def cmd_poincare(args) -> int:
    sol = _solution_from_args(args)
    cfg = _config(args, "poincare", section=args.section, direction=args.direction, seeds=args.seeds,
                  crossings=args.crossings, t_max=args.t_max, max_step=args.max_step)
    fi = sol.first_integral()
    section = fl.Section.parse(args.section, args.direction)
    seeds = _seeds(sol.model, args.seeds, np.random.default_rng(args.seed))
    jobs = [(sol.model, sol.X, section, s, args.crossings, fi.f, args.tol, args.max_step, args.t_max) for s in seeds]
    workers = _workers(args)
    if workers > 1 and sol.spectral and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            records = list(pool.map(_poincare_one, jobs))
    else:
        records = [_poincare_one(j) for j in jobs]
    header = ["seed", "crossing", "t", "x1", "x2", "x3", "direction", "f"]
    rows = []
    for i, rec in enumerate(records):
        for j in range(len(rec.times)):
            rows.append([i, j, rec.times[j], *rec.points[j], int(rec.directions[j]), rec.f_values[j]])
    out = Path(cfg.out_dir)
    stem = f"poincare_{_stem(args)}"
    write_csv(out / f"{stem}.csv", POINCARE_SCHEMA, cfg, header, rows,
              notes=[f"section {section.label()}, direction {section.direction} (0 = both, tagged per row)"])
    plot_cols = [c for c in range(3) if c != section.axis] if section.axis < 3 else [0, 1]
    write_gnuplot(out / f"{stem}.gp", POINCARE_SCHEMA, cfg, f"{stem}.csv", (4 + plot_cols[0], 4 + plot_cols[1]),
                  f"Poincare section {section.label()}", group_col=1)
    per_seed = [
        {"seed": s.tolist(), "crossings": len(r.times), "f_spread": r.f_spread, "skipped_nontransversal": r.skipped_nontransversal}
        for s, r in zip(seeds, records)
    ]
    summary = {"rows": len(rows), "max_f_spread": max((r.f_spread for r in records), default=0.0), "per_seed": per_seed}
    write_json(out / f"{stem}.json", POINCARE_SCHEMA, cfg, {"summary": summary})
    sys.stdout.write(dumps({k: summary[k] for k in ("rows", "max_f_spread")}))
    return EXIT_OK


def cmd_scan(args) -> int:
    sol = _solution_from_args(args)
    thresholds = {"eps_grad": args.eps_grad, "delta_level": args.delta_level, "delta_cluster": args.delta_cluster}
    cfg = _config(args, "scan", levels=args.levels, chamber=args.chamber, thresholds=thresholds)
    fi = sol.first_integral()
    scan = st.critical_scan(fi.f, args.grid, args.eps_grad, args.delta_level, args.delta_cluster, model=sol.model)
    components, chambers = [], []
    if scan.grid.periodic and not scan.degenerate:
        lo, hi = scan.f_range
        levels = [float(x) for x in args.levels.split(",")] if args.levels else [0.5 * (lo + hi)]
        for c in levels:
            comps = st.level_components(scan, fi.f, sol.X, sol.Y, c, tol=args.tol)
            components.extend(comps)
            if args.chamber:
                tlo, thi = (float(x) for x in args.chamber.split(","))
                for comp in comps:
                    idx = np.linspace(0, len(comp.samples) - 1, min(10, len(comp.samples))).astype(int)
                    chambers.append(st.chamber_fibration(sol.model, fi.f, comp.samples[idx], (tlo, thi), scan.thresholds.eps_grad))
    grad_res = fi.gradient_residual() if sol.spectral else None
    report = st.StructureReport(scan, tuple(components), tuple(chambers), grad_res)
    out = Path(cfg.out_dir)
    stem = f"scan_{_stem(args)}"
    payload = report.to_dict()
    payload.pop("schema")
    payload["report_schema"] = st.SCHEMA
    if not scan.grid.periodic:
        payload["note"] = "level components are flood-filled on the periodic torus grid only"
    write_json(out / f"{stem}.json", SCAN_SCHEMA, cfg, payload)
    header, rows = st.components_csv_rows(components)
    write_csv(out / f"{stem}_components.csv", SCAN_SCHEMA, cfg, header, rows)
    if args.gamma_raw:
        st.write_gamma_mask(scan, out / f"{stem}_gamma.bin", {"run_config": cfg.to_dict()})
    sys.stdout.write(dumps({
        "status": payload["status"],
        "critical_values": payload["critical_values"],
        "components": len(components),
        "levels": sorted({c.level for c in components}),
    }))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p, solution_source=True):
    if solution_source:
        p.add_argument("--solution", help="solution JSON written by 'construct'")
        p.add_argument("--symmetry", help="catalog name or integer direction a,b,c (builds the solution in memory)")
        p.add_argument("--N", type=int, default=4, help="Fourier truncation")
        p.add_argument("--route", choices=("scalar", "operator"), default="scalar")
        p.add_argument("--normalize", choices=("l2", "peak"), default="l2",
                       help="scalar route: ||f||^2 = 2 (l2) or max|f| = 1 (peak)")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance (local error per unit step)")
    p.add_argument("--out", help="output directory (overrides $SYMBELTRAMI_OUT)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--deterministic", action="store_true", help="single worker, for golden reproduction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symbeltrami", description="Symmetric Beltrami fields: construction, verification, dynamics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("catalog", help="list or show catalog entries")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("construct", help="construct a symmetric Beltrami field")
    p.add_argument("--symmetry", required=True)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--route", choices=("scalar", "operator"), default="scalar")
    p.add_argument("--normalize", choices=("l2", "peak"), default="l2")
    _add_common(p, solution_source=False)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="residual table of a solution file")
    p.add_argument("solution")
    p.add_argument("--max-residual", type=float, default=None)
    _add_common(p, solution_source=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trace", help="integrate one field line")
    _add_common(p)
    p.add_argument("--start", default="0.125,0,0")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--arc-length", action="store_true", help="parametrise by arc length")
    p.add_argument("--max-step", type=float, default=fl.DEFAULT_MAX_STEP)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("poincare", help="Poincare section of random seeds")
    _add_common(p)
    p.add_argument("--section", default="z=0")
    p.add_argument("--direction", type=int, choices=(-1, 0, 1), default=0)
    p.add_argument("--seeds", type=int, default=16)
    p.add_argument("--crossings", type=int, default=200)
    p.add_argument("--t-max", type=float, default=1e4)
    p.add_argument("--max-step", type=float, default=fl.DEFAULT_MAX_STEP)
    p.set_defaults(func=cmd_poincare)

    p = sub.add_parser("scan", help="critical set, level components and chambers of the first integral")
    _add_common(p)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--levels", help="comma-separated levels (default: middle of the range of f)")
    p.add_argument("--eps-grad", type=float)
    p.add_argument("--delta-level", type=float)
    p.add_argument("--delta-cluster", type=float)
    p.add_argument("--chamber", help="transport component samples over t_lo,t_hi")
    p.add_argument("--gamma-raw", action="store_true", help="also write the singular-set mask as raw bytes")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HypothesisFailure as exc:
        sys.stderr.write(f"hypothesis failure: {exc}\n{type(exc).explanation}\n")
        return EXIT_HYPOTHESIS
    except StalledAtZero as exc:
        sys.stderr.write(f"integration stalled: {exc} at t = {exc.t}, location {exc.location}\n")
        return EXIT_STALLED
    except (PreconditionError, SeedRejected, DomainError) as exc:
        sys.stderr.write(f"precondition violated: {exc}\n")
        return EXIT_PRECONDITION
    except UnknownEntry as exc:
        sys.stderr.write(f"error: {exc.args[0] if exc.args else exc}\n")
        return EXIT_OPERATIONAL
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
