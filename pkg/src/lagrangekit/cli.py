"""Command-line front end.

Exit codes: 0 pass, 1 identity or witness failure, 2 input error,
3 degenerate geometry.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lagrangekit import _backend, geometry as geo
from lagrangekit.corpus import ALIASES, CORPUS, lookup
from lagrangekit.counterexample import (
    FAMILY_NAMES,
    compare_structures,
    dhl_closed_form,
    equivalence_probe,
    make_family,
    obstruction_tensor,
)
from lagrangekit.errors import DegenerateLagrangian, DomainError, ParseError
from lagrangekit.flows import IntegratorConfig, drift_report, integrate_horizontal, integrate_semispray, max_gap
from lagrangekit.jets import LagrangianField, TangentPoint, validate_jets
from lagrangekit.report import IdentityReport
from lagrangekit.sampling import Box, sample_points

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    dim: int
    lagrangian: str | None
    family: str | None
    metric: str | None
    phi: str | None
    point: list | None
    box: Box
    samples: int
    seed: int
    tol: float
    step: float
    t_end: float
    json_path: str | None
    csv_path: str | None
    timestamp: bool

    def echo(self) -> dict:
        return {
            "command": self.command, "dim": self.dim, "lagrangian": self.lagrangian,
            "family": self.family, "metric": self.metric, "phi": self.phi,
            "point": self.point, "box": self.box.to_dict(), "samples": self.samples,
            "seed": self.seed, "tol": self.tol, "step": self.step, "t_end": self.t_end,
        }


@dataclass
class Report:
    config: RunConfig
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, check):
        if isinstance(check, IdentityReport):
            check = check.to_dict()
        self.checks.append(check)
        return check

    @property
    def overall(self) -> bool:
        return all(c["passed"] for c in self.checks if not c.get("skipped"))

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.echo(),
            "backend": _backend.NAME,
            "checks": self.checks,
            "results": self.results,
            "overall": self.overall,
        }
        if self.config.timestamp:
            out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        return out

    def write(self):
        if self.config.json_path:
            text = json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)
            Path(self.config.json_path).write_text(text + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _check(name, value, tol, passed=None, **extra):
    value = float(value)
    return {"name": name, "residual": value, "tolerance": tol,
            "passed": bool(value <= tol) if passed is None else bool(passed),
            "skipped": False, **extra}


# ---------------------------------------------------------------- parsing

def _floats(text, what):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise InputError(f"could not parse {what}: {text!r}") from None


def _parse_box(text, n):
    parts = text.split(",")
    if len(parts) != n:
        raise InputError(f"--box needs {n} comma-separated lo:hi ranges")
    lo, hi = [], []
    for p in parts:
        a, _, b = p.partition(":")
        lo.append(float(a))
        hi.append(float(b))
    return Box(tuple(lo), tuple(hi))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("Lagrangian")
    src.add_argument("--dim", type=int, default=2, help="manifold dimension n (default 2)")
    src.add_argument("--lagrangian", help='expression, e.g. "y1^2 + x1^2*y2^2"')
    src.add_argument("--family", help="named Lagrangian or family: "
                     + ", ".join(list(CORPUS) + [a for a in ALIASES if a not in CORPUS] + ["custom"]))
    src.add_argument("--metric", help='custom family metric rows, e.g. "1,0;0,x1^2"')
    src.add_argument("--phi", help="custom family potential, e.g. x2")
    run = common.add_argument_group("run")
    run.add_argument("--point", help="x1,..,xn,y1,..,yn")
    run.add_argument("--box", help="sampling box for x, e.g. 0.5:2,-2:2")
    run.add_argument("--samples", type=int, default=50)
    run.add_argument("--seed", type=int, default=7)
    run.add_argument("--tol", type=float, default=geo.IDENTITY_TOL)
    run.add_argument("--step", type=float, default=1e-3)
    run.add_argument("--t-end", type=float, default=1.0)
    run.add_argument("--json", dest="json_path", help="write the JSON report here")
    run.add_argument("--csv", dest="csv_path", help="trajectory CSV prefix (flow)")
    run.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                     help="omit the timestamp field from the JSON report")

    parser = argparse.ArgumentParser(prog="lagrangekit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("inspect", parents=[common], help="print every geometric object at one point")
    sub.add_parser("verify", parents=[common], help="run the identity suite on sampled points")
    sub.add_parser("flow", parents=[common], help="integrate semispray and horizontal flows")
    sub.add_parser("counterexample", parents=[common], help="Riemannian + complete-lift family demo")
    return parser


def config_from_args(args) -> RunConfig:
    n = args.dim
    if n < 1:
        raise InputError("--dim must be >= 1")
    if args.lagrangian and args.family:
        raise InputError("give either --lagrangian or --family, not both")
    if not args.lagrangian and not args.family:
        raise InputError("one of --lagrangian or --family is required")
    box = None
    if args.family and args.family != "custom":
        try:
            entry = lookup(args.family)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
        n = 2
        box = entry.box
    point = None
    if args.point:
        point = _floats(args.point, "--point")
        if len(point) != 2 * n:
            raise InputError(f"--point needs {2 * n} numbers (x then y)")
    if args.box:
        box = _parse_box(args.box, n)
    if args.samples < 1 or args.tol <= 0 or args.step <= 0 or args.t_end <= 0:
        raise InputError("--samples, --tol, --step and --t-end must be positive")
    return RunConfig(
        command=args.command, dim=n, lagrangian=args.lagrangian, family=args.family,
        metric=args.metric, phi=args.phi, point=point, box=box or Box.default(n),
        samples=args.samples, seed=args.seed, tol=args.tol, step=args.step, t_end=args.t_end,
        json_path=args.json_path, csv_path=args.csv_path, timestamp=args.timestamp,
    )


def resolve_lagrangian(cfg: RunConfig) -> LagrangianField:
    if cfg.lagrangian:
        return LagrangianField.parse(cfg.lagrangian, cfg.dim)
    if cfg.family == "custom":
        return make_family("custom", cfg.metric, cfg.phi, cfg.dim, cfg.box).lagrangian
    return lookup(cfg.family).field()


def _default_point(cfg: RunConfig) -> TangentPoint:
    if cfg.point is not None:
        return TangentPoint.from_z(cfg.point)
    if cfg.family and cfg.family != "custom":
        return lookup(cfg.family).u0
    raise InputError("--point is required")


# ---------------------------------------------------------------- commands

def _fmt(a):
    return np.array2string(np.asarray(a), precision=10, suppress_small=True)


def cmd_inspect(cfg: RunConfig, out=None) -> Report:
    out = out or sys.stdout
    L = resolve_lagrangian(cfg)
    u = _default_point(cfg)
    b = geo.geometry_at(L, u)
    report = Report(cfg)
    report.add(_check("g_times_g_inv", np.max(np.abs(b.metric.g @ b.metric.g_inv - np.eye(L.n))), 1e-10))
    report.add(_check("projector_idempotent", np.max(np.abs(b.h @ b.h - b.h)), 1e-10))
    report.results = {
        "L": b.jet.value, "g": b.metric.g, "g_inv": b.metric.g_inv, "det_g": b.metric.det,
        "G": b.G, "N": b.N, "theta": b.theta.components, "Omega": b.Omega,
        "E": b.energy, "SL": b.SL, "dhL": b.dhL, "h": b.h,
    }
    print(f"L = {L}   at x = {u.x}, y = {u.y}", file=out)
    for key in ("L", "g", "g_inv", "det_g", "G", "N", "theta", "Omega", "E", "SL", "dhL", "h"):
        label = {"theta": "theta_L", "E": "E_L", "SL": "S(L)", "dhL": "d_hL"}.get(key, key)
        print(f"{label} =\n{_fmt(report.results[key])}" if np.ndim(report.results[key]) == 2
              else f"{label} = {_fmt(report.results[key])}", file=out)
    return report


def run_identity_suite(L: LagrangianField, points, tol: float, seed: int) -> list[IdentityReport]:
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    return [
        validate_jets(L, points, tol=1e-5),
        geo.check_connection_fd(L, points),
        geo.grifone_projector_check(L, points, tol=1e-9),
        geo.check_projector_laws(L, points, tol=1e-10),
        geo.check_cartan_one_form(L, points, rng=rng, tol=tol),
        geo.check_isomega(L, points, rng=rng, tol=tol),
        geo.check_horizontal_differential(L, points, tol=tol),
        geo.check_lagrangian_subbundle(L, points, rng=rng, tol=1e-9),
        geo.check_homogeneous(L, points, tol=tol),
    ]


def cmd_verify(cfg: RunConfig, out=None) -> Report:
    out = out or sys.stdout
    L = resolve_lagrangian(cfg)
    points = sample_points(cfg.box, cfg.samples, cfg.seed)
    # surface degenerate geometry before running the suite
    geo.metric_tensor(L, points[0])
    report = Report(cfg)
    print(f"verify L = {L} on {len(points)} points (seed {cfg.seed})", file=out)
    for r in run_identity_suite(L, points, cfg.tol, cfg.seed):
        report.add(r)
        print(f"  {r}", file=out)
    k = geo.homogeneity_degree(L, points)
    report.results = {"homogeneity_degree": k}
    print("overall: " + ("PASS" if report.overall else "FAIL"), file=out)
    return report


def _csv_paths(prefix):
    p = Path(prefix)
    stem = p.with_suffix("") if p.suffix == ".csv" else p
    return Path(f"{stem}_semispray.csv"), Path(f"{stem}_horizontal.csv")


def cmd_flow(cfg: RunConfig, out=None) -> Report:
    out = out or sys.stdout
    L = resolve_lagrangian(cfg)
    u0 = _default_point(cfg)
    icfg = IntegratorConfig(step=cfg.step, t_end=cfg.t_end)
    semi = integrate_semispray(L, u0, icfg)
    horiz = integrate_horizontal(L, u0, icfg)
    report = Report(cfg)
    ds = drift_report(semi) if len(semi) >= 2 else None
    dh = drift_report(horiz) if len(horiz) >= 2 else None
    gap = max_gap(semi, horiz)
    coincide = bool(gap <= 1e-8)
    if ds is not None:
        report.add(_check("semispray_energy_drift_rel", ds.E_max_rel, cfg.tol))
    report.results = {
        "semispray": {"samples": len(semi), "truncated": semi.truncated, "reason": semi.reason,
                      "drift": ds.to_dict() if ds else None},
        "horizontal": {"samples": len(horiz), "truncated": horiz.truncated, "reason": horiz.reason,
                       "drift": dh.to_dict() if dh else None},
        "max_gap": gap,
        "coincide": coincide,
    }
    if cfg.csv_path:
        ps, ph = _csv_paths(cfg.csv_path)
        ps.parent.mkdir(parents=True, exist_ok=True)
        semi.to_csv(ps)
        horiz.to_csv(ph)
        report.results["csv"] = [str(ps), str(ph)]
    print(f"flow L = {L} from x = {u0.x}, y = {u0.y}, step {cfg.step}, t_end {cfg.t_end}", file=out)
    for name, traj, d in (("semispray", semi, ds), ("horizontal", horiz, dh)):
        flag = f" TRUNCATED ({traj.reason})" if traj.truncated else ""
        if d is not None:
            print(f"  {name}: {len(traj)} samples, L drift final {d.L_final:.6e}, "
                  f"E drift rel max {d.E_max_rel:.3e}, dL/dt residual {d.rate_residual:.3e}{flag}", file=out)
        else:
            print(f"  {name}: {len(traj)} samples{flag}", file=out)
    print(f"  max gap between curves {gap:.3e}; coincide = {coincide}", file=out)
    return report


def cmd_counterexample(cfg: RunConfig, out=None) -> Report:
    out = out or sys.stdout
    name = cfg.family
    if name not in FAMILY_NAMES and name != "custom":
        raise InputError(f"counterexample needs --family in {', '.join(FAMILY_NAMES)} or custom")
    fam = make_family(name, cfg.metric, cfg.phi, cfg.dim, cfg.box if name == "custom" else None)
    points = sample_points(fam.box, min(cfg.samples, 20), cfg.seed)
    L, Lp = fam.lagrangian, fam.base_lagrangian
    report = Report(cfg)

    structure = compare_structures(Lp, L, points, tol=1e-9)
    report.add(structure)

    eq17 = IdentityReport("closed_form_dhL_vs_general", cfg.tol)
    dh_max = 0.0
    obstructions = []
    for u in points:
        general = geo.geometry_at(L, u).dhL
        closed = dhl_closed_form(fam.metric, fam.potential, u).components
        eq17.add_pair(closed, general)
        dh_max = max(dh_max, float(np.max(np.abs(general))))
        obstructions.append(obstruction_tensor(fam.metric, fam.potential, u.x).max_abs)
    report.add(eq17)

    w = fam.witness_point
    witness = geo.geometry_at(L, w).dhL
    if fam.expects_witness:
        report.add(_check("witness_nonzero", dh_max, 0.1, passed=dh_max > 0.1,
                          note="passes when max|d_hL| > 0.1"))
    else:
        report.add(_check("control_dhL_zero", dh_max, 1e-10))
    probe = equivalence_probe(fam.metric, fam.potential, points, tol=cfg.tol)
    report.results = {
        "family": fam.name, "description": fam.description,
        "L": str(L), "L_base": str(Lp),
        "witness_point": {"x": list(w.x), "y": list(w.y)}, "witness_dhL": witness,
        "obstruction_max_per_point": obstructions,
        "obstruction_at_witness": obstruction_tensor(fam.metric, fam.potential, w.x).T,
        "max_dhL": dh_max, "probe": probe.to_dict(),
    }
    print(f"family {fam.name}: L = {L}  (base {Lp})", file=out)
    print(f"  obstruction tensor at x = {w.x}:\n{_fmt(report.results['obstruction_at_witness'])}", file=out)
    print(f"  d_hL at witness x = {w.x}, y = {w.y}: {_fmt(witness)}", file=out)
    print(f"  max |d_hL| over {len(points)} points: {dh_max:.6g}", file=out)
    print(f"  {structure}", file=out)
    print(f"  {eq17}", file=out)
    t = probe.table
    print("  probe (S(L)=0, d_hL=0) counts: "
          + ", ".join(f"{k}: {v}" for k, v in t.items()), file=out)
    print("overall: " + ("PASS" if report.overall else "FAIL"), file=out)
    return report


COMMANDS = {"inspect": cmd_inspect, "verify": cmd_verify, "flow": cmd_flow,
            "counterexample": cmd_counterexample}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = COMMANDS[cfg.command](cfg)
    except (InputError, ParseError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateLagrangian as exc:
        print(f"DegenerateLagrangian: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DomainError as exc:
        print(f"DomainError: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report.write()
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if report.overall else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
