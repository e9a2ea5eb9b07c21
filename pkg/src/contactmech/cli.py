"""Command line: ``contactmech {derive,simulate,check,catalog}``.

Exit codes: 0 success, 1 a check failed, 2 usage or config error,
3 numeric failure (singular Lagrangian, blow-up, domain error).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .checks import SUITES, CheckOptions, run_suites
from .config import ConfigError, SystemConfig, catalog_names, load_config, resolve_config_path
from .exterior import FormExpr, VectorField
from .expr import ExprError, parse
from .integrate import IntegrationError, integrate, observe
from .lagrangian import SingularLagrangianError, hessian
from .report import point_dict
from .sampling import sample_box

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _box(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("need lo < hi")
    return lo, hi


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="contactmech", description="Contact Hamiltonian and Lagrangian mechanics toolkit.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False, formatter_class=fmt)
    common.add_argument("config", help="path to a JSON system config, or a catalog name")
    common.add_argument("--seed", type=int, default=0, help="seed of the sample box")
    common.add_argument("--box", type=_box, default=(-2.0, 2.0), help="sample box lo,hi for every coordinate")
    common.add_argument("--tol", type=_positive, default=1e-10, help="residual tolerance for pointwise checks")
    common.add_argument("--points", type=int, default=100, help="number of sample points")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("derive", parents=[common], formatter_class=fmt,
                   help="print the derived dynamics and write derived.json")
    sim = sub.add_parser("simulate", parents=[common], formatter_class=fmt, help="integrate and write a CSV")
    sim.add_argument("--t-max", type=float, default=None, help="override the config's t_max")
    sim.add_argument("--dt", type=_positive, default=None, help="override the config's dt")
    sim.add_argument("--method", choices=("rk4-fixed", "rk45-adaptive"), default=None,
                     help="override the config's integrator")
    sim.add_argument("--every", type=int, default=1, help="write every k-th step (the last step is always written)")
    sim.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script for the CSV")
    chk = sub.add_parser("check", parents=[common], formatter_class=fmt, help="run residual suites")
    chk.add_argument("--suite", choices=SUITES + ("all",), default="all", help="which suite to run")
    chk.add_argument("--t-max", type=float, default=5.0, help="length of the trajectory used by orbit checks")
    chk.add_argument("--json", action="store_true", help="also write report.json to --out")
    sub.add_parser("catalog", formatter_class=fmt, help="list the shipped example systems")
    return parser


# ---------------------------------------------------------------------------
# derive


def derived_document(cfg: SystemConfig) -> dict:
    sys_ = cfg.system
    X = sys_.dynamics
    doc = {
        "name": cfg.name,
        "formalism": cfg.formalism,
        "coords": list(sys_.coords),
        "params": dict(sys_.params),
        "energy": str(sys_.energy),
        "reeb_rate": str(sys_.reeb_rate),
        "eta": {c: str(sys_.eta[(i,)]) for i, c in enumerate(sys_.coords)},
        "reeb": [str(c) for c in sys_.reeb] if getattr(sys_.reeb, "symbolic", False) else None,
        "dynamics": [str(c) for c in X] if getattr(X, "symbolic", False) else None,
    }
    if cfg.formalism == "lagrangian":
        doc["lagrangian"] = str(sys_.L)
    else:
        doc["hamiltonian"] = str(sys_.H)
    return doc


def load_derived(path: str | Path) -> dict:
    """Re-parse a ``derived.json`` into expressions and vector fields."""
    doc = json.loads(Path(path).read_text())
    coords, params = tuple(doc["coords"]), doc["params"]
    out = {
        "coords": coords, "params": params,
        "energy": parse(doc["energy"]), "reeb_rate": parse(doc["reeb_rate"]),
        "eta": FormExpr.one_form([parse(doc["eta"][c]) for c in coords], coords),
    }
    for key in ("dynamics", "reeb"):
        out[key] = None if doc[key] is None else VectorField(tuple(parse(c) for c in doc[key]), coords, params)
    return out


def regularity_scan(cfg: SystemConfig, box, seed: int, points: int) -> list[dict]:
    """Sample points (box center first) where the velocity Hessian is singular."""
    if cfg.formalism != "lagrangian":
        return []
    sys_ = cfg.system
    bad = []
    for x in sample_box(len(sys_.coords), points, box, seed, include_center=True):
        b = sys_.bind(x)
        try:
            h = hessian(sys_, b)
        except ExprError:
            continue
        if not h.regular:
            bad.append({**point_dict(sys_.coords, x), "det_W": h.detW})
    return bad


def cmd_derive(cfg: SystemConfig, args) -> int:
    sys_ = cfg.system
    bad = regularity_scan(cfg, args.box, args.seed, args.points)
    if bad:
        print(f"warning: velocity Hessian singular at {len(bad)} of {args.points} sample point(s):", file=sys.stderr)
        for pt in bad[:10]:
            print("  " + ", ".join(f"{k}={v:.6g}" for k, v in pt.items()), file=sys.stderr)
    try:
        doc = derived_document(cfg)
    except SingularLagrangianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    doc["regularity_warnings"] = bad
    print(f"system: {cfg.name} ({cfg.formalism}, n = {cfg.n})")
    label = "L" if cfg.formalism == "lagrangian" else "H"
    print(f"{label} = {doc.get('lagrangian') or doc.get('hamiltonian')}")
    print(f"energy = {doc['energy']}")
    print(f"R(energy) = {doc['reeb_rate']}")
    print("eta = " + " + ".join(f"({e}) d{c}" for c, e in doc["eta"].items() if e != "0"))
    if doc["reeb"] is not None:
        print("Reeb field:")
        for c, e in zip(sys_.coords, doc["reeb"]):
            print(f"  R^{c} = {e}")
    print("dynamics:")
    if doc["dynamics"] is None:
        print("  (evaluated pointwise; no closed form for n > 3)")
    else:
        for c, e in zip(sys_.coords, doc["dynamics"]):
            print(f"  d{c}/dt = {e}")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "derived.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def write_csv(path: Path, header: Sequence[str], rows: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])


def cmd_simulate(cfg: SystemConfig, args) -> int:
    if cfg.initial_state is None:
        print("error: config has no initial_state", file=sys.stderr)
        return EXIT_USAGE
    overrides = {k: v for k, v in (("t_max", args.t_max), ("dt", args.dt), ("method", args.method)) if v is not None}
    icfg = cfg.integrator(**overrides)
    quantities = cfg.quantity_objects()
    sys_ = cfg.system
    if "energy" not in quantities and all(q.F != sys_.energy for q in quantities.values()):
        quantities["energy"] = None
    traj = integrate(sys_.dynamics, cfg.initial_state, icfg, cfg.name)
    cols = [traj.times[:, None], traj.states]
    header = ["t", *traj.coords]
    for name, q in quantities.items():
        F = sys_.energy if q is None else q.F
        cols.append(observe(traj, F)[:, None])
        header.append(name)
    data = np.hstack(cols)
    every = max(1, args.every)
    idx = list(range(0, len(data), every))
    if idx[-1] != len(data) - 1:
        idx.append(len(data) - 1)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{cfg.name}.csv"
    write_csv(path, header, data[idx])
    print(f"{cfg.name}: {len(traj) - 1} step(s) of {icfg.method} to t = {traj.times[-1]:.6g}")
    print("final state: " + ", ".join(f"{c}={v:.10g}" for c, v in zip(traj.coords, traj.states[-1])))
    print(f"wrote {path}")
    if args.gnuplot:
        gp = args.out / f"{cfg.name}.gp"
        plots = ", ".join(f"'{path.name}' using 1:{i + 2} with lines title '{h}'" for i, h in enumerate(header[1:]))
        gp.write_text(f"set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nplot {plots}\n")
        print(f"wrote {gp}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def cmd_check(cfg: SystemConfig, args) -> int:
    opts = CheckOptions(box=args.box, points=args.points, tol=args.tol, seed=args.seed, t_max=args.t_max)
    reports = run_suites(cfg, args.suite, opts)
    print(f"system: {cfg.name}  suite: {args.suite}  points: {args.points}  seed: {args.seed}  box: {args.box}")
    for r in reports:
        print(r.line())
    failed = [r for r in reports if not r.passed and not r.skipped]
    print(f"{len(reports) - len(failed)}/{len(reports)} passed")
    if args.json:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "report.json"
        path.write_text(json.dumps({"system": cfg.name, "suite": args.suite, "seed": args.seed,
                                    "reports": [r.to_dict() for r in reports]}, indent=2) + "\n")
        print(f"wrote {path}")
    return EXIT_FAIL if failed else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "catalog":
        for name in catalog_names():
            print(f"{name}\t{resolve_config_path(name)}")
        return EXIT_OK
    if args.points < 1:
        print("error: --points must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cmd = {"derive": cmd_derive, "simulate": cmd_simulate, "check": cmd_check}[args.command]
    try:
        return cmd(cfg, args)
    except (SingularLagrangianError, IntegrationError, ExprError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
