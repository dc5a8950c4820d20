"""Command-line front end: ``symglm list | verify | order | run | convergence | stability``.

Exit codes: 0 success, 1 numeric failure, 2 usage error.  Relative output
paths are placed under ``$SYMGLM_OUT_DIR`` when that variable is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, bseries, integrator
from .problems import PROBLEMS, get_problem
from .tableau import lookup, registry

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
OUT_DIR_ENV = "SYMGLM_OUT_DIR"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# experiment manifests
# --------------------------------------------------------------------------

@dataclass
class ExperimentManifest:
    method: str
    problem: str
    h: float
    T: float
    stride: int = 1
    out: str = "run.csv"
    seed: int = 42
    compensated: bool = True
    newton_tol: float = 1e-13

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentManifest":
        return cls(**_coerce(parse_config(text)))

    def run_config(self) -> integrator.RunConfig:
        return integrator.RunConfig(self.method, self.h, self.T, self.stride,
                                    newton_tol=self.newton_tol, compensated=self.compensated)


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected 'key = value'")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


_TYPES = {f.name: f.type for f in fields(ExperimentManifest)}


def _coerce(raw: dict) -> dict:
    out = {}
    for k, v in raw.items():
        if k not in _TYPES:
            raise UsageError(f"unknown config key {k!r}")
        kind = _TYPES[k]
        if not isinstance(v, str):
            out[k] = v
        elif kind == "bool":
            if v.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{k}: expected a boolean, got {v!r}")
            out[k] = v.lower() in ("true", "1", "yes")
        elif kind == "int":
            out[k] = int(v)
        elif kind == "float":
            out[k] = float(v)
        else:
            out[k] = v
    return out


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _entry(name: str):
    try:
        return lookup(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (int, np.integer)):
        return str(x)
    return f"{float(x):.3e}"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _diag_str(M) -> str:
    M = np.asarray(M)
    if np.count_nonzero(M - np.diag(np.diag(M))) == 0:
        return "diag(" + ",".join(str(x) for x in np.diag(M)) + ")"
    return str(M.tolist())


def cmd_list(args) -> int:
    header = ("name", "p", "q", "r", "s", "L", "parasitism", "gsymplectic", "kind")
    rows = []
    for e in registry():
        m = e.tableau
        L = _diag_str(m.L if m.is_exact else np.round(m.numeric.L, 12))
        para = ",".join(str(x) for x in analysis.parasitism_factors(m)) or "-"
        rows.append((e.name, str(m.declared_order), str(m.declared_stage_order), str(m.r),
                     str(m.s), L, para, "yes" if e.gsymplectic else "no", e.kind))
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


def cmd_verify(args) -> int:
    e = _entry(args.method)
    reports = analysis.run_checks(e)
    ok = all(r.passed for r in reports if r.applicable)
    if args.json:
        for r in reports:
            print(json.dumps(r.as_json()))
    else:
        print(f"{'check':<22}{'residual':>12}  result")
        for r in reports:
            status = "pass" if r.passed else "FAIL"
            if not r.applicable:
                status += " (n/a)"
            print(f"{r.check:<22}{r.residual:>12.3e}  {status}")
        print(f"{e.name}: {'all applicable checks pass' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_order(args) -> int:
    e = _entry(args.method)
    if not e.tableau.is_exact or e.start_xi is None:
        print(f"{e.name}: no exact starting series registered; order check needs rationals")
        return EXIT_NUMERIC
    start = (bseries.start_series_from_triple(e.starting) if args.from_triple
             else bseries.registered_start(e))
    rep = bseries.verify_order(e, start, args.p, complete=True)
    print(f"{e.name}: verified order {rep.order} (declared {e.tableau.declared_order})")
    if rep.offending is not None:
        print(f"first mismatch at tree {rep.offending.label}")
    print(f"order-{rep.order + 1} defects (one entry per value):")
    for t, v in rep.defects.items():
        print(f"  {t.label:<10} " + "  ".join(str(x) for x in v))
    if args.table:
        rows = bseries.order_table(e, start)
        labels = [t.label for t in bseries.trees_with_empty(4)]
        print("\n" + "row".ljust(8) + "".join(lbl.rjust(10) for lbl in labels))
        for name, row in rows.items():
            print(name.ljust(8) + "".join(str(row.get(lbl, "")).rjust(10) for lbl in labels))
    return EXIT_OK if rep.order >= e.tableau.declared_order else EXIT_NUMERIC


def _manifest_from_args(args) -> ExperimentManifest:
    raw = {}
    if args.config:
        try:
            raw.update(parse_config(Path(args.config).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key in ("method", "problem", "h", "T", "stride", "out", "seed", "newton_tol"):
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    if args.no_compensation:
        raw["compensated"] = False
    if args.paper_scale:
        if "problem" not in raw:
            raise UsageError("--paper-scale needs a problem")
        spec = get_problem(raw["problem"])
        raw["h"], raw["T"] = spec.h_original, spec.T_original
    missing = [k for k in ("method", "problem", "h", "T") if k not in raw]
    if missing:
        raise UsageError(f"missing required settings: {', '.join(missing)}")
    try:
        man = ExperimentManifest(**_coerce(raw))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if man.problem.lower() not in PROBLEMS:
        raise UsageError(f"unknown problem {man.problem!r}; known: {', '.join(PROBLEMS)}")
    return man


def cmd_run(args) -> int:
    man = _manifest_from_args(args)
    e = _entry(man.method)
    prob = get_problem(man.problem).ode()
    try:
        cfg = man.run_config()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    path = _out_path(man.out)
    status = EXIT_OK
    try:
        traj = integrator.run(e, prob, cfg)
    except integrator.IntegrationError as exc:
        traj = exc.trajectory
        print(f"integration aborted: {exc}", file=sys.stderr)
        status = EXIT_NUMERIC
    integrator.write_csv(traj, path)
    if args.manifest_out:
        _out_path(args.manifest_out).write_text(man.to_text())
    total, worst = traj.newton_stats
    print(f"wrote {len(traj.t)} rows to {path}")
    print(f"wall time {traj.wall_time:.3f} s; Newton iterations {total} total, {worst} max per solve")
    if traj.t:
        errs = np.abs(traj.errors()).max(axis=0)
        print("max |error|: " + ", ".join(f"{n}={v:.3e}" for n, v in zip(traj.invariant_names, errs)))
    return status


def cmd_convergence(args) -> int:
    e = _entry(args.method)
    if args.problem.lower() not in PROBLEMS:
        raise UsageError(f"unknown problem {args.problem!r}")
    prob = get_problem(args.problem).ode()
    T = 2 * math.pi if args.T is None else args.T
    hs = sorted(args.h, reverse=True)
    n_max = max(integrator.commensurate_step(h, T)[1] for h in hs)
    ref = integrator.reference_solution(prob, T / (n_max * 20), T)
    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as pool:
            parts = list(pool.map(lambda h: integrator.convergence_study(e, prob, [h], T, ref)[0], hs))
        rows = []
        for r in parts:
            order = None
            if rows:
                order = math.log(rows[-1].error / r.error) / math.log(rows[-1].h / r.h)
            rows.append(integrator.ConvergenceRow(r.h, r.error, order))
    else:
        rows = integrator.convergence_study(e, prob, hs, T, ref)
    print(f"{'h':>14}{'error':>14}{'order':>8}")
    for r in rows:
        order = "-" if r.observed_order is None else f"{r.observed_order:.3f}"
        print(f"{r.h:>14.6e}{r.error:>14.6e}{order:>8}")
    return EXIT_OK


def cmd_stability(args) -> int:
    e = _entry(args.method)
    m = e.tableau
    scan = analysis.imaginary_axis_scan(m, args.x_max, args.n)
    rows = [(0.0, np.abs(analysis.small_eigenvalues(m.numeric.V.astype(complex))), 0.0)]
    rows += [(x, np.abs(eig), dev) for x, eig, dev in scan.samples]
    r = m.r
    header = ["x"] + [f"abs_lambda{i + 1}" for i in range(r)] + ["deviation"]
    path = _out_path(args.out) if args.out else None
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, mods, dev in rows:
            w.writerow([integrator.format_float(x)] + [integrator.format_float(v) for v in mods]
                       + [integrator.format_float(dev)])
    finally:
        if path:
            fh.close()
    print(f"k0_estimate = {scan.k0_estimate:.6g} (stop: {scan.stop_reason})",
          file=sys.stderr if path is None else sys.stdout)
    return EXIT_OK if scan.k0_estimate > 0 else EXIT_NUMERIC


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symglm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the method catalogue").set_defaults(func=cmd_list)

    v = sub.add_parser("verify", help="run the algebraic and spectral checks")
    v.add_argument("method")
    v.add_argument("--json", action="store_true", help="one JSON object per check")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("order", help="B-series order verification")
    o.add_argument("method")
    o.add_argument("--p", type=int, default=4)
    o.add_argument("--table", action="store_true", help="print the full tree grid")
    o.add_argument("--from-triple", action="store_true",
                   help="use the series generated by the starting triple")
    o.set_defaults(func=cmd_order)

    r = sub.add_parser("run", help="integrate a problem and write invariant errors as CSV")
    r.add_argument("--config", help="key = value manifest; flags override it")
    r.add_argument("--method")
    r.add_argument("--problem")
    r.add_argument("--h", type=float)
    r.add_argument("--T", type=float)
    r.add_argument("--stride", type=int)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--newton-tol", dest="newton_tol", type=float)
    r.add_argument("--no-compensation", action="store_true")
    r.add_argument("--paper-scale", action="store_true",
                   help="use the problem's original step size and horizon")
    r.add_argument("--manifest-out", help="write the resolved manifest here")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("convergence", help="global error against a fine reference")
    c.add_argument("--method", required=True)
    c.add_argument("--problem", default="kepler")
    c.add_argument("--h", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    c.add_argument("--T", type=float, default=None, help="horizon (default 2 pi)")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_convergence)

    s = sub.add_parser("stability", help="imaginary-axis eigenvalue scan")
    s.add_argument("method")
    s.add_argument("--x-max", dest="x_max", type=float, default=4.0)
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stability)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
