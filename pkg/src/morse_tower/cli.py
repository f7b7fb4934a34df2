"""Command line runner: one scenario file drives every subcommand.

Every command produces a JSON document (sorted keys, tolerances echoed, no
timings or absolute paths) and a plain-text summary table. Exit status is 0
when every verification passes, 1 when a check fails (the first failing
check is named on stderr) and 2 for usage or scenario errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import category, moduli, msw, scenario
from .flow import BACKWARD, FORWARD, FlowError, FlowSpec, integrate
from .z2algebra import check_boundary_square, homology_ranks, induced_homology_map, verify_chain_map, verify_homotopy

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

# singular homology over GF(2) of the closed stock surfaces
SURFACE_HOMOLOGY = {"sphere": [1, 0, 1], "torus": [1, 2, 1]}

# geometric failures that count as a failed check rather than a crash
NUMERIC_ERRORS = (msw.MSWError, FlowError, ValueError)


class UsageError(Exception):
    """Bad flags or arguments that argparse cannot catch on its own."""


@dataclass
class Outcome:
    """JSON payload plus the named checks of one command."""

    command: str
    payload: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append({"check": name, "ok": bool(ok), "detail": detail})
        return bool(ok)

    def guarded(self, name: str, fn: Callable[[], tuple]):
        """Run ``fn`` returning (ok, detail, value); a numeric error is a failed check."""
        try:
            ok, detail, value = fn()
        except NUMERIC_ERRORS as exc:
            self.check(name, False, f"{type(exc).__name__}: {exc}")
            return None
        self.check(name, ok, detail)
        return value

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    @property
    def first_failure(self) -> Optional[dict]:
        return next((c for c in self.checks if not c["ok"]), None)


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def summary_table(outcome: Outcome) -> str:
    rows = [(c["check"], "pass" if c["ok"] else "FAIL", c["detail"]) for c in outcome.checks]
    width = max([len("check")] + [len(r[0]) for r in rows])
    lines = [f"{outcome.command}", f"{'check'.ljust(width)}  status  detail", f"{'-' * width}  ------  ------"]
    lines += [f"{name.ljust(width)}  {status.ljust(6)}  {detail}" for name, status, detail in rows]
    lines.append(f"overall: {'pass' if outcome.ok else 'FAIL'} ({sum(c['ok'] for c in outcome.checks)}"
                 f"/{len(outcome.checks)} checks)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# artifacts


class Artifacts:
    """Where trajectory and locus files go; names recorded relative to it."""

    def __init__(self, dump_dir: Optional[str]):
        self.dump_dir = dump_dir

    @property
    def enabled(self) -> bool:
        return self.dump_dir is not None

    def trajectory(self, traj, surface, name: str) -> Optional[str]:
        if not self.enabled:
            return None
        os.makedirs(self.dump_dir, exist_ok=True)
        traj.to_csv(os.path.join(self.dump_dir, name), surface)
        return name


def _scenario_echo(sc: scenario.Scenario, tol_scale: float) -> dict:
    return {"name": sc.name, "surface": sc.raw["surface"], "tol_scale": tol_scale, "tolerances": sc.tol.as_dict()}


def _pairs(sc, which: str):
    return [("alpha", sc.alpha), ("beta", sc.beta)] if which == "both" else [(which, sc.pair(which))]


def _family(sc, name, level, command):
    h = sc.family(name, level if name is None else None)
    if h.level != level:
        raise scenario.ScenarioError(f"{command} needs a level-{level} family, {name!r} has level {h.level}")
    return h


def _label_pair(text: str):
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise UsageError(f"--pair takes two comma-separated critical point labels, got {text!r}")
    return parts


# ---------------------------------------------------------------------------
# pipeline steps shared by single commands and `verify all`


def step_complex(out: Outcome, sc, end: str, pair, art: Artifacts) -> Optional[object]:
    """Build the complex of one end; checks d^2 = 0 and homology against the surface."""
    witnesses = {} if art.enabled else None

    def build():
        cx = msw.build_msw(pair, sc.tol, witnesses)
        rep = check_boundary_square(cx)
        return rep.ok, rep.detail or f"dims {list(cx.dims)}", cx

    cx = out.guarded(f"{end}: d^2 = 0", build)
    if cx is None:
        return None
    ranks = homology_ranks(cx)
    entry = {"complex": cx.to_json(), "homology": ranks}
    expected = SURFACE_HOMOLOGY.get(sc.raw["surface"]["name"])
    if expected is not None:
        entry["expected_homology"] = expected
        out.check(f"{end}: homology", ranks == expected, f"{ranks} (singular {expected})")
    if witnesses:
        files = {}
        for saddle in sorted(witnesses):
            for kind in ("unstable", "stable"):
                for k, tr in enumerate(witnesses[saddle][kind]):
                    name = f"{end}_{saddle}_{kind}_{k}.csv"
                    files[name] = {"start": saddle, "end": tr.end_label}
                    art.trajectory(tr, pair.surface, name)
        entry["witness_files"] = files
    out.payload.setdefault("complexes", {})[end] = entry
    return cx


def step_continuation(out: Outcome, sc, name: str, h) -> Optional[object]:
    def run():
        u = msw.continuation_map(h, sc.tol, check=False)
        rep = verify_chain_map(u)
        return rep.ok, rep.detail, u

    u = out.guarded(f"{name}: chain map", run)
    if u is None:
        return None
    ind = induced_homology_map(u)
    out.check(f"{name}: homology iso", ind.iso, f"induced {ind.to_json()['blocks']}")
    out.payload.setdefault("continuation", {})[name] = {"map": u.to_json(), "induced": ind.to_json()}
    return u


def step_homotopy(out: Outcome, sc, name: str, h, loci: Optional[dict] = None):
    if h.level == 1:
        def run():
            u0 = msw.continuation_map(h.facet(0.0), sc.tol)
            u1 = msw.continuation_map(h.facet(1.0), sc.tol)
            e = msw.homotopy_entries(h, sc.tol, loci)
            rep = verify_homotopy(e, u0, u1)
            return rep.ok, rep.detail or "U1 + U0 = d'E + Ed", (u0, u1, e)

        res = out.guarded(f"{name}: homotopy relation", run)
        if res is None:
            return None
        u0, u1, e = res
        i0, i1 = induced_homology_map(u0), induced_homology_map(u1)
        out.check(f"{name}: induced U0 = U1", i0 == i1, f"{i0.to_json()['blocks']}")
        out.payload.setdefault("homotopy", {})[name] = {
            "level": 1, "U0": u0.to_json(), "U1": u1.to_json(), "E": e.to_json(),
            "induced_U0": i0.to_json(), "induced_U1": i1.to_json()}
        return res

    def run2():
        e0 = msw.chain_homotopy(h.facet(0.0), sc.tol)[2]
        e1 = msw.chain_homotopy(h.facet(1.0), sc.tol)[2]
        phi = msw.homotopy_entries(h, sc.tol, loci)
        rep = verify_homotopy(phi, e0, e1)
        return rep.ok, rep.detail or "E1 + E0 = d'phi + phi d", (e0, e1, phi)

    res = out.guarded(f"{name}: level-2 facet relation", run2)
    if res is not None:
        e0, e1, phi = res
        out.payload.setdefault("homotopy", {})[name] = {
            "level": 2, "E_facet0": e0.to_json(), "E_facet1": e1.to_json(), "phi": phi.to_json()}
    return res


def strata_pairs(h):
    """(p, q) whose parametrized moduli space is one-dimensional."""
    return [(p, q) for p in h.alpha.critical_points for q in h.beta.critical_points
            if moduli.expected_dimension(p.index, q.index, h.level) == 1]


def step_strata(out: Outcome, sc, name: str, h, pairs=None):
    cache: dict = {}
    reports = []
    for p, q in pairs or strata_pairs(h):
        rep = out.guarded(f"{name}: strata {p.id}->{q.id}",
                          lambda p=p, q=q: _strata_one(h, p, q, sc.tol, cache))
        if rep is not None:
            reports.append(rep)
    out.payload.setdefault("strata", {})[name] = reports
    return reports


def _strata_one(h, p, q, tol, cache):
    rep = moduli.boundary_strata(h, p, q, tol, cache).to_json()
    return rep["total_parity"] == 0, f"boundary parity {rep['total_parity']}", rep


def step_functor(out: Outcome, sc, name: str, h):
    """F on the family composed with the constant family at its target,
    computed along both paths, plus F(identity) = 0 at levels 0 and 1."""
    c1 = category.ACell(h, name=name)
    comp = category.compose_A(category.identity_A(c1.target), c1, 0)
    results = {}

    def paths():
        fp, fs = category.Functor(sc.tol, "provenance"), category.Functor(sc.tol, "scan")
        a, b = fp(comp), fs(comp)
        _, _, c2, c1_ = comp.provenance
        glued = category.compose_B(fp(c2), fp(c1_), 0)
        results["provenance_loci"] = {f"{k[0]}->{k[1]}": v for k, v in sorted(fp.loci(comp).items())}
        results["scan_loci"] = {f"{k[0]}->{k[1]}": v for k, v in sorted(fs.loci(comp).items())}
        results["F_composite"] = a.phi.to_json()
        ok = a == b == glued
        return ok, "provenance = scan = F(c2) + F(c1)" if ok else "paths disagree", (fp, fs)

    res = out.guarded(f"{name}: F(c2 o c1) = F(c2) + F(c1)", paths)
    if res is not None:
        fp, fs = res
        for lvl, cell in ((0, c1.source), (1, c1)):
            ident = category.identity_A(cell)

            def zero(ident=ident):
                a, b = fp(ident), fs(ident)
                ok = a.phi.is_zero() and b.phi.is_zero()
                return ok, "zero on both paths" if ok else "nonzero image", None

            out.guarded(f"{name}: F(identity) = 0 at level {lvl}", zero)
    out.payload.setdefault("functor", {})[name] = results


def step_category(out: Outcome, side: str, samples: int, seed: int, broken: bool = False):
    rep = category.check_axioms(side, samples=samples, seed=seed, broken=broken)
    for k in category.AXIOMS:
        t = rep["axioms"][k]
        out.check(f"category {side}: axiom ({k})", t["passed"] == t["checked"], f"{t['passed']}/{t['checked']}")
    out.check(f"category {side}: globular", rep["globular"]["ok"], rep["globular"]["detail"])
    out.payload.setdefault("category", {})[side] = rep
    return rep


# ---------------------------------------------------------------------------
# commands


def cmd_msw_build(args, sc, art) -> Outcome:
    out = Outcome("msw build")
    for end, pair in _pairs(sc, args.pair):
        step_complex(out, sc, end, pair, art)
    return out


def cmd_msw_continue(args, sc, art) -> Outcome:
    out = Outcome("msw continue")
    h = _family(sc, args.family, 0, "msw continue")
    step_continuation(out, sc, args.family or sc.family_names(0)[0], h)
    return out


def cmd_msw_homotopy(args, sc, art) -> Outcome:
    out = Outcome("msw homotopy")
    h = sc.family(args.family) if args.family else _family(sc, None, 1, "msw homotopy")
    if h.level not in (1, 2):
        raise scenario.ScenarioError(f"msw homotopy needs a level-1 or level-2 family, got level {h.level}")
    name = args.family or sc.family_names(1)[0]
    loci: dict = {}
    step_homotopy(out, sc, name, h, loci)
    out.payload["loci"] = {f"{k[0]}->{k[1]}": v.to_json() for k, v in sorted(loci.items())}
    return out


def _witness(sc, h, p, cp, s: float, art: Artifacts, name: str):
    """A trajectory of the family frozen at s that realizes the connection:
    forward from a minimum, or backward from the target of a saddle."""
    spec = FlowSpec(sc.surface, homotopy=h, parameter=(s,), tol=sc.tol)
    if p.index == 0:
        traj = integrate(spec, (p.chart_id, p.u), FORWARD, p.id)
    else:
        traj = integrate(spec, (cp.chart_id, cp.u), BACKWARD, cp.id)
    return art.trajectory(traj, sc.surface, name), traj.end_label


def cmd_moduli_scan(args, sc, art) -> Outcome:
    out = Outcome("moduli scan")
    pid, qid = _label_pair(args.pair)
    h = _family(sc, args.family, 1, "moduli scan")
    p, cp = sc.point(pid), sc.point(qid)
    if p not in h.alpha.critical_points or cp not in h.beta.critical_points:
        raise UsageError(f"--pair needs a critical point of alpha then one of beta, got {pid},{qid}")
    if cp.index != p.index + 1:
        raise UsageError(f"{qid} must have index one above {pid}")

    def run():
        loc = moduli.scan_nongeneric(h, p, cp, sc.tol, grid=args.grid)
        return True, f"{len(loc.points)} root(s), parity {loc.parity}", loc

    loc = out.guarded(f"scan {pid}->{qid}", run)
    if loc is None:
        return out
    roots = []
    for k, pt in enumerate(loc.points):
        wfile, end = _witness(sc, h, p, cp, pt["s"], art, f"locus_{pid}_{qid}_{k}.csv")
        roots.append({"s": pt["s"], "parity": pt["parity"], "miss": pt["miss"], "witness_file": wfile,
                      "witness_end": end})
    out.payload.update({"pair": [pid, qid], "level": 1, "grid": loc.grid, "roots": roots,
                        "parity": loc.parity, "warnings": loc.warnings})
    out.csv_rows = [["s", "parity"]] + [[f"{r['s']:.15g}", r["parity"]] for r in roots]
    return out


def cmd_moduli_strata(args, sc, art) -> Outcome:
    out = Outcome("moduli strata")
    pid, qid = _label_pair(args.pair)
    h = sc.family(args.family) if args.family else _family(sc, None, 1, "moduli strata")
    p, q = sc.point(pid), sc.point(qid)
    dim = moduli.expected_dimension(p.index, q.index, h.level)
    if dim != 1:
        raise UsageError(f"moduli space {pid}->{qid} of a level-{h.level} family has dimension {dim}, not 1")
    step_strata(out, sc, args.family or sc.family_names(h.level)[0], h, [(p, q)])
    return out


def cmd_category_check(args, sc, art) -> Outcome:
    out = Outcome(f"category check --side {args.side}")
    step_category(out, args.side, args.samples, args.seed, args.broken)
    return out


def cmd_verify_all(args, sc, art) -> Outcome:
    out = Outcome("verify all")
    for end, pair in _pairs(sc, "both"):
        step_complex(out, sc, end, pair, art)
    for name, h in sc.families.items():
        if h.level == 0:
            step_continuation(out, sc, name, h)
        else:
            step_homotopy(out, sc, name, h)
            step_strata(out, sc, name, h)
    level1 = sc.family_names(1)
    if level1:
        step_functor(out, sc, level1[0], sc.families[level1[0]])
    step_category(out, "B", args.b_samples, args.seed)
    step_category(out, "A", args.a_samples, args.seed)
    return out


COMMANDS = {
    ("msw", "build"): cmd_msw_build,
    ("msw", "continue"): cmd_msw_continue,
    ("msw", "homotopy"): cmd_msw_homotopy,
    ("moduli", "scan"): cmd_moduli_scan,
    ("moduli", "strata"): cmd_moduli_strata,
    ("category", "check"): cmd_category_check,
    ("verify", "all"): cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file, or the name of a stock scenario")
    common.add_argument("--out", help="write the JSON result here, with a .summary.txt next to it")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by this factor")
    common.add_argument("--dump-trajectories", metavar="DIR", help="write witness trajectories as CSV into DIR")

    parser = argparse.ArgumentParser(prog="morse-tower", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    g = groups.add_parser("msw", help="Morse-Smale-Witten complexes and maps").add_subparsers(dest="action", required=True)
    p = g.add_parser("build", parents=[common], help="complexes of the scenario ends")
    p.add_argument("--pair", choices=("alpha", "beta", "both"), default="both")
    p = g.add_parser("continue", parents=[common], help="continuation map of a level-0 family")
    p.add_argument("--family")
    p = g.add_parser("homotopy", parents=[common], help="chain homotopy of a level-1 or level-2 family")
    p.add_argument("--family")

    g = groups.add_parser("moduli", help="non-generic loci and boundary strata").add_subparsers(dest="action", required=True)
    p = g.add_parser("scan", parents=[common], help="non-generic parameters for a pair p,c'")
    p.add_argument("--pair", required=True, metavar="P,C")
    p.add_argument("--family")
    p.add_argument("--grid", type=int, help="scan grid size (default from the tolerances)")
    p = g.add_parser("strata", parents=[common], help="boundary parity of a one-dimensional moduli space")
    p.add_argument("--pair", required=True, metavar="P,Q")
    p.add_argument("--family")

    g = groups.add_parser("category", help="axiom checks").add_subparsers(dest="action", required=True)
    p = g.add_parser("check", parents=[common], help="seeded axiom suite for category A or B")
    p.add_argument("--side", choices=("A", "B"), required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--broken", action="store_true", help="use a wrong composite (the suite must fail)")

    g = groups.add_parser("verify", help="full pipeline").add_subparsers(dest="action", required=True)
    p = g.add_parser("all", parents=[common], help="every check the scenario supports")
    p.add_argument("--b-samples", type=int, default=50, help="random configurations for category B")
    p.add_argument("--a-samples", type=int, default=4, help="random configurations for category A")
    return parser


def _write(out: Outcome, document: dict, path: Optional[str], summary: str):
    if path is None:
        sys.stdout.write(dumps(document))
        sys.stderr.write(summary)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps(document))
    target.with_suffix(".summary.txt").write_text(summary)
    rows = getattr(out, "csv_rows", None)
    if rows is not None:
        with open(target.with_suffix(".loci.csv"), "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    sys.stdout.write(summary)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    key = (args.group, args.action)
    needs_scenario = key != ("category", "check")
    try:
        if args.tol_scale <= 0:
            raise UsageError("--tol-scale must be positive")
        sc = None
        if needs_scenario:
            if not args.scenario:
                raise UsageError(f"{' '.join(key)} needs --scenario")
            sc = scenario.load(args.scenario, args.tol_scale)
        art = Artifacts(args.dump_trajectories)
        out = COMMANDS[key](args, sc, art)
    except (scenario.ScenarioError, UsageError) as exc:
        print(f"morse-tower: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    document = {"command": out.command, "seed": args.seed, "checks": out.checks, "ok": out.ok, "result": out.payload}
    if sc is not None:
        document["scenario"] = _scenario_echo(sc, args.tol_scale)
    else:
        document["tolerances"] = {"cell_tol": category.CELL_TOL}
    _write(out, document, args.out, summary_table(out))
    failure = out.first_failure
    if failure is not None:
        print(f"morse-tower: failed check: {failure['check']} ({failure['detail']})", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
