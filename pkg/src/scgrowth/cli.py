"""Command-line front end: ``scgrowth <subcommand> [options]``.

Every run that writes a file also writes ``<file>.config.json`` holding the
fully resolved configuration; ``scgrowth --config that.json`` repeats it.

Exit status: 0 on success, 1 on usage errors, 2 when a solver fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import chain as chain_mod
from . import cw as cw_mod
from . import enumerator as enum_mod
from . import popdyn as pd_mod
from .curves import CSV_SCHEMA_VERSION, GrowthCurve, concave_hull, hull_distance, maxwell_level
from .errors import GrowthError, InvalidWeight
from .scalar import EnsembleParams, default_grid, field_curve, scalar_h_c, scalar_h_it

SCHEMA_VERSION = CSV_SCHEMA_VERSION

TABLE1 = {
    "h_c": {(3, 6): 0.446, (4, 8): 0.442, (5, 10): 0.441},
    "h_it": {(3, 6): 0.543, (4, 8): 0.629, (5, 10): 0.706},
    "h_it_w2": {(3, 6): 0.446, (4, 8): 0.447, (5, 10): 0.469},
    "h_it_w3": {(3, 6): 0.446, (4, 8): 0.442, (5, 10): 0.442},
}
TABLE1_TOL = {"h_c": 0.002, "h_it": 0.002, "h_it_w2": 0.01, "h_it_w3": 0.01}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclasses.dataclass
class RunConfig:
    command: str
    params: dict
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        return cls(d["command"], dict(d["params"]), int(d.get("schema_version", SCHEMA_VERSION)))

    def argv(self):
        out = [self.command]
        for k, v in sorted(self.params.items()):
            if v is None or v is False:
                continue
            flag = "--" + k.replace("_", "-")
            if v is True:
                out.append(flag)
            elif isinstance(v, list):
                for item in v:
                    out += [flag, str(item)]
            else:
                out += [flag, repr(v) if isinstance(v, float) else str(v)]
        return out


def _add_degrees(p):
    p.add_argument("--l", type=int, required=True, help="variable degree")
    p.add_argument("--r", type=int, required=True, help="check degree")


def _add_out(p):
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")


def _add_popdyn(p):
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--L", type=int, default=20)
    p.add_argument("--pop", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-sweeps", type=int, default=2000)
    p.add_argument("--threads", type=int, default=None)


def build_parser():
    ap = _Parser(prog="scgrowth", description="Growth rates and thresholds of regular and coupled LDPC ensembles.")
    ap.add_argument("--config", default=None, help="re-run a resolved config file")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("single", help="scalar (omega, h, G) curve")
    _add_degrees(p)
    p.add_argument("--step", type=float, default=1e-3)
    _add_out(p)

    p = sub.add_parser("single-thresholds", help="scalar h_c and h_it")
    _add_degrees(p)
    _add_out(p)

    p = sub.add_parser("chain", help="(l, r, L) chain curve")
    _add_degrees(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--step", type=float, default=5e-3)
    p.add_argument("--max-omega", type=float, default=0.995)
    _add_out(p)

    p = sub.add_parser("popdyn", help="(l, r, w, L) fixed-field branch by population dynamics")
    _add_degrees(p)
    _add_popdyn(p)
    p.add_argument("--h", type=float, action="append", required=True, help="field (repeatable)")
    p.add_argument("--histogram", default=None, help="binary dump of the last population")
    _add_out(p)

    p = sub.add_parser("popdyn-threshold", help="coupled iterative threshold")
    _add_degrees(p)
    _add_popdyn(p)
    p.add_argument("--seeds", type=int, default=3)
    _add_out(p)

    p = sub.add_parser("oracle", help="exact average enumerator")
    _add_degrees(p)
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--W", type=int)
    g.add_argument("--omega", type=float)

    p = sub.add_parser("cw", help="Curie-Weiss curve, or the CW chain with --L")
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--w", type=int, default=5)
    p.add_argument("--pin", choices=["plus", "antisymmetric"], default="plus")
    p.add_argument("--step", type=float, default=5e-3)
    _add_out(p)

    p = sub.add_parser("hull", help="hull and Maxwell level of a curve CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--anchor", action="append", default=[], help="extra point 'x,G' (repeatable)")
    p.add_argument("--lower", action="store_true", help="convex minorant instead of concave majorant")
    _add_out(p)

    p = sub.add_parser("table1", help="reproduce the threshold table")
    p.add_argument("--L", type=int, default=20)
    p.add_argument("--pop", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--max-sweeps", type=int, default=2000)
    p.add_argument("--threads", type=int, default=None)
    _add_out(p)
    return ap


# -- commands ----------------------------------------------------------------


def _params(ns):
    return EnsembleParams(ns.l, ns.r)


def _curve_out(curve, ns, columns=("x", "h", "G")):
    return curve.to_csv(columns=columns)


def cmd_single(ns):
    return _curve_out(field_curve(_params(ns), default_grid(0.0, ns.step)), ns)


def cmd_single_thresholds(ns):
    bp = _params(ns)
    h_c, hull = scalar_h_c(bp, return_hull=True)
    rep = {"schema_version": SCHEMA_VERSION, "l": ns.l, "r": ns.r, "h_c": h_c, "h_c_hull": -hull.slope, "omega_c": hull.x_c, "h_it": scalar_h_it(bp)}
    return json.dumps(rep, indent=2) + "\n"


def cmd_chain(ns):
    cp = chain_mod.ChainParams(_params(ns), ns.L)
    grid = np.round(np.arange(0.0, ns.max_omega + 1e-12, ns.step), 12)
    curve = chain_mod.chain_curve(cp, grid)
    if not curve.converged.all():
        raise GrowthError(f"chain solve failed at omega={curve.failed.tolist()}")
    return _curve_out(curve, ns)


def _window(ns, seed=None):
    return pd_mod.WindowParams(_params(ns), ns.w, ns.L, ns.pop, ns.seed if seed is None else seed, ns.max_sweeps)


def cmd_popdyn(ns):
    pd_mod.set_threads(ns.threads)
    wp = _window(ns)
    rows = []
    pop = None
    for h in ns.h:
        pop = pd_mod.relax(pd_mod.initial_population(wp, math.tanh(h)), h, wp)
        d = pd_mod.growth_direct(pop, h, wp)
        rows.append((d.omega, h, d.G))
    if ns.histogram and pop is not None:
        pd_mod.write_histogram(pop, ns.histogram)
    return "x,h,G\n" + "".join(f"{o:.9g},{h:.9g},{G:.9g}\n" for o, h, G in sorted(rows))


def cmd_popdyn_threshold(ns):
    pd_mod.set_threads(ns.threads)
    wp = _window(ns)
    res = pd_mod.popdyn_threshold(wp, n_seeds=ns.seeds, workers=pd_mod.set_threads(ns.threads))
    return json.dumps(res.as_dict(wp), indent=2) + "\n"


def cmd_oracle(ns):
    fe = enum_mod.FiniteEnsemble(_params(ns), ns.n)
    if ns.W is not None:
        v = enum_mod.exact_average_enumerator(fe, ns.W).value
        return f"{v.numerator}/{v.denominator}\n" if v.denominator != 1 else f"{v.numerator}\n"
    omega, rate = enum_mod.combinatorial_growth(fe, ns.omega)
    return f"{omega:.9g},{rate:.9g}\n"


_PINS = {"plus": (1.0, 1.0), "antisymmetric": (-1.0, 1.0)}


def cmd_cw(ns):
    n = int(round(2.0 / ns.step))
    grid = np.round(np.linspace(-1.0, 1.0, n + 1)[1:-1], 12)
    if ns.L is None:
        curve = cw_mod.cw_curve(ns.J, grid)
    else:
        curve = cw_mod.cw_chain_curve(cw_mod.CWParams(ns.J, ns.L, ns.w, _PINS[ns.pin]), grid)
        if not curve.converged.all():
            raise GrowthError(f"CW chain failed at m={curve.failed.tolist()}")
    return _curve_out(curve, ns, columns=("m", "h", "Phi"))


def cmd_hull(ns):
    curve = GrowthCurve.read_csv(ns.csv)
    anchors = [tuple(float(v) for v in a.split(",")) for a in ns.anchor]
    hull = concave_hull(curve, anchors=anchors, lower=ns.lower)
    rep = hull.as_dict()
    rep["sup_distance"] = hull_distance(curve, hull)
    try:
        rep["maxwell_level"] = maxwell_level(curve)
    except GrowthError as exc:
        rep["maxwell_level"] = None
        rep["maxwell_error"] = str(exc)
    return json.dumps(rep, indent=2) + "\n"


def cmd_table1(ns):
    pd_mod.set_threads(ns.threads)
    rows = []
    for (l, r) in ((3, 6), (4, 8), (5, 10)):
        bp = EnsembleParams(l, r)
        vals = {"h_c": scalar_h_c(bp), "h_it": scalar_h_it(bp)}
        for w in (2, 3):
            wp = pd_mod.WindowParams(bp, w, ns.L, ns.pop, pd_mod.split_seed(ns.seed, l, r, w) % (2**63), ns.max_sweeps)
            vals[f"h_it_w{w}"] = pd_mod.popdyn_threshold(wp, n_seeds=ns.seeds).h_it
        for key, v in vals.items():
            ref = TABLE1[key][(l, r)]
            rows.append({"l": l, "r": r, "quantity": key, "value": v, "reference": ref, "tol": TABLE1_TOL[key], "ok": abs(v - ref) <= TABLE1_TOL[key]})
    rep = {"schema_version": SCHEMA_VERSION, "L": ns.L, "pop": ns.pop, "seed": ns.seed, "seeds": ns.seeds, "entries": rows}
    lines = [f"{'ensemble':>9} {'quantity':>8} {'value':>8} {'table':>6}  ok"]
    for e in rows:
        lines.append(f"{'(%d,%d)' % (e['l'], e['r']):>9} {e['quantity']:>8} {e['value']:8.4f} {e['reference']:6.3f}  {'yes' if e['ok'] else 'NO'}")
    print("\n".join(lines), file=sys.stderr)
    return json.dumps(rep, indent=2) + "\n"


COMMANDS = {
    "single": cmd_single,
    "single-thresholds": cmd_single_thresholds,
    "chain": cmd_chain,
    "popdyn": cmd_popdyn,
    "popdyn-threshold": cmd_popdyn_threshold,
    "oracle": cmd_oracle,
    "cw": cmd_cw,
    "hull": cmd_hull,
    "table1": cmd_table1,
}


def _resolve(ns) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    if "threads" in params and params["threads"] is None:
        env = os.environ.get(pd_mod.THREADS_ENV)
        params["threads"] = int(env) if env else None
    return RunConfig(ns.command, params)


def parse(argv, parser=None):
    parser = parser or build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        cfg = RunConfig.from_json(Path(ns.config).read_text(encoding="utf-8"))
        ns = parser.parse_args(cfg.argv())
    if not ns.command:
        raise UsageError(parser.format_usage() + "scgrowth: error: a subcommand is required")
    return ns


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parse(sys.argv[1:] if argv is None else list(argv), parser)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"{parser.format_usage()}scgrowth: error: {exc}", file=sys.stderr)
        return 1
    cfg = _resolve(ns)
    try:
        text = COMMANDS[ns.command](ns)
    except InvalidWeight as exc:
        print(f"{parser.format_usage()}scgrowth {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    except GrowthError as exc:
        worst = getattr(exc, "worst", None)
        extra = f" (worst residual {worst:.3g})" if isinstance(worst, float) and not math.isnan(worst) else ""
        print(f"scgrowth {ns.command}: {type(exc).__name__}: {exc}{extra}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{parser.format_usage()}scgrowth {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    out = getattr(ns, "out", None)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        Path(str(out) + ".config.json").write_text(cfg.to_json() + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())
