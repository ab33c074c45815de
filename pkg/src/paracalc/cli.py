"""Command-line experiment runner.

Every subcommand writes ``report.json`` (schema ``report_v1``, deterministic),
``metadata.json`` (timestamp, version, argv) and CSV plot data into the output
directory.  Exit status: 0 when every asserted tolerance passes, 1 on a
tolerance failure, 2 on usage, configuration or hypothesis errors.
"""

import argparse
import csv
import datetime
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, build_config, load_config_file
from .holder import InsufficientDataError, ensemble_fit, estimate_exponent
from .lp import block_sup_norms, decompose, reconstruct, write_decomposition_csv
from .noise import NoiseSpec, sample_field, save_enhancement
from .paraproducts import BackendConfig, calderon_check
from .registry import (REGISTRY, SUITE_WINDOW_START, HypothesisViolation, verify_operator)
from .spectral import Field, TorusGrid, load_field

__all__ = ["main", "build_parser", "run"]

REPORT_SCHEMA = "report_v1"
COMMANDS = ("decompose", "estimate-regularity", "verify-operator", "taylor-remainder",
            "build-enhancement", "solve-gpam", "schauder-check", "full-suite")


class UsageError(ValueError):
    pass


# -- output helpers ----------------------------------------------------------------

def _clean(x):
    """JSON-ready copy with numpy scalars converted."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _write_reports(out, command, cfg, results, passed, argv):
    os.makedirs(out, exist_ok=True)
    report = {"schema": REPORT_SCHEMA, "command": command, "pass": bool(passed),
              "config": cfg, "results": results}
    path = os.path.join(out, "report.json")
    with open(path, "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    meta = {"version": __version__, "argv": list(argv),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    with open(os.path.join(out, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return path


def _write_block_csv(path, log2_norms, lo=-1):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "log2_block_norm"])
        for i, v in enumerate(log2_norms):
            w.writerow([i + lo, f"{v:.10g}"])


def _grid(cfg):
    g = cfg["grid"]
    return TorusGrid(g["dim"], g["n"], g["partition"])


def _seeds(cfg):
    s = cfg["seeds"]
    return list(range(s)) if isinstance(s, int) else list(s)


def _input_field(cfg):
    fc = cfg["field"]
    if "input" in fc:
        f = load_field(fc["input"], cfg["grid"]["partition"])
        return f, {"input": fc["input"]}
    spec = NoiseSpec(fc["alpha"], fc["seed"], cfg["law"])
    return sample_field(spec, _grid(cfg)), {"alpha": fc["alpha"], "seed": fc["seed"]}


def _window(cfg, grid, default_lo):
    w = cfg.get("window")
    return tuple(w) if w else (default_lo, grid.J - 2)


# -- subcommands ------------------------------------------------------------------

def cmd_decompose(cfg, out):
    f, source = _input_field(cfg)
    dec = decompose(f)
    err = (reconstruct(dec) - f).sup() / max(f.sup(), np.finfo(float).tiny)
    write_decomposition_csv(dec, os.path.join(out, "blocks.csv"))
    results = {"source": source, "blocks": dec.indices, "block_sup_norms": list(dec.block_sup_norms),
               "reconstruction_error": err, "tolerance": 1e-10}
    return results, err <= 1e-10


def cmd_estimate_regularity(cfg, out):
    f, source = _input_field(cfg)
    window = _window(cfg, f.grid, 3)
    fit = estimate_exponent(f, window)
    norms = block_sup_norms(f)
    _write_block_csv(os.path.join(out, "blocks.csv"), np.log2(np.maximum(norms, 1e-300)))
    results = {"source": source, "fit": fit.to_dict()}
    passed = True
    if "expect" in cfg["field"]:
        tol = cfg["field"]["tolerance"]
        passed = abs(fit.estimated_alpha - cfg["field"]["expect"]) <= tol
        results.update(expect=cfg["field"]["expect"], tolerance=tol)
    return results, passed


def _backend(cfg, grid):
    b = cfg["backend"]
    if b["backend"] == "lp":
        return None
    levels = b.get("levels") or int(math.ceil(math.log2(float(grid.k2.max())))) + 4
    return BackendConfig("semigroup", b["b"], levels)


def _verify(cfg, name, out, alphas=None):
    grid = _grid(cfg)
    if grid.dim != 1:
        raise UsageError("the exponent suite runs in one space dimension")
    backend = _backend(cfg, grid)
    rep = verify_operator(name, alphas, seeds=_seeds(cfg), n=grid.n,
                          window=_window(cfg, grid, SUITE_WINDOW_START), law=cfg["law"],
                          partition=grid.partition, tolerance=cfg.get("tolerance"),
                          backend=backend)
    _write_block_csv(os.path.join(out, f"{name}_blocks.csv"), rep.mean_log2_norms)
    d = rep.to_dict()
    if backend is not None:
        d["backend"] = {"backend": "semigroup", "b": backend.b, "levels": backend.levels,
                        "calderon_error": calderon_check(sample_field(NoiseSpec(0.5, 0), grid),
                                                         backend)}
    return d, rep.passed


def cmd_verify_operator(cfg, out):
    name = cfg.get("operator")
    if name not in REGISTRY:
        raise UsageError(f"unknown operator {name!r}; known: {', '.join(REGISTRY)}")
    return _verify(cfg, name, out, cfg.get("alphas"))


def cmd_full_suite(cfg, out):
    reports = {}
    for name in REGISTRY:
        reports[name], _ = _verify(cfg, name, out)
    failed = [k for k, r in reports.items() if not r["pass"]]
    with open(os.path.join(out, "suite.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["operator", "theory_exponent", "estimated_alpha", "r2", "tolerance", "pass"])
        for k, r in reports.items():
            w.writerow([k, r["theory_exponent"], f"{r['estimated_alpha']:.6f}",
                        f"{r['r2']:.6f}", r["tolerance"], r["pass"]])
    return {"operators": reports, "failed": failed}, not failed


def cmd_taylor_remainder(cfg, out):
    from .taylor import Nonlinearity, taylor_expand
    tc = cfg["taylor"]
    grid = _grid(cfg)
    fn = Nonlinearity.by_name(tc["fn"])
    window = _window(cfg, grid, SUITE_WINDOW_START)
    norms, ident = [], []
    for s in _seeds(cfg):
        u = sample_field(NoiseSpec(tc["alpha"], s, cfg["law"]), grid)
        exp = taylor_expand(fn, u, tc["order"], tc["flavor"])
        ident.append(exp.identity_error())
        norms.append((block_sup_norms(exp.remainder), exp.remainder.sup()))
    fit = ensemble_fit(norms, window)
    theory = (tc["order"] + 1) * tc["alpha"]
    logs = np.mean([np.log2(np.maximum(n, 1e-300)) for n, _ in norms], axis=0)
    _write_block_csv(os.path.join(out, "remainder_blocks.csv"), logs)
    results = {"fn": fn.label, "order": tc["order"], "flavor": tc["flavor"],
               "input_alpha": tc["alpha"], "theory_exponent": theory,
               "estimated_alpha": fit.estimated_alpha, "r2": fit.r_squared,
               "window": list(fit.window), "seeds": _seeds(cfg), "tolerance": 0.2,
               "identity_error": max(ident)}
    if fn.label in ("identity",) or fn.label.startswith(("x^", "constant", "poly")):
        # polynomial maps: only exactness is asserted
        return results, max(ident) <= 1e-10
    return results, max(ident) <= 1e-10 and abs(fit.estimated_alpha - theory) <= 0.2


def _noise(cfg, grid, opts):
    from .gpam import make_noise
    nc = cfg["noise"]
    return make_noise(grid, nc["alpha"], nc["eps"], nc["seed"], nc["amplitude"], opts, cfg["law"])


def _solve_options(cfg):
    from .gpam import SolveOptions
    sc = cfg["solver"]
    return SolveOptions(T=sc["T"], steps=sc["steps"], max_iters=sc["max_iters"],
                        fp_tol=sc["fp_tol"], alpha=sc["alpha"], beta=sc["beta"])


def cmd_build_enhancement(cfg, out):
    grid = _grid(cfg)
    opts = _solve_options(cfg)
    xi = _noise(cfg, grid, opts)
    save_enhancement(xi, os.path.join(out, "enhancement"))
    last = len(xi.times) - 1
    comps = {"zeta": xi.zeta, "Y2": xi.Y2.slice(last), "Z1": xi.Z1.slice(last),
             "Z2": xi.Z2.slice(last)}
    comps.update({f"zeta3_{k}": c for k, c in enumerate(xi.zeta3, 1)})
    exps = {}
    for name, c in comps.items():
        try:
            fit = estimate_exponent(c, _window(cfg, grid, 3))
            exps[name] = {"estimated_alpha": fit.estimated_alpha, "r2": fit.r_squared}
        except InsufficientDataError as exc:
            exps[name] = {"estimated_alpha": None, "note": str(exc)}
    return {"noise": cfg["noise"], "components": exps,
            "finite": bool(all(np.isfinite(c.sup()) for c in comps.values()))}, True


def cmd_solve_gpam(cfg, out):
    from .gpam import (NonConvergenceError, reference_solve, save_solution, solve_gpam)
    from .taylor import Nonlinearity
    grid = _grid(cfg)
    opts = _solve_options(cfg)
    fn = Nonlinearity.by_name(cfg["solver"]["fn"])
    xi = _noise(cfg, grid, opts)
    x = grid.coordinates()[0]
    u0 = Field(grid, 0.5 * np.cos(x) + 0.2 * np.sin(2 * x)) if grid.dim == 1 else \
        Field(grid, 0.5 * np.cos(x) * np.cos(grid.coordinates()[1]))
    try:
        sol = solve_gpam(u0, xi, fn, opts)
    except NonConvergenceError as exc:
        history = exc.history
        results = {"converged": False, "history": history}
        _write_trace(out, history)
        return results, False
    ref = reference_solve(u0, xi.zeta, fn, opts)
    gap = (sol.u - ref).sup() / max(ref.sup(), np.finfo(float).tiny)
    save_solution(sol, os.path.join(out, "solution"), every=max(1, opts.steps // 8))
    _write_trace(out, sol.history)
    tol = cfg["solver"]["oracle_tol"]
    results = {"converged": True, "iterations": len(sol.history), "history": sol.history,
               "final_residual": sol.history[-1], "oracle_gap": gap, "oracle_tol": tol,
               "fn": fn.label, "noise": cfg["noise"], "dt": opts.dt}
    return results, gap <= tol


def _write_trace(out, history):
    with open(os.path.join(out, "convergence.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "residual"])
        for k, r in enumerate(history, 1):
            w.writerow([k, f"{r:.6e}"])


def cmd_schauder_check(cfg, out):
    from .gpam import schauder_check
    sc = cfg["schauder"]
    grid = _grid(cfg)
    rep = schauder_check(sc["beta"], sc["eps"], _seeds(cfg), n=grid.n, law=cfg["law"],
                         window=cfg.get("window"))
    return rep, rep["pass"]


HANDLERS = {
    "decompose": cmd_decompose, "estimate-regularity": cmd_estimate_regularity,
    "verify-operator": cmd_verify_operator, "taylor-remainder": cmd_taylor_remainder,
    "build-enhancement": cmd_build_enhancement, "solve-gpam": cmd_solve_gpam,
    "schauder-check": cmd_schauder_check, "full-suite": cmd_full_suite,
}


# -- argument parsing ------------------------------------------------------------

def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed_arg(text):
    vals = [int(x) for x in text.split(",") if x.strip()]
    return vals[0] if len(vals) == 1 else vals


def build_parser():
    p = argparse.ArgumentParser(prog="paracalc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"paracalc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    parsers = {}
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML configuration file")
        sp.add_argument("--output", "-o", help="output directory")
        sp.add_argument("--n", type=int, help="points per axis")
        sp.add_argument("--dim", type=int, help="space dimension")
        sp.add_argument("--partition", help="smooth or sharp")
        sp.add_argument("--seeds", type=_seed_arg, help="count, or comma-separated seeds")
        sp.add_argument("--law", help="gaussian-holder or gaussian-spectral")
        sp.add_argument("--window", type=_floats, help="lo,hi block window")
        parsers[name] = sp
    for name in ("decompose", "estimate-regularity"):
        parsers[name].add_argument("--input", help="PCF1 field file")
        parsers[name].add_argument("--alpha", type=float, help="sample exponent")
        parsers[name].add_argument("--seed", type=int)
    parsers["estimate-regularity"].add_argument("--expect", type=float)
    parsers["estimate-regularity"].add_argument("--tolerance", type=float)
    v = parsers["verify-operator"]
    v.add_argument("operator", nargs="?", help="registered operator name (or set in the config)")
    v.add_argument("--alphas", type=_floats, help="comma-separated input exponents")
    v.add_argument("--tolerance", type=float)
    for name in ("verify-operator", "full-suite"):
        parsers[name].add_argument("--backend", help="lp or semigroup")
    t = parsers["taylor-remainder"]
    t.add_argument("--fn")
    t.add_argument("--order", type=int)
    t.add_argument("--alpha", type=float)
    t.add_argument("--flavor")
    for name in ("build-enhancement", "solve-gpam"):
        s = parsers[name]
        s.add_argument("--alpha", type=float, help="noise class: zeta in C^(alpha-2)")
        s.add_argument("--eps", type=float, help="mollification time")
        s.add_argument("--seed", type=int)
        s.add_argument("--amplitude", type=float)
        s.add_argument("--T", type=float)
        s.add_argument("--steps", type=int)
    g = parsers["solve-gpam"]
    g.add_argument("--fn")
    g.add_argument("--max-iters", type=int)
    g.add_argument("--fp-tol", type=float)
    c = parsers["schauder-check"]
    c.add_argument("--beta", type=float)
    c.add_argument("--eps", type=float)
    return p


def _overrides(args):
    """Map parsed flags onto config keys (only flags that were given)."""
    a = vars(args)
    o = {}

    def put(path, value):
        if value is None:
            return
        d = o
        for key in path[:-1]:
            d = d.setdefault(key, {})
        d[path[-1]] = value

    put(("output",), a.get("output"))
    put(("grid", "n"), a.get("n"))
    put(("grid", "dim"), a.get("dim"))
    put(("grid", "partition"), a.get("partition"))
    put(("seeds",), a.get("seeds"))
    put(("law",), a.get("law"))
    if a.get("window") is not None:
        put(("window",), [int(x) for x in a["window"]])
    cmd = args.command
    if cmd in ("decompose", "estimate-regularity"):
        put(("field", "input"), a.get("input"))
        put(("field", "alpha"), a.get("alpha"))
        put(("field", "seed"), a.get("seed"))
        put(("field", "expect"), a.get("expect"))
        put(("field", "tolerance"), a.get("tolerance"))
    if cmd == "verify-operator":
        put(("operator",), a.get("operator"))
        put(("alphas",), a.get("alphas"))
        put(("tolerance",), a.get("tolerance"))
    if cmd in ("verify-operator", "full-suite"):
        put(("backend", "backend"), a.get("backend"))
    if cmd == "taylor-remainder":
        put(("taylor", "fn"), a.get("fn"))
        put(("taylor", "order"), a.get("order"))
        put(("taylor", "alpha"), a.get("alpha"))
        put(("taylor", "flavor"), a.get("flavor"))
    if cmd in ("build-enhancement", "solve-gpam"):
        put(("noise", "alpha"), a.get("alpha"))
        put(("noise", "eps"), a.get("eps"))
        put(("noise", "seed"), a.get("seed"))
        put(("noise", "amplitude"), a.get("amplitude"))
        put(("solver", "T"), a.get("T"))
        put(("solver", "steps"), a.get("steps"))
    if cmd == "solve-gpam":
        put(("solver", "fn"), a.get("fn"))
        put(("solver", "max_iters"), a.get("max_iters"))
        put(("solver", "fp_tol"), a.get("fp_tol"))
    if cmd == "schauder-check":
        put(("schauder", "beta"), a.get("beta"))
        put(("schauder", "eps"), a.get("eps"))
    return o


def run(cfg, argv=()):
    """Execute a validated configuration; returns (exit code, report path)."""
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    results, passed = HANDLERS[cfg["command"]](cfg, out)
    path = _write_reports(out, cfg["command"], cfg, results, passed, argv)
    return (0 if passed else 1), path


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_cfg, _overrides(args))
        code, path = run(cfg, argv)
    except (ConfigError, HypothesisViolation, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if code == 0:
        print(f"pass: {path}")
    else:
        print(f"FAIL: tolerance not met, see {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
