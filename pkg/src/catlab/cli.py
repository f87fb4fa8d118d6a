"""
Command-line front end.

    catlab [--config FILE] [--out DIR] [--seed N] [--mode rational|float] SUBCOMMAND [options]

Configuration is read from a TOML file (sections below) and command-line flags
override it. Every CSV row and JSON document carries the hash of the effective
configuration and the package version; outputs contain no timestamps, so a rerun
with the same configuration and seed is byte-identical.

Exit codes: 0 ok, 2 configuration error, 3 convergence failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "run": {"mode": "float", "seed": 0, "out": "out"},
    "grid": {"t": ["1/64", "1/128", "1/256", "1/512"]},
    "observables": {"names": ["1", "x", "y", "xy", "cos2pix", "sin2piy", "cos2pix_sin2piy"]},
    "quadrature": {"lines": 2048, "nodes": 8, "cell_order": 8},
    "iteration": {"n": 3, "n_max": 13, "tol": 1e-6, "k_max": 8},
    "response": {"K": 30, "computed": 13, "tol": 1e-3, "observables": ["1", "xy", "cos2pix_sin2piy"]},
    "growth": {"t": ["0", "1/64", "1/16", "1/8"], "width": 1e-3, "steps": 45, "budget": 50000, "N0": 9},
    "foliation": {"t": "1/8", "order": 16},
    "equidist": {"eta": 1 / 32, "x0": 0.3, "k_min": 0, "k_max": 12},
    "coupling": {"count": 100, "states": 1000},
    "couple_demo": {"t": "1/16", "offset": 2e-4, "points": 20000, "steps": 45},
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- config


def parse_t(v) -> Fraction:
    """Parameters are given as 'p/q' strings or numbers; they are kept as Fractions."""
    try:
        t = Fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator(1 << 40)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"cannot read parameter value {v!r}") from e
    if not 0 <= t <= Fraction(1, 8):
        raise ConfigError(f"t = {t} outside [0, 1/8]")
    return t


def _merge(base: dict, upd: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in upd.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path, "rb") as fh:
                cfg = _merge(cfg, tomllib.load(fh))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    return cfg


def set_path(cfg: dict, dotted: str, value) -> None:
    *head, last = dotted.split(".")
    d = cfg
    for h in head:
        d = d.setdefault(h, {})
    d[last] = value


def validate(cfg: dict) -> None:
    if cfg["run"]["mode"] not in ("float", "rational"):
        raise ConfigError("run.mode must be 'float' or 'rational'")
    for k in ("lines", "nodes", "cell_order"):
        if int(cfg["quadrature"][k]) <= 0:
            raise ConfigError(f"quadrature.{k} must be positive")
    for k in ("n_max", "k_max"):
        if int(cfg["iteration"][k]) <= 0:
            raise ConfigError(f"iteration.{k} must be positive")
    if int(cfg["iteration"]["n"]) < 0:
        raise ConfigError("iteration.n must be nonnegative")
    if float(cfg["iteration"]["tol"]) <= 0:
        raise ConfigError("iteration.tol must be positive")
    for t in cfg["grid"]["t"]:
        parse_t(t)
    from .observables import BATTERY

    for name in list(cfg["observables"]["names"]) + list(cfg["response"]["observables"]):
        if name not in BATTERY:
            raise ConfigError(f"unknown observable {name!r}")


def config_hash(cfg: dict) -> str:
    """sha256 prefix of the canonical JSON of the effective configuration (output directory excluded)."""
    cfg = copy.deepcopy(cfg)
    cfg["run"].pop("out", None)
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def meta(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "version": __version__}


# ---------------------------------------------------------------- output


def fmt(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    return path


def csv_text(fields: list, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: fmt(r.get(k, "")) for k in fields})
    return buf.getvalue()


def json_text(obj: dict) -> str:
    from .response import SCHEMA_VERSION

    obj = {"schema_version": SCHEMA_VERSION, **obj}
    return json.dumps(obj, indent=2, sort_keys=True, default=fmt) + "\n"


MEASURE_FIELDS = ["t", "observable", "n", "method", "lines", "nodes", "value", "delta", "seed", "config_hash", "version"]


# ---------------------------------------------------------------- commands


def _t_values(cfg, arg):
    return [parse_t(v) for v in (arg if arg else cfg["grid"]["t"])]


def cmd_singset(cfg, args) -> list[Path]:
    from .cat_family import backward_lines, family_to_dict, make_family, singularity_forward

    t = parse_t(args.t if args.t is not None else cfg["grid"]["t"][0])
    k = int(args.k if args.k is not None else 1)
    if not 1 <= k <= int(cfg["iteration"]["k_max"]):
        raise ConfigError(f"k must lie in [1, {cfg['iteration']['k_max']}]")
    mode = cfg["run"]["mode"]
    fam = make_family(t if mode == "rational" else float(t), mode)
    rows = []
    for kind, arr in (("forward", singularity_forward(fam, k)), ("backward", backward_lines(fam))):
        for s in arr.segments:
            rows.append({"kind": kind, "generation": arr.generation, "ax": s.a.x, "ay": s.a.y, "bx": s.b.x,
                         "by": s.b.y, **meta(cfg)})
    out = Path(cfg["run"]["out"])
    tag = f"t{fmt(t).replace('/', '_')}_k{k}"
    paths = [write_text(out / f"singset_{tag}.csv",
                        csv_text(["kind", "generation", "ax", "ay", "bx", "by", "config_hash", "version"], rows))]
    fam_doc = family_to_dict(fam)
    fam_doc.update(meta(cfg))
    paths.append(write_text(out / f"family_{tag}.json", json_text(fam_doc)))
    return paths


def cmd_pushforward(cfg, args) -> list[Path]:
    from .cat_family import make_family
    from .measures import pushforward_lebesgue_estimate, pushforward_mc
    from .observables import get

    n = int(args.n if args.n is not None else cfg["iteration"]["n"])
    lines, nodes = int(cfg["quadrature"]["lines"]), int(cfg["quadrature"]["nodes"])
    seed = int(cfg["run"]["seed"])
    rows = []
    for t in _t_values(cfg, args.t):
        fam = make_family(float(t), "float")
        for name in (args.observable or cfg["observables"]["names"]):
            ob = get(name)
            est = pushforward_lebesgue_estimate(fam, ob, n, lines, nodes, name)
            rows.append({"t": t, "observable": name, "n": n, "method": "lines", "lines": lines, "nodes": nodes,
                         "value": est.value, "delta": est.delta, "seed": "", **meta(cfg)})
            if args.mc:
                mc = pushforward_mc(float(t), ob, n, int(args.mc), seed)
                rows.append({"t": t, "observable": name, "n": n, "method": "mc", "lines": int(args.mc), "nodes": 0,
                             "value": mc.value, "delta": mc.stderr, "seed": seed, **meta(cfg)})
    return [write_text(Path(cfg["run"]["out"]) / "pushforward.csv", csv_text(MEASURE_FIELDS, rows))]


def cmd_mu(cfg, args) -> list[Path]:
    from .cat_family import make_family
    from .measures import mu_t_many
    from .observables import get

    names = args.observable or cfg["observables"]["names"]
    it = cfg["iteration"]
    rows = []
    for t in _t_values(cfg, args.t):
        ests = mu_t_many(make_family(float(t), "float"), [get(n) for n in names], float(it["tol"]),
                         int(it["n_max"]), q=int(cfg["quadrature"]["cell_order"]), names=names)
        for e in ests:
            rows.append({"t": t, "observable": e.observable, "n": e.n, "method": "cells", "lines": e.lines,
                         "nodes": e.nodes, "value": e.value, "delta": e.delta, "seed": "", **meta(cfg)})
    return [write_text(Path(cfg["run"]["out"]) / "mu.csv", csv_text(MEASURE_FIELDS, rows))]


def cmd_response(cfg, args) -> list[Path]:
    from .observables import get
    from .response import build_report, reports_to_csv

    r = cfg["response"]
    it = cfg["iteration"]
    ts = [float(t) for t in _t_values(cfg, args.t)]
    if any(t == 0 for t in ts):
        raise ConfigError("difference quotients need t > 0")
    reps = []
    for name in (args.observable or r["observables"]):
        ob = get(name)
        reps.append(build_report(name, ob, ob.mean, ts, int(r["K"]), float(r["tol"]), int(it["n_max"]),
                                 int(r["computed"])))
    out = Path(cfg["run"]["out"])
    doc = {"reports": [rep.to_dict() for rep in reps], **meta(cfg)}
    return [write_text(out / "response.json", json_text(doc)),
            write_text(out / "response.csv", reports_to_csv(reps, meta(cfg)))]


def cmd_growth(cfg, args) -> list[Path]:
    from .cat_family import make_family
    from .standard_pairs import StandardFamily, growth_stats

    g = cfg["growth"]
    w = float(args.width if args.width is not None else g["width"])
    if not 0 < w <= 1:
        raise ConfigError("width must lie in (0, 1]")
    seed = int(cfg["run"]["seed"])
    rows, summary = [], []
    for t in [parse_t(v) for v in (args.t or g["t"])]:
        fam = make_family(float(t), "float")
        g0 = StandardFamily.single(0.3, 0.5 - w / 2, 0.3, 0.5 + w / 2)
        rep = growth_stats(fam, g0, int(g["steps"]), int(g["N0"]), budget=int(g["budget"]), seed=seed)
        for m, z in enumerate(rep.Z):
            rows.append({"t": t, "step": m, "Z": z, "seed": seed, **meta(cfg)})
        summary.append({"t": t, "rate": rep.rate, "z": rep.z, "Z_plateau": rep.Z_plateau, "Z_bound": rep.Z_bound,
                        "hit_time": rep.hit_time, "envelope_ok": rep.envelope_ok, "N0": rep.N0})
    out = Path(cfg["run"]["out"])
    return [write_text(out / "growth.csv", csv_text(["t", "step", "Z", "seed", "config_hash", "version"], rows)),
            write_text(out / "growth.json", json_text({"runs": summary, **meta(cfg)}))]


def cmd_foliate(cfg, args) -> list[Path]:
    from .foliation import build_f1, build_f2

    f = cfg["foliation"]
    t = parse_t(args.t if args.t is not None else f["t"])
    if t == 0:
        raise ConfigError("foliations need t > 0")
    regions = build_f1(float(t)) + list(build_f2(float(t)))
    rows = []
    for r in regions:
        for lf, fw in r.leaves(int(f["order"])):
            s = lf.segment.segment
            rows.append({"region": r.name, "param": float(lf.param), "ax": float(s.a.x), "ay": float(s.a.y),
                         "bx": float(s.b.x), "by": float(s.b.y), "factor_weight": fw, **meta(cfg)})
    fields = ["region", "param", "ax", "ay", "bx", "by", "factor_weight", "config_hash", "version"]
    return [write_text(Path(cfg["run"]["out"]) / f"leaves_t{fmt(t).replace('/', '_')}.csv", csv_text(fields, rows))]


def cmd_equidist(cfg, args) -> list[Path]:
    from .cat_family import make_family
    from .measures import equidistribution_defect, square_grid
    from .standard_pairs import StandardSegment

    e = cfg["equidist"]
    eta = float(args.eta if args.eta is not None else e["eta"])
    if not 0 < eta < 0.5:
        raise ConfigError("eta must lie in (0, 1/2)")
    fam0 = make_family(0.0, "float")
    grid = square_grid(fam0, eta)
    x0 = float(e["x0"])
    w = StandardSegment.from_coords(x0, 0.0, x0, 1.0)
    rows = []
    for k in range(int(e["k_min"]), int(e["k_max"]) + 1):
        d = equidistribution_defect(fam0, w, eta, k, grid)
        rows.append({"k": k, "eta": eta, "defect": d.defect, "defect_interior": d.defect_interior,
                     "equi_part": d.equi_part, "n_interior": d.n_interior, "n_all": d.n_all, "length": d.length,
                     **meta(cfg)})
    fields = ["k", "eta", "defect", "defect_interior", "equi_part", "n_interior", "n_all", "length",
              "config_hash", "version"]
    return [write_text(Path(cfg["run"]["out"]) / "equidist.csv", csv_text(fields, rows))]


def cmd_coupling_sweep(cfg, args) -> list[Path]:
    from .coupling import SWEEP_FIELDS, random_params, sweep_rows

    c = cfg["coupling"]
    seed = int(cfg["run"]["seed"])
    count = int(args.count if args.count is not None else c["count"])
    if count < 0:
        raise ConfigError("count must be nonnegative")
    if "params" in c:
        params = list(c["params"])
    else:
        rng = np.random.default_rng(seed)
        params = [random_params(rng) for _ in range(count)]
    rows = [dict(r, **meta(cfg)) for r in sweep_rows(params, int(c["states"]), seed + 1)]
    return [write_text(Path(cfg["run"]["out"]) / "coupling_sweep.csv",
                       csv_text(SWEEP_FIELDS + ["config_hash", "version"], rows))]


def cmd_couple_demo(cfg, args) -> list[Path]:
    from .cat_family import make_family
    from .coupling import Square, couple_segments, decoupled_fraction, stable_partners
    from .standard_pairs import StandardSegment

    d = cfg["couple_demo"]
    t = parse_t(args.t if args.t is not None else d["t"])
    fam = make_family(float(t), "float")
    eu, es = np.array(fam.E_u), np.array(fam.E_s)
    c = np.array([0.5, 0.5])
    half = 0.4
    off = float(d["offset"])
    w1 = StandardSegment.from_coords(*(c - half * eu), *(c + half * eu))
    w2 = StandardSegment.from_coords(*(c - half * eu + off * es), *(c + half * eu + off * es))
    side = 0.99 * min(w1.length, w2.length) / 1000
    doc = {"t": t, "offset": off, **meta(cfg)}
    from .coupling import Incompatible

    try:
        pair = couple_segments(w1, w2, Square(tuple(c), side, tuple(eu), tuple(es)))
        doc["geometric"] = {"eta_bound": pair.eta, "distance": pair.distance, "len1": pair.w1.length,
                            "len2": pair.w2.length, "alpha": pair.alpha, "zeta": pair.zeta}
    except Incompatible as e:
        doc["geometric"] = {"incompatible": e.reason}
    P1, P2 = stable_partners(w1, w2, eu, es, int(d["points"]))
    rep = decoupled_fraction(fam, P1, P2, int(d["steps"]), int(cfg["growth"]["N0"]))
    doc["decoupling"] = {"block_losses": rep.block_losses, "cumulative": rep.cumulative, "L_fit": rep.L_fit,
                         "contraction": rep.contraction, "mu_s": fam.mu_s}
    return [write_text(Path(cfg["run"]["out"]) / "couple_demo.json", json_text(doc))]


COMMANDS = {
    "singset": cmd_singset,
    "pushforward": cmd_pushforward,
    "mu": cmd_mu,
    "response": cmd_response,
    "growth": cmd_growth,
    "foliate": cmd_foliate,
    "equidist": cmd_equidist,
    "coupling-sweep": cmd_coupling_sweep,
    "couple-demo": cmd_couple_demo,
}


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="catlab", description="Experiments on the perturbed cat map family.")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", help="output directory (run.out)")
    p.add_argument("--seed", type=int, help="random seed (run.seed)")
    p.add_argument("--mode", choices=["float", "rational"], help="arithmetic mode (run.mode)")
    p.add_argument("--version", action="version", version=f"catlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("singset", help="forward and backward singular segments as CSV, family as JSON")
    s.add_argument("--t")
    s.add_argument("--k", type=int)

    s = sub.add_parser("pushforward", help="m(phi o F_t^n) by line quadrature (and optional Monte-Carlo)")
    s.add_argument("--t", nargs="+")
    s.add_argument("--n", type=int)
    s.add_argument("--observable", nargs="+")
    s.add_argument("--lines", type=int)
    s.add_argument("--nodes", type=int)
    s.add_argument("--mc", type=int, help="also run Monte-Carlo with this many points")

    s = sub.add_parser("mu", help="mu_t estimates by cell pushforward")
    s.add_argument("--t", nargs="+")
    s.add_argument("--observable", nargs="+")
    s.add_argument("--tol", type=float)
    s.add_argument("--n-max", type=int)

    s = sub.add_parser("response", help="difference quotients against the response series")
    s.add_argument("--t", nargs="+")
    s.add_argument("--observable", nargs="+")
    s.add_argument("--K", type=int)
    s.add_argument("--tol", type=float, help="tolerance on the quotient (response.tol)")
    s.add_argument("--n-max", type=int)

    s = sub.add_parser("growth", help="regularity Z along the evolution of a short segment")
    s.add_argument("--t", nargs="+")
    s.add_argument("--width", type=float)
    s.add_argument("--steps", type=int)

    s = sub.add_parser("foliate", help="leaf dump of the measurable partitions")
    s.add_argument("--t")

    s = sub.add_parser("equidist", help="square-partition equidistribution of an evolved vertical line")
    s.add_argument("--eta", type=float)
    s.add_argument("--k-max", type=int)

    s = sub.add_parser("coupling-sweep", help="tau and empirical contraction over parameter tuples")
    s.add_argument("--count", type=int)
    s.add_argument("--states", type=int)

    s = sub.add_parser("couple-demo", help="geometric coupling and decoupling accounting for two segments")
    s.add_argument("--t")
    s.add_argument("--offset", type=float)
    return p


_OVERRIDES = {
    "out": "run.out",
    "seed": "run.seed",
    "mode": "run.mode",
    "lines": "quadrature.lines",
    "nodes": "quadrature.nodes",
    "tol": "iteration.tol",
    "n_max": "iteration.n_max",
    "K": "response.K",
    "steps": "growth.steps",
    "k_max": "equidist.k_max",
    "states": "coupling.states",
    "offset": "couple_demo.offset",
}


def main(argv: list[str] | None = None) -> int:
    from .foliation import QuadratureNonconvergence
    from .measures import NoConvergence, SingularityBudgetExceeded
    from .response import SeriesDivergenceSuspected

    convergence = (NoConvergence, SeriesDivergenceSuspected, SingularityBudgetExceeded, QuadratureNonconvergence)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        for attr, path in _OVERRIDES.items():
            v = getattr(args, attr, None)
            if attr == "tol" and args.command == "response":
                path = "response.tol"
            if v is not None:
                set_path(cfg, path, v)
        validate(cfg)
        paths = COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"catlab: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except convergence as e:
        print(f"catlab: convergence failure: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except FileNotFoundError as e:
        if args.config and not Path(args.config).exists():
            print(f"catlab: configuration error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"catlab: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"catlab: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        # parameter validation inside the library (out-of-range t, invalid scheme parameters)
        print(f"catlab: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
