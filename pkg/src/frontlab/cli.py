"""Command-line front end.

Subcommands: speed, sweep, scan, orbits, mintime, integrals, fit, validate.
Every run prints a one-line JSON summary on stdout; exit status is 0 on
success, 1 on a domain error (solver failure, non-convergence, I/O) and 2
on a usage error (bad flags, invalid configuration).

Configuration files
-------------------
A config file is ``key = value`` lines grouped in optional ``[section]``
blocks; ``#`` starts a comment.  Top-level keys::

    flow = cellular            # catalog name, optionally followed by k=v params
    p = 1,0
    sl = 1
    A = 8,16,32

    [params]                   # flow parameters
    delta = 0.5

    [solver]                   # n, cfl, t_final, scheme, record_every
    n = 512

    [orbits]                   # n_seeds, rng_seed, t_max
    n_seeds = 100

    [output]                   # out, plot
    out = cell.csv

Unknown sections or keys are errors.  Command-line flags override the file.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import asymptotics, flows, mintime, orbits, speed_lab
from .errors import ConfigurationError, FrontlabError
from .hj_solver import SolverParams
from .speed_lab import SweepRecord

HEADER = ("flow", "params", "p1", "p2", "sl", "A", "n", "cfl", "t_final", "sT",
          "slope_residual", "converged", "wall_ms")


class ConfigParseError(ConfigurationError):
    def __init__(self, path, line, col, msg):
        super().__init__(f"{path}:{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass
class Config:
    flow: str = "cellular"
    params: dict = field(default_factory=dict)
    p: tuple = (1.0, 0.0)
    sl: float = 1.0
    A_list: list = field(default_factory=lambda: [1.0])
    solver: SolverParams = field(default_factory=SolverParams)
    n_seeds: int = 100
    rng_seed: int = 0
    t_max: float | None = None
    out: str | None = None
    plot: str | None = None

    def make_flow(self):
        return flows.make_flow(self.flow, **self.params)


_TOP = {"flow", "p", "sl", "A"}
_SOLVER = {f.name for f in fields(SolverParams)}
_ORBITS = {"n_seeds", "rng_seed", "t_max"}
_OUTPUT = {"out", "plot"}
_SECTIONS = {"", "params", "solver", "orbits", "output"}


def resolve_flow_name(name: str) -> str:
    """Catalog name, tolerating dropped underscores (``catseye``)."""
    names = flows.catalog()
    if name in names:
        return name
    squash = {n.replace("_", ""): n for n in names}
    key = name.replace("_", "").replace("-", "").lower()
    if key in squash:
        return squash[key]
    raise ConfigurationError(f"unknown flow {name!r}; known flows: {', '.join(names)}")


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigurationError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def parse_config_text(text: str, path: str = "<config>") -> dict:
    """Raw ``{section: {key: (value, line)}}`` mapping; syntax errors carry line/column."""
    out: dict = {s: {} for s in _SECTIONS}
    section = ""
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        s = line.strip()
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigParseError(path, ln, indent + len(s) + 1, "expected ']'")
            section = s[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigParseError(path, ln, indent + 2, f"unknown section [{section}]")
            continue
        if "=" not in s:
            raise ConfigParseError(path, ln, indent + 1, "expected 'key = value'")
        key, val = s.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigParseError(path, ln, indent + 1, "missing key before '='")
        if key in out[section]:
            raise ConfigParseError(path, ln, indent + 1, f"duplicate key {key!r}")
        out[section][key] = (val.strip(), ln, indent + 1)
    return out


def build_config(raw: dict, path: str = "<config>") -> Config:
    """Validate a parsed file; every violation is listed in one error."""
    errs = []
    cfg = Config()
    allowed = {"": _TOP, "solver": _SOLVER, "orbits": _ORBITS, "output": _OUTPUT}
    for sec, keys in raw.items():
        if sec == "params":
            continue
        for k, (_, ln, col) in keys.items():
            if k not in allowed[sec]:
                where = f"[{sec}] " if sec else ""
                errs.append(f"{path}:{ln}:{col}: unknown key {where}{k!r}")
    top = raw.get("", {})
    params = {}
    if "flow" in top:
        words = top["flow"][0].split()
        if not words:
            errs.append("flow must not be empty")
        else:
            try:
                cfg.flow = resolve_flow_name(words[0])
            except ConfigurationError as e:
                errs.append(str(e))
            for w in words[1:]:
                if "=" not in w:
                    errs.append(f"flow parameter {w!r} is not key=value")
                    continue
                k, v = w.split("=", 1)
                params[k] = v
    for k, (v, _, _) in raw.get("params", {}).items():
        params[k] = v
    try:
        cfg.params = {k: float(v) for k, v in params.items()}
        cfg.make_flow()
    except (ValueError, ConfigurationError) as e:
        errs.append(str(e))
    for key in ("p", "sl", "A"):
        if key not in top:
            continue
        try:
            vals = _floats(top[key][0], key)
        except ConfigurationError as e:
            errs.append(str(e))
            continue
        if key == "p":
            cfg.p = tuple(vals)
        elif key == "sl":
            cfg.sl = vals[0] if len(vals) == 1 else float("nan")
        else:
            cfg.A_list = vals
    sol = {}
    for k, (v, _, _) in raw.get("solver", {}).items():
        if k in _SOLVER:
            sol[k] = v
    try:
        cfg.solver = _solver_params(sol)
    except (ValueError, ConfigurationError) as e:
        errs.append(str(e))
    for k, (v, _, _) in raw.get("orbits", {}).items():
        try:
            setattr(cfg, k, float(v) if k == "t_max" else int(v))
        except ValueError:
            errs.append(f"orbits {k} = {v!r} is not a number")
    for k, (v, _, _) in raw.get("output", {}).items():
        setattr(cfg, k, v)
    errs += validate_config(cfg)
    if errs:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errs))
    return cfg


def _solver_params(d) -> SolverParams:
    kw = {}
    for k, v in d.items():
        if k in ("n", "record_every"):
            kw[k] = int(v)
        elif k == "scheme":
            kw[k] = str(v)
        elif k == "t_final":
            kw[k] = None if str(v).lower() in ("", "none", "auto") else float(v)
        else:
            kw[k] = float(v)
    return SolverParams(**kw)


def validate_config(cfg: Config) -> list:
    errs = []
    if len(cfg.p) != 2 or not all(math.isfinite(v) for v in cfg.p):
        errs.append("p must be two finite numbers")
    elif cfg.p[0] == 0 and cfg.p[1] == 0:
        errs.append("p must be nonzero")
    if not (math.isfinite(cfg.sl) and cfg.sl > 0):
        errs.append("sl must be a positive number")
    if not cfg.A_list:
        errs.append("A list is empty")
    elif any(not a >= 0 for a in cfg.A_list):
        errs.append("A values must be nonnegative")
    elif any(b <= a for a, b in zip(cfg.A_list, cfg.A_list[1:])):
        errs.append("A list must be strictly increasing")
    if cfg.n_seeds < 1:
        errs.append("n_seeds must be positive")
    if cfg.t_max is not None and not cfg.t_max > 0:
        errs.append("t_max must be positive")
    return errs


def load_config(path) -> Config:
    """Read and validate a config file (see module docstring for the grammar)."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigurationError(f"config {path} is not valid UTF-8") from None
    return build_config(parse_config_text(text, path), path)


# ---------------------------------------------------------------------------
# records


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def write_records(records, path) -> None:
    """CSV with the fixed header, 17 significant digits, LF endings."""
    path = os.fspath(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for r in records:
                w.writerow([r.flow, r.params, _num(r.p1), _num(r.p2), _num(r.sl), _num(r.A),
                            str(int(r.n)), _num(r.cfl), _num(r.t_final), _num(r.sT),
                            _num(r.slope_residual), _num(bool(r.converged)), _num(r.wall_ms)])
    except OSError as e:
        raise FrontlabError(f"cannot write {path}: {e.strerror}") from None


def read_records(path) -> list:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise FrontlabError(f"cannot read {path}: {e.strerror}") from None
    if not rows or tuple(rows[0]) != HEADER:
        raise ConfigurationError(f"{path}: missing or wrong CSV header")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(HEADER):
            raise ConfigurationError(f"{path}:{i}: expected {len(HEADER)} fields, got {len(row)}")
        d = dict(zip(HEADER, row))
        try:
            out.append(SweepRecord(
                d["flow"], d["params"], float(d["p1"]), float(d["p2"]), float(d["sl"]),
                float(d["A"]), int(d["n"]), float(d["cfl"]), float(d["t_final"]), float(d["sT"]),
                float(d["slope_residual"]), d["converged"] == "true", float(d["wall_ms"])))
        except ValueError as e:
            raise ConfigurationError(f"{path}:{i}: {e}") from None
    return out


def _write_columns(path, rows, header):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for r in rows:
            fh.write(" ".join(_num(v) for v in r) + "\n")


# ---------------------------------------------------------------------------
# argument handling


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="frontlab", description="Front speeds of the G-equation in periodic flows.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--flow", help="catalog flow name")
    common.add_argument("--param", action="append", default=[], metavar="K=V",
                        help="flow parameter (repeatable)")
    common.add_argument("--p", help="direction X,Y")
    common.add_argument("--sl", type=float, help="laminar speed")
    common.add_argument("--A", help="comma-separated flow intensities")
    common.add_argument("--grid", type=int, help="grid points per axis")
    common.add_argument("--cfl", type=float)
    common.add_argument("--t-final", type=float, dest="t_final")
    common.add_argument("--scheme", choices=("upwind1", "weno3"))
    common.add_argument("--out", help="output file")
    common.add_argument("--plot", help="two-column data file for plotting")
    common.add_argument("--seed", type=int, help="ensemble seed")
    common.add_argument("--n-seeds", type=int, dest="n_seeds")
    common.add_argument("--t-max", type=float, dest="t_max")
    common.add_argument("--n-dirs", type=int, dest="n_dirs", default=8)
    common.add_argument("--jobs", type=int, help="worker processes (default $FRONTLAB_JOBS or 1)")
    common.add_argument("--no-timing", action="store_true", dest="no_timing",
                        help="write wall_ms = 0 for byte-reproducible CSV")
    common.add_argument("--in", dest="infile", help="input CSV (fit)")
    for name, hlp in (("speed", "front speed for one A"), ("sweep", "front speed over an A list"),
                      ("scan", "speed over directions with subadditivity audit"),
                      ("orbits", "orbit ensemble: dichotomy, swirls, ballistic fraction"),
                      ("mintime", "stripe crossing times by the control route"),
                      ("integrals", "crossing-time quadratures"),
                      ("fit", "growth-law fit of a sweep CSV"),
                      ("validate", "flow sanity checks and stagnation points")):
        sub.add_parser(name, parents=[common], help=hlp)
    return ap


def _config_from_args(a) -> Config:
    cfg = load_config(a.config) if a.config else Config()
    errs = []
    if a.flow:
        try:
            name = resolve_flow_name(a.flow)
            if name != cfg.flow:
                cfg.params = {}
            cfg.flow = name
        except ConfigurationError as e:
            errs.append(str(e))
    for kv in a.param:
        if "=" not in kv:
            raise _UsageError(f"--param expects K=V, got {kv!r}")
        k, v = kv.split("=", 1)
        try:
            cfg.params[k.strip()] = float(v)
        except ValueError:
            errs.append(f"parameter {k}={v!r} is not a number")
    try:
        if a.p is not None:
            cfg.p = tuple(_floats(a.p, "--p"))
        if a.A is not None:
            cfg.A_list = _floats(a.A, "--A")
    except ConfigurationError as e:
        errs.append(str(e))
    if a.sl is not None:
        cfg.sl = a.sl
    upd = {k: v for k, v in (("n", a.grid), ("cfl", a.cfl), ("t_final", a.t_final),
                             ("scheme", a.scheme)) if v is not None}
    if upd:
        try:
            cfg.solver = replace(cfg.solver, **upd)
        except (ValueError, ConfigurationError) as e:
            errs.append(str(e))
    for k in ("n_seeds", "t_max"):
        if getattr(a, k) is not None:
            setattr(cfg, k, getattr(a, k))
    if a.seed is not None:
        cfg.rng_seed = a.seed
    if a.out is not None:
        cfg.out = a.out
    if a.plot is not None:
        cfg.plot = a.plot
    try:
        cfg.make_flow()
    except ConfigurationError as e:
        errs.append(str(e))
    errs += validate_config(cfg)
    if errs:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errs))
    return cfg


def _jobs(a) -> int:
    if a.jobs is not None:
        j = a.jobs
    else:
        env = os.environ.get("FRONTLAB_JOBS", "1")
        try:
            j = int(env)
        except ValueError:
            raise _UsageError(f"FRONTLAB_JOBS must be an integer, got {env!r}") from None
    if j < 1:
        raise _UsageError("--jobs must be at least 1")
    return j


def _unit(p):
    r = math.hypot(*p)
    return (p[0] / r, p[1] / r)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


# ---------------------------------------------------------------------------
# subcommands


def _cmd_speed(a, cfg):
    flow = cfg.make_flow()
    if len(cfg.A_list) != 1:
        raise _UsageError("speed takes a single --A value (use sweep for lists)")
    recs = speed_lab.sweep_A(flow, _unit(cfg.p), cfg.A_list, cfg.sl, cfg.solver, 1,
                             timing=not a.no_timing)
    r = recs[0]
    if r.error:
        raise FrontlabError(r.error)
    if cfg.out:
        write_records(recs, cfg.out)
    return {"flow": flow.name, "params": dict(flow.params), "p": list(_unit(cfg.p)), "A": r.A,
            "n": r.n, "sT": r.sT, "converged": r.converged, "t_final": r.t_final,
            "slope_residual": r.slope_residual}


def _cmd_sweep(a, cfg):
    flow = cfg.make_flow()
    recs = speed_lab.sweep_A(flow, _unit(cfg.p), cfg.A_list, cfg.sl, cfg.solver, _jobs(a),
                             timing=not a.no_timing)
    if cfg.out:
        write_records(recs, cfg.out)
    if cfg.plot:
        _write_columns(cfg.plot, [(r.A, r.sT) for r in recs], ("A", "sT"))
    failed = [r for r in recs if r.error]
    for r in failed:
        print(f"frontlab: A={r.A:g} failed: {r.error}", file=sys.stderr)
    return {"flow": flow.name, "rows": len(recs), "A": [r.A for r in recs],
            "sT": [r.sT for r in recs], "converged": [r.converged for r in recs],
            "failed": len(failed), "out": cfg.out}


def _cmd_scan(a, cfg):
    flow = cfg.make_flow()
    if len(cfg.A_list) != 1:
        raise _UsageError("scan takes a single --A value")
    scan = speed_lab.direction_scan(flow, cfg.A_list[0], a.n_dirs, cfg.sl, cfg.solver, _jobs(a))
    if cfg.out or cfg.plot:
        _write_columns(cfg.out or cfg.plot, list(scan), ("angle", "sT"))
    return {"flow": flow.name, "A": cfg.A_list[0], "angles": scan.angles, "sT": scan.speeds,
            "audit_passed": scan.audit_passed, "pairs_checked": scan.pairs_checked,
            "violations": len(scan.violations)}


def _cmd_orbits(a, cfg):
    flow = cfg.make_flow()
    res = {"flow": flow.name, "n_seeds": cfg.n_seeds, "seed": cfg.rng_seed}
    if flow.dim == 3:
        t_max = cfg.t_max or 200.0
        res["ballistic_fraction"] = orbits.ballistic_fraction(flow, cfg.n_seeds, cfg.rng_seed, t_max)
        res["t_max"] = t_max
    else:
        t_max = cfg.t_max or 10.0
        pred = orbits.predict_dichotomy(flow, cfg.n_seeds, cfg.rng_seed, t_max)
        dmax, hist = orbits.swirl_diameter_stats(flow, cfg.n_seeds, cfg.rng_seed, t_max)
        res.update({"case": pred.case, "p0": pred.p0, "lattice_vector": pred.lattice_vector,
                    "evidence": pred.evidence, "max_swirl_diameter": dmax,
                    "diameter_histogram": hist, "t_max": t_max})
    if cfg.out:
        _dump_orbits(cfg.out, flow, cfg.n_seeds, cfg.rng_seed, t_max)
    return res


def _dump_orbits(path, flow, n_seeds, rng_seed, t_max):
    cols = ["seed", "t"] + [f"x{i + 1}" for i in range(flow.dim)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k, x0 in enumerate(orbits.seed_points(n_seeds, flow.dim, rng_seed)):
            rec = orbits.integrate_orbit(flow, x0, t_max, n_samples=201)
            for t, x in zip(rec.times, rec.points):
                w.writerow([k, _num(t)] + [_num(v) for v in x])


def _cmd_mintime(a, cfg):
    flow = cfg.make_flow()
    n = a.grid or 256
    rows = []
    for A in cfg.A_list:
        T = mintime.stripe_crossing_time(flow, A, _unit(cfg.p), 1.0, n)
        rows.append((A, T))
    if cfg.out or cfg.plot:
        _write_columns(cfg.out or cfg.plot, rows, ("A", "T"))
    return {"flow": flow.name, "n": n, "direction": list(_unit(cfg.p)),
            "A": [r[0] for r in rows], "T": [r[1] for r in rows]}


def _cmd_integrals(a, cfg):
    rows = []
    for A in cfg.A_list:
        rows.append((A, asymptotics.cellular_crossing_integral(A),
                     asymptotics.loglip_crossing_integral(A)))
    if cfg.out or cfg.plot:
        _write_columns(cfg.out or cfg.plot, rows, ("A", "I", "J"))
    return {"A": [r[0] for r in rows], "I": [r[1] for r in rows], "J": [r[2] for r in rows]}


def _cmd_fit(a, cfg):
    if not a.infile:
        raise _UsageError("fit needs --in CSV")
    recs = read_records(a.infile)
    fit = asymptotics.fit_growth_law(recs)
    table = asymptotics.ratio_table(recs, fit.selected)
    return {"c": fit.c, "q": fit.q, "selected": fit.selected, "per_model_rss": fit.per_model_rss,
            "n_points": fit.n_points, "ratio_spread": table.spread, "ratio_trend": table.trend}


def _cmd_validate(a, cfg):
    flow = cfg.make_flow()
    rep = flows.validate_flow(flow)
    res = {"flow": flow.name, "params": dict(flow.params), "dim": flow.dim,
           "max_speed": flow.max_speed, "K0": flow.K0, "lipschitz": flow.lipschitz,
           "passed": rep.passed, "mean_velocity": rep.mean_velocity,
           "max_divergence": rep.max_divergence, "periodicity_defect": rep.periodicity_defect,
           "notes": rep.notes}
    if flow.dim == 2:
        st = flows.find_stagnation_points(flow)
        res["stagnation_points"] = len(st)
        res["continuum_suspected"] = st.continuum_suspected
    if not rep.passed:
        raise FrontlabError("flow validation failed: " + "; ".join(rep.notes))
    return res


_COMMANDS = {"speed": _cmd_speed, "sweep": _cmd_sweep, "scan": _cmd_scan, "orbits": _cmd_orbits,
             "mintime": _cmd_mintime, "integrals": _cmd_integrals, "fit": _cmd_fit,
             "validate": _cmd_validate}


def run(argv=None) -> int:
    """Execute a subcommand; returns the exit status (0, 1 domain error, 2 usage)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        a = build_parser().parse_args(argv)
        cfg = _config_from_args(a)
        res = _COMMANDS[a.command](a, cfg)
    except (_UsageError, ConfigurationError) as e:
        print(f"frontlab: {e}" if isinstance(e, ConfigurationError) else str(e), file=sys.stderr)
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except FrontlabError as e:
        print(f"frontlab: {e}", file=sys.stderr)
        return 1
    res = {"command": a.command, **res}
    print(json.dumps(_jsonable(res), sort_keys=False))
    return 0


def main() -> None:
    sys.exit(run())
