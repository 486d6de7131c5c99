"""Scenario runner: ``mdiq <scenario> [--config PATH] [--seed N] [--out DIR] ...``.

Configs are INI files. Every section is optional; command-line flags override
``[run]``. Recognized keys::

    [run]       seed, shots (0 = exact tables), jobs, trials
    [system]    dims = 2 2
    [state]     preset = phi+ | werner | mixed | random | separable ; p ; rank ; path
    [witness]   preset = bell-overlap | swap | transpose ; path
    [strategy]  kind = faithful | trivial | losr | separable ; components ; terms
    [channel]   preset = identity | depolarizing(p) | z-measure-prepare | constant | bit-flip ; path
    [solver]    tol ; max_iter

``path`` entries point at files in the shared matrix text format. Reports go
to ``<out>/report.json`` (stdout without ``--out``) and tables to CSV files
next to it. Exit codes: 0 ok, 1 selftest failure, 2 parse error, 3 dimension
error, 4 unconverged solver (a partial report is still written).
"""

import argparse
import configparser
import hashlib
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .decomp import accept, decompose, mdi_value
from .fixtures import qutrit_fixture_errors
from .game import (
    Faithful,
    Trivial,
    random_losr_strategy,
    random_separable_strategy,
    random_strategy,
    run_protocol,
    sample_table,
    strategy_summary,
)
from .memory import memory_witness_value, quantify_memory, run_memory_protocol
from .numerics import DimensionError, parse_matrix
from .qkd import key_reports, run_qkd
from .quantum import (
    DensityMatrix,
    channel_preset,
    max_entangled,
    maximally_mixed,
    parse_channel,
    random_density,
    random_separable,
    spawn_seeds,
    werner_state,
)
from .sdp import DEFAULT_MAX_ITER, DEFAULT_TOL, mdi_quantify_state, negativity, robustness_ppt
from .witness import (
    Witness,
    bell_overlap,
    bound_fm,
    bound_ftr,
    linear_mdi_from_table,
    nonlinear_mdi_from_table,
    product_table,
    swap_witness,
    transpose_nonlinear,
)

log = logging.getLogger("mdiq")

SCENARIOS = ("decompose", "witness", "simulate", "quantify", "memory", "qkd", "selftest")
EXIT_PARSE, EXIT_DIM, EXIT_UNCONVERGED = 2, 3, 4


class ConfigError(ValueError):
    pass


class Unconverged(RuntimeError):
    def __init__(self, report):
        super().__init__("solver did not converge")
        self.report = report


# --------------------------------------------------------------------------- #
#                                   Output                                    #
# --------------------------------------------------------------------------- #

def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if obj is None:
        return "null"
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


class Output:
    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def side_file(self, name: str, text: str):
        if self.dir is None:
            return None
        (self.dir / name).write_text(text)
        return name

    def report(self, report: dict):
        text = dumps(report) + "\n"
        if self.dir is None:
            sys.stdout.write(text)
        else:
            (self.dir / "report.json").write_text(text)


# --------------------------------------------------------------------------- #
#                                   Config                                    #
# --------------------------------------------------------------------------- #

def load_config(path, args) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            cfg.read_string(p.read_text(), source=str(p))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        base = p.parent
        for sec in cfg.sections():
            if "path" in cfg[sec]:
                fp = Path(cfg[sec]["path"])
                cfg[sec]["path"] = str(fp if fp.is_absolute() else base / fp)
    if not cfg.has_section("run"):
        cfg.add_section("run")
    for key in ("seed", "shots", "jobs"):
        val = getattr(args, key)
        if val is not None:
            cfg["run"][key] = str(val)
    return cfg


def config_hash(cfg: configparser.ConfigParser) -> str:
    """sha256 of the effective config with sections and keys sorted.

    ``[run] jobs`` is left out: the thread count never changes results.
    """
    lines = []
    for sec in sorted(cfg.sections()):
        lines.append(f"[{sec}]")
        for k in sorted(cfg[sec]):
            if (sec, k) != ("run", "jobs"):
                lines.append(f"{k}={cfg[sec][k].strip()}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def _get(cfg, sec, key, default=None):
    if cfg.has_section(sec) and key in cfg[sec]:
        return cfg[sec][key].strip()
    return default


def _int(cfg, sec, key, default=None):
    v = _get(cfg, sec, key)
    if v is None:
        return default
    try:
        return int(v)
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} must be an integer, got {v!r}") from exc


def _float(cfg, sec, key, default=None):
    v = _get(cfg, sec, key)
    if v is None:
        return default
    try:
        return float(v)
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} must be a number, got {v!r}") from exc


def _dims(cfg, default=(2, 2)):
    v = _get(cfg, "system", "dims")
    if v is None:
        return tuple(default)
    try:
        dims = tuple(int(x) for x in v.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad dims {v!r}") from exc
    if not dims or min(dims) < 2:
        raise DimensionError("every party needs dimension >= 2")
    return dims


def _seed(cfg, required=False):
    s = _int(cfg, "run", "seed")
    if s is None and required:
        raise ConfigError("this scenario is randomized and needs a seed (--seed or [run] seed)")
    return s


def _read(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file {path} not found")
    return p.read_text()


def _state(cfg, dims, seed):
    path = _get(cfg, "state", "path")
    if path:
        m, fdims = parse_matrix(_read(path))
        if tuple(fdims) != tuple(dims):
            raise DimensionError(f"state file dims {fdims} differ from {list(dims)}")
        return DensityMatrix(m, tuple(dims)).validate()
    preset = _get(cfg, "state", "preset", "phi+").lower()
    if preset in ("phi+", "werner") and (len(dims) != 2 or dims[0] != dims[1]):
        raise DimensionError(f"state preset {preset} needs dims d d")
    if preset == "phi+":
        return max_entangled(dims[0])
    if preset == "werner":
        return werner_state(_float(cfg, "state", "p", 0.5), dims[0])
    if preset == "mixed":
        return maximally_mixed(dims)
    if preset == "random":
        return DensityMatrix(random_density(dims, _int(cfg, "state", "rank"), _seed(cfg, True)).matrix, dims)
    if preset == "separable":
        return random_separable(dims, _int(cfg, "state", "terms", 4), _seed(cfg, True))[0]
    raise ConfigError(f"unknown state preset {preset!r}")


def _witness(cfg, dims):
    path = _get(cfg, "witness", "path")
    if path:
        m, fdims = parse_matrix(_read(path))
        n = len(dims)
        if tuple(fdims) == tuple(dims):
            return Witness(m, dims)
        if len(fdims) % n == 0 and tuple(fdims) == tuple(dims) * (len(fdims) // n):
            return Witness(m, dims, copies=len(fdims) // n)
        raise DimensionError(f"witness file dims {fdims} do not fit {list(dims)}")
    preset = _get(cfg, "witness", "preset", "bell-overlap").lower()
    if len(dims) != 2:
        raise DimensionError("witness presets are bipartite")
    if preset == "bell-overlap":
        if dims[0] != dims[1]:
            raise DimensionError("bell-overlap needs equal local dimensions")
        return bell_overlap(dims[0])
    if preset == "swap":
        return swap_witness(*dims)
    if preset == "transpose":
        if tuple(dims) != (2, 2):
            raise DimensionError("the transpose-map witness is defined on 2 x 2")
        return transpose_nonlinear(2)
    raise ConfigError(f"unknown witness preset {preset!r}")


def _strategy(cfg, dims, seed):
    kind = _get(cfg, "strategy", "kind", "faithful").lower()
    if kind == "faithful":
        return Faithful(tuple(dims))
    if kind == "trivial":
        return Trivial(tuple(dims))
    if kind == "losr":
        return random_losr_strategy(dims, _int(cfg, "strategy", "components", 2), _seed(cfg, True))
    if kind == "separable":
        return random_separable_strategy(dims, _int(cfg, "strategy", "terms", 3), _seed(cfg, True))
    raise ConfigError(f"unknown strategy kind {kind!r}")


def _channel(cfg, d=2):
    path = _get(cfg, "channel", "path")
    if path:
        return parse_channel(_read(path))
    preset = _get(cfg, "channel", "preset", "identity")
    try:
        return channel_preset(preset, _int(cfg, "channel", "d", d))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def _solver(cfg):
    return {"tol": _float(cfg, "solver", "tol", DEFAULT_TOL),
            "max_iter": _int(cfg, "solver", "max_iter", DEFAULT_MAX_ITER)}


# --------------------------------------------------------------------------- #
#                                  Scenarios                                  #
# --------------------------------------------------------------------------- #

def _table(rho, strategy, shots, seed):
    table = run_protocol(rho, None, strategy)
    if shots:
        table = sample_table(table, shots, seed)
    return table


def _c_mdi(w, table_fn):
    """``C_MDI`` for any witness kind; ``table_fn(copy)`` returns one copy's table."""
    if hasattr(w, "h"):
        return nonlinear_mdi_from_table(w, table_fn(0))
    if w.copies > 1:
        return w.omega * mdi_value(decompose(w.operator, w.full_dims),
                                   product_table([table_fn(c) for c in range(w.copies)]))
    return linear_mdi_from_table(w, table_fn(0))


def _true_value(w, rho):
    return w.value(rho) if hasattr(w, "h") else w.expectation(rho)


def scenario_decompose(cfg, out):
    dims = _dims(cfg)
    w = _witness(cfg, dims)
    op = w.witness if hasattr(w, "h") else w
    dec = decompose(op.operator, op.full_dims)
    return {"decomposition": dec.to_report()}


def scenario_witness(cfg, out):
    dims = _dims(cfg)
    seed = _seed(cfg)
    shots = _int(cfg, "run", "shots", 0)
    if shots and seed is None:
        raise ConfigError("sampled tables need a seed")
    rho = _state(cfg, dims, seed)
    w = _witness(cfg, dims)
    strategy = _strategy(cfg, dims, seed)
    seeds = spawn_seeds(seed, 4) if seed is not None else [None] * 4
    tables = {}

    def table_fn(c):
        if c not in tables:
            tables[c] = _table(rho, strategy, shots, seeds[c])
        return tables[c]

    c = _c_mdi(w, table_fn)
    rep = {
        "strategy": strategy_summary(strategy),
        "c_mdi": c,
        "verdict": "accept" if accept(c) else "reject",
        "true_value": _true_value(w, rho),
        "table_csv": out.side_file("table.csv", table_fn(0).to_csv()),
    }
    op = w.witness if hasattr(w, "h") else w
    if op.copies == 1 and not hasattr(w, "h"):
        rep["bounds"] = {"f_tr": bound_ftr(op, c), "f_m": bound_fm(op, c, 1.0)}
    return rep


def _sim_trial(args):
    w, dims, seed, kind = args
    rng = np.random.default_rng(seed)
    rho, _ = random_separable(dims, int(rng.integers(1, 5)), rng)
    strategies = [random_strategy(dims, rng, kind) for _ in range(max(1, getattr(w, "copies", 1)))]
    tables = {}

    def table_fn(c):
        if c not in tables:
            tables[c] = run_protocol(rho, None, strategies[min(c, len(strategies) - 1)])
        return tables[c]

    return _c_mdi(w, table_fn)


def scenario_simulate(cfg, out):
    """Adversarial sweep: random certified separable states against random strategies."""
    dims = _dims(cfg)
    seed = _seed(cfg, True)
    trials = _int(cfg, "run", "trials", 100)
    jobs = _int(cfg, "run", "jobs", 1)
    kind = _get(cfg, "strategy", "kind")
    kind = None if kind in (None, "random", "faithful", "trivial") else kind
    w = _witness(cfg, dims)
    work = [(w, dims, s, kind) for s in spawn_seeds(seed, trials)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            vals = list(ex.map(_sim_trial, work))
    else:
        vals = [_sim_trial(a) for a in work]
    vals = np.array(vals)
    csv = "trial,c_mdi\n" + "".join(f"{t},{v:.17g}\n" for t, v in enumerate(vals))
    return {
        "trials": trials,
        "min_c_mdi": float(vals.min()),
        "max_c_mdi": float(vals.max()),
        "false_accepts": int((vals < -1e-8).sum()),
        "values_csv": out.side_file("sweep.csv", csv),
    }


def scenario_quantify(cfg, out):
    dims = _dims(cfg)
    seed = _seed(cfg)
    shots = _int(cfg, "run", "shots", 0)
    rho = _state(cfg, dims, seed)
    strategy = _strategy(cfg, dims, seed)
    table = _table(rho, strategy, shots, seed)
    bound, sol = mdi_quantify_state(table, **_solver(cfg))
    rep = {
        "strategy": strategy_summary(strategy),
        "negativity_bound": bound,
        "true_negativity": negativity(rho, dims),
        "solver": sol.to_report(),
        "table_csv": out.side_file("table.csv", table.to_csv()),
    }
    if not sol.converged:
        raise Unconverged(rep)
    return rep


def scenario_memory(cfg, out):
    choi = _channel(cfg)
    seed = _seed(cfg)
    strategy = _strategy(cfg, (choi.d_out,), seed)
    run = run_memory_protocol(choi, strategy=strategy)
    rep = {"channel": {"d_in": choi.d_in, "d_out": choi.d_out},
           "strategy": strategy_summary(strategy)}
    if choi.d_in == choi.d_out:
        w = bell_overlap(choi.d_in)
        v = memory_witness_value(w, run)
        rep["witness"] = {"value": v, "verdict": "accept" if accept(v) else "reject",
                          "tr_wj": w.expectation(choi.matrix)}
    bound, sol = quantify_memory(run, **_solver(cfg))
    rob, rsol = robustness_ppt(choi, **_solver(cfg))
    rep["negativity_bound"] = bound
    rep["solver"] = sol.to_report()
    rep["robustness_ppt"] = rob
    rep["robustness_solver"] = rsol.to_report()
    csv = "s,t,i,p\n" + "".join(f"{s},{t},{i},{p:.17g}\n" for (s, t, i), p in np.ndenumerate(run.probs))
    rep["table_csv"] = out.side_file("memory_table.csv", csv)
    if not (sol.converged and rsol.converged):
        raise Unconverged(rep)
    return rep


def scenario_qkd(cfg, out):
    choi = _channel(cfg)
    seed = _seed(cfg)
    strategy = _strategy(cfg, (2,), seed)
    table = run_qkd(choi, strategy)
    rep = {"strategy": strategy_summary(strategy)}
    rep.update(key_reports(table))
    rep["table_csv"] = out.side_file("qkd_table.csv", table.to_csv())
    return rep


def scenario_selftest(cfg, out):
    errs = qutrit_fixture_errors()
    worst = max(errs.values())
    rho = max_entangled(2)
    c = linear_mdi_from_table(bell_overlap(2), run_protocol(rho, None, Faithful((2, 2))))
    checks = {
        "qutrit_transforms": worst <= 1e-12,
        "bell_overlap_phi_plus": abs(c + 0.5) <= 1e-9,
        "trivial_table": abs(run_protocol(rho, None, Trivial((2, 2))).probs.max() - 1 / 16) <= 1e-12,
    }
    return {"fixture_max_error": worst, "fixture_errors": errs, "checks": checks,
            "passed": all(checks.values())}


RUNNERS = {
    "decompose": scenario_decompose,
    "witness": scenario_witness,
    "simulate": scenario_simulate,
    "quantify": scenario_quantify,
    "memory": scenario_memory,
    "qkd": scenario_qkd,
    "selftest": scenario_selftest,
}


# --------------------------------------------------------------------------- #
#                                    Entry                                    #
# --------------------------------------------------------------------------- #

def build_parser():
    ap = argparse.ArgumentParser(prog="mdiq", description="MDI resource characterization scenarios")
    ap.add_argument("--version", action="version", version=f"mdiq {__version__}")
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=(RUNNERS[name].__doc__ or name).split("\n")[0])
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--shots", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args)
        out = Output(args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    header = {"scenario": args.scenario, "version": __version__,
              "config_sha256": config_hash(cfg), "seed": _get(cfg, "run", "seed")}
    code = 0
    try:
        body = RUNNERS[args.scenario](cfg, out)
        if args.scenario == "selftest" and not body["passed"]:
            code = 1
    except Unconverged as exc:
        body, code = dict(exc.report, status="unconverged"), EXIT_UNCONVERGED
    except DimensionError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out.report({**header, **body})
    return code


if __name__ == "__main__":
    sys.exit(main())
