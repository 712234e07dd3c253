"""Command-line front end: ``evarbai <subcommand> [options]``.

Results go to stdout as JSON (single results) or CSV (tables). Failures print
a JSON object ``{"error": ..., "message": ...}`` on stderr and exit with
2 (configuration), 3 (degenerate instance) or 4 (horizon cap reached).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import oracle as oracle_mod
from .config import ConfigError, ExperimentConfig, config_from_dict, parse_config
from .evar import evar
from .klinf import kl_inf_lower, kl_inf_upper
from .measures import DiscreteDistribution, RiskLevel
from .oracle import DegenerateInstanceError, characteristic_time, sample_complexity_lower_bound
from .sim import Summary, delta_sweep, run_trial
from .oracles import evar_grid, klinf_primal_grid, tmu_grid

EXIT_CONFIG, EXIT_DEGENERATE, EXIT_HORIZON = 2, 3, 4


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code, self.kind = code, kind


def _load_json_arg(value, what):
    """A JSON literal, or the path of a file holding one."""
    text = value
    if os.path.exists(value):
        with open(value) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(what, f"neither a file nor valid JSON: {exc}") from None


def _dist(value):
    data = _load_json_arg(value, "dist")
    try:
        return DiscreteDistribution.from_pairs(data)
    except (ValueError, TypeError) as exc:
        raise ConfigError("dist", str(exc)) from None


def _risk(alpha):
    try:
        return RiskLevel(alpha)
    except ValueError as exc:
        raise ConfigError("alpha", str(exc)) from None


def _experiment(args, need_delta=True) -> ExperimentConfig:
    """Config file (if any) overlaid with explicit flags."""
    data = {}
    if args.config:
        data = parse_config(args.config).to_dict()
    if getattr(args, "instance", None):
        inst = _load_json_arg(args.instance, "instance")
        data["instance"] = inst["instance"] if isinstance(inst, dict) else inst
    overrides = {"alpha": args.alpha, "trials": getattr(args, "trials", None),
                 "seed": getattr(args, "seed", None), "jobs": args.jobs,
                 "horizon_cap": getattr(args, "horizon_cap", None),
                 "rule": getattr(args, "rule", None)}
    deltas = getattr(args, "deltas", None) or getattr(args, "delta", None)
    if deltas is not None:
        overrides["delta"] = deltas
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    if args.strict_tracking:
        data["strict_tracking"] = True
    if args.out:
        data["out"] = args.out
    if need_delta and "delta" not in data:
        raise ConfigError("delta", "missing required key")
    cfg = config_from_dict(data)
    if cfg.tolerances:
        oracle_mod.set_tolerances(**cfg.tolerances)
    return cfg


def _emit_json(obj, args):
    print(json.dumps(obj, indent=None, sort_keys=False))


def _jsonable(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


# subcommands


def cmd_evar(args):
    d, r = _dist(args.dist), _risk(args.alpha)
    res = evar(d, r)
    out = {"value": res.value, "regime": res.regime, "minimizer": _jsonable(res.minimizer)}
    if args.oracle:
        out["oracle"] = {"evar_grid": evar_grid(d, r)}
    _emit_json(out, args)
    return 0


def cmd_klinf(args):
    d, r = _dist(args.dist), _risk(args.alpha)
    if not 0.0 <= args.nu <= 1.0:
        raise ConfigError("nu", f"{args.nu!r} outside [0, 1]")
    if args.side == "upper":
        sol = kl_inf_upper(d, args.nu, r)
        dual = {"lambda1": _jsonable(sol.lambda1), "lambda3": _jsonable(sol.lambda3)}
    else:
        sol = kl_inf_lower(d, args.nu, r)
        dual = {"z": _jsonable(sol.z), "lambda": _jsonable(sol.lam)}
    out = {"value": _jsonable(sol.value), "dual": dual, "primal": sol.primal.to_pairs()}
    if args.oracle:
        out["oracle"] = {"klinf_primal_grid": _jsonable(
            klinf_primal_grid(d, args.nu, r, args.side, args.oracle_step))}
    _emit_json(out, args)
    return 0


def cmd_oracle(args):
    cfg = _experiment(args, need_delta=False)
    r = RiskLevel(cfg.alpha)
    laws = cfg.bandit().laws
    sol = characteristic_time(laws, r)
    out = {"T": sol.characteristic_time, "weights": [float(w) for w in sol.weights],
           "best_arm": sol.best_arm,
           "per_alternative": [{"arm": c.arm, "x": c.x, "g_value": c.g_value}
                               for c in sol.per_alternative]}
    if args.delta is not None:
        out["lower_bound"] = sample_complexity_lower_bound(laws, r, args.delta, sol)
    if args.oracle:
        out["oracle"] = {"tmu_grid": tmu_grid(laws, r)}
    _emit_json(out, args)
    return 0


def cmd_run(args):
    cfg = _experiment(args)
    r = RiskLevel(cfg.alpha)
    bandit = cfg.bandit()
    rec = run_trial(bandit, r, cfg.deltas[0], cfg.seed, horizon_cap=cfg.horizon_cap,
                    rule=cfg.rule, strict_tracking=cfg.strict_tracking)
    out = {"tau": rec.tau, "recommended": rec.recommended, "correct": rec.correct,
           "trajectory_summary": {"counts": rec.counts, "stopped": rec.stopped,
                                  "seed": rec.seed, "wall_time": rec.wall_time}}
    if args.oracle:
        out["oracle"] = {"tmu_grid": tmu_grid(bandit.laws, r)}
    _emit_json(out, args)
    return 0 if rec.stopped else EXIT_HORIZON


def _mc(cfg, args, columns):
    r = RiskLevel(cfg.alpha)
    bandit = cfg.bandit()
    summaries, records = delta_sweep(bandit, r, cfg.deltas, cfg.trials, cfg.seed, cfg.jobs,
                                     horizon_cap=cfg.horizon_cap, rule=cfg.rule,
                                     strict_tracking=cfg.strict_tracking)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            for recs in records:
                for rec in recs:
                    fh.write(json.dumps(vars(rec)) + "\n")
    extra = []
    if args.oracle:
        extra = [repr(tmu_grid(bandit.laws, r))]
        columns = list(columns) + ["T_grid"]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(columns)
    for s in summaries:
        writer.writerow([repr(getattr(s, c)) for c in columns if c != "T_grid"] + extra)
    undecided = sum(s.undecided for s in summaries)
    return EXIT_HORIZON if undecided else 0


def cmd_mc(args):
    cfg = _experiment(args)
    if len(cfg.deltas) != 1:
        raise ConfigError("delta", "mc takes a single delta; use sweep for a list")
    return _mc(cfg, args, Summary.CSV_COLUMNS)


def cmd_sweep(args):
    cfg = _experiment(args)
    if len(cfg.deltas) < 2:
        raise ConfigError("delta", "sweep needs at least two delta values")
    return _mc(cfg, args, ("delta", "mean_tau", "lower_bound", "ratio"))


def _common(p):
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--out", help="output path (per-trial JSONL for mc and sweep)")
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.add_argument("--oracle", action="store_true", help="add brute-force reference values")
    p.add_argument("--strict-tracking", action="store_true",
                   help="recompute oracle weights at every pull")


def build_parser():
    parser = argparse.ArgumentParser(prog="evarbai",
                                     description="EVaR best-arm identification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evar", help="EVaR of a distribution")
    _common(p)
    p.add_argument("--dist", required=True, help="[[loc, mass], ...] literal or file")
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_evar)

    p = sub.add_parser("klinf", help="KL projection onto an EVaR half-space")
    _common(p)
    p.add_argument("--side", choices=("upper", "lower"), required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--oracle-step", type=float, default=1 / 500,
                   help="simplex step of the brute-force reference")
    p.set_defaults(func=cmd_klinf)

    for name, func, help_ in (("oracle", cmd_oracle, "characteristic time and oracle weights"),
                              ("run", cmd_run, "one Track-and-Stop trial"),
                              ("mc", cmd_mc, "Monte-Carlo batch at one delta"),
                              ("sweep", cmd_sweep, "Monte-Carlo batches over a delta list")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--instance", help="JSON list of arm specs, or a file holding one")
        p.add_argument("--alpha", type=float)
        if name == "sweep":
            p.add_argument("--deltas", type=float, nargs="+")
        else:
            p.add_argument("--delta", type=float)
        if name != "oracle":
            p.add_argument("--seed", type=int)
            p.add_argument("--horizon-cap", type=int)
            p.add_argument("--rule", choices=("tracking", "uniform"))
        if name in ("mc", "sweep"):
            p.add_argument("--trials", type=int)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        err = CliError(EXIT_CONFIG, "config", str(exc))
        err.key = exc.key
    except DegenerateInstanceError as exc:
        err = CliError(EXIT_DEGENERATE, "degenerate_instance", str(exc))
    except (ValueError, OSError) as exc:
        err = CliError(EXIT_CONFIG, "invalid_input", str(exc))
    payload = {"error": err.kind, "message": str(err)}
    if getattr(err, "key", None):
        payload["key"] = err.key
    print(json.dumps(payload), file=sys.stderr)
    return err.code


if __name__ == "__main__":
    sys.exit(main())
