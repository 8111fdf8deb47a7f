"""Command-line front end.

Subcommands: region, pin, extort, payoff, sweep, bounds, check.  Every
command accepts ``--config file.json`` whose keys mirror the long flag names
(``n``, ``r``, ``pcc``, ...); flags win over the file, the file wins over
defaults.  Exit codes: 0 success, 2 invalid input, 3 infeasible parameters,
4 failed verification check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .exceptions import (
    DegenerateFactor,
    InfeasibleExtortion,
    InfeasiblePinning,
    InvalidGame,
    NonErgodicChain,
    SingularStrategy,
)
from .extortion import (
    chi_bounds,
    effective_ratio_bound,
    effective_ratio_limit,
    extortion_strategy,
    phi_max,
)
from .game import GameSpec, ReducedStrategy, expand_strategy, payoff_matrix, state_label
from .impossibility import (
    collusion_feasibility,
    pinning_alphas,
    self_pin_feasibility,
    single_player_feasibility,
)
from .markov import CROSS_CHECK_TOL, determinant_ratio, expected_payoffs
from .pinning import (
    feasible_region,
    max_factor_for_pinning,
    pinning_bounds,
    pinning_params,
    pinning_strategy,
)
from .simulator import DEFAULT_DISCARD, GENERATOR_KINDS, OpponentGenerator, analytic_sweep, sweep

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_CHECK = 0, 2, 3, 4

DEFAULTS = {
    "region": {"format": "csv"},
    "pin": {"format": "json"},
    "extort": {"format": "json"},
    "payoff": {"format": "json", "check": False},
    "sweep": {
        "format": "csv", "opponents": "uniform_random_reduced", "trials": 1000,
        "rounds": 100_000, "discard": DEFAULT_DISCARD, "jobs": 1, "analytic": False,
    },
    "bounds": {"format": "csv", "mode": "pin", "n_range": "3:64"},
    "check": {"format": "json", "seed": 0, "samples": 1000, "profiles": 100},
}
# nested RunConfig layout accepted in config files
NESTED_KEYS = {("game", "n_players"): "n", ("game", "factor"): "r",
               ("output", "format"): "format", ("output", "path"): "out"}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no infinities
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(cfg, meta, body: dict, table=None):
    """Write the result as JSON or as CSV plus metadata.

    For CSV written to a file the metadata goes to ``<path>.meta.json``;
    on stdout it goes to stderr as one JSON line.
    """
    out = cfg.get("out")
    if cfg["format"] == "json":
        text = _dump_json({"meta": meta, **body})
        if out:
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    if table is None:
        raise UsageError(f"{meta['command']} has no CSV form; use --format json")
    text = _csv_text(*table)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        with open(out + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_dump_json({"meta": meta, **{k: v for k, v in body.items() if k != "rows"}}))
    else:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps(_jsonable(meta), sort_keys=True) + "\n")


def _meta(cfg, command, spec=None):
    params = {k: v for k, v in cfg.items() if k not in ("out", "config", "format", "command")}
    meta = {"command": command, "parameters": params, "seed": cfg.get("seed"),
            "version": __version__}
    if spec is not None:
        meta["spec"] = {"n_players": spec.n_players, "factor": spec.factor}
    return meta


def _spec(cfg) -> GameSpec:
    if cfg.get("n") is None or cfg.get("r") is None:
        raise UsageError("--n and --r are required")
    n = cfg["n"]
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return GameSpec(n, float(cfg["r"]))


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def parse_strategy(spec: GameSpec, text: str) -> ReducedStrategy:
    """Parse a strategy description.

    Accepted forms: ``allc``, ``alld``, ``wsls``, ``repeat``, ``const:P``,
    ``pin:PCC,PDD``, ``extort:CHI`` or ``extort:CHI,PHI``, and 2N
    comma-separated numbers ``pc[0],...,pc[N-1],pd[0],...,pd[N-1]``.
    """
    n = spec.n_players
    text = str(text).strip()
    name, _, arg = text.partition(":")
    name = name.lower()
    try:
        if name == "allc":
            return ReducedStrategy.always_cooperate(n)
        if name == "alld":
            return ReducedStrategy.always_defect(n)
        if name == "wsls":
            return ReducedStrategy.wsls(n)
        if name == "repeat":
            return ReducedStrategy.repeat(n)
        values = [float(v) for v in (arg if arg else text).split(",")]
    except ValueError:
        raise UsageError(f"cannot parse strategy {text!r}") from None
    if name == "const" and len(values) == 1:
        return ReducedStrategy.constant(n, values[0])
    if name == "pin" and len(values) == 2:
        return pinning_strategy(spec, *values)
    if name == "extort" and len(values) in (1, 2):
        return extortion_strategy(spec, *values)
    if not arg and len(values) == 2 * n:
        try:
            return ReducedStrategy.from_array(values)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"cannot parse strategy {text!r} for N={n}")


def _strategy_body(spec, s: ReducedStrategy):
    full = expand_strategy(spec, s, 1)
    return {
        "reduced": {"pc": s.pc, "pd": s.pd},
        "full": full,
        "states": [state_label(i, spec.n_players) for i in range(spec.n_states)],
    }


def _strategy_table(spec, s):
    rows = [("pc", i, "", v) for i, v in enumerate(s.pc)]
    rows += [("pd", i, "", v) for i, v in enumerate(s.pd)]
    full = expand_strategy(spec, s, 1)
    rows += [("full", i, state_label(i, spec.n_players), v) for i, v in enumerate(full)]
    return ("vector", "index", "state", "value"), rows


def cmd_region(cfg):
    spec = _spec(cfg)
    region = feasible_region(spec)
    meta = _meta(cfg, "region", spec)
    body = {
        "case": region.case_tag,
        "vertices": [list(v) for v in region.vertices],
        "excluded_points": [list(v) for v in region.excluded_points],
        "constraints": [label for _, label in region.halfplanes],
        "area": region.area,
    }
    if not region.is_empty:
        body["pinned_total_bounds"] = list(pinning_bounds(spec))
        if region.case_tag == "critical_r":
            body["bounds_note"] = "open range at r = N/(N-1); the limits are reported"
    meta.update(case=region.case_tag, excluded_points=body["excluded_points"],
                vertex_count=len(region.vertices))
    rows = [(x, y, i) for i, (x, y) in enumerate(region.vertices)]
    _emit(cfg, meta, body, (("p_cc", "p_dd", "vertex_order"), rows))
    sys.stderr.write(f"case={region.case_tag} vertices={len(region.vertices)}\n")
    return EXIT_OK


def cmd_pin(cfg):
    _require(cfg, "pcc", "pdd")
    spec = _spec(cfg)
    s = pinning_strategy(spec, cfg["pcc"], cfg["pdd"])
    params = pinning_params(spec, cfg["pcc"], cfg["pdd"])
    body = _strategy_body(spec, s)
    body.update(mu=params.mu, xi=params.xi, pinned_total=params.pinned_total,
                pinned_mean=params.pinned_total / (spec.n_players - 1))
    meta = _meta(cfg, "pin", spec)
    _emit(cfg, meta, body, _strategy_table(spec, s))
    return EXIT_OK


def cmd_extort(cfg):
    _require(cfg, "chi")
    spec = _spec(cfg)
    s = extortion_strategy(spec, cfg["chi"], cfg.get("phi"))
    phi = cfg.get("phi")
    if phi is None:
        phi = phi_max(spec, cfg["chi"]) / 2
    bounds = chi_bounds(spec)
    body = _strategy_body(spec, s)
    body.update(chi=float(cfg["chi"]), phi=float(phi), phi_max=phi_max(spec, cfg["chi"]),
                chi_bounds=[bounds.lower, bounds.upper],
                effective_ratio=float(cfg["chi"]) * (spec.n_players - 1))
    meta = _meta(cfg, "extort", spec)
    _emit(cfg, meta, body, _strategy_table(spec, s))
    return EXIT_OK


def cmd_payoff(cfg):
    spec = _spec(cfg)
    players = cfg.get("players") or []
    if len(players) != spec.n_players:
        raise UsageError(f"need exactly {spec.n_players} --player options, got {len(players)}")
    profile = [parse_strategy(spec, p) for p in players]
    payoffs = expected_payoffs(spec, profile, check=bool(cfg.get("check")))
    body = {"payoffs": payoffs, "total": float(payoffs.sum()),
            "opponent_total": float(payoffs[1:].sum())}
    meta = _meta(cfg, "payoff", spec)
    rows = [(k, v) for k, v in enumerate(payoffs, start=1)]
    _emit(cfg, meta, body, (("player", "payoff"), rows))
    return EXIT_OK


def _generator(cfg) -> OpponentGenerator:
    kind = cfg["opponents"]
    if kind == "uniform":
        kind = "uniform_random_reduced"
    if kind not in GENERATOR_KINDS:
        raise UsageError(f"unknown opponents {kind!r}; choose from {', '.join(GENERATOR_KINDS)}")
    try:
        return OpponentGenerator(kind, cfg.get("p"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(cfg):
    _require(cfg, "focal")
    if cfg.get("seed") is None:
        raise UsageError("--seed is required for sweep")
    spec = _spec(cfg)
    focal = parse_strategy(spec, cfg["focal"])
    gen = _generator(cfg)
    if cfg["analytic"]:
        data = analytic_sweep(spec, focal, gen, int(cfg["trials"]), int(cfg["seed"]))
    else:
        data = sweep(spec, focal, gen, int(cfg["trials"]), int(cfg["rounds"]), int(cfg["seed"]),
                     discard=int(cfg["discard"]), n_jobs=int(cfg["jobs"]))
    meta = _meta(cfg, "sweep", spec)
    meta["parameters"].pop("jobs", None)  # scheduling does not change the data
    meta["dataset"] = data.meta
    rows = list(data.rows())
    body = {"rows": [list(r) for r in rows]}
    _emit(cfg, meta, body, (("trial", "focal_payoff", "mean_opponent_payoff"), rows))
    return EXIT_OK


def _n_range(text):
    try:
        lo, hi = (int(v) for v in str(text).split(":"))
    except ValueError:
        raise UsageError(f"--n-range must look like A:B, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise UsageError(f"--n-range needs 2 <= A <= B, got {text!r}")
    return range(lo, hi + 1)


def cmd_bounds(cfg):
    ns = _n_range(cfg["n_range"])
    mode = cfg["mode"]
    meta = _meta(cfg, "bounds")
    if mode == "pin":
        rows = [(n, max_factor_for_pinning(n)) for n in ns]
        header = ("n", "r_max")
        body = {"rows": [list(r) for r in rows]}
    elif mode == "extort":
        _require(cfg, "r")
        r = float(cfg["r"])
        if not r > 1:
            raise InvalidGame(f"factor must satisfy r > 1, got r={r}")
        rows = [(n, r, effective_ratio_bound(n, r)) for n in ns]
        header = ("n", "r", "effective_ratio")
        body = {"rows": [list(row) for row in rows], "limit": effective_ratio_limit(r)}
        meta["limit"] = effective_ratio_limit(r)
    else:
        raise UsageError(f"--mode must be pin or extort, got {mode!r}")
    _emit(cfg, meta, body, (header, rows))
    return EXIT_OK


def _control_point(spec):
    region = feasible_region(spec)
    if region.is_empty:
        return None
    if region.contains(0.08, 0.31):
        return 0.08, 0.31
    v = np.asarray(region.vertices)
    return tuple(v.mean(axis=0))


def cmd_check(cfg):
    spec = _spec(cfg)
    seed = int(cfg["seed"])
    checks = {}

    sp = self_pin_feasibility(spec)
    checks["self_pin_infeasible"] = {
        "passed": not sp.feasible, "lp_distance": sp.lp_distance, "witness": sp.witness,
    }

    point = _control_point(spec) if spec.n_players >= 3 else None
    if point is None:
        checks["collusion_pinning_target"] = {"passed": True, "skipped": True,
                                              "reason": "no pinning strategy or N < 3"}
    else:
        alphas = pinning_alphas(spec, *point, targets=[3])
        rep = collusion_feasibility(spec, alphas, samples=int(cfg["samples"]), seed=seed)
        # the same control point aimed at all of player 1's opponents is an
        # ordinary pinning strategy, so player 1 alone must reach it
        own = pinning_alphas(spec, *point, targets=range(2, spec.n_players + 1))
        control, _ = single_player_feasibility(spec, own, player=1)
        checks["collusion_pinning_target"] = {
            "passed": rep.residual > 1e-3 and control < 1e-9,
            "control_point": list(point), "alphas": alphas, "residual": rep.residual,
            "positive_control_residual": control, "starts": rep.starts,
            "cross_product_gap": rep.cross_product_gap,
        }
    r = spec.factor
    if spec.n_players == 3 and r / 3 + 1 < r:
        # with mu < 0 and xi/|mu| strictly inside [r/3 + 1, r] every target of
        # the joint column is reachable, so the pair does pin player 3
        mu = -0.1
        xi = -mu * (r / 3 + 1 + r) / 2
        rep = collusion_feasibility(spec, [xi, 0.0, 0.0, mu], samples=int(cfg["samples"]), seed=seed)
        checks["collusion_counterexample"] = {
            "informational": True, "passed": True, "alphas": [xi, 0.0, 0.0, mu],
            "consistent": rep.consistent, "residual": rep.residual, "starts": rep.starts,
        }

    rng = np.random.default_rng(seed)
    worst, used = 0.0, 0
    if spec.n_players <= 10:
        for _ in range(int(cfg["profiles"])):
            profile = [ReducedStrategy.random(spec.n_players, rng) for _ in range(spec.n_players)]
            try:
                stat = expected_payoffs(spec, profile)
            except NonErgodicChain:
                continue
            u = payoff_matrix(spec)
            det = np.array([determinant_ratio(spec, profile, u[k]) for k in range(spec.n_players)])
            worst = max(worst, float(np.max(np.abs(det - stat))))
            used += 1
    checks["determinant_vs_stationary"] = {
        "passed": worst < CROSS_CHECK_TOL, "max_abs_error": worst, "profiles": used,
        "skipped": spec.n_players > 10,
    }
    all_passed = all(c["passed"] for c in checks.values())
    meta = _meta(cfg, "check", spec)
    body = {"checks": checks, "passed": all_passed}
    _emit(cfg, meta, body)
    for name, c in sorted(checks.items()):
        sys.stderr.write(f"{'PASS' if c['passed'] else 'FAIL'} {name}\n")
    return EXIT_OK if all_passed else EXIT_CHECK


COMMANDS = {
    "region": cmd_region, "pin": cmd_pin, "extort": cmd_extort, "payoff": cmd_payoff,
    "sweep": cmd_sweep, "bounds": cmd_bounds, "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zdpgg", description="Zero-determinant strategies in the N-player public goods game.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int)

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--n", type=int, help="number of players N")
    game.add_argument("--r", type=float, help="multiplication factor r")

    sub.add_parser("region", parents=[common, game], help="feasible pinning region")
    p = sub.add_parser("pin", parents=[common, game], help="pinning strategy")
    p.add_argument("--pcc", type=float)
    p.add_argument("--pdd", type=float)
    p = sub.add_parser("extort", parents=[common, game], help="extortion strategy")
    p.add_argument("--chi", type=float)
    p.add_argument("--phi", type=float)
    p = sub.add_parser("payoff", parents=[common, game], help="long-run payoffs of a profile")
    p.add_argument("--player", dest="players", action="append",
                   help="strategy of the next player; repeat N times")
    p.add_argument("--check", action="store_const", const=True,
                   help="cross-check against the determinant route")
    p = sub.add_parser("sweep", parents=[common, game], help="scatter data for a focal strategy")
    p.add_argument("--focal")
    p.add_argument("--opponents", help="opponent generator: " + ", ".join(GENERATOR_KINDS))
    p.add_argument("--p", type=float, help="probability for --opponents constant")
    p.add_argument("--trials", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--discard", type=int)
    p.add_argument("--jobs", type=int, help="worker threads, -1 for all CPUs")
    p.add_argument("--analytic", action="store_const", const=True,
                   help="stationary payoffs instead of simulation")
    p = sub.add_parser("bounds", parents=[common], help="r_max(N) or chi_max(N-1) tables")
    p.add_argument("--mode", choices=("pin", "extort"))
    p.add_argument("--n-range", dest="n_range")
    p.add_argument("--r", type=float)
    p = sub.add_parser("check", parents=[common, game], help="impossibility and cross checks")
    p.add_argument("--samples", type=int, help="collusion multi-starts")
    p.add_argument("--profiles", type=int, help="random profiles for the cross check")
    return parser


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config file must hold a JSON object")
    flat = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            for sub_key, sub_value in value.items():
                if (key, sub_key) not in NESTED_KEYS:
                    raise UsageError(f"unknown config key {key}.{sub_key}")
                flat[NESTED_KEYS[key, sub_key]] = sub_value
        else:
            flat[key.replace("-", "_")] = value
    return flat


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over per-command defaults."""
    flags = {k: v for k, v in vars(args).items() if v is not None}
    cfg = dict(DEFAULTS[args.command])
    if flags.get("config"):
        file_cfg = _load_config(flags["config"])
        known = set(vars(args))
        unknown = sorted(set(file_cfg) - known)
        if unknown:
            raise UsageError(f"unknown config key(s) for {args.command}: {', '.join(unknown)}")
        cfg.update({k: v for k, v in file_cfg.items() if v is not None})
    cfg.update(flags)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, InvalidGame, DegenerateFactor) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (InfeasiblePinning, InfeasibleExtortion) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        if exc.inequality:
            sys.stderr.write(f"violated: {exc.inequality}\n")
        return EXIT_INFEASIBLE
    except (SingularStrategy, NonErgodicChain) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
