"""Command line entry point: ``cpa-auctions <subcommand> ...``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
Every run echoes its resolved config to stderr; CSV outputs start with a
``# cpa-auctions <cmd> config_sha256=<hash> seed=<seed>`` line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .auction import BidStrategy, PaymentRule
from .competition import METHODS, gamma_sweep
from .distributions import Exponential, LogNormal, Power, Uniform
from .errors import ConfigError, CpaAuctionError, NumericalError, UnsupportedCaseError
from .hjb import HjbConfig, deterministic_plan, min_stable_t_steps, rates, simulate_trajectory, solve
from .simulator import check_asymmetric_equilibrium, run, symmetric_market
from .strategy import (CpaProblem, best_reply, competition_gamma, expected_seller_revenue_at_equilibrium,
                       reserve_sweep, symmetric_equilibrium)
from .tables import emit, render_csv, render_json

PROG = "cpa-auctions"
DIST_FLAGS = ("a", "lo", "hi", "rate", "mu", "sigma", "value")
FIGURES = ("fig1", "fig2", "fig3", "fig4", "sec4-affine", "sec4-asymmetric")


# -- argument types ----------------------------------------------------------

def count(text: str) -> int:
    """Positive integer that may be written as ``1e7``."""
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(val) or val != int(val) or val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(val)


def float_list(text: str) -> list[float]:
    """``0,0.5,1`` or ``start:stop:num`` (inclusive linspace)."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def int_list(text: str) -> list[int]:
    """``2,3,5`` or ``lo-hi`` (inclusive)."""
    try:
        if "-" in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


# -- shared helpers ----------------------------------------------------------

def _dist_record(args):
    if args.family is None:
        return None
    rec = {"family": args.family}
    for key in DIST_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            rec[key] = val
    return rec


def _base_record(args):
    return cfg.load_file(args.config) if getattr(args, "config", None) else {}


def _override(record, key, value):
    if value is not None:
        record[key] = value


def _echo(command, record):
    print(f"{PROG} {command} resolved config: {json.dumps(record, sort_keys=True)}", file=sys.stderr)


def _meta(command, record):
    return f"{PROG} {command} config_sha256={cfg.config_hash(record)} seed={record.get('seed', 0)}"


def _write_table(rows, columns, command, record, out):
    path = emit(render_csv(rows, columns, _meta(command, record)), out)
    if path is not None:
        print(f"wrote {path}", file=sys.stderr)
    return path


def _require(record, keys, where):
    for key in keys:
        if key not in record:
            raise ConfigError(f"{where}: missing required key {key!r}", key=key)


def _int(record, key, where, default=None):
    return cfg.number(record, key, where, default, integer=True)


def _positive_n(record, where):
    n = _int(record, "n", where)
    if n < 2:
        raise ConfigError(f"{where}: 'n' must be >= 2", key="n")
    return n


def _floats(record, key, where):
    vals = record.get(key)
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"{where}: {key!r} must be a nonempty list of numbers", key=key)
    return [cfg.number({key: v}, key, where) for v in vals]


# -- gamma -------------------------------------------------------------------

GAMMA_COLUMNS = ["family", "param", "n", "method", "gamma", "std_error"]


def cmd_gamma(args):
    where = "gamma"
    rec = _base_record(args)
    cfg.check_keys(rec, ("distributions", "n", "method", "samples", "seed"), where=where)
    dist = _dist_record(args)
    if dist is not None:
        rec["distributions"] = [dist]
    _override(rec, "n", args.n)
    _override(rec, "method", args.method)
    _override(rec, "samples", args.samples)
    _override(rec, "seed", args.seed)
    _require(rec, ("distributions", "n"), where)
    if not isinstance(rec["distributions"], list) or not rec["distributions"]:
        raise ConfigError(f"{where}: 'distributions' must be a nonempty list", key="distributions")
    dists = [cfg.parse_distribution(d, f"{where}.distributions[{i}]")
             for i, d in enumerate(rec["distributions"])]
    n_values = rec["n"] if isinstance(rec["n"], list) else [rec["n"]]
    n_values = [_int({"n": n}, "n", where) for n in n_values]
    method = rec.setdefault("method", "quadrature")
    if method not in METHODS:
        raise ConfigError(f"{where}: unknown method {method!r} (one of {', '.join(METHODS)})",
                          key="method")
    samples = _int(rec, "samples", where, 10**6 if method == "monte-carlo" else 0)
    rec["samples"] = samples
    seed = _int(rec, "seed", where, 0)
    rec["seed"] = seed
    _echo(where, rec)
    rows = gamma_sweep(dists, n_values, samples=samples, seed=seed, method=method,
                       workers=args.workers)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        print(f"row {r['family']} {r['param']} n={r['n']}: {r['error']}", file=sys.stderr)
    _write_table(rows, GAMMA_COLUMNS, where, rec, args.out)
    return 1 if len(failed) == len(rows) else 0


# -- best-reply --------------------------------------------------------------

def cmd_best_reply(args):
    where = "best-reply"
    rec = _base_record(args)
    cfg.check_keys(rec, ("value", "price_to_beat", "T", "alpha_cap"), ("value", "price_to_beat", "T"),
                   where)
    problem = CpaProblem(cfg.parse_distribution(rec["value"], f"{where}.value"),
                         cfg.parse_price_to_beat(rec["price_to_beat"], f"{where}.price_to_beat"),
                         cfg.number(rec, "T", where))
    cap = cfg.number(rec, "alpha_cap", where) if "alpha_cap" in rec else None
    _echo(where, rec)
    res = best_reply(problem, alpha_cap=cap)
    row = {"alpha_star": res.alpha_star, "lagrange_lambda": res.lagrange_lambda,
           "binding": res.binding, "achieved_cpa": res.achieved_cpa, "alpha_cap": res.alpha_cap,
           "evaluations": res.evaluations}
    _write_table([row], list(row), where, rec, args.out)
    return 0


# -- equilibrium / revenue ---------------------------------------------------

def _market_basics(args, rec, where, extra=()):
    allowed = ("value", "n", "T", "rule") + tuple(extra)
    cfg.check_keys(rec, allowed, where=where)
    dist = _dist_record(args)
    if dist is not None:
        rec["value"] = dist
    _override(rec, "n", args.n)
    _override(rec, "T", args.T)
    if args.kappa is not None or args.reserve is not None:
        rule = dict(rec.get("rule") or {})
        _override(rule, "kappa", args.kappa)
        _override(rule, "reserve", args.reserve)
        rec["rule"] = rule
    _require(rec, ("value", "n", "T"), where)
    return (cfg.parse_distribution(rec["value"], f"{where}.value"), _positive_n(rec, where),
            cfg.number(rec, "T", where), cfg.parse_rule(rec.get("rule"), f"{where}.rule"))


def cmd_equilibrium(args):
    where = "equilibrium"
    rec = _base_record(args)
    dist, n, T, rule = _market_basics(args, rec, where)
    _echo(where, rec)
    strat = symmetric_equilibrium(dist, n, T, rule)
    row = {"family": dist.family, "param": dist.describe(), "n": n, "T": T, "kappa": rule.kappa,
           "gamma": competition_gamma(dist, n), "slope": strat.slope,
           "expected_seller_revenue": expected_seller_revenue_at_equilibrium(dist, n, T)}
    _write_table([row], list(row), where, rec, args.out)
    return 0


def cmd_revenue(args):
    where = "revenue"
    rec = _base_record(args)
    dist, n, T, rule = _market_basics(args, rec, where, extra=("kappas", "auctions", "seed"))
    _override(rec, "kappas", args.kappas)
    _override(rec, "auctions", args.auctions)
    _override(rec, "seed", args.seed)
    kappas = _floats(rec, "kappas", where) if "kappas" in rec else [rule.kappa]
    auctions = _int(rec, "auctions", where, 10**6)
    seed = _int(rec, "seed", where, 0)
    rec.update(kappas=kappas, auctions=auctions, seed=seed)
    _echo(where, rec)
    analytic = expected_seller_revenue_at_equilibrium(dist, n, T)
    rows = []
    for kappa in kappas:
        r = PaymentRule(kappa, rule.reserve)
        strat = symmetric_equilibrium(dist, n, T, r)
        rep = run(symmetric_market(dist, n, T, strat, r, auctions, seed), args.workers)
        se = rep.revenue_std_error
        rows.append({"kappa": kappa, "slope": strat.slope, "analytic_revenue": analytic,
                     "revenue_per_auction": rep.revenue_per_auction, "std_error": se,
                     "z_score": (rep.revenue_per_auction - analytic) / se if se > 0 else math.nan})
    _write_table(rows, list(rows[0]), where, rec, args.out)
    return 0


# -- reserve sweep -----------------------------------------------------------

GRID_COLUMNS = ["reserve", "multiplier", "payment", "payment_std_error", "value", "value_std_error",
                "value_minus_payment", "cpa", "seller_revenue", "seller_revenue_std_error"]
EQ_COLUMNS = ["reserve", "multiplier", "seller_revenue", "seller_revenue_std_error", "flag"]


def cmd_reserve_sweep(args):
    where = "reserve-sweep"
    rec = _base_record(args)
    dist, n, T, rule = _market_basics(args, rec, where,
                                      extra=("reserves", "multipliers", "auctions", "seed"))
    _override(rec, "reserves", args.reserves)
    _override(rec, "multipliers", args.multipliers)
    _override(rec, "auctions", args.auctions)
    _override(rec, "seed", args.seed)
    _require(rec, ("reserves", "multipliers"), where)
    reserves = _floats(rec, "reserves", where)
    mults = _floats(rec, "multipliers", where)
    auctions = _int(rec, "auctions", where, 10**6)
    seed = _int(rec, "seed", where, 0)
    rec.update(reserves=reserves, multipliers=mults, auctions=auctions, seed=seed)
    _echo(where, rec)
    grid, eq = reserve_sweep(dist, n, T, reserves, mults, auctions, seed, rule.kappa, args.workers)
    if args.out:
        out = Path(args.out)
        _write_table(grid, GRID_COLUMNS, where, rec, out / "reserve_grid.csv")
        _write_table(eq, EQ_COLUMNS, where, rec, out / "reserve_equilibrium.csv")
    elif args.table == "grid":
        _write_table(grid, GRID_COLUMNS, where, rec, None)
    else:
        _write_table(eq, EQ_COLUMNS, where, rec, None)
    return 0


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args):
    where = "simulate"
    rec = _base_record(args)
    _override(rec, "auctions", args.auctions)
    _override(rec, "seed", args.seed)
    market = cfg.parse_market(rec, where)
    resolved = cfg.market_record(market)
    _echo(where, resolved)
    blocks = [] if args.blocks_csv else None
    rep = run(market, args.workers, blocks=blocks)
    report = rep.to_dict()
    for b, obj in zip(rep.bidders, report["bidders"]):
        obj["feasible"] = b.feasible
    doc = {"command": where, "config_sha256": cfg.config_hash(resolved), "config": resolved,
           "report": report}
    path = emit(render_json(doc), args.out)
    if path is not None:
        print(f"wrote {path}", file=sys.stderr)
    if blocks is not None:
        _write_table(blocks, list(blocks[0]) if blocks else ["block"], where, resolved,
                     args.blocks_csv)
    return 0


# -- hjb ---------------------------------------------------------------------

def _hjb_config(args):
    rec = _base_record(args)
    config = cfg.parse_hjb(rec)
    return config, cfg.hjb_record(config)


def _policy_rows(sol, t_stride, x_stride):
    rows = []
    nt = sol.value.shape[0]
    t_idx = sorted(set(range(0, nt, t_stride)) | {nt - 1})
    for k in t_idx:
        for j in range(0, len(sol.x), x_stride):
            alpha = float(sol.alphas[sol.policy_index[k, j]]) if k < sol.policy_index.shape[0] else math.nan
            rows.append({"t": float(sol.t[k]), "x": float(sol.x[j]), "value": float(sol.value[k, j]),
                         "alpha": alpha})
    return rows


def cmd_hjb_solve(args):
    where = "hjb solve"
    config, rec = _hjb_config(args)
    _echo(where, rec)
    sol = solve(config)
    plan = deterministic_plan(config, args.x0)
    summary = {"config": rec, "config_sha256": cfg.config_hash(rec), "dt": config.dt, "dx": config.dx,
               "min_stable_t_steps": min_stable_t_steps(config), "x0": args.x0,
               "policy_at_start": float(sol.alpha_at(0, args.x0)),
               "value_at_start": float(sol.value_at(0, args.x0)),
               "deterministic_plan_alpha": plan.alpha, "deterministic_plan_feasible": plan.feasible}
    if args.out:
        out = Path(args.out)
        _write_table(_policy_rows(sol, args.t_stride, args.x_stride), ["t", "x", "value", "alpha"],
                     where.replace(" ", "-"), rec, out / "hjb_grid.csv")
        emit(render_json(summary), out / "hjb_summary.json")
        print(f"wrote {out / 'hjb_summary.json'}", file=sys.stderr)
    else:
        sys.stdout.write(render_json(summary))
    return 0


TRAJ_COLUMNS = ["controller", "path", "t", "x", "alpha", "value", "cost", "empirical_cpa"]


def _trajectory_rows(records, label, stride):
    rows = []
    for p, rec in enumerate(records):
        nt = len(rec.t)
        for k in sorted(set(range(0, nt, stride)) | {nt - 1}):
            alpha = float(rec.alpha[min(k, len(rec.alpha) - 1)])
            rows.append({"controller": label, "path": p, "t": float(rec.t[k]), "x": float(rec.x[k]),
                         "alpha": alpha, "value": float(rec.value[k]), "cost": float(rec.cost[k]),
                         "empirical_cpa": float(rec.empirical_cpa[k])})
    return rows


def _controller(kind, config, x0, alpha):
    if kind == "hjb":
        return solve(config), "hjb"
    if kind == "constant":
        if alpha is None:
            raise ConfigError("--controller constant needs --alpha", key="alpha")
        return float(alpha), f"constant-{alpha:g}"
    plan = deterministic_plan(config, x0)
    if plan.alpha is None:
        raise ConfigError("deterministic plan undefined for tau = 0", key="tau")
    return plan.alpha, "plan"


def cmd_hjb_simulate(args):
    where = "hjb simulate"
    config, rec = _hjb_config(args)
    rec = dict(rec, x0=args.x0, paths=args.paths, seed=args.seed, controller=args.controller)
    _echo(where, rec)
    ctrl, label = _controller(args.controller, config, args.x0, args.alpha)
    records = simulate_trajectory(ctrl, config, args.x0, args.seed, args.paths)
    pen = np.array([r.terminal_penalty for r in records])
    print(f"mean terminal penalty {pen.mean():.6g} (se {pen.std(ddof=1) / math.sqrt(len(pen)) if len(pen) > 1 else 0:.3g})",
          file=sys.stderr)
    _write_table(_trajectory_rows(records, label, args.stride), TRAJ_COLUMNS, "hjb-simulate", rec,
                 args.out)
    return 0


# -- repro -------------------------------------------------------------------

def _repro_fig1(args, out):
    rec = {"value": {"family": "uniform", "lo": 0.0, "hi": 1.0}, "n": 2, "T": 0.4,
           "reserves": [0.0, 0.1, 0.2, 0.3],
           "multipliers": [round(0.1 + 0.05 * i, 10) for i in range(39)],
           "auctions": args.auctions, "seed": args.seed}
    _echo("repro fig1", rec)
    grid, eq = reserve_sweep(Uniform(0.0, 1.0), 2, 0.4, rec["reserves"], rec["multipliers"],
                             args.auctions, args.seed, 1.0, args.workers)
    _write_table(grid, GRID_COLUMNS, "repro-fig1", rec, out / "fig1_grid.csv")
    _write_table(eq, EQ_COLUMNS, "repro-fig1", rec, out / "fig1_equilibrium.csv")
    if args.plot:
        from .plotting import plot_reserve
        plot_reserve(grid, 0.4, out / "fig1.png")


def _repro_fig2(args, out):
    rec = {"a": [1.0, 5.0], "alpha": "0:5:201", "T": 0.8}
    _echo("repro fig2", rec)
    rows = []
    for a in rec["a"]:
        for alpha in np.linspace(0.0, 5.0, 201):
            R, C = rates(a, float(alpha))
            rows.append({"a": a, "alpha": float(alpha), "R": float(R), "C": float(C),
                         "slack_rate": float(0.8 * R - C)})
    _write_table(rows, ["a", "alpha", "R", "C", "slack_rate"], "repro-fig2", rec, out / "fig2_rates.csv")
    if args.plot:
        from .plotting import plot_rates
        plot_rates(rows, out / "fig2.png")


def _repro_fig3(args, out):
    config = HjbConfig()
    paths = 10
    rec = dict(cfg.hjb_record(config), x0=0.0, paths=paths, seed=args.seed)
    _echo("repro fig3", rec)
    sol = solve(config)
    plan = deterministic_plan(config, 0.0)
    rows = _trajectory_rows(simulate_trajectory(sol, config, 0.0, args.seed, paths), "stochastic", 40)
    rows += _trajectory_rows(simulate_trajectory(plan.alpha, config, 0.0, args.seed, paths),
                             "deterministic", 40)
    _write_table(rows, TRAJ_COLUMNS, "repro-fig3", rec, out / "fig3_trajectories.csv")
    if args.plot:
        from .plotting import plot_trajectories
        plot_trajectories(rows, out / "fig3.png")


def _repro_fig4(args, out):
    families = {"power": ([0.25, 0.5, 1.0, 2.0, 3.0, 5.0], lambda p: Power(p)),
                "exponential": ([0.5, 1.0, 2.0, 5.0], lambda p: Exponential(p)),
                "lognormal": ([0.25, 0.5, 1.0, 1.5], lambda p: LogNormal(0.0, p))}
    n_values = [2, 3, 5, 10]
    method = "monte-carlo" if args.samples else "quadrature"
    rec = {"params": {k: v[0] for k, v in families.items()}, "n": n_values, "method": method,
           "samples": args.samples or 0, "seed": args.seed}
    _echo("repro fig4", rec)
    rows = []
    for fam, (params, make) in families.items():
        sweep = gamma_sweep([make(p) for p in params], n_values, samples=args.samples, seed=args.seed,
                            method=method, workers=args.workers)
        for row in sweep:
            row["param_value"] = params[[make(p).describe() for p in params].index(row["param"])]
        rows += sweep
    _write_table(rows, ["family", "param", "param_value", "n", "method", "gamma", "std_error", "error"],
                 "repro-fig4", rec, out / "fig4_gamma.csv")
    if args.plot:
        from .plotting import plot_gamma
        plot_gamma(rows, out / "fig4.png")


SEC4_COLUMNS = ["profile", "bidder", "slope", "intercept", "wins", "empirical_cpa", "cpa_std_error",
                "value_per_auction", "value_std_error", "cost_per_auction", "profit_in_value"]


def _repro_sec4_affine(args, out):
    profiles = {"2v+1,2v": (BidStrategy(2.0, 1.0), BidStrategy(2.0)),
                "3v,3v": (BidStrategy(3.0), BidStrategy(3.0))}
    rec = {"value": {"family": "exponential", "rate": 1.0}, "T": 1.0,
           "profiles": list(profiles), "auctions": args.auctions, "seed": args.seed}
    _echo("repro sec4-affine", rec)
    rows = []
    for name, (s1, s2) in profiles.items():
        market = symmetric_market(Exponential(1.0), 2, 1.0, s1, auctions=args.auctions, seed=args.seed)
        rep = run(market.with_strategy(1, s2), args.workers)
        for i, (b, s) in enumerate(zip(rep.bidders, (s1, s2))):
            rows.append({"profile": name, "bidder": i + 1, "slope": s.slope, "intercept": s.intercept,
                         "wins": b.wins, "empirical_cpa": b.empirical_cpa,
                         "cpa_std_error": b.cpa_std_error, "value_per_auction": b.value_per_auction,
                         "value_std_error": b.value_std_error, "cost_per_auction": b.cost_per_auction,
                         "profit_in_value": b.profit_in_value})
    _write_table(rows, SEC4_COLUMNS, "repro-sec4-affine", rec, out / "sec4_affine.csv")


def _repro_sec4_asymmetric(args, out):
    rec = {"value": {"family": "uniform", "lo": 2.0, "hi": 3.0}, "T": 1.0, "profile": [0.0, 6.0],
           "deviation_grid": "0:8:17", "auctions": args.auctions, "seed": args.seed}
    _echo("repro sec4-asymmetric", rec)
    res = check_asymmetric_equilibrium(auctions=args.auctions, seed=args.seed, workers=args.workers)
    _write_table(res["rows"], ["alpha1", "wins1", "cpa1", "value1", "feasible1", "cpa2", "feasible2"],
                 "repro-sec4-asymmetric", rec, out / "sec4_asymmetric.csv")
    print(f"profile (0, 6) is an equilibrium on the deviation grid: {res['is_equilibrium']}",
          file=sys.stderr)


REPRO = {"fig1": _repro_fig1, "fig2": _repro_fig2, "fig3": _repro_fig3, "fig4": _repro_fig4,
         "sec4-affine": _repro_sec4_affine, "sec4-asymmetric": _repro_sec4_asymmetric}


def cmd_repro(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.plot and args.figure.startswith("sec4"):
        print(f"--plot: {args.figure} is a table only; no figure written", file=sys.stderr)
    REPRO[args.figure](args, out)
    return 0


# -- parser ------------------------------------------------------------------

def _add_dist_flags(p):
    p.add_argument("--family", choices=sorted(cfg._FAMILY_FIELDS))
    for key in DIST_FLAGS:
        p.add_argument(f"--{key}", type=float, help=f"distribution parameter {key}")


def _add_market_flags(p):
    _add_dist_flags(p)
    p.add_argument("--n", type=int, help="number of bidders")
    p.add_argument("--T", type=float, help="target CPA")
    p.add_argument("--kappa", type=float, help="payment mix: 1 second price, 0 first price")
    p.add_argument("--reserve", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--out", help="output path (stdout when omitted)")
        return p

    p = command("gamma", cmd_gamma, "competition factor table")
    p.add_argument("--config", help="JSON record {distributions, n, method, samples, seed}")
    _add_dist_flags(p)
    p.add_argument("--n", type=int_list, help="bidder counts: 2,3,5 or 2-10")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--samples", type=count)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)

    p = command("best-reply", cmd_best_reply, "optimal linear multiplier against a price to beat")
    p.add_argument("--config", required=True, help="JSON record {value, price_to_beat, T, alpha_cap}")

    p = command("equilibrium", cmd_equilibrium, "symmetric equilibrium slope")
    p.add_argument("--config", help="JSON record {value, n, T, rule}")
    _add_market_flags(p)

    p = command("revenue", cmd_revenue, "seller revenue at equilibrium, analytic and simulated")
    p.add_argument("--config", help="JSON record {value, n, T, rule, kappas, auctions, seed}")
    _add_market_flags(p)
    p.add_argument("--kappas", type=float_list)
    p.add_argument("--auctions", type=count)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)

    p = command("reserve-sweep", cmd_reserve_sweep, "payments and values over reserve x multiplier")
    p.add_argument("--config", help="JSON record {value, n, T, rule, reserves, multipliers, auctions, seed}")
    _add_market_flags(p)
    p.add_argument("--reserves", type=float_list)
    p.add_argument("--multipliers", type=float_list)
    p.add_argument("--auctions", type=count)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--table", choices=("equilibrium", "grid"), default="equilibrium",
                   help="table printed when --out (a directory here) is omitted")

    p = command("simulate", cmd_simulate, "Monte Carlo market simulation (JSON report)")
    p.add_argument("--config", required=True, help="JSON market record")
    p.add_argument("--auctions", type=count)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--blocks-csv", help="also write per-block totals here")

    hjb = sub.add_parser("hjb", help="dynamic bidder: HJB solver and trajectories")
    hsub = hjb.add_subparsers(dest="hjb_command", required=True)
    p = hsub.add_parser("solve", help="solve the HJB equation")
    p.set_defaults(handler=cmd_hjb_solve)
    p.add_argument("--config", help="JSON record of HjbConfig fields")
    p.add_argument("--out", help="directory for hjb_grid.csv and hjb_summary.json")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--t-stride", type=int, default=100)
    p.add_argument("--x-stride", type=int, default=1)
    p = hsub.add_parser("simulate", help="simulate slack trajectories")
    p.set_defaults(handler=cmd_hjb_simulate)
    p.add_argument("--config", help="JSON record of HjbConfig fields")
    p.add_argument("--out")
    p.add_argument("--controller", choices=("hjb", "plan", "constant"), default="hjb")
    p.add_argument("--alpha", type=float, help="multiplier for --controller constant")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--paths", type=count, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stride", type=int, default=10)

    p = sub.add_parser("repro", help="canned experiments")
    p.set_defaults(handler=cmd_repro)
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--out", default="repro-out", help="output directory")
    p.add_argument("--auctions", type=count, default=10**6)
    p.add_argument("--samples", type=count, help="fig4: Monte Carlo samples (quadrature when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--plot", action="store_true", help="also render PNGs (needs matplotlib)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, UnsupportedCaseError) as exc:
        key = getattr(exc, "key", None)
        print(f"{PROG}: config error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        hint = getattr(exc, "suggested_t_steps", None)
        print(f"{PROG}: numerical error: {exc}", file=sys.stderr)
        if hint:
            print(f"{PROG}: hint: set t_steps >= {hint}", file=sys.stderr)
        return 1
    except CpaAuctionError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
