"""Command-line front end.

    deterrence <subcommand> --config FILE [--set key=value]... [--out DIR]

Exit codes: 0 success, 2 config/domain error, 3 solver non-convergence,
4 divergent discounted payoff.  Errors are reported as one JSON line on
stderr.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .beliefs import belief_update, logit
from .config import dump_config, load_config
from .equilibrium import solve_equilibrium
from .estimators import HJBController, PathIntegralController
from .exceptions import DeterrenceError
from .hjb import cross_validate
from .model import simulate_paths
from .payoffs import FLOW, LUMP_SUM, STRONG, WEAK, entrant_payoff_mc, incumbent_payoff_mc
from .stopping import ABOVE, BELOW, StoppingRule

SUBCOMMANDS = ("simulate", "solve-pic", "solve-hjb", "cross-validate", "equilibrium", "evaluate")


def _controller(cls, cfg, **extra):
    return cls(params=cfg.params, market=cfg.market, problem=cfg.problem, horizon=cfg.t,
               n_steps=cfg.n_steps, x_min=cfg.x_min, x_max=cfg.x_max, n_nodes=cfg.n_nodes,
               spacing=cfg.spacing, control_levels=cfg.levels, epsilon=cfg.epsilon, **extra)


def _pic(cfg):
    return _controller(PathIntegralController, cfg).fit()


def _hjb(cfg):
    return _controller(HJBController, cfg, time_stepping=cfg.scheme,
                       cfl_safety=cfg.cfl_safety).fit()


def cmd_simulate(cfg, out, tag):
    grid = cfg.grids.time
    ens = simulate_paths(cfg.params, cfg.u1, cfg.u2, grid, cfg.x0, cfg.n_paths, cfg.seed,
                         threads=cfg.threads)
    beliefs = None
    if cfg.with_beliefs:
        # controls at the horizon repeat the last applied ones
        u1 = np.c_[ens.controls_u1, ens.controls_u1[:, -1:]]
        u2 = np.c_[ens.controls_u2, ens.controls_u2[:, -1:]]
        pos = ens.states > 0
        beliefs = np.full(ens.states.shape, np.nan)
        beliefs[pos] = belief_update(ens.states[pos], cfg.x0, logit(cfg.p0), u1[pos], u2[pos],
                                     cfg.params)
    return [io.write_paths_csv(out / "paths.csv", ens, beliefs, tag)]


def cmd_solve_pic(cfg, out, tag):
    est = _pic(cfg)
    return [io.write_policy_csv(out / "policy_pic.csv", est.value_surface_, est.policy_, tag)]


def cmd_solve_hjb(cfg, out, tag):
    est = _hjb(cfg)
    return [io.write_policy_csv(out / "policy_hjb.csv", est.value_surface_, est.policy_, tag)]


def cmd_cross_validate(cfg, out, tag):
    a, b = _pic(cfg), _hjb(cfg)
    report = cross_validate((a.value_surface_, a.policy_), (b.value_surface_, b.policy_),
                            cfg.tol_value, cfg.tol_policy_agreement)
    return [io.write_report_csv(out / "cross_validation.csv", report, tag)]


def cmd_equilibrium(cfg, out, tag):
    sol = solve_equilibrium(cfg.market, cfg.params, cfg.grids, cfg.x0, max_iter=cfg.max_iter,
                            tol=cfg.tol, damping=cfg.damping, epsilon=cfg.epsilon,
                            hazard=cfg.hazard, n_paths=cfg.n_paths, seed=cfg.seed,
                            threads=cfg.threads)
    return [io.write_equilibrium_csv(out / "equilibrium.csv", sol, tag),
            io.write_diagnostics_csv(out / "diagnostics.csv", sol, tag)]


def _constant_rule(kind, value, grids, hazard=0.0):
    if value is None:
        return StoppingRule.never(grids.time, grids.state)
    return StoppingRule(kind, grids.time, grids.state,
                        np.full(grids.time.n_steps + 1, float(value)), hazard)


def cmd_evaluate(cfg, out, tag):
    grids = cfg.grids
    m, p = cfg.market, cfg.params
    ens = simulate_paths(p, cfg.u1, cfg.u2, grids.time, cfg.x0, cfg.n_paths, cfg.seed,
                         threads=cfg.threads)
    entry = _constant_rule(ABOVE, cfg.entry_threshold, grids)
    reveal = _constant_rule(BELOW, cfg.revelation_threshold, grids, cfg.hazard)
    entries = [
        ("incumbent_payoff", incumbent_payoff_mc(ens, reveal, m, p, grids.time)),
        ("entrant_payoff_weak", entrant_payoff_mc(ens, entry, WEAK, m, p, grids.time, LUMP_SUM)),
        ("entrant_payoff_weak_flow", entrant_payoff_mc(ens, entry, WEAK, m, p, grids.time, FLOW)),
        ("entrant_payoff_strong", entrant_payoff_mc(ens, entry, STRONG, m, p, grids.time, LUMP_SUM)),
    ]
    return [io.write_payoff_csv(out / "payoffs.csv", [(q, e, cfg.seed) for q, e in entries], tag)]


COMMANDS = {
    "simulate": cmd_simulate,
    "solve-pic": cmd_solve_pic,
    "solve-hjb": cmd_solve_hjb,
    "cross-validate": cmd_cross_validate,
    "equilibrium": cmd_equilibrium,
    "evaluate": cmd_evaluate,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="deterrence", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="scenario file (key = value lines)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", help="output directory (overrides out_dir)")
    return ap


def _fail(exc):
    payload = {"error": type(exc).__name__, "exit_code": exc.exit_code,
               "field": getattr(exc, "field", None), "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return exc.exit_code


def run(subcommand, config_path=None, overrides=(), out=None):
    """Run one subcommand; returns ``(exit_code, written_paths)``."""
    try:
        cfg = load_config(config_path, overrides)
        out_dir = Path(out if out is not None else cfg.out_dir)
        tag = f"config_sha256={cfg.digest()} seed={cfg.seed}"
        written = COMMANDS[subcommand](cfg, out_dir, tag)
        (out_dir / "config.resolved").write_text(dump_config(cfg))
        return 0, written
    except DeterrenceError as exc:
        return _fail(exc), []


def main(argv=None):
    args = build_parser().parse_args(argv)
    code, _ = run(args.subcommand, args.config, args.overrides, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
