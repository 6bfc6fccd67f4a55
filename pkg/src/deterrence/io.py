"""CSV writers for every output of the package.

Floats are written with 17 significant digits so files round-trip exactly.
An optional first comment line records provenance (config hash and seed).
"""
import csv
from pathlib import Path

import numpy as np


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(path, columns, rows, comment=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    """Rows as dicts, skipping comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_paths_csv(path, ensemble, beliefs=None, comment=None):
    """``path_id,step,time,x,u1,u2[,z]``; the horizon row has empty controls."""
    cols = ["path_id", "step", "time", "x", "u1", "u2"] + (["z"] if beliefs is not None else [])
    n = ensemble.n_steps

    def rows():
        for i in range(ensemble.n_paths):
            for k in range(n + 1):
                u1 = ensemble.controls_u1[i, k] if k < n else None
                u2 = ensemble.controls_u2[i, k] if k < n else None
                row = [i, k, ensemble.times[k], ensemble.states[i, k], u1, u2]
                if beliefs is not None:
                    row.append(beliefs[i, k])
                yield row

    return write_csv(path, cols, rows(), comment)


def write_policy_csv(path, surface, policy, comment=None):
    times, nodes = surface.time_grid.times, surface.state_grid.nodes
    rows = ([k, j, times[k], nodes[j], policy.controls[k, j], surface.values[k, j]]
            for k in range(times.size) for j in range(nodes.size))
    return write_csv(path, ["time_index", "state_index", "time", "x", "u_star", "value"], rows, comment)


def write_report_csv(path, report, comment=None):
    return write_csv(path, ["metric", "value", "threshold", "pass"], report.rows(), comment)


def write_payoff_csv(path, entries, comment=None):
    """``entries``: iterable of ``(quantity, Estimate, seed)``."""
    rows = ([q, e.estimate, e.std_error, e.n_paths, seed] for q, e, seed in entries)
    return write_csv(path, ["quantity", "estimate", "std_error", "n_paths", "seed"], rows, comment)


def write_equilibrium_csv(path, solution, comment=None):
    """Thresholds per time node; the control column is the incumbent's
    signaling level at the revelation threshold (clamped to the grid)."""
    entry, reveal = solution.entrant_entry_rule, solution.revelation_rule
    times = entry.time_grid.times
    u_at = solution.incumbent_policy.lookup(times, reveal.thresholds)
    rows = ([k, times[k], entry.thresholds[k], reveal.thresholds[k], u_at[k]] for k in range(times.size))
    cols = ["time_index", "time", "entry_threshold", "revelation_threshold", "u1_star_at_threshold"]
    return write_csv(path, cols, rows, comment)


def write_diagnostics_csv(path, solution, comment=None):
    d = solution.diagnostics
    cols = ["entry_prob", "mean_entry_time", "revelation_prob", "incumbent_payoff",
            "entrant_payoff", "residual", "iterations"]
    row = [d.entry_prob, d.mean_entry_time, d.revelation_prob, d.incumbent_payoff,
           d.entrant_payoff, solution.residual, solution.iterations]
    return write_csv(path, cols, [row], comment)
