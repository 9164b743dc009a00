"""Command line entry points: ``proxscp solve`` and ``proxscp montecarlo``.

Exit codes: 0 ok, 1 usage or invalid configuration, 2 non-convergence
(or converged fraction below the configured floor), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import rocket6dof as r6
from .config import ConfigParseError, ConfigValidationError, default_config, load_config, save_config
from .ctcs import node_times
from .discretizer import dense_violation_audit
from .montecarlo import aggregate, run_batch
from .scp import scp_solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_IO = 3

TRAJECTORY_HEADER = (
    ["tau", "t", "m", "r_0", "r_1", "r_2", "v_0", "v_1", "v_2", "q_0", "q_1", "q_2", "q_3",
     "w_0", "w_1", "w_2", "y", "T_0", "T_1", "T_2", "gamma_0", "gamma_1", "gamma_2", "s"]
)
RUNS_HEADER = [
    "run_id", "r0_0", "r0_1", "r0_2", "converged", "scp_iterations", "propellant_used",
    "final_defect_inf", "max_pointwise_g", "boundary_residual", "max_y_increment", "status", "wall_time",
]

log = logging.getLogger("proxscp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(value):
    """Full-precision decimal text (shortest round-trip form)."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def trajectory_rows(x, u, grid):
    t = node_times(u[:, -1], grid.nodes)
    return [[grid.nodes[k], t[k], *x[k], *u[k]] for k in range(grid.N)]


def write_trajectory(path, x, u, grid):
    _write_csv(path, TRAJECTORY_HEADER, trajectory_rows(x, u, grid))


def write_audit(path, audit):
    header = ["tau", "t"] + [f"g_{i + 1}" for i in range(audit.g.shape[1])]
    _write_csv(path, header, ([tau, t, *g] for tau, t, g in zip(audit.tau, audit.t, audit.g)))


def record_row(rec):
    r0 = rec.initial_state[r6.IDX_R]
    return [rec.run_id, r0[0], r0[1], r0[2], rec.converged, rec.scp_iterations, rec.propellant_used,
            rec.final_defect_inf, rec.max_pointwise_g, rec.boundary_residual, rec.max_y_increment,
            rec.status, rec.wall_time]


def write_runs(path, records):
    _write_csv(path, RUNS_HEADER, (record_row(r) for r in records))


def write_summary(path, summary):
    hist = list(summary.iteration_histogram)
    header = ["batch_size", "converged_fraction", "propellant_min", "propellant_mean", "propellant_max",
              "total_wall_time", "workers"] + [f"iters_{i + 1}" for i in range(len(hist))]
    row = [summary.batch_size, summary.converged_fraction, summary.propellant_min, summary.propellant_mean,
           summary.propellant_max, summary.total_wall_time, summary.workers] + hist
    _write_csv(path, header, [row])


# ---------------------------------------------------------------------------


def cmd_solve(config, out_dir):
    problem = config.nominal_problem()
    res = scp_solve(problem, config.scp_config())
    Z = res.iterate
    audit = dense_violation_audit(Z.x, Z.u, problem.grid, problem.hooks)
    os.makedirs(out_dir, exist_ok=True)
    write_trajectory(os.path.join(out_dir, "trajectory.csv"), Z.x, Z.u, problem.grid)
    write_audit(os.path.join(out_dir, "dense_audit.csv"), audit)
    print(
        f"converged={res.converged} iterations={res.iterations} defect={res.defect_inf:.3e} "
        f"boundary={res.boundary_residual:.3e} max_g={audit.max_pointwise_g:.3e} "
        f"propellant={problem.x_init[r6.IDX_M] - Z.x[-1, r6.IDX_M]:.6f}"
    )
    if res.converged:
        return EXIT_OK
    diag = {
        "status": res.status,
        "iterations": res.iterations,
        "defect_inf": res.defect_inf,
        "boundary_residual": res.boundary_residual,
        "max_pointwise_g": audit.max_pointwise_g,
        "history": [vars(h) for h in res.history],
    }
    with open(os.path.join(out_dir, "diagnostics.json"), "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)
    print(f"not converged ({res.status}); see diagnostics.json", file=sys.stderr)
    return EXIT_NOT_CONVERGED


def cmd_montecarlo(config, out_dir, dump_trajectories=False):
    d = config.data
    mc = d["montecarlo"]
    problem = config.nominal_problem()
    scp_cfg = config.scp_config()
    t0 = time.perf_counter()
    records = run_batch(
        problem, config.dispersion(), mc["batch_size"], mc["workers"], scp_cfg,
        ctcs_tolerance=mc["ctcs_tolerance"], keep_trajectories=dump_trajectories,
    )
    wall = time.perf_counter() - t0
    summary = aggregate(records, scp_cfg.max_iters, mc["workers"], wall)
    os.makedirs(out_dir, exist_ok=True)
    write_runs(os.path.join(out_dir, "runs.csv"), records)
    write_summary(os.path.join(out_dir, "summary.csv"), summary)
    if dump_trajectories:
        tdir = os.path.join(out_dir, "trajectories")
        os.makedirs(tdir, exist_ok=True)
        for rec in records:
            x, u = rec.trajectory
            write_trajectory(os.path.join(tdir, f"run_{rec.run_id:05d}.csv"), x, u, problem.grid)
    print(
        f"runs={summary.batch_size} converged_fraction={summary.converged_fraction:.4f} "
        f"wall_time={wall:.1f}s workers={summary.workers}"
    )
    return EXIT_OK if summary.converged_fraction >= mc["converged_floor"] else EXIT_NOT_CONVERGED


def build_parser():
    p = _Parser(prog="proxscp", description="Prox-linear SCP for 6-DoF powered descent.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every SCP iteration")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve the nominal problem")
    s.add_argument("--config", help="JSON run configuration (default: shipped default.cfg)")
    s.add_argument("--out", help="output directory (overrides output_dir)")

    m = sub.add_parser("montecarlo", help="solve a batch of dispersed problems")
    m.add_argument("--config", help="JSON run configuration (default: shipped default.cfg)")
    m.add_argument("--runs", type=int, help="batch size")
    m.add_argument("--workers", type=int, help="worker processes")
    m.add_argument("--seed", type=int, help="dispersion seed")
    m.add_argument("--dump-trajectories", action="store_true", help="write one trajectory CSV per run")
    m.add_argument("--out", help="output directory (overrides output_dir)")

    c = sub.add_parser("dump-config", help="write the shipped default configuration")
    c.add_argument("path")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = load_config(args.config) if getattr(args, "config", None) else default_config()
        if args.command == "dump-config":
            save_config(config, args.path)
            return EXIT_OK
        if args.command == "montecarlo":
            for flag, key in (("runs", "montecarlo.batch_size"), ("workers", "montecarlo.workers"), ("seed", "seed")):
                value = getattr(args, flag)
                if value is not None:
                    config = config.override(key, value)
        out_dir = args.out or config.data["output_dir"]
        if args.command == "solve":
            return cmd_solve(config, out_dir)
        return cmd_montecarlo(config, out_dir, args.dump_trajectories)
    except ConfigValidationError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigParseError as exc:
        print(f"cannot load configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
