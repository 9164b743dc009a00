"""Parallel Monte Carlo batches over dispersed initial positions.

Instances are generated up front from a counter-based generator keyed on
``(seed, run_id)``, so every draw is independent of worker count and
completion order. Solves run on a process pool; each worker owns its solver
state and the records are returned ordered by ``run_id``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import math
import os
import time
from typing import Optional

import numpy as np

from . import rocket6dof as r6
from .discretizer import dense_violation_audit
from .scp import ScpConfig, initial_guess, scp_solve

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS")


@dataclass(frozen=True)
class DispersionSpec:
    """Per-axis uniform box for the initial position (axis 0 vertical)."""

    low: tuple = (6.0, 3.0, 1.0)
    high: tuple = (9.0, 6.0, 2.0)
    seed: int = 0

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        if len(low) != 3 or len(high) != 3:
            raise ValueError("dispersion boxes need exactly three axes")
        if any(lo > hi for lo, hi in zip(low, high)):
            raise ValueError("dispersion low must not exceed high on any axis")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass
class McRunRecord:
    run_id: int
    initial_state: np.ndarray
    converged: bool
    scp_iterations: int
    propellant_used: float
    final_defect_inf: float
    max_pointwise_g: float
    boundary_residual: float
    max_y_increment: float
    status: str
    wall_time: float
    trajectory: Optional[tuple] = field(default=None, repr=False)


@dataclass
class McSummary:
    batch_size: int
    converged_fraction: float
    iteration_histogram: np.ndarray  # counts for 1..max_iters
    propellant_min: float
    propellant_mean: float
    propellant_max: float
    total_wall_time: float
    workers: int


def draw_position(spec, run_id):
    """Initial position for ``run_id``; Philox keyed on (seed, run_id)."""
    bitgen = np.random.Philox(key=np.array([spec.seed, run_id], dtype=np.uint64))
    unit = np.random.Generator(bitgen).random(3)
    low = np.array(spec.low)
    high = np.array(spec.high)
    r = low + unit * (high - low)
    # keep degenerate axes exact
    return np.where(low == high, low, r)


def disperse(nominal, spec, run_id):
    x_init = nominal.x_init.copy()
    x_init[r6.IDX_R] = draw_position(spec, run_id)
    return replace(nominal, x_init=x_init)


def _limit_threads():
    for var in _THREAD_VARS:
        os.environ.setdefault(var, "1")


def solve_instance(run_id, problem, config, ctcs_tolerance=1e-4, keep_trajectory=False):
    """Solve one instance and audit it; solver failures become records."""
    t0 = time.perf_counter()
    try:
        res = scp_solve(problem, config)
        Z = res.iterate
        audit = dense_violation_audit(Z.x, Z.u, problem.grid, problem.hooks)
        wall = time.perf_counter() - t0
        converged = bool(res.converged)
        return McRunRecord(
            run_id=run_id,
            initial_state=problem.x_init.copy(),
            converged=converged,
            scp_iterations=res.iterations,
            propellant_used=float(problem.x_init[r6.IDX_M] - Z.x[-1, r6.IDX_M]),
            final_defect_inf=float(res.defect_inf),
            max_pointwise_g=float(audit.max_pointwise_g),
            boundary_residual=float(res.boundary_residual),
            max_y_increment=float(np.diff(Z.x[:, -1]).max()),
            status=res.status,
            wall_time=wall,
            trajectory=(Z.x.copy(), Z.u.copy()) if keep_trajectory else None,
        )
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        Z = initial_guess(problem)
        return McRunRecord(
            run_id=run_id,
            initial_state=problem.x_init.copy(),
            converged=False,
            scp_iterations=0,
            propellant_used=math.nan,
            final_defect_inf=math.nan,
            max_pointwise_g=math.nan,
            boundary_residual=math.nan,
            max_y_increment=math.nan,
            status=f"crashed: {type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - t0,
            trajectory=(Z.x.copy(), Z.u.copy()) if keep_trajectory else None,
        )


def _worker(args):
    return solve_instance(*args)


def run_batch(nominal, spec, batch_size, workers, config=None, ctcs_tolerance=1e-4, keep_trajectories=False):
    """Solve ``batch_size`` dispersed instances on ``workers`` processes."""
    if batch_size < 1 or workers < 1:
        raise ValueError("batch_size and workers must be >= 1")
    config = config or ScpConfig()
    instances = [disperse(nominal, spec, k) for k in range(batch_size)]
    jobs = [(k, p, config, ctcs_tolerance, keep_trajectories) for k, p in enumerate(instances)]
    if workers == 1:
        records = [_worker(job) for job in jobs]
    else:
        _limit_threads()
        with ProcessPoolExecutor(max_workers=workers, initializer=_limit_threads) as pool:
            records = list(pool.map(_worker, jobs, chunksize=1))
    return sorted(records, key=lambda r: r.run_id)


def aggregate(records, max_iters=25, workers=1, total_wall_time=None):
    if not records:
        raise ValueError("cannot aggregate an empty batch")
    n = len(records)
    conv = [r for r in records if r.converged]
    hist = np.zeros(max_iters, dtype=np.int64)
    for r in records:
        hist[min(max(r.scp_iterations, 1), max_iters) - 1] += 1
    prop = np.array([r.propellant_used for r in conv], dtype=float)
    if prop.size:
        p_min, p_mean, p_max = float(prop.min()), float(prop.mean()), float(prop.max())
    else:
        p_min = p_mean = p_max = math.nan
    if total_wall_time is None:
        total_wall_time = float(sum(r.wall_time for r in records))
    return McSummary(
        batch_size=n,
        converged_fraction=len(conv) / n,
        iteration_histogram=hist,
        propellant_min=p_min,
        propellant_mean=p_mean,
        propellant_max=p_max,
        total_wall_time=float(total_wall_time),
        workers=workers,
    )
