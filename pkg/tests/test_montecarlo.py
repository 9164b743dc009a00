import dataclasses

import numpy as np
import pytest

from proxscp import montecarlo as mc
from proxscp import rocket6dof as r6
from proxscp.config import default_config
from proxscp.scp import ScpConfig

CFG = default_config()
SHORT = ScpConfig(max_iters=2)


def record_fields(rec):
    d = dataclasses.asdict(rec)
    d.pop("wall_time")
    d.pop("trajectory")
    d["initial_state"] = d["initial_state"].tobytes()
    return d


def make_record(run_id, converged, iters, prop=0.5):
    return mc.McRunRecord(run_id, np.zeros(14), converged, iters, prop, 0.0, -1.0, 0.0, 0.0, "x", 0.1)


def test_degenerate_box_is_exact():
    spec = mc.DispersionSpec(low=(7.0, 4.0, 1.5), high=(7.0, 4.0, 1.5))
    for run_id in range(5):
        assert np.array_equal(mc.draw_position(spec, run_id), [7.0, 4.0, 1.5])


def test_draws_stay_in_the_box():
    spec = mc.DispersionSpec()
    pts = np.array([mc.draw_position(spec, k) for k in range(10_000)])
    assert np.all(pts >= spec.low) and np.all(pts <= spec.high)
    # all three axes are actually spread out
    assert np.all(pts.max(axis=0) - pts.min(axis=0) > 0.9 * (np.array(spec.high) - spec.low))


def test_draws_depend_only_on_seed_and_run_id():
    spec = mc.DispersionSpec(seed=42)
    forward = [mc.draw_position(spec, k).tobytes() for k in range(50)]
    backward = [mc.draw_position(spec, k).tobytes() for k in reversed(range(50))][::-1]
    assert forward == backward
    other = mc.DispersionSpec(seed=43)
    assert mc.draw_position(other, 0).tobytes() != forward[0]


def test_disperse_changes_only_position():
    nominal = CFG.nominal_problem()
    inst = mc.disperse(nominal, mc.DispersionSpec(), 3)
    changed = np.flatnonzero(inst.x_init != nominal.x_init)
    assert set(changed) <= set(range(1, 4))
    assert nominal.x_init[1] == CFG.data["boundary"]["r_initial"][0]


def test_spec_validation():
    with pytest.raises(ValueError):
        mc.DispersionSpec(low=(2.0, 0.0, 0.0), high=(1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        mc.DispersionSpec(low=(0.0, 0.0), high=(1.0, 1.0))
    with pytest.raises(ValueError):
        mc.DispersionSpec(seed=-1)


def test_aggregate_examples():
    s = mc.aggregate([make_record(0, True, 7)])
    assert s.converged_fraction == 1.0 and s.propellant_mean == 0.5
    s = mc.aggregate([make_record(0, True, 7), make_record(1, False, 25)])
    assert s.converged_fraction == 0.5
    assert s.iteration_histogram.sum() == 2 and s.iteration_histogram[6] == 1 and s.iteration_histogram[24] == 1
    with pytest.raises(ValueError):
        mc.aggregate([])


def test_single_run_batch_is_a_single_solve():
    nominal = CFG.nominal_problem()
    spec = mc.DispersionSpec()
    (rec,) = mc.run_batch(nominal, spec, 1, 1, SHORT)
    direct = mc.solve_instance(0, mc.disperse(nominal, spec, 0), SHORT)
    assert record_fields(rec) == record_fields(direct)
    assert rec.scp_iterations <= SHORT.max_iters


def test_worker_count_does_not_change_records():
    nominal = CFG.nominal_problem()
    spec = mc.DispersionSpec(seed=7)
    serial = mc.run_batch(nominal, spec, 3, 1, SHORT)
    pooled = mc.run_batch(nominal, spec, 3, 2, SHORT)
    assert [r.run_id for r in pooled] == [0, 1, 2]
    assert [record_fields(r) for r in serial] == [record_fields(r) for r in pooled]


def test_crash_becomes_a_record(monkeypatch):
    def boom(problem, config):
        raise RuntimeError("solver blew up")

    monkeypatch.setattr(mc, "scp_solve", boom)
    (rec,) = mc.run_batch(CFG.nominal_problem(), mc.DispersionSpec(), 1, 1, SHORT)
    assert not rec.converged and rec.status.startswith("crashed: RuntimeError")
    assert np.isnan(rec.propellant_used)


def test_batch_arguments_validated():
    with pytest.raises(ValueError):
        mc.run_batch(CFG.nominal_problem(), mc.DispersionSpec(), 0, 1, SHORT)
    with pytest.raises(ValueError):
        mc.run_batch(CFG.nominal_problem(), mc.DispersionSpec(), 1, 0, SHORT)


def test_converged_record_invariants():
    nominal = CFG.nominal_problem()
    spec = mc.DispersionSpec(low=nominal.x_init[r6.IDX_R], high=nominal.x_init[r6.IDX_R])
    (rec,) = mc.run_batch(nominal, spec, 1, 1, CFG.scp_config())
    assert rec.converged
    assert rec.propellant_used >= 0.0 and rec.final_defect_inf <= 1e-6 and rec.max_pointwise_g <= 1e-4
