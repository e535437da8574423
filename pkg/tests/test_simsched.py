import json

import pytest

from hqsched.errors import CalibrationError, InvalidParameterError, ParseError
from hqsched.lpt import lpt_makespan
from hqsched.reference import REFERENCE_2MIN, REFERENCE_SUBSECOND
from hqsched.simsched import (
    ClusterSpec,
    EventKind,
    HybridWorkflow,
    Strategy,
    WorkloadModel,
    calibrate,
    default_hybrid_workflow,
    export_timeline,
    load_scenario,
    report_to_dict,
    simulate,
)

ZERO_SPEC = ClusterSpec(slurm_overhead=0.0, realloc_latency=0.0,
                        reconfig_latency=0.0)
MODEL = WorkloadModel(iterations=4, algo_durations=(30.0, 100.0, 100.0),
                      qubo_build=0.0, quantum_duration=120.0,
                      silhouette_duration=0.0)


def held_intervals(report, job_id):
    """(start, end, nodes) pieces of one job's held-nodes step function."""
    changes = [(t, n) for t, j, n in report.timeline if j == job_id]
    out = []
    for (t0, n0), (t1, _) in zip(changes, changes[1:]):
        out.append((t0, t1, n0))
    return out


# ---------------------------------------------------------------------------
# hand-traced single-job examples


def test_baseline_single_hand_trace():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "baseline")
    assert r.jobs[0].wall_time == pytest.approx(880.0)  # 4 * (100 + 120)
    assert r.node_seconds == pytest.approx(2640.0)      # 3 * 880


def test_malleable_single_hand_trace():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "malleable")
    assert r.jobs[0].wall_time == pytest.approx(880.0)
    assert r.node_seconds == pytest.approx(1680.0)      # 4*(3*100) + 4*(1*120)


def test_workflow_single_hand_trace():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "workflow")
    assert r.jobs[0].wall_time == pytest.approx(880.0)
    assert r.node_seconds == pytest.approx(1200.0)      # 4*(3*100), sil = 0

    spec = ClusterSpec(slurm_overhead=0.0, realloc_latency=4.0,
                       reconfig_latency=0.0)
    r2 = simulate(spec, [(0.0, MODEL)], "workflow")
    assert r2.jobs[0].wall_time == pytest.approx(880.0 + 12 * 4.0)
    assert r2.node_seconds == pytest.approx(1200.0)     # latency not held


def test_baseline_identity_node_seconds_three_times_wall():
    spec = ClusterSpec()  # default overheads
    r = simulate(spec, [(0.0, MODEL)], "baseline")
    assert r.node_seconds == pytest.approx(3 * r.jobs[0].wall_time, abs=1e-9)


def test_malleable_classical_uses_lpt_makespan():
    model = WorkloadModel(iterations=1, algo_durations=(30.0, 100.0, 100.0),
                          quantum_duration=0.0, silhouette_duration=0.0)
    # on a two-node cluster the classical phase packs to LPT((30,100,100), 2)
    spec = ClusterSpec(slurm_overhead=0.0, realloc_latency=0.0,
                       reconfig_latency=0.0, compute_nodes=2)
    r = simulate(spec, [(0.0, model)], "malleable")
    start = next(e for e in r.events if e.kind is EventKind.PHASE_START
                 and e.payload[0] == "classical")
    end = next(e for e in r.events if e.kind is EventKind.PHASE_END
               and e.payload[0] == "classical")
    assert start.payload[1] == 2
    assert end.time - start.time == pytest.approx(
        lpt_makespan([30.0, 100.0, 100.0], 2))


# ---------------------------------------------------------------------------
# invariants


def test_node_conservation_from_timeline():
    spec = ClusterSpec(slurm_overhead=4.0, realloc_latency=2.0,
                       reconfig_latency=1.0)
    for strat in Strategy:
        r = simulate(spec, [(0.0, MODEL), (10.0, MODEL)], strat)
        held = {}
        for t, j, n in r.timeline:  # already in event order
            held[j] = n
            assert 0 <= sum(held.values()) <= spec.compute_nodes
        assert all(n == 0 for n in held.values())  # everything released


def test_node_seconds_equals_timeline_integral():
    spec = ClusterSpec(slurm_overhead=4.0, realloc_latency=2.0,
                       reconfig_latency=1.0)
    for strat in Strategy:
        r = simulate(spec, [(0.0, MODEL), (5.0, MODEL)], strat)
        for job_id, stats in r.jobs.items():
            integral = sum((t1 - t0) * n
                           for t0, t1, n in held_intervals(r, job_id))
            assert integral == pytest.approx(stats.node_seconds, abs=1e-9)


def test_quantum_broker_never_overlaps():
    for strat in Strategy:
        r = simulate(ZERO_SPEC, [(0.0, MODEL), (0.0, MODEL)], strat)
        busy = []
        start = {}
        for ev in r.events:
            if ev.kind is EventKind.QUANTUM_START:
                start[ev.job_id] = ev.time
            elif ev.kind is EventKind.QUANTUM_END:
                busy.append((start[ev.job_id], ev.time))
        busy.sort()
        for (s1, e1), (s2, e2) in zip(busy, busy[1:]):
            assert s2 >= e1 - 1e-12


def test_malleable_quantum_phases_hold_one_node():
    spec = ClusterSpec()
    r = simulate(spec, [(0.0, MODEL), (0.0, MODEL)], "malleable")
    for ev in r.events:
        if ev.kind in (EventKind.QUANTUM_START, EventKind.QUANTUM_END):
            assert ev.payload[0] == 1


def test_determinism_identical_event_traces():
    spec = ClusterSpec(slurm_overhead=3.0, realloc_latency=2.0,
                       reconfig_latency=0.5)
    a = simulate(spec, [(0.0, MODEL), (7.0, MODEL)], "malleable")
    b = simulate(spec, [(0.0, MODEL), (7.0, MODEL)], "malleable")
    assert a.events == b.events
    assert a.timeline == b.timeline


def test_ordering_two_minute_regime():
    spec, model = calibrate(REFERENCE_2MIN, quantum_duration=120.0)
    ns = {s: simulate(spec, [(0.0, model)], s).node_seconds
          for s in ("workflow", "malleable", "baseline")}
    assert ns["workflow"] < ns["malleable"] < ns["baseline"]


def test_double_baseline_serializes():
    spec, model = calibrate(REFERENCE_2MIN, quantum_duration=120.0)
    single = simulate(spec, [(0.0, model)], "baseline")
    double = simulate(spec, [(0.0, model), (0.0, model)], "baseline")
    assert double.makespan == pytest.approx(2 * single.jobs[0].wall_time,
                                            rel=0.02)
    # the waiting job holds nothing while queued
    assert double.node_seconds == pytest.approx(3 * double.makespan, rel=1e-6)


# ---------------------------------------------------------------------------
# timelines


def test_single_baseline_constant_three_nodes():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "baseline")
    pieces = held_intervals(r, 0)
    assert len(pieces) == 1
    t0, t1, n = pieces[0]
    assert (t0, n) == (0.0, 3)
    assert t1 == pytest.approx(880.0)


def test_malleable_square_wave():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "malleable")
    pieces = held_intervals(r, 0)
    widths = [n for _, _, n in pieces]
    assert widths == [3, 1, 3, 1, 3, 1, 3, 1]  # four classical/quantum periods


def test_two_malleable_jobs_interleave():
    spec, model = calibrate(REFERENCE_2MIN, quantum_duration=120.0)
    r = simulate(spec, [(0.0, model), (0.0, model)], "malleable")
    # during some quantum phase of job 0, job 1 runs classical on >1 node
    j0_quantum = [(s.time, e.time) for s, e in zip(
        [ev for ev in r.events if ev.kind is EventKind.QUANTUM_START and ev.job_id == 0],
        [ev for ev in r.events if ev.kind is EventKind.QUANTUM_END and ev.job_id == 0])]
    overlapped = False
    for t0, t1, n in held_intervals(r, 1):
        if n >= 2 and any(s < t1 and t0 < e for s, e in j0_quantum):
            overlapped = True
    assert overlapped


def test_export_timeline_csv(tmp_path):
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "malleable")
    path = tmp_path / "timeline.csv"
    export_timeline(r, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_s,job_id,nodes_held"
    assert len(lines) == len(r.timeline) + 1
    t, j, n = lines[1].split(",")
    assert (float(t), int(j), int(n)) == (0.0, 0, 3)


def test_report_json_shape():
    r = simulate(ZERO_SPEC, [(0.0, MODEL)], "baseline")
    d = report_to_dict(r)
    assert d["strategy"] == "baseline"
    assert set(d["jobs"]["0"]) == {"submit", "first_grant", "end", "wall_time",
                                   "node_seconds"}


# ---------------------------------------------------------------------------
# calibrate


def test_calibrate_two_minute_classical_duration():
    spec, model = calibrate(REFERENCE_2MIN, quantum_duration=120.0)
    c_total = model.classical_makespan(3) + model.silhouette_duration
    # (1019.58 - 10 - 480) / 4
    assert c_total == pytest.approx(132.395, abs=1e-6)
    check = simulate(spec, [(0.0, model)], "baseline")
    assert check.jobs[0].wall_time == pytest.approx(1019.58, rel=0.01)


def test_calibrate_sub_second_consistent_with_two_minute():
    _, m1 = calibrate(REFERENCE_2MIN, quantum_duration=120.0)
    _, m2 = calibrate(REFERENCE_SUBSECOND, quantum_duration=0.5)
    c1 = m1.classical_makespan(3) + m1.silhouette_duration
    c2 = m2.classical_makespan(3) + m2.silhouette_duration
    assert c2 == pytest.approx((539.44 - 10 - 2) / 4, abs=1e-6)
    assert abs(c1 - c2) / c1 < 0.01


def test_calibrate_infeasible():
    rows = {("baseline", "single"): (400.0, 1200.0)}
    with pytest.raises(CalibrationError):
        calibrate(rows, quantum_duration=120.0)  # 4 * 120 > 400


def test_calibrate_requires_baseline_row():
    with pytest.raises(CalibrationError):
        calibrate({("workflow", "single"): (100.0, 100.0)}, quantum_duration=1.0)


# ---------------------------------------------------------------------------
# scenario files and validation


def test_load_scenario_toml(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text("""
[cluster]
compute_nodes = 3
slurm_overhead = 0.0
realloc_latency = 0.0
reconfig_latency = 0.0

[workload]
iterations = 4
algo_durations = [30.0, 100.0, 100.0]
quantum_duration = 120.0

[strategy]
kind = "baseline"

[[jobs]]
submit_time = 0.0
""")
    spec, jobs, strat = load_scenario(path)
    assert strat is Strategy.BASELINE
    assert len(jobs) == 1
    r = simulate(spec, jobs, strat)
    assert r.jobs[0].wall_time == pytest.approx(880.0)


def test_load_scenario_json(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({
        "cluster": {"slurm_overhead": 0.0, "realloc_latency": 0.0,
                    "reconfig_latency": 0.0},
        "workload": {"iterations": 1, "algo_durations": [1.0, 2.0, 3.0],
                     "quantum_duration": 0.5},
        "strategy": {"kind": "malleable"},
        "jobs": [{"submit_time": 0.0}, {"submit_time": 1.0}],
    }))
    spec, jobs, strat = load_scenario(path)
    assert strat is Strategy.MALLEABLE
    assert [s for s, _ in jobs] == [0.0, 1.0]


def test_load_scenario_malformed(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[cluster\ncompute_nodes = 3")
    with pytest.raises(ParseError):
        load_scenario(path)


def test_load_scenario_invalid_values(tmp_path):
    path = tmp_path / "bad2.toml"
    path.write_text("[workload]\niterations = 0\n")
    with pytest.raises(ParseError):
        load_scenario(path)


def test_simulate_validates_inputs():
    with pytest.raises(InvalidParameterError):
        simulate(ZERO_SPEC, [], "baseline")
    with pytest.raises(InvalidParameterError):
        simulate(ZERO_SPEC, [(-1.0, MODEL)], "baseline")
    with pytest.raises(InvalidParameterError):
        ClusterSpec(compute_nodes=0)
    with pytest.raises(InvalidParameterError):
        WorkloadModel(iterations=0)


def test_hybrid_workflow_mapping_invariants():
    wf = default_hybrid_workflow(ClusterSpec())
    assert set(wf.quantum_candidates) == {"qubo_solve"}
    assert wf.mapping["qubo_solve"] == ("quantum_1",)
    with pytest.raises(InvalidParameterError):
        HybridWorkflow(
            steps=("a",), dependencies=(), locations=("l1",),
            quantum_locations=(), mapping={"a": ()}, quantum_candidates=(),
        )
    with pytest.raises(InvalidParameterError):
        HybridWorkflow(
            steps=("q",), dependencies=(), locations=("c1", "q1"),
            quantum_locations=("q1",), mapping={"q": ("c1",)},
            quantum_candidates=("q",),
        )
