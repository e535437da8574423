"""Calibrate against the reference testbed rows and reproduce the ratios.

The single-run rows fix the workload model (classical duration, silhouette
split, allocation latencies); the double-workload rows then emerge from the
strategy semantics under contention. The headline ratios are checked against
the reference campaign within +/- 3 percentage points.
"""

from hqsched import ExperimentGrid, run_grid
from hqsched.experiments import grid_to_markdown
from hqsched.reference import REFERENCE_TABLES

result = run_grid(ExperimentGrid(repetitions=1))

print(grid_to_markdown(result))

print("reference rows for comparison (2-minute regime):")
for (strategy, mode), (wall, ns) in REFERENCE_TABLES["two_minutes"].items():
    sim = next(c for c in result.cells
               if c.regime == "two_minutes" and c.strategy == strategy
               and c.mode == mode)
    print(f"  {strategy:10s} {mode:6s} measured {wall:8.2f}s / {ns:8.2f} "
          f"node-s   simulated {sim.wall_time:8.2f}s / {sim.node_seconds:8.2f}")

print("\nall ratios within tolerance:", result.all_passed)
