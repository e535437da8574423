"""The full live loop: cluster, aggregate on the "quantum" backend, score.

Each iteration refines the parameter schedule (larger k, tighter DBSCAN
radius) until the consensus clustering scores above the 0.8 silhouette gate
or the iteration cap is reached. Between the classical and quantum stages
the worker lease shrinks to one worker, exactly as a malleable job would
release its nodes; the phase log records every transition.
"""

from hqsched import MalleableRuntime, ResourceProvider, acquire_lease, run_pipeline
from hqsched.config import default_experiment_config
from hqsched.pipeline import export_phase_log

exp = default_experiment_config()
exp.dataset["n_points"] = 2000  # desk-scale copy of the default experiment
ds = exp.make_dataset()

provider = ResourceProvider(exp.workers)
lease = acquire_lease(provider, exp.workers)
runtime = MalleableRuntime(provider, lease, checkpoint_dir="loop_out",
                           expand_timeout=0.2)

result = run_pipeline(ds, exp.pipeline, lease, runtime)

print(f"finished after {result.iterations_run} iterations, "
      f"best score {result.score:.4f}")
for t, score in enumerate(result.iteration_scores):
    note = "single consensus cluster, unscorable" if score == -1.0 else ""
    print(f"  iteration {t}: silhouette {score:+.4f} {note}")
print("final cluster sizes:", sorted(len(c) for c in result.final.clusters))

export_phase_log(result.phase_log, "loop_out/phase_log.csv")
print("\nphase log (workers held per phase):")
for rec in result.phase_log:
    print(f"  {rec.phase:10s} {rec.start:7.2f}s -> {rec.end:7.2f}s  "
          f"workers={rec.workers}")
print("note: every quantum phase holds exactly one worker.")
